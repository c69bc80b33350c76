//! Error norms, convergence studies, contraction measurements and the
//! discrete energy identity.

mod annulus;
mod contraction;
mod energy;
mod norms;
mod study;

pub use annulus::{annulus_comparison, boundary_envelopes, probe_csv, vertex_csv, AnnulusComparison, COMPARE_AFTER};
pub use contraction::{contraction_series, ContractionPoint, ContractionSeries, CONTRACTION_FLOOR};
pub use energy::{check_energy_preconditions, divergence_and_strain, ConstantLoads, divergence_bound_holds, energy_identity_residual, EnergyLedger, SQUARE_FLOOR};
pub use norms::{attach_orders, error_norms, observed_order, observed_order_with_ratio, ErrorRecord};
pub use study::{accuracy_study, convergence_study, scheme_label, AccuracyCase, ConvergenceTable, ACCURACY_FINAL_TIME, ALL_SIDES};
