//! Problem definition: parameters, boundary programs, the manufactured
//! solution and the physiological preset.

mod config;
mod manufactured;
mod params;
mod preset;
mod problem;

pub use config::{load_config, parse_config, BoundarySection, MeshSection, ParameterSection, Preset, ProblemConfig, SchemeSection, TimeSection};
pub use manufactured::{ExactFields, ManufacturedCase};
pub use params::{contraction_factor, derive_lame, MpetParameters};
pub use preset::{physiological_preset, PhysiologicalPreset, MMHG_TO_PA};
pub use problem::{BoundaryProgram, DisplacementBc, FieldFn, FluxFn, PressureBc, ProblemSpec, ScalarFn, TractionFn, VectorFn};
