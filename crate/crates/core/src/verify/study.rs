//! Mesh-refinement studies for the manufactured solution and their tables.

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::norms::{attach_orders, error_norms, ErrorRecord};
use crate::error::{Error, Result};
use crate::mesh::{unit_square_mesh, BoundaryTag};
use crate::model::ManufacturedCase;
use crate::solvers::{run_from, Discretization, Probes, Retention, Scheme, SchemeConfig, StoppingRule};

/// Final time of the accuracy experiments.
pub const ACCURACY_FINAL_TIME: f64 = 0.01;

/// One accuracy experiment: material set, scheme and time step.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyCase {
    pub name: String,
    pub poisson: f64,
    pub conductivity: f64,
    pub storage: f64,
    pub scheme: Scheme,
    pub dt: f64,
    pub final_time: f64,
}

impl AccuracyCase {
    /// The twelve published accuracy tables. Each group of three shares a
    /// parameter set and runs coupled (`dt = 2e-4`), decoupled with 10
    /// iterations (`dt = 2e-3`) and decoupled with 20 iterations (`dt = 4e-3`).
    pub fn table(number: usize) -> Result<Self> {
        if !(1..=12).contains(&number) {
            return Err(Error::Argument(format!("accuracy tables are numbered 1 to 12, got {number}")));
        }
        let (poisson, conductivity, storage) = match (number - 1) / 3 {
            0 => (0.3, 1.0, 1.0),
            1 => (0.49999, 1.0, 1.0),
            2 => (0.3, 1e-6, 1.0),
            _ => (0.3, 1.0, 0.0),
        };
        let (scheme, dt) = match (number - 1) % 3 {
            0 => (Scheme::Coupled, 2e-4),
            1 => (Scheme::Decoupled(StoppingRule::FixedIters(10)), 2e-3),
            _ => (Scheme::Decoupled(StoppingRule::FixedIters(20)), 4e-3),
        };
        Ok(Self {
            name: format!("table{number}"),
            poisson,
            conductivity,
            storage,
            scheme,
            dt,
            final_time: ACCURACY_FINAL_TIME,
        })
    }

    /// Parses `table1` .. `table12`.
    pub fn named(name: &str) -> Result<Self> {
        name.strip_prefix("table")
            .and_then(|n| n.parse::<usize>().ok())
            .filter(|n| (1..=12).contains(n))
            .map(Self::table)
            .unwrap_or_else(|| Err(Error::Argument(format!("unknown case '{name}', expected table1 .. table12"))))
    }

    pub fn manufactured(&self) -> Result<ManufacturedCase> {
        ManufacturedCase::accuracy(self.poisson, self.conductivity, self.storage)
    }

    /// Steps taken: every step whose end time stays within `final_time`.
    /// With `dt = 4e-3` and `T = 0.01` that is 2 steps, ending at 0.008.
    pub fn n_steps(&self) -> usize {
        (self.final_time / self.dt * (1.0 + 1e-9)).floor() as usize
    }

    /// Time at which the errors are measured.
    pub fn end_time(&self) -> f64 {
        self.n_steps() as f64 * self.dt
    }

    pub fn scheme_config(&self) -> Result<SchemeConfig> {
        let config = SchemeConfig::new(self.scheme, self.dt, self.n_steps()).with_retention(Retention::FinalOnly);
        config.validate()?;
        Ok(config)
    }
}

/// Errors of every field on every level, with orders.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub title: String,
    /// Sorted by level, then field in the order u, xi, p1, p2.
    pub records: Vec<ErrorRecord>,
    /// Wall time of each level's run.
    pub timings: Vec<(usize, Duration)>,
}

/// All four tagged sides of the unit square, where the accuracy runs impose
/// (homogeneous) Dirichlet data.
pub const ALL_SIDES: [BoundaryTag; 4] = [BoundaryTag::Gamma1, BoundaryTag::Gamma2, BoundaryTag::Gamma3, BoundaryTag::Gamma4];

/// Solves the manufactured problem on `base_n * 2^j` meshes, `j < levels`,
/// with Dirichlet data on `dirichlet` and the exact natural data elsewhere,
/// and measures the errors at the final time. Levels run concurrently.
pub fn convergence_study(
    base_n: usize,
    levels: usize,
    config: &SchemeConfig,
    case: &ManufacturedCase,
    final_time: f64,
    dirichlet: &[BoundaryTag],
) -> Result<ConvergenceTable> {
    if base_n == 0 || levels == 0 {
        return Err(Error::Argument(format!("need base_n >= 1 and levels >= 1, got {base_n} and {levels}")));
    }
    config.validate()?;
    let expected_end = config.dt * config.n_steps as f64;
    if (expected_end - final_time).abs() > 1e-9 * final_time.max(1.0) {
        return Err(Error::Argument(format!("{} steps of {} do not reach t = {final_time}", config.n_steps, config.dt)));
    }
    let config = config.with_retention(Retention::FinalOnly);
    let ns: Vec<usize> = (0..levels).map(|j| base_n << j).collect();
    let per_level: Vec<Result<(Vec<ErrorRecord>, Duration)>> = ns
        .par_iter()
        .map(|&n| {
            let mesh = Arc::new(unit_square_mesh(n)?);
            let spec = case.problem(mesh, final_time, dirichlet)?;
            let start = Instant::now();
            let disc = Discretization::new(&spec)?;
            let initial = disc.initial_state(&spec)?;
            let out = run_from(&spec, &disc, initial, &config, &Probes::new(&disc, &[])?, start)?;
            let errors = error_norms(&out.final_state, &disc, case, out.final_state.time, n)?;
            Ok((errors, out.report.total))
        })
        .collect();
    let mut records = Vec::new();
    let mut timings = Vec::new();
    for (n, r) in ns.iter().zip(per_level) {
        let (errs, wall) = r?;
        records.extend(errs);
        timings.push((*n, wall));
    }
    attach_orders(&mut records);
    Ok(ConvergenceTable {
        title: String::new(),
        records,
        timings,
    })
}

/// Runs one of the published accuracy cases.
pub fn accuracy_study(case: &AccuracyCase, base_n: usize, levels: usize) -> Result<ConvergenceTable> {
    let mut table = convergence_study(base_n, levels, &case.scheme_config()?, &case.manufactured()?, case.end_time(), &ALL_SIDES)?;
    table.title = format!(
        "{}: {}, nu = {}, K = {}, c = {}, dt = {:e}, errors at t = {}",
        case.name,
        scheme_label(case.scheme),
        case.poisson,
        case.conductivity,
        case.storage,
        case.dt,
        case.end_time()
    );
    Ok(table)
}

pub fn scheme_label(s: Scheme) -> String {
    match s {
        Scheme::Coupled => "coupled".into(),
        Scheme::Decoupled(StoppingRule::FixedIters(k)) => format!("decoupled, {k} iterations"),
        Scheme::Decoupled(StoppingRule::Tolerance { eps, max_iters }) => format!("decoupled, tol {eps:e} (max {max_iters})"),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_default()
}

impl ConvergenceTable {
    pub fn get(&self, level: usize, field: &str) -> Option<&ErrorRecord> {
        self.records.iter().find(|r| r.level == level && r.field == field)
    }

    pub fn levels(&self) -> Vec<usize> {
        let mut l: Vec<usize> = self.records.iter().map(|r| r.level).collect();
        l.dedup();
        l
    }

    /// One row per level and field. The manufactured problem is
    /// dimensionless, which the header states.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "inv_h,field,l2_error[dimensionless],h1_error[dimensionless],h1_semi_error[dimensionless],order_l2,order_h1,order_h1_semi\n",
        );
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{},{:.6e},{:.6e},{:.6e},{},{},{}",
                r.level,
                r.field,
                r.l2,
                r.h1,
                r.h1_semi,
                opt(r.order_l2),
                opt(r.order_h1),
                opt(r.order_h1_semi)
            );
        }
        s
    }

    /// Two blocks like the published tables: `(u, xi)` then `(p1, p2)`, each
    /// with "L2 & H1" errors and orders.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if !self.title.is_empty() {
            let _ = writeln!(s, "{}", self.title);
        }
        for pair in [["u", "xi"], ["p1", "p2"]] {
            let _ = writeln!(
                s,
                "{:>5} | {:^23} | {:^13} | {:^23} | {:^13}",
                "1/h",
                format!("{} L2 & H1", pair[0]),
                "orders",
                format!("{} L2 & H1", pair[1]),
                "orders"
            );
            for level in self.levels() {
                let _ = write!(s, "{level:>5}");
                for f in pair {
                    match self.get(level, f) {
                        Some(r) => {
                            let orders = match (r.order_l2, r.order_h1) {
                                (Some(a), Some(b)) => format!("{a:.2} & {b:.2}"),
                                _ => String::new(),
                            };
                            let _ = write!(s, " | {:.3e} & {:.3e} | {:^13}", r.l2, r.h1, orders);
                        }
                        None => {
                            let _ = write!(s, " | {:^23} | {:^13}", "-", "");
                        }
                    }
                }
                s.push('\n');
            }
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_protocols() {
        let t1 = AccuracyCase::table(1).unwrap();
        assert_eq!(t1.scheme, Scheme::Coupled);
        assert_eq!(t1.scheme_config().unwrap().n_steps, 50);
        let t2 = AccuracyCase::named("table2").unwrap();
        assert_eq!(t2.scheme, Scheme::Decoupled(StoppingRule::FixedIters(10)));
        // 5 steps x 10 iterations = 50 solves
        assert_eq!(t2.scheme_config().unwrap().n_steps * 10, 50);
        let t3 = AccuracyCase::table(3).unwrap();
        assert_eq!(t3.scheme_config().unwrap().n_steps, 2);
        assert!((t3.end_time() - 0.008).abs() < 1e-15);
        assert!((t2.end_time() - 0.01).abs() < 1e-15);
        assert_eq!(AccuracyCase::table(4).unwrap().poisson, 0.49999);
        assert_eq!(AccuracyCase::table(8).unwrap().conductivity, 1e-6);
        assert_eq!(AccuracyCase::table(12).unwrap().storage, 0.0);
        assert!(AccuracyCase::named("table13").is_err());
        assert!(AccuracyCase::named("tableau").is_err());
        assert!(AccuracyCase::table(0).is_err());
    }

    #[test]
    fn single_level_has_no_orders() {
        let case = AccuracyCase::table(1).unwrap();
        let config = SchemeConfig::new(Scheme::Coupled, 0.005, 2);
        let t = convergence_study(2, 1, &config, &case.manufactured().unwrap(), 0.01, &ALL_SIDES).unwrap();
        assert_eq!(t.records.len(), 4);
        assert!(t.records.iter().all(|r| r.order_l2.is_none() && r.order_h1.is_none()));
        let csv = t.to_csv();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.lines().nth(1).unwrap().ends_with(",,,"));
    }

    #[test]
    fn rejects_mismatched_final_time() {
        let case = ManufacturedCase::accuracy(0.3, 1.0, 1.0).unwrap();
        let config = SchemeConfig::new(Scheme::Coupled, 0.005, 3);
        assert!(convergence_study(2, 2, &config, &case, 0.01, &ALL_SIDES).is_err());
        assert!(convergence_study(2, 0, &SchemeConfig::new(Scheme::Coupled, 0.005, 2), &case, 0.01, &ALL_SIDES).is_err());
    }

    #[test]
    fn two_levels_give_orders_and_text_layout() {
        let case = ManufacturedCase::accuracy(0.3, 1.0, 1.0).unwrap();
        let config = SchemeConfig::new(Scheme::Coupled, 0.0025, 4);
        let t = convergence_study(4, 2, &config, &case, 0.01, &ALL_SIDES).unwrap();
        assert_eq!(t.levels(), vec![4, 8]);
        let u8 = t.get(8, "u").unwrap();
        assert!(u8.order_l2.unwrap() > 1.5, "{u8:?}");
        let text = t.to_text();
        assert!(text.contains("u L2 & H1") && text.contains("p2 L2 & H1"));
        assert_eq!(text.lines().filter(|l| l.trim_start().starts_with('8')).count(), 2);
    }
}
