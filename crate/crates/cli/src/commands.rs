use std::fs;
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, ensure, Context, Result};
use mpet_core::mesh::{unit_square_mesh, BoundaryTag};
use mpet_core::model::{load_config, physiological_preset, ManufacturedCase, MpetParameters, Preset, ProblemConfig, MMHG_TO_PA};
use mpet_core::solvers::{run, Discretization, Retention, RunOutput, Scheme, SchemeConfig, StoppingRule, SystemState};
use mpet_core::verify::{
    annulus_comparison, check_energy_preconditions, contraction_series, convergence_study, energy_identity_residual, probe_csv, scheme_label,
    vertex_csv, AccuracyCase, ConstantLoads, ALL_SIDES, COMPARE_AFTER,
};

use crate::svg::{line_chart, Series};
use crate::{AccuracyArgs, AnnulusArgs, Cli, Command, ContractionArgs, EnergyArgs, SchemeKind};

/// `Ok(false)` means a check inside the command failed.
pub fn dispatch(cli: &Cli) -> Result<bool> {
    let config = cli
        .config
        .as_deref()
        .map(|p| load_config(p).with_context(|| format!("reading {}", p.display())))
        .transpose()?;
    // everything below is validated before the output directory is touched
    match &cli.command {
        Command::Accuracy(a) => {
            let plan = accuracy_plan(a, config.as_ref())?;
            prepare_out(&cli.out)?;
            cmd_accuracy(&plan, &cli.out)
        }
        Command::Contraction(a) => {
            let spec = contraction_setup(a, config.as_ref())?;
            prepare_out(&cli.out)?;
            cmd_contraction(a, spec, &cli.out)
        }
        Command::Energy(a) => {
            let setup = energy_setup(a, config.as_ref())?;
            prepare_out(&cli.out)?;
            cmd_energy(a, setup, &cli.out, cli.plot)
        }
        Command::Annulus(a) => {
            let setup = annulus_setup(a, config.as_ref())?;
            prepare_out(&cli.out)?;
            cmd_annulus(a, setup, &cli.out, cli.plot)
        }
    }
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    let probe = dir.join(".mpet-write-check");
    fs::write(&probe, b"").with_context(|| format!("output directory {} is not writable", dir.display()))?;
    fs::remove_file(&probe)?;
    Ok(())
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn expect_preset(config: Option<&ProblemConfig>, preset: Preset, command: &str) -> Result<()> {
    if let Some(c) = config {
        ensure!(c.preset == preset, "the {command} command needs a configuration with preset = \"{}\"", preset_name(preset));
    }
    Ok(())
}

fn preset_name(p: Preset) -> &'static str {
    match p {
        Preset::Accuracy => "accuracy",
        Preset::Annulus => "annulus",
    }
}

/// Applies scalar overrides to both networks.
fn override_params(base: MpetParameters, nu: Option<f64>, conductivity: Option<f64>, storage: [Option<f64>; 2]) -> Result<MpetParameters> {
    let n = base.networks();
    let mut store = base.storage.clone();
    for (i, s) in storage.iter().enumerate() {
        if let Some(v) = s {
            ensure!(i < n, "storage override for network {} but the model has {n}", i + 1);
            store[i] = *v;
        }
    }
    Ok(MpetParameters::new(
        base.young,
        nu.unwrap_or(base.poisson),
        base.alpha.clone(),
        store,
        conductivity.map(|k| vec![k; n]).unwrap_or(base.conductivity.clone()),
        base.exchange.clone(),
    )?)
}

fn accuracy_params(config: Option<&ProblemConfig>) -> Result<MpetParameters> {
    Ok(match config {
        Some(c) => c.parameters()?,
        None => MpetParameters::accuracy(0.3, 1.0, 1.0)?,
    })
}

pub struct AccuracyPlan {
    name: String,
    title: String,
    case: ManufacturedCase,
    config: SchemeConfig,
    end_time: f64,
    base: usize,
    levels: usize,
    dirichlet: Vec<BoundaryTag>,
}

fn accuracy_plan(a: &AccuracyArgs, config: Option<&ProblemConfig>) -> Result<AccuracyPlan> {
    expect_preset(config, Preset::Accuracy, "accuracy")?;
    let table = if a.case == "custom" { AccuracyCase::table(1)? } else { AccuracyCase::named(&a.case)? };

    // the named case fixes the coefficients unless a configuration or flag
    // says otherwise
    let mut params = match config {
        Some(_) => accuracy_params(config)?,
        None => MpetParameters::accuracy(table.poisson, table.conductivity, table.storage)?,
    };
    params = override_params(params, a.nu, a.conductivity, [a.storage, a.storage])?;
    ensure!(params.networks() == 2, "the manufactured solution has 2 networks, the configuration gives {}", params.networks());

    let (mut base, mut levels) = (8, 3);
    if let Some(list) = config.and_then(|c| c.mesh.levels.clone()) {
        ensure!(!list.is_empty() && list[0] > 0, "mesh.levels must list positive values of 1/h");
        ensure!(list.windows(2).all(|w| w[1] == 2 * w[0]), "mesh.levels must double from one entry to the next, got {list:?}");
        base = list[0];
        levels = list.len();
    }
    base = a.base.unwrap_or(base);
    levels = a.levels.unwrap_or(levels);
    ensure!(base >= 1 && levels >= 1, "need --base >= 1 and --levels >= 1");

    let time = config.map(|c| c.time.clone()).unwrap_or_default();
    let final_time = a.final_time.or(time.final_time).unwrap_or(table.final_time);
    let dt = a.dt.or(time.dt).unwrap_or(table.dt);
    ensure!(dt > 0.0 && final_time > 0.0 && dt.is_finite() && final_time.is_finite(), "dt and final time must be positive");
    let n_steps = (final_time / dt * (1.0 + 1e-9)).floor() as usize;
    ensure!(n_steps >= 1, "dt = {dt} exceeds the final time {final_time}");

    let sch = config.map(|c| c.scheme.clone()).unwrap_or_default();
    let kind = match (a.scheme, sch.kind.as_deref()) {
        (Some(k), _) => k,
        (None, Some("coupled")) => SchemeKind::Coupled,
        (None, Some("decoupled")) => SchemeKind::Decoupled,
        (None, Some(other)) => bail!("unknown scheme '{other}', expected coupled or decoupled"),
        (None, None) => match table.scheme {
            Scheme::Coupled => SchemeKind::Coupled,
            Scheme::Decoupled(_) => SchemeKind::Decoupled,
        },
    };
    let default_iters = match table.scheme {
        Scheme::Decoupled(StoppingRule::FixedIters(k)) => k,
        _ => 10,
    };
    let iters = a.iters.or(sch.iterations).unwrap_or(default_iters);
    let scheme = match kind {
        SchemeKind::Coupled => Scheme::Coupled,
        SchemeKind::Decoupled => match a.tol.or(sch.tolerance) {
            Some(eps) => Scheme::Decoupled(StoppingRule::Tolerance { eps, max_iters: iters }),
            None => Scheme::Decoupled(StoppingRule::FixedIters(iters)),
        },
    };
    let scheme_config = SchemeConfig::new(scheme, dt, n_steps).with_retention(Retention::FinalOnly);
    scheme_config.validate()?;

    let dirichlet = config.map(|c| c.dirichlet_tags()).transpose()?.flatten().unwrap_or_else(|| ALL_SIDES.to_vec());
    let end_time = n_steps as f64 * dt;
    let title = format!(
        "{}: {}, nu = {}, K = {:?}, c = {:?}, dt = {:e}, errors at t = {}",
        a.case,
        scheme_label(scheme),
        params.poisson,
        params.conductivity,
        params.storage,
        dt,
        end_time
    );
    Ok(AccuracyPlan {
        name: a.case.clone(),
        title,
        case: ManufacturedCase::new(params)?,
        config: scheme_config,
        end_time,
        base,
        levels,
        dirichlet,
    })
}

fn cmd_accuracy(plan: &AccuracyPlan, out: &Path) -> Result<bool> {
    let mut table = convergence_study(plan.base, plan.levels, &plan.config, &plan.case, plan.end_time, &plan.dirichlet)?;
    table.title = plan.title.clone();
    let text = table.to_text();
    print!("{text}");
    for (n, wall) in &table.timings {
        println!("1/h = {n}: {wall:.2?}");
    }
    write(out, &format!("accuracy_{}.csv", plan.name), &table.to_csv())?;
    write(out, &format!("accuracy_{}.txt", plan.name), &text)?;
    Ok(true)
}

fn contraction_setup(a: &ContractionArgs, config: Option<&ProblemConfig>) -> Result<mpet_core::model::ProblemSpec> {
    expect_preset(config, Preset::Accuracy, "contraction")?;
    let params = override_params(accuracy_params(config)?, a.nu, a.conductivity, [a.c1, a.c2])?;
    ensure!(params.networks() == 2, "the contraction experiment uses the 2-network manufactured problem");
    ensure!(a.dt > 0.0 && a.dt.is_finite(), "dt must be positive");
    ensure!(a.k_max >= 1, "--k-max must be at least 1");
    let case = ManufacturedCase::new(params)?;
    Ok(case.problem(Arc::new(unit_square_mesh(a.n)?), a.dt, &ALL_SIDES)?)
}

fn cmd_contraction(a: &ContractionArgs, spec: mpet_core::model::ProblemSpec, out: &Path) -> Result<bool> {
    let series = contraction_series(&spec, a.dt, a.k_max)?;
    let limit = series.bound + a.slack;
    println!("predicted contraction factor C* = {:.5}", series.bound);
    println!("initial error {:.3e}", series.initial_error);
    for p in &series.points {
        let r = p.ratio.map(|r| format!("{r:.5}")).unwrap_or_else(|| "-".into());
        println!("k = {:>3}: |e_xi| = {:.3e}, |alpha^T e_p| = {:.3e}, ratio {r}", p.k, p.xi_error, p.alpha_p_error);
    }
    match series.floor_reached_at {
        Some(k) => println!("error floor reached at k = {k}"),
        None => println!("error floor not reached within {} iterations", a.k_max),
    }
    write(out, "contraction.csv", &series.to_csv())?;
    let above = series.ratio_violations(limit);
    let unordered = series.ordering_violations(1e-12);
    let mut ok = true;
    if above.is_empty() {
        println!("all ratios <= C* + slack = {limit:.5}");
    } else {
        println!("ratios above C* + slack = {limit:.5} at k = {above:?}");
        ok = false;
    }
    if !unordered.is_empty() {
        println!("|e_xi| > |alpha^T e_p| + 1e-12 at k = {unordered:?}");
        ok = false;
    }
    Ok(ok)
}

pub struct EnergySetup {
    spec: mpet_core::model::ProblemSpec,
    disc: Discretization,
}

fn energy_setup(a: &EnergyArgs, config: Option<&ProblemConfig>) -> Result<EnergySetup> {
    expect_preset(config, Preset::Accuracy, "energy")?;
    ensure!(a.dt > 0.0 && a.dt.is_finite(), "dt must be positive");
    ensure!(a.steps >= 1, "--steps must be at least 1");
    let params = accuracy_params(config)?;
    let mesh = Arc::new(unit_square_mesh(a.n)?);
    let t_end = a.dt * a.steps as f64;
    let spec = if a.time_dependent {
        ManufacturedCase::new(params)?.problem(mesh, t_end, &ALL_SIDES)?
    } else {
        ConstantLoads::seeded(a.seed, params.networks()).problem(mesh, params, t_end)?
    };
    let disc = Discretization::new(&spec)?;
    check_energy_preconditions(&spec, &disc, 0.0, t_end).context("the energy identity is only checked for time-constant loads")?;
    Ok(EnergySetup { spec, disc })
}

fn cmd_energy(a: &EnergyArgs, setup: EnergySetup, out: &Path, plot: bool) -> Result<bool> {
    let config = SchemeConfig::new(Scheme::Coupled, a.dt, a.steps).with_retention(Retention::Full);
    let output = run(&setup.spec, &config, &[])?;
    let ledger = energy_identity_residual(&output.trajectory, &setup.spec, &setup.disc)?;
    let rel = ledger.relative_residual();
    write(out, "energy.csv", &ledger.to_csv())?;
    if plot {
        let pts = |v: &[f64]| ledger.time.iter().copied().zip(v.iter().copied()).collect::<Vec<_>>();
        let sum: Vec<f64> = ledger.stored.iter().zip(&ledger.dissipated).map(|(j, s)| j + s).collect();
        let series = [("stored J", pts(&ledger.stored)), ("dissipated S", pts(&ledger.dissipated)), ("J + S", pts(&sum))]
            .into_iter()
            .map(|(n, p)| Series { name: n.into(), points: p, dashed: false })
            .collect::<Vec<_>>();
        write(out, "energy.svg", &line_chart("Energy balance", "t [s]", "energy [J]", &series))?;
    }
    println!("steps {}, J^0 = {:.6e}, S^l = {:.6e}", ledger.steps(), ledger.stored[0], ledger.dissipated.last().unwrap_or(&0.0));
    println!("relative residual {rel:.3e} (threshold {:.1e})", a.threshold);
    Ok(rel <= a.threshold)
}

pub struct AnnulusSetup {
    preset: mpet_core::model::PhysiologicalPreset,
    n_radial: usize,
    n_angular: usize,
}

fn is_multiple(t: f64, dt: f64) -> bool {
    let k = (t / dt).round();
    (k * dt - t).abs() <= 1e-9 * t.abs().max(1.0)
}

fn annulus_setup(a: &AnnulusArgs, config: Option<&ProblemConfig>) -> Result<AnnulusSetup> {
    expect_preset(config, Preset::Annulus, "annulus")?;
    let mut preset = physiological_preset()?;
    let (mut n_radial, mut n_angular) = (8, 64);
    if let Some(c) = config {
        // the traction on the ventricle wall is built from the preset alpha
        ensure!(c.parameters.alpha.is_none(), "the annulus traction is tied to the preset Biot-Willis coefficients; alpha cannot be overridden");
        ensure!(c.boundary.dirichlet.is_none(), "the annulus boundary program is fixed; remove the [boundary] section");
        preset.params = c.parameters()?;
        preset.r_inner = c.mesh.r_inner.unwrap_or(preset.r_inner);
        preset.r_outer = c.mesh.r_outer.unwrap_or(preset.r_outer);
        n_radial = c.mesh.n_radial.unwrap_or(n_radial);
        n_angular = c.mesh.n_angular.unwrap_or(n_angular);
        preset.final_time = c.time.final_time.unwrap_or(preset.final_time);
        preset.dt = c.time.dt.unwrap_or(preset.dt);
        preset.iterations = c.scheme.iterations.unwrap_or(preset.iterations);
    }
    n_radial = a.n_radial.unwrap_or(n_radial);
    n_angular = a.n_angular.unwrap_or(n_angular);
    preset.final_time = a.final_time.unwrap_or(preset.final_time);
    preset.dt = a.dt_coupled.unwrap_or(preset.dt);
    preset.dt_decoupled = a.dt_decoupled.unwrap_or(preset.dt_decoupled);
    preset.iterations = a.iters.unwrap_or(preset.iterations);
    ensure!(preset.iterations >= 1, "--iters must be at least 1");
    ensure!(a.tol > 0.0, "--tol must be positive");
    for (name, dt) in [("coupled", preset.dt), ("decoupled", preset.dt_decoupled)] {
        ensure!(dt > 0.0 && dt.is_finite(), "the {name} step must be positive");
        ensure!(is_multiple(preset.final_time, dt), "the final time {} is not a multiple of the {name} step {dt}", preset.final_time);
    }
    ensure!(
        preset.final_time > COMPARE_AFTER && is_multiple(COMPARE_AFTER, preset.dt_decoupled),
        "probe traces are compared after t = {COMPARE_AFTER} s; the final time must exceed it"
    );
    for &t in &a.snapshots {
        ensure!(
            (0.0..=preset.final_time).contains(&t) && is_multiple(t, preset.dt) && is_multiple(t, preset.dt_decoupled),
            "snapshot time {t} must lie in [0, {}] on both time grids",
            preset.final_time
        );
    }
    Ok(AnnulusSetup { preset, n_radial, n_angular })
}

fn snapshot(output: &RunOutput, t: f64) -> Option<&SystemState> {
    output.trajectory.iter().find(|s| (s.time - t).abs() <= 1e-9 * t.max(1.0))
}

fn cmd_annulus(a: &AnnulusArgs, setup: AnnulusSetup, out: &Path, plot: bool) -> Result<bool> {
    let p = &setup.preset;
    let keep = if a.snapshots.is_empty() { Retention::ProbesOnly } else { Retention::Full };
    println!(
        "annulus {} x {}: coupled dt = {}, decoupled dt = {} with {} iterations, T = {} s",
        setup.n_angular, setup.n_radial, p.dt, p.dt_decoupled, p.iterations, p.final_time
    );
    let cmp = annulus_comparison(p, setup.n_radial, setup.n_angular, keep)?;
    let n = p.params.networks();
    for (label, output) in [("coupled", &cmp.coupled), ("decoupled", &cmp.decoupled)] {
        write(out, &format!("annulus_probes_{label}.csv"), &probe_csv(output, p.probes.len(), n))?;
        for &t in &a.snapshots {
            let state = snapshot(output, t).with_context(|| format!("no {label} state at t = {t}"))?;
            write(out, &format!("annulus_{label}_t{t:.4}.csv"), &vertex_csv(state, &cmp.mesh)?)?;
        }
    }
    if plot {
        for (j, x) in p.probes.iter().enumerate() {
            let mut series = Vec::new();
            for i in 0..n {
                for (label, output, dashed) in [("coupled", &cmp.coupled, false), ("decoupled", &cmp.decoupled, true)] {
                    series.push(Series {
                        name: format!("p{} {label}", i + 1),
                        points: output.probes.iter().map(|s| (s.time, s.values[j].p[i] / MMHG_TO_PA)).collect(),
                        dashed,
                    });
                }
            }
            let title = format!("Network pressures at ({:.1}, {:.1}) mm", x[0], x[1]);
            write(out, &format!("annulus_probe{j}_pressures.svg"), &line_chart(&title, "t [s]", "pressure [mmHg]", &series))?;
        }
        let mut series = Vec::new();
        for j in 0..p.probes.len() {
            for (label, output, dashed) in [("coupled", &cmp.coupled, false), ("decoupled", &cmp.decoupled, true)] {
                series.push(Series {
                    name: format!("probe {j} {label}"),
                    points: output.probes.iter().map(|s| (s.time, s.values[j].u[0].hypot(s.values[j].u[1]))).collect(),
                    dashed,
                });
            }
        }
        write(out, "annulus_displacement.svg", &line_chart("Displacement magnitude", "t [s]", "|u| [mm]", &series))?;
    }

    print!("{}", cmp.summary());
    let agree = cmp.agreement_holds(a.tol);
    let faster = cmp.decoupled_faster();
    let outside = cmp.envelope_violations(0.5);
    let verdict = |b: bool| if b { "ok" } else { "FAILED" };
    println!("probe agreement within {:.2}% after t = {COMPARE_AFTER} s: {}", 100.0 * a.tol, verdict(agree));
    println!("decoupled faster than coupled: {}", verdict(faster));
    println!("all values finite: {}", verdict(cmp.finite));
    if outside.is_empty() {
        println!("pressures within +-50% of their boundary-data envelopes: ok");
    } else {
        let names: Vec<String> = outside.iter().map(|i| format!("p{}", i + 1)).collect();
        println!("pressures outside +-50% of their boundary-data envelopes: {}", names.join(", "));
    }
    Ok(agree && faster && cmp.finite && outside.is_empty())
}
