use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use tiltsense::calibration::calibrate as run_calibration;
use tiltsense::ef::{MixtureDist, TiltVector};
use tiltsense::estimands::{
    latent_class_bounds, parse_point, sweep as run_sweep, Axis, CompleteDataModel, Estimand, EstimandKind, Grid,
    SelectionFamily,
};
use tiltsense::observed::{bootstrap_draws, ingest_external_fit, json, Dataset, Model, ObservedFit};
use tiltsense::selection::{
    latent_class_asymptotes, overlap_diagnostic, tilt_for_arm, verify_integral_constraint, Arm, LatentClassSelection,
    LogisticSelection, Omega, SelectionSpec,
};
use tiltsense::simgen::{simulate as run_simulation, DgpName};
use tiltsense::Error;

use crate::CliError;

type CliResult<T = ()> = Result<T, CliError>;

/// Units per arm examined by `check`.
const CHECK_UNITS: usize = 200;
const OVERLAP_DRAWS: usize = 20_000;

fn usage(field: &'static str, e: Error) -> CliError {
    CliError::field(e, field)
}

fn distinct(input: &Path, out: &Path) -> CliResult {
    if input == out {
        return Err(usage("out", Error::InvalidInput(format!("output path {} equals an input path", out.display()))));
    }
    Ok(())
}

fn read_fit(path: &Path) -> CliResult<ObservedFit> {
    json::read_path(path).map_err(|e| CliError::from(e).at(path))
}

fn read_data(path: &Path) -> CliResult<Dataset> {
    Dataset::read_csv_path(path).map_err(|e| CliError::from(e).at(path))
}

pub fn estimand_list(kinds: &[String], qs: &[f64]) -> CliResult<Vec<Estimand>> {
    let mut out = Vec::new();
    for k in kinds {
        let kind: EstimandKind = k.parse().map_err(|e| usage("estimand", e))?;
        out.extend(kind.expand(qs).map_err(|e| usage("q", e))?);
    }
    Ok(out)
}

pub fn simulate(dgp: &str, n: usize, seed: u64, out: &Path, truth: Option<&Path>) -> CliResult {
    let name: DgpName = dgp.parse().map_err(|e| usage("dgp", e))?;
    if let Some(t) = truth {
        distinct(t, out)?;
    }
    let s = run_simulation(name, n, seed).map_err(|e| usage("n", e))?;
    s.data.write_csv_path(out).map_err(|e| CliError::from(e).at(out))?;
    if let Some(t) = truth {
        s.truth.write_json(t).map_err(|e| CliError::from(e).at(t))?;
    }
    println!(
        "simulated {dgp}: n={} (control {}, treated {}) -> {}",
        s.data.len(),
        s.data.arm_count(Arm::Control),
        s.data.arm_count(Arm::Treated),
        out.display()
    );
    Ok(())
}

fn pool(workers: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::from(Error::InvalidInput(format!("cannot start worker pool: {e}"))))
}

pub fn fit(input: &Path, model: &str, boot: usize, seed: u64, workers: usize, out: &Path) -> CliResult {
    distinct(input, out)?;
    let model: Model = model.parse().map_err(|e| usage("model", e))?;
    let data = read_data(input)?;
    let fitted = model.fit(&data, seed)?;
    let draws = pool(workers)?.install(|| bootstrap_draws(&data, &model, &fitted, boot, seed.wrapping_add(1)))?;
    let fit = fitted.fit.with_draws(draws);
    json::write_path(&fit, out).map_err(|e| CliError::from(e).at(out))?;
    let naive = CompleteDataModel::new(&fit, SelectionSpec::null()).evaluate(Estimand::Ate, 0.95)?;
    println!(
        "fit {model} on n={} with {boot} bootstrap replicates; naive ATE {:.6} [{:.6}, {:.6}] -> {}",
        data.len(),
        naive.estimate,
        naive.lo,
        naive.hi,
        out.display()
    );
    Ok(())
}

pub fn ingest(input: &Path, out: &Path) -> CliResult {
    distinct(input, out)?;
    let fit = ingest_external_fit(input).map_err(|e| CliError::from(e).at(input))?;
    json::write_path(&fit, out).map_err(|e| CliError::from(e).at(out))?;
    println!(
        "ingested fit: {} control and {} treated units, {} draws -> {}",
        fit.arm(Arm::Control).observed.len(),
        fit.arm(Arm::Treated).observed.len(),
        fit.draws.len(),
        out.display()
    );
    Ok(())
}

pub fn calibrate(data: &Path, fit: &Path, covars: &[String], rho_stars: &[f64], out: &Path) -> CliResult {
    distinct(data, out)?;
    distinct(fit, out)?;
    let dataset = read_data(data)?;
    let observed = read_fit(fit)?;
    let names: Vec<&str> = covars.iter().map(String::as_str).collect();
    let report = run_calibration(&dataset, &observed, &names, rho_stars).map_err(|e| match e {
        Error::RhoOutOfRange(_) => usage("rho-star", e),
        e => e.into(),
    })?;
    std::fs::write(out, report.to_json()? + "\n").map_err(|e| CliError::from(Error::from(e)).at(out))?;
    print!("{}", report.table());
    Ok(())
}

pub fn sweep(
    fit: &Path,
    selection: &str,
    grid: &str,
    estimands: &[Estimand],
    level: f64,
    workers: usize,
    out: &Path,
) -> CliResult {
    distinct(fit, out)?;
    let family: SelectionFamily = selection.parse().map_err(|e| usage("selection", e))?;
    let grid: Grid = grid.parse().map_err(|e| usage("grid", e))?;
    grid.cells(family).map_err(|e| usage("grid", e))?;
    if !(level > 0.0 && level < 1.0) {
        return Err(usage("level", Error::InvalidInput(format!("interval level {level} outside (0, 1)"))));
    }
    let observed = read_fit(fit)?;
    let table = run_sweep(&observed, family, &grid, estimands, level, workers)?;
    table.write_csv_path(out).map_err(|e| CliError::from(e).at(out))?;
    let na = table.rows.iter().filter(|r| r.na_flag.is_some()).count();
    println!(
        "swept {} cells x {} estimands ({} NA) with {workers} workers -> {}",
        grid.len(),
        estimands.len(),
        na,
        out.display()
    );
    Ok(())
}

pub fn bounds(fit: &Path, estimands: &[Estimand], level: f64, out: &Path) -> CliResult {
    distinct(fit, out)?;
    let observed = read_fit(fit)?;
    let mut w = csv::Writer::from_path(out).map_err(|e| CliError::from(Error::from(e)).at(out))?;
    w.write_record(["estimand", "q", "lower", "lower_lo", "lower_hi", "upper", "upper_lo", "upper_hi"])
        .map_err(Error::from)?;
    for &est in estimands {
        let (lo, hi) = latent_class_bounds(&observed, est, level)?;
        let q = est.q().map(|q| q.to_string()).unwrap_or_default();
        let f = |v: f64| v.to_string();
        w.write_record([
            est.name().to_string(),
            q,
            f(lo.estimate),
            f(lo.lo),
            f(lo.hi),
            f(hi.estimate),
            f(hi.lo),
            f(hi.hi),
        ])
        .map_err(Error::from)?;
        println!("{est}: [{:.6}, {:.6}]", lo.estimate, hi.estimate);
    }
    w.flush().map_err(Error::from)?;
    Ok(())
}

fn coordinate(point: &[(Axis, f64)], axis: Axis) -> f64 {
    point.iter().find(|(a, _)| *a == axis).map_or(0.0, |p| p.1)
}

fn selection_at(family: SelectionFamily, point: &[(Axis, f64)]) -> CliResult<SelectionSpec> {
    let at = |a| coordinate(point, a);
    match family {
        SelectionFamily::Logistic => {
            if point.iter().any(|(_, v)| !v.is_finite()) {
                return Err(usage("point", Error::InvalidInput("logistic selection needs finite coordinates".into())));
            }
            Ok(SelectionSpec::Logistic(
                LogisticSelection::linear(at(Axis::Gamma0), at(Axis::Gamma1))
                    .with_zero_shift(at(Axis::Omega0), at(Axis::Omega1)),
            ))
        }
        SelectionFamily::LatentClass => {
            if point.iter().any(|(a, _)| matches!(a, Axis::Gamma0 | Axis::Gamma1)) {
                return Err(usage("point", Error::InvalidInput("latent-class selection takes omega axes only".into())));
            }
            let om = |a| Omega::from_f64(at(a)).map_err(|e| usage("point", e));
            Ok(SelectionSpec::LatentClass(LatentClassSelection::new(om(Axis::Omega0)?, om(Axis::Omega1)?)))
        }
    }
}

#[derive(Debug, Serialize)]
struct ArmCheck {
    arm: usize,
    units_checked: usize,
    proper: bool,
    propriety_error: Option<String>,
    min_ess_ratio: Option<f64>,
    overlap_warn: bool,
    max_constraint_residual: Option<f64>,
    selection_asymptotes: Option<(f64, f64)>,
}

#[derive(Debug, Serialize)]
struct CheckReport {
    selection: String,
    point: BTreeMap<&'static str, f64>,
    arms: Vec<ArmCheck>,
}

/// Evenly spaced subset of at most `CHECK_UNITS` units.
fn sample_units(units: &[MixtureDist]) -> Vec<&MixtureDist> {
    let step = units.len().div_ceil(CHECK_UNITS).max(1);
    units.iter().step_by(step).collect()
}

fn check_arm(fit: &ObservedFit, spec: &SelectionSpec, arm: Arm) -> CliResult<ArmCheck> {
    let units = sample_units(&fit.arm(arm).observed);
    let mut out = ArmCheck {
        arm: arm.index(),
        units_checked: units.len(),
        proper: true,
        propriety_error: None,
        min_ess_ratio: None,
        overlap_warn: false,
        max_constraint_residual: None,
        selection_asymptotes: None,
    };
    match spec {
        SelectionSpec::Logistic(sel) => {
            let tv: TiltVector = tilt_for_arm(sel, arm);
            for (k, obs) in units.iter().enumerate() {
                if let Err(e) = spec.check(obs, arm) {
                    out.proper = false;
                    out.propriety_error = Some(e.to_string());
                    return Ok(out);
                }
                let ov = overlap_diagnostic(obs, &tv, OVERLAP_DRAWS, k as u64)?;
                out.min_ess_ratio = Some(out.min_ess_ratio.map_or(ov.ess_ratio, |m: f64| m.min(ov.ess_ratio)));
                out.overlap_warn |= ov.warn;
                let solved = sel.with_alphas([obs, obs], &fit.prevalence)?;
                let r = verify_integral_constraint(obs, &solved, &fit.prevalence, arm)?;
                out.max_constraint_residual = Some(out.max_constraint_residual.map_or(r, |m: f64| m.max(r)));
            }
        }
        SelectionSpec::LatentClass(sel) => {
            if let Some(obs) = units.iter().find(|m| m.len() == 2) {
                out.selection_asymptotes =
                    Some(latent_class_asymptotes(obs, sel.omega[arm.index()], &fit.prevalence, arm)?);
            }
        }
    }
    Ok(out)
}

pub fn check(fit: &Path, selection: &str, point: &str, out: Option<&Path>) -> CliResult {
    if let Some(o) = out {
        distinct(fit, o)?;
    }
    let family: SelectionFamily = selection.parse().map_err(|e| usage("selection", e))?;
    let coords = parse_point(point).map_err(|e| usage("point", e))?;
    let spec = selection_at(family, &coords)?;
    let observed = read_fit(fit)?;
    let arms = Arm::BOTH.iter().map(|&a| check_arm(&observed, &spec, a)).collect::<CliResult<Vec<_>>>()?;
    let report = CheckReport {
        selection: selection.to_string(),
        point: coords.iter().map(|(a, v)| (a.column(), *v)).collect(),
        arms,
    };
    let text = serde_json::to_string_pretty(&report).map_err(Error::from)?;
    match out {
        Some(o) => std::fs::write(o, text + "\n").map_err(|e| CliError::from(Error::from(e)).at(o))?,
        None => println!("{text}"),
    }
    Ok(())
}
