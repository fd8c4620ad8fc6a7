use std::path::{Path, PathBuf};

use lambdaflow::flow::detect_intervals;
use lambdaflow::validation::run_validation;
use lambdaflow::{
    diode_compare, ensemble_average, evolve_coefficients, flux_residual, populations, run_sweep,
    Difference, DynamicsTrajectory, EnsembleEstimate,
};
use serde_json::{json, Value};

use crate::config::{Format, Mode, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{
    diode_table, interval_table, sibling, simulate_table, stochastic_table, sweep_table,
    write_text, Field, Kind, Schema, Table,
};

pub const VALIDATE_SCHEMA: Schema = &[
    ("check", Kind::Text),
    ("passed", Kind::Int),
    ("detail", Kind::Text),
];

/// What a run produced: files written, a short report and the overall verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub outputs: Vec<PathBuf>,
    pub report: Vec<String>,
    pub passed: bool,
}

struct Writer<'a> {
    rc: &'a RunConfig,
    outputs: Vec<PathBuf>,
}

impl Writer<'_> {
    fn table(&mut self, path: &Path, table: &Table) -> Result<()> {
        write_text(path, &table.encode(self.rc.format))?;
        self.outputs.push(path.to_path_buf());
        Ok(())
    }

    fn sidecar(&self, tag: &str) -> PathBuf {
        sibling(&self.rc.output, tag, self.rc.format.extension())
    }

    /// Resolved config, tool version and run results next to the main output.
    fn meta(mut self, results: Value) -> Result<Vec<PathBuf>> {
        let path = sibling(&self.rc.output, "meta", "json");
        let config = serde_json::to_value(self.rc.to_file()).expect("config serializes");
        let meta = json!({
            "tool": "lambdaflow",
            "version": env!("CARGO_PKG_VERSION"),
            "mode": self.rc.mode.name(),
            "config": config,
            "config_toml": self.rc.to_toml(),
            "outputs": self.outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "results": results,
        });
        let mut text = serde_json::to_string_pretty(&meta).expect("meta serializes");
        text.push('\n');
        write_text(&path, &text)?;
        self.outputs.push(path);
        Ok(self.outputs)
    }
}

pub fn run(rc: &RunConfig) -> Result<RunSummary> {
    match rc.mode {
        Mode::Simulate => simulate(rc),
        Mode::Sweep => sweep(rc),
        Mode::Diode => diode(rc),
        Mode::Stochastic => stochastic(rc),
        Mode::Validate => validate(rc),
    }
}

fn simulate(rc: &RunConfig) -> Result<RunSummary> {
    let coeffs = evolve_coefficients(&rc.model, &rc.integrator)?;
    let dyn_ = populations(&coeffs, &rc.model)?;
    let intervals = detect_intervals(&coeffs, &rc.flow);

    let mut w = Writer {
        rc,
        outputs: Vec::new(),
    };
    w.table(&rc.output, &simulate_table(&coeffs, &dyn_, rc.flow.eps))?;
    let interval_path = w.sidecar("intervals");
    w.table(&interval_path, &interval_table(&intervals))?;

    let relaxation = dyn_.relaxation_time(1e-3);
    let trace = dyn_.max_trace_error();
    let flux = flux_residual(&dyn_, rc.model.omega(), Difference::SixthOrder);
    let flux_central = flux_residual(&dyn_, rc.model.omega(), Difference::Central);
    let mut report = vec![format!(
        "{} grid points to t = {}{}",
        coeffs.len(),
        coeffs.times.last().copied().unwrap_or(0.0),
        coeffs.stop_time.map_or(String::new(), |t| format!(
            " (stopped on rho33 floor at {t})"
        ))
    )];
    for i in &intervals.intervals {
        report.push(format!(
            "interval {} [{:.4}, {:.4}] duration {:.4} peak {:.4e}",
            i.direction.label(),
            i.t_start,
            i.t_end,
            i.duration(),
            i.peak_magnitude
        ));
    }
    report.push(format!(
        "max trace error {trace:.3e}, flux residual {flux:.3e} (central differences {flux_central:.3e})"
    ));

    let outputs = w.meta(json!({
        "grid_points": coeffs.len(),
        "stop_time": coeffs.stop_time,
        "intervals": intervals.intervals,
        "first_duration": intervals.first_duration(),
        "relaxation_time_1e-3": relaxation,
        "max_trace_error": trace,
        "flux_residual": flux,
        "flux_residual_central": flux_central,
    }))?;
    Ok(RunSummary {
        outputs,
        report,
        passed: true,
    })
}

fn sweep(rc: &RunConfig) -> Result<RunSummary> {
    let grid = rc
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep mode needs a sweep grid".into()))?;
    let result = run_sweep(grid, rc.workers)?;
    let mut w = Writer {
        rc,
        outputs: Vec::new(),
    };
    w.table(&rc.output, &sweep_table(&result))?;

    let (n1, n2) = grid.shape();
    let nonzero = result
        .directions
        .iter()
        .flatten()
        .filter(|&&d| d != 0)
        .count();
    let mut report = vec![format!(
        "{n1} x {n2} cells over {} x {}, {nonzero} with unidirectional flow, {} failed",
        grid.axis1.param,
        grid.axis2.param,
        result.failures.len()
    )];
    for f in &result.failures {
        report.push(format!("cell ({}, {}) failed: {}", f.i, f.j, f.message));
    }
    let outputs = w.meta(json!({
        "shape": [n1, n2],
        "axis1": grid.axis1.param.name(),
        "axis2": grid.axis2.param.name(),
        "nonzero_cells": nonzero,
        "failures": result.failures,
    }))?;
    Ok(RunSummary {
        outputs,
        report,
        passed: true,
    })
}

fn diode(rc: &RunConfig) -> Result<RunSummary> {
    let report = diode_compare(&rc.model, &rc.integrator, &rc.flow)?;
    let mut w = Writer {
        rc,
        outputs: Vec::new(),
    };
    w.table(&rc.output, &diode_table(&report))?;
    for (tag, g) in [("forward", &report.forward), ("reverse", &report.reverse)] {
        let path = w.sidecar(tag);
        w.table(
            &path,
            &simulate_table(&g.coefficients, &g.dynamics, rc.flow.eps),
        )?;
        let path = w.sidecar(&format!("{tag}.intervals"));
        w.table(&path, &interval_table(&g.intervals))?;
    }

    let mut lines = Vec::new();
    for (name, g) in [("(i)", &report.forward), ("(ii)", &report.reverse)] {
        match g.intervals.first() {
            Some(i) => lines.push(format!(
                "geometry {name}: {} intervals, first {} [{:.4}, {:.4}], peak min|J| {:.4e}",
                g.intervals.len(),
                i.direction.label(),
                i.t_start,
                i.t_end,
                g.peak_current.unwrap_or(0.0)
            )),
            None => lines.push(format!("geometry {name}: no unidirectional interval")),
        }
    }
    let show = |x: Option<f64>| x.map_or("n/a".to_owned(), |v| format!("{v:.6}"));
    lines.push(format!(
        "asymmetry ratio {} (rate ratio {}, release ratio {})",
        show(report.asymmetry_ratio),
        show(report.rate_ratio),
        show(report.release_ratio)
    ));
    let outputs = w.meta(json!({
        "asymmetry_ratio": report.asymmetry_ratio,
        "rate_ratio": report.rate_ratio,
        "release_ratio": report.release_ratio,
        "forward_intervals": report.forward.intervals.intervals,
        "reverse_intervals": report.reverse.intervals.intervals,
    }))?;
    Ok(RunSummary {
        outputs,
        report: lines,
        passed: true,
    })
}

/// Largest |estimate − reference| in units of the standard error, with
/// `floor` standing in for a vanishing standard error.
fn max_z(est: &[f64], se: &[f64], reference: &[f64], floor: f64) -> f64 {
    est.iter()
        .zip(se)
        .zip(reference)
        .map(|((e, s), r)| (e - r).abs() / s.max(floor))
        .fold(0.0, f64::max)
}

fn stochastic_checks(est: &EnsembleEstimate, det: &DynamicsTrajectory) -> Value {
    let n = est.len().min(det.len());
    let se = |a: usize, b: usize| est.stderr[..n].iter().map(|s| s[a][b]).collect::<Vec<_>>();
    let pop = |l: usize| est.population(l)[..n].to_vec();
    let zeros = vec![0.0; n];
    let r12: Vec<f64> = est.rho[..n].iter().map(|r| r[0][1].norm()).collect();
    let traces: Vec<f64> = (0..n).map(|k| est.trace(k)).collect();
    json!({
        "max_abs_rho33_error": pop(2).iter().zip(&det.rho33).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
        "max_z_rho11": max_z(&pop(0), &se(0, 0), &det.rho11[..n], 1e-300),
        "max_z_rho22": max_z(&pop(1), &se(1, 1), &det.rho22[..n], 1e-300),
        "max_z_rho12": max_z(&r12, &se(0, 1), &zeros, 1e-300),
        "max_z_trace": max_z(&traces, &est.trace_stderr[..n], &vec![1.0; n], 1e-300),
    })
}

fn stochastic(rc: &RunConfig) -> Result<RunSummary> {
    let opts = rc
        .stochastic
        .ok_or_else(|| CliError::Config("stochastic mode needs stochastic options".into()))?;
    let est = ensemble_average(&rc.model, &rc.integrator, &opts.ensemble(rc.workers))?;
    let coeffs = evolve_coefficients(&rc.model, &rc.integrator)?;
    let det = populations(&coeffs, &rc.model)?;

    let mut w = Writer {
        rc,
        outputs: Vec::new(),
    };
    w.table(&rc.output, &stochastic_table(&est, &det))?;
    let checks = stochastic_checks(&est, &det);
    let report = vec![
        format!(
            "{} trajectories, seed {}, {} grid points",
            est.n_traj,
            est.seed,
            est.len()
        ),
        format!("deviation from deterministic populations: {checks}"),
    ];
    let outputs = w.meta(checks)?;
    Ok(RunSummary {
        outputs,
        report,
        passed: true,
    })
}

fn validate(rc: &RunConfig) -> Result<RunSummary> {
    let seed = rc.stochastic.map_or(2024, |s| s.seed);
    let result = run_validation(seed, rc.workers)?;
    let mut table = Table::new(VALIDATE_SCHEMA);
    let mut report = Vec::new();
    for c in &result.checks {
        table.push(vec![
            Field::Text(c.name.to_owned()),
            Field::Int(c.passed as i64),
            Field::Text(c.detail.clone()),
        ]);
        report.push(format!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        ));
    }
    let mut w = Writer {
        rc,
        outputs: Vec::new(),
    };
    w.table(&rc.output, &table)?;
    let outputs = w.meta(json!({ "checks": result.checks, "all_passed": result.all_passed() }))?;
    Ok(RunSummary {
        outputs,
        report,
        passed: result.all_passed(),
    })
}

/// Re-encode a previously written table in its own format.
pub fn reemit(schema: Schema, path: &Path) -> Result<String> {
    let text = crate::output::read_text(path)?;
    let format = crate::output::format_of(path).unwrap_or(Format::Csv);
    Ok(Table::decode(schema, &text, format, path)?.encode(format))
}
