//! `floquet-ap` command line.
//!
//! Exit codes: 0 success (or `non_resonant`), 1 failed verdict or demo row,
//! 2 bad input, 3 numerical failure, 10 `near_resonant`, 11 `resonant`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::apfun::{circle_image, CircleSet, Frequency, ANGLE_MERGE_TOL};
use crate::error::Error;
use crate::fleet;
use crate::io::{
    fmt_f64, load_model, solution_from_json, solution_to_json, to_deterministic_json, write_atomic,
};
use crate::monodromy::{MonodromyOperator, DEFAULT_UNIT_BAND_TOL};
use crate::phasespace::FdeModel;
use crate::solver::{
    ap_certificate, check_resonance_with, decompose_solution, residual, solve_ap_with,
    spectrum_containment_check, ApSolution, Classification, SolverConfig, DEFAULT_RESONANCE_TOL,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_NEAR_RESONANT: i32 = 10;
pub const EXIT_RESONANT: i32 = 11;

pub const RESIDUAL_TOL: f64 = 1e-7;
pub const CONTAINMENT_TOL: f64 = 1e-4;
pub const FIXED_POINT_TOL: f64 = 1e-8;
pub const TRAJECTORY_TOL: f64 = 1e-10;
const CONTAINMENT_HALF_WIDTH: f64 = 200.0;
const PROBE_CLEARANCE: f64 = 0.1;
const RANDOM_PROBES: usize = 3;
const CERTIFICATE_EPS: f64 = 0.05;
const CERTIFICATE_HORIZON: f64 = 1e4;

#[derive(Debug, Parser)]
#[command(
    name = "floquet-ap",
    version,
    about = "Almost periodic solutions of periodic linear delay equations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Model file (JSON).
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Chebyshev intervals per segment.
    #[arg(long, global = true, default_value_t = 32, value_parser = clap::value_parser!(u64).range(2..=128))]
    pub m: u64,
    /// Integrator steps per unit time.
    #[arg(long, global = true, default_value_t = 256, value_parser = clap::value_parser!(u64).range(16..=4096))]
    pub substeps: u64,
    /// Half-width of the band around the unit circle.
    #[arg(long, global = true, default_value_t = DEFAULT_UNIT_BAND_TOL, value_parser = positive)]
    pub tol_band: f64,
    /// Circle distance below which forcing counts as near-resonant.
    #[arg(long, global = true, default_value_t = DEFAULT_RESONANCE_TOL, value_parser = positive)]
    pub tol_res: f64,
    /// Solve near-resonant problems anyway.
    #[arg(long, global = true)]
    pub force: bool,
    /// Seed for the random containment probes.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Time horizon for trajectories and residuals.
    #[arg(long, global = true, default_value_t = 2.0, value_parser = positive)]
    pub horizon: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monodromy eigenvalues and the unit-circle multipliers.
    Spectrum,
    /// Resonance classification of the forcing.
    Check,
    /// Construct the almost periodic solution.
    Solve,
    /// Check a stored solution.
    Verify {
        /// Solution file written by `solve` (default: solution.json in --out).
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// Split a solution into its forced and homogeneous parts.
    Decompose {
        /// Solution file; solved from the model when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Circle distance used to assign frequencies to sets.
        #[arg(long, default_value_t = 1e-6, value_parser = positive)]
        guard: f64,
    },
    /// Run the reference models against their closed-form answers.
    Demo {
        /// Restrict to these model keys (comma separated; may be empty).
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        only: Option<Vec<String>>,
    },
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("must be positive, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Domain(_) | Error::Config(_) | Error::Parse(_) | Error::Io(_) => EXIT_INPUT,
        Error::NearResonant { .. } => EXIT_NEAR_RESONANT,
        Error::Resonant { .. } => EXIT_RESONANT,
        _ => EXIT_NUMERICAL,
    }
}

fn classification_code(c: Classification) -> i32 {
    match c {
        Classification::NonResonant => EXIT_OK,
        Classification::NearResonant => EXIT_NEAR_RESONANT,
        Classification::Resonant => EXIT_RESONANT,
    }
}

/// What a command produced: the report for stdout, any files to write,
/// and the exit code.
struct Outcome {
    report: String,
    files: Vec<(PathBuf, Vec<u8>)>,
    code: i32,
}

impl Cli {
    fn solver_config(&self) -> SolverConfig {
        let mut cfg = SolverConfig {
            resonance_tol: self.tol_res,
            force: self.force,
            ..SolverConfig::default()
        };
        cfg.monodromy.m = self.m as usize;
        cfg.monodromy.stepper.substeps = self.substeps as usize;
        cfg.monodromy.unit_band_tol = self.tol_band;
        cfg
    }

    fn load(&self) -> Result<FdeModel, Error> {
        let path = self
            .model
            .as_deref()
            .ok_or_else(|| Error::Config("--model is required".into()))?;
        load_model(path).map_err(|e| match e {
            Error::Io(io) => Error::Parse(format!("{}: {io}", path.display())),
            other => other,
        })
    }

    fn out_dir(&self) -> &Path {
        self.out.as_deref().unwrap_or(Path::new("."))
    }

    fn assemble(&self, model: &FdeModel) -> Result<(SolverConfig, MonodromyOperator), Error> {
        let cfg = self.solver_config();
        cfg.monodromy.stepper.validate(model)?;
        let m = MonodromyOperator::assemble(model, 1.0, &cfg.monodromy)?;
        Ok((cfg, m))
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    configure_threads();
    let result = match &cli.command {
        Command::Spectrum => cmd_spectrum(&cli),
        Command::Check => cmd_check(&cli),
        Command::Solve => cmd_solve(&cli),
        Command::Verify { solution } => cmd_verify(&cli, solution.as_deref()),
        Command::Decompose { input, guard } => cmd_decompose(&cli, input.as_deref(), *guard),
        Command::Demo { only } => cmd_demo(&cli, only.as_deref()),
    };
    match result {
        Ok(outcome) => {
            for (path, bytes) in &outcome.files {
                if let Err(e) = write_atomic(path, bytes) {
                    eprintln!("error: writing {}: {e}", path.display());
                    return EXIT_INPUT;
                }
            }
            print!("{}", outcome.report);
            outcome.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("FLOQUET_AP_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        if n > 0 {
            // Fails only when a pool already exists, e.g. on repeated calls in tests.
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
}

fn json_outcome(cli: &Cli, name: &str, value: &Value, code: i32) -> Outcome {
    let text = to_deterministic_json(value);
    let files = match &cli.out {
        Some(dir) => vec![(dir.join(format!("{name}.json")), text.clone().into_bytes())],
        None => Vec::new(),
    };
    Outcome {
        report: text,
        files,
        code,
    }
}

fn resolution(cli: &Cli) -> Value {
    json!({"m": cli.m, "substeps": cli.substeps})
}

fn cmd_spectrum(cli: &Cli) -> Result<Outcome, Error> {
    let model = cli.load()?;
    let (_, m) = cli.assemble(&model)?;
    let report = m.unit_circle_report()?;
    let value = json!({
        "eigenvalues": m.eigenvalues(),
        "unit_circle": report.set.angles(),
        "flags": {"spurious": report.spurious},
        "resolution": resolution(cli),
        "model_fingerprint": model.fingerprint(),
    });
    Ok(json_outcome(cli, "spectrum", &value, EXIT_OK))
}

fn cmd_check(cli: &Cli) -> Result<Outcome, Error> {
    let model = cli.load()?;
    let (cfg, m) = cli.assemble(&model)?;
    let report = check_resonance_with(&m, model.forcing(), &cfg)?;
    let mut value = serde_json::to_value(&report)?;
    value["resolution"] = resolution(cli);
    Ok(json_outcome(
        cli,
        "check",
        &value,
        classification_code(report.classification),
    ))
}

fn solution_csv(sol: &ApSolution, horizon: f64) -> String {
    let n = sol.model().dim();
    let h = sol.stepper().h_out;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# model={} substeps={} h_out={}",
        sol.model().fingerprint(),
        sol.stepper().substeps,
        fmt_f64(h)
    );
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("re_u{i}")));
    header.extend((1..=n).map(|i| format!("im_u{i}")));
    let _ = writeln!(s, "{}", header.join(","));
    let count = (horizon / h).round() as usize;
    for k in 0..=count {
        let t = (k as f64 * h).min(horizon);
        let v = sol.eval(t);
        let mut row = vec![fmt_f64(t)];
        row.extend(v.iter().map(|z| fmt_f64(z.re)));
        row.extend(v.iter().map(|z| fmt_f64(z.im)));
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

fn cmd_solve(cli: &Cli) -> Result<Outcome, Error> {
    let model = cli.load()?;
    let (cfg, m) = cli.assemble(&model)?;
    let sol = solve_ap_with(&m, &cfg)?;
    let report = sol.report().expect("solve attaches its report");
    let components: Vec<Value> = sol
        .components()
        .iter()
        .map(|c| {
            json!({
                "frequency": c.frequency,
                "amplitude": c.amplitude().iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                "condition_estimate": c.condition_estimate,
            })
        })
        .collect();
    let summary = json!({
        "classification": report.classification.as_str(),
        "min_separation": report.min_separation,
        "fixed_point_gap": sol.fixed_point_gap()?,
        "components": components,
        "resolution": resolution(cli),
    });
    let dir = cli.out_dir();
    let mut out = json_outcome(cli, "solve", &summary, EXIT_OK);
    out.files.push((
        dir.join("solution.json"),
        to_deterministic_json(&solution_to_json(&sol)).into_bytes(),
    ));
    out.files.push((
        dir.join("solution.csv"),
        solution_csv(&sol, cli.horizon).into_bytes(),
    ));
    Ok(out)
}

/// Frequencies the solution may contain: the forcing frequencies, and for
/// time-dependent coefficients their shifts by `2 pi j` up to `reach`.
fn expected_spectrum(model: &FdeModel, freqs: &[f64], reach: f64) -> Vec<f64> {
    if model.is_autonomous() {
        return freqs.to_vec();
    }
    let tau = std::f64::consts::TAU;
    let mut out = Vec::new();
    for &l in freqs {
        let lo = ((-reach - l) / tau).floor() as i64 - 1;
        let hi = ((reach - l) / tau).ceil() as i64 + 1;
        out.extend((lo..=hi).map(|j| l + tau * j as f64));
    }
    out
}

fn containment_probes(spectrum: &[f64], seed: u64) -> Vec<f64> {
    let clear = |p: f64| spectrum.iter().all(|l| (l - p).abs() > PROBE_CLEARANCE);
    let mut probes: Vec<f64> = [0.0, std::f64::consts::FRAC_PI_2, 3f64.sqrt()]
        .into_iter()
        .filter(|&p| clear(p))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tries = 0;
    while probes.len() < 3 + RANDOM_PROBES && tries < 1000 {
        let p = rng.gen_range(-8.0..8.0);
        if clear(p) {
            probes.push(p);
        }
        tries += 1;
    }
    probes
}

fn check(value: f64, tol: f64) -> Value {
    json!({"value": value, "tolerance": tol, "pass": value <= tol})
}

fn cmd_verify(cli: &Cli, solution: Option<&Path>) -> Result<Outcome, Error> {
    let model = cli.load()?;
    let path = solution.map_or_else(|| cli.out_dir().join("solution.json"), Path::to_path_buf);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let doc: Value = serde_json::from_str(&text)?;
    let loaded = solution_from_json(&model, &doc)?;
    if !loaded.fingerprint_matches {
        return Err(Error::Domain(format!(
            "{} was computed for a different model",
            path.display()
        )));
    }
    let sol = &loaded.solution;
    let stepper = *sol.stepper();
    let res = residual(&model, sol, cli.horizon, &stepper)?;
    let freqs = sol.frequencies();
    let probes_base = containment_probes(&expected_spectrum(&model, &freqs, 8.5), cli.seed);
    let reach = probes_base.iter().fold(0f64, |a, p| a.max(p.abs())) + 1.0;
    let spectrum = expected_spectrum(&model, &freqs, reach);
    let leak = spectrum_containment_check(sol, &spectrum, &probes_base, CONTAINMENT_HALF_WIDTH)?;
    let gap = sol.fixed_point_gap()?;
    let cert = match ap_certificate(sol, &model, CERTIFICATE_EPS, CERTIFICATE_HORIZON) {
        Ok(c) => {
            json!({"tau": c.tau, "forcing_bound": c.forcing_bound, "witness": c.witness, "gain": c.gain, "pass": true})
        }
        Err(Error::SearchFailure { .. }) => json!({"pass": false}),
        Err(e) => return Err(e),
    };
    let checks = [
        ("residual", check(res, RESIDUAL_TOL)),
        ("containment", {
            let mut v = check(leak, CONTAINMENT_TOL);
            v["probes"] = json!(probes_base);
            v["half_width"] = json!(CONTAINMENT_HALF_WIDTH);
            v
        }),
        ("fixed_point_gap", check(gap, FIXED_POINT_TOL)),
        (
            "trajectory_consistency",
            check(loaded.trajectory_mismatch, TRAJECTORY_TOL),
        ),
        ("ap_certificate", cert),
    ];
    let pass = checks.iter().all(|(_, v)| v["pass"] == json!(true));
    let mut verdict = serde_json::Map::new();
    for (k, v) in checks {
        verdict.insert(k.to_string(), v);
    }
    verdict.insert("pass".into(), json!(pass));
    verdict.insert("horizon".into(), json!(cli.horizon));
    let code = if pass { EXIT_OK } else { EXIT_FAILED };
    Ok(json_outcome(cli, "verify", &Value::Object(verdict), code))
}

fn cmd_decompose(cli: &Cli, input: Option<&Path>, guard: f64) -> Result<Outcome, Error> {
    let model = cli.load()?;
    let (cfg, m) = cli.assemble(&model)?;
    let sol = match input {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            let loaded = solution_from_json(&model, &serde_json::from_str(&text)?)?;
            if !loaded.fingerprint_matches {
                return Err(Error::Domain(format!(
                    "{} was computed for a different model",
                    path.display()
                )));
            }
            loaded.solution
        }
        None => solve_ap_with(&m, &cfg)?,
    };
    let harmonics = if model.is_autonomous() { 0 } else { 8 };
    let u = sol.to_trig_polynomial(harmonics, 1e-14)?;
    let sigma_gamma: CircleSet = m.unit_circle_spectrum()?;
    let freqs: Vec<Frequency> = sol.frequencies().into_iter().map(Frequency).collect();
    let forcing_image = circle_image(&freqs);
    let (forced, homogeneous) =
        decompose_solution(&u, &forcing_image, &sigma_gamma, guard.max(ANGLE_MERGE_TOL))?;
    let value = json!({
        "forced": serde_json::to_value(&forced)?,
        "homogeneous": serde_json::to_value(&homogeneous)?,
        "sigma_gamma": sigma_gamma.angles(),
        "forcing_image": forcing_image.angles(),
        "guard": guard,
        "resolution": resolution(cli),
    });
    Ok(json_outcome(cli, "decompose", &value, EXIT_OK))
}

fn cmd_demo(cli: &Cli, only: Option<&[String]>) -> Result<Outcome, Error> {
    let cfg = SolverConfig {
        force: true,
        ..cli.solver_config()
    };
    let rows = fleet::run_demo(&cfg, only)?;
    let mut table = format!(
        "{:<6} {:<20} {:>32} {:>32} {:>10} {:>8}  {}\n",
        "model", "quantity", "oracle", "computed", "error", "tol", "status"
    );
    let fmt_c = |z: num_complex::Complex64| format!("{:+.12}{:+.12}i", z.re, z.im);
    for r in &rows {
        let _ = writeln!(
            table,
            "{:<6} {:<20} {:>32} {:>32} {:>10.2e} {:>8.0e}  {}",
            r.model,
            r.quantity,
            fmt_c(r.oracle),
            fmt_c(r.computed),
            r.error,
            r.tolerance,
            if r.pass { "ok" } else { "FAIL" }
        );
    }
    let failed: Vec<&str> = rows
        .iter()
        .filter(|r| !r.pass)
        .map(|r| r.model.as_str())
        .collect();
    if !failed.is_empty() {
        let _ = writeln!(table, "failed: {}", failed.join(", "));
    }
    let files = match &cli.out {
        Some(dir) => vec![(
            dir.join("demo.json"),
            to_deterministic_json(&json!({"rows": rows, "resolution": resolution(cli)}))
                .into_bytes(),
        )],
        None => Vec::new(),
    };
    Ok(Outcome {
        report: table,
        files,
        code: if failed.is_empty() {
            EXIT_OK
        } else {
            EXIT_FAILED
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probes_avoid_the_spectrum() {
        let p = containment_probes(&[0.05, 1.0], 7);
        assert!(!p.contains(&0.0));
        assert!(p
            .iter()
            .all(|x| (x - 0.05).abs() > 0.1 && (x - 1.0).abs() > 0.1));
        assert_eq!(p, containment_probes(&[0.05, 1.0], 7));
    }

    #[test]
    fn error_codes() {
        assert_eq!(exit_code(&Error::Parse("x".into())), 2);
        assert_eq!(exit_code(&Error::Sampling("x".into())), 3);
        assert_eq!(exit_code(&Error::NearResonant { separation: 0.0 }), 10);
    }

    #[test]
    fn rejects_out_of_range_resolution() {
        assert_eq!(run(["floquet-ap", "spectrum", "--m", "1"]), 2);
        assert_eq!(run(["floquet-ap", "spectrum", "--substeps", "8"]), 2);
        assert_eq!(run(["floquet-ap", "check"]), 2);
    }
}
