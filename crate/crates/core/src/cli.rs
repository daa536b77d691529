//! Batch command-line front end: `surface`, `invariants`, `verify-conformal`,
//! `bloch` and `flow`. Every command reads JSON from a file or stdin and writes a
//! JSON report (with the resolved configuration embedded) to a file or stdout.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::bloch::{self, BlochOptions, Slice, SliceWindow};
use crate::conformal::{self, ConformalTransform, InvarianceReport, ReportOptions, TransformKind};
use crate::error::{Error, Result};
use crate::geometry::{self, Immersion, ImmersionDoc, ProfileCurve};
use crate::grid::{FieldDoc, ScalarField, TorusGrid};
use crate::invariants;
use crate::mkdv::{self, CalibrationSpec, FlowState};
use crate::weierstrass;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_THRESHOLD: i32 = 3;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "WEIER_MNV_THREADS";

#[derive(Parser, Debug, Serialize)]
#[command(name = "weier-mnv", version, about = "Conformal invariants and Bloch data of tori in R^3")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Build a torus of revolution in conformal coordinates.
    Surface(SurfaceArgs),
    /// Potential, MNV invariants and energy identity of an immersion.
    Invariants(InvariantsArgs),
    /// Compare invariants before and after conformal transforms.
    VerifyConformal(VerifyArgs),
    /// Zero-energy Bloch slice at fixed w1.
    Bloch(BlochArgs),
    /// MKdV-type flow of an x-only potential.
    Flow(FlowArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct Output {
    /// Output JSON path (stdout if omitted or "-").
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Side-channel CSV for plotting.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct SurfaceArgs {
    /// Round profile, e.g. `R=2,r=1`.
    #[arg(long, conflicts_with = "profile")]
    pub torus: Option<String>,
    /// Profile file: CSV with columns s,r,h or JSON {fourier_r, fourier_h}.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Resolution in both directions.
    #[arg(long, default_value_t = 128)]
    pub n: usize,
    /// Samples of a round profile.
    #[arg(long, default_value_t = 512)]
    pub samples: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct InvariantsArgs {
    /// Immersion JSON (stdin if omitted or "-").
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    #[arg(long = "K", default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = geometry::CONFORMAL_TOL)]
    pub conformal_tol: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyArgs {
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// Transform spec, e.g. `inversion:0,0,5;dilation:3`.
    #[arg(long, conflicts_with = "sweep")]
    pub transform: Option<String>,
    /// Number of randomised transforms cycling through all five kinds.
    #[arg(long)]
    pub sweep: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "K", default_value_t = 5)]
    pub k: usize,
    /// Threshold on the relative drift of h1.
    #[arg(long, default_value_t = 1e-5)]
    pub tol_h1: f64,
    /// Threshold on the relative drift of the higher odd h_k.
    #[arg(long, default_value_t = 1e-4)]
    pub tol_hk: f64,
    /// Required distance of inversion centres from the surface, in cell diameters.
    #[arg(long, default_value_t = conformal::INVERSION_MARGIN)]
    pub margin: f64,
    #[arg(long, default_value_t = geometry::CONFORMAL_TOL)]
    pub conformal_tol: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct BlochArgs {
    /// Immersion or potential JSON.
    #[arg(long, short, conflicts_with = "u")]
    pub input: Option<PathBuf>,
    /// Built-in potential instead of an input file (only `zero`).
    #[arg(long)]
    pub u: Option<String>,
    /// Lattice modulus for a built-in potential.
    #[arg(long, default_value = "0+1i")]
    pub tau: String,
    #[arg(long, default_value = "1+0i")]
    pub w1: String,
    /// `r_min,r_max[,count]` for |w2|.
    #[arg(long, default_value = "0.1,10,16")]
    pub window: String,
    /// Odd truncation order (chosen from the spectrum if omitted).
    #[arg(long = "M")]
    pub m: Option<usize>,
    #[arg(long, default_value_t = bloch::ON_VARIETY_TOL)]
    pub threshold: f64,
    #[arg(long, default_value_t = bloch::DEFAULT_MARGIN)]
    pub margin: f64,
    /// Also report the Floquet monodromy at this kappa (x-only potentials).
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Earlier `bloch` report, or a second potential (e.g. after `flow`), whose slice must match.
    #[arg(long)]
    pub compare: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-5)]
    pub compare_tol: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct FlowArgs {
    /// Potential or immersion JSON; the potential must not depend on t2.
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// Total flow time.
    #[arg(long = "T")]
    pub t: Option<f64>,
    /// Time step (a step budget is suggested if omitted).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Cubic coefficient (defaults to the calibrated value, or 24).
    #[arg(long)]
    pub c: Option<f64>,
    /// Calibrate the cubic coefficient against h3 conservation.
    #[arg(long)]
    pub calibrate: bool,
    #[arg(long, default_value_t = 1.0)]
    pub c_min: f64,
    #[arg(long, default_value_t = 60.0)]
    pub c_max: f64,
    #[arg(long, default_value_t = 60)]
    pub candidates: usize,
    #[arg(long, default_value_t = 1000)]
    pub calibration_steps: usize,
    /// Trajectory rows are logged every this many steps.
    #[arg(long, default_value_t = 100)]
    pub log_every: usize,
    #[command(flatten)]
    pub output: Output,
}

/// Exit code for a library error: 2 for bad input or violated preconditions, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::LinearAlgebra(_) | Error::IntegrationFailure(_) | Error::BlowupDetected { .. } | Error::NoConservingCandidate { .. } => {
            EXIT_INTERNAL
        }
        _ => EXIT_INPUT,
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    configure_threads();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        // a second initialisation in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Runs a parsed command; `Ok` carries the exit code (0 or 3).
pub fn execute(cli: &Cli) -> Result<i32> {
    let config = serde_json::to_value(&cli.command)?;
    match &cli.command {
        Command::Surface(a) => cmd_surface(a, config),
        Command::Invariants(a) => cmd_invariants(a, config),
        Command::VerifyConformal(a) => cmd_verify(a, config),
        Command::Bloch(a) => cmd_bloch(a, config),
        Command::Flow(a) => cmd_flow(a, config),
    }
}

fn read_input(path: &Option<PathBuf>) -> Result<String> {
    match path {
        Some(p) if p.as_os_str() != "-" => fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        _ => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s)?;
            Ok(s)
        }
    }
}

fn write_text(path: &Option<PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) if p.as_os_str() != "-" => fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        _ => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.write_all(b"\n")?;
            Ok(())
        }
    }
}

fn emit(out: &Output, report: &Value, csv: Option<String>) -> Result<()> {
    write_text(&out.out, &serde_json::to_string_pretty(report)?)?;
    if let (Some(path), Some(text)) = (&out.csv, csv) {
        fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

/// Accepts a bare immersion document or any report that embeds one under `immersion`.
pub fn parse_immersion(text: &str) -> Result<Immersion> {
    let v: Value = serde_json::from_str(text)?;
    let doc = v.get("immersion").cloned().unwrap_or(v);
    Immersion::from_doc(&serde_json::from_value::<ImmersionDoc>(doc)?)
}

/// A potential document (bare, or under `potential`), or an immersion whose potential is extracted.
pub fn parse_potential(text: &str) -> Result<ScalarField> {
    let v: Value = serde_json::from_str(text)?;
    if let Some(p) = v.get("potential") {
        return ScalarField::from_doc(&serde_json::from_value::<FieldDoc>(p.clone())?);
    }
    if v.get("values").is_some() {
        return ScalarField::from_doc(&serde_json::from_value::<FieldDoc>(v)?);
    }
    weierstrass::extract_potential(&parse_immersion(text)?)
}

fn parse_torus(spec: &str) -> Result<(f64, f64)> {
    let (mut big, mut small) = (None, None);
    for part in spec.split(',') {
        let (k, v) = part.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value in `{part}`")))?;
        let v: f64 = v.trim().parse().map_err(|_| Error::Parse(format!("bad number `{v}`")))?;
        match k.trim() {
            "R" => big = Some(v),
            "r" => small = Some(v),
            other => return Err(Error::Parse(format!("unknown torus key `{other}`"))),
        }
    }
    match (big, small) {
        (Some(b), Some(s)) => Ok((b, s)),
        _ => Err(Error::Parse("torus spec needs both R and r".into())),
    }
}

fn parse_complex(s: &str) -> Result<Complex64> {
    s.trim().parse::<Complex64>().map_err(|_| Error::Parse(format!("bad complex number `{s}`")))
}

fn parse_window(s: &str) -> Result<SliceWindow> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| p.parse::<f64>().map_err(|_| Error::Parse(format!("bad window entry `{p}`")));
    match parts.as_slice() {
        [a, b] => SliceWindow::new(num(a)?, num(b)?, usize::MAX),
        [a, b, c] => SliceWindow::new(num(a)?, num(b)?, c.parse().map_err(|_| Error::Parse(format!("bad count `{c}`")))?),
        _ => Err(Error::Parse(format!("window must be r_min,r_max[,count], got `{s}`"))),
    }
}

fn cmd_surface(a: &SurfaceArgs, config: Value) -> Result<i32> {
    let profile = match (&a.torus, &a.profile) {
        (Some(t), _) => {
            let (big, small) = parse_torus(t)?;
            if !(small > 0.0 && big > small) {
                return Err(Error::DegenerateProfile(format!("round profile R={big}, r={small} must satisfy R > r > 0")));
            }
            ProfileCurve::round(big, small, a.samples)?
        }
        (None, Some(p)) => {
            let text = read_input(&Some(p.clone()))?;
            if p.extension().is_some_and(|e| e == "json") {
                ProfileCurve::from_json(&text)?
            } else {
                ProfileCurve::from_csv(&text)?
            }
        }
        (None, None) => return Err(Error::InvalidArgument("one of --torus or --profile is required".into())),
    };
    let rev = geometry::revolve_profile(&profile, a.n, a.n)?;
    let x = &rev.immersion;
    let t = geometry::willmore(x)?;
    let tau = x.grid().tau();
    eprintln!(
        "torus {}x{}: tau = {:.12}i, Willmore T = {t:.10}, conformality residual {:.2e}",
        a.n,
        a.n,
        tau.im,
        x.conformality_residual()
    );
    let report = json!({
        "config": config,
        "summary": {
            "willmore": t,
            "conformality_residual": x.conformality_residual(),
            "conformal_length": rev.conformal_length,
            "tau": [tau.re, tau.im],
            "nx": a.n,
            "ny": a.n,
        },
        "immersion": x.to_doc(),
    });
    emit(&a.output, &report, None)?;
    Ok(EXIT_OK)
}

fn cmd_invariants(a: &InvariantsArgs, config: Value) -> Result<i32> {
    let x = parse_immersion(&read_input(&a.input)?)?;
    let u = weierstrass::extract_potential_with_tol(&x, a.conformal_tol)?;
    let inv = invariants::invariants(&u, a.k)?;
    let t = geometry::willmore(&x)?;
    let h1 = weierstrass::energy_from_potential(&u);
    let rel = if t != 0.0 { (t - h1).abs() / t } else { (t - h1).abs() };
    for w in &inv.warnings {
        eprintln!("warning: {w}");
    }
    let csv = {
        let mut s = String::from("k,re,im\n");
        for (i, h) in inv.h.iter().enumerate() {
            s.push_str(&format!("{},{:e},{:e}\n", i + 1, h.re, h.im));
        }
        s
    };
    let report = json!({
        "config": config,
        "invariants": inv.to_doc(),
        "warnings": inv.warnings,
        "energy": { "willmore": t, "from_potential": h1, "rel_err": rel },
        "potential": u.to_doc(),
    });
    emit(&a.output, &report, Some(csv))?;
    Ok(EXIT_OK)
}

/// Whether a report meets the thresholds on `h1` and on the higher odd `h_k`.
pub fn report_passes(r: &InvarianceReport, tol_h1: f64, tol_hk: f64) -> bool {
    r.rows.iter().all(|row| match row.k {
        1 => row.rel_diff < tol_h1,
        k if k % 2 == 1 => row.rel_diff < tol_hk,
        _ => true,
    })
}

fn cmd_verify(a: &VerifyArgs, config: Value) -> Result<i32> {
    let x = parse_immersion(&read_input(&a.input)?)?;
    let transforms: Vec<(ConformalTransform, Option<u64>)> = match (&a.transform, a.sweep) {
        (Some(spec), _) => vec![(spec.parse()?, None)],
        (None, Some(n)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            (0..n)
                .map(|i| Ok((conformal::sample_transform(TransformKind::ALL[i % 5], &mut rng, &x)?, Some(a.seed))))
                .collect::<Result<_>>()?
        }
        (None, None) => return Err(Error::InvalidArgument("one of --transform or --sweep is required".into())),
    };
    let mut reports = Vec::new();
    for (t, seed) in &transforms {
        let opts = ReportOptions { conformal_tol: a.conformal_tol, margin: a.margin, seed: *seed };
        reports.push(conformal::invariance_report_with(&x, t, a.k, opts)?);
    }
    let pass = reports.iter().all(|r| report_passes(r, a.tol_h1, a.tol_hk));
    let mut csv = String::new();
    for (i, r) in reports.iter().enumerate() {
        let body = r.to_csv()?;
        for (j, line) in body.lines().enumerate() {
            match (i, j) {
                (0, 0) => csv.push_str(&format!("transform,{line}\n")),
                (_, 0) => {}
                _ => csv.push_str(&format!("\"{}\",{line}\n", r.transform)),
            }
        }
    }
    for r in &reports {
        eprintln!(
            "{}: max odd rel diff {:.2e}, Willmore rel diff {:.2e}",
            r.transform,
            r.rows.iter().filter(|row| row.k % 2 == 1).map(|row| row.rel_diff).fold(0.0, f64::max),
            r.willmore_rel_diff
        );
    }
    let report = json!({ "config": config, "pass": pass, "reports": reports });
    emit(&a.output, &report, Some(csv))?;
    Ok(if pass { EXIT_OK } else { EXIT_THRESHOLD })
}

fn cmd_bloch(a: &BlochArgs, config: Value) -> Result<i32> {
    let u = match (&a.u, &a.input) {
        (Some(name), _) if name == "zero" => {
            let g = TorusGrid::new(parse_complex(&a.tau)?, 16, 16)?;
            ScalarField::zeros(&g)
        }
        (Some(name), _) => return Err(Error::InvalidArgument(format!("unknown built-in potential `{name}`"))),
        (None, input) => parse_potential(&read_input(input)?)?,
    };
    weierstrass::ensure_real(&u, weierstrass::REAL_TOL)?;
    let w1 = parse_complex(&a.w1)?;
    let window = parse_window(&a.window)?;
    let opts = BlochOptions { m: a.m, margin: a.margin, threshold: a.threshold, ..Default::default() };
    let slice = bloch::dispersion_slice(&u, w1, &window, &opts)?;
    if let Some(note) = &slice.diagnostics.note {
        eprintln!("note: {note}");
    }
    let monodromy = match a.kappa {
        Some(kappa) => {
            let prof = bloch::x_profile(&u, opts.profile_tol)
                .ok_or_else(|| Error::InvalidArgument("monodromy needs a potential independent of t2".into()))?;
            Some(bloch::floquet_monodromy(&prof, 1.0, kappa)?)
        }
        None => None,
    };
    let mut code = EXIT_OK;
    let comparison = match &a.compare {
        Some(path) => {
            let text = read_input(&Some(path.clone()))?;
            // either a previous bloch report or a second potential
            let doc: Value = serde_json::from_str(&text)?;
            let other: Slice = match doc.get("slice") {
                Some(sl) => serde_json::from_value(sl.clone())?,
                None => bloch::dispersion_slice(&parse_potential(&text)?, w1, &window, &opts)?,
            };
            let (p, q) = (slice.w2_values(), other.w2_values());
            let nearest = |x: &Complex64, ys: &[Complex64]| ys.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min);
            let max_diff = if p.len() == q.len() {
                p.iter().map(|x| nearest(x, &q)).chain(q.iter().map(|y| nearest(y, &p))).fold(0.0, f64::max)
            } else {
                f64::INFINITY
            };
            let pass = max_diff < a.compare_tol;
            if !pass {
                code = EXIT_THRESHOLD;
            }
            Some(json!({ "other": other, "max_diff": if max_diff.is_finite() { json!(max_diff) } else { json!(null) }, "pass": pass }))
        }
        None => None,
    };
    let report = json!({ "config": config, "slice": slice, "monodromy": monodromy, "comparison": comparison });
    emit(&a.output, &report, Some(slice.to_csv()?))?;
    Ok(code)
}

fn cmd_flow(a: &FlowArgs, config: Value) -> Result<i32> {
    let u = parse_potential(&read_input(&a.input)?)?;
    weierstrass::ensure_real(&u, weierstrass::REAL_TOL)?;
    let prof = bloch::x_profile(&u, BlochOptions::default().profile_tol)
        .ok_or_else(|| Error::InvalidArgument("flow needs a potential independent of t2".into()))?;
    let tau = u.grid().tau();
    let probe = FlowState::new(prof.clone(), a.c.unwrap_or(24.0), 1.0)?;
    let dt = a.dt.unwrap_or_else(|| mkdv::suggested_dt(&probe));

    let calibration = if a.calibrate {
        let spec = CalibrationSpec {
            c_min: a.c_min,
            c_max: a.c_max,
            candidates: a.candidates,
            dt,
            steps: a.calibration_steps,
            ..Default::default()
        };
        let cal = mkdv::calibrate_coefficient(&prof, 1.0, &spec, tau)?;
        match cal.c_star {
            Some(c) => eprintln!("c* = {c:.9} (max relative h3 drift {:.2e})", cal.best_drift),
            None => eprintln!("{}", cal.note.as_deref().unwrap_or("degenerate input")),
        }
        eprintln!("{:>14} {:>12}", "c", "drift");
        for (c, d) in &cal.curve {
            eprintln!("{c:>14.6} {d:>12.3e}");
        }
        Some(cal)
    } else {
        None
    };
    let c = a.c.or(calibration.as_ref().and_then(|k| k.c_star)).unwrap_or(24.0);

    let mut report = json!({ "config": config, "calibration": calibration, "c": c, "dt": dt });
    let mut csv = None;
    if let Some(total) = a.t {
        if !(total >= 0.0) {
            return Err(Error::InvalidArgument(format!("flow time must be non-negative, got {total}")));
        }
        let steps = (total / dt).ceil().max(1.0) as usize;
        let dt_used = total / steps as f64;
        let state = FlowState::new(prof, c, 1.0)?;
        let traj = if total == 0.0 {
            mkdv::evolve(&state, dt, 0, a.log_every, tau)?
        } else {
            mkdv::evolve(&state, dt_used, steps, a.log_every, tau)?
        };
        let (d1, d3) = traj.drifts();
        eprintln!("{steps} steps: relative drift h1 {d1:.2e}, h3 {d3:.2e}");
        let g = u.grid();
        let fin = &traj.final_state.u;
        let field = ScalarField::from_fn(g, |t1, _| Complex64::new(fin[((t1 * g.nx() as f64).round() as usize) % g.nx()], 0.0));
        report["steps"] = json!(steps);
        report["dt"] = json!(dt_used);
        report["drift"] = json!({ "h1": d1, "h3": d3 });
        report["trajectory"] = serde_json::to_value(&traj.rows)?;
        report["potential"] = serde_json::to_value(field.to_doc())?;
        csv = Some(traj.to_csv()?);
    }
    emit(&a.output, &report, csv)?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_torus_and_window_specs() {
        assert_eq!(parse_torus("R=2,r=1").unwrap(), (2.0, 1.0));
        assert!(parse_torus("R=2").is_err());
        let w = parse_window("0.5,2,3").unwrap();
        assert_eq!((w.r_min, w.r_max, w.count), (0.5, 2.0, 3));
        assert!(parse_window("2,1").is_err());
        assert_eq!(parse_complex("1+0i").unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn usage_errors_exit_with_two() {
        assert_eq!(run(["weier-mnv", "surface", "--torus", "R=1,r=1", "--n", "16", "-o", "-"]), EXIT_INPUT);
        assert_eq!(run(["weier-mnv", "invariants", "--input", "/nonexistent/x.json"]), EXIT_INPUT);
        assert_eq!(run(["weier-mnv", "no-such-command"]), EXIT_INPUT);
    }

    #[test]
    fn error_classes() {
        assert_eq!(exit_code(&Error::CenterOnSurface { distance: 0.0, required: 1.0 }), EXIT_INPUT);
        assert_eq!(exit_code(&Error::LinearAlgebra("x".into())), EXIT_INTERNAL);
    }

    #[test]
    fn config_is_serialised_with_command_tag() {
        let cli = Cli::try_parse_from(["weier-mnv", "flow", "--calibrate", "--T", "0.001"]).unwrap();
        let v = serde_json::to_value(&cli.command).unwrap();
        assert_eq!(v["command"], "flow");
        assert_eq!(v["calibrate"], true);
    }
}
