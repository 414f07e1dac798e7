//! Command-line entry point and CSV emission.
//!
//! Exit codes: 0 on success, 1 for invalid input (flags, config files,
//! physical parameters), 2 for numerical failures.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::arrival::{arrival_for, ArrivalResult, CurrentKind};
use crate::classical::{classical_width, j_c, rho_c};
use crate::config::{ConfigError, RunConfig};
use crate::error::Error;
use crate::mc::{check_against_closed_forms, sample_d0, CheckLayout};
use crate::quad::QuadOptions;
use crate::quantum::{j_q, momentum_density, rho_q, spread};
use crate::sweep::{run_sweep, GridSpec, GridVariable, SweepResult, TimeSeries};
use crate::units::{make_params, CutoffPolicy, DetectorConfig, PacketParams, HBAR_CGS};
use crate::wigner::{wigner_closed, wigner_marginals, PhaseGrid};

pub const CSV_HEADER: [&str; 7] = ["axis", "axis_value", "grid", "grid_value", "quantity", "value", "error"];

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// One CSV record. `error` holds a standard error for Monte Carlo values,
/// a failure message for error rows, and nothing otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRecord {
    pub axis: String,
    pub axis_value: f64,
    pub grid: String,
    pub grid_value: Option<f64>,
    pub quantity: String,
    pub value: Option<f64>,
    pub error: String,
}

pub fn write_csv<W: Write>(out: W, records: &[CsvRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.axis.as_str(),
            &fmt_num(r.axis_value),
            r.grid.as_str(),
            &r.grid_value.map(fmt_num).unwrap_or_default(),
            r.quantity.as_str(),
            &r.value.map(fmt_num).unwrap_or_default(),
            r.error.as_str(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn sweep_records(result: &SweepResult) -> Vec<CsvRecord> {
    result
        .rows
        .iter()
        .map(|row| CsvRecord {
            axis: result.axis.name().to_string(),
            axis_value: row.axis_value,
            grid: row.grid_value.map(|_| result.grid_variable.name().to_string()).unwrap_or_default(),
            grid_value: row.grid_value,
            quantity: row.quantity.name().to_string(),
            value: row.value.as_ref().ok().copied(),
            error: row.value.as_ref().err().cloned().unwrap_or_default(),
        })
        .collect()
}

#[derive(Debug, Parser)]
#[command(name = "arrival", version, about = "Quantum and classical arrival times of free Gaussian ensembles")]
#[command(args_conflicts_with_subcommands = true, allow_negative_numbers = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct PacketArgs {
    /// Initial width σ₀, cm
    #[arg(long)]
    sigma0: f64,
    /// Group velocity, cm/s
    #[arg(long)]
    u: f64,
    /// Squeezing parameter
    #[arg(long = "C", allow_negative_numbers = true)]
    c: f64,
    /// Particle mass, amu
    #[arg(long)]
    mass: f64,
    /// ħ in erg·s (defaults to CODATA)
    #[arg(long)]
    hbar: Option<f64>,
}

impl PacketArgs {
    fn params(&self) -> crate::Result<PacketParams> {
        let p = make_params(self.sigma0, self.u, self.c, self.mass)?;
        PacketParams::new(p.sigma0, p.u, p.c, p.mass, self.hbar.unwrap_or(HBAR_CGS))
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// ρ_Q and ρ_C profiles along x at fixed t
    Density {
        #[command(flatten)]
        packet: PacketArgs,
        /// Evaluation time, s
        #[arg(long)]
        t: f64,
        #[arg(long)]
        x_min: Option<f64>,
        #[arg(long)]
        x_max: Option<f64>,
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// J_Q and J_C at the detector over time
    Current {
        #[command(flatten)]
        packet: PacketArgs,
        /// Detector position, cm
        #[arg(long = "X")]
        x: f64,
        #[arg(long)]
        t_min: Option<f64>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Wigner function on a phase grid, with a marginal check report
    Wigner {
        #[command(flatten)]
        packet: PacketArgs,
        #[arg(long)]
        t: f64,
        /// Points per phase-space axis
        #[arg(long, default_value_t = 41)]
        points: usize,
        /// Half-width of the grid in standard deviations
        #[arg(long, default_value_t = 8.0)]
        span: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mean arrival time from the quantum and classical currents
    ArrivalTime {
        #[command(flatten)]
        packet: PacketArgs,
        #[arg(long = "X")]
        x: f64,
        /// Fixed upper time limit in s instead of the three-sigma cutoff
        #[arg(long)]
        cutoff: Option<f64>,
        #[arg(long, default_value_t = DetectorConfig::DEFAULT_REL_TOL)]
        rel_tol: f64,
        #[arg(long, default_value_t = DetectorConfig::DEFAULT_MAX_CUTOFF_ITERS)]
        max_cutoff_iters: usize,
    },
    /// Run a parameter sweep from a TOML config file
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's `output`
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo trajectories against the classical closed forms
    McValidate {
        #[command(flatten)]
        packet: PacketArgs,
        #[arg(long = "X")]
        x: f64,
        #[arg(long, default_value_t = 1_000_000)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        bins: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{source}\n  configuration: {context}")]
    Core { source: Error, context: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write `{path}`: {message}")]
    Output { path: String, message: String },
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Core { source, .. } if source.is_numerical() => 2,
            CliError::Config(ConfigError::Invalid { source, .. }) if source.is_numerical() => 2,
            _ => 1,
        }
    }
}

fn describe(params: Option<&PacketParams>, extra: &str) -> String {
    match params {
        Some(p) => format!(
            "sigma0={} cm, u={} cm/s, C={}, mass={} amu, hbar={} erg s{}",
            p.sigma0,
            p.u,
            p.c,
            p.mass_amu(),
            p.hbar,
            extra
        ),
        None => extra.trim_start_matches(", ").to_string(),
    }
}

trait Context<T> {
    fn context(self, params: Option<&PacketParams>, extra: &str) -> Result<T, CliError>;
}

impl<T> Context<T> for crate::Result<T> {
    fn context(self, params: Option<&PacketParams>, extra: &str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Core { source, context: describe(params, extra) })
    }
}

fn emit(records: &[CsvRecord], path: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let fail = |p: &str, e: &dyn std::fmt::Display| CliError::Output { path: p.to_string(), message: e.to_string() };
    match path {
        Some(p) => {
            let shown = p.display().to_string();
            let file = std::fs::File::create(p).map_err(|e| fail(&shown, &e))?;
            write_csv(std::io::BufWriter::new(file), records).map_err(|e| fail(&shown, &e))
        }
        None => write_csv(stdout, records).map_err(|e| fail("<stdout>", &e)),
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    GridSpec { variable: GridVariable::X, min: lo, max: hi, count: n }.points()
}

fn check_points(points: usize) -> crate::Result<()> {
    if points < 2 {
        return Err(Error::Validation { field: "points", reason: "must be >= 2".into() });
    }
    Ok(())
}

fn grid_records(params: &PacketParams, grid: &str, coords: &[f64], series: &[(&str, Vec<f64>)]) -> Vec<CsvRecord> {
    series
        .iter()
        .flat_map(|(name, values)| {
            coords.iter().zip(values).map(move |(&g, &v)| CsvRecord {
                axis: "mass_amu".into(),
                axis_value: params.mass_amu(),
                grid: grid.into(),
                grid_value: Some(g),
                quantity: (*name).into(),
                value: Some(v),
                error: String::new(),
            })
        })
        .collect()
}

fn print_arrival(out: &mut dyn Write, label: &str, r: &ArrivalResult) -> std::io::Result<()> {
    writeln!(
        out,
        "{label:<9} tau_bar = {} s  T_cutoff = {} s  negative_flux_fraction = {}",
        fmt_num(r.tau_bar),
        fmt_num(r.t_cutoff),
        fmt_num(r.negative_flux_fraction)
    )
}

fn execute(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Density { packet, t, x_min, x_max, points, out } => {
            let params = packet.params().context(None, "")?;
            let ctx = format!(", t={t} s");
            check_points(points).context(Some(&params), &ctx)?;
            if !(t >= 0.0) {
                return Err(Error::Validation { field: "t", reason: format!("must be >= 0, got {t}") }).context(Some(&params), &ctx);
            }
            let w = spread(&params, t).width.max(classical_width(&params, t));
            let c = params.u * t;
            let xs = linspace(x_min.unwrap_or(c - 6.0 * w), x_max.unwrap_or(c + 6.0 * w), points);
            let rq = xs.iter().map(|&x| rho_q(&params, x, t)).collect();
            let rc = xs.iter().map(|&x| rho_c(&params, x, t)).collect();
            emit(&grid_records(&params, "x", &xs, &[("rho_q", rq), ("rho_c", rc)]), out.as_deref(), stdout)
        }
        Command::Current { packet, x, t_min, t_max, points, out } => {
            let params = packet.params().context(None, "")?;
            let ctx = format!(", X={x} cm");
            check_points(points).context(Some(&params), &ctx)?;
            let passage = if params.u != 0.0 { (x / params.u).abs() } else { 1.0 };
            let ts = linspace(t_min.unwrap_or(0.8 * passage), t_max.unwrap_or(1.2 * passage), points);
            let quantum = TimeSeries::sample(ts.clone(), |t| j_q(&params, x, t));
            let classical = TimeSeries::sample(ts, |t| j_c(&params, x, t));
            let records = grid_records(&params, "t", &quantum.t, &[("j_q", quantum.values.clone()), ("j_c", classical.values)]);
            emit(&records, out.as_deref(), stdout)
        }
        Command::Wigner { packet, t, points, span, out } => {
            let params = packet.params().context(None, "")?;
            let ctx = format!(", t={t} s");
            check_points(points).context(Some(&params), &ctx)?;
            let grid = PhaseGrid::covering(&params, t, span, points, points);
            let mut records = Vec::with_capacity(points * points);
            for &p in &grid.p {
                for &x in &grid.x {
                    records.push(CsvRecord {
                        axis: "p".into(),
                        axis_value: p,
                        grid: "x".into(),
                        grid_value: Some(x),
                        quantity: "wigner".into(),
                        value: Some(wigner_closed(&params, x, p, t)),
                        error: String::new(),
                    });
                }
            }
            let m = wigner_marginals(&params, t, &grid, &QuadOptions::with_tolerance(1e-12, 0.0)).context(Some(&params), &ctx)?;
            let worst = |values: &[f64], exact: &dyn Fn(usize) -> f64| {
                let peak = (0..values.len()).map(exact).fold(0.0, f64::max);
                (0..values.len())
                    .filter(|&i| exact(i) > 1e-12 * peak)
                    .map(|i| ((values[i] - exact(i)) / exact(i)).abs())
                    .fold(0.0, f64::max)
            };
            let x_err = worst(&m.x_profile, &|i| rho_q(&params, m.x[i], t));
            let p_err = worst(&m.p_profile, &|i| momentum_density(&params, m.p[i]));
            let _ = writeln!(stderr, "x-marginal vs rho_q: max relative error {}", fmt_num(x_err));
            let _ = writeln!(stderr, "p-marginal vs |Phi|^2: max relative error {}", fmt_num(p_err));
            emit(&records, out.as_deref(), stdout)
        }
        Command::ArrivalTime { packet, x, cutoff, rel_tol, max_cutoff_iters } => {
            let params = packet.params().context(None, "")?;
            let ctx = format!(", X={x} cm");
            let policy = cutoff.map_or(CutoffPolicy::ThreeSigma, CutoffPolicy::Fixed);
            let det = DetectorConfig::new(x, policy, rel_tol, DetectorConfig::DEFAULT_ABS_TOL, max_cutoff_iters).context(Some(&params), &ctx)?;
            let q = arrival_for(CurrentKind::Quantum, &params, &det).context(Some(&params), &ctx)?;
            let c = arrival_for(CurrentKind::Classical, &params, &det).context(Some(&params), &ctx)?;
            let _ = print_arrival(stdout, "quantum", &q);
            let _ = print_arrival(stdout, "classical", &c);
            Ok(())
        }
        Command::Sweep { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let spec = cfg.sweep_spec().context(None, "")?;
            let mut result = run_sweep(&spec).context(Some(&spec.base), "")?;
            result.metadata.seed = cfg.mc.as_ref().map(|m| m.seed);
            result.metadata.resolved_config = Some(cfg.to_toml());
            let target = out.or_else(|| cfg.output.as_ref().map(|o| resolve_output(&config, o)));
            emit(&sweep_records(&result), target.as_deref(), stdout)?;
            if let Some(path) = &target {
                write_metadata(path, &result)?;
            }
            let errors = result.error_rows();
            if errors > 0 {
                let _ = writeln!(stderr, "{errors} of {} cells failed; see the error column", result.rows.len());
            }
            Ok(())
        }
        Command::McValidate { packet, x, count, seed, bins, out } => {
            let params = packet.params().context(None, "")?;
            let ctx = format!(", X={x} cm, count={count}, seed={seed}");
            let det = DetectorConfig::at(x).context(Some(&params), &ctx)?;
            let sample = sample_d0(&params, count, seed).context(Some(&params), &ctx)?;
            let mut layout = CheckLayout::for_detector(&params, x);
            layout.flux_bins = bins.max(1);
            let report = check_against_closed_forms(&sample, &params, &det, &layout).context(Some(&params), &ctx)?;
            let _ = writeln!(
                stdout,
                "flux:    {}/{} bins with >= 100 crossings within 3 std_error of J_C",
                report.flux_within, report.flux_tested
            );
            let _ = writeln!(
                stdout,
                "density: {}/{} bins within 4 std_error of rho_C at t = {} s",
                report.density_within,
                report.density.density.len(),
                fmt_num(layout.density_time)
            );
            let _ = writeln!(
                stdout,
                "arrival: trajectories {} +/- {} s, flux functional {} s ({:.2} std_error)",
                fmt_num(report.arrival.mean),
                fmt_num(report.arrival.std_error),
                fmt_num(report.arrival_exact.tau_bar),
                report.arrival_z()
            );
            if let Some(path) = out {
                let mut records = Vec::new();
                let axis_value = params.mass_amu();
                for ((f, exact), w) in report.flux.iter().zip(&report.flux_exact).zip(report.flux_edges.windows(2)) {
                    let mid = 0.5 * (w[0] + w[1]);
                    records.push(CsvRecord { axis: "mass_amu".into(), axis_value, grid: "t".into(), grid_value: Some(mid), quantity: "j_mc".into(), value: Some(f.value), error: fmt_num(f.std_error) });
                    records.push(CsvRecord { axis: "mass_amu".into(), axis_value, grid: "t".into(), grid_value: Some(mid), quantity: "j_c".into(), value: Some(*exact), error: String::new() });
                }
                let h = &report.density;
                for (((x, d), se), exact) in h.centres().zip(&h.density).zip(&h.std_error).zip(&report.density_exact) {
                    records.push(CsvRecord { axis: "mass_amu".into(), axis_value, grid: "x".into(), grid_value: Some(x), quantity: "rho_mc".into(), value: Some(*d), error: fmt_num(*se) });
                    records.push(CsvRecord { axis: "mass_amu".into(), axis_value, grid: "x".into(), grid_value: Some(x), quantity: "rho_c".into(), value: Some(*exact), error: String::new() });
                }
                emit(&records, Some(&path), stdout)?;
            }
            Ok(())
        }
    }
}

/// Relative `output` paths in a config are taken relative to the config file.
fn resolve_output(config: &Path, output: &str) -> PathBuf {
    let p = Path::new(output);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        config.parent().unwrap_or(Path::new(".")).join(p)
    }
}

/// Path of the metadata file written next to a sweep CSV.
pub fn metadata_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".meta.toml");
    PathBuf::from(s)
}

fn write_metadata(csv: &Path, result: &SweepResult) -> Result<(), CliError> {
    let path = metadata_path(csv);
    let mut text = format!("# arrival-core {}\n", result.metadata.code_version);
    if let Some(seed) = result.metadata.seed {
        text.push_str(&format!("# seed {seed}\n"));
    }
    text.push_str(result.metadata.resolved_config.as_deref().unwrap_or(""));
    std::fs::write(&path, text).map_err(|e| CliError::Output { path: path.display().to_string(), message: e.to_string() })
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 { write!(stdout, "{rendered}") } else { write!(stderr, "{rendered}") };
            return code;
        }
    };
    match execute(cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("arrival").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn number_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, 6.02214076e23, -1.5e-300, f64::MIN_POSITIVE] {
            let s = fmt_num(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let digits = s.split('e').next().unwrap().chars().filter(|c| c.is_ascii_digit()).count();
            assert_eq!(digits, 17);
        }
    }

    #[test]
    fn arrival_time_classical_limit() {
        let (code, out, _) = run_capture(&["arrival-time", "--C", "0", "--mass", "1e6", "--X", "5.1", "--u", "10", "--sigma0", "1e-4"]);
        assert_eq!(code, 0);
        let tau: f64 = out.lines().next().unwrap().split_whitespace().nth(3).unwrap().parse().unwrap();
        assert!((tau - 0.51).abs() < 0.51e-3);
        assert!(out.contains("T_cutoff") && out.contains("negative_flux_fraction"));
    }

    #[test]
    fn negative_c_accepted() {
        let (code, _, err) = run_capture(&["density", "--sigma0", "1e-5", "--u", "1e3", "--C", "-3", "--mass", "1", "--t", "1e-6", "--points", "3"]);
        assert_eq!(code, 0, "{err}");
    }

    #[test]
    fn exit_codes() {
        let (code, _, err) = run_capture(&["sweep", "--config", "/nonexistent/missing.toml"]);
        assert_eq!(code, 1);
        assert!(err.contains("missing.toml"));
        let (code, _, err) = run_capture(&["arrival-time", "--sigma0", "0", "--u", "10", "--C", "0", "--mass", "1", "--X", "5.1"]);
        assert_eq!(code, 1);
        assert!(err.contains("sigma0"));
        let (code, _, err) = run_capture(&["arrival-time", "--sigma0", "1e-4", "--u", "10", "--C", "1e4", "--mass", "0.01", "--X", "5.1"]);
        assert_eq!(code, 2);
        assert!(err.contains("did not converge") && err.contains("mass="));
        let (code, _, _) = run_capture(&["no-such-command"]);
        assert_eq!(code, 1);
        let (code, out, _) = run_capture(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("arrival-time"));
    }

    #[test]
    fn csv_header_and_rows() {
        let (code, out, _) = run_capture(&["current", "--sigma0", "1e-4", "--u", "1e3", "--C", "100", "--mass", "5", "--X", "10", "--points", "5"]);
        assert_eq!(code, 0);
        let mut lines = out.lines();
        assert_eq!(lines.next().unwrap(), "axis,axis_value,grid,grid_value,quantity,value,error");
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), 10);
        let fields: Vec<&str> = rows[0].split(',').collect();
        assert_eq!(fields[0], "mass_amu");
        assert_eq!(fields[2], "t");
        assert_eq!(fields[4], "j_q");
        assert_eq!(fields[6], "");
    }
}
