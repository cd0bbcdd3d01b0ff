//! Command line front end: parse a flat key-value config, dispatch a
//! campaign, write plot-ready CSV/JSON data files.
//!
//! Exit codes: 0 on success, 2 on configuration errors (unknown flags,
//! missing or malformed config files), 1 on numerical failures — the latter
//! with a machine-readable JSON record on standard error. Output files are
//! written atomically (temp file + rename) and embed the fully resolved
//! configuration, so a run can always be reproduced from its own output.
//! `QAR_THREADS` caps the campaign worker count.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::{Path, PathBuf};

use crate::analysis::{
    correlation_sweep, localized_asymptotics, maximize_cooling_power, performance_characteristic,
    random_bound_scan, AnalysisError, ScanRanges, DEFAULT_GRID,
};
use crate::dynamics::DissipationMode;
use crate::model::{parse_config, RawParams, RefrigeratorFamily};
use crate::thermo::HeatCurrentReport;

/// Sample count of the full-scale randomized bound scan.
pub const FULL_SCALE_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    fn label(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "qar",
    version,
    about = "Three-qubit quantum absorption refrigerator: steady states, heat currents, \
             performance bounds and stationary correlations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Flat key-value parameter file (omega_w, omega_c, g, gamma, T_w, T_h, T_c).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dissipation model.
    #[arg(long, default_value = "delocalized")]
    mode: DissipationMode,
    /// Grid points / sample count, depending on the command.
    #[arg(long)]
    n: Option<usize>,
    /// Campaign seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file.
    #[arg(long, short)]
    output: PathBuf,
    /// Output format.
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sweep ω_c across the cooling window: cooling power vs COP.
    Characteristic(CommonArgs),
    /// Maximize the cooling power over ω_c and report the optimum.
    Optimize(CommonArgs),
    /// Randomized scan certifying the COP-at-maximum-power bound.
    BoundScan {
        #[command(flatten)]
        common: CommonArgs,
        /// Run the full-scale campaign (100000 samples).
        #[arg(long)]
        full_scale: bool,
        /// Restrict sampling to the bound-saturating corner of parameter
        /// space (small frequencies, large temperature difference).
        #[arg(long)]
        saturation: bool,
    },
    /// Sweep ω_c and join heat currents with discord/PPT reports.
    Correlations(CommonArgs),
    /// Closed-form small-frequency optimum of the flat-rate localized model.
    LocalizedAsymptotics(CommonArgs),
}

/// The resolved configuration echoed into every output file.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub config_path: Option<String>,
    pub params: Option<RawParams>,
    pub mode: String,
    pub n: usize,
    pub seed: u64,
    pub output: String,
    pub format: String,
}

impl RunConfig {
    fn header_lines(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("# qar {}\n", self.command));
        s.push_str(&format!("# mode = {}\n", self.mode));
        s.push_str(&format!("# n = {}\n", self.n));
        s.push_str(&format!("# seed = {}\n", self.seed));
        if let Some(p) = &self.params {
            s.push_str(&format!("# omega_w = {}\n", p.omega_w));
            if let Some(wc) = p.omega_c {
                s.push_str(&format!("# omega_c = {wc}\n"));
            }
            s.push_str(&format!("# g = {}\n", p.g));
            s.push_str(&format!("# gamma = {}\n", p.gamma));
            s.push_str(&format!("# T_w = {}\n", p.t_w));
            s.push_str(&format!("# T_h = {}\n", p.t_h));
            s.push_str(&format!("# T_c = {}\n", p.t_c));
        }
        s
    }
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Numerical(String, String),
    Io(std::io::Error),
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        let kind = match &e {
            AnalysisError::NoCoolingRegion { .. } => "no-cooling-region",
            AnalysisError::RejectionStarvation { .. } => "rejection-starvation",
            AnalysisError::OutOfDomain { .. } => "out-of-domain",
            _ => "numerical",
        };
        CliError::Numerical(kind.into(), e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

/// Run the CLI on an argv (including the program name). Returns the process
/// exit code.
pub fn run<I>(argv: I) -> i32
where
    I: IntoIterator,
    I::Item: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap exits 0 for --help/--version, 2 for usage errors.
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let threads = std::env::var("QAR_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1);
    let result = match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build();
            match pool {
                Ok(pool) => pool.install(|| dispatch(&cli.command)),
                Err(e) => Err(CliError::Config(format!("QAR_THREADS: {e}"))),
            }
        }
        None => dispatch(&cli.command),
    };
    match result {
        Ok(()) => 0,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Io(e)) => {
            eprintln!("error: {e}");
            1
        }
        Err(CliError::Numerical(kind, msg)) => {
            eprintln!(
                "{}",
                serde_json::json!({ "error": kind, "message": msg })
            );
            1
        }
    }
}

fn read_family(common: &CommonArgs) -> Result<(RawParams, RefrigeratorFamily), CliError> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required for this command".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let raw = parse_config(&text).map_err(|e| CliError::Config(e.to_string()))?;
    let family = raw.family().map_err(|e| CliError::Config(e.to_string()))?;
    Ok((raw, family))
}

fn resolved(common: &CommonArgs, command: &str, params: Option<RawParams>, n: usize) -> RunConfig {
    RunConfig {
        command: command.into(),
        config_path: common.config.as_ref().map(|p| p.display().to_string()),
        params,
        mode: common.mode.label().into(),
        n,
        seed: common.seed,
        output: common.output.display().to_string(),
        format: common.format.label().into(),
    }
}

fn dispatch(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Characteristic(common) => {
            let (raw, family) = read_family(common)?;
            let n = common.n.unwrap_or(150);
            let cfg = resolved(common, "characteristic", Some(raw), n);
            let points = performance_characteristic(&family, n, common.mode)?;
            match common.format {
                OutputFormat::Csv => {
                    let mut out = cfg.header_lines();
                    out.push_str("omega_c,qdot_c_norm,cop_ratio\n");
                    for p in &points {
                        out.push_str(&format!(
                            "{},{},{}\n",
                            p.omega_c,
                            p.qdot_c_norm,
                            p.cop_ratio.map(|v| v.to_string()).unwrap_or_default()
                        ));
                    }
                    write_atomic(&common.output, out.as_bytes())?;
                }
                OutputFormat::Json => {
                    let doc = serde_json::json!({ "config": cfg, "points": points });
                    write_atomic(&common.output, pretty(&doc).as_bytes())?;
                }
            }
            Ok(())
        }
        Command::Optimize(common) => {
            let (raw, family) = read_family(common)?;
            let n = common.n.unwrap_or(DEFAULT_GRID);
            let cfg = resolved(common, "optimize", Some(raw), n);
            let optimum = maximize_cooling_power(&family, common.mode, n)?;
            match common.format {
                OutputFormat::Csv => {
                    let mut out = cfg.header_lines();
                    out.push_str("omega_c_star,qdot_c_max,cop_star,cop_ratio_star\n");
                    out.push_str(&format!(
                        "{},{},{},{}\n",
                        optimum.omega_c_star,
                        optimum.qdot_c_max,
                        optimum.cop_star,
                        optimum.cop_ratio_star
                    ));
                    write_atomic(&common.output, out.as_bytes())?;
                }
                OutputFormat::Json => {
                    let doc = serde_json::json!({ "config": cfg, "optimum": optimum });
                    write_atomic(&common.output, pretty(&doc).as_bytes())?;
                }
            }
            Ok(())
        }
        Command::BoundScan {
            common,
            full_scale,
            saturation,
        } => {
            let n = if *full_scale {
                FULL_SCALE_SAMPLES
            } else {
                common.n.unwrap_or(2000)
            };
            let cfg = resolved(common, "bound-scan", None, n);
            let ranges = if *saturation {
                ScanRanges::saturation()
            } else {
                ScanRanges::default()
            };
            let scan = random_bound_scan(&ranges, common.mode, n, common.seed)?;
            match common.format {
                OutputFormat::Csv => {
                    let mut out = cfg.header_lines();
                    out.push_str(&format!(
                        "# ranges = {}\n",
                        serde_json::to_string(&ranges).expect("ranges serialize")
                    ));
                    out.push_str(
                        "seed_index,omega_w,g,gamma,T_w,T_h,T_c,omega_c_star,qdot_c_max,cop_star,cop_ratio_star\n",
                    );
                    for s in &scan.samples {
                        let f = &s.family;
                        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
                        out.push_str(&format!(
                            "{},{},{},{},{},{},{},{},{},{},{}\n",
                            s.seed_index,
                            f.omega_w(),
                            f.g(),
                            f.gamma(),
                            f.t_w(),
                            f.t_h(),
                            f.t_c(),
                            opt(s.optimum.map(|o| o.omega_c_star)),
                            opt(s.optimum.map(|o| o.qdot_c_max)),
                            opt(s.optimum.map(|o| o.cop_star)),
                            opt(s.optimum.map(|o| o.cop_ratio_star)),
                        ));
                    }
                    write_atomic(&common.output, out.as_bytes())?;
                    // The machine-readable summary rides alongside the CSV.
                    let summary_path = summary_path(&common.output);
                    let doc = serde_json::json!({ "config": cfg, "summary": scan.summary });
                    write_atomic(&summary_path, pretty(&doc).as_bytes())?;
                    println!("{}", pretty(&serde_json::json!({ "summary": scan.summary })));
                }
                OutputFormat::Json => {
                    let doc = serde_json::json!({
                        "config": cfg,
                        "summary": scan.summary,
                        "samples": scan.samples,
                    });
                    write_atomic(&common.output, pretty(&doc).as_bytes())?;
                    println!("{}", pretty(&serde_json::json!({ "summary": scan.summary })));
                }
            }
            Ok(())
        }
        Command::Correlations(common) => {
            let (raw, family) = read_family(common)?;
            if common.mode != DissipationMode::Delocalized {
                return Err(CliError::Config(
                    "correlations sweeps run on the delocalized model".into(),
                ));
            }
            let n = common.n.unwrap_or(64);
            let cfg = resolved(common, "correlations", Some(raw), n);
            let rows = correlation_sweep(&family, n)?;
            match common.format {
                OutputFormat::Csv => {
                    let mut out = cfg.header_lines();
                    out.push_str(crate::analysis::CorrelationSweepRow::CSV_HEADER);
                    out.push('\n');
                    for r in &rows {
                        out.push_str(&r.csv_row());
                        out.push('\n');
                    }
                    write_atomic(&common.output, out.as_bytes())?;
                }
                OutputFormat::Json => {
                    let doc = serde_json::json!({ "config": cfg, "rows": rows });
                    write_atomic(&common.output, pretty(&doc).as_bytes())?;
                }
            }
            Ok(())
        }
        Command::LocalizedAsymptotics(common) => {
            let (raw, family) = read_family(common)?;
            let cfg = resolved(common, "localized-asymptotics", Some(raw), 1);
            let asym = localized_asymptotics(&family);
            match common.format {
                OutputFormat::Csv => {
                    let mut out = cfg.header_lines();
                    out.push_str(
                        "tau,omega_c_star_exact,omega_c_star_first_order,cop_ratio_analytic,\
                         condition_small_frequency,condition_small_window\n",
                    );
                    out.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        asym.tau,
                        asym.omega_c_star_exact,
                        asym.omega_c_star_first_order,
                        asym.cop_ratio_analytic,
                        asym.condition_small_frequency,
                        asym.condition_small_window
                    ));
                    write_atomic(&common.output, out.as_bytes())?;
                }
                OutputFormat::Json => {
                    let doc = serde_json::json!({ "config": cfg, "asymptotics": asym });
                    write_atomic(&common.output, pretty(&doc).as_bytes())?;
                }
            }
            Ok(())
        }
    }
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("json serialize")
}

fn summary_path(csv_path: &Path) -> PathBuf {
    let mut name = csv_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scan".into());
    name.push_str(".summary.json");
    csv_path.with_file_name(name)
}

/// Write a file atomically: stage into a sibling temp file, then rename.
/// Readers never observe a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

// An unused reference keeps the heat-current CSV contract visible next to
// the commands that honor it.
const _: &str = HeatCurrentReport::CSV_HEADER;

#[cfg(test)]
mod tests {
    use super::*;

    struct TempDir(PathBuf);

    impl TempDir {
        fn new(tag: &str) -> Self {
            let dir = std::env::temp_dir().join(format!("qar-cli-{tag}-{}", std::process::id()));
            std::fs::create_dir_all(&dir).unwrap();
            TempDir(dir)
        }
        fn path(&self, name: &str) -> PathBuf {
            self.0.join(name)
        }
    }

    impl Drop for TempDir {
        fn drop(&mut self) {
            let _ = std::fs::remove_dir_all(&self.0);
        }
    }

    fn fig2_config(dir: &TempDir) -> PathBuf {
        let path = dir.path("fig2.toml");
        std::fs::write(
            &path,
            "omega_w = 56.87\ng = 0.1\ngamma = 1e-6\nT_w = 127.33\nT_h = 66.25\nT_c = 4.78\n",
        )
        .unwrap();
        path
    }

    fn argv(parts: &[&str]) -> Vec<String> {
        std::iter::once("qar".to_string())
            .chain(parts.iter().map(|s| s.to_string()))
            .collect()
    }

    #[test]
    fn characteristic_writes_reproducible_csv() {
        let dir = TempDir::new("char");
        let config = fig2_config(&dir);
        let out = dir.path("char.csv");
        let code = run(argv(&[
            "characteristic",
            "--config",
            config.to_str().unwrap(),
            "--mode",
            "delocalized",
            "--n",
            "40",
            "-o",
            out.to_str().unwrap(),
        ]));
        assert_eq!(code, 0);
        let first = std::fs::read(&out).unwrap();
        let text = String::from_utf8(first.clone()).unwrap();
        assert!(text.contains("omega_c,qdot_c_norm,cop_ratio"));
        assert!(text.contains("# omega_w = 56.87"));
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 41);

        // Re-running reproduces the file byte for byte.
        let code = run(argv(&[
            "characteristic",
            "--config",
            config.to_str().unwrap(),
            "--mode",
            "delocalized",
            "--n",
            "40",
            "-o",
            out.to_str().unwrap(),
        ]));
        assert_eq!(code, 0);
        assert_eq!(std::fs::read(&out).unwrap(), first);
    }

    #[test]
    fn optimize_emits_json() {
        let dir = TempDir::new("opt");
        let config = fig2_config(&dir);
        let out = dir.path("opt.json");
        let code = run(argv(&[
            "optimize",
            "--config",
            config.to_str().unwrap(),
            "--n",
            "80",
            "-o",
            out.to_str().unwrap(),
            "--format",
            "json",
        ]));
        assert_eq!(code, 0);
        let doc: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        let ratio = doc["optimum"]["cop_ratio_star"].as_f64().unwrap();
        assert!((0.55..=0.75).contains(&ratio));
        assert_eq!(doc["config"]["mode"], "delocalized");
    }

    #[test]
    fn bound_scan_writes_summary_sidecar() {
        let dir = TempDir::new("scan");
        let out = dir.path("scan.csv");
        let code = run(argv(&[
            "bound-scan",
            "--n",
            "10",
            "--seed",
            "7",
            "-o",
            out.to_str().unwrap(),
        ]));
        assert_eq!(code, 0);
        let summary: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(dir.path("scan.summary.json")).unwrap(),
        )
        .unwrap();
        assert!(summary["summary"]["max_cop_ratio"].as_f64().unwrap() <= 0.751);
        let csv = std::fs::read_to_string(&out).unwrap();
        assert!(csv.contains("seed_index,omega_w"));
        assert!(csv.contains("# seed = 7"));
    }

    #[test]
    fn config_errors_exit_2() {
        let dir = TempDir::new("err");
        // Unknown flag.
        assert_eq!(run(argv(&["characteristic", "--bogus"])), 2);
        // Missing config file.
        let out = dir.path("x.csv");
        let code = run(argv(&[
            "characteristic",
            "--config",
            dir.path("nope.toml").to_str().unwrap(),
            "-o",
            out.to_str().unwrap(),
        ]));
        assert_eq!(code, 2);
        // Malformed config.
        let bad = dir.path("bad.toml");
        std::fs::write(&bad, "omega_w = not-a-number\n").unwrap();
        let code = run(argv(&[
            "characteristic",
            "--config",
            bad.to_str().unwrap(),
            "-o",
            out.to_str().unwrap(),
        ]));
        assert_eq!(code, 2);
        assert!(!out.exists(), "no partial outputs on failure");
    }

    #[test]
    fn localized_asymptotics_round_trip() {
        let dir = TempDir::new("asym");
        let config = dir.path("cold.toml");
        std::fs::write(
            &config,
            "omega_w = 1.0\ng = 1e-3\ngamma = 1e-9\nT_w = 1000\nT_h = 100\nT_c = 5\n",
        )
        .unwrap();
        let out = dir.path("asym.json");
        let code = run(argv(&[
            "localized-asymptotics",
            "--config",
            config.to_str().unwrap(),
            "-o",
            out.to_str().unwrap(),
            "--format",
            "json",
        ]));
        assert_eq!(code, 0);
        let doc: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        let ratio = doc["asymptotics"]["cop_ratio_analytic"].as_f64().unwrap();
        assert!((ratio - 0.475).abs() <= 1e-12);
    }
}
