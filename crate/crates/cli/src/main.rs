//! `behavigram` command-line tool.
//!
//! Exit codes: 0 on success, 1 for data or validation errors, 2 for usage
//! and configuration errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use behavigram::config::PipelineConfig;
use behavigram::pipeline::{self, analyze, estimate_sync, Analysis};
use behavigram::render::{self, BehaviorgramSpec, ColorMap, Variant};
use behavigram::streams::{align, load_recording, save_recording};
use behavigram::synth::{generate, make_sync_scenario, ScenarioSpec};
use behavigram::{Error, Recording};

/// Lag report written by `sync`; it is itself a valid analysis config.
const LAG_REPORT_FILE: &str = "lags.toml";

#[derive(Debug, Parser)]
#[command(name = "behavigram", version, about = "Offline multimodal behavioral analytics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load a session and report per-stream statistics.
    Validate { session: PathBuf },
    /// Estimate the gaze lag from the `sync` segment and write an aligned copy.
    Sync {
        session: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Largest lag searched, in seconds. Overrides `[sync] max_lag_s`.
        #[arg(long)]
        max_lag: Option<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Derive velocity, proximity, entropy and phase summaries.
    Analyze {
        session: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write the bins x window entropy correlation matrix.
        #[arg(long)]
        sweep: bool,
    },
    /// Draw behaviorgrams as SVG.
    Render {
        session: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = VariantArg::Both)]
        variant: VariantArg,
        #[arg(long, default_value_t = 1200.0)]
        width: f64,
        #[arg(long, default_value_t = 300.0)]
        height: f64,
        /// Start of the rendered time range, seconds.
        #[arg(long, allow_negative_numbers = true)]
        from: Option<f64>,
        /// End of the rendered time range, seconds.
        #[arg(long, allow_negative_numbers = true)]
        to: Option<f64>,
        #[arg(long, value_enum, default_value_t = ColorMapArg::Blue)]
        color_map: ColorMapArg,
        #[arg(long, default_value_t = 20.0)]
        entropy_track_height: f64,
        /// Omit phase labels.
        #[arg(long)]
        no_labels: bool,
    },
    /// Generate a synthetic session with ground truth.
    Simulate {
        #[arg(long)]
        out: PathBuf,
        /// Scenario file (TOML). Takes precedence over `--preset`.
        #[arg(long, conflicts_with = "preset")]
        spec: Option<PathBuf>,
        /// abcde, abcde-repeated, two-regime, empty or sync.
        #[arg(long, default_value = "abcde")]
        preset: String,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Gaze delay behind the right-hand accelerometer for the sync preset.
        #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
        sync_offset: f64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    Extended,
    Simplified,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ColorMapArg {
    Blue,
    Green,
    Orange,
    Gray,
}

impl From<ColorMapArg> for ColorMap {
    fn from(c: ColorMapArg) -> Self {
        match c {
            ColorMapArg::Blue => ColorMap::Blue,
            ColorMapArg::Green => ColorMap::Green,
            ColorMapArg::Orange => ColorMap::Orange,
            ColorMapArg::Gray => ColorMap::Gray,
        }
    }
}

enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Usage(e.to_string()),
            other => Failure::Data(other),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { session } => cmd_validate(&session),
        Command::Sync {
            session,
            out,
            max_lag,
            config,
        } => cmd_sync(&session, &out, max_lag, config.as_deref()),
        Command::Analyze {
            session,
            out,
            config,
            sweep,
        } => cmd_analyze(&session, &out, config.as_deref(), sweep),
        Command::Render {
            session,
            out,
            config,
            variant,
            width,
            height,
            from,
            to,
            color_map,
            entropy_track_height,
            no_labels,
        } => {
            let time_range = match (from, to) {
                (None, None) => Ok(None),
                (Some(a), Some(b)) => Ok(Some((a, b))),
                _ => Err(Failure::Usage("--from and --to must be given together".into())),
            };
            time_range.and_then(|time_range| {
                let spec = BehaviorgramSpec {
                    width,
                    height,
                    time_range,
                    variant: Variant::Extended,
                    color_map: color_map.into(),
                    entropy_track_height,
                    labels: !no_labels,
                };
                cmd_render(&session, &out, config.as_deref(), variant, spec)
            })
        }
        Command::Simulate {
            out,
            spec,
            preset,
            seed,
            sync_offset,
        } => cmd_simulate(&out, spec.as_deref(), &preset, seed, sync_offset),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig, Failure> {
    match path {
        None => Ok(PipelineConfig::default()),
        Some(p) => PipelineConfig::load(p).map_err(|e| Failure::Usage(e.to_string())),
    }
}

fn create_dir(dir: &Path) -> CmdResult {
    std::fs::create_dir_all(dir).map_err(|e| {
        Failure::Data(Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })
    })
}

fn write_file(path: &Path, text: &str) -> CmdResult {
    std::fs::write(path, text).map_err(|e| {
        Failure::Data(Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}

fn cmd_validate(session: &Path) -> CmdResult {
    let rec = load_recording(session)?;
    println!("session: {}", session.display());
    if let Some((t0, t1)) = rec.span() {
        println!("span: {t0:.3} .. {t1:.3} s");
    }
    println!("{:<10} {:>9} {:>10} {:>9}", "stream", "samples", "rate_hz", "missing");
    for s in rec.stream_stats() {
        let rate = s.rate_hz.map_or_else(|| "-".to_string(), |r| format!("{r:.3}"));
        println!(
            "{:<10} {:>9} {:>10} {:>9.4}",
            s.name, s.samples, rate, s.missing_fraction
        );
    }
    Ok(())
}

fn cmd_sync(session: &Path, out: &Path, max_lag: Option<f64>, config: Option<&Path>) -> CmdResult {
    let mut cfg = load_config(config)?;
    if let Some(m) = max_lag {
        if !(m >= 0.0 && m.is_finite()) {
            return Err(Failure::Usage("--max-lag must be a finite value >= 0".into()));
        }
        cfg.sync.max_lag_s = m;
    }
    let rec = load_recording(session)?;
    let est = estimate_sync(&rec, &cfg)?;
    save_recording(&align(&rec, &est.lags), out)?;
    let report = format!(
        "# gaze lag behind accel_rh from sync segment [{}, {}) s, max lag {} s\n[lags]\ngaze = {}\n",
        est.segment.0, est.segment.1, cfg.sync.max_lag_s, est.lag_s
    );
    write_file(&out.join(LAG_REPORT_FILE), &report)?;
    println!(
        "gaze lag: {:.4} s (sync segment {:.3} .. {:.3} s)",
        est.lag_s, est.segment.0, est.segment.1
    );
    println!("aligned session written to {}", out.display());
    Ok(())
}

fn run_analysis(session: &Path, config: Option<&Path>) -> Result<Analysis, Failure> {
    let cfg = load_config(config)?;
    let rec = load_recording(session)?;
    Ok(analyze(&rec, &cfg)?)
}

fn cmd_analyze(session: &Path, out: &Path, config: Option<&Path>, sweep: bool) -> CmdResult {
    let analysis = run_analysis(session, config)?;
    analysis.write_outputs(out)?;
    if sweep {
        analysis.sweep()?.write_csv(out.join(pipeline::SWEEP_FILE))?;
    }
    print!("{}", analysis.report_text());
    Ok(())
}

fn session_name(rec: &Recording, session: &Path) -> String {
    let raw = rec
        .meta
        .get("session")
        .cloned()
        .or_else(|| session.file_name().map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "session".into());
    raw.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "-_.".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn cmd_render(
    session: &Path,
    out: &Path,
    config: Option<&Path>,
    variant: VariantArg,
    spec: BehaviorgramSpec,
) -> CmdResult {
    let analysis = run_analysis(session, config)?;
    let name = session_name(&analysis.recording, session);
    let variants = match variant {
        VariantArg::Extended => vec![Variant::Extended],
        VariantArg::Simplified => vec![Variant::Simplified],
        VariantArg::Both => vec![Variant::Extended, Variant::Simplified],
    };
    let data = analysis.behaviorgram_data();
    let mut documents = Vec::new();
    for v in variants {
        let spec = BehaviorgramSpec {
            variant: v,
            ..spec.clone()
        };
        let svg = render::render(&data, &spec).map_err(|e| match e {
            Error::InvalidSpec(m) => Failure::Usage(m),
            other => Failure::Data(other),
        })?;
        documents.push((out.join(format!("{name}_{}.svg", v.as_str())), svg));
    }
    create_dir(out)?;
    for (path, svg) in documents {
        render::write_svg(&path, &svg)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn cmd_simulate(out: &Path, spec: Option<&Path>, preset: &str, seed: Option<u64>, sync_offset: f64) -> CmdResult {
    if spec.is_none() && preset == "sync" {
        let rec = make_sync_scenario(sync_offset, seed.unwrap_or(0));
        save_recording(&rec, out)?;
        println!("sync session written to {}", out.display());
        return Ok(());
    }
    let mut scenario = match spec {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            ScenarioSpec::from_toml(&text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?
        }
        None => ScenarioSpec::preset(preset, 0).map_err(|e| Failure::Usage(format!("{e}; `sync` is also accepted")))?,
    };
    if let Some(s) = seed {
        scenario.seed = s;
    }
    scenario.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    generate(&scenario)?.write(out)?;
    println!("session written to {}", out.display());
    Ok(())
}
