//! Command-line front end: each subcommand maps onto one library
//! operation, and `experiment` drives full scenarios from a JSON config.
//!
//! Exit codes: 0 when all verdicts pass, 1 on a failed verdict, 2 on a
//! validation error, 3 on any other runtime error.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use ergolab::{
    configure_threads, kakutani_decompose, load_experiment, load_model,
    render_report, rohlin_tower, run_experiment, ConditionalFile, Error,
    ExperimentConfig, ExperimentReport, JointRef, ModelRef, OutputFormat,
    Result, Row, SchemeDescriptor, TowerDecomposition, Word,
};

#[derive(Parser)]
#[command(
    name = "ergolab",
    version,
    about = "Laboratory for finitary observation of stationary ergodic \
             processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputArgs {
    /// Directory to write the rendered output into (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: csv, json or text.
    #[arg(long, default_value = "text")]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a path from a model file.
    Simulate {
        /// Model JSON file.
        #[arg(long)]
        model: PathBuf,
        /// Path length.
        #[arg(long)]
        length: usize,
        /// Master seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Evaluate one observation scheme on one sampled path.
    Estimate {
        /// Model JSON file.
        #[arg(long)]
        model: PathBuf,
        /// Scheme name: plugin, plugin:fixed-log, lz78, lz77,
        /// returntime, or freq:SYMBOL.
        #[arg(long)]
        scheme: String,
        /// Path length.
        #[arg(long)]
        length: usize,
        /// Master seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Tolerance used for the within_epsilon column.
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Compare normalized log-measures of sampled paths with the exact
    /// entropy rate.
    Smb {
        /// Model JSON file (must have a closed-form rate).
        #[arg(long)]
        model: PathBuf,
        /// Path length.
        #[arg(long)]
        length: usize,
        /// Number of independent paths.
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// Tolerance around the exact rate.
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        /// Master seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Build a relative typical set for a joint model and report its
    /// coverage and counting bounds.
    RelativeSmb {
        /// Joint model JSON file.
        #[arg(long)]
        model: PathBuf,
        /// Word length n.
        #[arg(long)]
        length: usize,
        /// Slack epsilon in the exponents.
        #[arg(long, default_value_t = 0.3)]
        epsilon: f64,
        /// Coverage threshold for the verdict.
        #[arg(long, default_value_t = 0.9)]
        min_coverage: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Decompose a sampled path into towers (marker-based when a
    /// pattern is given, fixed-height otherwise).
    Decompose {
        /// Model JSON file.
        #[arg(long)]
        model: PathBuf,
        /// Path length.
        #[arg(long)]
        length: usize,
        /// Master seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Marker pattern digits (e.g. 01); omit for fixed-height
        /// towers.
        #[arg(long)]
        pattern: Option<String>,
        /// Minimum tower height (marker-based) or exact height
        /// (fixed-height).
        #[arg(long)]
        height: usize,
        /// Leftover budget for fixed-height towers.
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Recode sampled joint paths over tower decompositions and verify
    /// that decoding inverts the recoding.
    Recode {
        /// Joint model JSON file.
        #[arg(long)]
        model: PathBuf,
        /// Path length.
        #[arg(long)]
        length: usize,
        /// Header budget epsilon.
        #[arg(long, default_value_t = 0.15)]
        epsilon: f64,
        /// Output alphabet size k.
        #[arg(long, default_value_t = 16)]
        alphabet: usize,
        /// Minimum tower height.
        #[arg(long, default_value_t = 32)]
        height: usize,
        /// Marker pattern digits over the factor alphabet.
        #[arg(long, default_value = "01")]
        pattern: String,
        /// Number of sampled paths.
        #[arg(long, default_value_t = 2)]
        trials: usize,
        /// Master seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Transplant conditional block structure onto a factor path and
    /// compare block statistics against an exact law.
    Transplant {
        /// Factor (Y) model JSON file.
        #[arg(long)]
        model: PathBuf,
        /// Comparison (X) model JSON file for the exact block law.
        #[arg(long)]
        x_model: PathBuf,
        /// Conditional law: "identity" or "product:MODEL.json".
        #[arg(long, default_value = "identity")]
        conditional: String,
        /// Path length.
        #[arg(long)]
        length: usize,
        /// Tower height L.
        #[arg(long, default_value_t = 1024)]
        height: usize,
        /// Block length N for the compared distributions.
        #[arg(long, default_value_t = 4)]
        block: usize,
        /// Distribution slack delta.
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        /// Leftover budget beta.
        #[arg(long, default_value_t = 0.1)]
        beta: f64,
        /// Number of sampled paths.
        #[arg(long, default_value_t = 1)]
        trials: usize,
        /// Master seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run an experiment described by a JSON config file.
    Experiment {
        /// Experiment config JSON file.
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = Cli::parse();
    if let Err(err) = configure_threads() {
        eprintln!("error: {err}");
        return 2;
    }
    match execute(cli.command) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_validation() {
                2
            } else {
                3
            }
        }
    }
}

/// Run one subcommand; `Ok(true)` means every verdict passed.
fn execute(command: Command) -> Result<bool> {
    match command {
        Command::Simulate {
            model,
            length,
            seed,
            output,
        } => {
            let model = load_model(&model)?;
            let path = model.sample(length, seed);
            let rendered = render_path(&model.describe(), &path, seed, &output)?;
            emit(&rendered, "simulate", &output, None)?;
            Ok(true)
        }
        Command::Estimate {
            model,
            scheme,
            length,
            seed,
            epsilon,
            output,
        } => {
            let model = load_model(&model)?;
            let scheme: SchemeDescriptor = scheme.parse()?;
            let path = model.sample(length, seed);
            let estimate = scheme.evaluate(&path)?;
            let limit = model.exact_entropy_rate().unwrap_or(f64::NAN);
            let report = ExperimentReport {
                experiment: "estimate".into(),
                config: None,
                elapsed_seconds: 0.0,
                rows: vec![Row {
                    experiment: "estimate".into(),
                    model: model.describe(),
                    scheme: scheme.to_string(),
                    n: length,
                    trial: 0,
                    estimate,
                    limit_estimate: limit,
                    within_epsilon: (estimate - limit).abs() <= epsilon,
                    seed,
                }],
                row_errors: Vec::new(),
                verdicts: Vec::new(),
            };
            emit_report(&report, &output, None)
        }
        Command::Smb {
            model,
            length,
            trials,
            epsilon,
            seed,
            output,
        } => {
            let config = ExperimentConfig::Smb {
                name: None,
                out: None,
                model: ModelRef::Path(model.to_string_lossy().into_owned()),
                lengths: vec![length],
                trials,
                epsilon,
                seed,
                min_fraction: 0.9,
            };
            emit_report(&run_experiment(&config)?, &output, None)
        }
        Command::RelativeSmb {
            model,
            length,
            epsilon,
            min_coverage,
            output,
        } => {
            let config = ExperimentConfig::RelativeSmb {
                name: None,
                out: None,
                joint: JointRef::Path(model.to_string_lossy().into_owned()),
                lengths: vec![length],
                epsilon,
                min_coverage,
            };
            emit_report(&run_experiment(&config)?, &output, None)
        }
        Command::Decompose {
            model,
            length,
            seed,
            pattern,
            height,
            epsilon,
            output,
        } => {
            let model = load_model(&model)?;
            let path = model.sample(length, seed);
            let decomp = match &pattern {
                Some(digits) => {
                    let pattern =
                        Word::from_digits(digits, model.alphabet())?;
                    kakutani_decompose(&path, &pattern, height)?
                }
                None => rohlin_tower(length, height, epsilon)?,
            };
            let rendered = render_decomposition(&decomp, &output)?;
            emit(&rendered, "decompose", &output, None)?;
            Ok(true)
        }
        Command::Recode {
            model,
            length,
            epsilon,
            alphabet,
            height,
            pattern,
            trials,
            seed,
            output,
        } => {
            let config = ExperimentConfig::RecodeRoundtrip {
                name: None,
                out: None,
                joint: JointRef::Path(model.to_string_lossy().into_owned()),
                epsilon,
                output_alphabet: alphabet,
                path_len: length,
                min_height: height,
                pattern,
                trials,
                seed,
            };
            emit_report(&run_experiment(&config)?, &output, None)
        }
        Command::Transplant {
            model,
            x_model,
            conditional,
            length,
            height,
            block,
            delta,
            beta,
            trials,
            seed,
            output,
        } => {
            let conditional = parse_conditional(&conditional)?;
            let config = ExperimentConfig::Transplant {
                name: None,
                out: None,
                y_model: ModelRef::Path(model.to_string_lossy().into_owned()),
                x_model: ModelRef::Path(
                    x_model.to_string_lossy().into_owned(),
                ),
                conditional,
                path_len: length,
                tower_height: height,
                n_block: block,
                delta,
                beta,
                trials,
                seed,
            };
            emit_report(&run_experiment(&config)?, &output, None)
        }
        Command::Experiment { config, output } => {
            let config = load_experiment(&config)?;
            let config_out = config.out().map(PathBuf::from);
            emit_report(&run_experiment(&config)?, &output, config_out)
        }
    }
}

fn parse_conditional(text: &str) -> Result<ConditionalFile> {
    if text == "identity" {
        return Ok(ConditionalFile::Identity);
    }
    if let Some(path) = text.strip_prefix("product:") {
        return Ok(ConditionalFile::ProductRight {
            right: ModelRef::Path(path.into()),
        });
    }
    Err(Error::InvalidConfig(format!(
        "unknown conditional {text:?} (expected identity or product:PATH)"
    )))
}

/// Write a report using `--out`, a config-supplied directory, or
/// stdout. Returns whether all verdicts passed.
fn emit_report(
    report: &ExperimentReport,
    output: &OutputArgs,
    config_out: Option<PathBuf>,
) -> Result<bool> {
    let format: OutputFormat = output.format.parse()?;
    let rendered = render_report(report, format)?;
    let dir = output.out.clone().or(config_out);
    match dir {
        None => print!("{rendered}"),
        Some(dir) => {
            let path = write_output(
                &dir,
                &slug(&report.experiment),
                format.extension(),
                &rendered,
            )?;
            println!("wrote {}", path.display());
            for verdict in &report.verdicts {
                println!(
                    "[{}] {}",
                    if verdict.passed { "PASS" } else { "FAIL" },
                    verdict.name
                );
            }
        }
    }
    Ok(report.passed())
}

/// Write bespoke (non-report) renderings the same way.
fn emit(
    rendered: &str,
    name: &str,
    output: &OutputArgs,
    config_out: Option<PathBuf>,
) -> Result<()> {
    let format: OutputFormat = output.format.parse()?;
    match output.out.clone().or(config_out) {
        None => print!("{rendered}"),
        Some(dir) => {
            let path =
                write_output(&dir, name, format.extension(), rendered)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn write_output(
    dir: &Path,
    name: &str,
    extension: &str,
    content: &str,
) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{name}.{extension}"));
    std::fs::write(&path, content)?;
    Ok(path)
}

fn slug(label: &str) -> String {
    let mut out = String::new();
    for c in label.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('-') {
            out.push('-');
        }
    }
    let trimmed = out.trim_matches('-');
    if trimmed.is_empty() {
        "report".into()
    } else {
        trimmed.into()
    }
}

fn render_path(
    label: &str,
    path: &Word,
    seed: u64,
    output: &OutputArgs,
) -> Result<String> {
    let format: OutputFormat = output.format.parse()?;
    Ok(match format {
        OutputFormat::Text => format!("{path}\n"),
        OutputFormat::Json => {
            serde_json::to_string_pretty(&serde_json::json!({
                "model": label,
                "n": path.len(),
                "seed": seed,
                "symbols": path.symbols(),
            }))? + "\n"
        }
        OutputFormat::Csv => {
            let mut out = String::from("position,symbol\n");
            for (i, &s) in path.symbols().iter().enumerate() {
                out.push_str(&format!("{i},{s}\n"));
            }
            out
        }
    })
}

fn render_decomposition(
    decomp: &TowerDecomposition,
    output: &OutputArgs,
) -> Result<String> {
    let format: OutputFormat = output.format.parse()?;
    Ok(match format {
        OutputFormat::Text => {
            let mut heights: Vec<usize> =
                decomp.towers().iter().map(|t| t.height).collect();
            heights.sort_unstable();
            heights.dedup();
            format!(
                "path length {}; {} towers; distinct heights {:?}; \
                 leftover fraction {:.4}\n",
                decomp.path_len(),
                decomp.towers().len(),
                heights,
                decomp.leftover_fraction()
            )
        }
        OutputFormat::Json => {
            let towers: Vec<serde_json::Value> = decomp
                .towers()
                .iter()
                .map(|t| {
                    serde_json::json!({"base": t.base, "height": t.height})
                })
                .collect();
            let leftover: Vec<serde_json::Value> = decomp
                .leftover()
                .iter()
                .map(|r| serde_json::json!({"start": r.start, "end": r.end}))
                .collect();
            serde_json::to_string_pretty(&serde_json::json!({
                "path_len": decomp.path_len(),
                "towers": towers,
                "leftover": leftover,
            }))? + "\n"
        }
        OutputFormat::Csv => {
            let mut out = String::from("tower,base,height\n");
            for (i, tower) in decomp.towers().iter().enumerate() {
                out.push_str(&format!(
                    "{i},{},{}\n",
                    tower.base, tower.height
                ));
            }
            out
        }
    })
}
