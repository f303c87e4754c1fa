use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use watsteer::config::RunConfig;
use watsteer::data::io::format_responses;
use watsteer::eval::SteerChoice;
use watsteer::lm::TemplateMode;
use watsteer::pipeline::{self, EvalOptions};
use watsteer::synth::{format_alignment, generate, SynthConfig};

#[derive(Parser)]
#[command(
    name = "watsteer",
    version,
    about = "Word-association evaluation and culture steering"
)]
struct Cli {
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Run configuration (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Accept upstream artifacts stamped with a different config hash.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    cfg: ConfigArg,
    /// Prompt template.
    #[arg(long)]
    mode: Option<TemplateMode>,
    /// Comma-separated K values, e.g. 3,5,10,20.
    #[arg(long, value_delimiter = ',')]
    ks: Option<Vec<usize>>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic two-culture response file and alignment table.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "USA,UK")]
        cultures: Vec<String>,
    },
    /// Clean responses, build norms and the train/test split.
    Ingest(ConfigArg),
    /// Pretrain the backbone language model.
    Pretrain(ConfigArg),
    /// Train the steering matrices on the training split.
    TrainSteer(ConfigArg),
    /// Evaluate on the test split.
    Eval {
        #[command(flatten)]
        args: EvalArgs,
        /// none, matched, or a culture id.
        #[arg(long, default_value = "none")]
        steer_culture: SteerChoice,
        /// Include full candidate rankings in the report.
        #[arg(long)]
        rankings: bool,
    },
    /// Cross-culture steering matrix and probability differences.
    Compare(EvalArgs),
    /// Per-chapter and per-group breakdown of an evaluation report.
    Report {
        #[command(flatten)]
        cfg: ConfigArg,
        /// Report to break down (defaults to the matched Base-mode report).
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Run every stage in order.
    Run(ConfigArg),
}

/// Failure that should exit with status 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn load_config(arg: &ConfigArg) -> anyhow::Result<RunConfig> {
    RunConfig::load(&arg.config).map_err(|e| Usage(format!("{}: {e}", arg.config.display())).into())
}

fn require_file(path: &Path, what: &str) -> anyhow::Result<()> {
    if !path.is_file() {
        return Err(Usage(format!("{what} {} does not exist", path.display())).into());
    }
    Ok(())
}

fn eval_options(args: &EvalArgs, steer: SteerChoice, rankings: bool) -> EvalOptions {
    EvalOptions {
        mode: args.mode,
        steer,
        ks: args.ks.clone(),
        keep_rankings: rankings,
        force: args.cfg.force,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Synth { out, seed, cultures } => {
            if cultures.len() != 2 {
                bail!(Usage("synth expects exactly two cultures".into()));
            }
            let cfg = SynthConfig::two_cultures(&cultures[0], &cultures[1]).map_err(|e| Usage(e.to_string()))?;
            let data = generate(&cfg, seed)?;
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            std::fs::write(out.join("responses.tsv"), format_responses(&data.responses))?;
            std::fs::write(out.join("alignment.tsv"), format_alignment(&data.cues))?;
            println!(
                "wrote {} responses for {} cues to {}",
                data.responses.len(),
                data.cues.len(),
                out.display()
            );
        }
        Command::Ingest(arg) => {
            let cfg = load_config(&arg)?;
            require_file(&cfg.paths.responses, "response file")?;
            require_file(&cfg.paths.alignment, "alignment file")?;
            let s = pipeline::ingest(&cfg)?;
            println!(
                "kept {}/{} records, {} concepts retained ({} train, {} test)",
                s.records_kept, s.records_read, s.concepts_retained, s.train_cues, s.test_cues
            );
            for (reason, n) in &s.records_rejected {
                println!("  rejected {reason:?}: {n}");
            }
            for (reason, n) in &s.responses_dropped {
                println!("  dropped {reason:?}: {n}");
            }
        }
        Command::Pretrain(arg) => {
            let cfg = load_config(&arg)?;
            let r = pipeline::run_pretrain(&cfg, arg.force)?;
            println!(
                "pretrained on {} sequences (V={}): loss {:.4} -> {:.4}",
                r.examples, r.vocab_size, r.initial_loss, r.final_loss
            );
        }
        Command::TrainSteer(arg) => {
            let cfg = load_config(&arg)?;
            let m = pipeline::run_train_steer(&cfg, arg.force)?;
            println!(
                "trained steering on {} examples ({} rejected); epoch losses {:?}",
                m.examples_used, m.examples_rejected, m.epoch_losses
            );
        }
        Command::Eval {
            args,
            steer_culture,
            rankings,
        } => {
            let cfg = load_config(&args.cfg)?;
            let (report, dir) = pipeline::run_eval(&cfg, &eval_options(&args, steer_culture, rankings))?;
            for s in report.by_culture.iter() {
                let cells: Vec<String> = s.metrics.iter().map(|m| format!("PWR@{}={:.4}", m.k, m.pwr)).collect();
                println!("{:<8} {}", s.culture, cells.join(" "));
            }
            println!("report written to {}", dir.display());
        }
        Command::Compare(args) => {
            let cfg = load_config(&args.cfg)?;
            let out = pipeline::run_compare(&cfg, &eval_options(&args, SteerChoice::None, false))?;
            for (ki, k) in out.matrix.ks.iter().enumerate() {
                println!("PWR@{k}: {}", out.matrix.columns.join(" | "));
                for (r, row) in out.matrix.rows.iter().enumerate() {
                    let cells: Vec<String> = (0..out.matrix.columns.len())
                        .map(|c| format!("{:.4}", out.matrix.pwr(r, c, ki)))
                        .collect();
                    println!("  {:<8} {}", row.culture, cells.join(" | "));
                }
            }
            println!("comparison written to {}", out.dir.display());
        }
        Command::Report { cfg: arg, input } => {
            let cfg = load_config(&arg)?;
            let path = input.unwrap_or_else(|| {
                pipeline::eval_dir(&cfg, cfg.eval.mode, &SteerChoice::Matched).join(pipeline::REPORT_FILE)
            });
            require_file(&path, "report")?;
            let b = pipeline::run_report(&cfg, &path, arg.force)?;
            println!(
                "{} chapter rows, {} group rows, {} chapters omitted",
                b.chapters.len(),
                b.groups.len(),
                b.omitted.len()
            );
        }
        Command::Run(arg) => {
            let cfg = load_config(&arg)?;
            require_file(&cfg.paths.responses, "response file")?;
            require_file(&cfg.paths.alignment, "alignment file")?;
            let all = pipeline::run_all(&cfg)?;
            for (b, m) in all.baseline.average.iter().zip(&all.matched.average) {
                println!("PWR@{}: baseline {:.4}, matched steering {:.4}", b.k, b.pwr, m.pwr);
            }
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use watsteer::Error as E;
    if err.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match err.downcast_ref::<E>() {
        Some(
            E::Config(_) | E::Parse { .. } | E::StaleArtifact { .. } | E::InvalidCulture(_) | E::DuplicateCulture(_),
        ) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
