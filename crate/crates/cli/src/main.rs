use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use claimnet::claims::{train_head, LinearHead};
use claimnet::embeddings::Embedder;
use claimnet::network::ExportFormat;
use claimnet_cli::pipeline::{parse_stages, Pipeline, StageStatus};
use claimnet_cli::{config, CliError};

#[derive(Parser)]
#[command(name = "claimnet", version, about = "Actor-claim dyad extraction and discourse networks")]
struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// Pipeline configuration (TOML).
    #[arg(short, long)]
    config: PathBuf,

    /// Override a config field, e.g. `--set claims.threshold=0.2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run pipeline stages.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated stages, or `all`.
        #[arg(long, default_value = "all")]
        stages: String,
        /// Rerun stages whose outputs are current.
        #[arg(long)]
        force: bool,
    },
    /// Validate the configuration and print its hash.
    ValidateConfig {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Write low-confidence dyads for manual curation.
    ReviewQueue {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export period networks in another format.
    Export {
        #[command(flatten)]
        config: ConfigArgs,
        /// graphml, dot or edge_csv
        #[arg(long)]
        format: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a logistic claim head from `label<TAB>sentence` rows.
    TrainHead {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        labeled: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 500)]
        epochs: usize,
        #[arg(long, default_value_t = 0.5)]
        lr: f64,
    },
}

fn read_labeled(path: &PathBuf) -> Result<Vec<(u8, String)>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (label, sentence) = line
            .split_once('\t')
            .ok_or_else(|| CliError::validation(format!("{}:{}: expected `label<TAB>sentence`", path.display(), i + 1)))?;
        let label = match label.trim() {
            "0" => 0,
            "1" => 1,
            other => return Err(CliError::validation(format!("{}:{}: label `{other}` is not 0 or 1", path.display(), i + 1))),
        };
        rows.push((label, sentence.trim().to_string()));
    }
    Ok(rows)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config: c, stages, force } => {
            let loaded = config::load(&c.config, &c.overrides)?;
            let stages = parse_stages(&stages)?;
            for (stage, status) in Pipeline::new(&loaded).run(&stages, force)? {
                let word = match status {
                    StageStatus::Ran => "done",
                    StageStatus::Skipped => "up to date",
                };
                println!("{:<9}{word}", stage.name());
            }
        }
        Command::ValidateConfig { config: c } => {
            let loaded = config::load(&c.config, &c.overrides)?;
            println!("config ok, hash {}", loaded.hash);
        }
        Command::ReviewQueue { config: c, out } => {
            let loaded = config::load(&c.config, &c.overrides)?;
            let (path, n) = Pipeline::new(&loaded).export_review_queue(out.as_deref())?;
            println!("{n} dyads queued for review in {}", path.display());
        }
        Command::Export { config: c, format, out } => {
            let loaded = config::load(&c.config, &c.overrides)?;
            let formats = if format.is_empty() {
                loaded.config.export_formats.clone()
            } else {
                format.iter().map(|f| f.parse::<ExportFormat>()).collect::<Result<_, _>>()?
            };
            let dir = Pipeline::new(&loaded).export(&formats, out.as_deref())?;
            println!("networks written to {}", dir.display());
        }
        Command::TrainHead { config: c, labeled, out, epochs, lr } => {
            let loaded = config::load(&c.config, &c.overrides)?;
            let rows = read_labeled(&labeled)?;
            let embedder = Embedder::new(loaded.config.embedding.clone())?;
            let texts: Vec<&str> = rows.iter().map(|(_, t)| t.as_str()).collect();
            let data: Vec<_> = embedder.embed(&texts)?.into_iter().zip(rows.iter().map(|(l, _)| *l)).collect();
            let head: LinearHead = train_head(&data, epochs, lr)?;
            let created = chrono::Utc::now().to_rfc3339();
            head.save(&out, &labeled.display().to_string(), &created)?;
            println!("head with {} weights written to {}", head.dim(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
