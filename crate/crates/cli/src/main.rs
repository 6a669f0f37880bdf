use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use iwbench::harness::{self, HarnessError};
use iwbench::mcot::{self, McotConfig, ModelAdapter, ScriptedModel, Selection, SubprocessModel};
use iwbench::render::{RendererCommand, VisualOracleConfig};
use iwbench::{dom, simplify, som, EvalConfig};

#[derive(Parser)]
#[command(name = "iwb", version, about = "Element and layout accuracy for generated web pages")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score every sample of a manifest and write the aggregate report.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.9)]
        threshold: f64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Compare one candidate page with its reference.
    EvalPair {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long = "cand")]
        candidate: PathBuf,
        #[arg(long, default_value_t = 0.9)]
        threshold: f64,
    },
    /// Remove elements that do not change the rendered page.
    Simplify {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, env = "IWB_RENDERER")]
        renderer: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        max_delta: u8,
        #[arg(long, default_value_t = 0.0)]
        max_frac: f64,
    },
    /// Print the complexity level of a page.
    Classify { page: PathBuf },
    /// Add numbered Set-of-Mark badges to a page.
    Som {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Remove Set-of-Mark badges from a page.
    StripSom {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a page from a screenshot with the five-hop pipeline.
    Mcot {
        #[arg(long)]
        image: PathBuf,
        #[arg(long = "ref")]
        reference: Option<PathBuf>,
        /// Model command reading the request JSON on stdin.
        #[arg(long, required_unless_present = "mock", conflicts_with = "mock")]
        model: Option<String>,
        /// Scripted responses instead of a model.
        #[arg(long)]
        mock: Option<PathBuf>,
        #[arg(long, env = "IWB_RENDERER")]
        renderer: String,
        #[arg(short = 'N', default_value_t = 3)]
        reflections: usize,
        /// Defaults to best when --ref is given, last otherwise.
        #[arg(long, value_enum)]
        select: Option<Select>,
        #[arg(long)]
        transcript: Option<PathBuf>,
        /// Where to write the selected page; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        run_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 0.9)]
        threshold: f64,
    },
    /// Rank correlation of two rankings given as JSON arrays.
    Corr {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Select {
    Best,
    Last,
}

/// Exit status 2 for bad input, 1 for failures while evaluating.
enum Failure {
    Usage(anyhow::Error),
    Eval(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Eval(e)
    }
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn harness_failure(e: HarnessError) -> Failure {
    match e {
        HarnessError::Parse { .. } => Failure::Eval(e.into()),
        _ => Failure::Usage(e.into()),
    }
}

fn threshold_config(threshold: f64) -> Result<EvalConfig, Failure> {
    let config = EvalConfig::with_threshold(threshold);
    if !config.is_valid() {
        return Err(usage(anyhow!("--threshold must lie in [0, 1]")));
    }
    Ok(config)
}

fn renderer(template: &str) -> Result<RendererCommand, Failure> {
    RendererCommand::new(template).map_err(usage)
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display())).map_err(Failure::Eval)
}

fn read_tree(path: &Path) -> Result<dom::DomTree, Failure> {
    harness::read_document(path).map_err(harness_failure)
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Eval { manifest, out, threshold, jobs, csv } => {
            let config = threshold_config(threshold)?;
            let samples = harness::load_manifest(&manifest).map_err(usage)?;
            let report = harness::eval_manifest(&samples, &config, jobs).map_err(usage)?;
            write(&out, &report.to_json())?;
            if let Some(csv) = csv {
                write(&csv, &report.to_csv())?;
            }
            let failed = report.failed();
            if failed > 0 {
                return Err(Failure::Eval(anyhow!("{failed} of {} samples failed", report.per_sample.len())));
            }
        }
        Command::EvalPair { reference, candidate, threshold } => {
            let config = threshold_config(threshold)?;
            let report = harness::eval_pair(&reference, &candidate, &config).map_err(harness_failure)?;
            println!("{}", serde_json::to_string_pretty(&report).context("serializing report")?);
        }
        Command::Simplify { input, renderer: template, out, log, max_delta, max_frac } => {
            let oracle = VisualOracleConfig { max_channel_delta: max_delta, max_differing_pixel_fraction: max_frac };
            if !oracle.is_valid() {
                return Err(usage(anyhow!("--max-frac must lie in [0, 1]")));
            }
            let command = renderer(&template)?;
            let tree = read_tree(&input)?;
            let workdir = tempfile::tempdir().context("creating work directory")?;
            let (simplified, attempts) = match simplify::simplify(&tree, command, &oracle, workdir.path()) {
                Ok(result) => result,
                Err(e) => {
                    if let (simplify::SimplifyError::Renderer { log: partial, .. }, Some(path)) = (&e, &log) {
                        write(path, &serde_json::to_string_pretty(partial).context("serializing log")?)?;
                    }
                    return Err(Failure::Eval(e.into()));
                }
            };
            if let Some(path) = log {
                write(&path, &serde_json::to_string_pretty(&attempts).context("serializing log")?)?;
            }
            match out {
                Some(path) => write(&path, &simplified.serialize())?,
                None => println!("{}", simplified.serialize()),
            }
            eprintln!(
                "removed {} of {} elements in {} attempts",
                attempts.initial_count - attempts.final_count,
                attempts.initial_count,
                attempts.attempts.len()
            );
        }
        Command::Classify { page } => {
            let level = simplify::classify(&read_tree(&page)?);
            println!("{}", serde_json::to_string_pretty(&level).context("serializing level")?);
        }
        Command::Som { input, out } => {
            let annotation = som::som_inject(&read_tree(&input)?).map_err(usage)?;
            write(&out, &annotation.rewritten.serialize())?;
            eprintln!("{} elements labeled", annotation.labels.len());
        }
        Command::StripSom { input, out } => {
            write(&out, &som::strip_som(&read_tree(&input)?).serialize())?;
        }
        Command::Mcot {
            image,
            reference,
            model,
            mock,
            renderer: template,
            reflections,
            select,
            transcript,
            out,
            run_dir,
            threshold,
        } => {
            threshold_config(threshold)?;
            let mut command = renderer(&template)?;
            let source = reference
                .as_deref()
                .map(|p| std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display())))
                .transpose()
                .map_err(Failure::Usage)?;
            let selection = match (select, &source) {
                (Some(Select::Best), _) | (None, Some(_)) => Selection::BestByMetric,
                (Some(Select::Last), _) | (None, None) => Selection::Last,
            };
            let config = McotConfig { reflection_iters: reflections, selection, threshold };
            let mut adapter: Box<dyn ModelAdapter> = match (model, mock) {
                (Some(cmd), _) => Box::new(SubprocessModel::new(&cmd).map_err(usage)?),
                (None, Some(path)) => Box::new(ScriptedModel::from_path(&path).map_err(usage)?),
                (None, None) => return Err(usage(anyhow!("one of --model or --mock is required"))),
            };
            let run_dir = match run_dir {
                Some(dir) => dir,
                None => {
                    tempfile::Builder::new().prefix("iwb-mcot-").tempdir().context("creating run directory")?.keep()
                }
            };
            let result =
                mcot::run_pipeline(&image, source.as_deref(), &config, adapter.as_mut(), &mut command, &run_dir);
            let (html, record) = result.map_err(|e| match e {
                mcot::McotError::SelectionNeedsReference
                | mcot::McotError::MissingImage(_)
                | mcot::McotError::Reference(_) => usage(e),
                other => Failure::Eval(other.into()),
            })?;
            if let Some(path) = transcript {
                write(&path, &serde_json::to_string_pretty(&record).context("serializing transcript")?)?;
            }
            match out {
                Some(path) => write(&path, &html)?,
                None => println!("{html}"),
            }
            eprintln!("artifacts in {}", run_dir.display());
        }
        Command::Corr { a, b } => {
            let rho = harness::corr(&a, &b).map_err(usage)?;
            println!("{rho:.4}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("iwb: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Eval(e)) => {
            eprintln!("iwb: {e:#}");
            ExitCode::from(1)
        }
    }
}
