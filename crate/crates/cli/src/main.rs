use std::net::SocketAddr;
use std::path::PathBuf;

use anyhow::bail;
use clap::{Parser, Subcommand, ValueEnum};

use teachable_cli::{ExportModel, ExportSource};
use teachable_core::corpus::{CorpusSpec, Renderer};
use teachable_core::teach::{HeadSpec, SoftmaxParams, DEFAULT_K};

#[derive(Parser)]
#[command(name = "teach", version, about = "Offline teaching workflows and the local service")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum HeadArg {
    Auto,
    Softmax,
    Knn,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic labeled corpus.
    GenCorpus {
        #[arg(long, value_parser = parse_renderer)]
        renderer: Renderer,
        #[arg(long)]
        classes: usize,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 128)]
        width: u32,
        #[arg(long, default_value_t = 96)]
        height: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a head on a labeled directory and report held-out accuracy.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        head: HeadArg,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: usize,
        /// Softmax overrides; unset values keep the head's schedule.
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        l2: Option<f64>,
        #[arg(long, default_value = "model.json")]
        out: PathBuf,
    },
    /// Confusion matrix of a project's model on labeled data.
    Eval {
        #[arg(long)]
        project: PathBuf,
        /// Use this model file instead of the project's.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Labeled directory; defaults to the project's own samples.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Run recorded frames through a project and write the event log.
    Replay {
        #[arg(long)]
        project: PathBuf,
        #[arg(long)]
        frames: PathBuf,
        /// Synthesize timestamps instead of reading them from file names.
        #[arg(long)]
        fps: Option<f64>,
        #[arg(long, default_value = "timeline.ndjson")]
        out: PathBuf,
    },
    /// Run the local HTTP service.
    Serve {
        #[arg(long, default_value = teachable_service::DEFAULT_LISTEN)]
        listen: SocketAddr,
    },
    /// Write a project bundle from a corpus or an existing project.
    Export {
        #[arg(long, conflicts_with = "project", requires = "renderer")]
        from_corpus: Option<PathBuf>,
        #[arg(long, value_parser = parse_renderer)]
        renderer: Option<Renderer>,
        #[arg(long)]
        project: Option<PathBuf>,
        #[arg(long, conflicts_with = "train")]
        model: Option<PathBuf>,
        #[arg(long)]
        train: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_renderer(s: &str) -> Result<Renderer, String> {
    s.parse().map_err(|e: teachable_core::corpus::CorpusError| e.to_string())
}

fn head_spec(head: HeadArg, k: usize, lr: Option<f64>, epochs: Option<usize>, l2: Option<f64>) -> HeadSpec {
    let base = match head {
        HeadArg::Knn => return HeadSpec::Knn { k },
        HeadArg::Auto if lr.is_none() && epochs.is_none() && l2.is_none() => return HeadSpec::Auto,
        HeadArg::Auto => SoftmaxParams::AUTO,
        HeadArg::Softmax => SoftmaxParams::default(),
    };
    HeadSpec::Softmax(SoftmaxParams {
        lr: lr.unwrap_or(base.lr),
        epochs: epochs.unwrap_or(base.epochs),
        l2: l2.unwrap_or(base.l2),
    })
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::GenCorpus { renderer, classes, samples, seed, width, height, out } => {
            let spec = CorpusSpec { width, height, ..CorpusSpec::new(renderer, classes, samples, seed) };
            let labels = teachable_cli::gen_corpus(&spec, &out)?;
            println!("wrote {} samples, labels in {}", classes * samples, labels.display());
        }
        Command::Train { data, head, k, lr, epochs, l2, out } => {
            let report = teachable_cli::train(&data, &head_spec(head, k, lr, epochs, l2), &out)?;
            println!("{}", report.summary());
            println!("model written to {}", out.display());
        }
        Command::Eval { project, model, data } => {
            let report = teachable_cli::eval(&project, model.as_deref(), data.as_deref())?;
            print!("{}", report.render());
        }
        Command::Replay { project, frames, fps, out } => {
            let events = teachable_cli::replay(&project, &frames, fps, &out)?;
            let changes = events.iter().filter(|e| e.kind() == "stateChanged").count();
            println!("{} events ({changes} state changes) written to {}", events.len(), out.display());
        }
        Command::Serve { listen } => teachable_cli::serve(listen)?,
        Command::Export { from_corpus, renderer, project, model, train, out } => {
            let source = match (&from_corpus, renderer, &project) {
                (Some(dir), Some(renderer), None) => ExportSource::Corpus { dir, renderer },
                (None, _, Some(path)) => ExportSource::Project(path),
                _ => bail!("pass either --from-corpus with --renderer, or --project"),
            };
            let model = match (&model, train) {
                (Some(path), _) => ExportModel::File(path),
                (None, true) => ExportModel::Train,
                (None, false) => ExportModel::Keep,
            };
            let p = teachable_cli::export(&source, &model, &out)?;
            let trained = if p.model.is_some() { "with" } else { "without" };
            println!("exported {:?} {trained} a model to {}", p.name, out.display());
        }
    }
    Ok(())
}
