use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use name_disambig::corpus::write_records;
use name_disambig::pipeline::{self, Mode, PipelineConfig};
use name_disambig::synthetic::{gen_synthetic, SyntheticSpec};
use name_disambig::Result;

#[derive(Parser)]
#[command(name = "name-disambig", version, about = "Author name disambiguation")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Paper records, one JSON object per line.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,
    /// JSON object mapping paper id to author label.
    #[arg(long, global = true)]
    truth: Option<PathBuf>,
    /// JSON object mapping name reference to cluster count.
    #[arg(long, global = true)]
    k_file: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    Ingest,
    EmbedContent,
    EmbedRelation,
    Train,
    Cluster,
    Evaluate,
    /// Writes a planted benchmark block and its truth file.
    Synth {
        #[arg(long, default_value_t = 5)]
        authors: usize,
        #[arg(long, default_value_t = 20)]
        papers: usize,
        #[arg(long, default_value = "J. Smith")]
        name: String,
    },
    /// Runs every stage in order.
    Pipeline,
}

fn config(args: &GlobalArgs) -> Result<PipelineConfig> {
    let mut c = match &args.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    c.apply_env()?;
    if let Some(v) = &args.input {
        c.input = Some(v.clone());
    }
    if let Some(v) = &args.output {
        c.output = v.clone();
    }
    if let Some(v) = args.seed {
        c.seed = v;
    }
    if let Some(v) = args.threads {
        c.threads = Some(v);
    }
    if let Some(v) = args.mode {
        c.mode = v;
    }
    if let Some(v) = &args.truth {
        c.truth = Some(v.clone());
    }
    if let Some(v) = &args.k_file {
        c.k_file = Some(v.clone());
    }
    c.validate()?;
    Ok(c)
}

fn run(cli: Cli) -> Result<()> {
    let c = config(&cli.global)?;
    match cli.command {
        Command::Ingest => pipeline::ingest(&c).map(drop),
        Command::EmbedContent => pipeline::embed_content(&c).map(drop),
        Command::EmbedRelation => pipeline::embed_relation(&c),
        Command::Train => pipeline::train(&c),
        Command::Cluster => pipeline::cluster(&c).map(drop),
        Command::Evaluate => {
            let report = pipeline::evaluate(&c)?;
            print!("{}", report.to_json()?);
            Ok(())
        }
        Command::Synth { authors, papers, name } => {
            let corpus = gen_synthetic(&SyntheticSpec {
                name_ref: name,
                num_authors: authors,
                papers_per_author: papers,
                seed: c.seed,
                ..Default::default()
            })?;
            std::fs::create_dir_all(&c.output).map_err(|e| name_disambig::Error::Io {
                path: c.output.clone(),
                source: e,
            })?;
            write_records(&c.output.join("corpus.jsonl"), &corpus.records)?;
            pipeline::write_truth(&c.output.join("truth.json"), &corpus.truth)
        }
        Command::Pipeline => {
            let report = pipeline::run_pipeline(&c)?;
            print!("{}", report.to_json()?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
