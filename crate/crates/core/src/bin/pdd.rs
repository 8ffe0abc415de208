//! Batch CLI over the pipeline stages. Each subcommand reads a JSON run
//! config, writes artifacts into the config's output directory, and exits
//! 0 on success, 1 on usage or config errors, 2 on data validation
//! errors, 3 on internal errors. `PDD_LOG` sets log verbosity.

use std::error::Error as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pdd_core::config::PipelineConfig;
use pdd_core::ingest::synth::NoiseProfile;
use pdd_core::pipeline::{
    run_build_graph, run_eval, run_link, run_synth, run_train, PipelineError,
};

#[derive(Parser)]
#[command(
    name = "pdd",
    version,
    about = "Link EMR drug mentions and diagnosis codes, then build a patient-fact graph"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the name-translation table from the drug KB
    Train(RunArgs),
    /// Decide a KB link for every distinct mention and diagnosis code
    Link(RunArgs),
    /// Materialize patient facts as N-Triples plus a statistics report
    BuildGraph(RunArgs),
    /// Score link decisions against gold labels
    Eval(EvalArgs),
    /// Generate a synthetic corpus with a ready-to-run config
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Run config (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Override the config's output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Gold labels file; overrides the config's gold_links
    #[arg(long)]
    gold: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Directory to write the corpus into
    #[arg(long)]
    out: PathBuf,
    /// RNG seed; the corpus is a pure function of seed, sizes, profile
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Number of patients
    #[arg(long, default_value_t = 100)]
    patients: usize,
    /// Number of drug KB entries
    #[arg(long = "kb-drugs", default_value_t = 25)]
    kb_drugs: usize,
    /// Mention noise profile
    #[arg(long, value_enum, default_value_t = ProfileArg::MimicLike)]
    profile: ProfileArg,
}

#[derive(Debug, Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ProfileArg {
    /// Every mention is a canonical KB name
    #[value(name = "clean")]
    Clean,
    /// Corrupted mentions, aliases, and unlinkable solution names
    #[value(name = "mimic_like", alias = "mimic-like")]
    MimicLike,
}

impl From<ProfileArg> for NoiseProfile {
    fn from(arg: ProfileArg) -> Self {
        match arg {
            ProfileArg::Clean => NoiseProfile::Clean,
            ProfileArg::MimicLike => NoiseProfile::MimicLike,
        }
    }
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("PDD_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.exit_code() == 0 { 0 } else { 1 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = e.source();
            while let Some(inner) = source {
                eprintln!("  caused by: {inner}");
                source = inner.source();
            }
            e.exit_code()
        }
    }
}

fn load_config(args: &RunArgs) -> Result<PipelineConfig, PipelineError> {
    let mut config = PipelineConfig::load(&args.config)?;
    if let Some(out) = &args.out {
        config.output_dir = out.clone();
    }
    Ok(config)
}

fn dispatch(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Train(args) => {
            let config = load_config(&args)?;
            let artifacts = run_train(&config)?;
            println!(
                "trained in {} iterations, final log-likelihood {}",
                artifacts.iterations, artifacts.final_log_likelihood
            );
            println!("wrote {}", artifacts.table_path.display());
            println!("wrote {}", artifacts.trace_path.display());
        }
        Command::Link(args) => {
            let config = load_config(&args)?;
            let artifacts = run_link(&config)?;
            let linked = artifacts
                .decisions
                .values()
                .filter(|d| d.linked_kb_id().is_some())
                .count();
            println!(
                "linked {linked} of {} distinct drug mentions",
                artifacts.decisions.len()
            );
            println!(
                "linked {} of {} distinct diagnosis codes",
                artifacts.disease_links.values().filter(|d| d.linked).count(),
                artifacts.disease_links.len()
            );
            println!("wrote {}", artifacts.decisions_path.display());
            println!("wrote {}", artifacts.disease_links_path.display());
        }
        Command::BuildGraph(args) => {
            let config = load_config(&args)?;
            let artifacts = run_build_graph(&config)?;
            println!("wrote {} triples", artifacts.triple_count);
            println!("wrote {}", artifacts.graph_path.display());
            println!("wrote {}", artifacts.statistics_json_path.display());
            println!("wrote {}", artifacts.statistics_text_path.display());
        }
        Command::Eval(args) => {
            let config = load_config(&args.run)?;
            let artifacts = run_eval(&config, args.gold.as_deref())?;
            print!("{}", artifacts.report.render_text());
            println!("wrote {}", artifacts.report_json_path.display());
            println!("wrote {}", artifacts.report_text_path.display());
        }
        Command::Synth(args) => {
            let artifacts = run_synth(
                &args.out,
                args.seed,
                args.patients,
                args.kb_drugs,
                args.profile.into(),
            )?;
            println!(
                "wrote corpus: {} patients, {} prescriptions, {} diagnoses, {} KB entries",
                artifacts.patients,
                artifacts.prescriptions,
                artifacts.diagnoses,
                artifacts.kb_entries
            );
            println!("wrote {}", artifacts.config_path.display());
        }
    }
    Ok(())
}
