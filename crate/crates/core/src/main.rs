use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fefi::harness::{format_summary, read_results, run_experiment, DatasetChoice, ExperimentConfig};
use fefi::learners::{train, Hyperparams, LearnerKind};
use fefi::synthgen::{generate_dataset, interaction_report, pearson_matrix, write_dataset, SyntheticSpec};
use fefi::table::DataSubset;
use fefi::FefiError;

#[derive(Parser)]
#[command(name = "fefi", version, about = "Fuzzy ensemble feature importance benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one benchmark dataset with its correlation matrix.
    Generate {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=9))]
        dataset: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "data")]
        out: PathBuf,
        /// Also fit a gradient-boosting model and report pairwise H-statistics.
        #[arg(long)]
        interactions: bool,
    },
    /// Run the fusion benchmark and write results and artifacts.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=9))]
        dataset: Option<u64>,
        #[arg(long)]
        k: Option<usize>,
        /// Comma-separated replicate seeds.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        subset: Option<DataSubset>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the seed-averaged summary of an existing results.csv.
    Report {
        #[arg(default_value = "results/results.csv")]
        results: PathBuf,
    },
}

enum Failure {
    Config(FefiError),
    Runtime(FefiError),
}

fn build_config(
    config: Option<PathBuf>,
    dataset: Option<u64>,
    k: Option<usize>,
    seeds: Option<Vec<u64>>,
    subset: Option<DataSubset>,
    out: Option<PathBuf>,
) -> Result<ExperimentConfig, FefiError> {
    let mut c = match config {
        Some(path) => ExperimentConfig::load(&path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(d) = dataset {
        c.datasets = vec![DatasetChoice::Benchmark(d as usize)];
    }
    if let Some(k) = k {
        c.k = k;
    }
    if let Some(s) = seeds {
        c.seeds = s;
    }
    if let Some(s) = subset {
        c.subsets = vec![s];
    }
    if let Some(o) = out {
        c.output_dir = o;
    }
    c.validate()?;
    Ok(c)
}

fn generate(dataset: u64, seed: u64, out: PathBuf, interactions: bool) -> Result<(), FefiError> {
    let spec = SyntheticSpec::benchmark(dataset as usize, seed)?;
    let data = generate_dataset(&spec)?;
    let stem = format!("dataset_{dataset}_{seed}");
    write_dataset(&data, &out, &stem)?;
    let corr = pearson_matrix(&data.features)?;
    let corr_path = out.join(format!("{stem}_correlation.csv"));
    let mut w = csv::Writer::from_path(&corr_path)?;
    for row in &corr {
        w.write_record(row.iter().map(f64::to_string))?;
    }
    w.flush().map_err(|e| FefiError::io(&corr_path, e))?;
    println!("wrote {} ({} x {})", out.join(format!("{stem}.csv")).display(), data.n_instances(), data.n_features());
    if interactions {
        let kind = LearnerKind::GradientBoosting;
        let model = train(kind, &Hyperparams::default_for(kind), &data.features, &data.targets, seed)?;
        let report = interaction_report(&model, &data.features, 10, 200)?;
        let path = out.join(format!("{stem}_interactions.json"));
        std::fs::write(&path, serde_json::to_string_pretty(&report)?).map_err(|e| FefiError::io(&path, e))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Generate {
            dataset,
            seed,
            out,
            interactions,
        } => generate(dataset, seed, out, interactions).map_err(Failure::Runtime),
        Command::Run {
            config,
            dataset,
            k,
            seeds,
            subset,
            out,
        } => {
            let config = build_config(config, dataset, k, seeds, subset, out).map_err(Failure::Config)?;
            let outcome = run_experiment(&config).map_err(Failure::Runtime)?;
            print!("{}", format_summary(&outcome.rows));
            for s in &outcome.significance {
                println!(
                    "dataset {} {}: FEFI vs {} Wilcoxon p = {:.3e} over {} pairs",
                    s.dataset, s.subset, s.baseline, s.p_value, s.pairs
                );
            }
            println!("results written to {}", config.output_dir.join("results.csv").display());
            Ok(())
        }
        Command::Report { results } => {
            let rows = read_results(&results).map_err(Failure::Runtime)?;
            print!("{}", format_summary(&rows));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("configuration error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
