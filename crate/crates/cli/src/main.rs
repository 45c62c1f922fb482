use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use medfed_core::experiment::{load_config, ExperimentPreset, PresetName, PrivacyVariant, Variant};
use medfed_core::sim::report::{write_csv, ManifestRun, RunManifest};
use medfed_core::sim::{self, DatasetKind, SimulationConfig, Strategy};
use medfed_core::Error;

const DATA_DIR_ENV: &str = "MEDFED_DATA_DIR";

#[derive(Debug, Parser)]
#[command(name = "medfed", version, about = "Federated learning simulator for tabular medical data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one of the built-in experiment presets.
    Preset(PresetArgs),
    /// Run from a TOML config file or a previously written manifest.
    Run(RunArgs),
}

#[derive(Debug, Args)]
struct PresetArgs {
    #[arg(long, value_parser = parse_with::<PresetName>)]
    name: PresetName,
    #[arg(long, default_value = "clean", value_parser = parse_with::<Variant>)]
    variant: Variant,
    #[arg(long, default_value = "none", value_parser = parse_with::<PrivacyVariant>)]
    privacy: PrivacyVariant,
    /// Comma-separated subset of fedavg, comed, mkrum, afa.
    #[arg(long, value_delimiter = ',', default_value = "fedavg,comed,mkrum,afa", value_parser = parse_with::<Strategy>)]
    strategies: Vec<Strategy>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// `.toml` config or `.json` manifest.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Directory holding pima.csv and heart.csv.
    #[arg(long, env = DATA_DIR_ENV, default_value = "data")]
    data_dir: PathBuf,
    /// Train clients of a round on all cores.
    #[arg(long)]
    parallel: bool,
}

fn parse_with<T: std::str::FromStr<Err = Error>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Usage(String),
    Data(String),
    Runtime(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidArgument(_) | Error::Json(_) => Failure::Usage(e.to_string()),
            Error::Ingestion { .. } | Error::EmptyDataset { .. } | Error::Csv(_) => Failure::Data(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn download_hint(dataset: DatasetKind, path: &Path) -> String {
    let source = match dataset {
        DatasetKind::Pima => {
            "the Pima Indians Diabetes data (UCI / Kaggle `diabetes.csv`), 768 rows with header \
             Pregnancies,Glucose,BloodPressure,SkinThickness,Insulin,BMI,DiabetesPedigreeFunction,Age,Outcome"
        }
        DatasetKind::Heart => {
            "the UCI Heart Disease Cleveland file `processed.cleveland.data`, 303 rows, with the header \
             age,sex,cp,trestbps,chol,fbs,restecg,thalach,exang,oldpeak,slope,ca,thal,num prepended"
        }
    };
    format!(
        "dataset file {} not found; download {source} and save it there, or point --data-dir / {DATA_DIR_ENV} at a directory containing {}",
        path.display(),
        dataset.file_name()
    )
}

fn check_data(cfgs: &[SimulationConfig]) -> Result<(), Failure> {
    for cfg in cfgs {
        if !cfg.data_path.is_file() {
            return Err(Failure::Data(download_hint(cfg.dataset, &cfg.data_path)));
        }
    }
    Ok(())
}

fn run_all(cfgs: Vec<SimulationConfig>, prefix: &str, out: &Path, notes: Vec<String>) -> Result<(), Failure> {
    check_data(&cfgs)?;
    fs::create_dir_all(out).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", out.display())))?;
    let mut runs = Vec::new();
    for cfg in cfgs {
        let outcome = sim::run(&cfg)?;
        let csv_name = format!("{prefix}_{}.csv", cfg.strategy);
        let csv_path = out.join(&csv_name);
        let file = fs::File::create(&csv_path)
            .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", csv_path.display())))?;
        write_csv(file, cfg.strategy, &outcome.metrics)?;
        let blocked: Vec<String> = outcome.block_events().iter().map(|e| format!("{}@{}", e.client_id, e.round)).collect();
        println!(
            "{:<7} rounds={} final_error={:.4} blocked=[{}] -> {}",
            cfg.strategy,
            outcome.metrics.len(),
            outcome.final_error().unwrap_or(f64::NAN),
            blocked.join(","),
            csv_path.display()
        );
        if let Some(t) = &outcome.terminal {
            println!("{:<7} stopped at round {}: {}", cfg.strategy, t.round, t.reason);
        }
        runs.push(ManifestRun::new(&cfg, &outcome, csv_name));
    }
    let mut manifest = RunManifest::new(runs);
    manifest.notes = notes;
    let path = out.join(format!("{prefix}_manifest.json"));
    fs::write(&path, manifest.to_json()?)
        .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))?;
    println!("manifest -> {}", path.display());
    Ok(())
}

fn preset(args: PresetArgs) -> Result<(), Failure> {
    if args.strategies.is_empty() {
        return Err(Failure::Usage("--strategies must name at least one strategy".into()));
    }
    let preset = ExperimentPreset::new(args.name, args.variant, args.privacy);
    let cfgs = args
        .strategies
        .iter()
        .map(|&s| {
            let mut cfg = preset.resolve(s, args.seed, &args.common.data_dir);
            cfg.parallel_clients = args.common.parallel;
            cfg
        })
        .collect();
    let prefix = format!("{}_{}_{}", args.name, args.variant, args.privacy);
    let notes = vec![format!("preset {prefix}, seed {}", args.seed)];
    run_all(cfgs, &prefix, &args.out, notes)
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let path = &args.config;
    if !path.is_file() {
        return Err(Failure::Usage(format!("config file {} not found", path.display())));
    }
    let is_manifest = path.extension().is_some_and(|e| e == "json");
    let (mut cfgs, prefix) = if is_manifest {
        let manifest = RunManifest::load(path)?;
        let cfgs: Vec<SimulationConfig> = manifest.configs().cloned().collect();
        for cfg in &cfgs {
            cfg.validate()?;
        }
        (cfgs, "replay".to_string())
    } else {
        let file = load_config(path)?;
        let p = file.preset();
        (file.resolve(&args.common.data_dir)?, format!("{}_{}_{}", p.name, p.variant, p.privacy))
    };
    if cfgs.is_empty() {
        return Err(Failure::Usage("config describes no runs".into()));
    }
    if args.common.parallel {
        for cfg in &mut cfgs {
            cfg.parallel_clients = true;
        }
    }
    let notes = vec![format!("from {}", path.display())];
    run_all(cfgs, &prefix, &args.out, notes)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Preset(args) => preset(args),
        Command::Run(args) => run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
