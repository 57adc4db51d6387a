use bgnlm::config::RunConfig;
use bgnlm::data::load_csv;
use bgnlm::experiments::{run_detection, run_enumeration, DetectionExperiment};
use bgnlm::feature::{count_features, CountMode};
use bgnlm::run::{fit, predict_csv, write_predictions, write_run, FitArtifact, MetricBlock};
use bgnlm::Error;
use clap::{Arg, ArgAction, ArgMatches, Command};
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

const THREADS_ENV: &str = "BGNLM_THREADS";

/// Error tagged with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::ScaleGuard { .. } => 2,
            Error::Parse { .. } | Error::UnknownColumn(_) | Error::EmptyAfterFiltering | Error::Io(_) => 3,
            Error::Dimension(_) => 3,
            _ => 4,
        };
        Failure { code, message: e.to_string() }
    }
}

fn config_error(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

fn cli() -> Command {
    let mut fit = Command::new("fit")
        .about("Fit a model to a CSV file and write a run directory")
        .arg(Arg::new("data").long("data").required(true).help("Training CSV with a header row"))
        .arg(Arg::new("config").long("config").help("Flat TOML configuration file"));
    for key in RunConfig::keys() {
        fit = fit.arg(
            Arg::new(key.clone())
                .long(key.replace('_', "-"))
                .value_name("VALUE")
                .help(format!("Overrides `{key}`")),
        );
    }
    Command::new("bgnlm")
        .about("Bayesian generalized nonlinear models")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg(Arg::new("verbose").short('v').long("verbose").action(ArgAction::Count).global(true))
        .subcommand(fit)
        .subcommand(
            Command::new("predict")
                .about("Model-averaged predictions from a fitted run")
                .arg(Arg::new("store").long("store").required(true).help("store.json or the run directory"))
                .arg(Arg::new("data").long("data").required(true).help("CSV with the training columns"))
                .arg(Arg::new("eta").long("eta").value_parser(clap::value_parser!(f64)))
                .arg(Arg::new("out").long("out").help("Prediction CSV (default: stdout)")),
        )
        .subcommand(
            Command::new("count-features")
                .about("Number of features of depth d over m inputs and |G| transforms")
                .arg(Arg::new("m").long("m").required(true).value_parser(clap::value_parser!(usize)))
                .arg(Arg::new("gsize").long("gsize").required(true).value_parser(clap::value_parser!(usize)))
                .arg(Arg::new("depth").long("depth").required(true).value_parser(clap::value_parser!(usize)))
                .arg(Arg::new("mode").long("mode").default_value("full").help("full or lower_bound")),
        )
        .subcommand(
            Command::new("experiment")
                .about("Synthetic recovery experiments")
                .arg(Arg::new("name").required(true).help("kepler, mass, logic or enumeration"))
                .arg(Arg::new("replicates").long("replicates").default_value("10").value_parser(clap::value_parser!(usize)))
                .arg(Arg::new("threads").long("threads").default_value("4").value_parser(clap::value_parser!(usize)))
                .arg(Arg::new("seed").long("seed").default_value("1").value_parser(clap::value_parser!(u64)))
                .arg(Arg::new("json").long("json").help("Also write the full report as JSON here")),
        )
}

/// Writes log lines to stderr and, once attached, to a file.
#[derive(Clone, Default)]
struct Tee {
    file: Arc<Mutex<Option<File>>>,
}

impl Write for Tee {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        if let Ok(mut f) = self.file.lock() {
            if let Some(f) = f.as_mut() {
                f.write_all(buf)?;
            }
        }
        std::io::stderr().write_all(buf)?;
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        std::io::stderr().flush()
    }
}

fn init_logging(verbosity: u8, tee: &Tee) {
    let level = match verbosity {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_timestamp_secs()
        .target(env_logger::Target::Pipe(Box::new(tee.clone())))
        .init();
}

fn threads_override() -> Result<Option<usize>, Failure> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&b| b > 0)
            .map(Some)
            .ok_or_else(|| config_error(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

fn cmd_fit(m: &ArgMatches, tee: &Tee) -> Result<(), Failure> {
    let mut cfg = match m.get_one::<String>("config") {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for key in RunConfig::keys() {
        if let Some(v) = m.get_one::<String>(&key) {
            cfg.set(&key, v)?;
        }
    }
    if let Some(b) = threads_override()? {
        cfg.threads = b;
    }
    cfg.validate()?;
    let data_path = m.get_one::<String>("data").expect("required");
    let data = load_csv::<f64>(data_path, Some(&cfg.response), &cfg.categorical_columns())?;
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let dir = Path::new(&cfg.output_dir).join(format!("run_{stamp}_{}", cfg.seed));
    std::fs::create_dir_all(&dir).map_err(Error::from)?;
    if let Ok(mut f) = tee.file.lock() {
        *f = File::create(dir.join("log.txt")).ok();
    }
    log::info!("fitting {} rows, {} columns from {data_path}; {} dropped", data.n(), data.m(), data.dropped_rows);
    let outcome = fit(&cfg, data)?;
    write_run(&outcome, &cfg, &dir)?;
    let top = outcome.aggregate.detected(cfg.detection_threshold);
    println!("run directory: {}", dir.display());
    println!("chains: {} ok, {} failed; {:.1}s", outcome.chains.len(), outcome.failures.len(), outcome.seconds);
    println!("features with posterior > {}:", cfg.detection_threshold);
    let names = &outcome.artifact.columns;
    for (key, p) in top {
        let shown = outcome
            .chains
            .iter()
            .find_map(|c| c.features.get(key))
            .map(|f| f.display_with(names))
            .unwrap_or_else(|| key.to_string());
        println!("  {p:.4}  {shown}");
    }
    Ok(())
}

fn cmd_predict(m: &ArgMatches) -> Result<(), Failure> {
    let mut store = PathBuf::from(m.get_one::<String>("store").expect("required"));
    if store.is_dir() {
        store = store.join("store.json");
    }
    let artifact = FitArtifact::load(&store)?;
    let eta = m.get_one::<f64>("eta").copied().unwrap_or(artifact.eta);
    if !(0.0..=1.0).contains(&eta) {
        return Err(config_error(format!("eta must lie in [0, 1], got {eta}")));
    }
    let data = PathBuf::from(m.get_one::<String>("data").expect("required"));
    let out = predict_csv(&artifact, &data, eta)?;
    match m.get_one::<String>("out") {
        Some(p) => write_predictions(&out.report, File::create(p).map_err(Error::from)?)?,
        None => write_predictions(&out.report, std::io::stdout().lock())?,
    }
    match out.metrics {
        Some(MetricBlock::Classification(c)) => {
            let show = |v: Option<f64>| v.map_or("NA".to_string(), |v| format!("{v:.4}"));
            eprintln!("ACC {:.4}  FNR {}  FPR {}", c.acc, show(c.fnr), show(c.fpr));
        }
        Some(MetricBlock::Regression(r)) => {
            let corr = r.corr.map_or("NA".to_string(), |v| format!("{v:.4}"));
            eprintln!("RMSE {:.4}  MAE {:.4}  CORR {corr}", r.rmse, r.mae);
        }
        None => {}
    }
    Ok(())
}

fn cmd_count(m: &ArgMatches) -> Result<(), Failure> {
    let mode: CountMode = m.get_one::<String>("mode").expect("default").parse()?;
    let n = count_features(
        *m.get_one::<usize>("m").expect("required"),
        *m.get_one::<usize>("gsize").expect("required"),
        *m.get_one::<usize>("depth").expect("required"),
        mode,
    )?;
    println!("{n}");
    Ok(())
}

fn cmd_experiment(m: &ArgMatches) -> Result<(), Failure> {
    let name = m.get_one::<String>("name").expect("required");
    let reps = *m.get_one::<usize>("replicates").expect("default");
    let threads = threads_override()?.unwrap_or(*m.get_one::<usize>("threads").expect("default"));
    let seed = *m.get_one::<u64>("seed").expect("default");
    let json = m.get_one::<String>("json");
    if name == "enumeration" {
        let seeds: Vec<u64> = (seed..seed + reps as u64).collect();
        let rep = run_enumeration(4, 500, &seeds)?;
        print!("{}", rep.table());
        if let Some(p) = json {
            serde_json::to_writer_pretty(File::create(p).map_err(Error::from)?, &rep).map_err(Error::from)?;
        }
        return Ok(());
    }
    let exp = DetectionExperiment::by_name(name, reps, threads, seed)?;
    let rep = run_detection(name, &exp, |i, r| {
        log::info!("replicate {} done in {:.1}s, {} detections", i + 1, r.seconds, r.detected.len());
    })?;
    print!("{}", rep.table());
    if let Some(p) = json {
        serde_json::to_writer_pretty(File::create(p).map_err(Error::from)?, &rep).map_err(Error::from)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let tee = Tee::default();
    init_logging(matches.get_count("verbose"), &tee);
    let result = match matches.subcommand() {
        Some(("fit", m)) => cmd_fit(m, &tee),
        Some(("predict", m)) => cmd_predict(m),
        Some(("count-features", m)) => cmd_count(m),
        Some(("experiment", m)) => cmd_experiment(m),
        _ => Err(config_error("unknown command")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
