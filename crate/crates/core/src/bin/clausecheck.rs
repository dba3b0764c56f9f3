use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use clausecheck::aggregate::{
    fit_label_model, registry_names, train_classifier, ConfidenceTable, LabelModelParams, Prediction, TrainMode,
};
use clausecheck::catalog::{build_catalog, catalog_hash, BuildOptions};
use clausecheck::exec::Database;
use clausecheck::harness::config::{BackendKind, HarnessConfig};
use clausecheck::harness::dataset::{load_examples, DatasetExample};
use clausecheck::harness::eval::{
    eval_correction, eval_detection, signal_microbench, CorrectionRecord, DetectionMode, DetectionRecord,
};
use clausecheck::harness::run::{correct_examples, detect_examples, RunDir, RunError, Workspace};
use clausecheck::llm::CompletionClient;
use clausecheck::report::{reports_for, ErrorReport};
use clausecheck::correct::Exchange;
use clausecheck::signals::{SignalGroup, SignalId, SignalOutcome};

/// Label model and verdicts need a batch at least this large.
const MIN_FIT_BATCH: usize = 20;

#[derive(Parser)]
#[command(name = "clausecheck", version, about = "Detect and correct semantic errors in generated SQL")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build and save the catalog of one SQLite database.
    BuildCatalog {
        db: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON list of {"child": "t.c", "parent": "t.c"} foreign keys.
        #[arg(long)]
        fk_file: Option<PathBuf>,
    },
    /// Run error detection over a dataset and its predictions.
    Detect(DetectArgs),
    /// Run guided correction over a dataset and its predictions.
    Fix(FixArgs),
    /// Cross-validated detection metrics from a detect run.
    EvalDetect {
        /// `detections.json` written by `detect`.
        records: PathBuf,
        #[arg(long, value_enum, default_value = "weak")]
        mode: ModeArg,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Accuracy changes from a fix run.
    EvalFix {
        /// `corrections.json` written by `fix`.
        records: PathBuf,
    },
    /// Per-signal precision and recall from a detect run.
    SignalBench {
        records: PathBuf,
        #[arg(long, value_delimiter = ',')]
        signals: Vec<String>,
    },
}

#[derive(Args)]
struct Common {
    dataset: PathBuf,
    predictions: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    db_root: Option<PathBuf>,
    #[arg(long, value_enum)]
    llm_backend: Option<BackendArg>,
    #[arg(long)]
    mock_script: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated signal ids; all signals by default.
    #[arg(long, value_delimiter = ',')]
    signals: Vec<String>,
}

#[derive(Args)]
struct FixArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Signal rechecked after the loop; `none` disables it.
    #[arg(long)]
    guardrail: Option<String>,
    #[arg(long)]
    no_auditor: bool,
    /// Label model saved by `detect`, used for report confidence.
    #[arg(long)]
    label_model: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    None,
    Mock,
    Http,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Weak,
    Supervised,
    SelfBool,
    SelfProb,
}

enum Failure {
    Usage(String),
    Data(String),
    Backend(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Backend(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Backend(m) => m,
        }
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Backend(_) => Failure::Backend(e.to_string()),
            RunError::Usage(_) => Failure::Usage(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

fn data<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Data(e.to_string())
}

fn parse_signals(keys: &[String]) -> Result<Vec<SignalId>, Failure> {
    keys.iter()
        .map(|k| SignalId::from_key(k.trim()).ok_or_else(|| Failure::Usage(format!("unknown signal {k:?}"))))
        .collect()
}

fn load_config(c: &Common) -> Result<HarnessConfig, Failure> {
    let mut cfg = match &c.config {
        Some(p) => HarnessConfig::load(p).map_err(|e| Failure::Usage(e.to_string()))?,
        None => HarnessConfig::default(),
    };
    if let Some(r) = &c.db_root {
        cfg.data.db_root = r.clone();
    }
    if let Some(b) = c.llm_backend {
        cfg.backend.kind = match b {
            BackendArg::None => BackendKind::None,
            BackendArg::Mock => BackendKind::Mock,
            BackendArg::Http => BackendKind::Http,
        };
    }
    if let Some(s) = &c.mock_script {
        cfg.backend.mock_script = Some(s.clone());
    }
    if let Some(o) = &c.out_dir {
        cfg.run.out_dir = o.clone();
    }
    if c.name.is_some() {
        cfg.run.name = c.name.clone();
    }
    if let Some(w) = c.workers {
        cfg.run.workers = w;
    }
    Ok(cfg)
}

fn load_data(c: &Common, cfg: &HarnessConfig) -> Result<(Vec<DatasetExample>, Workspace), Failure> {
    let loaded = load_examples(&c.dataset, &c.predictions, &cfg.data.generator_tag).map_err(data)?;
    if !loaded.missing_predictions.is_empty() {
        eprintln!("warning: {} questions have no prediction", loaded.missing_predictions.len());
    }
    let ws = Workspace::prepare(cfg, loaded.examples.iter().map(|e| e.db_id.as_str()))?;
    Ok((loaded.examples, ws))
}

fn client(cfg: &HarnessConfig) -> Result<Option<Box<dyn CompletionClient>>, Failure> {
    cfg.client().map_err(|e| Failure::Backend(e.to_string()))
}

/// Exit with a backend failure when a client was used and not one call succeeded.
fn check_backend(used: usize, failed: usize, first: Option<&str>) -> Result<(), Failure> {
    if used > 0 && used == failed {
        return Err(Failure::Backend(format!(
            "all {used} completion calls failed: {}",
            first.unwrap_or("no usable response")
        )));
    }
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn print_json<T: Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).unwrap_or_default());
}

#[derive(Serialize)]
struct QueryFile<'a> {
    query_id: &'a str,
    db_id: &'a str,
    label: clausecheck::harness::Label,
    verdict: Option<Prediction>,
    reports: Vec<ErrorReport>,
    outcomes: &'a [SignalOutcome],
}

fn cmd_build_catalog(db: &Path, out: Option<PathBuf>, fk_file: Option<PathBuf>) -> Result<(), Failure> {
    let mut options = BuildOptions::default();
    if let Some(f) = fk_file {
        options = options.load_supplemental(&f).map_err(data)?;
    }
    let stem = db.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let database = Database::open(db).map_err(data)?.with_id(stem.clone());
    let catalog = build_catalog(&database, &options).map_err(data)?;
    let out = out.unwrap_or_else(|| PathBuf::from(format!("{stem}.json")));
    catalog.save(&out).map_err(data)?;
    println!("{}\t{}", out.display(), catalog_hash(&catalog));
    for (col, n) in &catalog.build_report.skipped_columns {
        eprintln!("value index skipped {col} ({n} distinct values)");
    }
    for fk in &catalog.build_report.dropped_fks {
        eprintln!("dropped foreign key {fk}");
    }
    Ok(())
}

fn cmd_detect(args: DetectArgs) -> Result<(), Failure> {
    let mut cfg = load_config(&args.common)?;
    if !args.signals.is_empty() {
        cfg.detector.enabled = parse_signals(&args.signals)?;
    }
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let client = client(&cfg)?;
    let (examples, ws) = load_data(&args.common, &cfg)?;
    let dir = RunDir::create(&cfg, "detect", &ws.hashes())?;
    let detections = detect_examples(&ws, &examples, &cfg, client.as_deref())?;
    let records: Vec<DetectionRecord> = detections
        .iter()
        .map(|d| DetectionRecord::from_outcomes(&d.query_id, &d.outcomes, d.label.is_wrong()))
        .collect();

    if client.is_some() {
        let llm: Vec<&SignalOutcome> = detections
            .iter()
            .flat_map(|d| &d.outcomes)
            .filter(|o| o.signal_id.group() == SignalGroup::Llm)
            .collect();
        let failed: Vec<&&SignalOutcome> = llm.iter().filter(|o| o.is_downgraded()).collect();
        check_backend(llm.len(), failed.len(), failed.first().and_then(|o| o.raw_evidence["downgraded"].as_str()))?;
    }

    let vectors: Vec<_> = records.iter().map(|r| r.vector.clone()).collect();
    let mut confidence = ConfidenceTable::uniform();
    let mut verdicts: Vec<Option<Prediction>> = vec![None; records.len()];
    if records.len() >= MIN_FIT_BATCH {
        match fit_label_model(&vectors, &registry_names(), &cfg.eval.label_model) {
            Ok(params) => {
                confidence = ConfidenceTable::from_params(&params);
                let soft: Vec<f64> = vectors.iter().map(|v| params.posterior(&v.votes)).collect();
                let clf = train_classifier(&vectors, &soft, TrainMode::Weak, &cfg.eval.classifier).map_err(data)?;
                verdicts = vectors.iter().map(|v| Some(clf.predict(v))).collect();
                dir.write_json("label_model.json", &params)?;
                dir.write_json("classifier.json", &clf)?;
            }
            Err(e) => eprintln!("warning: label model not fitted: {e}"),
        }
    } else {
        eprintln!("note: fewer than {MIN_FIT_BATCH} queries; confidence is uniform and no verdicts are given");
    }

    let mut rows = Vec::new();
    for (d, verdict) in detections.iter().zip(&verdicts) {
        dir.write_query(
            &d.query_id,
            &QueryFile {
                query_id: &d.query_id,
                db_id: &d.db_id,
                label: d.label,
                verdict: *verdict,
                reports: reports_for(&d.outcomes, &confidence),
                outcomes: &d.outcomes,
            },
        )?;
        let flagged: Vec<String> = d.outcomes.iter().filter(|o| o.flagged).map(|o| o.signal_id.key()).collect();
        rows.push(vec![
            d.query_id.clone(),
            d.db_id.clone(),
            format!("{:?}", d.label).to_lowercase(),
            verdict.map(|v| format!("{:.4}", v.probability)).unwrap_or_default(),
            flagged.join(";"),
        ]);
    }
    dir.write_json("detections.json", &records)?;
    let bench = signal_microbench(&records, &cfg.detector.enabled);
    dir.write_summary(&bench, &["query_id", "db_id", "label", "p_incorrect", "flagged"], &rows)?;
    println!("{}", dir.path.display());
    Ok(())
}

fn cmd_fix(args: FixArgs) -> Result<(), Failure> {
    let mut cfg = load_config(&args.common)?;
    if let Some(m) = args.max_iter {
        cfg.correction.max_iter = m;
    }
    if let Some(g) = &args.guardrail {
        cfg.correction.guardrail = match g.as_str() {
            "none" => None,
            k => Some(SignalId::from_key(k).ok_or_else(|| Failure::Usage(format!("unknown signal {k:?}")))?),
        };
    }
    if args.no_auditor {
        cfg.correction.auditor = false;
    }
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let confidence = match &args.label_model {
        Some(p) => ConfidenceTable::from_params(&read_json::<LabelModelParams>(p)?),
        None => ConfidenceTable::uniform(),
    };
    let client = client(&cfg)?.ok_or_else(|| Failure::Usage("fix needs --llm-backend mock or http".into()))?;
    let (examples, ws) = load_data(&args.common, &cfg)?;
    let dir = RunDir::create(&cfg, "fix", &ws.hashes())?;
    let fixes = correct_examples(&ws, &examples, &cfg, &confidence, client.as_ref())?;
    let exchanges: Vec<&Exchange> = fixes
        .iter()
        .flat_map(|f| {
            let t = &f.trace;
            t.iterations
                .iter()
                .flat_map(|i| i.selection.exchange.iter().chain(&i.fix.exchanges))
                .chain(t.guardrail_fix.iter().flat_map(|g| &g.exchanges))
                .chain(t.audit.iter().flat_map(|a| &a.exchange))
        })
        .collect();
    let failed: Vec<&&Exchange> = exchanges.iter().filter(|e| e.error.is_some()).collect();
    check_backend(exchanges.len(), failed.len(), failed.first().and_then(|e| e.error.as_deref()))?;

    let mut records = Vec::new();
    let mut rows = Vec::new();
    for f in &fixes {
        dir.write_trace(&f.query_id, &f.trace)?;
        records.push(CorrectionRecord {
            query_id: f.query_id.clone(),
            before: f.before,
            after: f.after,
        });
        rows.push(vec![
            f.query_id.clone(),
            format!("{:?}", f.before).to_lowercase(),
            format!("{:?}", f.after).to_lowercase(),
            f.trace.iterations.len().to_string(),
        ]);
    }
    dir.write_json("corrections.json", &records)?;
    dir.write_summary(&eval_correction(&records), &["query_id", "before", "after", "iterations"], &rows)?;
    println!("{}", dir.path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::BuildCatalog { db, out, fk_file } => cmd_build_catalog(&db, out, fk_file),
        Command::Detect(a) => cmd_detect(a),
        Command::Fix(a) => cmd_fix(a),
        Command::EvalDetect {
            records,
            mode,
            folds,
            seed,
        } => {
            let recs: Vec<DetectionRecord> = read_json(&records)?;
            let mode = match mode {
                ModeArg::Weak => DetectionMode::Weak,
                ModeArg::Supervised => DetectionMode::Supervised,
                ModeArg::SelfBool => DetectionMode::SelfBool,
                ModeArg::SelfProb => DetectionMode::SelfProb,
            };
            let cfg = clausecheck::harness::EvalConfig {
                folds,
                seed,
                ..Default::default()
            };
            print_json(&eval_detection(&recs, mode, &cfg).map_err(data)?);
            Ok(())
        }
        Command::EvalFix { records } => {
            let recs: Vec<CorrectionRecord> = read_json(&records)?;
            print_json(&eval_correction(&recs));
            Ok(())
        }
        Command::SignalBench { records, signals } => {
            let recs: Vec<DetectionRecord> = read_json(&records)?;
            let signals = if signals.is_empty() {
                SignalId::ALL.to_vec()
            } else {
                parse_signals(&signals)?
            };
            print_json(&signal_microbench(&recs, &signals));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
