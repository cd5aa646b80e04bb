//! Command-line front end. Exit codes: 0 success, 1 operational failure,
//! 2 usage error.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::classifier::{self, ClassifierConfig, IntentModel};
use crate::dataset::{self, Dataset, QuestionTemplate};
use crate::demo;
use crate::dialogue::{EngineConfig, ReplyKind};
use crate::engine::{self, BuildStats, Snapshot};
use crate::eval::{self, LadderTable, ReportFormat};
use crate::feedback::{FeedbackStore, Helpful};
use crate::kb::{self, KnowledgeBase};
use crate::model::{self, TmkModel};
use crate::server::{self, ServerConfig};
use crate::validate::validate;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "tmkqa", version, about = "Explainable question answering over TMK models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct ModelArgs {
    /// TMK model JSON. Defaults to the bundled demo pack.
    #[arg(long, env = "TMKQA_MODEL")]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct EngineArgs {
    /// Question templates (TSV). Defaults to the bundled templates.
    #[arg(long, env = "TMKQA_TEMPLATES")]
    pub templates: Option<PathBuf>,
    /// Trained classifier artifact. Trained on the fly when omitted.
    #[arg(long)]
    pub classifier: Option<PathBuf>,
    /// Confidence threshold below which the engine falls back.
    #[arg(long, env = "TMKQA_THRESHOLD")]
    pub threshold: Option<f64>,
    #[arg(long, default_value_t = demo::DEFAULT_SEED, env = "TMKQA_SEED")]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a model and print the report.
    Validate(ModelArgs),
    /// Print the compiled knowledge base as JSON.
    KbDump(ModelArgs),
    /// Expand templates into a labeled dataset plus a manifest sidecar.
    Generate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, env = "TMKQA_TEMPLATES")]
        templates: Option<PathBuf>,
        /// Labeled questions to merge into the generated set.
        #[arg(long)]
        supplement: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = demo::DEFAULT_SEED)]
        seed: u64,
    },
    /// Train the intent classifier on a dataset.
    Train {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = demo::DEFAULT_SEED)]
        seed: u64,
    },
    /// Evaluate on a dataset (in vitro) or a labeled question log (in situ).
    Eval {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        engine: EngineArgs,
        #[arg(long, conflicts_with = "questions", required_unless_present = "questions")]
        dataset: Option<PathBuf>,
        #[arg(long)]
        questions: Option<PathBuf>,
        #[arg(long, default_value = "text", value_parser = parse_format)]
        format: ReportFormat,
        /// Also print explanatory-ladder counts (text format only).
        #[arg(long)]
        ladder: bool,
    },
    /// Run the HTTP API.
    Serve {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        listen: Option<std::net::SocketAddr>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Ask questions interactively. `:yes` / `:no` rate the last reply, `:quit` exits.
    Repl {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        engine: EngineArgs,
        #[arg(long, default_value = "feedback.jsonl", env = "TMKQA_FEEDBACK")]
        feedback: PathBuf,
    },
    /// End-to-end run on the demo pack: generate, train, evaluate.
    Demo {
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse()
}

/// A failed command: the message goes to stderr, the process exits 1.
#[derive(Debug)]
pub struct Failure(pub String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type CmdResult = Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            EXIT_FAILURE
        }
    }
}

fn load_model(args: &ModelArgs) -> Result<TmkModel, Failure> {
    match &args.model {
        None => Ok(demo::model()),
        Some(p) => {
            let text = engine::read_file(p)?;
            model::parse_model(&text).map_err(|e| Failure(format!("{}: {e}", p.display())))
        }
    }
}

fn load_templates(path: Option<&Path>) -> Result<Vec<QuestionTemplate>, Failure> {
    match path {
        None => Ok(demo::templates()),
        Some(p) => dataset::load_templates(&engine::read_file(p)?)
            .map_err(|e| Failure(format!("{}: {e}", p.display()))),
    }
}

fn compile(model: &TmkModel) -> Result<KnowledgeBase, Failure> {
    kb::compile(model).map_err(|e| match e {
        kb::CompileError::Invalid(report) => Failure(format!("model is invalid\n{}", report.render())),
        other => Failure(other.to_string()),
    })
}

fn engine_config(threshold: Option<f64>) -> Result<EngineConfig, Failure> {
    let mut cfg = EngineConfig::default();
    if let Some(t) = threshold {
        cfg.confidence_threshold = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure(format!("cannot write {}: {e}", path.display())))
}

pub fn manifest_path(dataset: &Path) -> PathBuf {
    dataset.with_extension("manifest.json")
}

/// Snapshot for eval/repl: a saved classifier if given, else trained from
/// `dataset` or from the templates.
fn snapshot_for(
    model: TmkModel,
    engine: &EngineArgs,
    dataset: Option<&Dataset>,
) -> Result<Snapshot, Failure> {
    let config = engine_config(engine.threshold)?;
    let kb = compile(&model)?;
    if let Some(path) = &engine.classifier {
        let classifier = IntentModel::from_json(&engine::read_file(path)?)
            .map_err(|e| Failure(format!("{}: {e}", path.display())))?;
        return Ok(Snapshot::assemble(model, kb, classifier, config)?);
    }
    let owned;
    let ds = match dataset {
        Some(ds) => ds,
        None => {
            owned = dataset::expand(&load_templates(engine.templates.as_deref())?, &kb)?.with_seed(engine.seed);
            &owned
        }
    };
    Ok(Snapshot::build_with_dataset(model, kb, ds, engine.seed, &ClassifierConfig::default(), config)?)
}

fn execute(command: Command) -> CmdResult {
    match command {
        Command::Validate(args) => cmd_validate(&args),
        Command::KbDump(args) => {
            let kb = compile(&load_model(&args)?)?;
            println!("{}", serde_json::to_string_pretty(&kb)?);
            Ok(EXIT_OK)
        }
        Command::Generate {
            model,
            templates,
            supplement,
            out,
            seed,
        } => cmd_generate(&model, templates.as_deref(), supplement.as_deref(), &out, seed),
        Command::Train {
            model,
            dataset,
            out,
            seed,
        } => cmd_train(&model, &dataset, &out, seed),
        Command::Eval {
            model,
            engine,
            dataset,
            questions,
            format,
            ladder,
        } => cmd_eval(&model, &engine, dataset.as_deref(), questions.as_deref(), format, ladder),
        Command::Serve {
            model,
            listen,
            threshold,
        } => cmd_serve(&model, listen, threshold),
        Command::Repl {
            model,
            engine,
            feedback,
        } => cmd_repl(&model, &engine, &feedback),
        Command::Demo { out } => cmd_demo(&out),
    }
}

fn cmd_validate(args: &ModelArgs) -> CmdResult {
    let model = load_model(args)?;
    let report = validate(&model);
    print!("{}", report.render());
    Ok(if report.is_ok() { EXIT_OK } else { EXIT_FAILURE })
}

fn cmd_generate(
    model: &ModelArgs,
    templates: Option<&Path>,
    supplement: Option<&Path>,
    out: &Path,
    seed: u64,
) -> CmdResult {
    let model = load_model(model)?;
    let kb = compile(&model)?;
    let templates = load_templates(templates)?;
    let mut ds = dataset::expand(&templates, &kb)?.with_seed(seed);
    if let Some(p) = supplement {
        let extra = dataset::load_supplement(&engine::read_file(p)?)
            .map_err(|e| Failure(format!("{}: {e}", p.display())))?;
        ds = ds.merge_supplement(extra, &kb)?;
    }
    write(out, &ds.to_jsonl())?;
    write(&manifest_path(out), &ds.manifest.to_json())?;
    println!(
        "wrote {} examples to {} (expected from templates: {})",
        ds.len(),
        out.display(),
        dataset::expected_size(&templates, &kb)
    );
    Ok(EXIT_OK)
}

fn read_dataset(path: &Path, seed: u64, model_version: &str) -> Result<Dataset, Failure> {
    Dataset::from_jsonl(&engine::read_file(path)?, seed, model_version)
        .map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn cmd_train(model: &ModelArgs, dataset_path: &Path, out: &Path, seed: u64) -> CmdResult {
    let model = load_model(model)?;
    let kb = compile(&model)?;
    let ds = read_dataset(dataset_path, seed, &model.version)?;
    let classifier = classifier::train(&ds, seed, &ClassifierConfig::default())?;
    write(out, &classifier.to_json())?;
    let snapshot = Snapshot::assemble(model, kb, classifier, EngineConfig::default())?;
    let stats = BuildStats::measure(&snapshot, &ds);
    println!(
        "trained on {} examples; train accuracy {:.1}%; wrote {}",
        stats.dataset_size,
        stats.train_accuracy * 100.0,
        out.display()
    );
    Ok(EXIT_OK)
}

fn cmd_eval(
    model_args: &ModelArgs,
    engine: &EngineArgs,
    dataset_path: Option<&Path>,
    questions_path: Option<&Path>,
    format: ReportFormat,
    ladder: bool,
) -> CmdResult {
    let model = load_model(model_args)?;
    let version = model.version.clone();
    let (report, questions) = match (dataset_path, questions_path) {
        (Some(dp), _) => {
            let ds = read_dataset(dp, engine.seed, &version)?;
            let snapshot = snapshot_for(model, engine, Some(&ds))?;
            let qs: Vec<eval::LabeledQuestion> = ds
                .examples
                .iter()
                .map(|e| eval::LabeledQuestion::answerable(e.question.clone(), e.intent, e.object_id.clone()))
                .collect();
            (eval::evaluate(&snapshot, &qs), (snapshot, qs))
        }
        (None, Some(qp)) => {
            let qs = eval::load_questions(&engine::read_file(qp)?)
                .map_err(|e| Failure(format!("{}: {e}", qp.display())))?;
            let snapshot = snapshot_for(model, engine, None)?;
            (eval::evaluate(&snapshot, &qs), (snapshot, qs))
        }
        (None, None) => return Err(Failure("one of --dataset or --questions is required".into())),
    };
    print!("{}", eval::coverage_report(&report, format));
    if ladder && format == ReportFormat::Text {
        let (snapshot, qs) = questions;
        let table = LadderTable::default();
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for q in &qs {
            let cat = eval::ladder_classify_labeled(&snapshot, &table, q)
                .map(|c| c.to_string())
                .unwrap_or_else(|| "UNCLASSIFIED".to_owned());
            *counts.entry(cat).or_default() += 1;
        }
        println!("\n{:<32}{:>7}", "ladder category", "count");
        for (cat, n) in counts {
            println!("{cat:<32}{n:>7}");
        }
    }
    Ok(EXIT_OK)
}

fn cmd_serve(model_args: &ModelArgs, listen: Option<std::net::SocketAddr>, threshold: Option<f64>) -> CmdResult {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .try_init()
        .ok();
    let mut cfg = ServerConfig::from_env().map_err(Failure)?;
    if let Some(addr) = listen {
        cfg.listen = addr;
    }
    if let Some(t) = threshold {
        cfg.engine.confidence_threshold = t;
        cfg.engine.validate()?;
    }
    cfg.model_path = model_args.model.clone();
    let state = server::state_from_config(&cfg)?;
    if cfg.model_path.is_none() {
        let (snapshot, _) = Snapshot::build(
            demo::model(),
            &demo::templates(),
            cfg.seed,
            &ClassifierConfig::default(),
            cfg.engine.clone(),
        )?;
        state.publish(snapshot);
    }
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(server::serve(Arc::new(state), &cfg))?;
    Ok(EXIT_OK)
}

fn cmd_repl(model_args: &ModelArgs, engine: &EngineArgs, feedback_path: &Path) -> CmdResult {
    let snapshot = snapshot_for(load_model(model_args)?, engine, None)?;
    let store = FeedbackStore::open(feedback_path)?;
    let session = uuid::Uuid::new_v4().to_string();
    let stdin = io::stdin();
    let mut stdout = io::stdout();
    let mut last: Option<String> = None;
    print!("> ");
    stdout.flush()?;
    for line in stdin.lock().lines() {
        let line = line?;
        let input = line.trim();
        match input {
            "" => {}
            ":quit" | ":q" => break,
            ":yes" | ":no" => match &last {
                Some(id) => {
                    let helpful = if input == ":yes" { Helpful::Yes } else { Helpful::No };
                    store.record_feedback(id, &session, helpful)?;
                    println!("feedback recorded");
                }
                None => println!("nothing to rate yet"),
            },
            question => {
                let reply = snapshot.answer(question, &session);
                store.register_reply(&reply, question, &session)?;
                println!("{}", reply.text);
                let diag = match &reply.query {
                    Some(q) => format!("{} / {}", q.intent, q.object_id),
                    None => "no query".to_owned(),
                };
                println!("  [{:?}, confidence {:.3}, {diag}]", reply.kind, reply.confidence);
                if reply.kind == ReplyKind::Answer {
                    println!("  {} (:yes / :no)", reply.feedback_prompt);
                }
                last = Some(reply.message_id);
            }
        }
        print!("> ");
        stdout.flush()?;
    }
    println!();
    Ok(EXIT_OK)
}

fn stage<T, E: std::fmt::Display>(name: &str, r: Result<T, E>) -> Result<T, Failure> {
    r.map_err(|e| Failure(format!("{name}: {e}")))
}

fn cmd_demo(out: &Path) -> CmdResult {
    let started = Instant::now();
    stage("setup", fs::create_dir_all(out))?;
    let model_path = out.join("model.json");
    let templates_path = out.join("templates.tsv");
    let dataset_path = out.join("dataset.jsonl");
    let classifier_path = out.join("classifier.json");
    stage("setup", fs::write(&model_path, demo::MODEL_JSON))?;
    stage("setup", fs::write(&templates_path, demo::TEMPLATES_TSV))?;

    let model = stage("parse", model::parse_model(&stage("parse", fs::read_to_string(&model_path))?))?;
    let kb = stage("compile", kb::compile(&model))?;
    let templates = stage(
        "templates",
        dataset::load_templates(&stage("templates", fs::read_to_string(&templates_path))?),
    )?;
    let ds = stage("generate", dataset::expand(&templates, &kb))?.with_seed(demo::DEFAULT_SEED);
    stage("generate", fs::write(&dataset_path, ds.to_jsonl()))?;
    stage("generate", fs::write(manifest_path(&dataset_path), ds.manifest.to_json()))?;
    let classifier = stage("train", classifier::train(&ds, demo::DEFAULT_SEED, &ClassifierConfig::default()))?;
    stage("train", fs::write(&classifier_path, classifier.to_json()))?;
    let snapshot = stage("assemble", Snapshot::assemble(model, kb, classifier, EngineConfig::default()))?;
    let report = eval::evaluate_dataset(&snapshot, &ds);

    let expected = dataset::expected_size(&templates, &snapshot.kb);
    println!("model: {} {}", snapshot.model.name, snapshot.model_version());
    println!(
        "entities: {} glossary terms, {} tasks",
        snapshot.model.glossary.len(),
        snapshot.model.tasks.len()
    );
    println!("dataset size: {} (closed form {})", ds.len(), expected);
    for (intent, c) in &report.per_intent {
        println!("  {intent:<12}{:>5} examples, {:>5} correct", c.asked, c.correct);
    }
    println!(
        "training-set accuracy: {:.1}% ({}/{})",
        report.accuracy * 100.0,
        report.correct,
        report.total
    );
    println!("artifacts in {} ({:.2}s)", out.display(), started.elapsed().as_secs_f64());
    Ok(if report.correct == report.total && ds.len() == expected { EXIT_OK } else { EXIT_FAILURE })
}
