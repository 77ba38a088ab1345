//! The `ivy` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::eval::{evaluate, parse_questions};
use crate::generation::{GenerationError, Pipeline};
use crate::prompts::PromptSet;
use crate::providers::{Providers, RemoteConfig, RemoteLanguageModel};
use crate::retrieval::compile_documents;
use crate::service::{self, to_json_text, ServiceConfig, SimulateResponse, DEFAULT_STORAGE_DIR, ENV_STORAGE_DIR};
use crate::sim::{simulate, FileTraceStore, SimOptions, TraceStore};
use crate::tmk::{load_model, validate_model, TmkModel, WorldState};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PROVIDER: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ivy", version, about = "Question answering over TMK skill models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a model file and list its errors and warnings.
    Validate {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Answer one question about a model.
    Ask {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        question: String,
        #[arg(long)]
        json: bool,
    },
    /// Run a task's method and save the trace.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        task: String,
        /// JSON object of slot values; defaults to the model's default_initial.
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long, env = ENV_STORAGE_DIR, default_value = DEFAULT_STORAGE_DIR)]
        storage: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Print the documents compiled from a model.
    Docs {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        prompts: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Score answers to a question file.
    Eval {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        questions: PathBuf,
        #[arg(long, default_value_t = 5)]
        runs: usize,
        #[arg(long)]
        json: bool,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        #[arg(long, env = service::ENV_PORT, default_value_t = service::DEFAULT_PORT)]
        port: u16,
        #[arg(long, env = ENV_STORAGE_DIR, default_value = DEFAULT_STORAGE_DIR)]
        storage: PathBuf,
        #[arg(long, value_enum, default_value_t = ProviderChoice::Mock)]
        provider: ProviderChoice,
        #[arg(long)]
        prompts: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value_t = ProviderChoice::Mock)]
    pub provider: ProviderChoice,
    /// Directory of prompt template overrides.
    #[arg(long)]
    pub prompts: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProviderChoice {
    Mock,
    Remote,
}

/// A failure with its exit code and message.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn invalid(message: impl std::fmt::Display) -> Self {
        Failure { code: EXIT_INVALID, message: message.to_string() }
    }

    fn provider(message: impl std::fmt::Display) -> Self {
        Failure { code: EXIT_PROVIDER, message: message.to_string() }
    }
}

impl From<GenerationError> for Failure {
    fn from(e: GenerationError) -> Self {
        if e.is_provider_failure() {
            Failure::provider(e)
        } else {
            Failure::invalid(e)
        }
    }
}

pub fn providers(choice: ProviderChoice) -> Result<Providers, crate::providers::ProviderError> {
    match choice {
        ProviderChoice::Mock => Ok(Providers::mock()),
        ProviderChoice::Remote => {
            Ok(Providers::with_llm(Arc::new(RemoteLanguageModel::new(RemoteConfig::from_env())?)))
        }
    }
}

fn load_prompts(dir: Option<&Path>) -> Result<PromptSet, Failure> {
    match dir {
        Some(d) => PromptSet::from_dir(d).map_err(Failure::invalid),
        None => Ok(PromptSet::builtin()),
    }
}

/// Loads a model and refuses it when validation finds errors.
fn load_valid(path: &Path) -> Result<TmkModel, Failure> {
    let model = load_model(path).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
    let report = validate_model(&model);
    if !report.is_valid() {
        return Err(Failure::invalid(format!("{} is not a valid model\n{report}", path.display())));
    }
    Ok(model)
}

fn pipeline(args: &ModelArgs) -> Result<Pipeline, Failure> {
    let model = load_valid(&args.model)?;
    let prompts = load_prompts(args.prompts.as_deref())?;
    let providers = providers(args.provider).map_err(Failure::provider)?;
    Pipeline::new(model, providers, Arc::new(prompts)).map_err(|e| {
        if matches!(e, crate::retrieval::RetrievalError::Provider(_)) {
            Failure::provider(e)
        } else {
            Failure::invalid(e)
        }
    })
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
                EXIT_USAGE
            } else {
                let _ = out.write_all(text.as_bytes());
                EXIT_OK
            };
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message.trim_end());
            f.code
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes()).map_err(|e| Failure::invalid(format!("cannot write output: {e}")))
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::Validate { file, json } => {
            let model = match load_model(&file) {
                Ok(m) => m,
                Err(e) => {
                    let _ = writeln!(err, "{}: {e}", file.display());
                    return Ok(EXIT_INVALID);
                }
            };
            let report = validate_model(&model);
            emit(out, &if json { to_json_text(&report) } else { report.to_string() })?;
            Ok(if report.is_valid() { EXIT_OK } else { EXIT_INVALID })
        }
        Command::Ask { model, question, json } => {
            let p = pipeline(&model)?;
            let answer = p.answer(&question)?;
            if json {
                emit(out, &to_json_text(&answer))?;
            } else {
                let mut text = format!("{}\n\ncategory: {}", answer.text, answer.category);
                if let Some(k) = answer.k_score {
                    text.push_str(&format!(" (k={k})"));
                }
                for id in &answer.cited_doc_ids {
                    text.push_str(&format!("\ncited: {id}"));
                }
                if let Some(t) = &answer.trace_id {
                    text.push_str(&format!("\ntrace: {t}"));
                }
                if let Some(n) = &answer.note {
                    text.push_str(&format!("\nnote: {n}"));
                }
                text.push('\n');
                emit(out, &text)?;
            }
            Ok(EXIT_OK)
        }
        Command::Simulate { model, task, init, limit, storage, json } => {
            let model = load_valid(&model)?;
            let initial = match &init {
                Some(path) => {
                    let text =
                        fs::read_to_string(path).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
                    serde_json::from_str::<WorldState>(&text)
                        .map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?
                }
                None => model.default_initial.clone().ok_or_else(|| {
                    Failure::invalid(format!("model `{}` has no default_initial; pass --init", model.id))
                })?,
            };
            let options = limit.map_or_else(SimOptions::default, SimOptions::with_step_limit);
            let trace = simulate(&model, &task, &initial, options).map_err(Failure::invalid)?;
            let store = FileTraceStore::open(storage.join("traces")).map_err(Failure::invalid)?;
            store.put(&trace).map_err(Failure::invalid)?;
            let _ = writeln!(err, "saved trace {} under {}", trace.trace_id, storage.join("traces").display());
            let response = SimulateResponse::new(&model, trace);
            if json {
                emit(out, &to_json_text(&response))?;
            } else {
                emit(out, &format!("trace {}\n{}\n", response.trace_id, response.narrative))?;
            }
            Ok(EXIT_OK)
        }
        Command::Docs { model, prompts, json } => {
            let model = load_valid(&model)?;
            let docs = compile_documents(&model, &load_prompts(prompts.as_deref())?);
            if json {
                emit(out, &to_json_text(&docs))?;
            } else {
                let mut text = String::new();
                for d in &docs {
                    text.push_str(&format!("== {} [{}]\n# {}\n{}\n\n", d.doc_id, d.category.slug(), d.title, d.text));
                }
                emit(out, &text)?;
            }
            Ok(EXIT_OK)
        }
        Command::Eval { model, questions, runs, json } => {
            let p = pipeline(&model)?;
            let text = fs::read_to_string(&questions)
                .map_err(|e| Failure::invalid(format!("{}: {e}", questions.display())))?;
            let questions = parse_questions(&text);
            let report = evaluate(&p, &questions, runs).map_err(Failure::invalid)?;
            if json {
                emit(out, &to_json_text(&report))?;
            } else {
                let m = &report.metadata;
                emit(
                    out,
                    &format!(
                        "model: {}\nprovider: {}\nscorer: {}\nreference: {}\nbands: {}\n\n{}",
                        m.model_id,
                        m.provider,
                        m.scorer,
                        m.reference,
                        m.band_convention,
                        report.table()
                    ),
                )?;
            }
            Ok(EXIT_OK)
        }
        Command::Serve { host, port, storage, provider, prompts } => {
            let providers = providers(provider).map_err(Failure::provider)?;
            let config =
                ServiceConfig { listen: SocketAddr::new(host, port), storage_dir: storage, prompts_dir: prompts };
            let runtime = tokio::runtime::Runtime::new().map_err(Failure::invalid)?;
            runtime.block_on(service::serve(config, providers)).map_err(Failure::invalid)?;
            Ok(EXIT_OK)
        }
    }
}
