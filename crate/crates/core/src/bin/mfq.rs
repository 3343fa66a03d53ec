//! Command-line surface for the MFQ toolkit.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use mfq_toolkit::administration::{PoliticalLean, PromptContext, SessionPlan};
use mfq_toolkit::error::{Error, Result};
use mfq_toolkit::questionnaire::Foundation;
use mfq_toolkit::report::{self, RunConfig};
use mfq_toolkit::respondent::{BackendKind, ModelConfig};
use mfq_toolkit::tsne::TsneParams;

#[derive(Parser)]
#[command(
    name = "mfq",
    version,
    about = "Administer the Moral Foundations Questionnaire to language-model backends and analyze the results"
)]
struct Cli {
    /// TOML config file supplying backend defaults (flags win over file,
    /// file wins over MFQ_* environment variables).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct BackendArgs {
    /// Backend spec: `http:<url>`, `mock:<behavior>` or `fixture:<dir>`.
    #[arg(long)]
    backend: Option<String>,

    /// Engine/model name sent with http requests and used in fingerprints.
    #[arg(long)]
    engine: Option<String>,

    /// Sampling temperature.
    #[arg(long)]
    temperature: Option<f64>,

    /// Completion token limit.
    #[arg(long)]
    max_tokens: Option<u32>,

    /// Request timeout in seconds.
    #[arg(long)]
    timeout: Option<u64>,

    /// Retry limit for transient http failures.
    #[arg(long)]
    retries: Option<u32>,

    /// Rate limit in requests per minute.
    #[arg(long)]
    rate_limit: Option<u32>,

    /// Environment variable holding the API token (credentials are only
    /// ever read from the environment).
    #[arg(long)]
    credential_env: Option<String>,

    /// Append completions to this cache store.
    #[arg(long)]
    cache: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one questionnaire session and write session.json + scores.csv.
    Administer {
        #[command(flatten)]
        backend: BackendArgs,
        /// Context spec: `none`, `political:<lean>` or `steering:<text>`.
        #[arg(long, default_value = "none")]
        context: String,
        /// Samples per question (majority-voted).
        #[arg(long, default_value_t = 50)]
        samples: usize,
        /// Example statement shown in the prompt.
        #[arg(long)]
        statement: Option<String>,
        /// Questionnaire file (bundled MFQ when omitted).
        #[arg(long)]
        questionnaire: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compare score files against the human baseline table.
    Compare {
        /// Scores CSV file(s) produced by administer/consistency.
        #[arg(long = "session", required = true)]
        sessions: Vec<PathBuf>,
        /// Baseline CSV (bundled table when omitted).
        #[arg(long)]
        baselines: Option<PathBuf>,
        /// Accepted for interface uniformity; compare reads files only.
        #[arg(long)]
        backend: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Measure score variation across corpus-derived contexts.
    Consistency {
        #[command(flatten)]
        backend: BackendArgs,
        /// Directory of .txt excerpts.
        #[arg(long)]
        corpus: PathBuf,
        /// Number of contexts to sample.
        #[arg(long, default_value_t = 50)]
        contexts: usize,
        /// Excerpt truncation length in characters.
        #[arg(long, default_value_t = 600)]
        max_chars: usize,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long)]
        questionnaire: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Search candidate prompts for the one maximizing a foundation.
    Steer {
        #[command(flatten)]
        backend: BackendArgs,
        /// Target foundation: harm, fairness, ingroup, authority or purity.
        #[arg(long)]
        target: String,
        /// Candidate catalog TOML (bundled catalog when omitted).
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long)]
        questionnaire: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Embed labeled score vectors into 2-D with t-SNE.
    Embed {
        /// Labeled points CSV (label column plus numeric coordinates).
        #[arg(long)]
        points: PathBuf,
        /// Accepted for interface uniformity; embed reads files only.
        #[arg(long)]
        backend: Option<String>,
        #[arg(long, default_value_t = 5.0)]
        perplexity: f64,
        #[arg(long, default_value_t = 1000)]
        iterations: usize,
        #[arg(long, default_value_t = 100.0)]
        learning_rate: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Estimate expected donation on the dialog task.
    Donate {
        #[command(flatten)]
        backend: BackendArgs,
        #[arg(long, default_value = "none")]
        context: String,
        /// Episodes to run.
        #[arg(long, default_value_t = 20)]
        episodes: usize,
        /// Dialog script TOML (bundled script when omitted).
        #[arg(long)]
        script: Option<PathBuf>,
        /// Decline pattern list (bundled patterns when omitted).
        #[arg(long)]
        patterns: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Render a report file as a standalone SVG figure.
    Render {
        /// Figure type: bars, scatter or box.
        #[arg(long)]
        figure: String,
        /// Accepted for interface uniformity; render reads files only.
        #[arg(long)]
        backend: Option<String>,
        /// Input report file (scores, embedding or consistency CSV).
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Re-execute a recorded manifest and byte-compare the artifacts.
    Replay {
        /// Manifest written by a previous run.
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "out-replay")]
        out: PathBuf,
        /// Accepted for interface uniformity; the backend comes from the manifest.
        #[arg(long)]
        backend: Option<String>,
        /// Accepted for interface uniformity; the seed comes from the manifest.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Backend defaults from the optional config file.
#[derive(Debug, Default, Deserialize)]
struct FileConfig {
    #[serde(default)]
    backend: FileBackend,
}

#[derive(Debug, Default, Deserialize)]
struct FileBackend {
    spec: Option<String>,
    engine: Option<String>,
    temperature: Option<f64>,
    max_tokens: Option<u32>,
    timeout_secs: Option<u64>,
    retry_limit: Option<u32>,
    rate_limit_rpm: Option<u32>,
    credential_env: Option<String>,
}

fn load_file_config(path: &Option<PathBuf>) -> Result<FileConfig> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("config file {}: {e}", p.display())))?;
            toml::from_str(&text)
                .map_err(|e| Error::Config(format!("config file {}: {e}", p.display())))
        }
        None => Ok(FileConfig::default()),
    }
}

fn env_var(name: &str) -> Option<String> {
    std::env::var(name).ok().filter(|v| !v.is_empty())
}

/// Assemble a ModelConfig with flag > file > environment precedence.
fn resolve_backend(args: &BackendArgs, file: &FileConfig) -> Result<ModelConfig> {
    let spec = args
        .backend
        .clone()
        .or_else(|| file.backend.spec.clone())
        .or_else(|| env_var("MFQ_BACKEND"))
        .ok_or_else(|| {
            Error::Config("no backend: pass --backend, set backend.spec in the config file, or export MFQ_BACKEND".into())
        })?;
    let (kind, target) = parse_backend_spec(&spec)?;
    let engine = args
        .engine
        .clone()
        .or_else(|| file.backend.engine.clone())
        .or_else(|| env_var("MFQ_ENGINE"))
        .unwrap_or_else(|| match kind {
            BackendKind::Mock => format!("mock:{target}"),
            BackendKind::Fixture => "fixture".to_string(),
            BackendKind::Http => "text-davinci-002".to_string(),
        });
    let mut config = ModelConfig::new(kind, target, engine);
    config.temperature = args.temperature.or(file.backend.temperature).unwrap_or(0.0);
    config.max_tokens = args.max_tokens.or(file.backend.max_tokens).unwrap_or(64);
    config.timeout_secs = args.timeout.or(file.backend.timeout_secs).unwrap_or(30);
    config.retry_limit = args.retries.or(file.backend.retry_limit).unwrap_or(3);
    config.rate_limit_rpm = args.rate_limit.or(file.backend.rate_limit_rpm);
    config.credential_env = args
        .credential_env
        .clone()
        .or_else(|| file.backend.credential_env.clone())
        .or_else(|| env_var("MFQ_CREDENTIAL_ENV"));
    config.validate()?;
    Ok(config)
}

fn parse_backend_spec(spec: &str) -> Result<(BackendKind, String)> {
    let (kind, target) = spec.split_once(':').ok_or_else(|| {
        Error::Config(format!("backend spec {spec:?} must look like kind:target"))
    })?;
    let kind = match kind {
        "http" => BackendKind::Http,
        "mock" => BackendKind::Mock,
        "fixture" => BackendKind::Fixture,
        other => {
            return Err(Error::Config(format!(
                "unknown backend kind {other:?}; expected http, mock or fixture"
            )))
        }
    };
    Ok((kind, target.to_string()))
}

fn parse_context(spec: &str) -> Result<PromptContext> {
    if spec == "none" {
        return Ok(PromptContext::None);
    }
    if let Some(lean) = spec.strip_prefix("political:") {
        let lean = PoliticalLean::from_name(lean)
            .ok_or_else(|| Error::Config(format!("unknown political lean {lean:?}")))?;
        return Ok(PromptContext::political(lean));
    }
    if let Some(text) = spec.strip_prefix("steering:") {
        return Ok(PromptContext::steering(text));
    }
    Err(Error::Config(format!(
        "unknown context spec {spec:?}; expected none, political:<lean> or steering:<text>"
    )))
}

fn path_string(path: &std::path::Path) -> String {
    path.display().to_string()
}

fn run(cli: Cli) -> Result<i32> {
    let file = load_file_config(&cli.config)?;
    match cli.command {
        Command::Administer {
            backend,
            context,
            samples,
            statement,
            questionnaire,
            out,
            seed,
        } => {
            let config = RunConfig::Administer {
                backend: resolve_backend(&backend, &file)?,
                context: parse_context(&context)?,
                plan: SessionPlan {
                    samples_per_question: samples,
                    example_statement: statement.unwrap_or_else(|| {
                        mfq_toolkit::administration::DEFAULT_EXAMPLE_STATEMENT.into()
                    }),
                    seed,
                },
                questionnaire: questionnaire.as_ref().map(|p| path_string(p)),
                cache: backend.cache.as_ref().map(|p| path_string(p)),
            };
            let manifest = report::execute_with_manifest(&config, &out, seed)?;
            for artifact in &manifest.artifacts {
                println!("wrote {}", out.join(artifact).display());
            }
            Ok(0)
        }
        Command::Compare {
            sessions,
            baselines,
            backend: _,
            out,
            seed,
        } => {
            let config = RunConfig::Compare {
                sessions: sessions.iter().map(|p| path_string(p)).collect(),
                baselines: baselines.as_ref().map(|p| path_string(p)),
            };
            let manifest = report::execute_with_manifest(&config, &out, seed)?;
            for artifact in &manifest.artifacts {
                println!("wrote {}", out.join(artifact).display());
            }
            Ok(0)
        }
        Command::Consistency {
            backend,
            corpus,
            contexts,
            max_chars,
            samples,
            questionnaire,
            out,
            seed,
        } => {
            let config = RunConfig::Consistency {
                backend: resolve_backend(&backend, &file)?,
                plan: SessionPlan {
                    samples_per_question: samples,
                    seed,
                    ..Default::default()
                },
                corpus: path_string(&corpus),
                contexts,
                seed,
                max_chars,
                questionnaire: questionnaire.as_ref().map(|p| path_string(p)),
                cache: backend.cache.as_ref().map(|p| path_string(p)),
            };
            let manifest = report::execute_with_manifest(&config, &out, seed)?;
            for artifact in &manifest.artifacts {
                println!("wrote {}", out.join(artifact).display());
            }
            Ok(0)
        }
        Command::Steer {
            backend,
            target,
            catalog,
            samples,
            questionnaire,
            out,
            seed,
        } => {
            let target = Foundation::from_name(&target)
                .ok_or_else(|| Error::Config(format!("unknown foundation {target:?}")))?;
            let config = RunConfig::Steer {
                backend: resolve_backend(&backend, &file)?,
                plan: SessionPlan {
                    samples_per_question: samples,
                    seed,
                    ..Default::default()
                },
                target,
                catalog: catalog.as_ref().map(|p| path_string(p)),
                questionnaire: questionnaire.as_ref().map(|p| path_string(p)),
                cache: backend.cache.as_ref().map(|p| path_string(p)),
            };
            let manifest = report::execute_with_manifest(&config, &out, seed)?;
            for artifact in &manifest.artifacts {
                println!("wrote {}", out.join(artifact).display());
            }
            Ok(0)
        }
        Command::Embed {
            points,
            backend: _,
            perplexity,
            iterations,
            learning_rate,
            out,
            seed,
        } => {
            let config = RunConfig::Embed {
                points: path_string(&points),
                params: TsneParams {
                    perplexity,
                    iterations,
                    learning_rate,
                    seed,
                    ..Default::default()
                },
            };
            let manifest = report::execute_with_manifest(&config, &out, seed)?;
            for artifact in &manifest.artifacts {
                println!("wrote {}", out.join(artifact).display());
            }
            Ok(0)
        }
        Command::Donate {
            backend,
            context,
            episodes,
            script,
            patterns,
            out,
            seed,
        } => {
            let config = RunConfig::Donate {
                backend: resolve_backend(&backend, &file)?,
                context: parse_context(&context)?,
                episodes,
                seed,
                script: script.as_ref().map(|p| path_string(p)),
                patterns: patterns.as_ref().map(|p| path_string(p)),
                cache: backend.cache.as_ref().map(|p| path_string(p)),
            };
            let manifest = report::execute_with_manifest(&config, &out, seed)?;
            for artifact in &manifest.artifacts {
                println!("wrote {}", out.join(artifact).display());
            }
            Ok(0)
        }
        Command::Render {
            figure,
            input,
            backend: _,
            out,
            seed,
        } => {
            let config = RunConfig::Render {
                figure,
                input: path_string(&input),
            };
            let manifest = report::execute_with_manifest(&config, &out, seed)?;
            for artifact in &manifest.artifacts {
                println!("wrote {}", out.join(artifact).display());
            }
            Ok(0)
        }
        Command::Replay {
            manifest,
            out,
            backend: _,
            seed: _,
        } => {
            let results = report::replay(&manifest, &out)?;
            let mut all_ok = true;
            for (name, ok) in &results {
                println!("{} {}", if *ok { "ok      " } else { "MISMATCH" }, name);
                all_ok &= ok;
            }
            Ok(if all_ok { 0 } else { 1 })
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
