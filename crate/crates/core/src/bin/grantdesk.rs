//! Operator command line: a thin wrapper over the library.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use clap::{Parser, Subcommand};
use grantdesk::api::{self, ApiOptions};
use grantdesk::auth::TokenIssuer;
use grantdesk::clock::Clock;
use grantdesk::config::{self, Config, ConfigError};
use grantdesk::corpus::{self, Corpus, CorpusSpec};
use grantdesk::model::{CallId, UserId};
use grantdesk::platform::Platform;
use grantdesk::store::Store;

#[derive(Parser)]
#[command(name = "grantdesk", version, about = "Open review of research funding proposals")]
struct Cli {
    /// JSON config file; environment variables take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Store file, overriding STORE_PATH.
    #[arg(long, global = true)]
    store: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve the HTTP API.
    Serve {
        #[arg(long)]
        port: Option<u16>,
    },
    /// Migrate the store and load a corpus (the bundled one by default).
    Seed { corpus: Option<PathBuf> },
    /// Fire every deadline-driven transition due at `--now`.
    SweepDeadlines {
        #[arg(long)]
        now: Option<DateTime<Utc>>,
        #[arg(long)]
        call: Option<String>,
    },
    /// Assign reviewers to every submitted proposal of a call.
    Assign {
        call: String,
        #[arg(long)]
        now: Option<DateTime<Utc>>,
        /// Acting user; defaults to the call's agency representative.
        #[arg(long = "as")]
        actor: Option<String>,
    },
    /// Decide every ready proposal of a call by the funding recommendation.
    Decide {
        call: String,
        #[arg(long)]
        now: Option<DateTime<Utc>>,
        #[arg(long = "as")]
        actor: Option<String>,
    },
    /// Print everything stored about a call as JSON.
    Export {
        call: String,
        /// Print the funding recommendation as CSV instead.
        #[arg(long)]
        csv: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic corpus.
    Generate {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the whole store as a corpus document.
    Dump {
        #[arg(long)]
        out: PathBuf,
    },
}

struct Failure {
    code: String,
    message: String,
}

impl<E: std::fmt::Display> From<(&str, E)> for Failure {
    fn from((code, e): (&str, E)) -> Self {
        Failure { code: code.to_owned(), message: e.to_string() }
    }
}

macro_rules! coded {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Failure { code: e.code().to_owned(), message: e.to_string() }
            }
        }
    )*};
}
coded!(ConfigError, grantdesk::platform::PlatformError, grantdesk::store::StoreError, grantdesk::corpus::CorpusError);

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        let code = if e.kind() == std::io::ErrorKind::BrokenPipe { "BROKEN_PIPE" } else { "IO_ERROR" };
        (code, e).into()
    }
}

/// `println!` that reports a closed stdout instead of panicking.
macro_rules! out {
    ($($arg:tt)*) => {
        writeln!(std::io::stdout().lock(), $($arg)*)?
    };
}

fn store_path(cli: &Cli) -> Result<PathBuf, Failure> {
    if let Some(p) = &cli.store {
        return Ok(p.clone());
    }
    if let Some(p) = std::env::var_os("STORE_PATH").filter(|p| !p.is_empty()) {
        return Ok(PathBuf::from(p));
    }
    let file = cli.config.as_deref().map(config::read_file).transpose()?;
    file.and_then(|f| f.store_path).ok_or_else(|| ConfigError::Missing("STORE_PATH").into())
}

/// Platform for one-shot commands. The clock is frozen at `now` when given.
fn platform(cli: &Cli, now: Option<DateTime<Utc>>) -> Result<Platform, Failure> {
    let store = Arc::new(Store::open(store_path(cli)?)?);
    let clock = match now {
        Some(t) => Clock::frozen(t),
        None => std::env::var("CLOCK_MODE").ok().map(|m| m.parse()).transpose().map_err(|e: String| Failure::from(("CONFIG_INVALID", e)))?.unwrap_or(Clock::System),
    };
    // Commands never issue tokens, so the key only has to exist.
    let tokens = TokenIssuer::new(rand::random::<[u8; 32]>().to_vec(), chrono::Duration::hours(1));
    Ok(Platform::new(store, tokens, clock)?)
}

fn acting(p: &Platform, call: &CallId, actor: &Option<String>) -> Result<grantdesk::access::Principal, Failure> {
    Ok(match actor {
        Some(id) => p.principal(&UserId::from(id.as_str()))?,
        None => p.representative_of(call)?,
    })
}

fn print_json(v: &impl serde::Serialize) -> Result<(), Failure> {
    out!("{}", serde_json::to_string_pretty(v).map_err(|e| Failure::from(("INTERNAL", e)))?);
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Serve { port } => {
            let mut cfg = Config::from_env(cli.config.as_deref())?;
            if let Some(p) = port {
                cfg.port = *p;
            }
            if let Some(s) = &cli.store {
                cfg.store_path = s.clone();
            }
            let store = Arc::new(Store::open_migrated(&cfg.store_path)?);
            let platform = Platform::new(store, TokenIssuer::new(cfg.token_secret.as_bytes().to_vec(), cfg.token_ttl), cfg.clock.clone())?;
            let app = api::router(platform, ApiOptions { max_body_bytes: cfg.max_body_bytes, cors_origin: cfg.cors_origin.clone() });
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(("0.0.0.0", cfg.port)).await?;
                tracing::info!(addr = %listener.local_addr()?, store = %cfg.store_path.display(), "serving");
                api::serve(listener, app).await
            })?;
        }
        Command::Seed { corpus: file } => {
            let store = Store::open_migrated(store_path(&cli)?)?;
            let corpus = match file {
                Some(f) => Corpus::read(f)?,
                None => Corpus::bundled(),
            };
            let report = corpus::load(&corpus, &store)?;
            print_json(&report)?;
            let rows = store.read(|tx| tx.table_counts())?;
            for (table, n) in rows {
                out!("{table:<20} {n}");
            }
        }
        Command::SweepDeadlines { now, call } => {
            let p = platform(&cli, *now)?;
            let call = call.as_deref().map(CallId::from);
            for e in p.sweep_deadlines(call.as_ref(), *now)? {
                out!("{}", serde_json::to_string(&e).map_err(|e| Failure::from(("INTERNAL", e)))?);
            }
        }
        Command::Assign { call, now, actor } => {
            let p = platform(&cli, *now)?;
            let call = CallId::from(call.as_str());
            let who = acting(&p, &call, actor)?;
            let run = p.assign_call(&who, &call)?;
            for a in &run.assignments {
                out!("{}\t{}\t{:.4}", a.proposal_id, a.reviewer_id, a.score);
            }
            eprintln!("{} assignment(s), {} proposal(s) moved", run.assignments.len(), run.events.len());
        }
        Command::Decide { call, now, actor } => {
            let p = platform(&cli, *now)?;
            let call = CallId::from(call.as_str());
            let who = acting(&p, &call, actor)?;
            for d in p.decide_call(&who, &call)? {
                out!("{}\t{:?}\t{}", d.proposal_id, d.outcome, d.explanation);
            }
        }
        Command::Export { call, csv, out } => {
            let p = platform(&cli, None)?;
            let call = CallId::from(call.as_str());
            let export = p.export_call(&grantdesk::access::Principal::system(), &call)?;
            let text = if *csv {
                export.recommendation_csv.unwrap_or_default()
            } else {
                serde_json::to_string_pretty(&export).map_err(|e| Failure::from(("INTERNAL", e)))?
            };
            match out {
                Some(path) => std::fs::write(path, text)?,
                None => out!("{text}"),
            }
        }
        Command::Generate { seed, out } => {
            let spec = CorpusSpec { seed: seed.unwrap_or(CorpusSpec::default().seed), ..CorpusSpec::default() };
            let corpus = corpus::generate(&spec)?;
            corpus.write(out)?;
            print_json(&corpus.manifest)?;
        }
        Command::Dump { out } => {
            let store = Store::open(store_path(&cli)?)?;
            store.require_current()?;
            let corpus = corpus::dump(&store)?;
            corpus.write(out)?;
            print_json(&corpus.manifest.counts)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}: {}", f.code, f.message);
            ExitCode::from(if f.code.starts_with("CONFIG_") { 2 } else { 1 })
        }
    }
}
