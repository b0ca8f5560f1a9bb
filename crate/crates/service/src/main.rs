use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use adaptrec::{read_journal, restore_snapshot, simulate, write_snapshot, CommunitySpec, Engine, EngineConfig};
use adaptrec_core::apweb::{self, PathLog};
use adaptrec_core::corpus::write_record_file;
use adaptrec_core::proximity::{
    combine_structural, inwards_proximity, keyword_semantic_proximity, outwards_proximity, read_proximity,
    record_semantic_proximity, write_proximity,
};
use adaptrec_core::spreading::spread;
use adaptrec_core::{ingest, IngestOptions, Proximity, ProximityKind, RewardConfig, SpreadConfig};
use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "adaptrec", version, about = "Adaptive recommendation over knowledge contexts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Corpus {
    /// Record file (`#krc 1`).
    records: PathBuf,
    /// Drop keywords qualifying fewer records than this.
    #[arg(long, default_value_t = 2)]
    min_freq: usize,
    #[arg(long)]
    stem: bool,
}

impl Corpus {
    fn load(&self) -> anyhow::Result<adaptrec_core::KnowledgeContext> {
        let opts = IngestOptions {
            min_keyword_frequency: self.min_freq,
            stem: self.stem,
        };
        ingest(&self.records, opts).with_context(|| format!("ingesting {}", self.records.display()))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Ingest a record file and print its set sizes.
    Ingest {
        #[command(flatten)]
        corpus: Corpus,
        /// Write the retained records back out.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute one proximity network as `#prox 1` text.
    Prox {
        #[command(flatten)]
        corpus: Corpus,
        /// in, out, structural, ksp or rsp.
        #[arg(long, default_value = "ksp")]
        kind: String,
        /// Weight of the inwards term for `structural`.
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spreading activation over a `#prox 1` network.
    Sa {
        #[arg(long)]
        network: PathBuf,
        /// Comma-separated node indices.
        #[arg(long, value_delimiter = ',', required = true)]
        cues: Vec<usize>,
        #[arg(long)]
        top: Option<usize>,
        #[arg(long, default_value_t = 0.8)]
        decay: f64,
        /// Read the network as directed.
        #[arg(long)]
        directed: bool,
        /// Node count, when larger than the highest index in the file.
        #[arg(long)]
        nodes: Option<usize>,
    },
    /// Learn the traversal matrix from a click log.
    LearnPaths {
        /// Click log (`#plog 1`).
        log: PathBuf,
        /// Record file whose documents index the matrix.
        #[arg(long)]
        records: PathBuf,
        #[arg(long, default_value_t = apweb::DEFAULT_SESSION_GAP)]
        gap: i64,
        #[arg(long, default_value_t = 0.3)]
        symm: f64,
        #[arg(long, default_value_t = 0.5)]
        trans: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a synthetic community and write its report.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "ADAPTREC_CONFIG")]
        config: PathBuf,
        /// Overrides the configured listen address.
        #[arg(long, env = "ADAPTREC_LISTEN")]
        listen: Option<String>,
    },
    /// Replay an event journal and write the resulting snapshot.
    Replay {
        #[arg(long)]
        config: PathBuf,
        /// Journal (`events.jsonl`) to replay.
        #[arg(long)]
        events: PathBuf,
        /// Snapshot directory to write.
        #[arg(long)]
        out: PathBuf,
    },
}

fn emit(text: &str, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match cli.command {
        Command::Ingest { corpus, out } => {
            let ctx = corpus.load()?;
            println!("records\t{}", ctx.record_count());
            println!("keywords\t{}", ctx.keyword_count());
            println!("cited\t{}", ctx.cited_count());
            println!("citing\t{}", ctx.citing_records().count());
            println!("documents\t{}", ctx.document_count());
            println!("citations\t{}", ctx.citation_count());
            if let Some(p) = out {
                fs::write(&p, write_record_file(&ctx.to_records()))?;
            }
        }
        Command::Prox {
            corpus,
            kind,
            lambda,
            out,
        } => {
            let ctx = corpus.load()?;
            let p: Proximity = match kind.as_str() {
                "in" | "inwards" => inwards_proximity(&ctx),
                "out" | "outwards" => outwards_proximity(&ctx),
                "structural" => combine_structural(&inwards_proximity(&ctx), &outwards_proximity(&ctx), lambda)?,
                "ksp" | "keyword_semantic" => keyword_semantic_proximity(&ctx),
                "rsp" | "record_semantic" => record_semantic_proximity(&ctx),
                other => bail!("unknown proximity kind `{other}`"),
            };
            emit(&write_proximity(&p), out.as_deref())?;
        }
        Command::Sa {
            network,
            cues,
            top,
            decay,
            directed,
            nodes,
        } => {
            let text = fs::read_to_string(&network)?;
            let kind = if directed {
                ProximityKind::Traversal
            } else {
                ProximityKind::Composite
            };
            let w: Proximity = read_proximity(&text, kind, nodes)?;
            let cfg = SpreadConfig {
                decay,
                top_k: top,
                ..SpreadConfig::default()
            };
            let result = spread(&w, &cues, &cfg)?;
            if !result.converged {
                tracing::warn!(iterations = result.iterations, "activation did not converge");
            }
            for (node, a) in result.ranking {
                println!("{node}\t{a}");
            }
        }
        Command::LearnPaths {
            log,
            records,
            gap,
            symm,
            trans,
            out,
        } => {
            let ctx = ingest(&records, IngestOptions::default())?;
            let log = PathLog::parse(&fs::read_to_string(&log)?)?;
            let named = apweb::extract_paths(&log, gap)?;
            let paths = apweb::resolve_paths(&ctx, &named)?;
            let rewards = RewardConfig {
                symm_factor: symm,
                trans_factor: trans,
            };
            let t: Proximity = apweb::learn(&paths, ctx.document_count(), &rewards)?;
            tracing::info!(paths = paths.len(), "learned");
            emit(&write_proximity(&t), out.as_deref())?;
        }
        Command::Simulate { spec, out } => {
            let spec = CommunitySpec::from_toml_file(&spec)?;
            let rt = tokio::runtime::Runtime::new()?;
            let (report, _) = rt.block_on(simulate(&spec))?;
            emit(&report.to_tsv(), out.as_deref())?;
        }
        Command::Serve { config, listen } => {
            let mut cfg = EngineConfig::from_toml_file(&config)?;
            if let Some(l) = listen {
                cfg.listen = l;
            }
            let listen = cfg.listen.clone();
            let engine = match &cfg.state_dir {
                Some(dir) if dir.join("MANIFEST").exists() => {
                    tracing::info!(dir = %dir.display(), "restoring state");
                    restore_snapshot(dir)?
                }
                _ => Engine::new(cfg)?,
            };
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(adaptrec::http::serve(Arc::new(engine), &listen))?;
        }
        Command::Replay { config, events, out } => {
            let cfg = EngineConfig::from_toml_file(&config)?;
            let journal = read_journal(&fs::read_to_string(&events)?)?;
            let engine = Engine::replay(cfg, &journal)?;
            fs::create_dir_all(&out)?;
            write_snapshot(&engine, &out)?;
            tracing::info!(events = journal.len(), dir = %out.display(), "replayed");
        }
    }
    Ok(())
}
