//! Snapshot directories: versioned text, one file per concern.
//!
//! ```text
//! MANIFEST            #snap 1 plus generation, counters and context order
//! config.json         engine configuration
//! contexts.json       context sources
//! contexts/<id>.krc   records as retained after ingestion
//! contexts/<id>.added keywords created by propagation, in creation order
//! contexts/<id>.ksp   working keyword proximity (#prox 1)
//! contexts/<id>.trav  traversal matrix (#prox 1)
//! paths.plog          click log (#plog 1)
//! sessions.json       session states
//! pending.json        categories waiting for the next cycle
//! events.jsonl        journal, one event per line
//! ```
//!
//! Structural and record-semantic proximities are recomputed on restore;
//! they depend only on the records.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use adaptrec_core::apweb::PathLog;
use adaptrec_core::corpus::{parse_record_file, write_record_file};
use adaptrec_core::proximity::{read_proximity, write_proximity};
use adaptrec_core::{AdaptiveContext, FuzzyCategory, IngestOptions, KnowledgeContext, ProximityKind};

use crate::config::{ContextSource, EngineConfig};
use crate::engine::{build_histories, ContextState, Engine, Event, Knowledge, MutableState, Result, Session};
use crate::error::ServiceError;

pub const SNAPSHOT_HEADER: &str = "#snap 1";

fn bad(message: impl Into<String>) -> ServiceError {
    ServiceError::Snapshot(message.into())
}

/// Writes the engine's state into `dir`, replacing an earlier snapshot.
pub fn write_snapshot(engine: &Engine, dir: &Path) -> Result<()> {
    let (knowledge, sessions, log, pending, journal, next_session) = engine.with_state(|st| {
        (
            engine.knowledge(),
            st.sessions.clone(),
            st.log.clone(),
            st.pending.clone(),
            st.journal.clone(),
            st.next_session,
        )
    });
    let contexts_dir = dir.join("contexts");
    if contexts_dir.exists() {
        fs::remove_dir_all(&contexts_dir)?;
    }
    fs::create_dir_all(&contexts_dir)?;

    let mut manifest = String::new();
    let _ = writeln!(manifest, "{SNAPSHOT_HEADER}");
    let _ = writeln!(manifest, "generation\t{}", knowledge.generation);
    let _ = writeln!(manifest, "clicks_learned\t{}", knowledge.clicks_learned);
    let _ = writeln!(manifest, "next_session\t{next_session}");
    let mut sources = Vec::new();
    for (id, cs) in &knowledge.contexts {
        let _ = writeln!(manifest, "context\t{id}\t{}", cs.paths);
        sources.push(cs.source.clone());
        let ctx = cs.context();
        fs::write(contexts_dir.join(format!("{id}.krc")), write_record_file(&ctx.to_records()))?;
        let mut added = String::new();
        for k in ctx.added_keywords() {
            let _ = writeln!(added, "{k}");
        }
        fs::write(contexts_dir.join(format!("{id}.added")), added)?;
        fs::write(contexts_dir.join(format!("{id}.ksp")), write_proximity(cs.adaptive.working()))?;
        fs::write(contexts_dir.join(format!("{id}.trav")), write_proximity(&cs.traversal))?;
    }
    fs::write(dir.join("MANIFEST"), manifest)?;
    fs::write(dir.join("config.json"), serde_json::to_string_pretty(engine.config())? + "\n")?;
    fs::write(dir.join("contexts.json"), serde_json::to_string_pretty(&sources)? + "\n")?;
    fs::write(dir.join("paths.plog"), log.to_text())?;
    fs::write(dir.join("sessions.json"), serde_json::to_string_pretty(&sessions)? + "\n")?;
    fs::write(dir.join("pending.json"), serde_json::to_string_pretty(&pending)? + "\n")?;
    let mut events = String::new();
    for e in &journal {
        events.push_str(&serde_json::to_string(e)?);
        events.push('\n');
    }
    fs::write(dir.join("events.jsonl"), events)?;
    Ok(())
}

struct Manifest {
    generation: u64,
    clicks_learned: usize,
    next_session: u64,
    contexts: Vec<(String, usize)>,
}

fn parse_manifest(text: &str) -> Result<Manifest> {
    let mut lines = text.lines();
    if lines.next() != Some(SNAPSHOT_HEADER) {
        return Err(bad(format!("MANIFEST must start with `{SNAPSHOT_HEADER}`")));
    }
    let mut m = Manifest {
        generation: 0,
        clicks_learned: 0,
        next_session: 0,
        contexts: Vec::new(),
    };
    for (ix, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split('\t').collect();
        let num = |s: &str| -> Result<u64> {
            s.parse()
                .map_err(|_| bad(format!("MANIFEST line {}: bad number `{s}`", ix + 2)))
        };
        match fields.as_slice() {
            ["generation", v] => m.generation = num(v)?,
            ["clicks_learned", v] => m.clicks_learned = num(v)? as usize,
            ["next_session", v] => m.next_session = num(v)?,
            ["context", id, paths] => m.contexts.push((id.to_string(), num(paths)? as usize)),
            _ => return Err(bad(format!("MANIFEST line {}: unrecognized `{line}`", ix + 2))),
        }
    }
    Ok(m)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))
}

fn restore_context(dir: &Path, source: ContextSource, paths: usize, config: &EngineConfig) -> Result<ContextState> {
    let id = source.id.clone();
    let file = |ext: &str| dir.join("contexts").join(format!("{id}.{ext}"));
    let records = parse_record_file(&fs::read_to_string(file("krc"))?)?;
    // the stored records are already filtered and stemmed
    let verbatim = IngestOptions {
        min_keyword_frequency: 1,
        stem: false,
    };
    let mut ctx = KnowledgeContext::from_records(records, verbatim)?;
    for k in fs::read_to_string(file("added"))?.lines() {
        ctx.add_keyword(k);
    }
    let mut working = read_proximity(
        &fs::read_to_string(file("ksp"))?,
        ProximityKind::KeywordSemantic,
        Some(ctx.keyword_count()),
    )?;
    working.set_unit_diagonal((0..ctx.keyword_count()).filter(|&k| !ctx.keyword_records()[k].is_empty()));
    let traversal = read_proximity(
        &fs::read_to_string(file("trav"))?,
        ProximityKind::Traversal,
        Some(ctx.document_count()),
    )?;
    let adaptive = AdaptiveContext::from_parts(id, ctx, working)?;
    ContextState::build(source, adaptive, Some((traversal, paths)), config)
}

pub fn restore_snapshot(dir: &Path) -> Result<Engine> {
    let manifest = parse_manifest(&fs::read_to_string(dir.join("MANIFEST"))?)?;
    let config: EngineConfig = read_json(&dir.join("config.json"))?;
    let sources: Vec<ContextSource> = read_json(&dir.join("contexts.json"))?;
    let mut by_id: BTreeMap<String, ContextSource> = sources.into_iter().map(|s| (s.id.clone(), s)).collect();

    let mut knowledge = Knowledge {
        generation: manifest.generation,
        clicks_learned: manifest.clicks_learned,
        ..Knowledge::default()
    };
    for (id, paths) in manifest.contexts {
        let source = by_id
            .remove(&id)
            .ok_or_else(|| bad(format!("context `{id}` missing from contexts.json")))?;
        let state = restore_context(dir, source, paths, &config)?;
        knowledge.contexts.insert(id, Arc::new(state));
    }

    let log = PathLog::parse(&fs::read_to_string(dir.join("paths.plog"))?)?;
    if knowledge.clicks_learned > log.len() {
        return Err(bad("MANIFEST clicks_learned exceeds the click log"));
    }
    let sessions: BTreeMap<String, Session> = read_json(&dir.join("sessions.json"))?;
    let pending: Vec<FuzzyCategory> = read_json(&dir.join("pending.json"))?;
    let journal = read_journal(&fs::read_to_string(dir.join("events.jsonl"))?)?;
    knowledge.histories = build_histories(&knowledge, &sessions, &log.clicks()[..knowledge.clicks_learned]);

    let state = MutableState {
        sessions,
        log,
        pending,
        journal,
        next_session: manifest.next_session,
    };
    Ok(Engine::from_parts(config, knowledge, state))
}

pub fn read_journal(text: &str) -> Result<Vec<Event>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(ix, l)| serde_json::from_str(l).map_err(|e| bad(format!("journal line {}: {e}", ix + 1))))
        .collect()
}
