//! Engine state: knowledge contexts, sessions, the click log and the
//! adaptation cycle.
//!
//! Readers take an `Arc<Knowledge>` and work on it without holding any lock.
//! Adaptation cycles build the next `Knowledge` off to the side and swap it in.
//! Every state change is journaled so a journal replays to the same state.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use adaptrec_core::apweb::{self, Click, NamedPath, PathLog};
use adaptrec_core::corpus::{ingest, Record};
use adaptrec_core::proximity::{
    combine_structural, inwards_proximity, outwards_proximity, record_semantic_proximity,
};
use adaptrec_core::spreading::spread;
use adaptrec_core::talkmine::{self, Answer, Answerer, InterestProfile, Step};
use adaptrec_core::{
    AdaptiveContext, ConversationState, FuzzyCategory, IngestOptions, KnowledgeContext, Proximity, Question,
};
use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};

use crate::config::{AdaptationMode, ContextSource, EngineConfig};
use crate::error::ServiceError;

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;

/// Document networks a related-documents request can spread over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Network {
    Composite,
    Structural,
    Inwards,
    Outwards,
    Traversal,
}

impl FromStr for Network {
    type Err = ServiceError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "composite" => Network::Composite,
            "structural" => Network::Structural,
            "inwards" | "in" => Network::Inwards,
            "outwards" | "out" => Network::Outwards,
            "traversal" => Network::Traversal,
            other => return Err(ServiceError::BadRequest(format!("unknown network `{other}`"))),
        })
    }
}

/// One information resource with everything derived from it.
#[derive(Clone, Debug)]
pub struct ContextState {
    pub source: ContextSource,
    pub adaptive: AdaptiveContext,
    pub inwards: Arc<Proximity>,
    pub outwards: Arc<Proximity>,
    pub structural: Arc<Proximity>,
    pub record_semantic: Arc<Proximity>,
    /// Learned from the click log, directed.
    pub traversal: Proximity,
    pub composite: Proximity,
    /// Paths that contributed to `traversal`.
    pub paths: usize,
}

impl ContextState {
    pub(crate) fn build(
        source: ContextSource,
        adaptive: AdaptiveContext,
        traversal: Option<(Proximity, usize)>,
        config: &EngineConfig,
    ) -> Result<Self> {
        let ctx = adaptive.context();
        let inwards = inwards_proximity(ctx);
        let outwards = outwards_proximity(ctx);
        let structural = combine_structural(&inwards, &outwards, config.structural_lambda)?;
        let record_semantic = record_semantic_proximity(ctx);
        let (traversal, paths) =
            traversal.unwrap_or_else(|| (Proximity::new(adaptrec_core::ProximityKind::Traversal, ctx.document_count()), 0));
        let mut state = Self {
            source,
            adaptive,
            inwards: Arc::new(inwards),
            outwards: Arc::new(outwards),
            structural: Arc::new(structural),
            record_semantic: Arc::new(record_semantic),
            composite: Proximity::new(adaptrec_core::ProximityKind::Composite, 0),
            traversal,
            paths,
        };
        state.rebuild_composite(config)?;
        Ok(state)
    }

    fn rebuild_composite(&mut self, config: &EngineConfig) -> Result<()> {
        self.composite = apweb::composite_proximity(
            self.adaptive.context(),
            &self.traversal,
            &self.structural,
            &self.record_semantic,
            config.composite_weights(),
        )?;
        Ok(())
    }

    /// Relearns the traversal matrix from paths whose documents all lie in
    /// this context.
    fn relearn(&mut self, named: &[NamedPath], config: &EngineConfig) -> Result<()> {
        let ctx = self.adaptive.context();
        let local: Vec<NamedPath> = named
            .iter()
            .filter(|p| p.iter().all(|d| ctx.document_id(d).is_some()))
            .cloned()
            .collect();
        let resolved = apweb::resolve_paths(ctx, &local)?;
        self.traversal = apweb::learn(&resolved, ctx.document_count(), &config.rewards())?;
        self.paths = resolved.len();
        self.rebuild_composite(config)
    }

    pub fn context(&self) -> &KnowledgeContext {
        self.adaptive.context()
    }

    pub fn network(&self, network: Network) -> &Proximity {
        match network {
            Network::Composite => &self.composite,
            Network::Structural => &self.structural,
            Network::Inwards => &self.inwards,
            Network::Outwards => &self.outwards,
            Network::Traversal => &self.traversal,
        }
    }

    pub fn stats(&self, generation: u64) -> ContextStats {
        let ctx = self.context();
        ContextStats {
            id: self.source.id.clone(),
            records: ctx.record_count(),
            keywords: ctx.keyword_count(),
            added_keywords: ctx.added_keywords().to_vec(),
            cited: ctx.cited_count(),
            documents: ctx.document_count(),
            citations: ctx.citation_count(),
            paths: self.paths,
            working_entries: self.adaptive.working().nnz(),
            traversal_entries: self.traversal.nnz(),
            generation,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Knowledge {
    pub contexts: BTreeMap<String, Arc<ContextState>>,
    /// Per-user contexts built from the records each user has clicked.
    pub histories: BTreeMap<String, Arc<AdaptiveContext>>,
    pub generation: u64,
    /// Log prefix the histories and traversal matrices were built from.
    pub clicks_learned: usize,
}

impl Knowledge {
    pub fn context(&self, id: &str) -> Result<&ContextState> {
        self.contexts
            .get(id)
            .map(|c| &**c)
            .ok_or_else(|| ServiceError::UnknownContext(id.to_string()))
    }

    /// A click target must be a record or a citation document somewhere.
    pub fn knows_document(&self, name: &str) -> bool {
        self.contexts
            .values()
            .any(|c| c.context().document_id(name).is_some() || c.context().record_id(name).is_some())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionClick {
    pub time: i64,
    pub document: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub user: String,
    pub created: i64,
    pub last_active: i64,
    pub auto_answer_level: f64,
    pub profile: Vec<String>,
    pub conversation: Option<ConversationState>,
    pub question: Option<Question>,
    pub category: Option<FuzzyCategory>,
    pub clicks: Vec<SessionClick>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    CreateSession {
        time: i64,
        session: String,
        user: String,
        auto_answer_level: f64,
    },
    Query {
        time: i64,
        session: String,
        keywords: Vec<String>,
    },
    Answer {
        time: i64,
        session: String,
        keyword: String,
        relevant: bool,
    },
    Click {
        time: i64,
        session: String,
        document: String,
    },
    /// A cycle that consumed the first `categories` queued categories and
    /// learned from the first `clicks` clicks.
    Adapt { categories: usize, clicks: usize },
    AddContext { source: ContextSource },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub(crate) struct MutableState {
    pub sessions: BTreeMap<String, Session>,
    pub log: PathLog,
    pub pending: Vec<FuzzyCategory>,
    pub journal: Vec<Event>,
    pub next_session: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextMembership {
    pub context: String,
    pub membership: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuestionView {
    pub keyword: String,
    pub memberships: Vec<ContextMembership>,
    pub spread: f64,
}

impl From<&Question> for QuestionView {
    fn from(q: &Question) -> Self {
        Self {
            keyword: q.keyword.clone(),
            memberships: q
                .memberships
                .iter()
                .map(|(c, m)| ContextMembership {
                    context: c.clone(),
                    membership: *m,
                })
                .collect(),
            spread: q.spread,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub context: String,
    pub record_id: String,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Related {
    pub document_id: String,
    pub activation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryEntry {
    pub keyword: String,
    pub membership: f64,
    pub contexts: Vec<String>,
}

fn category_entries(cat: &FuzzyCategory) -> Vec<CategoryEntry> {
    cat.members
        .iter()
        .map(|(k, m)| CategoryEntry {
            keyword: k.clone(),
            membership: m.value,
            contexts: m.contexts.clone(),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutoAnswered {
    pub keyword: String,
    pub relevant: bool,
}

/// Result of a query or an answer: either the next question or the
/// finished category with its recommendations.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question: Option<QuestionView>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recommendations: Option<Vec<Recommendation>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<Vec<CategoryEntry>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub auto_answered: Vec<AutoAnswered>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unresolved: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagatedKeyword {
    pub context: String,
    pub keyword: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub generation: u64,
    pub categories: usize,
    pub reinforced: usize,
    pub decayed: usize,
    pub propagated: Vec<PropagatedKeyword>,
    pub clicks: usize,
    pub paths: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextStats {
    pub id: String,
    pub records: usize,
    pub keywords: usize,
    pub added_keywords: Vec<String>,
    pub cited: usize,
    pub documents: usize,
    pub citations: usize,
    pub paths: usize,
    pub working_entries: usize,
    pub traversal_entries: usize,
    pub generation: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineStats {
    pub generation: u64,
    pub contexts: Vec<String>,
    pub sessions: usize,
    pub clicks: usize,
    /// Path triples extractable from the whole log right now.
    pub paths: usize,
    pub pending_categories: usize,
    pub histories: usize,
}

pub struct Engine {
    config: EngineConfig,
    knowledge: RwLock<Arc<Knowledge>>,
    state: Mutex<MutableState>,
    /// Serializes everything that replaces `knowledge`.
    writer: Mutex<()>,
    /// Off while replaying, where cycles come from the journal.
    auto_cycles: AtomicBool,
}

pub(crate) fn validate_context_id(id: &str) -> Result<()> {
    let ok = !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || "_.-".contains(c));
    if !ok {
        return Err(ServiceError::BadRequest(format!("invalid context id `{id}`")));
    }
    Ok(())
}

fn validate_config(config: &EngineConfig) -> Result<()> {
    config.rewards().validate()?;
    config.hebbian.validate()?;
    let w = config.composite;
    if [w.traversal, w.structural, w.semantic].iter().any(|&x| x < 0.0)
        || (w.traversal + w.structural + w.semantic - 1.0).abs() > 1e-9
    {
        return Err(ServiceError::Config("composite weights must be nonnegative and sum to 1".into()));
    }
    if !(0.0..=1.0).contains(&config.structural_lambda) {
        return Err(ServiceError::Config("structural_lambda must lie in [0, 1]".into()));
    }
    if !(config.spread.decay > 0.0 && config.spread.decay < 1.0) {
        return Err(ServiceError::Config("spread decay must lie in (0, 1)".into()));
    }
    let mut seen = BTreeSet::new();
    for c in &config.contexts {
        validate_context_id(&c.id)?;
        if !seen.insert(&c.id) {
            return Err(ServiceError::DuplicateContext(c.id.clone()));
        }
    }
    Ok(())
}

/// Merges record sets by name: keyword and citation sets are unioned.
fn history_context(user: &str, docs: &BTreeSet<String>, k: &Knowledge) -> Option<AdaptiveContext> {
    let mut merged: BTreeMap<&str, (BTreeSet<String>, BTreeSet<String>)> = BTreeMap::new();
    for name in docs {
        for cs in k.contexts.values() {
            let ctx = cs.context();
            let Some(r) = ctx.record_id(name) else {
                continue;
            };
            let entry = merged.entry(name.as_str()).or_default();
            entry
                .0
                .extend(ctx.keywords_of_record(r).iter().map(|&kw| ctx.keywords().name(kw).to_string()));
            if let Some(d) = ctx.document_of_record(r) {
                entry
                    .1
                    .extend(ctx.cites(d).iter().map(|&t| ctx.documents().name(t).to_string()));
            }
        }
    }
    if merged.is_empty() {
        return None;
    }
    let records: Vec<Record> = merged
        .into_iter()
        .map(|(id, (kws, cites))| Record::new(id, kws, cites))
        .collect();
    let opts = IngestOptions {
        min_keyword_frequency: 1,
        stem: false,
    };
    let ctx = KnowledgeContext::from_records(records, opts).ok()?;
    Some(AdaptiveContext::new(format!("history:{user}"), ctx))
}

pub(crate) fn build_histories(
    k: &Knowledge,
    sessions: &BTreeMap<String, Session>,
    clicks: &[Click],
) -> BTreeMap<String, Arc<AdaptiveContext>> {
    let mut per_user: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    for c in clicks {
        if let Some(s) = sessions.get(&c.session) {
            per_user.entry(s.user.as_str()).or_default().insert(c.document.clone());
        }
    }
    per_user
        .into_iter()
        .filter_map(|(user, docs)| history_context(user, &docs, k).map(|h| (user.to_string(), Arc::new(h))))
        .collect()
}

fn log_prefix(log: &PathLog, clicks: usize) -> PathLog {
    let mut out = PathLog::new();
    for c in &log.clicks()[..clicks] {
        out.push(c.clone());
    }
    out
}

impl Engine {
    /// Ingests every configured context.
    pub fn new(config: EngineConfig) -> Result<Self> {
        validate_config(&config)?;
        let mut contexts = BTreeMap::new();
        for source in &config.contexts {
            let ctx = ingest(&source.records, source.options())?;
            let adaptive = AdaptiveContext::new(source.id.clone(), ctx);
            let state = ContextState::build(source.clone(), adaptive, None, &config)?;
            contexts.insert(source.id.clone(), Arc::new(state));
        }
        let knowledge = Knowledge {
            contexts,
            ..Knowledge::default()
        };
        Ok(Self::from_parts(config, knowledge, MutableState::default()))
    }

    pub(crate) fn from_parts(config: EngineConfig, knowledge: Knowledge, state: MutableState) -> Self {
        Self {
            config,
            knowledge: RwLock::new(Arc::new(knowledge)),
            state: Mutex::new(state),
            writer: Mutex::new(()),
            auto_cycles: AtomicBool::new(true),
        }
    }

    /// Rebuilds the state a journal describes, starting from the configured
    /// contexts.
    pub fn replay(config: EngineConfig, events: &[Event]) -> Result<Self> {
        let engine = Self::new(config)?;
        engine.auto_cycles.store(false, Ordering::SeqCst);
        for (ix, event) in events.iter().enumerate() {
            engine
                .apply(event)
                .map_err(|e| ServiceError::Snapshot(format!("event {}: {e}", ix + 1)))?;
        }
        engine.auto_cycles.store(true, Ordering::SeqCst);
        Ok(engine)
    }

    fn apply(&self, event: &Event) -> Result<()> {
        match event {
            Event::CreateSession {
                time,
                session,
                user,
                auto_answer_level,
            } => {
                let id = self.create_session(Some(user.clone()), Some(*auto_answer_level), *time)?;
                if &id != session {
                    return Err(ServiceError::Snapshot(format!(
                        "session id diverged: journal `{session}`, replay `{id}`"
                    )));
                }
            }
            Event::Query { time, session, keywords } => {
                self.query(session, keywords.clone(), *time)?;
            }
            Event::Answer {
                time,
                session,
                keyword,
                relevant,
            } => {
                self.answer(session, keyword, *relevant, *time)?;
            }
            Event::Click { time, session, document } => {
                self.record_click(session, document, *time)?;
            }
            Event::Adapt { categories, clicks } => {
                self.cycle(Some((*categories, *clicks)))?;
            }
            Event::AddContext { source } => {
                self.add_context(source.clone())?;
            }
        }
        Ok(())
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    /// The current consistent view. Holding it never blocks writers.
    pub fn knowledge(&self) -> Arc<Knowledge> {
        self.knowledge.read().clone()
    }

    pub fn journal(&self) -> Vec<Event> {
        self.state.lock().journal.clone()
    }

    pub fn path_log(&self) -> PathLog {
        self.state.lock().log.clone()
    }

    pub fn session(&self, id: &str) -> Result<Session> {
        self.state
            .lock()
            .sessions
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    pub(crate) fn with_state<T>(&self, f: impl FnOnce(&MutableState) -> T) -> T {
        f(&self.state.lock())
    }

    pub fn create_session(&self, user: Option<String>, auto_answer_level: Option<f64>, time: i64) -> Result<String> {
        let level = auto_answer_level.unwrap_or(0.0);
        if !(0.0..=1.0).contains(&level) {
            return Err(ServiceError::BadRequest(format!("auto_answer_level must lie in [0, 1], got {level}")));
        }
        let user = user.unwrap_or_else(|| "anonymous".to_string());
        let mut st = self.state.lock();
        st.next_session += 1;
        let id = format!("s{:06}", st.next_session);
        st.sessions.insert(
            id.clone(),
            Session {
                id: id.clone(),
                user: user.clone(),
                created: time,
                last_active: time,
                auto_answer_level: level,
                profile: Vec::new(),
                conversation: None,
                question: None,
                category: None,
                clicks: Vec::new(),
            },
        );
        st.journal.push(Event::CreateSession {
            time,
            session: id.clone(),
            user,
            auto_answer_level: level,
        });
        Ok(id)
    }

    pub fn query(&self, session: &str, keywords: Vec<String>, time: i64) -> Result<Turn> {
        let profile = InterestProfile::new(keywords.iter().cloned())?;
        let (turn, finished) = {
            let mut st = self.state.lock();
            let k = self.knowledge();
            let s = st
                .sessions
                .get(session)
                .ok_or_else(|| ServiceError::UnknownSession(session.to_string()))?;
            let contexts: Vec<&AdaptiveContext> = k.contexts.values().map(|c| &c.adaptive).collect();
            let history = k.histories.get(&s.user).map(|h| &**h);
            let conversation = talkmine::init_category(&profile, &contexts, history, self.config.conversation)?;
            let unresolved = conversation.unresolved_profile.clone();
            let s = st.sessions.get_mut(session).expect("checked above");
            s.profile = keywords.clone();
            s.conversation = Some(conversation);
            s.question = None;
            s.category = None;
            s.last_active = time;
            st.journal.push(Event::Query {
                time,
                session: session.to_string(),
                keywords,
            });
            let (mut turn, finished) = self.advance(&mut st, session, &k)?;
            turn.unresolved = unresolved;
            (turn, finished)
        };
        self.after_category(finished)?;
        Ok(turn)
    }

    pub fn answer(&self, session: &str, keyword: &str, relevant: bool, time: i64) -> Result<Turn> {
        let (turn, finished) = {
            let mut st = self.state.lock();
            let k = self.knowledge();
            let s = st
                .sessions
                .get_mut(session)
                .ok_or_else(|| ServiceError::UnknownSession(session.to_string()))?;
            let outstanding = s.question.as_ref().map(|q| q.keyword.as_str());
            if outstanding != Some(keyword) {
                return Err(ServiceError::Conflict(match outstanding {
                    Some(q) => format!("outstanding question is about `{q}`, not `{keyword}`"),
                    None => "no question is outstanding".to_string(),
                }));
            }
            let conversation = s.conversation.as_mut().expect("a question implies a conversation");
            conversation.apply_answer(keyword, Answer::user(relevant))?;
            s.question = None;
            s.last_active = time;
            st.journal.push(Event::Answer {
                time,
                session: session.to_string(),
                keyword: keyword.to_string(),
                relevant,
            });
            self.advance(&mut st, session, &k)?
        };
        self.after_category(finished)?;
        Ok(turn)
    }

    /// Runs the conversation until it needs the user or is done. Returns
    /// whether a nonempty category was queued.
    fn advance(&self, st: &mut MutableState, session: &str, k: &Knowledge) -> Result<(Turn, bool)> {
        let s = st.sessions.get_mut(session).expect("caller checked");
        let conversation = s.conversation.as_mut().expect("caller set a conversation");
        let mut turn = Turn::default();
        loop {
            match conversation.next_question() {
                Step::Ask(q) => {
                    let auto = conversation.auto_answer(&q, s.auto_answer_level, self.config.auto_answer_threshold);
                    match auto {
                        Some(a) => {
                            debug_assert_eq!(a.answered_by, Answerer::History);
                            conversation.apply_answer(&q.keyword, a)?;
                            turn.auto_answered.push(AutoAnswered {
                                keyword: q.keyword.clone(),
                                relevant: a.relevant,
                            });
                        }
                        None => {
                            turn.question = Some(QuestionView::from(&q));
                            s.question = Some(q);
                            return Ok((turn, false));
                        }
                    }
                }
                Step::Done => {
                    let category = conversation.finalize();
                    s.conversation = None;
                    turn.category = Some(category_entries(&category));
                    turn.recommendations = Some(rank(k, &category, self.config.recommendations_n));
                    let queued = !category.is_empty();
                    s.category = Some(category.clone());
                    if queued {
                        st.pending.push(category);
                    }
                    return Ok((turn, queued));
                }
            }
        }
    }

    fn after_category(&self, queued: bool) -> Result<()> {
        if queued
            && self.config.adaptation_mode == AdaptationMode::PerCategory
            && self.auto_cycles.load(Ordering::SeqCst)
        {
            self.run_adaptation_cycle()?;
        }
        Ok(())
    }

    pub fn recommendations(&self, session: &str, n: usize) -> Result<Vec<Recommendation>> {
        let category = {
            let st = self.state.lock();
            let s = st
                .sessions
                .get(session)
                .ok_or_else(|| ServiceError::UnknownSession(session.to_string()))?;
            s.category
                .clone()
                .ok_or_else(|| ServiceError::Conflict("session has no finished category yet".into()))?
        };
        Ok(rank(&self.knowledge(), &category, n))
    }

    /// Logs a click and returns documents related to it over the composite
    /// network.
    pub fn click(&self, session: &str, document: &str, time: i64) -> Result<Vec<Related>> {
        self.record_click(session, document, time)?;
        self.related(document, Network::Composite, self.config.related_n)
    }

    fn record_click(&self, session: &str, document: &str, time: i64) -> Result<()> {
        let mut st = self.state.lock();
        if !self.knowledge().knows_document(document) {
            return Err(ServiceError::UnknownDocument(document.to_string()));
        }
        let s = st
            .sessions
            .get_mut(session)
            .ok_or_else(|| ServiceError::UnknownSession(session.to_string()))?;
        if let Some(last) = s.clicks.last() {
            if time < last.time {
                return Err(ServiceError::BadRequest(format!(
                    "click time {time} precedes the previous click at {}",
                    last.time
                )));
            }
        }
        s.clicks.push(SessionClick {
            time,
            document: document.to_string(),
        });
        s.last_active = time;
        st.log.push(Click {
            session: session.to_string(),
            time,
            document: document.to_string(),
        });
        st.journal.push(Event::Click {
            time,
            session: session.to_string(),
            document: document.to_string(),
        });
        Ok(())
    }

    /// Spreading activation from `document` in every context whose document
    /// set contains it; activations are merged by maximum.
    pub fn related(&self, document: &str, network: Network, n: usize) -> Result<Vec<Related>> {
        let k = self.knowledge();
        if !k.knows_document(document) {
            return Err(ServiceError::UnknownDocument(document.to_string()));
        }
        let cfg = self.config.spread_config(n);
        let mut merged: BTreeMap<String, f64> = BTreeMap::new();
        for cs in k.contexts.values() {
            let ctx = cs.context();
            let Some(d) = ctx.document_id(document) else {
                continue;
            };
            let result = spread(cs.network(network), &[d.0], &cfg)?;
            for (j, a) in result.ranking {
                let slot = merged.entry(ctx.documents().name(j).to_string()).or_insert(0.0);
                *slot = slot.max(a);
            }
        }
        let mut related: Vec<Related> = merged
            .into_iter()
            .map(|(document_id, activation)| Related { document_id, activation })
            .collect();
        related.sort_by(|a, b| b.activation.total_cmp(&a.activation).then_with(|| a.document_id.cmp(&b.document_id)));
        related.truncate(n);
        Ok(related)
    }

    pub fn add_context(&self, source: ContextSource) -> Result<ContextStats> {
        validate_context_id(&source.id)?;
        let _w = self.writer.lock();
        let mut st = self.state.lock();
        let current = self.knowledge();
        if current.contexts.contains_key(&source.id) {
            return Err(ServiceError::DuplicateContext(source.id.clone()));
        }
        let ctx = ingest(&source.records, source.options())?;
        let adaptive = AdaptiveContext::new(source.id.clone(), ctx);
        let mut state = ContextState::build(source.clone(), adaptive, None, &self.config)?;
        let named = apweb::extract_paths(&log_prefix(&st.log, current.clicks_learned), self.config.session_gap_secs)?;
        state.relearn(&named, &self.config)?;
        let stats = state.stats(current.generation);
        let mut next = (*current).clone();
        next.contexts.insert(source.id.clone(), Arc::new(state));
        *self.knowledge.write() = Arc::new(next);
        st.journal.push(Event::AddContext { source });
        Ok(stats)
    }

    /// Applies every queued category to every context, relearns traversal
    /// from the whole log and swaps the result in.
    pub fn run_adaptation_cycle(&self) -> Result<CycleReport> {
        self.cycle(None)
    }

    fn cycle(&self, bounds: Option<(usize, usize)>) -> Result<CycleReport> {
        let _w = self.writer.lock();
        let (categories, log, sessions) = {
            let st = self.state.lock();
            let (nc, nl) = bounds.unwrap_or((st.pending.len(), st.log.len()));
            if nc > st.pending.len() || nl > st.log.len() {
                return Err(ServiceError::Snapshot(format!(
                    "cycle wants {nc} categories and {nl} clicks, have {} and {}",
                    st.pending.len(),
                    st.log.len()
                )));
            }
            (st.pending[..nc].to_vec(), log_prefix(&st.log, nl), st.sessions.clone())
        };

        let current = self.knowledge();
        let mut next = (*current).clone();
        next.generation += 1;
        let mut report = CycleReport {
            generation: next.generation,
            categories: categories.len(),
            clicks: log.len(),
            ..CycleReport::default()
        };
        let rates = self.config.hebbian;
        for category in &categories {
            for (id, cs) in next.contexts.iter_mut() {
                let cs = Arc::make_mut(cs);
                let r = talkmine::adapt(&mut cs.adaptive, category, rates)?;
                report.reinforced += r.reinforced;
                report.decayed += r.decayed;
                for keyword in talkmine::propagate_keywords(&mut cs.adaptive, category, rates.reinforce) {
                    report.propagated.push(PropagatedKeyword {
                        context: id.clone(),
                        keyword,
                    });
                }
            }
        }
        let named = apweb::extract_paths(&log, self.config.session_gap_secs)?;
        report.paths = named.len();
        for cs in next.contexts.values_mut() {
            Arc::make_mut(cs).relearn(&named, &self.config)?;
        }
        next.histories = build_histories(&next, &sessions, log.clicks());
        next.clicks_learned = log.len();

        let mut st = self.state.lock();
        st.pending.drain(..categories.len());
        *self.knowledge.write() = Arc::new(next);
        st.journal.push(Event::Adapt {
            categories: categories.len(),
            clicks: log.len(),
        });
        Ok(report)
    }

    pub fn stats(&self) -> Result<EngineStats> {
        let k = self.knowledge();
        let st = self.state.lock();
        let paths = apweb::extract_paths(&st.log, self.config.session_gap_secs)?.len();
        Ok(EngineStats {
            generation: k.generation,
            contexts: k.contexts.keys().cloned().collect(),
            sessions: st.sessions.len(),
            clicks: st.log.len(),
            paths,
            pending_categories: st.pending.len(),
            histories: k.histories.len(),
        })
    }

    pub fn context_stats(&self, id: &str) -> Result<ContextStats> {
        let k = self.knowledge();
        Ok(k.context(id)?.stats(k.generation))
    }
}

/// Recommendations from every context, best first; ties by context then
/// record identifier.
pub fn rank(k: &Knowledge, category: &FuzzyCategory, n: usize) -> Vec<Recommendation> {
    if category.is_empty() {
        return Vec::new();
    }
    let mut all = Vec::new();
    for (id, cs) in &k.contexts {
        let ctx = cs.context();
        let Ok(ranked) = talkmine::recommend_records(category, ctx, n) else {
            continue;
        };
        all.extend(ranked.into_iter().map(|(r, score)| Recommendation {
            context: id.clone(),
            record_id: ctx.records().name(r.0).to_string(),
            score,
        }));
    }
    all.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.context.cmp(&b.context))
            .then_with(|| a.record_id.cmp(&b.record_id))
    });
    all.truncate(n);
    all
}
