//! Synthetic user communities driven through the HTTP API.
//!
//! Users never touch engine internals: every action is a request against the
//! router, and every measurement comes back through the admin endpoints.
//! Relevance is judged from the record files the community was given.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use adaptrec_core::corpus::parse_record_file;
use anyhow::{anyhow, bail, Context as _};
use axum::body::Body;
use axum::http::{Method, Request};
use axum::Router;
use http_body_util::BodyExt;
use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower::ServiceExt;

use crate::config::EngineConfig;
use crate::engine::{Engine, Recommendation, Turn};
use crate::http::{router, SessionCreated, EVENT_TIME_HEADER};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub keywords: Vec<String>,
    /// Fixed query profile; sampled from `keywords` when absent.
    #[serde(default)]
    pub profile: Option<Vec<String>>,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackedPair {
    pub context: String,
    pub a: String,
    pub b: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CommunitySpec {
    pub seed: u64,
    pub users: usize,
    pub sessions_per_user: usize,
    pub clicks_per_session: usize,
    /// Chance of calling an in-cluster keyword relevant; out-of-cluster
    /// keywords are called relevant with the complementary chance.
    pub answer_relevant_probability: f64,
    pub profile_size: usize,
    pub recommendations: usize,
    /// Sessions between adaptation cycles; 0 never adapts.
    pub adapt_every: usize,
    pub auto_answer_level: f64,
    pub start_time: i64,
    pub engine: EngineConfig,
    pub clusters: Vec<Cluster>,
    pub track: Vec<TrackedPair>,
}

impl Default for CommunitySpec {
    fn default() -> Self {
        Self {
            seed: 0,
            users: 10,
            sessions_per_user: 5,
            clicks_per_session: 3,
            answer_relevant_probability: 0.9,
            profile_size: 2,
            recommendations: 10,
            adapt_every: 1,
            auto_answer_level: 0.0,
            start_time: 1_000_000_000,
            engine: EngineConfig::default(),
            clusters: Vec::new(),
            track: Vec::new(),
        }
    }
}

impl CommunitySpec {
    pub fn from_toml_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut spec: Self = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if let Some(base) = path.parent() {
            spec.engine.resolve_paths(base);
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.clusters.is_empty() {
            bail!("a community needs at least one cluster");
        }
        for (i, c) in self.clusters.iter().enumerate() {
            if c.keywords.is_empty() {
                bail!("cluster {i} has no keywords");
            }
            if c.weight.is_nan() || c.weight <= 0.0 {
                bail!("cluster {i} needs a positive weight");
            }
            if c.profile.as_ref().is_some_and(Vec::is_empty) {
                bail!("cluster {i} has an empty profile");
            }
        }
        if !(0.0..=1.0).contains(&self.answer_relevant_probability) {
            bail!("answer_relevant_probability must lie in [0, 1]");
        }
        if self.profile_size == 0 {
            bail!("profile_size must be positive");
        }
        Ok(())
    }
}

/// Calls the router in-process, one request at a time.
#[derive(Clone)]
pub struct ApiClient {
    router: Router,
}

impl ApiClient {
    pub fn new(router: Router) -> Self {
        Self { router }
    }

    pub async fn call<T: DeserializeOwned>(
        &self,
        method: Method,
        uri: &str,
        time: Option<i64>,
        body: Option<Value>,
    ) -> anyhow::Result<T> {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(t) = time {
            req = req.header(EVENT_TIME_HEADER, t.to_string());
        }
        let req = match body {
            Some(v) => req
                .header("content-type", "application/json")
                .body(Body::from(serde_json::to_vec(&v)?))?,
            None => req.body(Body::empty())?,
        };
        let resp = self.router.clone().oneshot(req).await?;
        let status = resp.status();
        let bytes = resp.into_body().collect().await?.to_bytes();
        if !status.is_success() {
            bail!("{uri}: {status}: {}", String::from_utf8_lossy(&bytes));
        }
        Ok(serde_json::from_slice(&bytes)?)
    }

    pub async fn get<T: DeserializeOwned>(&self, uri: &str) -> anyhow::Result<T> {
        self.call(Method::GET, uri, None, None).await
    }

    pub async fn post<T: DeserializeOwned>(&self, uri: &str, time: i64, body: Value) -> anyhow::Result<T> {
        self.call(Method::POST, uri, Some(time), Some(body)).await
    }
}

fn encode(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        if b.is_ascii_alphanumeric() || b"-_.~".contains(&b) {
            out.push(b as char);
        } else {
            let _ = write!(out, "%{b:02X}");
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimRow {
    pub step: usize,
    pub session: Option<String>,
    pub user: Option<usize>,
    pub cluster: Option<usize>,
    pub precision: Option<f64>,
    pub ksp_in: Option<f64>,
    pub ksp_out: Option<f64>,
    pub trav_in: Option<f64>,
    pub trav_out: Option<f64>,
    pub tracked: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub tracked: Vec<String>,
    pub rows: Vec<SimRow>,
}

fn cell<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "-".to_string(), ToString::to_string)
}

impl SimReport {
    /// Tab-separated, one row per measurement, `-` for undefined cells.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("step\tsession\tuser\tcluster\tprecision\tksp_in\tksp_out\ttrav_in\ttrav_out");
        for t in &self.tracked {
            out.push('\t');
            out.push_str(t);
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.step,
                cell(&r.session),
                cell(&r.user),
                cell(&r.cluster),
                cell(&r.precision),
                cell(&r.ksp_in),
                cell(&r.ksp_out),
                cell(&r.trav_in),
                cell(&r.trav_out)
            );
            for t in &r.tracked {
                out.push('\t');
                out.push_str(&cell(t));
            }
            out.push('\n');
        }
        out
    }

    /// Values of one tracked column, by its `context:a~b` label.
    pub fn series(&self, label: &str) -> Option<Vec<Option<f64>>> {
        let ix = self.tracked.iter().position(|t| t == label)?;
        Some(self.rows.iter().map(|r| r.tracked[ix]).collect())
    }
}

/// What the community knows about each resource from its record file.
struct Ground {
    /// context → record → keywords
    records: BTreeMap<String, BTreeMap<String, BTreeSet<String>>>,
    /// context → documents that take part in a citation
    documents: BTreeMap<String, BTreeSet<String>>,
}

impl Ground {
    fn load(config: &EngineConfig) -> anyhow::Result<Self> {
        let mut records = BTreeMap::new();
        let mut documents = BTreeMap::new();
        for c in &config.contexts {
            let text = std::fs::read_to_string(&c.records).with_context(|| format!("reading {}", c.records.display()))?;
            let parsed = parse_record_file(&text)?;
            let mut docs = BTreeSet::new();
            let mut by_id = BTreeMap::new();
            for r in parsed {
                if !r.citations.is_empty() {
                    docs.insert(r.id.clone());
                    docs.extend(r.citations.iter().cloned());
                }
                by_id.insert(r.id, r.keywords.into_iter().collect::<BTreeSet<_>>());
            }
            records.insert(c.id.clone(), by_id);
            documents.insert(c.id.clone(), docs);
        }
        Ok(Self { records, documents })
    }

    fn relevant(&self, context: &str, record: &str, cluster: &Cluster) -> bool {
        self.records
            .get(context)
            .and_then(|rs| rs.get(record))
            .is_some_and(|kws| cluster.keywords.iter().any(|k| kws.contains(k)))
    }

    /// First cluster each citation document of `context` belongs to.
    fn labels(&self, context: &str, clusters: &[Cluster]) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for d in &self.documents[context] {
            if let Some(c) = clusters.iter().position(|c| self.relevant(context, d, c)) {
                out.insert(d.clone(), c);
            }
        }
        out
    }
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

#[derive(Deserialize)]
struct PairValue {
    value: Option<f64>,
}

#[derive(Deserialize)]
struct Entry {
    a: String,
    b: String,
    value: f64,
}

#[derive(Deserialize)]
struct Entries {
    entries: Vec<Entry>,
}

async fn pair(api: &ApiClient, context: &str, network: &str, a: &str, b: &str) -> anyhow::Result<Option<f64>> {
    let uri = format!(
        "/admin/contexts/{}/proximity?network={network}&a={}&b={}",
        encode(context),
        encode(a),
        encode(b)
    );
    Ok(api.get::<PairValue>(&uri).await?.value)
}

async fn measure(api: &ApiClient, spec: &CommunitySpec, ground: &Ground) -> anyhow::Result<SimRow> {
    let mut ksp_in = Vec::new();
    let mut ksp_out = Vec::new();
    let mut trav_in = Vec::new();
    let mut trav_out = Vec::new();
    for ctx in spec.engine.contexts.iter().map(|c| c.id.as_str()) {
        for (ci, c) in spec.clusters.iter().enumerate() {
            for (x, a) in c.keywords.iter().enumerate() {
                for b in &c.keywords[x + 1..] {
                    if let Some(v) = pair(api, ctx, "ksp", a, b).await? {
                        ksp_in.push(v);
                    }
                }
                for other in &spec.clusters[ci + 1..] {
                    for b in other.keywords.iter().filter(|b| !c.keywords.contains(b)) {
                        if let Some(v) = pair(api, ctx, "ksp", a, b).await? {
                            ksp_out.push(v);
                        }
                    }
                }
            }
        }

        let uri = format!("/admin/contexts/{}/proximity?network=traversal", encode(ctx));
        let mut sym: BTreeMap<(String, String), f64> = BTreeMap::new();
        for e in api.get::<Entries>(&uri).await?.entries {
            let key = if e.a <= e.b { (e.a, e.b) } else { (e.b, e.a) };
            let slot = sym.entry(key).or_insert(0.0);
            *slot = slot.max(e.value);
        }
        let labels: Vec<(String, usize)> = ground.labels(ctx, &spec.clusters).into_iter().collect();
        for (x, (a, la)) in labels.iter().enumerate() {
            for (b, lb) in &labels[x + 1..] {
                let v = sym.get(&(a.clone(), b.clone())).copied().unwrap_or(0.0);
                if la == lb {
                    trav_in.push(v);
                } else {
                    trav_out.push(v);
                }
            }
        }
    }
    let mut tracked = Vec::new();
    for t in &spec.track {
        tracked.push(pair(api, &t.context, "ksp", &t.a, &t.b).await?);
    }
    Ok(SimRow {
        step: 0,
        session: None,
        user: None,
        cluster: None,
        precision: None,
        ksp_in: mean(&ksp_in),
        ksp_out: mean(&ksp_out),
        trav_in: mean(&trav_in),
        trav_out: mean(&trav_out),
        tracked,
    })
}

fn answer_for(rng: &mut ChaCha8Rng, spec: &CommunitySpec, cluster: &Cluster, keyword: &str) -> bool {
    let p = spec.answer_relevant_probability;
    let p = if cluster.keywords.iter().any(|k| k == keyword) { p } else { 1.0 - p };
    rng.gen_bool(p)
}

/// Picks up to `count` distinct recommendations, each draw proportional to
/// score among those left.
fn pick_clicks(rng: &mut ChaCha8Rng, recs: &[Recommendation], count: usize) -> Vec<String> {
    let mut left: Vec<&Recommendation> = recs.iter().filter(|r| r.score > 0.0).collect();
    let mut out = Vec::new();
    while out.len() < count && !left.is_empty() {
        let Ok(dist) = WeightedIndex::new(left.iter().map(|r| r.score)) else {
            break;
        };
        let r = left.remove(dist.sample(rng));
        out.push(r.record_id.clone());
    }
    out
}

/// Runs every session of the community against `router` and reports one
/// measurement row before the first session and one after each session.
pub async fn run_community_sim(spec: &CommunitySpec, router: Router) -> anyhow::Result<SimReport> {
    spec.validate()?;
    let api = ApiClient::new(router);
    let ground = Ground::load(&spec.engine)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let weights = WeightedIndex::new(spec.clusters.iter().map(|c| c.weight))?;
    let membership: Vec<usize> = (0..spec.users).map(|_| weights.sample(&mut rng)).collect();

    let mut report = SimReport {
        tracked: spec.track.iter().map(|t| format!("{}:{}~{}", t.context, t.a, t.b)).collect(),
        rows: vec![measure(&api, spec, &ground).await?],
    };
    let mut clock = spec.start_time;
    let mut step = 0;
    for _round in 0..spec.sessions_per_user {
        for (user, &ci) in membership.iter().enumerate() {
            step += 1;
            let cluster = &spec.clusters[ci];
            clock += 2 * spec.engine.session_gap_secs.max(1);
            let created: SessionCreated = api
                .post(
                    "/sessions",
                    clock,
                    json!({ "user_id": format!("u{user}"), "auto_answer_level": spec.auto_answer_level }),
                )
                .await?;
            let sid = created.session_id;
            let profile: Vec<String> = match &cluster.profile {
                Some(p) => p.clone(),
                None => cluster
                    .keywords
                    .choose_multiple(&mut rng, spec.profile_size.min(cluster.keywords.len()))
                    .cloned()
                    .collect(),
            };
            let mut turn: Turn = api
                .post(&format!("/sessions/{sid}/query"), clock, json!({ "keywords": profile }))
                .await?;
            let mut guard = 0;
            while let Some(q) = turn.question.take() {
                guard += 1;
                if guard > 10_000 {
                    return Err(anyhow!("conversation in session {sid} does not terminate"));
                }
                let relevant = answer_for(&mut rng, spec, cluster, &q.keyword);
                clock += 1;
                turn = api
                    .post(
                        &format!("/sessions/{sid}/answer"),
                        clock,
                        json!({ "keyword": q.keyword, "relevant": relevant }),
                    )
                    .await?;
            }
            let recs: Vec<Recommendation> = turn
                .recommendations
                .unwrap_or_default()
                .into_iter()
                .take(spec.recommendations)
                .collect();
            let precision = (!recs.is_empty()).then(|| {
                let hits = recs
                    .iter()
                    .filter(|r| ground.relevant(&r.context, &r.record_id, cluster))
                    .count();
                hits as f64 / recs.len() as f64
            });
            for doc in pick_clicks(&mut rng, &recs, spec.clicks_per_session) {
                clock += 30;
                let _: Value = api
                    .post(&format!("/sessions/{sid}/click"), clock, json!({ "document_id": doc }))
                    .await?;
            }
            if spec.adapt_every > 0 && step % spec.adapt_every == 0 {
                let _: Value = api.post("/admin/adapt-now", clock, json!({})).await?;
            }
            let mut row = measure(&api, spec, &ground).await?;
            row.step = step;
            row.session = Some(sid);
            row.user = Some(user);
            row.cluster = Some(ci);
            row.precision = precision;
            report.rows.push(row);
        }
    }
    Ok(report)
}

/// Builds a fresh engine for `spec`, runs the community on its router and
/// hands back both.
pub async fn simulate(spec: &CommunitySpec) -> anyhow::Result<(SimReport, Arc<Engine>)> {
    let engine = Arc::new(Engine::new(spec.engine.clone())?);
    let report = run_community_sim(spec, router(engine.clone())).await?;
    Ok((report, engine))
}
