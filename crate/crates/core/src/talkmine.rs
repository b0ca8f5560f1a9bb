//! Conversational category construction and keyword-level adaptation.
//!
//! A user's interest keywords are projected onto the keyword proximity of
//! every participating context, giving one fuzzy set per context. Keywords on
//! which the contexts disagree become questions; answers collapse the
//! disagreement with fuzzy union (relevant) or intersection (irrelevant). The
//! resulting category ranks records and feeds back into each context's working
//! keyword proximity: co-members are pulled together, members and their
//! non-member neighbours are pushed apart, and missing members are created.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{KeywordId, KnowledgeContext, RecordId};
use crate::error::{Error, Result};
use crate::proximity::{keyword_semantic_proximity, SparseProximity};
use crate::scalar::{Real, Scalar};

pub const CATEGORY_FILE_HEADER: &str = "#cat 1";

/// A knowledge context together with its adapted keyword proximity. The raw
/// proximity stays derivable from the incidence relation at any time.
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptiveContext<S> {
    pub id: String,
    ctx: KnowledgeContext,
    working: SparseProximity<S>,
}

impl<S: Scalar> AdaptiveContext<S> {
    pub fn new(id: impl Into<String>, ctx: KnowledgeContext) -> Self {
        let working = keyword_semantic_proximity(&ctx);
        Self {
            id: id.into(),
            ctx,
            working,
        }
    }

    /// Reassembles a context from persisted parts.
    pub fn from_parts(id: impl Into<String>, ctx: KnowledgeContext, working: SparseProximity<S>) -> Result<Self> {
        if working.dim() != ctx.keyword_count() {
            return Err(Error::DimensionMismatch {
                left: working.dim(),
                right: ctx.keyword_count(),
            });
        }
        Ok(Self {
            id: id.into(),
            ctx,
            working,
        })
    }

    pub fn context(&self) -> &KnowledgeContext {
        &self.ctx
    }

    pub fn working(&self) -> &SparseProximity<S> {
        &self.working
    }

    /// Proximity derived from the incidence relation alone.
    pub fn raw_keyword_proximity(&self) -> SparseProximity<S> {
        keyword_semantic_proximity(&self.ctx)
    }

    pub fn keyword_proximity(&self, a: &str, b: &str) -> Option<S> {
        let a = self.ctx.keyword_id(a)?;
        let b = self.ctx.keyword_id(b)?;
        Some(self.working.get(a.0, b.0))
    }

    /// Membership of every keyword in the neighbourhood of the profile
    /// keywords this context knows; the profile keywords themselves get 1.
    fn project(&self, profile: &InterestProfile) -> BTreeMap<String, S> {
        let mut out = BTreeMap::new();
        for name in &profile.keywords {
            let Some(k) = self.ctx.keyword_id(name) else {
                continue;
            };
            out.insert(name.clone(), S::one());
            for (j, v) in self.working.row(k.0) {
                if j == k.0 {
                    continue;
                }
                let slot = out
                    .entry(self.ctx.keywords().name(j).to_string())
                    .or_insert_with(S::zero);
                *slot = slot.max_of(v);
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterestProfile {
    pub keywords: Vec<String>,
}

impl InterestProfile {
    pub fn new<I, K>(keywords: I) -> Result<Self>
    where
        I: IntoIterator<Item = K>,
        K: Into<String>,
    {
        let mut seen = BTreeSet::new();
        let keywords: Vec<String> = keywords
            .into_iter()
            .map(Into::into)
            .filter(|k| seen.insert(k.clone()))
            .collect();
        if keywords.is_empty() {
            return Err(Error::EmptyProfile);
        }
        Ok(Self { keywords })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConversationConfig<S> {
    /// Minimum cross-context spread for a keyword to be asked about.
    pub dispute_threshold: S,
    pub question_budget: usize,
    /// Stop asking once the blend's normalized fuzzy entropy drops below this.
    pub entropy_floor: S,
    /// Memberships below this after peak normalization are dropped.
    pub membership_floor: S,
}

impl<S: Scalar> Default for ConversationConfig<S> {
    fn default() -> Self {
        Self {
            dispute_threshold: S::from_f64(0.2),
            question_budget: 10,
            entropy_floor: S::from_f64(0.25),
            membership_floor: S::from_f64(0.01),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Answerer {
    User,
    History,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    pub relevant: bool,
    pub answered_by: Answerer,
}

impl Answer {
    pub fn user(relevant: bool) -> Self {
        Self {
            relevant,
            answered_by: Answerer::User,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Question<S> {
    pub keyword: String,
    /// Membership in each participating context, in conversation order.
    pub memberships: Vec<(String, S)>,
    pub spread: S,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Step<S> {
    Ask(Question<S>),
    Done,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConversationState<S> {
    pub context_ids: Vec<String>,
    /// Position of the user's history context in `context_ids`, if present.
    pub history: Option<usize>,
    memberships: Vec<BTreeMap<String, S>>,
    blend: BTreeMap<String, S>,
    resolved: BTreeSet<String>,
    asked: usize,
    /// Profile keywords no participating context knows.
    pub unresolved_profile: Vec<String>,
    pub config: ConversationConfig<S>,
}

/// Builds the per-context fuzzy sets and their max-blend. The history
/// context, when given, participates as the last context.
pub fn init_category<S: Real>(
    profile: &InterestProfile,
    contexts: &[&AdaptiveContext<S>],
    history: Option<&AdaptiveContext<S>>,
    config: ConversationConfig<S>,
) -> Result<ConversationState<S>> {
    if contexts.is_empty() && history.is_none() {
        return Err(Error::InvalidParameter("no knowledge context to converse with".into()));
    }
    let mut all: Vec<&AdaptiveContext<S>> = contexts.to_vec();
    let history_ix = history.map(|h| {
        all.push(h);
        all.len() - 1
    });
    let unresolved_profile: Vec<String> = profile
        .keywords
        .iter()
        .filter(|k| all.iter().all(|c| c.ctx.keyword_id(k).is_none()))
        .cloned()
        .collect();
    if unresolved_profile.len() == profile.keywords.len() {
        return Err(Error::UnresolvableProfile(unresolved_profile));
    }
    let memberships: Vec<BTreeMap<String, S>> = all.iter().map(|c| c.project(profile)).collect();
    let mut state = ConversationState {
        context_ids: all.iter().map(|c| c.id.clone()).collect(),
        history: history_ix,
        memberships,
        blend: BTreeMap::new(),
        resolved: BTreeSet::new(),
        asked: 0,
        unresolved_profile,
        config,
    };
    let keywords: BTreeSet<String> = state.memberships.iter().flat_map(|m| m.keys().cloned()).collect();
    for k in keywords {
        let b = state.strongest(&k);
        state.blend.insert(k, b);
    }
    Ok(state)
}

impl<S: Real> ConversationState<S> {
    pub fn membership(&self, context: usize, keyword: &str) -> S {
        self.memberships[context]
            .get(keyword)
            .copied()
            .unwrap_or_else(S::zero)
    }

    fn strongest(&self, keyword: &str) -> S {
        (0..self.memberships.len()).fold(S::zero(), |acc, c| acc.max(self.membership(c, keyword)))
    }

    fn weakest(&self, keyword: &str) -> S {
        (0..self.memberships.len()).fold(S::one(), |acc, c| acc.min(self.membership(c, keyword)))
    }

    pub fn spread(&self, keyword: &str) -> S {
        self.strongest(keyword) - self.weakest(keyword)
    }

    pub fn blend(&self) -> &BTreeMap<String, S> {
        &self.blend
    }

    pub fn questions_asked(&self) -> usize {
        self.asked
    }

    pub fn is_resolved(&self, keyword: &str) -> bool {
        self.resolved.contains(keyword)
    }

    /// Normalized fuzzy entropy of the blend over its support, in `[0, 1]`.
    pub fn uncertainty(&self) -> S {
        fuzzy_entropy(self.blend.values().copied())
    }

    pub fn next_question(&self) -> Step<S> {
        if self.asked >= self.config.question_budget {
            return Step::Done;
        }
        if self.uncertainty() < self.config.entropy_floor {
            return Step::Done;
        }
        let mut best: Option<(&String, S)> = None;
        for k in self.blend.keys() {
            if self.resolved.contains(k) {
                continue;
            }
            let spread = self.spread(k);
            if spread > self.config.dispute_threshold && best.is_none_or(|(_, s)| spread > s) {
                best = Some((k, spread));
            }
        }
        match best {
            None => Step::Done,
            Some((k, spread)) => Step::Ask(Question {
                keyword: k.clone(),
                memberships: self
                    .context_ids
                    .iter()
                    .enumerate()
                    .map(|(c, id)| (id.clone(), self.membership(c, k)))
                    .collect(),
                spread,
            }),
        }
    }

    /// Relevant keeps the keyword at its strongest reading (union);
    /// irrelevant at its weakest (intersection).
    pub fn apply_answer(&mut self, keyword: &str, answer: Answer) -> Result<()> {
        if !self.blend.contains_key(keyword) {
            return Err(Error::NotInConversation(keyword.to_string()));
        }
        if self.resolved.contains(keyword) {
            return Err(Error::AlreadyResolved(keyword.to_string()));
        }
        let value = if answer.relevant {
            self.strongest(keyword)
        } else {
            self.weakest(keyword)
        };
        self.blend.insert(keyword.to_string(), value);
        self.resolved.insert(keyword.to_string());
        self.asked += 1;
        Ok(())
    }

    /// Lets the history context answer on the user's behalf. At `level` 0 the
    /// user answers everything; at 1 history answers everything; in between
    /// history answers when its membership is at least `1 − level` away from
    /// indifference (`|2μ − 1|`). Relevant iff `μ ≥ relevance_threshold`.
    pub fn auto_answer(&self, question: &Question<S>, level: S, relevance_threshold: S) -> Option<Answer> {
        let history = self.history?;
        if level <= S::zero() {
            return None;
        }
        let mu = self.membership(history, &question.keyword);
        let two = S::one() + S::one();
        let confidence = (two * mu - S::one()).abs();
        if confidence < S::one() - level {
            return None;
        }
        Some(Answer {
            relevant: mu >= relevance_threshold,
            answered_by: Answerer::History,
        })
    }

    /// Peak-normalized category. Empty when every blend value is zero.
    pub fn finalize(&self) -> FuzzyCategory<S> {
        let peak = self.blend.values().fold(S::zero(), |acc, &v| acc.max(v));
        let mut members = BTreeMap::new();
        if peak > S::zero() {
            for (k, &v) in &self.blend {
                let mu = v / peak;
                if mu < self.config.membership_floor || mu <= S::zero() {
                    continue;
                }
                let contexts = self
                    .context_ids
                    .iter()
                    .enumerate()
                    .filter(|(c, _)| self.membership(*c, k) > S::zero())
                    .map(|(_, id)| id.clone())
                    .collect();
                members.insert(k.clone(), Membership { value: mu, contexts });
            }
        }
        FuzzyCategory { members }
    }
}

/// `−(1/|B|)·Σ[μ·log₂μ + (1−μ)·log₂(1−μ)]` over the positive memberships.
pub fn fuzzy_entropy<S: Real, I: IntoIterator<Item = S>>(values: I) -> S {
    let mut total = S::zero();
    let mut count = 0usize;
    let term = |x: S| if x > S::zero() { x * x.log2() } else { S::zero() };
    for mu in values {
        if mu <= S::zero() {
            continue;
        }
        count += 1;
        total = total - term(mu) - term(S::one() - mu);
    }
    if count == 0 {
        S::zero()
    } else {
        total / S::from_ratio(count, 1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Membership<S> {
    pub value: S,
    /// Contexts in which the keyword had nonzero membership.
    pub contexts: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FuzzyCategory<S> {
    pub members: BTreeMap<String, Membership<S>>,
}

impl<S: Scalar> FuzzyCategory<S> {
    pub fn from_memberships<I: IntoIterator<Item = (String, S)>>(values: I) -> Self {
        Self {
            members: values
                .into_iter()
                .map(|(k, value)| {
                    (
                        k,
                        Membership {
                            value,
                            contexts: Vec::new(),
                        },
                    )
                })
                .collect(),
        }
    }

    pub fn get(&self, keyword: &str) -> S {
        self.members
            .get(keyword)
            .map_or_else(S::zero, |m| m.value)
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn peak(&self) -> S {
        self.members
            .values()
            .fold(S::zero(), |acc, m| acc.max_of(m.value))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from(CATEGORY_FILE_HEADER);
        out.push('\n');
        for (k, m) in &self.members {
            let _ = writeln!(out, "{k}\t{}\t{}", m.value, m.contexts.join(","));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self>
    where
        S: std::str::FromStr,
    {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h == CATEGORY_FILE_HEADER => {}
            _ => {
                return Err(Error::Malformed {
                    line: 1,
                    message: format!("expected header `{CATEGORY_FILE_HEADER}`"),
                })
            }
        }
        let mut members = BTreeMap::new();
        for (ix, line) in lines {
            let bad = |message: String| Error::Malformed {
                line: ix + 1,
                message,
            };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 || fields[0].is_empty() {
                return Err(bad("expected `keyword<TAB>membership<TAB>contexts`".into()));
            }
            let value: S = fields[1]
                .parse()
                .map_err(|_| bad(format!("bad membership `{}`", fields[1])))?;
            if !(value >= S::zero() && value <= S::one()) {
                return Err(bad(format!("membership {value} outside [0, 1]")));
            }
            let contexts = if fields[2].is_empty() {
                Vec::new()
            } else {
                fields[2].split(',').map(str::to_string).collect()
            };
            members.insert(fields[0].to_string(), Membership { value, contexts });
        }
        Ok(Self { members })
    }
}

/// `score(r) = Σ_k μ(k)·a[k][r] / Σ_k μ(k)`. Records with score 0 are left out.
pub fn recommend_records<S: Scalar>(
    category: &FuzzyCategory<S>,
    ctx: &KnowledgeContext,
    top_n: usize,
) -> Result<Vec<(RecordId, S)>> {
    if category.is_empty() {
        return Err(Error::EmptyCategory);
    }
    let total = category
        .members
        .values()
        .fold(S::zero(), |acc, m| acc + m.value);
    if total <= S::zero() {
        return Err(Error::EmptyCategory);
    }
    let mut raw: BTreeMap<usize, S> = BTreeMap::new();
    for (k, m) in &category.members {
        let Some(kid) = ctx.keyword_id(k) else {
            continue;
        };
        for &r in ctx.records_of_keyword(kid) {
            let slot = raw.entry(r).or_insert_with(S::zero);
            *slot = *slot + m.value;
        }
    }
    let mut ranked: Vec<(usize, S)> = raw
        .into_iter()
        .map(|(r, s)| (r, s / total))
        .filter(|&(_, s)| s > S::zero())
        .collect();
    // ties by record identifier, which is index order
    crate::proximity::sort_ranked(&mut ranked);
    ranked.truncate(top_n);
    Ok(ranked.into_iter().map(|(r, s)| (RecordId(r), s)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HebbianRates<S> {
    pub reinforce: S,
    pub decay: S,
}

impl<S: Scalar> Default for HebbianRates<S> {
    fn default() -> Self {
        Self {
            reinforce: S::from_f64(0.1),
            decay: S::from_f64(0.02),
        }
    }
}

impl<S: Scalar> HebbianRates<S> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("reinforce", self.reinforce), ("decay", self.decay)] {
            if !(v > S::zero() && v < S::one()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} rate must lie in (0, 1), got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AdaptReport {
    pub reinforced: usize,
    pub decayed: usize,
}

/// Category members this context knows, with their memberships.
fn members_in<S: Scalar>(ctx: &KnowledgeContext, category: &FuzzyCategory<S>) -> Vec<(KeywordId, S)> {
    category
        .members
        .iter()
        .filter_map(|(k, m)| ctx.keyword_id(k).map(|id| (id, m.value)))
        .collect()
}

/// Pulls co-members together: `p += reinforce·μᵢ·μⱼ·(1 − p)`. Pushes each
/// member away from its non-member neighbours: `p *= 1 − decay`.
pub fn adapt<S: Scalar>(
    target: &mut AdaptiveContext<S>,
    category: &FuzzyCategory<S>,
    rates: HebbianRates<S>,
) -> Result<AdaptReport> {
    rates.validate()?;
    let members = members_in(&target.ctx, category);
    let inside: BTreeSet<usize> = members.iter().map(|(k, _)| k.0).collect();
    let mut report = AdaptReport::default();

    let mut decays = Vec::new();
    for &(k, _) in &members {
        for (j, v) in target.working.row(k.0) {
            if j != k.0 && !inside.contains(&j) {
                decays.push((k.0, j, v));
            }
        }
    }
    for (a, ix) in members.iter().enumerate() {
        for jx in &members[a + 1..] {
            let (i, mi) = (ix.0 .0, ix.1);
            let (j, mj) = (jx.0 .0, jx.1);
            let p = target.working.get(i, j);
            let next = p + rates.reinforce * mi * mj * (S::one() - p);
            target.working.set(i, j, next.clamp_unit());
            report.reinforced += 1;
        }
    }
    let keep = S::one() - rates.decay;
    for (i, j, _) in decays {
        let p = target.working.get(i, j);
        target.working.set(i, j, keep * p);
        report.decayed += 1;
    }
    Ok(report)
}

/// Creates category members the context lacks, linked to every other member
/// at `reinforce·μ(k)·μ(j)`. Returns the names of created keywords.
pub fn propagate_keywords<S: Scalar>(
    target: &mut AdaptiveContext<S>,
    category: &FuzzyCategory<S>,
    reinforce: S,
) -> Vec<String> {
    let mut created = Vec::new();
    for name in category.members.keys() {
        let (_, fresh) = target.ctx.add_keyword(name);
        if fresh {
            created.push(name.clone());
        }
    }
    if created.is_empty() {
        return created;
    }
    target.working.grow(target.ctx.keyword_count());
    for name in &created {
        let k = target.ctx.keyword_id(name).expect("just added");
        let mk = category.get(name);
        for (other, m) in &category.members {
            if other == name {
                continue;
            }
            let j = target.ctx.keyword_id(other).expect("all members present");
            let v = reinforce * mk * m.value;
            if v > target.working.get(k.0, j.0) {
                target.working.set(k.0, j.0, v.clamp_unit());
            }
        }
    }
    created
}
