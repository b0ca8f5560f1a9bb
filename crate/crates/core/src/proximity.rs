//! Proximity networks derived from a knowledge context.
//!
//! All four set-overlap measures share one shape: each node `x` has a defining
//! set `N(x)` and `p(x, y) = |N(x) ∩ N(y)| / |N(x) ∪ N(y)|`.
//!
//! | kind              | nodes     | defining set                 |
//! |-------------------|-----------|------------------------------|
//! | inwards           | documents | documents citing it          |
//! | outwards          | documents | documents it cites           |
//! | keyword semantic  | keywords  | records it qualifies         |
//! | record semantic   | records   | keywords qualifying it       |
//!
//! Intersections are counted by walking inverted lists, so the cost is the sum
//! of squared list lengths rather than the square of the node count.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;

use crate::corpus::KnowledgeContext;
use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

pub const PROXIMITY_FILE_HEADER: &str = "#prox 1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProximityKind {
    Inwards,
    Outwards,
    KeywordSemantic,
    RecordSemantic,
    Traversal,
    Composite,
}

impl ProximityKind {
    pub fn is_symmetric(self) -> bool {
        !matches!(self, ProximityKind::Traversal)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProximityKind::Inwards => "inwards",
            ProximityKind::Outwards => "outwards",
            ProximityKind::KeywordSemantic => "keyword_semantic",
            ProximityKind::RecordSemantic => "record_semantic",
            ProximityKind::Traversal => "traversal",
            ProximityKind::Composite => "composite",
        }
    }
}

impl FromStr for ProximityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "inwards" | "in" => ProximityKind::Inwards,
            "outwards" | "out" => ProximityKind::Outwards,
            "keyword_semantic" | "ksp" => ProximityKind::KeywordSemantic,
            "record_semantic" | "rsp" => ProximityKind::RecordSemantic,
            "traversal" => ProximityKind::Traversal,
            "composite" | "structural" => ProximityKind::Composite,
            other => return Err(Error::InvalidParameter(format!("unknown proximity kind `{other}`"))),
        })
    }
}

/// Sparse square matrix of pairwise strengths. Symmetric kinds store both
/// halves so row scans see every neighbour; zero entries are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseProximity<S> {
    kind: ProximityKind,
    rows: Vec<BTreeMap<usize, S>>,
}

impl<S: Scalar> SparseProximity<S> {
    pub fn new(kind: ProximityKind, dim: usize) -> Self {
        Self {
            kind,
            rows: vec![BTreeMap::new(); dim],
        }
    }

    pub fn kind(&self) -> ProximityKind {
        self.kind
    }

    pub fn with_kind(mut self, kind: ProximityKind) -> Self {
        assert!(
            kind.is_symmetric() == self.kind.is_symmetric() || !kind.is_symmetric(),
            "cannot relabel a directed matrix as symmetric"
        );
        self.kind = kind;
        self
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.kind.is_symmetric()
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.rows
            .get(i)
            .and_then(|row| row.get(&j))
            .copied()
            .unwrap_or_else(S::zero)
    }

    /// Sets `p(i, j)` (and `p(j, i)` for symmetric kinds). Panics when an
    /// index is out of range.
    pub fn set(&mut self, i: usize, j: usize, value: S) {
        let dim = self.dim();
        assert!(i < dim && j < dim, "({i}, {j}) outside dimension {dim}");
        self.put(i, j, value);
        if self.is_symmetric() && i != j {
            self.put(j, i, value);
        }
    }

    fn put(&mut self, i: usize, j: usize, value: S) {
        if value == S::zero() {
            self.rows[i].remove(&j);
        } else {
            self.rows[i].insert(j, value);
        }
    }

    /// Stored entries of row `i`, ascending by column. Includes the diagonal.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, S)> + '_ {
        self.rows[i].iter().map(|(&j, &v)| (j, v))
    }

    pub fn row_len(&self, i: usize) -> usize {
        self.rows[i].len()
    }

    /// Every stored entry once: `i <= j` for symmetric kinds, all for directed.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, S)> + '_ {
        let symmetric = self.is_symmetric();
        self.rows.iter().enumerate().flat_map(move |(i, row)| {
            row.iter()
                .filter(move |(&j, _)| !symmetric || i <= j)
                .map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(BTreeMap::len).sum()
    }

    /// Extends the matrix with empty rows up to `dim`.
    pub fn grow(&mut self, dim: usize) {
        if dim > self.rows.len() {
            self.rows.resize(dim, BTreeMap::new());
        }
    }

    pub fn set_unit_diagonal<I: IntoIterator<Item = usize>>(&mut self, nodes: I) {
        for i in nodes {
            self.set(i, i, S::one());
        }
    }

    pub fn all_in_unit_interval(&self) -> bool {
        self.rows
            .iter()
            .flat_map(|r| r.values())
            .all(|&v| v >= S::zero() && v <= S::one())
    }

    fn from_rows(kind: ProximityKind, rows: Vec<BTreeMap<usize, S>>) -> Self {
        Self { kind, rows }
    }
}

/// Jaccard overlap for every pair of items given each item's defining set and
/// the inverted lists (for each set element, the items containing it).
fn jaccard<S: Scalar>(
    kind: ProximityKind,
    sets: &[Vec<usize>],
    inverted: &[Vec<usize>],
) -> SparseProximity<S> {
    let rows = (0..sets.len())
        .into_par_iter()
        .map(|i| {
            let mut shared: BTreeMap<usize, usize> = BTreeMap::new();
            for &g in &sets[i] {
                for &j in &inverted[g] {
                    *shared.entry(j).or_default() += 1;
                }
            }
            let ni = sets[i].len();
            shared
                .into_iter()
                .map(|(j, both)| {
                    let union = ni + sets[j].len() - both;
                    (j, S::from_ratio(both, union))
                })
                .collect::<BTreeMap<_, _>>()
        })
        .collect();
    SparseProximity::from_rows(kind, rows)
}

/// Co-citation strength between documents (shared ancestors).
pub fn inwards_proximity<S: Scalar>(ctx: &KnowledgeContext) -> SparseProximity<S> {
    jaccard(
        ProximityKind::Inwards,
        ctx.citation_in_lists(),
        ctx.citation_out_lists(),
    )
}

/// Bibliographic coupling between documents (shared descendants).
pub fn outwards_proximity<S: Scalar>(ctx: &KnowledgeContext) -> SparseProximity<S> {
    jaccard(
        ProximityKind::Outwards,
        ctx.citation_out_lists(),
        ctx.citation_in_lists(),
    )
}

pub fn keyword_semantic_proximity<S: Scalar>(ctx: &KnowledgeContext) -> SparseProximity<S> {
    jaccard(
        ProximityKind::KeywordSemantic,
        ctx.keyword_records(),
        ctx.record_keywords(),
    )
}

pub fn record_semantic_proximity<S: Scalar>(ctx: &KnowledgeContext) -> SparseProximity<S> {
    jaccard(
        ProximityKind::RecordSemantic,
        ctx.record_keywords(),
        ctx.keyword_records(),
    )
}

pub(crate) fn check_unit<S: Scalar>(name: &str, value: S) -> Result<()> {
    if value < S::zero() || value > S::one() {
        return Err(Error::InvalidParameter(format!(
            "{name} must lie in [0, 1], got {value}"
        )));
    }
    Ok(())
}

/// `λ·p_in + (1 − λ)·p_out`, entrywise.
pub fn combine_structural<S: Scalar>(
    inwards: &SparseProximity<S>,
    outwards: &SparseProximity<S>,
    lambda: S,
) -> Result<SparseProximity<S>> {
    if inwards.dim() != outwards.dim() {
        return Err(Error::DimensionMismatch {
            left: inwards.dim(),
            right: outwards.dim(),
        });
    }
    check_unit("structural weight", lambda)?;
    linear_blend(
        ProximityKind::Composite,
        &[(lambda, inwards), (S::one() - lambda, outwards)],
    )
}

/// Weighted entrywise sum of same-dimension matrices.
pub(crate) fn linear_blend<S: Scalar>(
    kind: ProximityKind,
    terms: &[(S, &SparseProximity<S>)],
) -> Result<SparseProximity<S>> {
    let dim = terms.first().map_or(0, |(_, p)| p.dim());
    let mut out = SparseProximity::new(kind, dim);
    for (weight, p) in terms {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: p.dim(),
            });
        }
        if *weight == S::zero() {
            continue;
        }
        for (i, row) in p.rows.iter().enumerate() {
            for (&j, &v) in row {
                let slot = out.rows[i].entry(j).or_insert_with(S::zero);
                *slot = *slot + *weight * v;
            }
        }
    }
    for row in &mut out.rows {
        row.retain(|_, v| *v != S::zero());
    }
    Ok(out)
}

/// Nodes related to `center` with proximity strictly greater than the threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct Neighborhood<S> {
    pub center: usize,
    pub threshold: S,
    /// Sorted by proximity descending, then node ascending.
    pub members: Vec<(usize, S)>,
}

pub fn neighborhood<S: Scalar>(
    p: &SparseProximity<S>,
    center: usize,
    alpha: S,
) -> Result<Neighborhood<S>> {
    if center >= p.dim() {
        return Err(Error::NodeOutOfRange {
            node: center,
            dim: p.dim(),
        });
    }
    check_unit("neighborhood threshold", alpha)?;
    let mut members: Vec<(usize, S)> = p
        .row(center)
        .filter(|&(j, v)| j != center && v > alpha)
        .collect();
    sort_ranked(&mut members);
    Ok(Neighborhood {
        center,
        threshold: alpha,
        members,
    })
}

/// Descending by value, ascending by node on ties.
pub(crate) fn sort_ranked<S: Scalar>(items: &mut [(usize, S)]) {
    items.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
}

#[derive(Clone, Debug, PartialEq)]
pub struct HitsScores<S> {
    pub authority: Vec<S>,
    pub hub: Vec<S>,
    pub iterations: usize,
    pub converged: bool,
}

pub const HITS_DEFAULT_EPSILON: f64 = 1e-8;
pub const HITS_DEFAULT_ITERATIONS: usize = 200;

/// Hub and authority scores over the citation matrix of `ctx`.
pub fn hits_rank<S: Real>(
    ctx: &KnowledgeContext,
    iterations: usize,
    epsilon: S,
) -> Result<HitsScores<S>> {
    let links: Vec<Vec<(usize, S)>> = ctx
        .citation_out_lists()
        .iter()
        .map(|out| out.iter().map(|&j| (j, S::one())).collect())
        .collect();
    hits_weighted(&links, iterations, epsilon)
}

/// HITS power iteration on a weighted adjacency given as out-lists:
/// `a ← Cᵀh`, `h ← Ca`, each followed by L2 normalization.
pub fn hits_weighted<S: Real>(
    out_links: &[Vec<(usize, S)>],
    iterations: usize,
    epsilon: S,
) -> Result<HitsScores<S>> {
    let n = out_links.len();
    if out_links
        .iter()
        .all(|row| row.iter().all(|&(_, w)| w == S::zero()))
    {
        return Err(Error::EmptyCitationMatrix);
    }
    let start = S::one() / S::from_ratio(n, 1).sqrt();
    let mut hub = vec![start; n];
    let mut authority = vec![S::zero(); n];
    let mut converged = false;
    let mut done = 0;
    for _ in 0..iterations {
        done += 1;
        let mut next_auth = vec![S::zero(); n];
        for (i, row) in out_links.iter().enumerate() {
            for &(j, w) in row {
                next_auth[j] = next_auth[j] + w * hub[i];
            }
        }
        normalize_l2(&mut next_auth);
        let mut next_hub = vec![S::zero(); n];
        for (i, row) in out_links.iter().enumerate() {
            next_hub[i] = row
                .iter()
                .fold(S::zero(), |acc, &(j, w)| acc + w * next_auth[j]);
        }
        normalize_l2(&mut next_hub);
        let change = max_abs_diff(&authority, &next_auth).max(max_abs_diff(&hub, &next_hub));
        authority = next_auth;
        hub = next_hub;
        if change < epsilon {
            converged = true;
            break;
        }
    }
    Ok(HitsScores {
        authority,
        hub,
        iterations: done,
        converged,
    })
}

fn normalize_l2<S: Real>(v: &mut [S]) {
    let norm = v.iter().fold(S::zero(), |acc, &x| acc + x * x).sqrt();
    if norm > S::zero() {
        for x in v.iter_mut() {
            *x = *x / norm;
        }
    }
}

pub(crate) fn max_abs_diff<S: Real>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .fold(S::zero(), |acc, (&x, &y)| acc.max((x - y).abs()))
}

/// `d = 1/p − 1`, or `None` for a missing link.
pub fn proximity_to_distance<S: Scalar>(p: S) -> Option<S> {
    if p > S::zero() {
        Some(S::one() / p - S::one())
    } else {
        None
    }
}

/// Outcome of comparing a direct link against the shortest indirect route.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SemiMetricRatio<S> {
    /// `direct / shortest`; greater than one flags a triangle violation.
    Ratio(S),
    /// The shortest path has length zero or there is no direct link while a
    /// path exists.
    Unbounded,
    /// No direct link and no path.
    Undefined,
}

#[derive(PartialEq)]
struct Frontier<S>(S, usize);

impl<S: PartialOrd> Eq for Frontier<S> {}

impl<S: PartialOrd> PartialOrd for Frontier<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<S: PartialOrd> Ord for Frontier<S> {
    // reversed for a min-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .partial_cmp(&self.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.1.cmp(&self.1))
    }
}

/// Shortest-path distances from `source` under `d = 1/p − 1` (Dijkstra).
pub fn shortest_distances<S: Scalar>(p: &SparseProximity<S>, source: usize) -> Vec<Option<S>> {
    let mut dist: Vec<Option<S>> = vec![None; p.dim()];
    let mut heap = BinaryHeap::new();
    dist[source] = Some(S::zero());
    heap.push(Frontier(S::zero(), source));
    while let Some(Frontier(d, u)) = heap.pop() {
        if dist[u].is_some_and(|best| d > best) {
            continue;
        }
        for (v, w) in p.row(u) {
            if v == u {
                continue;
            }
            let Some(edge) = proximity_to_distance(w) else {
                continue;
            };
            let candidate = d + edge;
            if dist[v].is_none_or(|best| candidate < best) {
                dist[v] = Some(candidate);
                heap.push(Frontier(candidate, v));
            }
        }
    }
    dist
}

pub fn semi_metric_ratio<S: Scalar>(
    p: &SparseProximity<S>,
    i: usize,
    j: usize,
) -> Result<SemiMetricRatio<S>> {
    for node in [i, j] {
        if node >= p.dim() {
            return Err(Error::NodeOutOfRange { node, dim: p.dim() });
        }
    }
    if i == j {
        return Ok(SemiMetricRatio::Ratio(S::one()));
    }
    let direct = proximity_to_distance(p.get(i, j));
    let shortest = shortest_distances(p, i)[j];
    Ok(match (direct, shortest) {
        (None, None) => SemiMetricRatio::Undefined,
        (None, Some(_)) => SemiMetricRatio::Unbounded,
        (Some(_), None) => unreachable!("a direct link is itself a path"),
        (Some(d), Some(s)) if d == s => SemiMetricRatio::Ratio(S::one()),
        (Some(_), Some(s)) if s == S::zero() => SemiMetricRatio::Unbounded,
        (Some(d), Some(s)) => SemiMetricRatio::Ratio(d / s),
    })
}

/// `#prox 1` text. Symmetric kinds list `i < j` only; directed kinds list
/// every stored entry.
pub fn write_proximity<S: Scalar>(p: &SparseProximity<S>) -> String {
    let mut out = String::with_capacity(16 * p.nnz() + 8);
    out.push_str(PROXIMITY_FILE_HEADER);
    out.push('\n');
    let symmetric = p.is_symmetric();
    for (i, j, v) in p.entries() {
        if symmetric && i == j {
            continue;
        }
        let _ = writeln!(out, "{i}\t{j}\t{v}");
    }
    out
}

/// Parses `#prox 1` text. The dimension defaults to one past the largest
/// index. Diagonals of symmetric kinds are not part of the format; restore
/// them with [`SparseProximity::set_unit_diagonal`].
pub fn read_proximity<S: Scalar + FromStr>(
    text: &str,
    kind: ProximityKind,
    dim: Option<usize>,
) -> Result<SparseProximity<S>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == PROXIMITY_FILE_HEADER => {}
        _ => {
            return Err(Error::Malformed {
                line: 1,
                message: format!("expected header `{PROXIMITY_FILE_HEADER}`"),
            })
        }
    }
    let mut triples = Vec::new();
    let mut max_ix = None;
    for (ix, line) in lines {
        let line_no = ix + 1;
        let bad = |message: String| Error::Malformed {
            line: line_no,
            message,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(bad(format!("expected 3 fields, found {}", fields.len())));
        }
        let i: usize = fields[0]
            .parse()
            .map_err(|_| bad(format!("bad index `{}`", fields[0])))?;
        let j: usize = fields[1]
            .parse()
            .map_err(|_| bad(format!("bad index `{}`", fields[1])))?;
        let v: S = fields[2]
            .parse()
            .map_err(|_| bad(format!("bad value `{}`", fields[2])))?;
        if kind.is_symmetric() && i >= j {
            return Err(bad(format!("symmetric kind requires i < j, got {i} {j}")));
        }
        if v.partial_cmp(&S::zero()).is_none_or(|o| o.is_lt()) || (kind.is_symmetric() && v > S::one()) {
            return Err(bad(format!("value {v} out of range")));
        }
        max_ix = max_ix.max(Some(i.max(j)));
        triples.push((i, j, v));
    }
    let needed = max_ix.map_or(0, |m| m + 1);
    let dim = match dim {
        Some(d) if d < needed => {
            return Err(Error::DimensionMismatch {
                left: d,
                right: needed,
            })
        }
        Some(d) => d,
        None => needed,
    };
    let mut p = SparseProximity::new(kind, dim);
    for (i, j, v) in triples {
        p.set(i, j, v);
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{IngestOptions, Record};
    use crate::scalar::Rational;
    use num_rational::Ratio;

    fn ctx(records: Vec<Record>) -> KnowledgeContext {
        KnowledgeContext::from_records(
            records,
            IngestOptions {
                min_keyword_frequency: 1,
                stem: false,
            },
        )
        .unwrap()
    }

    fn none() -> Vec<String> {
        Vec::new()
    }

    #[test]
    fn inwards_identical_ancestors_is_one() {
        let c = ctx(vec![Record::new("a", none(), ["d1", "d2"])]);
        let p: SparseProximity<f64> = inwards_proximity(&c);
        let d1 = c.document_id("d1").unwrap().0;
        let d2 = c.document_id("d2").unwrap().0;
        assert_eq!(p.get(d1, d2), 1.0);
        assert_eq!(p.get(d2, d1), 1.0);
    }

    #[test]
    fn inwards_partial_overlap() {
        let c = ctx(vec![
            Record::new("a", none(), ["d1"]),
            Record::new("b", none(), ["d1", "d2"]),
            Record::new("c", none(), ["d2"]),
            Record::new("e", none(), ["d3"]),
        ]);
        let p: SparseProximity<Rational> = inwards_proximity(&c);
        let id = |n: &str| c.document_id(n).unwrap().0;
        assert_eq!(p.get(id("d1"), id("d2")), Ratio::new(1, 3));
        assert_eq!(p.get(id("d1"), id("d3")), Ratio::from_integer(0));
        // citing documents have no ancestors: diagonal 0
        assert_eq!(p.get(id("a"), id("a")), Ratio::from_integer(0));
        assert_eq!(p.get(id("d1"), id("d1")), Ratio::from_integer(1));
    }

    #[test]
    fn outwards_coupling() {
        let c = ctx(vec![
            Record::new("d1", none(), ["x", "y", "z"]),
            Record::new("d2", none(), ["z", "w"]),
            Record::new("d3", none(), ["x", "y", "z"]),
            Record::new("d4", none(), none()),
        ]);
        let p: SparseProximity<Rational> = outwards_proximity(&c);
        let id = |n: &str| c.document_id(n).unwrap().0;
        assert_eq!(p.get(id("d1"), id("d2")), Ratio::new(1, 4));
        assert_eq!(p.get(id("d1"), id("d3")), Ratio::from_integer(1));
        assert_eq!(p.row(id("x")).count(), 0);
    }

    #[test]
    fn record_semantic_overlap() {
        let c = ctx(vec![
            Record::new("r1", ["k1", "k2", "k3"], none()),
            Record::new("r2", ["k3", "k4"], none()),
            Record::new("r3", ["k1", "k2", "k3"], none()),
            Record::new("r4", none(), none()),
        ]);
        let p: SparseProximity<Rational> = record_semantic_proximity(&c);
        assert_eq!(p.get(0, 1), Ratio::new(1, 4));
        assert_eq!(p.get(0, 2), Ratio::from_integer(1));
        assert_eq!(p.row(3).count(), 0);
        let k: SparseProximity<f64> = keyword_semantic_proximity(&c);
        for kw in 0..c.keyword_count() {
            assert_eq!(k.get(kw, kw), 1.0);
        }
    }

    #[test]
    fn combine_arithmetic() {
        let mut a = SparseProximity::<f64>::new(ProximityKind::Inwards, 3);
        let mut b = SparseProximity::new(ProximityKind::Outwards, 3);
        a.set(0, 1, 0.2);
        b.set(0, 1, 0.6);
        b.set(1, 2, 0.5);
        let c = combine_structural(&a, &b, 0.5).unwrap();
        assert!((c.get(0, 1) - 0.4).abs() < 1e-15);
        assert_eq!(c.get(2, 1), 0.25);
        let only_in = combine_structural(&a, &b, 1.0).unwrap();
        assert_eq!(only_in.get(0, 1), 0.2);
        assert_eq!(only_in.get(1, 2), 0.0);
        let wrong = SparseProximity::<f64>::new(ProximityKind::Outwards, 4);
        assert!(matches!(
            combine_structural(&a, &wrong, 0.5),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(combine_structural(&a, &b, 1.5).is_err());
    }

    #[test]
    fn neighborhood_is_strict_and_sorted() {
        let mut p = SparseProximity::new(ProximityKind::Composite, 4);
        p.set(0, 0, 1.0);
        p.set(0, 1, 0.3);
        p.set(0, 2, 0.7);
        p.set(0, 3, 0.3);
        let all = neighborhood(&p, 0, 0.0).unwrap();
        assert_eq!(all.members, vec![(2, 0.7), (1, 0.3), (3, 0.3)]);
        assert!(neighborhood(&p, 0, 1.0).unwrap().members.is_empty());
        assert_eq!(neighborhood(&p, 0, 0.3).unwrap().members, vec![(2, 0.7)]);
        assert!(matches!(
            neighborhood(&p, 9, 0.1),
            Err(Error::NodeOutOfRange { node: 9, dim: 4 })
        ));
    }

    #[test]
    fn hits_two_node() {
        let links = vec![vec![(1, 1.0)], vec![]];
        let h = hits_weighted(&links, 200, 1e-8).unwrap();
        assert_eq!(h.authority, vec![0.0, 1.0]);
        assert_eq!(h.hub, vec![1.0, 0.0]);
        assert!(h.converged);
    }

    #[test]
    fn hits_star() {
        let recs: Vec<Record> = (0..5)
            .map(|i| Record::new(&format!("leaf{i}"), none(), ["target"]))
            .collect();
        let c = ctx(recs);
        let h: HitsScores<f64> = hits_rank(&c, 200, 1e-8).unwrap();
        let t = c.document_id("target").unwrap().0;
        for (d, &a) in h.authority.iter().enumerate() {
            let expected = if d == t { 1.0 } else { 0.0 };
            assert!((a - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn hits_rejects_empty_matrix() {
        let links: Vec<Vec<(usize, f64)>> = vec![vec![], vec![]];
        assert!(matches!(
            hits_weighted(&links, 10, 1e-8),
            Err(Error::EmptyCitationMatrix)
        ));
    }

    #[test]
    fn semi_metric_triangle() {
        let mut p = SparseProximity::new(ProximityKind::KeywordSemantic, 4);
        p.set(0, 1, Ratio::new(1i64, 10));
        p.set(0, 2, Ratio::new(4, 5));
        p.set(2, 1, Ratio::new(4, 5));
        assert_eq!(
            semi_metric_ratio(&p, 0, 1).unwrap(),
            SemiMetricRatio::Ratio(Ratio::from_integer(18))
        );
        assert_eq!(
            semi_metric_ratio(&p, 0, 2).unwrap(),
            SemiMetricRatio::Ratio(Ratio::from_integer(1))
        );
        assert_eq!(
            semi_metric_ratio(&p, 0, 3).unwrap(),
            SemiMetricRatio::Undefined
        );
        let mut q = SparseProximity::new(ProximityKind::KeywordSemantic, 3);
        q.set(0, 1, 1.0);
        q.set(1, 2, 0.5);
        assert_eq!(semi_metric_ratio(&q, 0, 1).unwrap(), SemiMetricRatio::Ratio(1.0));
        assert_eq!(semi_metric_ratio(&q, 0, 2).unwrap(), SemiMetricRatio::Unbounded);
    }

    #[test]
    fn proximity_text_round_trip() {
        let mut p = SparseProximity::new(ProximityKind::KeywordSemantic, 4);
        p.set(0, 0, 1.0);
        p.set(0, 2, 1.0 / 3.0);
        p.set(1, 3, 0.1);
        let text = write_proximity(&p);
        assert_eq!(text, "#prox 1\n0\t2\t0.3333333333333333\n1\t3\t0.1\n");
        let mut back = read_proximity::<f64>(&text, ProximityKind::KeywordSemantic, Some(4)).unwrap();
        back.set_unit_diagonal([0]);
        assert_eq!(back, p);

        let mut t = SparseProximity::new(ProximityKind::Traversal, 2);
        t.set(1, 0, 0.3);
        t.set(0, 1, 1.0);
        let text = write_proximity(&t);
        assert_eq!(text, "#prox 1\n0\t1\t1\n1\t0\t0.3\n");
        assert_eq!(read_proximity::<f64>(&text, ProximityKind::Traversal, None).unwrap(), t);
    }

    #[test]
    fn proximity_reader_errors() {
        let err = read_proximity::<f64>("#prox 1\n1\t0\t0.5\n", ProximityKind::Composite, None)
            .unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 2, .. }));
        let err = read_proximity::<f64>("#prox 1\n0\t1\tabc\n", ProximityKind::Composite, None)
            .unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 2, .. }));
        assert!(read_proximity::<f64>("0\t1\t1\n", ProximityKind::Composite, None).is_err());
    }
}
