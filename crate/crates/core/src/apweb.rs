//! Traversal proximity learned from user click trails.
//!
//! Every three documents retrieved in sequence by one user, `(i, j, k)`, form
//! a path. With `n` paths in a batch and `r = 1/n`:
//!
//! * frequency: `t[i][j] += r`, `t[j][k] += r`
//! * symmetry: `t[j][i] += symm·r`, `t[k][j] += symm·r`
//! * transitivity: `t[i][k] += trans·r`
//!
//! The accumulated matrix is clamped into `[0, 1]`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{DocumentId, KnowledgeContext};
use crate::error::{Error, Result};
use crate::proximity::{linear_blend, ProximityKind, SparseProximity};
use crate::scalar::Scalar;

pub const PATH_LOG_HEADER: &str = "#plog 1";
pub const DEFAULT_SESSION_GAP: i64 = 1800;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Click {
    pub session: String,
    pub time: i64,
    pub document: String,
}

/// Append-only click log.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathLog {
    clicks: Vec<Click>,
}

impl PathLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, click: Click) {
        self.clicks.push(click);
    }

    pub fn clicks(&self) -> &[Click] {
        &self.clicks
    }

    pub fn len(&self) -> usize {
        self.clicks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clicks.is_empty()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h == PATH_LOG_HEADER => {}
            _ => {
                return Err(Error::Malformed {
                    line: 1,
                    message: format!("expected header `{PATH_LOG_HEADER}`"),
                })
            }
        }
        let mut log = Self::new();
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
            if fields[0].is_empty() || fields[2].is_empty() {
                return Err(bad("empty session or document".into()));
            }
            let time = fields[1]
                .parse()
                .map_err(|_| bad(format!("bad timestamp `{}`", fields[1])))?;
            log.push(Click {
                session: fields[0].to_string(),
                time,
                document: fields[2].to_string(),
            });
        }
        Ok(log)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from(PATH_LOG_HEADER);
        out.push('\n');
        for c in &self.clicks {
            let _ = writeln!(out, "{}\t{}\t{}", c.session, c.time, c.document);
        }
        out
    }
}

/// Three documents retrieved in sequence, by name.
pub type NamedPath = [String; 3];

/// Three documents retrieved in sequence, as indices into `D`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UserPath(pub DocumentId, pub DocumentId, pub DocumentId);

/// Sliding-window triples per session. Sessions are visited in identifier
/// order; a session is split wherever two clicks are more than `session_gap`
/// seconds apart, and repeated consecutive clicks on one document collapse.
/// Timestamps must be non-decreasing within a session.
pub fn extract_paths(log: &PathLog, session_gap: i64) -> Result<Vec<NamedPath>> {
    let mut sessions: BTreeMap<&str, Vec<(usize, &Click)>> = BTreeMap::new();
    for (ix, click) in log.clicks().iter().enumerate() {
        sessions
            .entry(click.session.as_str())
            .or_default()
            .push((ix + 2, click));
    }
    let mut paths = Vec::new();
    for clicks in sessions.values() {
        let mut run: Vec<&str> = Vec::new();
        let mut last_time: Option<i64> = None;
        for &(line, click) in clicks {
            if let Some(t) = last_time {
                if click.time < t {
                    return Err(Error::Malformed {
                        line,
                        message: format!("timestamp {} precedes {t} in session", click.time),
                    });
                }
                if click.time - t > session_gap {
                    emit_windows(&run, &mut paths);
                    run.clear();
                }
            }
            last_time = Some(click.time);
            if run.last() != Some(&click.document.as_str()) {
                run.push(&click.document);
            }
        }
        emit_windows(&run, &mut paths);
    }
    Ok(paths)
}

fn emit_windows(run: &[&str], out: &mut Vec<NamedPath>) {
    for w in run.windows(3) {
        out.push([w[0].to_string(), w[1].to_string(), w[2].to_string()]);
    }
}

pub fn resolve_paths(ctx: &KnowledgeContext, paths: &[NamedPath]) -> Result<Vec<UserPath>> {
    paths
        .iter()
        .map(|[a, b, c]| {
            let id = |name: &String| {
                ctx.document_id(name)
                    .ok_or_else(|| Error::UnknownDocument(name.clone()))
            };
            Ok(UserPath(id(a)?, id(b)?, id(c)?))
        })
        .collect()
}

/// Rewards relative to `r_freq = 1/n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardConfig<S> {
    pub symm_factor: S,
    pub trans_factor: S,
}

impl<S: Scalar> Default for RewardConfig<S> {
    fn default() -> Self {
        Self {
            symm_factor: S::from_f64(0.3),
            trans_factor: S::from_f64(0.5),
        }
    }
}

impl<S: Scalar> RewardConfig<S> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("symm_factor", self.symm_factor), ("trans_factor", self.trans_factor)] {
            if !(v > S::zero() && v < S::one()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must lie in (0, 1), got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Applies the three learning rules to all paths without normalization.
pub fn accumulate<S: Scalar>(
    paths: &[UserPath],
    dim: usize,
    cfg: &RewardConfig<S>,
) -> Result<SparseProximity<S>> {
    cfg.validate()?;
    let mut t = SparseProximity::new(ProximityKind::Traversal, dim);
    if paths.is_empty() {
        return Ok(t);
    }
    let freq = S::from_ratio(1, paths.len());
    let symm = cfg.symm_factor * freq;
    let trans = cfg.trans_factor * freq;
    for &UserPath(i, j, k) in paths {
        for d in [i, j, k] {
            if d.0 >= dim {
                return Err(Error::NodeOutOfRange { node: d.0, dim });
            }
        }
        let (i, j, k) = (i.0, j.0, k.0);
        let mut bump = |a: usize, b: usize, by: S| {
            let v = t.get(a, b);
            t.set(a, b, v + by);
        };
        bump(i, j, freq);
        bump(j, k, freq);
        bump(j, i, symm);
        bump(k, j, symm);
        bump(i, k, trans);
    }
    Ok(t)
}

/// Learns the traversal matrix `T` from one batch of paths.
pub fn learn<S: Scalar>(
    paths: &[UserPath],
    dim: usize,
    cfg: &RewardConfig<S>,
) -> Result<SparseProximity<S>> {
    let raw = accumulate(paths, dim, cfg)?;
    let mut t = SparseProximity::new(ProximityKind::Traversal, dim);
    for (i, j, v) in raw.entries() {
        t.set(i, j, v.clamp_unit());
    }
    Ok(t)
}

/// `t̂(i, j) = max(t(i, j), t(j, i))`.
pub fn symmetrize_max<S: Scalar>(t: &SparseProximity<S>) -> SparseProximity<S> {
    let mut out = SparseProximity::new(ProximityKind::Composite, t.dim());
    for (i, j, v) in t.entries() {
        let current = out.get(i, j);
        if v > current {
            out.set(i, j, v);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompositeWeights<S> {
    pub traversal: S,
    pub structural: S,
    pub semantic: S,
}

impl<S: Scalar> Default for CompositeWeights<S> {
    fn default() -> Self {
        Self {
            traversal: S::from_f64(0.5),
            structural: S::from_f64(0.25),
            semantic: S::from_f64(0.25),
        }
    }
}

/// Blends symmetrized traversal, structural and record-semantic proximity into
/// one document network over `D`. Record-semantic entries are carried over
/// for record pairs that are both citation documents.
pub fn composite_proximity<S: Scalar>(
    ctx: &KnowledgeContext,
    traversal: &SparseProximity<S>,
    structural: &SparseProximity<S>,
    record_semantic: &SparseProximity<S>,
    weights: CompositeWeights<S>,
) -> Result<SparseProximity<S>> {
    let w = [weights.traversal, weights.structural, weights.semantic];
    if w.iter().any(|&x| x < S::zero()) {
        return Err(Error::InvalidParameter("composite weights must be nonnegative".into()));
    }
    let sum = w[0] + w[1] + w[2];
    if sum.abs_diff(S::one()) > S::weight_tolerance() {
        return Err(Error::InvalidParameter(format!(
            "composite weights must sum to 1, got {sum}"
        )));
    }
    let p = ctx.document_count();
    for (dim, what) in [(traversal.dim(), p), (structural.dim(), p)] {
        if dim != what {
            return Err(Error::DimensionMismatch { left: dim, right: what });
        }
    }
    if record_semantic.dim() != ctx.record_count() {
        return Err(Error::DimensionMismatch {
            left: record_semantic.dim(),
            right: ctx.record_count(),
        });
    }

    let mut semantic_on_docs = SparseProximity::new(ProximityKind::RecordSemantic, p);
    for (r1, r2, v) in record_semantic.entries() {
        let d1 = ctx.document_of_record(crate::corpus::RecordId(r1));
        let d2 = ctx.document_of_record(crate::corpus::RecordId(r2));
        if let (Some(d1), Some(d2)) = (d1, d2) {
            semantic_on_docs.set(d1.0, d2.0, v);
        }
    }
    let mut blended = linear_blend(
        ProximityKind::Composite,
        &[
            (weights.traversal, &symmetrize_max(traversal)),
            (weights.structural, structural),
            (weights.semantic, &semantic_on_docs),
        ],
    )?;
    // rounding may push a sum of unit values a hair past 1
    let over: Vec<_> = blended.entries().filter(|e| e.2 > S::one()).collect();
    for (i, j, v) in over {
        blended.set(i, j, v.clamp_unit());
    }
    Ok(blended)
}
