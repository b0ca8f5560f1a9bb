//! Spreading-activation retrieval over a proximity network.
//!
//! Cue nodes start with activation 1. Each step pushes activation along the
//! row-normalized weights, damped by `decay`:
//! `a[t+1] = decay · Ŵᵀ · a[t]`, with cue entries reset to 1 when clamping.
//! Nodes are ranked by their activation at the fixed point. Self links are
//! ignored.

use crate::error::{Error, Result};
use crate::proximity::{max_abs_diff, sort_ranked, SparseProximity};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpreadConfig<S> {
    pub decay: S,
    pub max_iters: usize,
    pub epsilon: S,
    pub cue_clamp: bool,
    pub exclude_cues: bool,
    pub top_k: Option<usize>,
    /// Keep only nodes whose activation exceeds this value.
    pub threshold: Option<S>,
}

impl<S: Real> Default for SpreadConfig<S> {
    fn default() -> Self {
        Self {
            decay: S::from_f64(0.8),
            max_iters: 500,
            epsilon: S::from_f64(1e-8),
            cue_clamp: true,
            exclude_cues: true,
            top_k: None,
            threshold: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spread<S> {
    /// Descending by activation, node ascending on ties.
    pub ranking: Vec<(usize, S)>,
    pub activation: Vec<S>,
    pub iterations: usize,
    pub converged: bool,
}

/// Row-stochastic copy of `w` as out-lists, without self links.
fn normalized_rows<S: Real>(w: &SparseProximity<S>) -> Vec<Vec<(usize, S)>> {
    (0..w.dim())
        .map(|i| {
            let row: Vec<(usize, S)> = w.row(i).filter(|&(j, v)| j != i && v > S::zero()).collect();
            let total = row.iter().fold(S::zero(), |acc, &(_, v)| acc + v);
            if total > S::zero() {
                row.into_iter().map(|(j, v)| (j, v / total)).collect()
            } else {
                Vec::new()
            }
        })
        .collect()
}

pub fn spread<S: Real>(w: &SparseProximity<S>, cues: &[usize], cfg: &SpreadConfig<S>) -> Result<Spread<S>> {
    if cues.is_empty() {
        return Err(Error::EmptyCues);
    }
    let n = w.dim();
    if let Some(&bad) = cues.iter().find(|&&c| c >= n) {
        return Err(Error::NodeOutOfRange { node: bad, dim: n });
    }
    if !(cfg.decay > S::zero() && cfg.decay < S::one()) {
        return Err(Error::InvalidParameter(format!(
            "decay must lie in (0, 1), got {}",
            cfg.decay
        )));
    }

    let rows = normalized_rows(w);
    let mut is_cue = vec![false; n];
    let mut activation = vec![S::zero(); n];
    for &c in cues {
        is_cue[c] = true;
        activation[c] = S::one();
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iters {
        iterations += 1;
        let mut next = vec![S::zero(); n];
        for (i, row) in rows.iter().enumerate() {
            let a = activation[i];
            if a == S::zero() {
                continue;
            }
            for &(j, wij) in row {
                next[j] = next[j] + wij * a;
            }
        }
        for (j, x) in next.iter_mut().enumerate() {
            *x = if cfg.cue_clamp && is_cue[j] {
                S::one()
            } else {
                *x * cfg.decay
            };
        }
        let change = max_abs_diff(&activation, &next);
        activation = next;
        if change < cfg.epsilon {
            converged = true;
            break;
        }
    }

    let mut ranking: Vec<(usize, S)> = activation
        .iter()
        .enumerate()
        .filter(|&(j, &a)| a > S::zero() && !(cfg.exclude_cues && is_cue[j]))
        .filter(|&(_, &a)| cfg.threshold.is_none_or(|t| a > t))
        .map(|(j, &a)| (j, a))
        .collect();
    sort_ranked(&mut ranking);
    if let Some(k) = cfg.top_k {
        ranking.truncate(k);
    }
    Ok(Spread {
        ranking,
        activation,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proximity::ProximityKind;

    fn cfg(decay: f64) -> SpreadConfig<f64> {
        SpreadConfig {
            decay,
            ..SpreadConfig::default()
        }
    }

    #[test]
    fn zero_network_keeps_only_cues() {
        let w = SparseProximity::<f64>::new(ProximityKind::Composite, 4);
        let s = spread(&w, &[1], &cfg(0.8)).unwrap();
        assert!(s.ranking.is_empty());
        assert_eq!(s.activation, vec![0.0, 1.0, 0.0, 0.0]);
        let keep = SpreadConfig {
            exclude_cues: false,
            ..cfg(0.8)
        };
        assert_eq!(spread(&w, &[1], &keep).unwrap().ranking, vec![(1, 1.0)]);
    }

    #[test]
    fn two_node_fixed_point() {
        let mut w = SparseProximity::new(ProximityKind::Traversal, 2);
        w.set(0, 1, 1.0);
        let s = spread(&w, &[0], &cfg(0.5)).unwrap();
        assert!(s.converged);
        assert!((s.activation[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn chain_geometric_decay() {
        let mut w = SparseProximity::new(ProximityKind::Traversal, 3);
        w.set(0, 1, 1.0);
        w.set(1, 2, 1.0);
        let s = spread(&w, &[0], &cfg(0.5)).unwrap();
        assert!(s.converged);
        assert_eq!(s.ranking, vec![(1, 0.5), (2, 0.25)]);
    }

    #[test]
    fn self_links_are_ignored() {
        let mut w = SparseProximity::new(ProximityKind::Traversal, 2);
        w.set(0, 0, 1.0);
        w.set(0, 1, 1.0);
        let s = spread(&w, &[0], &cfg(0.5)).unwrap();
        assert!((s.activation[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn threshold_and_top_k() {
        let mut w = SparseProximity::new(ProximityKind::Composite, 4);
        w.set(0, 1, 0.6);
        w.set(0, 2, 0.3);
        w.set(0, 3, 0.1);
        let base = spread(&w, &[0], &cfg(0.8)).unwrap();
        assert_eq!(base.ranking.iter().map(|r| r.0).collect::<Vec<_>>(), [1, 2, 3]);
        let top = SpreadConfig {
            top_k: Some(2),
            ..cfg(0.8)
        };
        assert_eq!(spread(&w, &[0], &top).unwrap().ranking.len(), 2);
        let thr = SpreadConfig {
            threshold: Some(base.ranking[1].1),
            ..cfg(0.8)
        };
        assert_eq!(spread(&w, &[0], &thr).unwrap().ranking, base.ranking[..1].to_vec());
    }

    #[test]
    fn errors() {
        let w = SparseProximity::<f64>::new(ProximityKind::Composite, 2);
        assert!(matches!(spread(&w, &[], &cfg(0.8)), Err(Error::EmptyCues)));
        assert!(matches!(
            spread(&w, &[2], &cfg(0.8)),
            Err(Error::NodeOutOfRange { node: 2, dim: 2 })
        ));
        assert!(spread(&w, &[0], &cfg(1.0)).is_err());
    }
}
