use adaptrec_core::apweb::{accumulate, extract_paths, learn, symmetrize_max, Click, PathLog, RewardConfig, UserPath};
use adaptrec_core::proximity::SparseProximity;
use adaptrec_core::spreading::{spread, SpreadConfig};
use adaptrec_core::{DocumentId, ProximityKind, Rational};
use num_rational::Ratio;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn exact() -> RewardConfig<Rational> {
    RewardConfig {
        symm_factor: Ratio::new(3, 10),
        trans_factor: Ratio::new(1, 2),
    }
}

fn path_strategy(dim: usize) -> impl Strategy<Value = Vec<UserPath>> {
    prop::collection::vec((0..dim, 0..dim, 0..dim), 1..40).prop_map(|v| {
        v.into_iter()
            .map(|(a, b, c)| UserPath(DocumentId(a), DocumentId(b), DocumentId(c)))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn learning_ignores_path_order(paths in path_strategy(8), seed in any::<u64>()) {
        let mut shuffled = paths.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(learn(&paths, 8, &exact()).unwrap(), learn(&shuffled, 8, &exact()).unwrap());
    }

    #[test]
    fn doubling_batch_is_neutral(paths in path_strategy(8)) {
        let doubled: Vec<UserPath> = paths.iter().flat_map(|&p| [p, p]).collect();
        prop_assert_eq!(accumulate(&paths, 8, &exact()).unwrap(), accumulate(&doubled, 8, &exact()).unwrap());
    }

    #[test]
    fn learned_matrix_is_bounded(paths in path_strategy(6)) {
        let t = learn::<f64>(&paths, 6, &RewardConfig::default()).unwrap();
        prop_assert!(t.all_in_unit_interval());
    }
}

#[test]
fn one_way_traffic_has_symmetry_ratio() {
    // documents 0..9 visited strictly forward: i → i+1 → i+2
    let paths: Vec<UserPath> = (0..8)
        .map(|i| UserPath(DocumentId(i), DocumentId(i + 1), DocumentId(i + 2)))
        .collect();
    let t = accumulate(&paths, 10, &exact()).unwrap();
    for i in 0..9 {
        assert_eq!(t.get(i + 1, i) / t.get(i, i + 1), Ratio::new(3, 10));
    }
}

#[test]
fn planted_clusters_are_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut log = PathLog::new();
    let mut produced = 0;
    let mut session = 0;
    while produced < 1000 {
        let len = 12;
        let mut doc: usize = rng.gen_range(0..20);
        for step in 0..len {
            log.push(Click {
                session: format!("s{session}"),
                time: step as i64 * 30,
                document: format!("d{doc:02}"),
            });
            let cluster = if rng.gen_bool(0.9) { doc / 10 } else { 1 - doc / 10 };
            let mut next = cluster * 10 + rng.gen_range(0..10);
            while next == doc {
                next = cluster * 10 + rng.gen_range(0..10);
            }
            doc = next;
        }
        produced += len - 2;
        session += 1;
    }
    let named = extract_paths(&log, 1800).unwrap();
    let paths: Vec<UserPath> = named
        .iter()
        .take(1000)
        .map(|p| {
            let id = |s: &String| DocumentId(s[1..].parse().unwrap());
            UserPath(id(&p[0]), id(&p[1]), id(&p[2]))
        })
        .collect();
    assert_eq!(paths.len(), 1000);
    let t = symmetrize_max(&learn::<f64>(&paths, 20, &RewardConfig::default()).unwrap());
    let (mut intra, mut inter, mut ni, mut ne) = (0.0, 0.0, 0, 0);
    for i in 0..20 {
        for j in 0..20 {
            if i == j {
                continue;
            }
            if i / 10 == j / 10 {
                intra += t.get(i, j);
                ni += 1;
            } else {
                inter += t.get(i, j);
                ne += 1;
            }
        }
    }
    let (intra, inter) = (intra / ni as f64, inter / ne as f64);
    assert!(intra >= 5.0 * inter, "intra {intra} inter {inter}");
}

fn random_network(rng: &mut ChaCha8Rng, n: usize) -> SparseProximity<f64> {
    let mut w = SparseProximity::new(ProximityKind::Traversal, n);
    for i in 0..n {
        let degree = rng.gen_range(0..6);
        for _ in 0..degree {
            let j = rng.gen_range(0..n);
            w.set(i, j, rng.gen_range(0.01..1.0));
        }
    }
    w
}

#[test]
fn spreading_converges_and_clamps_cues() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..30 {
        let n = rng.gen_range(2..300);
        let w = random_network(&mut rng, n);
        let cues: Vec<usize> = (0..rng.gen_range(1..4)).map(|_| rng.gen_range(0..n)).collect();
        let s = spread(&w, &cues, &SpreadConfig::default()).unwrap();
        assert!(s.converged);
        assert!(s.iterations <= 500);
        for &c in &cues {
            assert_eq!(s.activation[c], 1.0);
        }
        assert!(s.activation.iter().all(|a| a.is_finite() && *a >= 0.0));
        assert_eq!(s, spread(&w, &cues, &SpreadConfig::default()).unwrap());
    }
}

#[test]
fn stronger_edge_never_lowers_target() {
    // cue 0 reaches 3 through 1 (variable) or 2 (fixed); the target is
    // node 3. Raising 0→1 shifts mass onto the direct 1→3 route.
    for (weak, strong) in [(0.1, 0.5), (0.5, 0.9), (0.2, 1.0)] {
        let build = |w01: f64| {
            let mut w = SparseProximity::new(ProximityKind::Traversal, 5);
            w.set(0, 1, w01);
            w.set(0, 2, 0.5);
            w.set(1, 3, 1.0);
            w.set(2, 4, 1.0);
            w.set(4, 3, 1.0);
            w
        };
        let cfg = SpreadConfig::default();
        let lo = spread(&build(weak), &[0], &cfg).unwrap().activation[3];
        let hi = spread(&build(strong), &[0], &cfg).unwrap().activation[3];
        assert!(hi >= lo, "{hi} < {lo}");
    }
}
