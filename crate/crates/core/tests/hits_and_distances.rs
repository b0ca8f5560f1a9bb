use adaptrec_core::proximity::{hits_weighted, semi_metric_ratio, SparseProximity};
use adaptrec_core::{ProximityKind, Rational, SemiMetricRatio};
use nalgebra::{DMatrix, SymmetricEigen};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random digraph whose authority matrix has a well separated top eigenvalue.
fn separated_digraph(rng: &mut ChaCha8Rng, n: usize) -> (Vec<Vec<(usize, f64)>>, DMatrix<f64>) {
    loop {
        let mut c = DMatrix::<f64>::zeros(n, n);
        let mut links = vec![Vec::new(); n];
        for i in 0..n {
            for j in 0..n {
                if i != j && rng.gen_bool(0.2) {
                    c[(i, j)] = 1.0;
                    links[i].push((j, 1.0));
                }
            }
        }
        let ctc = c.transpose() * &c;
        let eig = SymmetricEigen::new(ctc.clone());
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
        if vals[0] > 0.0 && vals[1] / vals[0] < 0.9 {
            return (links, ctc);
        }
    }
}

fn dominant_eigenvector(m: &DMatrix<f64>) -> Vec<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let (top, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let v = eig.eigenvectors.column(top);
    let sign = if v.sum() < 0.0 { -1.0 } else { 1.0 };
    let norm = v.norm();
    v.iter().map(|x| sign * x / norm).collect()
}

#[test]
fn authority_matches_dense_eigenvector() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..10 {
        let (links, ctc) = separated_digraph(&mut rng, 20);
        let hits = hits_weighted(&links, 200, 1e-8).unwrap();
        assert!(hits.converged);
        let oracle = dominant_eigenvector(&ctc);
        for (a, o) in hits.authority.iter().zip(&oracle) {
            assert!((a - o).abs() < 1e-6, "{a} vs {o}");
        }
        assert!(hits.authority.iter().all(|&a| a >= 0.0));
        assert!(hits.hub.iter().all(|&h| h >= 0.0));
        let norm: f64 = hits.authority.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
    }
}

#[test]
fn hits_is_scale_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (links, _) = separated_digraph(&mut rng, 15);
    let scaled: Vec<Vec<(usize, f64)>> = links
        .iter()
        .map(|row| row.iter().map(|&(j, w)| (j, 3.5 * w)).collect())
        .collect();
    let a = hits_weighted(&links, 200, 1e-10).unwrap();
    let b = hits_weighted(&scaled, 200, 1e-10).unwrap();
    for (x, y) in a.authority.iter().zip(&b.authority) {
        assert!((x - y).abs() < 1e-9);
    }
}

#[test]
fn collinear_points_are_metric() {
    // proximity 1/(1+|x_i - x_j|) has distance exactly |x_i - x_j|
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let xs: Vec<i64> = (0..12).map(|_| rng.gen_range(0..50)).collect();
    let mut p = SparseProximity::<Rational>::new(ProximityKind::KeywordSemantic, xs.len());
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            p.set(i, j, Ratio::new(1, 1 + (xs[i] - xs[j]).abs()));
        }
    }
    for i in 0..xs.len() {
        for j in 0..xs.len() {
            assert_eq!(
                semi_metric_ratio(&p, i, j).unwrap(),
                SemiMetricRatio::Ratio(Ratio::from_integer(1))
            );
        }
    }
}
