mod common;

use common::rng;
use ctxcausal_core::synth::{generate_pair, random_cbn, random_cpts, sample, sample_columns, Cbn, PairOptions};
use ctxcausal_core::Assignment;

#[test]
fn target_in_degree_matches_edge_probability() {
    let seeds = 1000;
    let total: usize = (0..seeds)
        .map(|s| {
            let cbn = random_cbn(10, s, 2.0 / 9.0, (0.1, 0.9)).unwrap();
            cbn.parents[cbn.target].len()
        })
        .sum();
    let mean = total as f64 / seeds as f64;
    assert!((1.5..=2.5).contains(&mean), "{mean}");
}

#[test]
fn acyclic_and_valid_cpts() {
    for s in 0..50 {
        let cbn = random_cbn(15, s, 0.3, (0.1, 0.9)).unwrap();
        for (v, ps) in cbn.parents.iter().enumerate() {
            assert!(ps.iter().all(|&p| p < v));
            assert_eq!(cbn.cpts[v].len(), 1 << ps.len());
            assert!(cbn.cpts[v].iter().all(|p| (0.1..=0.9).contains(p)));
        }
        assert!(!cbn.parents[cbn.target].is_empty());
    }
}

#[test]
fn root_frequency_within_three_sigma() {
    let cbn = Cbn {
        parents: vec![vec![], vec![0]],
        cpts: vec![vec![0.5], vec![0.3, 0.7]],
        target: 1,
    };
    let d = sample(&cbn, 10_000, 9).unwrap();
    let mean = (0..d.n_rows()).map(|r| f64::from(d.code(r, 0))).sum::<f64>() / 10_000.0;
    assert!((0.47..=0.53).contains(&mean), "{mean}");
}

#[test]
fn deterministic_chain_copies_parent() {
    let cbn = Cbn {
        parents: vec![vec![], vec![0]],
        cpts: vec![vec![0.4], vec![0.0, 1.0]],
        target: 1,
    };
    let cols = sample_columns(&cbn, 500, &mut rng(1));
    assert_eq!(cols[0], cols[1]);
}

/// Every parent configuration with enough rows reproduces its CPT entry
/// within 4 sigma, the extra sigma covering the many configurations checked.
fn check_frequencies(cbn: &Cbn, cols: &[Vec<u32>]) {
    let n = cols[0].len();
    for (v, ps) in cbn.parents.iter().enumerate() {
        let mut hits = vec![[0u64; 2]; 1 << ps.len()];
        for r in 0..n {
            let k = ps.iter().enumerate().fold(0, |acc, (i, &p)| acc | ((cols[p][r] as usize) << i));
            hits[k][cols[v][r] as usize] += 1;
        }
        for (k, h) in hits.iter().enumerate() {
            let m = (h[0] + h[1]) as f64;
            if m < 100.0 {
                continue;
            }
            let p = cbn.cpts[v][k];
            let sigma = (p * (1.0 - p) / m).sqrt();
            assert!((h[1] as f64 / m - p).abs() <= 4.0 * sigma, "node {v} config {k}");
        }
    }
}

#[test]
fn shared_dag_networks_follow_their_own_cpts() {
    let first = random_cbn(8, 3, 0.35, (0.1, 0.9)).unwrap();
    let second = Cbn {
        cpts: random_cpts(&first.parents, (0.1, 0.9), &mut rng(99)),
        ..first.clone()
    };
    assert_ne!(first.cpts, second.cpts);
    let a = sample_columns(&first, 40_000, &mut rng(1));
    let b = sample_columns(&second, 40_000, &mut rng(2));
    check_frequencies(&first, &a);
    check_frequencies(&second, &b);
    assert_ne!(a, b);
}

#[test]
fn pair_layout_and_determinism() {
    let (d, truth) = generate_pair(10, 1000, 5, &PairOptions::default()).unwrap();
    assert_eq!(d.variables().len(), 12);
    assert_eq!(d.n_rows(), 1000);
    assert_eq!(truth.context_var, 10);
    assert!((0..1000).all(|r| d.code(r, 10) == u32::from(r >= 500)));
    let first_half = d.subset(&Assignment::equals(10, 0)).unwrap();
    assert_eq!(first_half.n_rows(), 500);
    for r in 0..500 {
        for v in 0..12 {
            assert_eq!(first_half.code(r, v), d.code(r, v));
        }
    }
    let again = generate_pair(10, 1000, 5, &PairOptions::default()).unwrap();
    assert_eq!((d, truth), again);
}

#[test]
fn shuffle_keeps_context_halves() {
    let opts = PairOptions {
        shuffle: true,
        ..PairOptions::default()
    };
    let (d, _) = generate_pair(6, 2000, 8, &opts).unwrap();
    let ones = (0..2000).filter(|&r| d.code(r, 6) == 1).count();
    assert_eq!(ones, 1000);
    assert!((0..1000).any(|r| d.code(r, 6) == 1));
}
