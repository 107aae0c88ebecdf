//! Generative fixtures with analytically known effects.
#![allow(dead_code)]

use ctxcausal_core::causal::TREATED;
use ctxcausal_core::{Dataset, VarId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn bern<R: Rng>(rng: &mut R, p: f64) -> u32 {
    u32::from(rng.gen::<f64>() < p)
}

/// Independent Bernoulli(p) column.
pub fn noise<R: Rng>(rng: &mut R, n: usize, p: f64) -> Vec<u32> {
    (0..n).map(|_| bern(rng, p)).collect()
}

/// C ~ B(0.5), X ~ B(0.8 | C=1, 0.2 | C=0), Y ~ B(0.2 + 0.4 X + 0.3 C).
/// Columns `C, X, Y`; the causal effect of X is 0.4.
pub fn confounded(seed: u64, n: usize) -> Dataset {
    let mut r = rng(seed);
    let (mut c, mut x, mut y) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let ci = bern(&mut r, 0.5);
        let xi = bern(&mut r, if ci == 1 { 0.8 } else { 0.2 });
        let yi = bern(&mut r, 0.2 + 0.4 * f64::from(xi) + 0.3 * f64::from(ci));
        c.push(ci);
        x.push(xi);
        y.push(yi);
    }
    Dataset::from_binary_columns(&["C", "X", "Y"], vec![c, x, y], "Y").unwrap()
}

/// X ~ B(0.5) and an unrelated Z; Y ~ B(0.6 | X=1, 0.2 | X=0).
pub fn unconfounded(seed: u64, n: usize) -> Dataset {
    let mut r = rng(seed);
    let x = noise(&mut r, n, 0.5);
    let z = noise(&mut r, n, 0.3);
    let y = x.iter().map(|&xi| bern(&mut r, if xi == 1 { 0.6 } else { 0.2 })).collect();
    Dataset::from_binary_columns(&["X", "Z", "Y"], vec![x, z, y], "Y").unwrap()
}

/// Effect of `Xp` on Y is +0.5 where `Xc = 1` and -0.5 where `Xc = 0`, so
/// the population effect is 0. Plus `extra` independent noise columns
/// `N1..`. Column order: `Xc, Xp, N1.., Y`.
pub fn opposite_effects(seed: u64, n: usize, extra: usize) -> Dataset {
    let mut r = rng(seed);
    let xc = noise(&mut r, n, 0.5);
    let xp = noise(&mut r, n, 0.5);
    let mut names = vec![String::from("Xc"), String::from("Xp")];
    let mut cols = vec![xc.clone(), xp.clone()];
    for k in 0..extra {
        names.push(format!("N{}", k + 1));
        cols.push(noise(&mut r, n, 0.5));
    }
    let y = (0..n)
        .map(|i| {
            let p = match (xc[i], xp[i]) {
                (1, 1) => 0.9,
                (1, _) => 0.4,
                (_, 1) => 0.1,
                _ => 0.6,
            };
            bern(&mut r, p)
        })
        .collect();
    names.push(String::from("Y"));
    cols.push(y);
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    Dataset::from_binary_columns(&refs, cols, "Y").unwrap()
}

/// Strong global cause `G` (effect 0.5) next to weaker causes `A`, `B` and a
/// noise column `N`. Column order: `G, A, B, N, Y`.
pub fn global_cause(seed: u64, n: usize) -> Dataset {
    let mut r = rng(seed);
    let g = noise(&mut r, n, 0.5);
    let a = noise(&mut r, n, 0.5);
    let b = noise(&mut r, n, 0.4);
    let nz = noise(&mut r, n, 0.5);
    let y = (0..n)
        .map(|i| bern(&mut r, 0.1 + 0.5 * f64::from(g[i]) + 0.2 * f64::from(a[i]) + 0.15 * f64::from(b[i])))
        .collect();
    Dataset::from_binary_columns(&["G", "A", "B", "N", "Y"], vec![g, a, b, nz, y], "Y").unwrap()
}

/// Unadjusted `P(Y=1 | X=1) - P(Y=1 | X=0)`.
pub fn naive_difference(data: &Dataset, x: VarId) -> f64 {
    let t = data.contingency_table(x, &TREATED);
    t.a as f64 / t.treated() as f64 - t.c as f64 / t.control() as f64
}

/// Weighted stratum average recomputed from the raw columns: each stratum's
/// counts come from a fresh row scan and weights are row shares among the
/// retained strata.
pub fn recomputed_ace(data: &Dataset, x: VarId, result: &ctxcausal_core::causal::AceResult) -> f64 {
    let total: usize = result.strata.iter().map(|s| s.rows.len()).sum();
    result
        .strata
        .iter()
        .map(|s| {
            let (mut a, mut b, mut c, mut d) = (0.0, 0.0, 0.0, 0.0);
            for &r in &s.rows {
                let r = r as usize;
                match (data.code(r, x), data.outcome(r)) {
                    (1, 1) => a += 1.0,
                    (1, _) => b += 1.0,
                    (_, 1) => c += 1.0,
                    _ => d += 1.0,
                }
            }
            s.rows.len() as f64 / total as f64 * (a / (a + b) - c / (c + d))
        })
        .sum()
}

/// Small random dataset `X, C1, C2, C3, Y` where `X` and `Y` both lean on
/// the `C`s with seed-dependent strengths.
pub fn random_confounded(seed: u64, n: usize) -> Dataset {
    let mut r = rng(seed);
    let w: Vec<f64> = (0..4).map(|_| r.gen_range(-0.3..0.3)).collect();
    let cs: Vec<Vec<u32>> = (0..3)
        .map(|_| {
            let p = r.gen_range(0.2..0.8);
            noise(&mut r, n, p)
        })
        .collect();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let s: f64 = cs.iter().zip(&w).map(|(c, wi)| wi * f64::from(c[i])).sum();
        let xi = bern(&mut r, (0.5 + s).clamp(0.05, 0.95));
        let yi = bern(&mut r, (0.5 + w[3] * f64::from(xi) - s).clamp(0.05, 0.95));
        x.push(xi);
        y.push(yi);
    }
    let mut cols = vec![x];
    cols.extend(cs);
    cols.push(y);
    Dataset::from_binary_columns(&["X", "C1", "C2", "C3", "Y"], cols, "Y").unwrap()
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

/// Weight of the table with top-left cell `x`; all weights share the
/// denominator `C(n, col1)`.
fn weight(row1: u64, row2: u64, col1: u64, x: u64) -> u128 {
    if x > col1 {
        return 0;
    }
    binomial(row1, x) * binomial(row2, col1 - x)
}

/// Exact one-sided and two-sided p-values of the table.
pub fn fisher_oracle(a: u64, b: u64, c: u64, d: u64) -> (f64, f64) {
    let (row1, row2, col1) = (a + b, c + d, a + c);
    let n = row1 + row2;
    let total = binomial(n, col1);
    let lo = col1.saturating_sub(row2);
    let hi = row1.min(col1);
    let upper: u128 = (a..=hi).map(|x| weight(row1, row2, col1, x)).sum();
    let observed = weight(row1, row2, col1, a);
    let two: u128 = (lo..=hi)
        .map(|x| weight(row1, row2, col1, x))
        .filter(|&w| w <= observed)
        .sum();
    (upper as f64 / total as f64, two as f64 / total as f64)
}
