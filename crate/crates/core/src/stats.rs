//! Exact and classical statistics used by tree induction and covariate
//! selection.
//!
//! Factorials are evaluated in log space through `lgamma`, so tables with
//! tens of thousands of rows do not overflow.

use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::{Assignment, Column, ContingencyTable, DataView, VarId};
use crate::error::{Error, Result};
use crate::tree::SplitKind;

/// Which tail a Fisher test sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Tail {
    /// Tables at least as extreme as the observed one in the direction of
    /// positive association (larger `a`). Used by tree pruning.
    #[default]
    Greater,
    /// Every table no more probable than the observed one.
    TwoSided,
}

/// `ln(n!)`: exact table below 32, Stirling series above.
#[inline]
pub fn ln_factorial(n: u64) -> f64 {
    if n < 32 {
        return LN_SMALL_FACTORIALS[n as usize];
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x * libm::log(x) - x + 0.5 * libm::log(core::f64::consts::TAU * x)
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

const LN_SMALL_FACTORIALS: [f64; 32] = [
    0.0,
    0.0,
    core::f64::consts::LN_2,
    1.791759469228055,
    3.1780538303479458,
    4.787491742782046,
    6.579251212010101,
    8.525161361065415,
    10.60460290274525,
    12.801827480081469,
    15.104412573075516,
    17.502307845873887,
    19.987214495661885,
    22.552163853123425,
    25.19122118273868,
    27.89927138384089,
    30.671860106080672,
    33.50507345013689,
    36.39544520803305,
    39.339884187199495,
    42.335616460753485,
    45.38013889847691,
    48.47118135183523,
    51.60667556776438,
    54.78472939811232,
    58.00360522298052,
    61.261701761002,
    64.55753862700634,
    67.88974313718154,
    71.25703896716801,
    74.65823634883016,
    78.0922235533153,
];

/// One-sided Fisher exact p-value of a 2×2 table:
///
/// `p = Σ_{i=0}^{min(b,c)} (a+b)!(c+d)!(a+c)!(b+d)! / (n! (a+i)! (b-i)! (c-i)! (d+i)!)`
///
/// The summands are the hypergeometric probabilities of top-left cells
/// `a..=a+min(b,c)`. Below the mode the sum is taken as the complement of
/// the lower tail. An empty table yields 1.
pub fn fisher_exact_p(t: &ContingencyTable) -> f64 {
    if t.n() == 0 {
        return 1.0;
    }
    let h = Hypergeometric::new(t);
    let p = if t.a > h.mode {
        libm::exp(h.ln_upper_tail(t.a))
    } else if t.a == h.lo {
        1.0
    } else {
        1.0 - libm::exp(h.ln_lower_tail(t.a - 1))
    };
    p.clamp(0.0, 1.0)
}

/// Two-sided Fisher exact p-value: total probability of the tables with the
/// observed margins that are no more probable than the observed table.
pub fn fisher_exact_two_sided(t: &ContingencyTable) -> f64 {
    if t.n() == 0 {
        return 1.0;
    }
    let h = Hypergeometric::new(t);
    let cutoff = h.ln_pmf(t.a) + 1e-7;
    let mut acc = LogSum::empty();
    // Each side of the mode is monotone, so the qualifying tables form one
    // tail per side.
    let (mut l, mut r) = (h.mode, h.hi + 1);
    while l < r {
        let mid = l + (r - l) / 2;
        if h.ln_pmf(mid) <= cutoff {
            r = mid;
        } else {
            l = mid + 1;
        }
    }
    if l <= h.hi {
        acc.add(h.ln_upper_tail(l));
    }
    if h.mode > h.lo {
        let (mut l, mut r) = (h.lo, h.mode);
        while l < r {
            let mid = l + (r - l) / 2;
            if h.ln_pmf(mid) <= cutoff {
                l = mid + 1;
            } else {
                r = mid;
            }
        }
        if l > h.lo {
            acc.add(h.ln_lower_tail(l - 1));
        }
    }
    acc.value().clamp(0.0, 1.0)
}

/// Distribution of the top-left cell given the margins of a table.
struct Hypergeometric {
    row1: u64,
    col1: u64,
    n: u64,
    lo: u64,
    hi: u64,
    mode: u64,
    ln_norm: f64,
}

impl Hypergeometric {
    fn new(t: &ContingencyTable) -> Self {
        let n = t.n();
        let row1 = t.a + t.b;
        let col1 = t.a + t.c;
        let lo = (row1 + col1).saturating_sub(n);
        let hi = row1.min(col1);
        let mode = (((row1 + 1) as f64 * (col1 + 1) as f64 / (n + 2) as f64) as u64).clamp(lo, hi);
        let ln_norm = ln_factorial(row1) + ln_factorial(n - row1) + ln_factorial(col1) + ln_factorial(n - col1)
            - ln_factorial(n);
        Self {
            row1,
            col1,
            n,
            lo,
            hi,
            mode,
            ln_norm,
        }
    }

    fn ln_pmf(&self, x: u64) -> f64 {
        self.ln_norm
            - ln_factorial(x)
            - ln_factorial(self.row1 - x)
            - ln_factorial(self.col1 - x)
            - ln_factorial(self.n + x - self.row1 - self.col1)
    }

    /// `pmf(x + 1) / pmf(x)`.
    fn step_up(&self, x: u64) -> f64 {
        let num = ((self.row1 - x) as f64) * ((self.col1 - x) as f64);
        let den = ((x + 1) as f64) * ((self.n + x + 1 - self.row1 - self.col1) as f64);
        num / den
    }

    // Tail terms shrink monotonically away from the mode, so they are summed
    // relative to the first one until they stop mattering.

    /// `ln P(X >= from)` for `from` at or above the mode.
    fn ln_upper_tail(&self, from: u64) -> f64 {
        let (mut term, mut sum) = (1.0, 1.0);
        for x in from..self.hi {
            term *= self.step_up(x);
            sum += term;
            if term < sum * NEGLIGIBLE {
                break;
            }
        }
        self.ln_pmf(from) + libm::log(sum)
    }

    /// `ln P(X <= to)` for `to` below the mode.
    fn ln_lower_tail(&self, to: u64) -> f64 {
        let (mut term, mut sum) = (1.0, 1.0);
        for x in (self.lo..to).rev() {
            term /= self.step_up(x);
            sum += term;
            if term < sum * NEGLIGIBLE {
                break;
            }
        }
        self.ln_pmf(to) + libm::log(sum)
    }
}

/// Relative size below which remaining tail terms are dropped.
const NEGLIGIBLE: f64 = 1e-20;

/// Fisher exact test with the requested tail.
pub fn fisher_exact(t: &ContingencyTable, tail: Tail) -> f64 {
    match tail {
        Tail::Greater => fisher_exact_p(t),
        Tail::TwoSided => fisher_exact_two_sided(t),
    }
}

/// Running `ln Σ exp(x_i)`.
struct LogSum {
    max: f64,
    scaled: f64,
}

impl LogSum {
    fn empty() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    fn add(&mut self, x: f64) {
        if x > self.max {
            self.scaled = self.scaled * libm::exp(self.max - x) + 1.0;
            self.max = x;
        } else {
            self.scaled += libm::exp(x - self.max);
        }
    }

    fn value(&self) -> f64 {
        if self.scaled == 0.0 {
            0.0
        } else {
            libm::exp(self.max + libm::log(self.scaled))
        }
    }
}

/// Share of the rows matching `antecedent` whose outcome is `target_value`.
pub fn confidence(view: &DataView<'_>, antecedent: &Assignment, target_value: u32) -> Result<f64> {
    let matched = view.restrict(antecedent);
    if matched.is_empty() {
        return Err(Error::ZeroSupport);
    }
    let counts = matched.outcome_counts();
    Ok(counts[target_value.min(1) as usize] as f64 / matched.len() as f64)
}

/// Category codes of `var` over the rows of `view`; numeric variables are
/// split at their median (`> median` maps to 1).
fn association_codes(view: &DataView<'_>, var: VarId) -> (Vec<u32>, usize) {
    let data = view.data();
    match data.column(var) {
        Column::Categorical(values) => {
            let card = data.variable(var).cardinality().unwrap_or(0);
            (view.rows().iter().map(|&r| values[r as usize]).collect(), card)
        }
        Column::Numeric(values) => {
            let mut xs: Vec<f64> = view.rows().iter().map(|&r| values[r as usize]).collect();
            let median = median(&mut xs.clone());
            for x in xs.iter_mut() {
                *x = if *x > median { 1.0 } else { 0.0 };
            }
            (xs.into_iter().map(|x| x as u32).collect(), 2)
        }
    }
}

fn median(xs: &mut [f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_unstable_by(f64::total_cmp);
    let mid = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[mid]
    } else {
        0.5 * (xs[mid - 1] + xs[mid])
    }
}

/// Tests whether two variables are dependent within `view` at level `alpha`.
///
/// 2×2 tables use the two-sided Fisher exact test; larger tables use
/// Pearson's chi-squared with `(r-1)(s-1)` degrees of freedom. Levels that
/// do not occur are ignored; a variable with a single observed level is
/// never associated.
pub fn association_test(view: &DataView<'_>, var_a: VarId, var_b: VarId, alpha: f64) -> bool {
    association_p_value(view, var_a, var_b).is_some_and(|p| p <= alpha)
}

/// p-value behind [`association_test`]; `None` for a degenerate variable.
pub fn association_p_value(view: &DataView<'_>, var_a: VarId, var_b: VarId) -> Option<f64> {
    let a = AssociationCodes::new(view, var_a);
    let b = AssociationCodes::new(view, var_b);
    a.p_value(&b)
}

/// Per-row levels of one variable, reusable across association tests.
pub(crate) struct AssociationCodes {
    codes: Vec<u32>,
    card: usize,
}

impl AssociationCodes {
    pub(crate) fn new(view: &DataView<'_>, var: VarId) -> Self {
        let (codes, card) = association_codes(view, var);
        Self { codes, card }
    }

    pub(crate) fn p_value(&self, other: &AssociationCodes) -> Option<f64> {
        contingency_p_value(&self.codes, self.card, &other.codes, other.card)
    }
}

/// Association p-value of two binary columns restricted to `mask`, from
/// packed bits; agrees with [`association_p_value`].
pub(crate) fn packed_p_value(mask: &[u64], a: &[u64], b: &[u64]) -> Option<f64> {
    let (mut n, mut na, mut nb, mut nab) = (0u64, 0u64, 0u64, 0u64);
    for ((&m, &x), &y) in mask.iter().zip(a).zip(b) {
        n += u64::from(m.count_ones());
        na += u64::from((m & x).count_ones());
        nb += u64::from((m & y).count_ones());
        nab += u64::from((m & x & y).count_ones());
    }
    if na == 0 || na == n || nb == 0 || nb == n {
        return None;
    }
    let t = ContingencyTable::new(nab, na - nab, nb - nab, n + nab - na - nb);
    Some(fisher_exact_two_sided(&t))
}

fn contingency_p_value(codes_a: &[u32], card_a: usize, codes_b: &[u32], card_b: usize) -> Option<f64> {
    let mut table = vec![0u64; card_a * card_b];
    for (&x, &y) in codes_a.iter().zip(codes_b) {
        table[x as usize * card_b + y as usize] += 1;
    }
    let row_tot: Vec<u64> = (0..card_a).map(|i| table[i * card_b..(i + 1) * card_b].iter().sum()).collect();
    let col_tot: Vec<u64> = (0..card_b).map(|j| (0..card_a).map(|i| table[i * card_b + j]).sum()).collect();
    let rows: Vec<usize> = (0..card_a).filter(|&i| row_tot[i] > 0).collect();
    let cols: Vec<usize> = (0..card_b).filter(|&j| col_tot[j] > 0).collect();
    if rows.len() < 2 || cols.len() < 2 {
        return None;
    }
    if rows.len() == 2 && cols.len() == 2 {
        let cell = |i: usize, j: usize| table[rows[i] * card_b + cols[j]];
        let t = ContingencyTable::new(cell(0, 0), cell(0, 1), cell(1, 0), cell(1, 1));
        return Some(fisher_exact_two_sided(&t));
    }
    let n = codes_a.len() as f64;
    let mut statistic = 0.0;
    for &i in &rows {
        for &j in &cols {
            let expected = row_tot[i] as f64 * col_tot[j] as f64 / n;
            let diff = table[i * card_b + j] as f64 - expected;
            statistic += diff * diff / expected;
        }
    }
    let df = ((rows.len() - 1) * (cols.len() - 1)) as f64;
    Some(chi_squared_sf(statistic, df))
}

/// Upper tail `P(χ²_df ≥ x)`.
pub fn chi_squared_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    regularized_gamma_q(0.5 * df, 0.5 * x)
}

/// Regularized upper incomplete gamma `Q(a, x)`.
pub fn regularized_gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let log_prefactor = -x + a * libm::log(x) - libm::lgamma(a);
    if x < a + 1.0 {
        // series for P(a, x)
        let mut ap = a;
        let mut del = 1.0 / a;
        let mut sum = del;
        for _ in 0..10_000 {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        (1.0 - sum * libm::exp(log_prefactor)).clamp(0.0, 1.0)
    } else {
        // Lentz continued fraction for Q(a, x)
        const TINY: f64 = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        (libm::exp(log_prefactor) * h).clamp(0.0, 1.0)
    }
}

/// Shannon entropy in bits of a count vector.
pub fn entropy_bits(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * libm::log2(p)
        })
        .sum()
}

/// Gain ratio of a partition given `[negatives, positives]` per child.
///
/// Returns 0 when the split information is 0.
pub fn gain_ratio_from_counts(children: &[[u64; 2]]) -> f64 {
    let mut parent = [0u64; 2];
    let mut sizes = Vec::with_capacity(children.len());
    for child in children {
        parent[0] += child[0];
        parent[1] += child[1];
        sizes.push(child[0] + child[1]);
    }
    let n = (parent[0] + parent[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let split_info = entropy_bits(&sizes);
    if split_info <= 0.0 {
        return 0.0;
    }
    let conditional: f64 = children
        .iter()
        .zip(&sizes)
        .map(|(child, &size)| size as f64 / n * entropy_bits(child))
        .sum();
    ((entropy_bits(&parent) - conditional) / split_info).max(0.0)
}

/// Class counts per child of a candidate split of `attr` over `view`.
pub fn split_counts(view: &DataView<'_>, attr: VarId, split: &SplitKind) -> Vec<[u64; 2]> {
    let data = view.data();
    match (data.column(attr), split) {
        (Column::Categorical(values), SplitKind::Multiway) => {
            let card = data.variable(attr).cardinality().unwrap_or(0);
            let mut counts = vec![[0u64; 2]; card];
            for &r in view.rows() {
                let r = r as usize;
                counts[values[r] as usize][data.outcome(r) as usize] += 1;
            }
            counts.retain(|c| c[0] + c[1] > 0);
            counts
        }
        (Column::Numeric(values), SplitKind::Threshold(t)) => {
            let mut counts = vec![[0u64; 2]; 2];
            for &r in view.rows() {
                let r = r as usize;
                counts[usize::from(values[r] > *t)][data.outcome(r) as usize] += 1;
            }
            counts
        }
        _ => Vec::new(),
    }
}

/// C4.5 gain ratio (entropies in bits) of splitting `view` on `attr`.
pub fn gain_ratio(view: &DataView<'_>, attr: VarId, split: &SplitKind) -> f64 {
    gain_ratio_from_counts(&split_counts(view, attr, split))
}
