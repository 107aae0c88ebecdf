//! Potential-outcome estimation of the average causal effect (ACE) of a
//! binary treatment on the binary target.
//!
//! Pipeline: restrict to the context, select covariates associated with both
//! treatment and target, fit a logistic propensity model, subclassify on the
//! propensity score, and average the per-stratum risk differences weighted by
//! stratum size.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::{Assignment, Column, Condition, ContingencyTable, DataView, Dataset, VarId};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, conjugate_gradient, dot, norm};
use crate::stats::{packed_p_value, AssociationCodes};

/// Settings of the causal test.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalParams {
    /// Number of propensity strata.
    pub strata: usize,
    /// Minimum treated and minimum control rows for a stratum to be kept.
    pub min_arm: usize,
    /// Significance level of the covariate association tests.
    pub alpha: f64,
    /// L2 penalty of the propensity model (intercept unpenalized).
    pub ridge: f64,
    /// Convergence tolerance of the propensity fit, applied to the gradient
    /// norm and to the relative change of the objective between iterations.
    pub tolerance: f64,
    /// Iteration cap of the propensity fit.
    pub max_iterations: usize,
}

impl Default for CausalParams {
    fn default() -> Self {
        Self {
            strata: 5,
            min_arm: 5,
            alpha: 0.05,
            ridge: 1e-6,
            tolerance: 1e-8,
            max_iterations: 100,
        }
    }
}

impl CausalParams {
    /// Checks the parameter ranges.
    pub fn validate(&self) -> Result<()> {
        if self.strata == 0 {
            return Err(Error::InvalidParameter("stratum count must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.ridge >= 0.0) || !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter("ridge and tolerance must be non-negative".into()));
        }
        Ok(())
    }
}

/// Largest design width solved with a dense factorization; wider models use
/// conjugate gradients on Hessian-vector products.
const DENSE_LIMIT: usize = 128;

/// Rows with category index 1 of a binary treatment form the treated arm.
pub const TREATED: Condition = Condition::Equals(1);

/// Variables associated with both `treatment` and the target within `view`,
/// in id order. `exclude` holds the context variables.
pub fn select_covariates(
    view: &DataView<'_>,
    treatment: VarId,
    exclude: &BTreeSet<VarId>,
    alpha: f64,
) -> Vec<VarId> {
    let data = view.data();
    let target = data.target();
    let significant = |p: Option<f64>| p.is_some_and(|p| p <= alpha);
    let packed = match (data.binary_bits(treatment), data.binary_bits(target)) {
        (Some(x), Some(y)) => Some((view.mask(), x, y)),
        _ => None,
    };
    let mut codes: Option<(AssociationCodes, AssociationCodes)> = None;
    data.predictors()
        .filter(|&v| v != treatment && !exclude.contains(&v))
        .filter(|&v| match (&packed, data.binary_bits(v)) {
            (Some((mask, x, y)), Some(bits)) => {
                significant(packed_p_value(mask, bits, x)) && significant(packed_p_value(mask, bits, y))
            }
            _ => {
                let (x, y) = codes.get_or_insert_with(|| {
                    (AssociationCodes::new(view, treatment), AssociationCodes::new(view, target))
                });
                let own = AssociationCodes::new(view, v);
                significant(own.p_value(x)) && significant(own.p_value(y))
            }
        })
        .collect()
}

/// One column of the propensity design matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Feature {
    /// Indicator of `var == level`.
    Indicator {
        /// Categorical covariate.
        var: VarId,
        /// Category encoded by this column.
        level: u32,
    },
    /// Numeric covariate used as is.
    Numeric(VarId),
}

impl Feature {
    #[inline]
    fn value(&self, data: &Dataset, row: usize) -> f64 {
        self.value_in(data.column(self.var()), row)
    }

    fn var(&self) -> VarId {
        match *self {
            Feature::Indicator { var, .. } | Feature::Numeric(var) => var,
        }
    }

    fn value_in(&self, column: &Column, row: usize) -> f64 {
        match (*self, column) {
            (Feature::Indicator { level, .. }, Column::Categorical(v)) => f64::from(u8::from(v[row] == level)),
            (Feature::Indicator { .. }, Column::Numeric(_)) => unreachable!("indicator on a numeric column"),
            (Feature::Numeric(_), Column::Numeric(v)) => v[row],
            (Feature::Numeric(_), Column::Categorical(v)) => f64::from(v[row]),
        }
    }
}

/// Logistic model of `P(treatment = 1 | covariates)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PropensityModel {
    /// Covariates in model order.
    pub covariates: Vec<VarId>,
    /// Encoded columns; categorical covariates contribute one indicator per
    /// observed non-reference level (the lowest observed level is the
    /// reference).
    pub features: Vec<Feature>,
    /// Intercept followed by one coefficient per feature.
    pub coefficients: Vec<f64>,
    /// Whether the gradient norm or the relative objective change reached
    /// the tolerance.
    pub converged: bool,
    /// Newton iterations performed.
    pub iterations: usize,
}

impl PropensityModel {
    /// Linear predictor of one row.
    pub fn linear_predictor(&self, data: &Dataset, row: usize) -> f64 {
        self.coefficients[0]
            + self
                .features
                .iter()
                .zip(&self.coefficients[1..])
                .map(|(f, w)| w * f.value(data, row))
                .sum::<f64>()
    }

    /// Propensity score of one row.
    pub fn score(&self, data: &Dataset, row: usize) -> f64 {
        sigmoid(self.linear_predictor(data, row))
    }

    /// Scores of every row of `view`, aligned with `view.rows()`.
    pub fn scores(&self, view: &DataView<'_>) -> Vec<f64> {
        let mut eta = vec![self.coefficients[0]; view.len()];
        for (f, &w) in self.features.iter().zip(&self.coefficients[1..]) {
            let column = view.data().column(f.var());
            for (e, &r) in eta.iter_mut().zip(view.rows()) {
                *e += w * f.value_in(column, r as usize);
            }
        }
        eta.into_iter().map(sigmoid).collect()
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + libm::log1p(libm::exp(-x.abs()))
}

fn check_treatment(data: &Dataset, treatment: VarId) -> Result<()> {
    if treatment >= data.variables().len() || treatment == data.target() {
        return Err(Error::InvalidParameter(format!("variable {treatment} cannot be a treatment")));
    }
    if !data.variable(treatment).is_binary() {
        return Err(Error::InvalidParameter(format!(
            "treatment `{}` must be binary categorical",
            data.variable(treatment).name
        )));
    }
    Ok(())
}

/// Fits the propensity model by ridge-penalized Newton iterations (dense
/// Cholesky or conjugate-gradient solves, backtracking line search) on the
/// mean log-likelihood. With no covariates the score is the treated share.
pub fn fit_propensity(
    view: &DataView<'_>,
    treatment: VarId,
    covariates: &[VarId],
    params: &CausalParams,
) -> Result<PropensityModel> {
    let data = view.data();
    check_treatment(data, treatment)?;
    let n = view.len();
    if n == 0 {
        return Err(Error::NoRows);
    }
    let labels: Vec<f64> = view
        .rows()
        .iter()
        .map(|&r| f64::from(u8::from(TREATED.holds_categorical(data.code(r as usize, treatment)))))
        .collect();
    let treated: f64 = labels.iter().sum();
    if treated == 0.0 || treated == n as f64 {
        return Err(Error::SingleClassTreatment);
    }

    let features = encode(view, covariates);
    let p = features.len() + 1;
    let share = treated / n as f64;
    let mut w = vec![0.0; p];
    w[0] = libm::log(share / (1.0 - share));
    let mut model = PropensityModel {
        covariates: covariates.to_vec(),
        features,
        coefficients: w.clone(),
        converged: p == 1,
        iterations: 0,
    };
    if p == 1 {
        return Ok(model);
    }

    // Rows sharing a covariate pattern contribute identically to the
    // likelihood, so the fit runs over distinct patterns with counts.
    let mut full = vec![1.0; n * p];
    for (j, f) in model.features.iter().enumerate() {
        let column = data.column(f.var());
        for (i, &r) in view.rows().iter().enumerate() {
            full[i * p + j + 1] = f.value_in(column, r as usize);
        }
    }
    let row = |i: usize| &full[i * p..(i + 1) * p];
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&i, &j| {
        row(i)
            .iter()
            .zip(row(j))
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let mut design = Vec::new();
    let mut counts: Vec<f64> = Vec::new();
    let mut positives: Vec<f64> = Vec::new();
    let mut last: Option<usize> = None;
    for &i in &order {
        if last.is_some_and(|l| row(l) == row(i)) {
            *counts.last_mut().expect("pattern started") += 1.0;
            *positives.last_mut().expect("pattern started") += labels[i];
        } else {
            design.extend_from_slice(row(i));
            counts.push(1.0);
            positives.push(labels[i]);
            last = Some(i);
        }
    }

    let fit = LogisticFit {
        design: &design,
        counts: &counts,
        positives: &positives,
        n: n as f64,
        p,
        ridge: params.ridge,
    };
    let n = counts.len();
    let mut eta = vec![0.0; n];
    let mut mu = vec![0.0; n];
    let mut grad = vec![0.0; p];
    for iteration in 0..params.max_iterations {
        fit.predict(&w, &mut eta);
        for (m, &e) in mu.iter_mut().zip(&eta) {
            *m = sigmoid(e);
        }
        fit.gradient(&w, &mu, &mut grad);
        let gnorm = norm(&grad);
        model.iterations = iteration;
        if gnorm <= params.tolerance {
            model.converged = true;
            break;
        }
        let weights: Vec<f64> = mu
            .iter()
            .zip(&counts)
            .map(|(m, c)| c * (m * (1.0 - m)).max(1e-12))
            .collect();
        let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
        let dense = if p <= DENSE_LIMIT {
            cholesky_solve(&fit.hessian(&weights), &rhs)
        } else {
            None
        };
        let direction = dense.unwrap_or_else(|| {
            let diag = fit.hessian_diagonal(&weights);
            let cg_tol = gnorm * libm::sqrt(gnorm).min(0.1);
            conjugate_gradient(
                |v, out| fit.hessian_apply(&weights, v, out),
                &rhs,
                &diag,
                cg_tol,
                2 * p + 20,
            )
        });
        let slope = dot(&grad, &direction);
        if !(slope < 0.0) {
            break;
        }
        let current = fit.objective(&w, &eta);
        let mut step = 1.0;
        let mut trial = vec![0.0; p];
        let mut improved = false;
        while step > 1e-10 {
            for j in 0..p {
                trial[j] = w[j] + step * direction[j];
            }
            fit.predict(&trial, &mut eta);
            if fit.objective(&trial, &eta) <= current + 1e-4 * step * slope {
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
        w.copy_from_slice(&trial);
        model.iterations = iteration + 1;
        let next = fit.objective(&w, &eta);
        if (current - next).abs() <= params.tolerance * (next.abs() + 0.1) {
            model.converged = true;
            break;
        }
    }
    model.coefficients = w;
    Ok(model)
}

fn encode(view: &DataView<'_>, covariates: &[VarId]) -> Vec<Feature> {
    let data = view.data();
    let mut features = Vec::new();
    for &var in covariates {
        match data.column(var) {
            Column::Numeric(_) => features.push(Feature::Numeric(var)),
            Column::Categorical(values) => {
                let card = data.variable(var).cardinality().unwrap_or(0);
                let mut seen = vec![false; card];
                for &r in view.rows() {
                    seen[values[r as usize] as usize] = true;
                }
                let observed = seen.iter().enumerate().filter(|(_, s)| **s).map(|(c, _)| c as u32);
                features.extend(observed.skip(1).map(|level| Feature::Indicator { var, level }));
            }
        }
    }
    features
}

struct LogisticFit<'a> {
    design: &'a [f64],
    counts: &'a [f64],
    positives: &'a [f64],
    n: f64,
    p: usize,
    ridge: f64,
}

impl LogisticFit<'_> {
    fn rows(&self) -> core::slice::ChunksExact<'_, f64> {
        self.design.chunks_exact(self.p)
    }

    fn predict(&self, w: &[f64], eta: &mut [f64]) {
        for (e, x) in eta.iter_mut().zip(self.rows()) {
            *e = dot(x, w);
        }
    }

    fn objective(&self, w: &[f64], eta: &[f64]) -> f64 {
        let loss: f64 = eta
            .iter()
            .zip(self.counts)
            .zip(self.positives)
            .map(|((&e, &c), &t)| c * softplus(e) - t * e)
            .sum();
        loss / self.n + 0.5 * self.ridge * dot(&w[1..], &w[1..])
    }

    fn gradient(&self, w: &[f64], mu: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for ((x, &m), (&c, &t)) in self.rows().zip(mu).zip(self.counts.iter().zip(self.positives)) {
            let r = c * m - t;
            for (o, xi) in out.iter_mut().zip(x) {
                *o += r * xi;
            }
        }
        for (j, o) in out.iter_mut().enumerate() {
            *o /= self.n;
            if j > 0 {
                *o += self.ridge * w[j];
            }
        }
    }

    /// Upper triangle of the penalized Hessian, row-major.
    fn hessian(&self, weights: &[f64]) -> Vec<f64> {
        let p = self.p;
        let mut h = vec![0.0; p * p];
        for (x, &s) in self.rows().zip(weights) {
            for (i, &xi) in x.iter().enumerate() {
                if xi == 0.0 {
                    continue;
                }
                let si = s * xi;
                for (hij, xj) in h[i * p + i..(i + 1) * p].iter_mut().zip(&x[i..]) {
                    *hij += si * xj;
                }
            }
        }
        for i in 0..p {
            for j in i..p {
                h[i * p + j] /= self.n;
            }
            if i > 0 {
                h[i * p + i] += self.ridge;
            }
        }
        h
    }

    fn hessian_diagonal(&self, weights: &[f64]) -> Vec<f64> {
        let mut diag = vec![0.0; self.p];
        for (x, &s) in self.rows().zip(weights) {
            for (d, xi) in diag.iter_mut().zip(x) {
                *d += s * xi * xi;
            }
        }
        for (j, d) in diag.iter_mut().enumerate() {
            *d = *d / self.n + if j > 0 { self.ridge } else { 0.0 };
        }
        diag
    }

    fn hessian_apply(&self, weights: &[f64], v: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (x, &s) in self.rows().zip(weights) {
            let xv = s * dot(x, v);
            for (o, xi) in out.iter_mut().zip(x) {
                *o += xv * xi;
            }
        }
        for (j, o) in out.iter_mut().enumerate() {
            *o /= self.n;
            if j > 0 {
                *o += self.ridge * v[j];
            }
        }
    }
}

/// A propensity subclass.
#[derive(Debug, Clone, PartialEq)]
pub struct Stratum {
    /// Rows of the underlying dataset.
    pub rows: Vec<u32>,
    /// Smallest and largest score in the stratum.
    pub score_range: (f64, f64),
    /// Treatment-by-outcome counts.
    pub table: ContingencyTable,
    /// Weight after renormalization over the retained strata.
    pub weight: f64,
    /// Risk difference within the stratum.
    pub ace: f64,
}

/// Retained strata of a subclassification.
#[derive(Debug, Clone, PartialEq)]
pub struct Stratification {
    /// Strata with at least `min_arm` treated and control rows.
    pub strata: Vec<Stratum>,
    /// Share of the rows that fell in dropped strata.
    pub dropped_fraction: f64,
}

/// Subclassifies the rows of `view` on `scores` (aligned with
/// `view.rows()`) into `k` groups cut at empirical quantiles. Rows with equal
/// scores always share a stratum. Groups with fewer than `min_arm` treated or
/// control rows are dropped and the remaining weights renormalized.
pub fn stratify(
    view: &DataView<'_>,
    treatment: VarId,
    scores: &[f64],
    k: usize,
    min_arm: usize,
) -> Result<Stratification> {
    if k == 0 {
        return Err(Error::InvalidParameter("stratum count must be at least 1".into()));
    }
    if scores.len() != view.len() {
        return Err(Error::InvalidParameter("one score per row is required".into()));
    }
    let n = view.len();
    if n == 0 {
        return Err(Error::NoRows);
    }
    let data = view.data();
    let mut sorted = scores.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let cuts: Vec<f64> = (1..k).map(|j| sorted[j * n / k]).collect();

    let mut groups: Vec<Vec<u32>> = vec![Vec::new(); k];
    let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); k];
    for (&row, &s) in view.rows().iter().zip(scores) {
        let g = cuts.partition_point(|&c| c <= s);
        groups[g].push(row);
        ranges[g].0 = ranges[g].0.min(s);
        ranges[g].1 = ranges[g].1.max(s);
    }

    let min_arm = min_arm.max(1) as u64;
    let mut strata = Vec::new();
    let mut retained = 0usize;
    for (rows, range) in groups.into_iter().zip(ranges) {
        if rows.is_empty() {
            continue;
        }
        let mut table = ContingencyTable::default();
        for &r in &rows {
            let r = r as usize;
            table.record(TREATED.holds_categorical(data.code(r, treatment)), data.outcome(r) == 1);
        }
        if table.treated() < min_arm || table.control() < min_arm {
            continue;
        }
        retained += rows.len();
        strata.push(Stratum {
            ace: stratum_ace(&table)?,
            rows,
            score_range: range,
            table,
            weight: 0.0,
        });
    }
    if strata.is_empty() {
        return Err(Error::NoOverlap);
    }
    for s in &mut strata {
        s.weight = s.rows.len() as f64 / retained as f64;
    }
    Ok(Stratification {
        strata,
        dropped_fraction: 1.0 - retained as f64 / n as f64,
    })
}

/// Risk difference `a/(a+b) - c/(c+d)`.
pub fn stratum_ace(t: &ContingencyTable) -> Result<f64> {
    if t.treated() == 0 || t.control() == 0 {
        return Err(Error::EmptyArm);
    }
    Ok(t.a as f64 / t.treated() as f64 - t.c as f64 / t.control() as f64)
}

/// Weighted sum of stratum effects.
pub fn aggregate(strata: &[Stratum]) -> f64 {
    strata.iter().map(|s| s.weight * s.ace).sum()
}

/// Outcome of a causal test.
#[derive(Debug, Clone, PartialEq)]
pub struct AceResult {
    /// Stratified average causal effect.
    pub ace: f64,
    /// Retained strata.
    pub strata: Vec<Stratum>,
    /// Share of the rows in dropped strata.
    pub dropped_fraction: f64,
    /// Treated rows in the tested population.
    pub treated: u64,
    /// Control rows in the tested population.
    pub control: u64,
    /// Covariates used by the propensity model.
    pub covariates: Vec<VarId>,
    /// Whether the propensity fit converged.
    pub converged: bool,
}

impl AceResult {
    /// Rows in the tested population.
    pub fn n_rows(&self) -> u64 {
        self.treated + self.control
    }
}

/// Estimates the ACE of `treatment` on the target among rows satisfying `ctx`.
pub fn causal_test(data: &Dataset, treatment: VarId, ctx: &Assignment, params: &CausalParams) -> Result<AceResult> {
    ctx.validate(data)?;
    let view = data.view().restrict(ctx);
    causal_test_on(&view, treatment, ctx, params)
}

/// [`causal_test`] on a view that already satisfies `ctx`.
pub fn causal_test_on(
    view: &DataView<'_>,
    treatment: VarId,
    ctx: &Assignment,
    params: &CausalParams,
) -> Result<AceResult> {
    params.validate()?;
    let data = view.data();
    check_treatment(data, treatment)?;
    if ctx.get(treatment).is_some() {
        return Err(Error::InvalidParameter("treatment cannot be part of its context".into()));
    }
    if view.is_empty() {
        return Err(Error::NoRows);
    }
    let exclude: BTreeSet<VarId> = ctx.vars().collect();
    let covariates = select_covariates(view, treatment, &exclude, params.alpha);
    let model = fit_propensity(view, treatment, &covariates, params)?;
    let scores = model.scores(view);
    let Stratification {
        strata,
        dropped_fraction,
    } = stratify(view, treatment, &scores, params.strata, params.min_arm)?;
    let whole = view.contingency_table(treatment, &TREATED);
    Ok(AceResult {
        ace: aggregate(&strata),
        strata,
        dropped_fraction,
        treated: whole.treated(),
        control: whole.control(),
        covariates,
        converged: model.converged,
    })
}
