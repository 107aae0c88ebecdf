//! Tree-based context causal rule discovery.
//!
//! Decision rules of one tree (or of diversified multiple trees) with high
//! confidence form the search base. Every binary variable on a rule is a
//! candidate treatment; every subset of the other variables on the rule,
//! with the values the rule assigns, is a candidate context. Candidates are
//! tested level by level in increasing context size, and a candidate is
//! skipped when a rule with the same treatment and a more general context
//! has already been accepted.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use crate::causal::{causal_test_on, AceResult, CausalParams};
use crate::dataset::{Assignment, Dataset, VarId};
use crate::error::{Error, Result};
use crate::tree::{build_dmt, extract_rules, DecisionRule, TreeConfig, TreeNode};

/// Runs independent jobs, returning results in input order.
pub trait Executor {
    /// Applies `f` to every item.
    fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send;
}

/// Runs jobs one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        items.iter().map(f).collect()
    }
}

/// Discovery settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TccParams {
    /// Decision rules need confidence strictly above this.
    pub theta: f64,
    /// Minimal absolute causal effect.
    pub eta: f64,
    /// Number of diversified trees; 1 is plain TCC.
    pub trees: usize,
    /// Largest context tested.
    pub max_context_size: usize,
    /// Tree induction settings.
    pub tree: TreeConfig,
    /// Causal test settings.
    pub causal: CausalParams,
    /// If set, only these variables may be treatments.
    pub treatments: Option<BTreeSet<VarId>>,
}

impl Default for TccParams {
    fn default() -> Self {
        Self {
            theta: 0.6,
            eta: 0.1,
            trees: 1,
            max_context_size: 2,
            tree: TreeConfig::default(),
            causal: CausalParams::default(),
            treatments: None,
        }
    }
}

impl TccParams {
    /// Checks the parameter ranges.
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::InvalidParameter(format!("theta must lie in [0, 1], got {}", self.theta)));
        }
        if !(self.eta > 0.0) {
            return Err(Error::InvalidParameter(format!("eta must be positive, got {}", self.eta)));
        }
        if self.trees == 0 {
            return Err(Error::InvalidParameter("tree count must be at least 1".into()));
        }
        self.tree.validate()?;
        self.causal.validate()
    }
}

/// Where a causal rule came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Provenance {
    /// Index of the tree.
    pub tree: usize,
    /// Id of the decision rule within the tree.
    pub rule: usize,
    /// Confidence of that decision rule.
    pub confidence: f64,
}

/// Sign of a causal effect.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Treatment raises `P(Y = 1)`.
    Positive,
    /// Treatment lowers `P(Y = 1)`.
    Negative,
}

/// Condensed diagnostics of the causal test behind a rule.
#[derive(Debug, Clone, PartialEq)]
pub struct AceSummary {
    /// Retained strata.
    pub strata: usize,
    /// Share of the context rows in dropped strata.
    pub dropped_fraction: f64,
    /// Covariates in the propensity model.
    pub covariates: usize,
    /// Treated rows in the context.
    pub treated: u64,
    /// Control rows in the context.
    pub control: u64,
    /// Whether the propensity fit converged.
    pub converged: bool,
}

impl From<&AceResult> for AceSummary {
    fn from(r: &AceResult) -> Self {
        Self {
            strata: r.strata.len(),
            dropped_fraction: r.dropped_fraction,
            covariates: r.covariates.len(),
            treated: r.treated,
            control: r.control,
            converged: r.converged,
        }
    }
}

/// `treatment -> Y | context` with its estimated effect.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalRule {
    /// Treatment variable.
    pub treatment: VarId,
    /// Context, sorted by variable id; empty for a global rule.
    pub context: Assignment,
    /// Stratified average causal effect within the context.
    pub ace: f64,
    /// Rows in the context.
    pub support: u64,
    /// First decision rule that proposed the candidate.
    pub provenance: Provenance,
    /// Causal test diagnostics.
    pub diagnostics: AceSummary,
}

impl CausalRule {
    /// Sign of the effect.
    pub fn direction(&self) -> Direction {
        if self.ace >= 0.0 {
            Direction::Positive
        } else {
            Direction::Negative
        }
    }
}

/// True when `discovered` holds a rule with the same treatment whose context
/// is a subset of (or equal to) `context`.
pub fn redundant_test(treatment: VarId, context: &Assignment, discovered: &[CausalRule]) -> bool {
    discovered
        .iter()
        .any(|r| r.treatment == treatment && r.context.is_subset_of(context))
}

/// Counters describing a discovery run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DiscoveryStats {
    /// Trees built.
    pub trees: usize,
    /// Decision rules extracted.
    pub decision_rules: usize,
    /// Decision rules above the confidence threshold.
    pub confident_rules: usize,
    /// Distinct (treatment, context) candidates generated.
    pub candidates: usize,
    /// Candidates skipped as redundant.
    pub redundant: usize,
    /// Candidates whose causal test ran to completion.
    pub tested: usize,
    /// Candidates that could not be tested (no rows, no overlap, ...).
    pub untestable: usize,
}

/// Result of [`discover`].
#[derive(Debug, Clone)]
pub struct Discovery {
    /// Accepted rules, ordered by treatment, context size, then context.
    pub rules: Vec<CausalRule>,
    /// Trees used as the search base.
    pub trees: Vec<TreeNode>,
    /// Run counters.
    pub stats: DiscoveryStats,
}

#[derive(Debug, Clone)]
struct Candidate {
    treatment: VarId,
    context: Assignment,
    provenance: Provenance,
}

/// Discovers context-specific causal rules for the target of `data`.
pub fn discover<E: Executor>(data: &Dataset, params: &TccParams, executor: &E) -> Result<Discovery> {
    params.validate()?;
    if data.n_rows() == 0 {
        return Err(Error::NoRows);
    }
    let trees = build_dmt(data, params.trees, &params.tree)?;
    let mut stats = DiscoveryStats {
        trees: trees.len(),
        ..DiscoveryStats::default()
    };

    let mut base: Vec<(usize, DecisionRule)> = Vec::new();
    for (t, tree) in trees.iter().enumerate() {
        for rule in extract_rules(tree) {
            stats.decision_rules += 1;
            if rule.confidence > params.theta && !rule.antecedent.is_empty() {
                base.push((t, rule));
            }
        }
    }
    stats.confident_rules = base.len();

    let eligible = |v: VarId| {
        v != data.target()
            && data.variable(v).is_binary()
            && params.treatments.as_ref().is_none_or(|w| w.contains(&v))
    };

    let full = data.view();
    let mut seen: BTreeSet<(VarId, Assignment)> = BTreeSet::new();
    let mut accepted: Vec<CausalRule> = Vec::new();
    for level in 0..=params.max_context_size {
        let mut batch = Vec::new();
        for (t, rule) in &base {
            let pairs = rule.antecedent.pairs();
            for &(treatment, _) in pairs {
                if !eligible(treatment) {
                    continue;
                }
                let others: Vec<_> = pairs.iter().filter(|(v, _)| *v != treatment).copied().collect();
                for chosen in Combinations::new(others.len(), level) {
                    let context = Assignment::from_pairs(chosen.iter().map(|&i| others[i]).collect())
                        .expect("rule antecedents hold one condition per variable")
                        .canonical();
                    if !seen.insert((treatment, context.clone())) {
                        continue;
                    }
                    stats.candidates += 1;
                    if redundant_test(treatment, &context, &accepted) {
                        stats.redundant += 1;
                        continue;
                    }
                    batch.push(Candidate {
                        treatment,
                        context,
                        provenance: Provenance {
                            tree: *t,
                            rule: rule.id,
                            confidence: rule.confidence,
                        },
                    });
                }
            }
        }

        let results = executor.map(&batch, |c| {
            let view = full.restrict(&c.context);
            causal_test_on(&view, c.treatment, &c.context, &params.causal)
        });
        for (candidate, result) in batch.into_iter().zip(results) {
            match result {
                Ok(res) => {
                    stats.tested += 1;
                    if res.ace.abs() >= params.eta {
                        accepted.push(CausalRule {
                            treatment: candidate.treatment,
                            context: candidate.context,
                            ace: res.ace,
                            support: res.n_rows(),
                            provenance: candidate.provenance,
                            diagnostics: AceSummary::from(&res),
                        });
                    }
                }
                Err(e) if e.is_untestable() => stats.untestable += 1,
                Err(e) => return Err(e),
            }
        }
    }

    accepted.sort_by(|a, b| {
        a.treatment
            .cmp(&b.treatment)
            .then(a.context.len().cmp(&b.context.len()))
            .then_with(|| a.context.cmp(&b.context))
    });
    Ok(Discovery {
        rules: accepted,
        trees,
        stats,
    })
}

/// Lexicographic `k`-subsets of `0..n`.
struct Combinations {
    n: usize,
    indices: Vec<usize>,
    done: bool,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            indices: (0..k).collect(),
            done: k > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.indices.clone();
        let k = self.indices.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.indices[i] < self.n - k + i {
                self.indices[i] += 1;
                for j in i + 1..k {
                    self.indices[j] = self.indices[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Condition;
    use alloc::vec;

    fn rule(treatment: VarId, context: Assignment) -> CausalRule {
        CausalRule {
            treatment,
            context,
            ace: 0.3,
            support: 10,
            provenance: Provenance {
                tree: 0,
                rule: 0,
                confidence: 0.9,
            },
            diagnostics: AceSummary {
                strata: 1,
                dropped_fraction: 0.0,
                covariates: 0,
                treated: 5,
                control: 5,
                converged: true,
            },
        }
    }

    #[test]
    fn redundancy_against_general_rules() {
        let a1 = Assignment::equals(1, 1);
        let a1b0 = Assignment::from_pairs(vec![(1, Condition::Equals(1)), (2, Condition::Equals(0))]).unwrap();
        assert!(redundant_test(0, &a1, &[rule(0, Assignment::new())]));
        assert!(redundant_test(0, &a1b0, &[rule(0, a1.clone())]));
        assert!(!redundant_test(3, &a1, &[rule(0, a1.clone())]));
        assert!(!redundant_test(0, &Assignment::equals(1, 0), &[rule(0, a1.clone())]));
        assert!(redundant_test(0, &a1, &[rule(0, a1.clone())]));
    }

    #[test]
    fn combinations_enumerate_in_order() {
        let all: Vec<Vec<usize>> = Combinations::new(4, 2).collect();
        assert_eq!(all, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(Combinations::new(3, 0).count(), 1);
        assert_eq!(Combinations::new(2, 3).count(), 0);
        assert_eq!(Combinations::new(3, 3).count(), 1);
    }

    #[test]
    fn params_validation() {
        assert!(TccParams::default().validate().is_ok());
        assert!(TccParams {
            eta: 0.0,
            ..TccParams::default()
        }
        .validate()
        .is_err());
        assert!(TccParams {
            theta: 1.5,
            ..TccParams::default()
        }
        .validate()
        .is_err());
        assert!(TccParams {
            trees: 0,
            ..TccParams::default()
        }
        .validate()
        .is_err());
    }
}
