//! Precision, recall and F1 of discovered rules against planted causes.

use alloc::collections::BTreeSet;

use crate::dataset::{Assignment, VarId};
use crate::synth::GroundTruth;

/// Which rules count as predictions for context value `v`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Matching {
    /// Only rules whose context pins the context variable to `v`.
    Strict,
    /// Rules whose context is compatible with `v`: either it pins the
    /// context variable to `v` or it does not mention it at all.
    #[default]
    Lenient,
}

/// How the two contexts are combined into one score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Pooling {
    /// Union of predicted variables against union of true causes.
    #[default]
    Variables,
    /// Micro average over (variable, context value) pairs.
    Pairs,
}

/// Scoring options.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalOptions {
    /// Rule-to-context matching.
    pub matching: Matching,
    /// Pooling of the two contexts.
    pub pooling: Pooling,
}

/// One precision/recall/F1 triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    /// Correct predictions.
    pub true_positives: usize,
    /// Size of the predicted set.
    pub predicted: usize,
    /// Size of the true set.
    pub actual: usize,
    /// `tp / predicted`, or 1 when nothing was predicted.
    pub precision: f64,
    /// `tp / actual`; `None` when the true set is empty.
    pub recall: Option<f64>,
    /// Harmonic mean; 0 when both are 0, `None` without recall.
    pub f1: Option<f64>,
}

impl Scores {
    /// Scores from raw counts.
    pub fn from_counts(true_positives: usize, predicted: usize, actual: usize) -> Self {
        let precision = if predicted == 0 {
            1.0
        } else {
            true_positives as f64 / predicted as f64
        };
        let recall = (actual > 0).then(|| true_positives as f64 / actual as f64);
        let f1 = recall.map(|r| {
            if precision + r == 0.0 {
                0.0
            } else {
                2.0 * precision * r / (precision + r)
            }
        });
        Self {
            true_positives,
            predicted,
            actual,
            precision,
            recall,
            f1,
        }
    }

    /// Scores of a predicted set against a true set.
    pub fn of_sets(predicted: &BTreeSet<VarId>, truth: &BTreeSet<VarId>) -> Self {
        Self::from_counts(predicted.intersection(truth).count(), predicted.len(), truth.len())
    }
}

/// Per-context and pooled scores.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    /// Predicted treatments per context value.
    pub predicted: [BTreeSet<VarId>; 2],
    /// Scores for context value 0 and 1.
    pub per_context: [Scores; 2],
    /// Both contexts combined.
    pub pooled: Scores,
}

/// Whether a rule context counts toward context value `v`.
pub fn matches_context(context: &Assignment, context_var: VarId, v: u32, matching: Matching) -> bool {
    match context.get(context_var) {
        Some(cond) => cond.holds_categorical(v),
        None => matching == Matching::Lenient,
    }
}

/// Scores `(treatment, context)` pairs against `truth`.
///
/// Rules whose treatment is the context variable itself are ignored.
pub fn evaluate<'a, I>(rules: I, truth: &GroundTruth, context_var: VarId, opts: EvalOptions) -> Metrics
where
    I: IntoIterator<Item = (VarId, &'a Assignment)>,
{
    let mut predicted = [BTreeSet::new(), BTreeSet::new()];
    for (treatment, context) in rules {
        if treatment == context_var {
            continue;
        }
        for (v, set) in predicted.iter_mut().enumerate() {
            if matches_context(context, context_var, v as u32, opts.matching) {
                set.insert(treatment);
            }
        }
    }
    let per_context = [
        Scores::of_sets(&predicted[0], &truth.causes[0]),
        Scores::of_sets(&predicted[1], &truth.causes[1]),
    ];
    let pooled = match opts.pooling {
        Pooling::Variables => {
            let pred: BTreeSet<VarId> = predicted[0].union(&predicted[1]).copied().collect();
            let actual: BTreeSet<VarId> = truth.causes[0].union(&truth.causes[1]).copied().collect();
            Scores::of_sets(&pred, &actual)
        }
        Pooling::Pairs => Scores::from_counts(
            per_context[0].true_positives + per_context[1].true_positives,
            per_context[0].predicted + per_context[1].predicted,
            per_context[0].actual + per_context[1].actual,
        ),
    };
    Metrics {
        predicted,
        per_context,
        pooled,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Condition;

    fn set(xs: &[VarId]) -> BTreeSet<VarId> {
        xs.iter().copied().collect()
    }

    fn truth(c0: &[VarId], c1: &[VarId]) -> GroundTruth {
        GroundTruth {
            context_var: 9,
            causes: [set(c0), set(c1)],
            ancestors: [set(c0), set(c1)],
        }
    }

    #[test]
    fn identical_sets_score_one() {
        let s = Scores::of_sets(&set(&[1, 2]), &set(&[1, 2]));
        assert_eq!((s.precision, s.recall, s.f1), (1.0, Some(1.0), Some(1.0)));
    }

    #[test]
    fn half_overlap() {
        let s = Scores::of_sets(&set(&[0, 1]), &set(&[1, 2]));
        assert_eq!((s.precision, s.recall, s.f1), (0.5, Some(0.5), Some(0.5)));
    }

    #[test]
    fn conventions() {
        let empty = Scores::of_sets(&set(&[]), &set(&[1]));
        assert_eq!((empty.precision, empty.recall, empty.f1), (1.0, Some(0.0), Some(0.0)));
        let miss = Scores::of_sets(&set(&[2]), &set(&[1]));
        assert_eq!(miss.f1, Some(0.0));
        let no_truth = Scores::of_sets(&set(&[2]), &set(&[]));
        assert_eq!((no_truth.recall, no_truth.f1), (None, None));
    }

    #[test]
    fn strict_and_lenient_matching() {
        let global = Assignment::new();
        let in0 = Assignment::equals(9, 0);
        let other = Assignment::equals(4, 1);
        let rules = [(1, &global), (2, &in0), (3, &other), (9, &global)];
        let t = truth(&[1, 2], &[1]);

        let lenient = evaluate(rules, &t, 9, EvalOptions::default());
        assert_eq!(lenient.predicted, [set(&[1, 2, 3]), set(&[1, 3])]);
        assert_eq!(lenient.per_context[1].precision, 0.5);

        let strict = evaluate(
            rules,
            &t,
            9,
            EvalOptions {
                matching: Matching::Strict,
                ..EvalOptions::default()
            },
        );
        assert_eq!(strict.predicted, [set(&[2]), set(&[])]);
        assert_eq!(strict.per_context[1].precision, 1.0);
        assert_eq!(strict.per_context[1].recall, Some(0.0));
    }

    #[test]
    fn pooling_modes() {
        let global = Assignment::new();
        let in1 = Assignment::from_pairs(alloc::vec![(9, Condition::Equals(1))]).unwrap();
        let rules = [(1, &global), (2, &in1)];
        let t = truth(&[1], &[2, 3]);
        let vars = evaluate(rules, &t, 9, EvalOptions::default()).pooled;
        assert_eq!((vars.true_positives, vars.predicted, vars.actual), (2, 2, 3));
        let pairs = evaluate(
            rules,
            &t,
            9,
            EvalOptions {
                pooling: Pooling::Pairs,
                ..EvalOptions::default()
            },
        )
        .pooled;
        // context 0 predicts {1}, context 1 predicts {1, 2}
        assert_eq!((pairs.true_positives, pairs.predicted, pairs.actual), (2, 3, 3));
    }
}
