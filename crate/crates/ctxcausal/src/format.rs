//! JSON documents and text tables written by the command-line tool.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ctxcausal_core::eval::{EvalOptions, Matching, Metrics, Pooling, Scores};
use ctxcausal_core::synth::GroundTruth;
use ctxcausal_core::tcc::{Direction, DiscoveryStats};
use ctxcausal_core::tree::{SplitKind, TreeNode};
use ctxcausal_core::{CausalRule, Condition, Dataset, LoadReport, TccParams, VarId, VariableMeta};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{AppError, Result};

/// One condition of a context: `{var, op, value}`.
///
/// `op` is `==` (value: category label), `<=` or `>` (value: threshold), or
/// `in` (value: `[low, high]`, meaning `low < x <= high`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionJson {
    pub var: String,
    pub op: String,
    pub value: Value,
}

impl ConditionJson {
    pub fn new(meta: &VariableMeta, cond: &Condition) -> Self {
        let (op, value) = match *cond {
            Condition::Equals(c) => ("==", Value::from(meta.label(c).unwrap_or_default())),
            Condition::AtMost(t) => ("<=", Value::from(t)),
            Condition::Above(t) => (">", Value::from(t)),
            Condition::Within { low, high } => ("in", Value::from(vec![low, high])),
        };
        Self {
            var: meta.name.clone(),
            op: op.to_string(),
            value,
        }
    }

    /// Whether a variable taking `label` satisfies the condition.
    pub fn holds_for(&self, label: &str) -> bool {
        let number = label.parse::<f64>().ok();
        match (self.op.as_str(), &self.value) {
            ("==", Value::String(s)) => s == label,
            ("==", v) => v.as_f64().is_some_and(|t| number == Some(t)),
            ("<=", v) => matches!((number, v.as_f64()), (Some(x), Some(t)) if x <= t),
            (">", v) => matches!((number, v.as_f64()), (Some(x), Some(t)) if x > t),
            ("in", Value::Array(b)) if b.len() == 2 => match (number, b[0].as_f64(), b[1].as_f64()) {
                (Some(x), Some(lo), Some(hi)) => lo < x && x <= hi,
                _ => false,
            },
            _ => false,
        }
    }
}

/// Discovery parameters as echoed into every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsJson {
    pub theta: f64,
    pub eta: f64,
    pub trees: usize,
    pub max_context: usize,
    pub min_leaf: Option<usize>,
    pub max_depth: usize,
    pub alpha: f64,
    pub fisher_alpha: f64,
    pub strata: usize,
    pub min_arm: usize,
    pub treatments: Option<Vec<String>>,
    pub seed: Option<u64>,
}

impl ParamsJson {
    pub fn new(params: &TccParams, data: &Dataset, seed: Option<u64>) -> Self {
        Self {
            theta: params.theta,
            eta: params.eta,
            trees: params.trees,
            max_context: params.max_context_size,
            min_leaf: params.tree.min_leaf,
            max_depth: params.tree.max_depth,
            alpha: params.causal.alpha,
            fisher_alpha: params.tree.fisher_alpha,
            strata: params.causal.strata,
            min_arm: params.causal.min_arm,
            treatments: params
                .treatments
                .as_ref()
                .map(|w| w.iter().map(|&v| data.variable(v).name.clone()).collect()),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceJson {
    pub tree: usize,
    pub rule: usize,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsJson {
    pub strata: usize,
    pub dropped_fraction: f64,
    pub covariates: usize,
    pub treated: u64,
    pub control: u64,
    pub converged: bool,
}

/// One element of the rules file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleJson {
    pub treatment: String,
    pub context: Vec<ConditionJson>,
    pub ace: f64,
    pub direction: String,
    pub support: u64,
    pub provenance: ProvenanceJson,
    pub params: ParamsJson,
    pub diagnostics: DiagnosticsJson,
}

impl RuleJson {
    pub fn new(rule: &CausalRule, data: &Dataset, params: &ParamsJson) -> Self {
        let d = &rule.diagnostics;
        Self {
            treatment: data.variable(rule.treatment).name.clone(),
            context: rule
                .context
                .pairs()
                .iter()
                .map(|(v, c)| ConditionJson::new(data.variable(*v), c))
                .collect(),
            ace: rule.ace,
            direction: match rule.direction() {
                Direction::Positive => "positive",
                Direction::Negative => "negative",
            }
            .to_string(),
            support: rule.support,
            provenance: ProvenanceJson {
                tree: rule.provenance.tree,
                rule: rule.provenance.rule,
                confidence: rule.provenance.confidence,
            },
            params: params.clone(),
            diagnostics: DiagnosticsJson {
                strata: d.strata,
                dropped_fraction: d.dropped_fraction,
                covariates: d.covariates,
                treated: d.treated,
                control: d.control,
                converged: d.converged,
            },
        }
    }
}

/// Serializes accepted rules as the pretty-printed rules array.
pub fn rules_json(rules: &[CausalRule], data: &Dataset, params: &ParamsJson) -> Result<String> {
    let docs: Vec<RuleJson> = rules.iter().map(|r| RuleJson::new(r, data, params)).collect();
    Ok(serde_json::to_string_pretty(&docs)? + "\n")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadJson {
    pub rows_read: usize,
    pub rows_dropped: usize,
    pub constant_columns: Vec<String>,
    pub numeric_columns: Vec<String>,
}

impl From<&LoadReport> for LoadJson {
    fn from(r: &LoadReport) -> Self {
        Self {
            rows_read: r.rows_read,
            rows_dropped: r.rows_dropped,
            constant_columns: r.constant_columns.clone(),
            numeric_columns: r.numeric_columns.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsJson {
    pub trees: usize,
    pub decision_rules: usize,
    pub confident_rules: usize,
    pub candidates: usize,
    pub redundant: usize,
    pub tested: usize,
    pub untestable: usize,
}

impl From<&DiscoveryStats> for StatsJson {
    fn from(s: &DiscoveryStats) -> Self {
        Self {
            trees: s.trees,
            decision_rules: s.decision_rules,
            confident_rules: s.confident_rules,
            candidates: s.candidates,
            redundant: s.redundant,
            tested: s.tested,
            untestable: s.untestable,
        }
    }
}

/// Sidecar describing a discovery run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaJson {
    pub tool: String,
    pub version: String,
    pub created_unix: u64,
    pub data: String,
    pub target: String,
    pub rows: usize,
    pub variables: usize,
    pub load: LoadJson,
    pub params: ParamsJson,
    pub workers: usize,
    pub stats: StatsJson,
    pub rules: usize,
}

/// `rules.json` -> `rules.meta.json`.
pub fn meta_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.meta.json"))
}

/// Planted causes keyed by context value, as variable names.
pub type TruthJson = BTreeMap<String, Vec<String>>;

fn names(data: &Dataset, ids: impl IntoIterator<Item = VarId>) -> Vec<String> {
    ids.into_iter().map(|v| data.variable(v).name.clone()).collect()
}

pub fn truth_json(truth: &GroundTruth, data: &Dataset) -> TruthJson {
    (0..2)
        .map(|v| (v.to_string(), names(data, truth.causes[v].iter().copied())))
        .collect()
}

pub fn ancestors_json(truth: &GroundTruth, data: &Dataset) -> TruthJson {
    (0..2)
        .map(|v| (v.to_string(), names(data, truth.ancestors[v].iter().copied())))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoresJson {
    pub precision: f64,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub true_positives: usize,
    pub predicted: usize,
    pub actual: usize,
}

impl From<&Scores> for ScoresJson {
    fn from(s: &Scores) -> Self {
        Self {
            precision: s.precision,
            recall: s.recall,
            f1: s.f1,
            true_positives: s.true_positives,
            predicted: s.predicted,
            actual: s.actual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsJson {
    pub matching: String,
    pub pooling: String,
    pub contexts: BTreeMap<String, ScoresJson>,
    pub pooled: ScoresJson,
    pub predicted: BTreeMap<String, Vec<String>>,
}

impl MetricsJson {
    /// `name` maps the evaluation's variable ids back to names.
    pub fn new(metrics: &Metrics, opts: EvalOptions, name: impl Fn(VarId) -> String) -> Self {
        Self {
            matching: match opts.matching {
                Matching::Strict => "strict",
                Matching::Lenient => "lenient",
            }
            .to_string(),
            pooling: match opts.pooling {
                Pooling::Variables => "variables",
                Pooling::Pairs => "pairs",
            }
            .to_string(),
            contexts: (0..2).map(|v| (v.to_string(), (&metrics.per_context[v]).into())).collect(),
            pooled: (&metrics.pooled).into(),
            predicted: (0..2)
                .map(|v| (v.to_string(), metrics.predicted[v].iter().map(|&id| name(id)).collect()))
                .collect(),
        }
    }

    /// Aligned text table with one row per context plus the pooled row.
    pub fn table(&self) -> String {
        let fmt = |x: Option<f64>| x.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3}"));
        let mut out = String::new();
        let _ = writeln!(out, "{:<10} {:>9} {:>9} {:>9} {:>5} {:>5} {:>5}", "context", "P", "R", "F1", "tp", "pred", "true");
        let rows = self
            .contexts
            .iter()
            .map(|(k, s)| (format!("Xc={k}"), s))
            .chain(std::iter::once(("pooled".to_string(), &self.pooled)));
        for (label, s) in rows {
            let _ = writeln!(
                out,
                "{:<10} {:>9} {:>9} {:>9} {:>5} {:>5} {:>5}",
                label,
                fmt(Some(s.precision)),
                fmt(s.recall),
                fmt(s.f1),
                s.true_positives,
                s.predicted,
                s.actual
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitJson {
    pub var: String,
    pub kind: String,
    pub threshold: Option<f64>,
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchJson {
    pub condition: ConditionJson,
    pub node: TreeJson,
}

/// Debug dump of one tree node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeJson {
    pub counts: [u64; 2],
    pub prediction: String,
    pub split: Option<SplitJson>,
    pub children: Vec<BranchJson>,
}

impl TreeJson {
    pub fn new(node: &TreeNode, data: &Dataset) -> Self {
        let target = data.variable(data.target());
        Self {
            counts: node.counts,
            prediction: target.label(node.prediction()).unwrap_or_default().to_string(),
            split: node.split.as_ref().map(|s| SplitJson {
                var: data.variable(s.var).name.clone(),
                kind: match s.kind {
                    SplitKind::Multiway => "multiway",
                    SplitKind::Threshold(_) => "threshold",
                }
                .to_string(),
                threshold: match s.kind {
                    SplitKind::Threshold(t) => Some(t),
                    SplitKind::Multiway => None,
                },
                p_value: node.split_p_value(),
            }),
            children: node
                .children
                .iter()
                .map(|b| BranchJson {
                    condition: ConditionJson::new(
                        data.variable(node.split.as_ref().expect("children imply a split").var),
                        &b.condition,
                    ),
                    node: TreeJson::new(&b.node, data),
                })
                .collect(),
        }
    }
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| AppError::io(path, e))
}

pub(crate) fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn condition_matching() {
        let eq = ConditionJson {
            var: "Xc".into(),
            op: "==".into(),
            value: Value::from("1"),
        };
        assert!(eq.holds_for("1") && !eq.holds_for("0"));
        let le = ConditionJson {
            var: "Xc".into(),
            op: "<=".into(),
            value: Value::from(0.5),
        };
        assert!(le.holds_for("0") && !le.holds_for("1"));
        let within = ConditionJson {
            var: "A".into(),
            op: "in".into(),
            value: Value::from(vec![1.0, 2.0]),
        };
        assert!(within.holds_for("2") && !within.holds_for("1"));
    }

    #[test]
    fn meta_path_replaces_extension() {
        assert_eq!(meta_path(Path::new("out/rules.json")), PathBuf::from("out/rules.meta.json"));
        assert_eq!(meta_path(Path::new("rules")), PathBuf::from("rules.meta.json"));
    }
}
