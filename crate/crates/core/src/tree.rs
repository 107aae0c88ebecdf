//! C4.5-style decision trees with Fisher-significance pruning, rule
//! extraction and diversified multiple trees.
//!
//! Categorical variables split multiway (one branch per observed category),
//! numeric variables split binary at midpoints between consecutive distinct
//! values. Trees are grown greedily on gain ratio, then pruned bottom-up:
//! an internal node whose split is not significant against the target is
//! collapsed into a leaf.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::dataset::{write_condition, Assignment, Column, Condition, ContingencyTable, DataView, Dataset, VarId};
use crate::error::{Error, Result};
use crate::stats::{fisher_exact_p, gain_ratio_from_counts};

/// Splits whose gain ratio does not exceed this are ignored.
const MIN_GAIN_RATIO: f64 = 1e-12;

/// Tree induction settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeConfig {
    /// Minimum rows per leaf; `None` means `max(20, n / 100)`.
    pub min_leaf: Option<usize>,
    /// Significance level a split must reach to survive pruning.
    pub fisher_alpha: f64,
    /// Maximum number of splits on a root-to-leaf path.
    pub max_depth: usize,
    /// Whether numeric variables may be split.
    pub numeric_splits: bool,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            min_leaf: None,
            fisher_alpha: 0.05,
            max_depth: 8,
            numeric_splits: true,
        }
    }
}

impl TreeConfig {
    /// Minimum leaf size used on a dataset of `n_rows` rows.
    pub fn min_leaf_for(&self, n_rows: usize) -> usize {
        self.min_leaf.unwrap_or_else(|| (n_rows / 100).max(20))
    }

    /// Checks the parameter ranges.
    pub fn validate(&self) -> Result<()> {
        if self.min_leaf == Some(0) {
            return Err(Error::InvalidParameter("min_leaf must be at least 1".into()));
        }
        if !(self.fisher_alpha > 0.0 && self.fisher_alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "fisher_alpha must lie in (0, 1), got {}",
                self.fisher_alpha
            )));
        }
        if self.max_depth == 0 {
            return Err(Error::InvalidParameter("max_depth must be at least 1".into()));
        }
        Ok(())
    }
}

/// Shape of a split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitKind {
    /// One branch per observed category.
    Multiway,
    /// Two branches, `<= t` and `> t`.
    Threshold(f64),
}

/// Split chosen at an internal node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    /// Variable split on.
    pub var: VarId,
    /// Shape of the split.
    pub kind: SplitKind,
}

/// One outgoing edge of an internal node.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    /// Condition on the split variable that selects this branch.
    pub condition: Condition,
    /// Subtree.
    pub node: TreeNode,
}

/// Node of a decision tree; a leaf when `split` is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    /// `[Y=0, Y=1]` counts of the rows reaching this node.
    pub counts: [u64; 2],
    /// Split of an internal node.
    pub split: Option<Split>,
    /// Branches of an internal node, empty for leaves.
    pub children: Vec<Branch>,
}

impl TreeNode {
    fn leaf(counts: [u64; 2]) -> Self {
        Self {
            counts,
            split: None,
            children: Vec::new(),
        }
    }

    /// True for leaves.
    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }

    /// Rows reaching the node.
    pub fn n_rows(&self) -> u64 {
        self.counts[0] + self.counts[1]
    }

    /// Majority class (ties go to 1).
    pub fn prediction(&self) -> u32 {
        u32::from(self.counts[1] >= self.counts[0])
    }

    /// Length of the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        self.children.iter().map(|b| b.node.depth() + 1).max().unwrap_or(0)
    }

    /// Number of leaves.
    pub fn leaf_count(&self) -> usize {
        if self.is_leaf() {
            1
        } else {
            self.children.iter().map(|b| b.node.leaf_count()).sum()
        }
    }

    /// Every variable split on anywhere in the tree.
    pub fn split_variables(&self) -> BTreeSet<VarId> {
        let mut vars = BTreeSet::new();
        self.collect_split_variables(&mut vars);
        vars
    }

    fn collect_split_variables(&self, vars: &mut BTreeSet<VarId>) {
        if let Some(split) = &self.split {
            vars.insert(split.var);
        }
        for b in &self.children {
            b.node.collect_split_variables(vars);
        }
    }

    /// p-value of the split against the target, `None` for leaves.
    ///
    /// Each branch is compared with the remaining rows of the node in a 2×2
    /// table, in both outcome orientations, with the one-sided Fisher test.
    /// The smallest p-value is Bonferroni-adjusted by the number of distinct
    /// one-sided tests (2 for a binary split, `2k` for `k > 2` branches).
    pub fn split_p_value(&self) -> Option<f64> {
        self.split?;
        let k = self.children.len();
        let mut best = 1.0f64;
        for b in &self.children {
            let inside = b.node.counts;
            let outside = [self.counts[0] - inside[0], self.counts[1] - inside[1]];
            let positive = ContingencyTable::new(inside[1], inside[0], outside[1], outside[0]);
            let negative = ContingencyTable::new(inside[0], inside[1], outside[0], outside[1]);
            best = best.min(fisher_exact_p(&positive)).min(fisher_exact_p(&negative));
            if k == 2 {
                break;
            }
        }
        let tests = if k == 2 { 2 } else { 2 * k };
        Some((best * tests as f64).min(1.0))
    }

    /// Indented text rendering using the dataset's names.
    pub fn display<'a>(&'a self, data: &'a Dataset) -> TreeDisplay<'a> {
        TreeDisplay { tree: self, data }
    }
}

/// Text dump of a tree, see [`TreeNode::display`].
pub struct TreeDisplay<'a> {
    tree: &'a TreeNode,
    data: &'a Dataset,
}

impl TreeDisplay<'_> {
    fn write_node(&self, f: &mut fmt::Formatter<'_>, node: &TreeNode, indent: usize) -> fmt::Result {
        for b in &node.children {
            let split = node.split.expect("internal node");
            write!(f, "{:width$}", "", width = indent * 2)?;
            write_condition(f, self.data.variable(split.var), &b.condition)?;
            if b.node.is_leaf() {
                writeln!(
                    f,
                    " -> {} [{}/{}]",
                    b.node.prediction(),
                    b.node.counts[b.node.prediction() as usize],
                    b.node.n_rows()
                )?;
            } else {
                writeln!(f, " [n={}]", b.node.n_rows())?;
                self.write_node(f, &b.node, indent + 1)?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for TreeDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.tree.is_leaf() {
            writeln!(
                f,
                "-> {} [{}/{}]",
                self.tree.prediction(),
                self.tree.counts[self.tree.prediction() as usize],
                self.tree.n_rows()
            )
        } else {
            self.write_node(f, self.tree, 0)
        }
    }
}

/// A root-to-leaf path read as `antecedent -> (Y = consequent)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRule {
    /// Position in the left-to-right leaf order of its tree.
    pub id: usize,
    /// Conditions from root to leaf.
    pub antecedent: Assignment,
    /// Majority class at the leaf.
    pub consequent: u32,
    /// Rows at the leaf.
    pub support: u64,
    /// Share of the leaf rows with `Y = consequent`.
    pub confidence: f64,
}

/// Grows and prunes a tree on every row of `data`, never splitting on a
/// variable in `excluded`.
pub fn build_tree(data: &Dataset, cfg: &TreeConfig, excluded: &BTreeSet<VarId>) -> Result<TreeNode> {
    build_tree_on(&data.view(), cfg, excluded)
}

/// [`build_tree`] restricted to the rows of a view.
pub fn build_tree_on(view: &DataView<'_>, cfg: &TreeConfig, excluded: &BTreeSet<VarId>) -> Result<TreeNode> {
    cfg.validate()?;
    let data = view.data();
    if excluded.contains(&data.target()) {
        return Err(Error::InvalidParameter("the target cannot be excluded".into()));
    }
    if view.is_empty() {
        return Err(Error::NoRows);
    }
    let candidates: Vec<VarId> = data
        .predictors()
        .filter(|v| !excluded.contains(v))
        .filter(|&v| cfg.numeric_splits || !data.variable(v).is_numeric())
        .collect();
    let grower = Grower {
        data,
        candidates,
        min_leaf: cfg.min_leaf_for(view.len()),
        max_depth: cfg.max_depth,
    };
    let mut root = grower.grow(view.rows().to_vec(), 0);
    prune(&mut root, cfg.fisher_alpha);
    Ok(root)
}

struct Grower<'a> {
    data: &'a Dataset,
    candidates: Vec<VarId>,
    min_leaf: usize,
    max_depth: usize,
}

impl Grower<'_> {
    fn grow(&self, rows: Vec<u32>, depth: usize) -> TreeNode {
        let mut counts = [0u64; 2];
        for &r in &rows {
            counts[self.data.outcome(r as usize) as usize] += 1;
        }
        if depth >= self.max_depth || counts[0] == 0 || counts[1] == 0 || rows.len() < 2 * self.min_leaf {
            return TreeNode::leaf(counts);
        }
        let Some(split) = self.best_split(&rows) else {
            return TreeNode::leaf(counts);
        };
        let children = self
            .partition(&rows, &split)
            .into_iter()
            .map(|(condition, part)| Branch {
                condition,
                node: self.grow(part, depth + 1),
            })
            .collect();
        TreeNode {
            counts,
            split: Some(split),
            children,
        }
    }

    /// Highest gain ratio among admissible splits; ties keep the lowest
    /// variable id, then the lowest threshold.
    fn best_split(&self, rows: &[u32]) -> Option<Split> {
        let mut best: Option<(f64, Split)> = None;
        for &var in &self.candidates {
            let found = match self.data.column(var) {
                Column::Categorical(values) => self.categorical_split(rows, var, values),
                Column::Numeric(values) => self.numeric_split(rows, values),
            };
            if let Some((ratio, kind)) = found {
                if ratio > MIN_GAIN_RATIO && best.as_ref().is_none_or(|(b, _)| ratio > *b) {
                    best = Some((ratio, Split { var, kind }));
                }
            }
        }
        best.map(|(_, s)| s)
    }

    fn categorical_split(&self, rows: &[u32], var: VarId, values: &[u32]) -> Option<(f64, SplitKind)> {
        let card = self.data.variable(var).cardinality()?;
        let mut counts = vec![[0u64; 2]; card];
        for &r in rows {
            let r = r as usize;
            counts[values[r] as usize][self.data.outcome(r) as usize] += 1;
        }
        counts.retain(|c| c[0] + c[1] > 0);
        if counts.len() < 2 || counts.iter().any(|c| ((c[0] + c[1]) as usize) < self.min_leaf) {
            return None;
        }
        Some((gain_ratio_from_counts(&counts), SplitKind::Multiway))
    }

    fn numeric_split(&self, rows: &[u32], values: &[f64]) -> Option<(f64, SplitKind)> {
        let mut pairs: Vec<(f64, u32)> = rows
            .iter()
            .map(|&r| (values[r as usize], self.data.outcome(r as usize)))
            .collect();
        pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let mut total = [0u64; 2];
        for &(_, y) in &pairs {
            total[y as usize] += 1;
        }
        let n = pairs.len();
        let mut left = [0u64; 2];
        let mut best: Option<(f64, f64)> = None;
        for i in 0..n - 1 {
            left[pairs[i].1 as usize] += 1;
            if pairs[i].0 == pairs[i + 1].0 {
                continue;
            }
            let n_left = i + 1;
            if n_left < self.min_leaf || n - n_left < self.min_leaf {
                continue;
            }
            let right = [total[0] - left[0], total[1] - left[1]];
            let ratio = gain_ratio_from_counts(&[left, right]);
            if best.is_none_or(|(b, _)| ratio > b) {
                best = Some((ratio, 0.5 * (pairs[i].0 + pairs[i + 1].0)));
            }
        }
        best.map(|(ratio, t)| (ratio, SplitKind::Threshold(t)))
    }

    fn partition(&self, rows: &[u32], split: &Split) -> Vec<(Condition, Vec<u32>)> {
        match (self.data.column(split.var), split.kind) {
            (Column::Categorical(values), SplitKind::Multiway) => {
                let card = self.data.variable(split.var).cardinality().unwrap_or(0);
                let mut parts = vec![Vec::new(); card];
                for &r in rows {
                    parts[values[r as usize] as usize].push(r);
                }
                parts
                    .into_iter()
                    .enumerate()
                    .filter(|(_, p)| !p.is_empty())
                    .map(|(c, p)| (Condition::Equals(c as u32), p))
                    .collect()
            }
            (Column::Numeric(values), SplitKind::Threshold(t)) => {
                let (low, high): (Vec<u32>, Vec<u32>) = rows.iter().partition(|&&r| values[r as usize] <= t);
                vec![(Condition::AtMost(t), low), (Condition::Above(t), high)]
            }
            _ => unreachable!("split kind matches column storage"),
        }
    }
}

/// Bottom-up: children first, then collapse this node if its split is not
/// significant at `alpha`.
fn prune(node: &mut TreeNode, alpha: f64) {
    for b in &mut node.children {
        prune(&mut b.node, alpha);
    }
    if node.split_p_value().is_some_and(|p| p > alpha) {
        node.split = None;
        node.children.clear();
    }
}

/// One rule per leaf, in left-to-right order.
pub fn extract_rules(tree: &TreeNode) -> Vec<DecisionRule> {
    let mut rules = Vec::new();
    collect_rules(tree, Assignment::new(), &mut rules);
    rules
}

fn collect_rules(node: &TreeNode, path: Assignment, out: &mut Vec<DecisionRule>) {
    match node.split {
        None => {
            let consequent = node.prediction();
            let support = node.n_rows();
            out.push(DecisionRule {
                id: out.len(),
                antecedent: path,
                consequent,
                support,
                confidence: if support == 0 {
                    0.0
                } else {
                    node.counts[consequent as usize] as f64 / support as f64
                },
            });
        }
        Some(split) => {
            for b in &node.children {
                let mut next = path.clone();
                next.constrain(split.var, b.condition)
                    .expect("a path never repeats a categorical split");
                collect_rules(&b.node, next, out);
            }
        }
    }
}

/// Diversified multiple trees: tree `i` may not split on any variable used
/// by trees `1..i`. Stops early when a tree degenerates to a single leaf
/// (the first tree is always returned).
pub fn build_dmt(data: &Dataset, m: usize, cfg: &TreeConfig) -> Result<Vec<TreeNode>> {
    if m == 0 {
        return Err(Error::InvalidParameter("tree count must be at least 1".into()));
    }
    let mut excluded = BTreeSet::new();
    let mut trees: Vec<TreeNode> = Vec::with_capacity(m);
    for i in 0..m {
        let tree = build_tree(data, cfg, &excluded)?;
        if tree.is_leaf() && i > 0 {
            break;
        }
        let stop = tree.is_leaf();
        excluded.extend(tree.split_variables());
        trees.push(tree);
        if stop {
            break;
        }
    }
    Ok(trees)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(n: u64, p: u64) -> TreeNode {
        TreeNode::leaf([n, p])
    }

    fn node(var: VarId, children: Vec<TreeNode>) -> TreeNode {
        let mut counts = [0, 0];
        for c in &children {
            counts[0] += c.counts[0];
            counts[1] += c.counts[1];
        }
        TreeNode {
            counts,
            split: Some(Split {
                var,
                kind: SplitKind::Multiway,
            }),
            children: children
                .into_iter()
                .enumerate()
                .map(|(i, node)| Branch {
                    condition: Condition::Equals(i as u32),
                    node,
                })
                .collect(),
        }
    }

    #[test]
    fn rule_counts_follow_leaves() {
        let single = leaf(3, 7);
        let rules = extract_rules(&single);
        assert_eq!(rules.len(), 1);
        assert!(rules[0].antecedent.is_empty());
        assert_eq!(rules[0].consequent, 1);

        let stump = node(0, vec![leaf(10, 0), leaf(0, 10)]);
        assert_eq!(extract_rules(&stump).len(), 2);

        let l2 = |v| node(v, vec![leaf(1, 0), leaf(0, 1)]);
        let l1 = |v| node(v, vec![l2(2), l2(2)]);
        let full = node(0, vec![l1(1), l1(1)]);
        let rules = extract_rules(&full);
        assert_eq!(rules.len(), 8);
        assert!(rules.iter().all(|r| r.antecedent.len() == 3));
        assert_eq!(rules.iter().map(|r| r.support).sum::<u64>(), full.n_rows());
        assert_eq!(full.depth(), 3);
    }

    #[test]
    fn split_p_value_is_bonferroni_adjusted_min_tail() {
        let stump = node(0, vec![leaf(5, 0), leaf(0, 5)]);
        assert!((stump.split_p_value().unwrap() - 2.0 / 252.0).abs() < 1e-14);
        let flipped = node(0, vec![leaf(0, 5), leaf(5, 0)]);
        assert!((flipped.split_p_value().unwrap() - 2.0 / 252.0).abs() < 1e-14);
        assert_eq!(leaf(1, 1).split_p_value(), None);
    }

    #[test]
    fn pruning_collapses_insignificant_splits() {
        let mut t = node(0, vec![leaf(10, 10), leaf(11, 9)]);
        prune(&mut t, 0.05);
        assert!(t.is_leaf());
        assert_eq!(t.counts, [21, 19]);
    }

    #[test]
    fn config_validation() {
        assert!(TreeConfig::default().validate().is_ok());
        assert!(TreeConfig {
            fisher_alpha: 1.0,
            ..TreeConfig::default()
        }
        .validate()
        .is_err());
        assert!(TreeConfig {
            min_leaf: Some(0),
            ..TreeConfig::default()
        }
        .validate()
        .is_err());
        assert_eq!(TreeConfig::default().min_leaf_for(10_000), 100);
        assert_eq!(TreeConfig::default().min_leaf_for(500), 20);
    }
}
