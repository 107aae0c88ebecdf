mod common;

use std::collections::BTreeSet;

use common::{noise, rng};
use ctxcausal_core::stats::association_test;
use ctxcausal_core::synth::{generate_pair, PairOptions};
use ctxcausal_core::tree::{build_dmt, build_tree, extract_rules, Branch, Split, SplitKind, TreeConfig, TreeNode};
use ctxcausal_core::{Assignment, Condition, DataView, Dataset, DatasetBuilder, VarId};
use proptest::prelude::*;
use rand::Rng;

fn no_exclusions() -> BTreeSet<VarId> {
    BTreeSet::new()
}

fn leaves(node: &TreeNode) -> Vec<&TreeNode> {
    if node.is_leaf() {
        return vec![node];
    }
    node.children.iter().flat_map(|b| leaves(&b.node)).collect()
}

fn internal(node: &TreeNode) -> Vec<&TreeNode> {
    if node.is_leaf() {
        return vec![];
    }
    let mut out = vec![node];
    out.extend(node.children.iter().flat_map(|b| internal(&b.node)));
    out
}

#[test]
fn perfect_predictor_gives_one_pure_split() {
    let mut r = rng(1);
    let x1 = noise(&mut r, 1000, 0.5);
    let cols = vec![noise(&mut r, 1000, 0.5), x1.clone(), noise(&mut r, 1000, 0.3), x1];
    let d = Dataset::from_binary_columns(&["N1", "X1", "N2", "Y"], cols, "Y").unwrap();
    let t = build_tree(&d, &TreeConfig::default(), &no_exclusions()).unwrap();
    assert_eq!(t.depth(), 1);
    assert_eq!(t.split.unwrap().var, 1);
    assert!(t.children.iter().all(|b| b.node.counts.contains(&0)));
}

fn single_leaf_count(predictors: usize, seeds: u64) -> usize {
    (0..seeds)
        .filter(|&seed| {
            let mut r = rng(seed);
            let cols: Vec<Vec<u32>> = (0..=predictors).map(|_| noise(&mut r, 500, 0.5)).collect();
            let names: Vec<String> = (0..predictors).map(|i| format!("A{i}")).chain(["Y".into()]).collect();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let d = Dataset::from_binary_columns(&refs, cols, "Y").unwrap();
            build_tree(&d, &TreeConfig::default(), &no_exclusions()).unwrap().is_leaf()
        })
        .count()
}

#[test]
fn independent_predictor_is_pruned_away() {
    let single = single_leaf_count(1, 100);
    assert!(single >= 90, "{single}/100");
}

#[test]
fn independent_predictors_rarely_survive_pruning() {
    // the root keeps the best of 5 candidates, so false splits occur at up
    // to 5 * alpha; 62 is that union bound minus 3 sigma
    let single = single_leaf_count(5, 100);
    assert!(single >= 62, "{single}/100");
}

fn check_splits_associated(view: &DataView<'_>, node: &TreeNode, alpha: f64) {
    let Some(split) = node.split else { return };
    let data = view.data();
    assert!(association_test(view, split.var, data.target(), alpha), "{}", data.variable(split.var).name);
    for b in &node.children {
        let child = view.restrict(&Assignment::from_pairs(vec![(split.var, b.condition)]).unwrap());
        check_splits_associated(&child, &b.node, alpha);
    }
}

#[test]
fn syn10_split_variables_are_associated_where_they_split() {
    for seed in 0..5 {
        let (d, _) = generate_pair(10, 10_000, seed, &PairOptions::default()).unwrap();
        let t = build_tree(&d, &TreeConfig::default(), &no_exclusions()).unwrap();
        assert!(!t.is_leaf());
        check_splits_associated(&d.view(), &t, 0.05);
    }
}

fn complete(depth: usize, var: VarId) -> TreeNode {
    if depth == 0 {
        return TreeNode {
            counts: [3, 1],
            split: None,
            children: vec![],
        };
    }
    let child = complete(depth - 1, var + 1);
    TreeNode {
        counts: [child.counts[0] * 2, child.counts[1] * 2],
        split: Some(Split {
            var,
            kind: SplitKind::Multiway,
        }),
        children: (0..2)
            .map(|c| Branch {
                condition: Condition::Equals(c),
                node: child.clone(),
            })
            .collect(),
    }
}

#[test]
fn rule_extraction_shapes() {
    let one = extract_rules(&complete(0, 0));
    assert_eq!(one.len(), 1);
    assert!(one[0].antecedent.is_empty());
    assert_eq!(extract_rules(&complete(1, 0)).len(), 2);
    let eight = extract_rules(&complete(3, 0));
    assert_eq!(eight.len(), 8);
    assert!(eight.iter().all(|r| r.antecedent.len() == 3));
    assert_eq!(eight.iter().map(|r| r.support).sum::<u64>(), 32);
}

#[test]
fn single_tree_ensemble_equals_one_tree() {
    let (d, _) = generate_pair(10, 4000, 3, &PairOptions::default()).unwrap();
    let cfg = TreeConfig::default();
    assert_eq!(build_dmt(&d, 1, &cfg).unwrap(), vec![build_tree(&d, &cfg, &no_exclusions()).unwrap()]);
}

#[test]
fn disjoint_perfect_predictors_go_to_separate_trees() {
    let mut r = rng(2);
    let y = noise(&mut r, 1000, 0.5);
    let cols = vec![y.clone(), y.clone(), noise(&mut r, 1000, 0.5), y];
    let d = Dataset::from_binary_columns(&["X1", "X2", "N", "Y"], cols, "Y").unwrap();
    let trees = build_dmt(&d, 2, &TreeConfig::default()).unwrap();
    assert_eq!(trees.len(), 2);
    assert_eq!(trees[0].split_variables(), BTreeSet::from([0]));
    assert_eq!(trees[1].split_variables(), BTreeSet::from([1]));
}

#[test]
fn ensemble_stops_when_associated_variables_run_out() {
    let mut r = rng(3);
    let n = 3000;
    let mut cols: Vec<Vec<u32>> = (0..10).map(|_| noise(&mut r, n, 0.5)).collect();
    let y: Vec<u32> = (0..n)
        .map(|i| {
            let s = 0.15 + 0.25 * f64::from(cols[0][i]) + 0.2 * f64::from(cols[1][i]) + 0.2 * f64::from(cols[2][i]);
            u32::from(r.gen::<f64>() < s)
        })
        .collect();
    cols.push(y);
    let names: Vec<String> = (1..=10).map(|i| format!("X{i}")).chain(["Y".to_string()]).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let d = Dataset::from_binary_columns(&refs, cols, "Y").unwrap();
    let trees = build_dmt(&d, 7, &TreeConfig::default()).unwrap();
    assert!(trees.len() < 7, "{} trees", trees.len());
}

/// Binary network sample plus one numeric column correlated with the target.
fn mixed_dataset(seed: u64, n_vars: usize, n: usize) -> Dataset {
    let (d, _) = generate_pair(n_vars, n, seed, &PairOptions::default()).unwrap();
    let mut r = rng(seed ^ 0x5eed);
    let mut header: Vec<String> = d.variables().iter().map(|v| v.name.clone()).collect();
    header.push("Age".into());
    let mut b = DatasetBuilder::new(header).unwrap();
    for row in 0..d.n_rows() {
        let mut rec: Vec<String> = (0..d.variables().len()).map(|v| d.code(row, v).to_string()).collect();
        let age = 40.0 + 15.0 * f64::from(d.outcome(row)) + r.gen_range(0.0..30.0);
        rec.push(format!("{age:.0}"));
        b.push_record(rec).unwrap();
    }
    b.finish("Y").unwrap().0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tree_invariants(seed in 0u64..10_000, n_vars in 4usize..12, m in 1usize..4) {
        let d = mixed_dataset(seed, n_vars, 2000);
        let cfg = TreeConfig::default();
        let trees = build_dmt(&d, m, &cfg).unwrap();
        let min_leaf = cfg.min_leaf_for(d.n_rows()) as u64;
        let mut used = BTreeSet::new();
        for t in &trees {
            let vars = t.split_variables();
            prop_assert!(vars.is_disjoint(&used));
            used.extend(vars);
            prop_assert_eq!(extract_rules(t).iter().map(|r| r.support).sum::<u64>(), d.n_rows() as u64);
            if !t.is_leaf() {
                prop_assert!(leaves(t).iter().all(|l| l.n_rows() >= min_leaf));
            }
            for node in internal(t) {
                prop_assert!(node.split_p_value().unwrap() <= cfg.fisher_alpha);
            }
        }
    }
}
