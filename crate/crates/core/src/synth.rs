//! Synthetic benchmarks with planted context-specific causes.
//!
//! Two causal Bayesian networks over the same binary variables are sampled
//! separately; a context column (0 for the first network, 1 for the second)
//! is appended and the samples are stacked. The direct parents of the
//! target in each network are the ground truth for that context.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Column, Dataset, VarId, VariableKind, VariableMeta};
use crate::error::{Error, Result};

/// Shape of random networks.
#[derive(Debug, Clone, PartialEq)]
pub struct CbnConfig {
    /// Probability of each forward edge; `None` means `2 / (n - 1)`.
    pub edge_prob: Option<f64>,
    /// Range of the uniform CPT entries.
    pub cpt_range: (f64, f64),
    /// In-degree cap.
    pub max_parents: usize,
}

impl Default for CbnConfig {
    fn default() -> Self {
        Self {
            edge_prob: None,
            cpt_range: (0.1, 0.9),
            max_parents: 4,
        }
    }
}

impl CbnConfig {
    fn edge_prob_for(&self, n_vars: usize) -> f64 {
        self.edge_prob.unwrap_or(2.0 / (n_vars as f64 - 1.0))
    }

    fn validate(&self, n_vars: usize) -> Result<()> {
        if n_vars < 3 {
            return Err(Error::InvalidParameter(format!("need at least 3 variables, got {n_vars}")));
        }
        let p = self.edge_prob_for(n_vars);
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!("edge probability must lie in (0, 1), got {p}")));
        }
        let (lo, hi) = self.cpt_range;
        if !(lo > 0.0 && lo <= hi && hi < 1.0) {
            return Err(Error::InvalidParameter(format!("CPT range must lie inside (0, 1), got [{lo}, {hi}]")));
        }
        if self.max_parents == 0 {
            return Err(Error::InvalidParameter("max_parents must be at least 1".into()));
        }
        Ok(())
    }
}

/// Binary causal Bayesian network whose variable order is topological.
#[derive(Debug, Clone, PartialEq)]
pub struct Cbn {
    /// Parents of each variable, ascending; parents always precede the child.
    pub parents: Vec<Vec<usize>>,
    /// `cpts[v][k]` is `P(v = 1)` under parent configuration `k`, where bit
    /// `i` of `k` is the value of `parents[v][i]`.
    pub cpts: Vec<Vec<f64>>,
    /// The designated outcome (the last variable).
    pub target: usize,
}

impl Cbn {
    /// Number of variables.
    pub fn n_vars(&self) -> usize {
        self.parents.len()
    }

    /// Every ancestor of `v`.
    pub fn ancestors(&self, v: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let mut stack = self.parents[v].clone();
        while let Some(u) = stack.pop() {
            if out.insert(u) {
                stack.extend(self.parents[u].iter().copied());
            }
        }
        out
    }

    /// Probability that `v = 1` given values of all earlier variables.
    pub fn conditional(&self, v: usize, values: &[u32]) -> f64 {
        let k = self.parents[v]
            .iter()
            .enumerate()
            .fold(0usize, |acc, (i, &p)| acc | ((values[p] as usize) << i));
        self.cpts[v][k]
    }
}

/// Forward edges `i -> j` drawn with probability `edge_prob`; nodes with more
/// than `max_parents` candidates keep a uniform random subset. The last node
/// receives one random parent if it drew none.
pub fn random_dag<R: Rng>(n_vars: usize, edge_prob: f64, max_parents: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let mut parents = Vec::with_capacity(n_vars);
    for j in 0..n_vars {
        let mut ps: Vec<usize> = (0..j).filter(|_| rng.gen_bool(edge_prob)).collect();
        if ps.len() > max_parents {
            let (chosen, _) = ps.partial_shuffle(rng, max_parents);
            let mut chosen = chosen.to_vec();
            chosen.sort_unstable();
            ps = chosen;
        }
        parents.push(ps);
    }
    if n_vars > 1 && parents[n_vars - 1].is_empty() {
        parents[n_vars - 1].push(rng.gen_range(0..n_vars - 1));
    }
    parents
}

/// One uniform draw from `range` per parent configuration of every node.
pub fn random_cpts<R: Rng>(parents: &[Vec<usize>], range: (f64, f64), rng: &mut R) -> Vec<Vec<f64>> {
    parents
        .iter()
        .map(|ps| {
            (0..1usize << ps.len())
                .map(|_| range.0 + (range.1 - range.0) * rng.gen::<f64>())
                .collect()
        })
        .collect()
}

fn random_cbn_with<R: Rng>(n_vars: usize, cfg: &CbnConfig, rng: &mut R) -> Cbn {
    let parents = random_dag(n_vars, cfg.edge_prob_for(n_vars), cfg.max_parents, rng);
    let cpts = random_cpts(&parents, cfg.cpt_range, rng);
    Cbn {
        parents,
        cpts,
        target: n_vars - 1,
    }
}

/// Random network over `n_vars` variables with at most 4 parents per node.
pub fn random_cbn(n_vars: usize, seed: u64, edge_prob: f64, cpt_range: (f64, f64)) -> Result<Cbn> {
    let cfg = CbnConfig {
        edge_prob: Some(edge_prob),
        cpt_range,
        ..CbnConfig::default()
    };
    random_cbn_from(n_vars, seed, &cfg)
}

/// Random network from a full configuration.
pub fn random_cbn_from(n_vars: usize, seed: u64, cfg: &CbnConfig) -> Result<Cbn> {
    cfg.validate(n_vars)?;
    Ok(random_cbn_with(n_vars, cfg, &mut ChaCha8Rng::seed_from_u64(seed)))
}

/// Ancestral sampling; returns one column per variable.
pub fn sample_columns<R: Rng>(cbn: &Cbn, n: usize, rng: &mut R) -> Vec<Vec<u32>> {
    let v = cbn.n_vars();
    let mut columns = vec![Vec::with_capacity(n); v];
    let mut row = vec![0u32; v];
    for _ in 0..n {
        for j in 0..v {
            row[j] = u32::from(rng.gen::<f64>() < cbn.conditional(j, &row));
            columns[j].push(row[j]);
        }
    }
    columns
}

/// Samples `n` rows. Variables are named `V1..` and the target `Y`.
pub fn sample(cbn: &Cbn, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidParameter("row count must be at least 1".into()));
    }
    let columns = sample_columns(cbn, n, &mut ChaCha8Rng::seed_from_u64(seed));
    let names: Vec<String> = (0..cbn.n_vars())
        .map(|j| if j == cbn.target { String::from("Y") } else { format!("V{}", j + 1) })
        .collect();
    binary_dataset(names, columns, cbn.target)
}

/// Binary dataset that tolerates constant columns (labels stay `"0"`/`"1"`).
fn binary_dataset(names: Vec<String>, columns: Vec<Vec<u32>>, target: usize) -> Result<Dataset> {
    let variables = names
        .into_iter()
        .enumerate()
        .map(|(id, name)| VariableMeta {
            id,
            name,
            kind: VariableKind::Categorical {
                labels: vec![String::from("0"), String::from("1")],
            },
        })
        .collect();
    Dataset::new(variables, columns.into_iter().map(Column::Categorical).collect(), target)
}

/// Options of [`generate_pair`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairOptions {
    /// Network shape.
    pub cbn: CbnConfig,
    /// Draw a separate DAG for the second network instead of sharing one.
    pub independent_dags: bool,
    /// Shuffle the stacked rows.
    pub shuffle: bool,
}

/// Planted causes per context value.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// Id of the context column.
    pub context_var: VarId,
    /// Direct parents of the target, indexed by context value.
    pub causes: [BTreeSet<VarId>; 2],
    /// Every ancestor of the target, indexed by context value.
    pub ancestors: [BTreeSet<VarId>; 2],
}

/// Builds a benchmark with `n_vars` predictors, a context column `Xc` and a
/// target `Y`, `n_samples / 2` rows per context.
pub fn generate_pair(n_vars: usize, n_samples: usize, seed: u64, opts: &PairOptions) -> Result<(Dataset, GroundTruth)> {
    if n_samples == 0 || !n_samples.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("sample count must be even and positive, got {n_samples}")));
    }
    let nodes = n_vars + 1;
    opts.cbn.validate(nodes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = random_cbn_with(nodes, &opts.cbn, &mut rng);
    let second = if opts.independent_dags {
        random_cbn_with(nodes, &opts.cbn, &mut rng)
    } else {
        Cbn {
            cpts: random_cpts(&first.parents, opts.cbn.cpt_range, &mut rng),
            parents: first.parents.clone(),
            target: first.target,
        }
    };
    let half = n_samples / 2;
    let a = sample_columns(&first, half, &mut rng);
    let b = sample_columns(&second, half, &mut rng);

    let mut order: Vec<usize> = (0..n_samples).collect();
    if opts.shuffle {
        order.shuffle(&mut rng);
    }
    let stacked = |j: usize| -> Vec<u32> {
        order
            .iter()
            .map(|&r| if r < half { a[j][r] } else { b[j][r - half] })
            .collect()
    };
    let mut names: Vec<String> = (1..=n_vars).map(|j| format!("V{j}")).collect();
    names.push(String::from("Xc"));
    names.push(String::from("Y"));
    let mut columns: Vec<Vec<u32>> = (0..n_vars).map(stacked).collect();
    columns.push(order.iter().map(|&r| u32::from(r >= half)).collect());
    columns.push(stacked(first.target));

    let data = binary_dataset(names, columns, n_vars + 1)?;
    let truth = GroundTruth {
        context_var: n_vars,
        causes: [
            first.parents[first.target].iter().copied().collect(),
            second.parents[second.target].iter().copied().collect(),
        ],
        ancestors: [first.ancestors(first.target), second.ancestors(second.target)],
    };
    Ok((data, truth))
}
