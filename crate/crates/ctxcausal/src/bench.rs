//! Wall-clock sweep over variable counts and ensemble sizes.

use std::time::Instant;

use ctxcausal_core::synth::{generate_pair, PairOptions};
use ctxcausal_core::{discover, Executor, TccParams};
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One timed discovery run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub vars: usize,
    pub samples: usize,
    pub trees: usize,
    pub seed: u64,
    pub seconds: f64,
    pub rules: usize,
    pub tested: usize,
}

/// Generates one benchmark pair and times `discover` on it; generation is
/// not included in `seconds`.
pub fn time_discovery<E: Executor>(
    vars: usize,
    samples: usize,
    trees: usize,
    seed: u64,
    base: &TccParams,
    executor: &E,
) -> Result<BenchCell> {
    let (data, _) = generate_pair(vars, samples, seed, &PairOptions::default())?;
    let params = TccParams {
        trees,
        ..base.clone()
    };
    let start = Instant::now();
    let found = discover(&data, &params, executor)?;
    let seconds = start.elapsed().as_secs_f64();
    log::info!("vars={vars} trees={trees}: {seconds:.2}s, {} rules", found.rules.len());
    Ok(BenchCell {
        vars,
        samples,
        trees,
        seed,
        seconds,
        rules: found.rules.len(),
        tested: found.stats.tested,
    })
}

/// Every `(vars, trees)` combination, variable count outermost. Each
/// variable count uses the same dataset for all tree counts.
pub fn sweep<E: Executor>(
    vars_list: &[usize],
    trees_list: &[usize],
    samples: usize,
    seed: u64,
    base: &TccParams,
    executor: &E,
) -> Result<Vec<BenchCell>> {
    let mut cells = Vec::with_capacity(vars_list.len() * trees_list.len());
    for &vars in vars_list {
        for &trees in trees_list {
            cells.push(time_discovery(vars, samples, trees, seed, base, executor)?);
        }
    }
    Ok(cells)
}

/// Text table of a sweep, one row per variable count, one column per tree count.
pub fn table(cells: &[BenchCell]) -> String {
    let mut trees: Vec<usize> = cells.iter().map(|c| c.trees).collect();
    trees.sort_unstable();
    trees.dedup();
    let mut vars: Vec<usize> = cells.iter().map(|c| c.vars).collect();
    vars.dedup();
    let mut out = format!("{:>6}", "vars");
    for m in &trees {
        out += &format!(" {:>10}", format!("m={m} (s)"));
    }
    out.push('\n');
    for v in vars {
        out += &format!("{v:>6}");
        for &m in &trees {
            match cells.iter().find(|c| c.vars == v && c.trees == m) {
                Some(c) => out += &format!(" {:>10.2}", c.seconds),
                None => out += &format!(" {:>10}", "-"),
            }
        }
        out.push('\n');
    }
    out
}
