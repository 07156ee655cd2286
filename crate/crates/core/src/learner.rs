//! Exact structure learning by dynamic programming over variable subsets.
//!
//! The search runs in three stages: best parent sets for every child and
//! candidate set, best sink for every variable subset, and a backtrack from
//! the full set that recovers an ordering and the parents.
//!
//! Ties are broken deterministically: higher score first, then smaller parent
//! set, then the numerically smaller bitmask; among sinks the smallest index.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::scores::{ScoreConfig, Scorer};
use crate::structure::{enumerate_dags, DagStructure, MAX_ENUMERATION_NODES};

/// Variable limit without a parent cap.
pub const MAX_VARS_UNCAPPED: usize = 20;
/// Variable limit with a parent cap.
pub const MAX_VARS_CAPPED: usize = 31;
/// Upper bound on `n 2^(n-1) + 2^n` stored entries.
pub const MAX_DP_ENTRIES: u64 = 1 << 27;

/// Local scores for every child and every candidate parent set, indexed by a
/// bitmask over the other `n - 1` variables.
#[derive(Debug, Clone)]
pub struct LocalScoreTable {
    n: usize,
    max_parents: Option<usize>,
    scores: Vec<Vec<f64>>,
}

impl LocalScoreTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_parents(&self) -> Option<usize> {
        self.max_parents
    }

    fn allowed(&self, size: usize) -> bool {
        self.max_parents.is_none_or(|k| size <= k)
    }

    /// Score of `child` with the parent set `mask` (bitmask over all `n`
    /// variables, not containing `child`), if it was computed.
    pub fn get(&self, child: usize, mask: u64) -> Option<f64> {
        if mask >> child & 1 == 1 || !self.allowed(mask.count_ones() as usize) {
            return None;
        }
        self.scores[child].get(compress(mask, child) as usize).copied()
    }

    /// Number of computed entries.
    pub fn len(&self) -> usize {
        self.scores
            .iter()
            .map(|s| {
                (0..s.len() as u64)
                    .filter(|c| self.allowed(c.count_ones() as usize))
                    .count()
            })
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Removes bit `i` from `mask`, shifting higher bits down.
fn compress(mask: u64, i: usize) -> u64 {
    let low = mask & ((1u64 << i) - 1);
    low | ((mask >> (i + 1)) << i)
}

/// Inverse of [`compress`].
fn expand(c: u64, i: usize) -> u64 {
    let low = c & ((1u64 << i) - 1);
    low | ((c >> i) << (i + 1))
}

fn mask_to_vec(mask: u64) -> Vec<usize> {
    (0..64).filter(|&b| mask >> b & 1 == 1).collect()
}

fn check_size(n: usize, max_parents: Option<usize>) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidData("dataset has no variables".into()));
    }
    let limit = if max_parents.is_some() {
        MAX_VARS_CAPPED
    } else {
        MAX_VARS_UNCAPPED
    };
    if n > limit {
        return Err(Error::ResourceLimit(format!(
            "exact search supports at most {limit} variables{} (got {n})",
            if max_parents.is_some() { "" } else { " without --max-parents" }
        )));
    }
    let entries = (n as u64) * (1u64 << (n - 1)) + (1u64 << n);
    if entries > MAX_DP_ENTRIES {
        return Err(Error::ResourceLimit(format!(
            "{n} variables need {entries} table entries, above the limit of {MAX_DP_ENTRIES}"
        )));
    }
    Ok(())
}

/// Evaluates every local score the search needs.
pub fn compute_local_scores(
    data: &Dataset,
    cfg: &ScoreConfig,
    max_parents: Option<usize>,
) -> Result<LocalScoreTable> {
    let n = data.n_vars();
    check_size(n, max_parents)?;
    let scorer = Scorer::new(data, *cfg)?;
    let size = 1usize << (n - 1);
    let allowed = |c: u64| max_parents.is_none_or(|k| c.count_ones() as usize <= k);
    let mut scores = Vec::with_capacity(n);
    for child in 0..n {
        let col: Vec<f64> = (0..size as u64)
            .into_par_iter()
            .map(|c| {
                if !allowed(c) {
                    return Ok(f64::NEG_INFINITY);
                }
                scorer.local(child, &mask_to_vec(expand(c, child)))
            })
            .collect::<Result<_>>()?;
        scores.push(col);
    }
    Ok(LocalScoreTable {
        n,
        max_parents,
        scores,
    })
}

#[derive(Debug, Clone)]
pub struct LearnResult {
    pub network: DagStructure,
    pub total_score: f64,
    pub per_variable: Vec<f64>,
    pub elapsed: Duration,
}

/// (score, parent set size, compressed mask); `better` implements the tie rule.
#[derive(Debug, Clone, Copy)]
struct Choice {
    score: f64,
    size: u32,
    mask: u64,
}

impl Choice {
    fn better_than(&self, other: &Choice) -> bool {
        if self.score != other.score {
            return self.score > other.score;
        }
        if self.size != other.size {
            return self.size < other.size;
        }
        self.mask < other.mask
    }
}

/// Globally optimal DAG under a decomposable score.
pub fn learn_exact(data: &Dataset, cfg: &ScoreConfig, max_parents: Option<usize>) -> Result<LearnResult> {
    let start = Instant::now();
    let table = compute_local_scores(data, cfg, max_parents)?;
    let mut result = learn_from_table(&table)?;
    result.elapsed = start.elapsed();
    Ok(result)
}

/// Runs the search stages on precomputed local scores.
pub fn learn_from_table(table: &LocalScoreTable) -> Result<LearnResult> {
    let start = Instant::now();
    let n = table.n;
    let half = 1usize << (n - 1);

    // Stage 1: best parent set within every candidate set, per child.
    let best_parents: Vec<Vec<Choice>> = (0..n)
        .into_par_iter()
        .map(|child| {
            let local = &table.scores[child];
            let mut best: Vec<Choice> = Vec::with_capacity(half);
            for c in 0..half as u64 {
                let mut choice = Choice {
                    score: local[c as usize],
                    size: c.count_ones(),
                    mask: c,
                };
                let mut bits = c;
                while bits != 0 {
                    let b = bits & bits.wrapping_neg();
                    bits ^= b;
                    let sub = best[(c ^ b) as usize];
                    if sub.better_than(&choice) {
                        choice = sub;
                    }
                }
                best.push(choice);
            }
            best
        })
        .collect();

    // Stage 2: best network over every subset, with its sink.
    let full = 1usize << n;
    let mut best = vec![f64::NEG_INFINITY; full];
    let mut sink = vec![0u8; full];
    best[0] = 0.0;
    for w in 1..full as u64 {
        let mut top = f64::NEG_INFINITY;
        let mut top_sink = 0u8;
        let mut bits = w;
        while bits != 0 {
            let s = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let rest = w & !(1u64 << s);
            let cand = best[rest as usize] + best_parents[s][compress(rest, s) as usize].score;
            if cand > top {
                top = cand;
                top_sink = s as u8;
            }
        }
        best[w as usize] = top;
        sink[w as usize] = top_sink;
    }

    // Stage 3: peel sinks off the full set.
    let mut parents = vec![Vec::new(); n];
    let mut per_variable = vec![0.0; n];
    let mut w = (full - 1) as u64;
    while w != 0 {
        let s = sink[w as usize] as usize;
        let rest = w & !(1u64 << s);
        let choice = best_parents[s][compress(rest, s) as usize];
        parents[s] = mask_to_vec(expand(choice.mask, s));
        per_variable[s] = choice.score;
        w = rest;
    }
    if per_variable.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("a local score is not finite".into()));
    }
    let network = DagStructure::new(parents)?;
    Ok(LearnResult {
        network,
        total_score: per_variable.iter().sum(),
        per_variable,
        elapsed: start.elapsed(),
    })
}

/// Exhaustive search over every labeled DAG (`n <= 5`). Ties go to fewer
/// arcs, then to the earlier DAG in enumeration order.
pub fn learn_bruteforce(data: &Dataset, cfg: &ScoreConfig) -> Result<LearnResult> {
    let start = Instant::now();
    let n = data.n_vars();
    if n > MAX_ENUMERATION_NODES {
        return Err(Error::ResourceLimit(format!(
            "brute-force search supports at most {MAX_ENUMERATION_NODES} variables"
        )));
    }
    let table = compute_local_scores(data, cfg, None)?;
    let mut best: Option<(f64, usize, DagStructure, Vec<f64>)> = None;
    for g in enumerate_dags(n)? {
        let per: Vec<f64> = (0..n)
            .map(|i| {
                let mask = g.parents(i).iter().fold(0u64, |m, &p| m | 1 << p);
                table.get(i, mask).expect("uncapped table is complete")
            })
            .collect();
        let total: f64 = per.iter().sum();
        let arcs = g.arc_count();
        let replace = match &best {
            None => true,
            Some((s, a, _, _)) => total > *s || (total == *s && arcs < *a),
        };
        if replace {
            best = Some((total, arcs, g, per));
        }
    }
    let (total_score, _, network, per_variable) = best.expect("at least one DAG");
    Ok(LearnResult {
        network,
        total_score,
        per_variable,
        elapsed: start.elapsed(),
    })
}

/// Number of labeled DAGs visited by [`learn_bruteforce`].
pub fn bruteforce_structure_count(n: usize) -> Result<usize> {
    Ok(enumerate_dags(n)?.len())
}
