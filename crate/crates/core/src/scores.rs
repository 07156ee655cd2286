//! Decomposable local scores over (child, parent set) pairs.
//!
//! All scores are log-scale (nats) and larger is better.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::dataset::{conditional_loglik, contingency, ContingencyTable, Dataset, MAX_CONFIGURATIONS};
use crate::error::{Error, Result};
use crate::regret::{RegretCache, RegretMethod};
use crate::structure::DagStructure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Bic,
    Bdeu,
    Fnml,
    #[default]
    Qnml,
    Bdq,
}

impl Criterion {
    pub const ALL: [Criterion; 5] = [
        Criterion::Bic,
        Criterion::Bdeu,
        Criterion::Fnml,
        Criterion::Qnml,
        Criterion::Bdq,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::Bic => "bic",
            Criterion::Bdeu => "bdeu",
            Criterion::Fnml => "fnml",
            Criterion::Qnml => "qnml",
            Criterion::Bdq => "bdq",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Criterion::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown criterion {s:?} (expected bic, bdeu, fnml, qnml or bdq)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreConfig {
    pub criterion: Criterion,
    /// Equivalent sample size of BDeu.
    pub bdeu_alpha: f64,
    /// Per-cell Dirichlet parameter of BDq.
    pub bdq_alpha: f64,
    pub regret_method: RegretMethod,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            criterion: Criterion::Qnml,
            bdeu_alpha: 1.0,
            bdq_alpha: 0.5,
            regret_method: RegretMethod::SzpAllRange,
        }
    }
}

impl ScoreConfig {
    pub fn new(criterion: Criterion) -> Self {
        ScoreConfig {
            criterion,
            ..Default::default()
        }
    }

    pub fn with_regret(mut self, method: RegretMethod) -> Self {
        self.regret_method = method;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, a) in [("BDeu alpha", self.bdeu_alpha), ("BDq alpha", self.bdq_alpha)] {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {a}")));
            }
        }
        Ok(())
    }
}

/// `ln P(D_i | theta_hat_{i|G_i}) = sum_jk N_ijk ln(N_ijk / N_ij)`.
pub fn max_loglik_conditional(table: &ContingencyTable) -> f64 {
    conditional_loglik(table)
}

pub fn bic_local(table: &ContingencyTable, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidData("BIC is undefined for an empty dataset".into()));
    }
    let dim = table.q() as f64 * (table.r() as f64 - 1.0);
    Ok(max_loglik_conditional(table) - 0.5 * dim * (n as f64).ln())
}

pub fn bdeu_local(table: &ContingencyTable, alpha: f64) -> f64 {
    let q = table.q() as f64;
    let a_j = alpha / q;
    let a_jk = alpha / (q * table.r() as f64);
    let ln_g_aj = ln_gamma(a_j);
    let ln_g_ajk = ln_gamma(a_jk);
    table
        .observed_rows()
        .iter()
        .map(|(_, row)| {
            let nij: u64 = row.iter().sum();
            let cells: f64 = row
                .iter()
                .filter(|&&c| c > 0)
                .map(|&c| ln_gamma(a_jk + c as f64) - ln_g_ajk)
                .sum();
            ln_g_aj - ln_gamma(a_j + nij as f64) + cells
        })
        .sum()
}

/// Factorized NML: the child column is NML-coded separately within every
/// observed parent configuration.
pub fn fnml_local(table: &ContingencyTable, cache: &RegretCache) -> Result<f64> {
    let r = table.r() as u64;
    let mut penalty = 0.0;
    for (_, row) in table.observed_rows() {
        penalty += cache.get(row.iter().sum(), r)?;
    }
    Ok(max_loglik_conditional(table) - penalty)
}

/// Quotient NML: `ln P_NML(D_{i,G_i}) - ln P_NML(D_{G_i})` with each column
/// set collapsed into a single categorical variable.
pub fn qnml_local(table: &ContingencyTable, n: u64, cache: &RegretCache) -> Result<f64> {
    let q = table.q();
    let qr = q
        .checked_mul(table.r() as u64)
        .filter(|&v| v <= MAX_CONFIGURATIONS)
        .ok_or_else(|| Error::ResourceLimit("collapsed configuration count exceeds 2^62".into()))?;
    let penalty = cache.get(n, qr)? - cache.get(n, q)?;
    Ok(max_loglik_conditional(table) - penalty)
}

/// Log marginal likelihood of counts under a symmetric Dirichlet(alpha) over
/// `cells` categories. Unobserved cells contribute nothing.
fn dirichlet_log_marginal<I: Iterator<Item = u64>>(counts: I, cells: f64, alpha: f64) -> f64 {
    let ln_g_a = ln_gamma(alpha);
    let mut total = 0u64;
    let mut sum = 0.0;
    for c in counts.filter(|&c| c > 0) {
        total += c;
        sum += ln_gamma(alpha + c as f64) - ln_g_a;
    }
    ln_gamma(cells * alpha) - ln_gamma(cells * alpha + total as f64) + sum
}

/// Bayesian Dirichlet quotient score.
pub fn bdq_local(table: &ContingencyTable, alpha: f64) -> f64 {
    let q = table.q() as f64;
    let r = table.r() as f64;
    let rows = table.observed_rows();
    let joint = dirichlet_log_marginal(rows.iter().flat_map(|(_, row)| row.iter().copied()), q * r, alpha);
    let parents = dirichlet_log_marginal(rows.iter().map(|(_, row)| row.iter().sum()), q, alpha);
    joint - parents
}

/// Evaluates local scores for one dataset and configuration, sharing a
/// regret cache across calls.
#[derive(Debug)]
pub struct Scorer<'a> {
    data: &'a Dataset,
    cfg: ScoreConfig,
    cache: RegretCache,
}

impl<'a> Scorer<'a> {
    pub fn new(data: &'a Dataset, cfg: ScoreConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Scorer {
            data,
            cfg,
            cache: RegretCache::new(cfg.regret_method),
        })
    }

    pub fn config(&self) -> &ScoreConfig {
        &self.cfg
    }

    pub fn data(&self) -> &Dataset {
        self.data
    }

    pub fn local(&self, child: usize, parents: &[usize]) -> Result<f64> {
        let table = contingency(self.data, child, parents)?;
        self.local_from_table(&table)
    }

    pub fn local_from_table(&self, table: &ContingencyTable) -> Result<f64> {
        let n = self.data.n_rows() as u64;
        match self.cfg.criterion {
            Criterion::Bic => bic_local(table, n),
            Criterion::Bdeu => Ok(bdeu_local(table, self.cfg.bdeu_alpha)),
            Criterion::Fnml => fnml_local(table, &self.cache),
            Criterion::Qnml => qnml_local(table, n, &self.cache),
            Criterion::Bdq => Ok(bdq_local(table, self.cfg.bdq_alpha)),
        }
    }

    /// Local scores in variable order.
    pub fn per_variable(&self, g: &DagStructure) -> Result<Vec<f64>> {
        if g.n() != self.data.n_vars() {
            return Err(Error::InvalidArgument(format!(
                "graph has {} nodes but the dataset has {} variables",
                g.n(),
                self.data.n_vars()
            )));
        }
        (0..g.n()).map(|i| self.local(i, g.parents(i))).collect()
    }

    pub fn total(&self, g: &DagStructure) -> Result<f64> {
        Ok(self.per_variable(g)?.iter().sum())
    }
}

/// Sum of local scores over all variables of `g`.
pub fn total_score(data: &Dataset, g: &DagStructure, cfg: &ScoreConfig) -> Result<f64> {
    Scorer::new(data, *cfg)?.total(g)
}
