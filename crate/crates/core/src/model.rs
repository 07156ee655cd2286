//! Parameterized networks: CPT fitting, ancestral sampling and predictive
//! log-likelihood.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{contingency, Dataset, MAX_CONFIGURATIONS};
use crate::error::{Error, Result};
use crate::structure::DagStructure;

/// Largest CPT (rows x arity) a fitted network may hold.
pub const MAX_CPT_CELLS: u64 = 1 << 24;

const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct BayesianNetwork {
    structure: DagStructure,
    names: Vec<String>,
    arities: Vec<usize>,
    /// Per variable, `q_i` rows of `r_i` probabilities.
    cpts: Vec<Vec<Vec<f64>>>,
}

/// How CPT rows are estimated from counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parameterization {
    /// Relative frequencies; unobserved rows are uniform.
    MaxLikelihood,
    /// Sequential NML weights `e(N_ijk) (N_ijk + 1)`.
    Snml,
    /// Bayesian predictive `N_ijk + 1 / (r_i q_i)`.
    Bpp,
}

impl std::str::FromStr for Parameterization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ml" => Ok(Parameterization::MaxLikelihood),
            "snml" => Ok(Parameterization::Snml),
            "bpp" => Ok(Parameterization::Bpp),
            other => Err(Error::InvalidArgument(format!(
                "unknown parameterization {other:?} (expected ml, snml or bpp)"
            ))),
        }
    }
}

impl Parameterization {
    pub fn as_str(self) -> &'static str {
        match self {
            Parameterization::MaxLikelihood => "ml",
            Parameterization::Snml => "snml",
            Parameterization::Bpp => "bpp",
        }
    }
}

fn configuration_count(arities: &[usize], parents: &[usize]) -> Result<u64> {
    parents.iter().try_fold(1u64, |q, &p| {
        q.checked_mul(arities[p] as u64)
            .filter(|&q| q <= MAX_CONFIGURATIONS)
            .ok_or_else(|| Error::ResourceLimit("parent configuration count exceeds 2^62".into()))
    })
}

impl BayesianNetwork {
    pub fn new(
        structure: DagStructure,
        names: Vec<String>,
        arities: Vec<usize>,
        cpts: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let n = structure.n();
        if names.len() != n || arities.len() != n || cpts.len() != n {
            return Err(Error::InvalidData(
                "network names, arities, CPTs and structure disagree in size".into(),
            ));
        }
        for i in 0..n {
            let q = configuration_count(&arities, structure.parents(i))?;
            if q * arities[i] as u64 > MAX_CPT_CELLS {
                return Err(Error::ResourceLimit(format!("CPT of {} is too large", names[i])));
            }
            let cpt = &cpts[i];
            if cpt.len() as u64 != q {
                return Err(Error::InvalidData(format!(
                    "CPT of {} has {} rows, expected {}",
                    names[i],
                    cpt.len(),
                    q
                )));
            }
            for (j, row) in cpt.iter().enumerate() {
                if row.len() != arities[i] {
                    return Err(Error::InvalidData(format!(
                        "CPT row {} of {} has {} entries, expected {}",
                        j,
                        names[i],
                        row.len(),
                        arities[i]
                    )));
                }
                if row.iter().any(|&p| !p.is_finite() || p < 0.0) {
                    return Err(Error::InvalidData(format!(
                        "CPT row {} of {} has a negative or non-finite entry",
                        j, names[i]
                    )));
                }
                let s: f64 = row.iter().sum();
                if (s - 1.0).abs() > ROW_SUM_TOLERANCE {
                    return Err(Error::InvalidData(format!(
                        "CPT row {} of {} sums to {}",
                        j, names[i], s
                    )));
                }
            }
        }
        Ok(BayesianNetwork {
            structure,
            names,
            arities,
            cpts,
        })
    }

    pub fn structure(&self) -> &DagStructure {
        &self.structure
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn arities(&self) -> &[usize] {
        &self.arities
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn cpt(&self, i: usize) -> &[Vec<f64>] {
        &self.cpts[i]
    }

    pub fn cpts(&self) -> &[Vec<Vec<f64>>] {
        &self.cpts
    }

    fn configuration(&self, i: usize, row: &[usize]) -> usize {
        self.structure
            .parents(i)
            .iter()
            .fold(0usize, |j, &p| j * self.arities[p] + row[p])
    }

    /// `sum_i ln theta_{i, j(row), row[i]}`.
    pub fn log_predict(&self, row: &[usize]) -> Result<f64> {
        if row.len() != self.n() {
            return Err(Error::InvalidData(format!(
                "row has {} values, network has {} variables",
                row.len(),
                self.n()
            )));
        }
        if let Some(i) = (0..self.n()).find(|&i| row[i] >= self.arities[i]) {
            return Err(Error::InvalidData(format!(
                "value {} out of range for {} (arity {})",
                row[i], self.names[i], self.arities[i]
            )));
        }
        Ok((0..self.n())
            .map(|i| self.cpts[i][self.configuration(i, row)][row[i]].ln())
            .sum())
    }

    /// Ancestral sampling with a ChaCha8 stream seeded by `seed`
    /// (`ChaCha8Rng::seed_from_u64`). Variables are drawn in topological order
    /// (ties by index), one uniform `f64` per variable per row, by inverse CDF.
    pub fn sample(&self, n_rows: usize, seed: u64) -> Result<Dataset> {
        let order = self.structure.topological_order()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::with_capacity(n_rows);
        let mut row = vec![0usize; self.n()];
        for _ in 0..n_rows {
            for &i in &order {
                let probs = &self.cpts[i][self.configuration(i, &row)];
                let u: f64 = rng.gen();
                row[i] = draw(probs, u);
            }
            rows.push(row.clone());
        }
        Dataset::from_rows(self.names.clone(), self.arities.clone(), &rows)
    }

    /// Arithmetic mean of [`log_predict`](Self::log_predict) over the rows of `test`.
    pub fn mean_test_loglik(&self, test: &Dataset) -> Result<f64> {
        if test.n_rows() == 0 {
            return Err(Error::InvalidData("test set is empty".into()));
        }
        if test.n_vars() != self.n() || test.arities().iter().zip(&self.arities).any(|(t, a)| t > a) {
            return Err(Error::InvalidData(
                "test data is incompatible with the network's variables or arities".into(),
            ));
        }
        let mut sum = 0.0;
        for row in test.rows() {
            sum += self.log_predict(&row)?;
        }
        Ok(sum / test.n_rows() as f64)
    }
}

fn draw(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // Rounding left u above the final cumulative sum: take the last
    // category with positive mass.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// `e(n) = ((n+1)/n)^n`, with `e(0) = 1`.
pub fn snml_e(n: u64) -> f64 {
    if n == 0 {
        1.0
    } else {
        let nf = n as f64;
        (nf * (1.0 / nf).ln_1p()).exp()
    }
}

fn normalize(weights: Vec<f64>) -> Vec<f64> {
    let s: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / s).collect()
}

/// Fits CPTs for `g` from `data` with the given rule.
pub fn fit(data: &Dataset, g: &DagStructure, rule: Parameterization) -> Result<BayesianNetwork> {
    if g.n() != data.n_vars() {
        return Err(Error::InvalidArgument("graph and dataset sizes differ".into()));
    }
    let arities = data.arities().to_vec();
    let mut cpts = Vec::with_capacity(g.n());
    for i in 0..g.n() {
        let r = arities[i];
        let q = configuration_count(&arities, g.parents(i))?;
        if q * r as u64 > MAX_CPT_CELLS {
            return Err(Error::ResourceLimit(format!(
                "CPT of {} would have {} cells",
                data.names()[i],
                q * r as u64
            )));
        }
        let counts = contingency(data, i, g.parents(i))?.dense_counts();
        let rows = counts
            .into_iter()
            .map(|row| {
                let nij: u64 = row.iter().sum();
                match rule {
                    Parameterization::MaxLikelihood if nij == 0 => vec![1.0 / r as f64; r],
                    Parameterization::MaxLikelihood => {
                        row.iter().map(|&c| c as f64 / nij as f64).collect()
                    }
                    Parameterization::Snml => normalize(
                        row.iter().map(|&c| snml_e(c) * (c as f64 + 1.0)).collect(),
                    ),
                    Parameterization::Bpp => {
                        let prior = 1.0 / (r as f64 * q as f64);
                        normalize(row.iter().map(|&c| c as f64 + prior).collect())
                    }
                }
            })
            .collect();
        cpts.push(rows);
    }
    BayesianNetwork::new(g.clone(), data.names().to_vec(), arities, cpts)
}

pub fn fit_ml(data: &Dataset, g: &DagStructure) -> Result<BayesianNetwork> {
    fit(data, g, Parameterization::MaxLikelihood)
}

pub fn fit_snml(data: &Dataset, g: &DagStructure) -> Result<BayesianNetwork> {
    fit(data, g, Parameterization::Snml)
}

pub fn fit_bpp(data: &Dataset, g: &DagStructure) -> Result<BayesianNetwork> {
    fit(data, g, Parameterization::Bpp)
}

/// Free parameters `sum_i q_i (r_i - 1)`, using every parent configuration.
pub fn parameter_count(g: &DagStructure, arities: &[usize]) -> u128 {
    (0..g.n())
        .map(|i| {
            let q: u128 = g.parents(i).iter().map(|&p| arities[p] as u128).product();
            q * (arities[i] as u128 - 1)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(col: &[usize], r: usize) -> Dataset {
        let rows: Vec<Vec<usize>> = col.iter().map(|&v| vec![v]).collect();
        Dataset::from_rows(vec!["x".into()], vec![r], &rows).unwrap()
    }

    fn close(a: &[f64], b: &[f64]) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-9, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn ml_rows() {
        let g = DagStructure::empty(1);
        close(&fit_ml(&single(&[0, 0, 1, 1], 2), &g).unwrap().cpt(0)[0], &[0.5, 0.5]);
        close(&fit_ml(&single(&[0, 0, 0, 1], 2), &g).unwrap().cpt(0)[0], &[0.75, 0.25]);
        // Parent value 1 never observed -> uniform row.
        let d = Dataset::from_rows(
            vec!["p".into(), "c".into()],
            vec![2, 3],
            &[vec![0, 0], vec![0, 2]],
        )
        .unwrap();
        let g = DagStructure::from_arcs(2, &[(0, 1)]).unwrap();
        let net = fit_ml(&d, &g).unwrap();
        close(&net.cpt(1)[1], &[1.0 / 3.0; 3]);
    }

    #[test]
    fn snml_rows() {
        assert_eq!(snml_e(0), 1.0);
        assert!((snml_e(1) - 2.0).abs() < 1e-15);
        assert!((snml_e(2) - 2.25).abs() < 1e-14);
        let g = DagStructure::empty(1);
        close(&fit_snml(&single(&[], 2), &g).unwrap().cpt(0)[0], &[0.5, 0.5]);
        close(&fit_snml(&single(&[0], 2), &g).unwrap().cpt(0)[0], &[0.8, 0.2]);
        close(
            &fit_snml(&single(&[0, 0], 2), &g).unwrap().cpt(0)[0],
            &[6.75 / 7.75, 1.0 / 7.75],
        );
    }

    #[test]
    fn bpp_rows() {
        let g = DagStructure::empty(1);
        close(&fit_bpp(&single(&[0], 2), &g).unwrap().cpt(0)[0], &[0.75, 0.25]);
        close(&fit_bpp(&single(&[], 2), &g).unwrap().cpt(0)[0], &[0.5, 0.5]);
        // q = 4 through two binary parents, no data.
        let d = Dataset::from_rows(
            vec!["a".into(), "b".into(), "c".into()],
            vec![2, 2, 2],
            &[],
        )
        .unwrap();
        let g = DagStructure::from_arcs(3, &[(0, 2), (1, 2)]).unwrap();
        let net = fit_bpp(&d, &g).unwrap();
        for row in net.cpt(2) {
            close(row, &[0.5, 0.5]);
        }
    }

    #[test]
    fn prediction() {
        let g = DagStructure::empty(3);
        let d = Dataset::from_rows(
            vec!["a".into(), "b".into(), "c".into()],
            vec![2; 3],
            &[vec![0, 0, 0], vec![1, 1, 1]],
        )
        .unwrap();
        let net = fit_ml(&d, &g).unwrap();
        let lp = net.log_predict(&[1, 0, 1]).unwrap();
        assert!((lp - 3.0 * 0.5f64.ln()).abs() < 1e-12);
        assert!((net.mean_test_loglik(&d).unwrap() - lp).abs() < 1e-12);
        assert!(net.log_predict(&[2, 0, 0]).is_err());
        assert!(net.log_predict(&[0, 0]).is_err());
        let empty = d.select_rows(&[]);
        assert!(net.mean_test_loglik(&empty).is_err());
        let one = d.select_rows(&[1]);
        assert_eq!(net.mean_test_loglik(&one).unwrap(), net.log_predict(&one.row(0)).unwrap());

        // Hand-built 2-node net: P(a) = [0.3, 0.7], P(b | a) rows [0.9, 0.1], [0.2, 0.8].
        let g = DagStructure::from_arcs(2, &[(0, 1)]).unwrap();
        let net = BayesianNetwork::new(
            g,
            vec!["a".into(), "b".into()],
            vec![2, 2],
            vec![vec![vec![0.3, 0.7]], vec![vec![0.9, 0.1], vec![0.2, 0.8]]],
        )
        .unwrap();
        assert!((net.log_predict(&[1, 0]).unwrap() - (0.7f64 * 0.2).ln()).abs() < 1e-12);
        // Deterministic chain with a matching row: only the root's marginal counts.
        let chain = BayesianNetwork::new(
            DagStructure::from_arcs(2, &[(0, 1)]).unwrap(),
            vec!["a".into(), "b".into()],
            vec![2, 2],
            vec![vec![vec![0.4, 0.6]], vec![vec![1.0, 0.0], vec![0.0, 1.0]]],
        )
        .unwrap();
        assert!((chain.log_predict(&[1, 1]).unwrap() - 0.6f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn network_validation() {
        let g = DagStructure::empty(1);
        let bad = BayesianNetwork::new(g.clone(), vec!["x".into()], vec![2], vec![vec![vec![0.5, 0.6]]]);
        assert!(bad.is_err());
        let bad = BayesianNetwork::new(g, vec!["x".into()], vec![2], vec![vec![vec![0.5, 0.5]; 2]]);
        assert!(bad.is_err());
    }

    #[test]
    fn sampling() {
        let g = DagStructure::empty(1);
        let det = BayesianNetwork::new(g.clone(), vec!["x".into()], vec![2], vec![vec![vec![1.0, 0.0]]])
            .unwrap();
        let d = det.sample(200, 7).unwrap();
        assert!(d.column(0).iter().all(|&v| v == 0));
        assert_eq!(det.sample(0, 7).unwrap().n_rows(), 0);

        let coin = BayesianNetwork::new(g, vec!["x".into()], vec![2], vec![vec![vec![0.5, 0.5]]]).unwrap();
        let a = coin.sample(100_000, 42).unwrap();
        let zeros = a.column(0).iter().filter(|&&v| v == 0).count() as f64 / 100_000.0;
        assert!((zeros - 0.5).abs() < 0.01);
        assert_eq!(a, coin.sample(100_000, 42).unwrap());
        assert_ne!(a, coin.sample(100_000, 43).unwrap());
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(parameter_count(&DagStructure::empty(5), &[2; 5]), 5);
        let full = DagStructure::from_arcs(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
        assert_eq!(parameter_count(&full, &[2; 3]), 7);
    }
}
