//! Experiment harness: regret table, SHD curves, predictive ranks and
//! parameter counts. Every experiment is a pure function of its spec, and
//! its CSV output is byte-identical across reruns.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{load_dataset, load_dataset_from_reader, Dataset};
use crate::error::{Error, Result};
use crate::learner::learn_exact;
use crate::model::{fit, parameter_count, BayesianNetwork, Parameterization};
use crate::netfile::NetworkDocument;
use crate::regret::{regret_table, RegretMethod, RegretRow};
use crate::scores::{Criterion, ScoreConfig};
use crate::structure::shd;

/// Bundled networks, addressable as `builtin:<name>`.
pub const BUILTIN_NETWORKS: [(&str, &str); 4] = [
    ("sprinkler5", include_str!("../data/networks/sprinkler5.json")),
    ("alarm6", include_str!("../data/networks/alarm6.json")),
    ("chain7", include_str!("../data/networks/chain7.json")),
    ("lattice8", include_str!("../data/networks/lattice8.json")),
];

/// Bundled datasets, addressable as `builtin:<name>`.
pub const BUILTIN_DATASETS: [(&str, &str); 3] = [
    ("weather", include_str!("../data/datasets/weather.csv")),
    ("clinic", include_str!("../data/datasets/clinic.csv")),
    ("survey", include_str!("../data/datasets/survey.csv")),
];

/// The four criteria compared in the experiments.
pub const COMPARED_CRITERIA: [Criterion; 4] =
    [Criterion::Bdeu, Criterion::Bic, Criterion::Fnml, Criterion::Qnml];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    RegretTable,
    ShdCurve,
    PredictRank,
    ParamCount,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::RegretTable => "regret-table",
            ExperimentKind::ShdCurve => "shd-curve",
            ExperimentKind::PredictRank => "predict-rank",
            ExperimentKind::ParamCount => "param-count",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            ExperimentKind::RegretTable,
            ExperimentKind::ShdCurve,
            ExperimentKind::PredictRank,
            ExperimentKind::ParamCount,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
    }
}

fn default_criteria() -> Vec<Criterion> {
    COMPARED_CRITERIA.to_vec()
}

fn default_sample_sizes() -> Vec<usize> {
    vec![10, 100, 1000, 10000]
}

fn default_repetitions() -> usize {
    50
}

fn default_fractions() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    #[serde(default = "default_criteria")]
    pub criteria: Vec<Criterion>,
    #[serde(default = "default_sample_sizes")]
    pub sample_sizes: Vec<usize>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    /// Base seed; repetition `i` uses `seed + i`.
    #[serde(default, alias = "seeds")]
    pub seed: u64,
    #[serde(default)]
    pub networks: Vec<String>,
    #[serde(default)]
    pub datasets: Vec<String>,
    #[serde(default = "default_fractions")]
    pub train_fractions: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_parents: Option<usize>,
    #[serde(default)]
    pub regret: RegretMethod,
}

impl ExperimentSpec {
    /// Spec with defaults for `kind`, using every bundled network or dataset.
    pub fn builtin(kind: ExperimentKind) -> Self {
        let networks = match kind {
            ExperimentKind::ShdCurve => BUILTIN_NETWORKS
                .iter()
                .map(|(n, _)| format!("builtin:{n}"))
                .collect(),
            _ => Vec::new(),
        };
        let datasets = match kind {
            ExperimentKind::PredictRank | ExperimentKind::ParamCount => BUILTIN_DATASETS
                .iter()
                .map(|(n, _)| format!("builtin:{n}"))
                .collect(),
            _ => Vec::new(),
        };
        ExperimentSpec {
            kind,
            criteria: default_criteria(),
            sample_sizes: default_sample_sizes(),
            repetitions: default_repetitions(),
            seed: 0,
            networks,
            datasets,
            train_fractions: default_fractions(),
            max_parents: None,
            regret: RegretMethod::SzpAllRange,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = serde_json::from_str(text)
            .map_err(|e| Error::InvalidData(format!("experiment spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::InvalidArgument("repetitions must be at least 1".into()));
        }
        if self.criteria.is_empty() && self.kind != ExperimentKind::RegretTable {
            return Err(Error::InvalidArgument("criteria list is empty".into()));
        }
        if self.sample_sizes.contains(&0) {
            return Err(Error::InvalidArgument("sample sizes must be positive".into()));
        }
        if let Some(f) = self.train_fractions.iter().find(|&&f| !(f > 0.0 && f < 1.0)) {
            return Err(Error::InvalidArgument(format!("train fraction {f} is not in (0, 1)")));
        }
        Ok(())
    }

    fn score_config(&self, criterion: Criterion) -> ScoreConfig {
        ScoreConfig::new(criterion).with_regret(self.regret)
    }
}

/// Resolves `builtin:<name>` or a path relative to `base`.
fn resolve(base: Option<&Path>, name: &str) -> PathBuf {
    let p = PathBuf::from(name);
    match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p,
    }
}

pub fn load_network(name: &str, base: Option<&Path>) -> Result<(String, BayesianNetwork)> {
    if let Some(key) = name.strip_prefix("builtin:") {
        let (label, text) = BUILTIN_NETWORKS
            .iter()
            .find(|(n, _)| *n == key)
            .ok_or_else(|| Error::InvalidArgument(format!("no bundled network named {key:?}")))?;
        return Ok((label.to_string(), NetworkDocument::parse(text)?.network()?));
    }
    let path = resolve(base, name);
    let doc = NetworkDocument::load(&path)?;
    Ok((stem(&path), doc.network()?))
}

pub fn load_bench_dataset(name: &str, base: Option<&Path>) -> Result<(String, Dataset)> {
    if let Some(key) = name.strip_prefix("builtin:") {
        let (label, text) = BUILTIN_DATASETS
            .iter()
            .find(|(n, _)| *n == key)
            .ok_or_else(|| Error::InvalidArgument(format!("no bundled dataset named {key:?}")))?;
        let origin = PathBuf::from(name);
        return Ok((label.to_string(), load_dataset_from_reader(text.as_bytes(), &origin, None)?));
    }
    let path = resolve(base, name);
    Ok((stem(&path), load_dataset(&path, None)?))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Competition ranks (1 = best, ties share the smallest rank).
pub fn tied_ranks(values: &[f64], higher_is_better: bool) -> Vec<usize> {
    values
        .iter()
        .map(|&v| {
            1 + values
                .iter()
                .filter(|&&w| if higher_is_better { w > v } else { w < v })
                .count()
        })
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard error of the mean (sample standard deviation / sqrt(n)).
fn stderr(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    (var / xs.len() as f64).sqrt()
}

/// Parameter rule used when predicting with a structure learned by `criterion`.
pub fn prediction_parameters(criterion: Criterion) -> Parameterization {
    match criterion {
        Criterion::Bdeu | Criterion::Bdq => Parameterization::Bpp,
        _ => Parameterization::Snml,
    }
}

pub fn run_regret_table() -> Vec<RegretRow> {
    regret_table()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShdRow {
    pub network: String,
    pub criterion: Criterion,
    pub n: usize,
    pub mean_shd: f64,
    pub stderr: f64,
    pub mean_rank: f64,
    /// Fraction of repetitions with SHD 0.
    pub exact_fraction: f64,
}

/// SHD between the learned and generating equivalence classes, averaged
/// over repetitions. Every criterion sees the same sampled data.
pub fn run_shd_curve(spec: &ExperimentSpec, base: Option<&Path>) -> Result<Vec<ShdRow>> {
    spec.validate()?;
    let mut out = Vec::new();
    for name in &spec.networks {
        let (label, net) = load_network(name, base)?;
        for &n in &spec.sample_sizes {
            let per_rep: Vec<Vec<usize>> = (0..spec.repetitions)
                .into_par_iter()
                .map(|rep| {
                    let data = net.sample(n, spec.seed + rep as u64)?;
                    spec.criteria
                        .iter()
                        .map(|&c| {
                            let learned = learn_exact(&data, &spec.score_config(c), spec.max_parents)?;
                            shd(&learned.network, net.structure())
                        })
                        .collect()
                })
                .collect::<Result<_>>()?;
            let ranks: Vec<Vec<usize>> = per_rep
                .iter()
                .map(|d| tied_ranks(&d.iter().map(|&x| x as f64).collect::<Vec<_>>(), false))
                .collect();
            for (ci, &criterion) in spec.criteria.iter().enumerate() {
                let values: Vec<f64> = per_rep.iter().map(|d| d[ci] as f64).collect();
                let rank: Vec<f64> = ranks.iter().map(|r| r[ci] as f64).collect();
                out.push(ShdRow {
                    network: label.clone(),
                    criterion,
                    n,
                    mean_shd: mean(&values),
                    stderr: stderr(&values),
                    mean_rank: mean(&rank),
                    exact_fraction: values.iter().filter(|&&v| v == 0.0).count() as f64
                        / values.len() as f64,
                });
            }
        }
    }
    Ok(out)
}

/// One learned model on one train/test split.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitOutcome {
    pub dataset: String,
    pub fraction: f64,
    pub permutation: usize,
    pub criterion: Criterion,
    pub mean_loglik: f64,
    pub parameters: u128,
}

/// For every dataset, permutation and fraction: split, learn with each
/// criterion, fit with the paired parameter rule, evaluate on the rest.
pub fn run_splits(spec: &ExperimentSpec, base: Option<&Path>) -> Result<Vec<SplitOutcome>> {
    spec.validate()?;
    let mut out = Vec::new();
    for name in &spec.datasets {
        let (label, data) = load_bench_dataset(name, base)?;
        let total = data.n_rows();
        let per_perm: Vec<Vec<SplitOutcome>> = (0..spec.repetitions)
            .into_par_iter()
            .map(|perm| {
                let mut order: Vec<usize> = (0..total).collect();
                order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed + perm as u64));
                let mut rows = Vec::new();
                for &fraction in &spec.train_fractions {
                    let n_train = (fraction * total as f64).round() as usize;
                    if n_train == 0 || n_train >= total {
                        return Err(Error::InvalidData(format!(
                            "{label}: fraction {fraction} of {total} rows leaves an empty split"
                        )));
                    }
                    let train = data.select_rows(&order[..n_train]);
                    let test = data.select_rows(&order[n_train..]);
                    for &criterion in &spec.criteria {
                        let learned = learn_exact(&train, &spec.score_config(criterion), spec.max_parents)?;
                        let net = fit(&train, &learned.network, prediction_parameters(criterion))?;
                        rows.push(SplitOutcome {
                            dataset: label.clone(),
                            fraction,
                            permutation: perm,
                            criterion,
                            mean_loglik: net.mean_test_loglik(&test)?,
                            parameters: parameter_count(&learned.network, train.arities()),
                        });
                    }
                }
                Ok(rows)
            })
            .collect::<Result<_>>()?;
        out.extend(per_perm.into_iter().flatten());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankRow {
    pub dataset: String,
    pub criterion: Criterion,
    pub fraction: f64,
    pub mean_loglik: f64,
    pub mean_rank: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamRow {
    pub dataset: String,
    pub criterion: Criterion,
    pub fraction: f64,
    pub mean_parameters: f64,
}

/// Groups outcomes by (dataset, fraction) in first-appearance order.
fn groups(outcomes: &[SplitOutcome]) -> Vec<(String, f64)> {
    let mut keys: Vec<(String, f64)> = Vec::new();
    for o in outcomes {
        if !keys.iter().any(|(d, f)| *d == o.dataset && *f == o.fraction) {
            keys.push((o.dataset.clone(), o.fraction));
        }
    }
    keys
}

pub fn summarize_ranks(outcomes: &[SplitOutcome], criteria: &[Criterion]) -> Vec<RankRow> {
    let mut out = Vec::new();
    for (dataset, fraction) in groups(outcomes) {
        let cell: Vec<&SplitOutcome> = outcomes
            .iter()
            .filter(|o| o.dataset == dataset && o.fraction == fraction)
            .collect();
        let perms: Vec<usize> = {
            let mut p: Vec<usize> = cell.iter().map(|o| o.permutation).collect();
            p.dedup();
            p
        };
        let mut rank_sums = vec![0.0; criteria.len()];
        let mut ll_sums = vec![0.0; criteria.len()];
        for &p in &perms {
            let ll: Vec<f64> = criteria
                .iter()
                .map(|c| {
                    cell.iter()
                        .find(|o| o.permutation == p && o.criterion == *c)
                        .map(|o| o.mean_loglik)
                        .expect("every criterion evaluated")
                })
                .collect();
            for (ci, r) in tied_ranks(&ll, true).into_iter().enumerate() {
                rank_sums[ci] += r as f64;
                ll_sums[ci] += ll[ci];
            }
        }
        let k = perms.len() as f64;
        for (ci, &criterion) in criteria.iter().enumerate() {
            out.push(RankRow {
                dataset: dataset.clone(),
                criterion,
                fraction,
                mean_loglik: ll_sums[ci] / k,
                mean_rank: rank_sums[ci] / k,
            });
        }
    }
    out
}

pub fn summarize_parameters(outcomes: &[SplitOutcome], criteria: &[Criterion]) -> Vec<ParamRow> {
    let mut out = Vec::new();
    for (dataset, fraction) in groups(outcomes) {
        for &criterion in criteria {
            let counts: Vec<f64> = outcomes
                .iter()
                .filter(|o| o.dataset == dataset && o.fraction == fraction && o.criterion == criterion)
                .map(|o| o.parameters as f64)
                .collect();
            out.push(ParamRow {
                dataset: dataset.clone(),
                criterion,
                fraction,
                mean_parameters: mean(&counts),
            });
        }
    }
    out
}

pub fn run_predict_rank(spec: &ExperimentSpec, base: Option<&Path>) -> Result<Vec<RankRow>> {
    Ok(summarize_ranks(&run_splits(spec, base)?, &spec.criteria))
}

pub fn run_param_count(spec: &ExperimentSpec, base: Option<&Path>) -> Result<Vec<ParamRow>> {
    Ok(summarize_parameters(&run_splits(spec, base)?, &spec.criteria))
}

/// Rendered experiment output: `(file name, contents)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub files: Vec<(String, String)>,
}

fn fmt_fraction(f: f64) -> String {
    format!("{f:.2}")
}

pub fn regret_csv(rows: &[RegretRow]) -> String {
    let mut s = String::from("N,r,szp1,szp2,exact\n");
    for r in rows {
        s += &format!(
            "{},{},{:.2},{:.2},{:.2}\n",
            r.n, r.r, r.szp_small_r, r.szp_all_range, r.exact
        );
    }
    s
}

pub fn shd_csv(rows: &[ShdRow]) -> String {
    let mut s = String::from("network,criterion,N,meanSHD,stderr\n");
    for r in rows {
        s += &format!(
            "{},{},{},{:.4},{:.4}\n",
            r.network, r.criterion, r.n, r.mean_shd, r.stderr
        );
    }
    s
}

pub fn shd_rank_csv(rows: &[ShdRow]) -> String {
    let mut s = String::from("network,criterion,N,meanRank,exactFraction\n");
    for r in rows {
        s += &format!(
            "{},{},{},{:.4},{:.4}\n",
            r.network, r.criterion, r.n, r.mean_rank, r.exact_fraction
        );
    }
    s
}

pub fn rank_csv(rows: &[RankRow]) -> String {
    let mut s = String::from("dataset,criterion,fraction,meanLogLik,rank\n");
    for r in rows {
        s += &format!(
            "{},{},{},{:.6},{:.4}\n",
            r.dataset,
            r.criterion,
            fmt_fraction(r.fraction),
            r.mean_loglik,
            r.mean_rank
        );
    }
    s
}

pub fn param_csv(rows: &[ParamRow]) -> String {
    let mut s = String::from("dataset,criterion,fraction,meanParamCount\n");
    for r in rows {
        s += &format!(
            "{},{},{},{:.4}\n",
            r.dataset,
            r.criterion,
            fmt_fraction(r.fraction),
            r.mean_parameters
        );
    }
    s
}

/// Runs the experiment and renders its CSV files plus a manifest.
pub fn run_experiment(spec: &ExperimentSpec, base: Option<&Path>) -> Result<ExperimentOutput> {
    spec.validate()?;
    let mut files = match spec.kind {
        ExperimentKind::RegretTable => vec![("regret-table.csv".to_string(), regret_csv(&run_regret_table()))],
        ExperimentKind::ShdCurve => {
            let rows = run_shd_curve(spec, base)?;
            vec![
                ("shd-curve.csv".to_string(), shd_csv(&rows)),
                ("shd-rank.csv".to_string(), shd_rank_csv(&rows)),
            ]
        }
        ExperimentKind::PredictRank => {
            vec![("predict-rank.csv".to_string(), rank_csv(&run_predict_rank(spec, base)?))]
        }
        ExperimentKind::ParamCount => {
            vec![("param-count.csv".to_string(), param_csv(&run_param_count(spec, base)?))]
        }
    };
    let manifest = serde_json::json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "kind": spec.kind.as_str(),
        "baseSeed": spec.seed,
        "seedRule": "repetition i uses baseSeed + i",
        "spec": spec,
        "outputs": files.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
    });
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    files.push(("manifest.json".to_string(), text));
    Ok(ExperimentOutput { files })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_share_minimum_on_ties() {
        assert_eq!(tied_ranks(&[-1.0, -2.0, -1.0, -3.0], true), vec![1, 3, 1, 4]);
        assert_eq!(tied_ranks(&[2.0, 0.0, 0.0], false), vec![3, 1, 1]);
        assert_eq!(tied_ranks(&[5.0], true), vec![1]);
    }

    #[test]
    fn regret_rows() {
        let rows = run_regret_table();
        assert_eq!(rows.len(), 12);
        let csv = regret_csv(&rows);
        assert!(csv.contains("50,10,13.24,13.26,13.24\n"));
        assert!(csv.contains("5000,10000,6247.83,6043.16,6043.16\n"));
        assert!(csv.contains("500,10,22.67,22.69,22.67\n"));
    }

    #[test]
    fn spec_parsing() {
        let spec = ExperimentSpec::parse(r#"{"kind": "shd-curve", "networks": ["a.json"], "seeds": 7}"#).unwrap();
        assert_eq!(spec.seed, 7);
        assert_eq!(spec.repetitions, 50);
        assert_eq!(spec.criteria, COMPARED_CRITERIA.to_vec());
        assert_eq!(spec.train_fractions.len(), 9);
        assert!(ExperimentSpec::parse(r#"{"kind": "shd-curve", "repetitions": 0}"#).is_err());
        assert!(ExperimentSpec::parse(r#"{"kind": "nope"}"#).is_err());
        assert!(ExperimentSpec::parse(r#"{"kind": "param-count", "trainFractions": [1.0]}"#).is_err());
        assert!(ExperimentSpec::parse(r#"{"kind": "param-count", "bogus": 1}"#).is_err());
    }

    #[test]
    fn builtins_load() {
        for (name, _) in BUILTIN_NETWORKS {
            let (_, net) = load_network(&format!("builtin:{name}"), None).unwrap();
            assert!((5..=8).contains(&net.n()));
            assert!(net.arities().iter().all(|&a| (2..=3).contains(&a)));
        }
        for (name, _) in BUILTIN_DATASETS {
            let (_, d) = load_bench_dataset(&format!("builtin:{name}"), None).unwrap();
            assert!(d.n_rows() >= 100);
        }
        assert!(load_network("builtin:missing", None).is_err());
    }

    #[test]
    fn shd_curve_shape_and_determinism() {
        let spec = ExperimentSpec {
            networks: vec!["builtin:sprinkler5".into()],
            sample_sizes: vec![50],
            repetitions: 1,
            seed: 3,
            ..ExperimentSpec::builtin(ExperimentKind::ShdCurve)
        };
        let a = run_experiment(&spec, None).unwrap();
        assert_eq!(a, run_experiment(&spec, None).unwrap());
        let rows = run_shd_curve(&spec, None).unwrap();
        assert_eq!(rows.len(), 4);
    }

    #[test]
    fn single_criterion_ranks_first() {
        let spec = ExperimentSpec {
            criteria: vec![Criterion::Qnml],
            repetitions: 2,
            train_fractions: vec![0.5],
            datasets: vec!["builtin:weather".into()],
            ..ExperimentSpec::builtin(ExperimentKind::PredictRank)
        };
        let rows = run_predict_rank(&spec, None).unwrap();
        assert!(rows.iter().all(|r| r.mean_rank == 1.0));
    }

    #[test]
    fn identical_models_tie() {
        // The same criterion twice learns the same network and parameters.
        let spec = ExperimentSpec {
            criteria: vec![Criterion::Bic, Criterion::Bic],
            repetitions: 2,
            train_fractions: vec![0.3],
            datasets: vec!["builtin:clinic".into()],
            ..ExperimentSpec::builtin(ExperimentKind::PredictRank)
        };
        let rows = run_predict_rank(&spec, None).unwrap();
        assert!(rows.iter().all(|r| r.mean_rank == 1.0));
    }
}
