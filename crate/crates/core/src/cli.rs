//! Command-line front end. Exit codes: 0 success, 1 usage error,
//! 2 data or validation error, 3 resource guard.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};

use crate::bench::{prediction_parameters, regret_csv, run_experiment, ExperimentKind, ExperimentSpec};
use crate::dataset::{load_dataset, load_datasets_shared};
use crate::error::{Error, Result};
use crate::learner::learn_exact;
use crate::model::{fit, Parameterization};
use crate::netfile::NetworkDocument;
use crate::regret::{regret_bruteforce_oracle, regret_exact, regret_szp_all_range, regret_szp_small_r, regret_table, RegretMethod};
use crate::scores::{Criterion, ScoreConfig, Scorer};
use crate::structure::shd;

#[derive(Debug, Parser)]
#[command(name = "qnml", version, about = "Bayesian network structure learning with qNML and companion scores")]
pub struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true, value_name = "K")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Multinomial regret ln C(N, r).
    Regret(RegretArgs),
    /// Per-variable and total score of a network on a dataset.
    Score(ScoreArgs),
    /// Exact structure search.
    Learn(LearnArgs),
    /// Draw rows from a network with CPTs.
    Sample(SampleArgs),
    /// Structural Hamming distance between the equivalence classes of two networks.
    Shd(ShdArgs),
    /// Learn on a training file and report mean test log-likelihood.
    Predict(PredictArgs),
    /// Run an experiment spec and write its CSV files.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct RegretArgs {
    /// Sample size.
    #[arg(long, required_unless_present = "table1", conflicts_with = "table1")]
    pub n: Option<u64>,
    /// Alphabet size.
    #[arg(long, required_unless_present = "table1", conflicts_with = "table1")]
    pub r: Option<u64>,
    /// exact, szp1 (small-r expansion), szp2 (all-range), or brute (enumeration).
    #[arg(long, default_value = "exact")]
    pub method: String,
    /// Print the reference regret grid as CSV.
    #[arg(long)]
    pub table1: bool,
}

#[derive(Debug, Args)]
pub struct ScoringArgs {
    /// bic, bdeu, fnml, qnml or bdq.
    #[arg(long, default_value = "qnml")]
    pub criterion: Criterion,
    /// BDeu equivalent sample size, or the BDq Dirichlet parameter.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Regret method for fNML and qNML: exact, szp1 or szp2.
    #[arg(long, default_value = "szp2")]
    pub regret: RegretMethod,
}

impl ScoringArgs {
    fn usage_problem(&self) -> Option<String> {
        match (self.alpha, self.criterion) {
            (Some(_), Criterion::Bdeu | Criterion::Bdq) | (None, _) => None,
            (Some(_), c) => Some(format!("--alpha does not apply to --criterion {c}")),
        }
    }

    fn config(&self) -> Result<ScoreConfig> {
        let mut cfg = ScoreConfig::new(self.criterion).with_regret(self.regret);
        if let Some(a) = self.alpha {
            match self.criterion {
                Criterion::Bdeu => cfg.bdeu_alpha = a,
                Criterion::Bdq => cfg.bdq_alpha = a,
                c => {
                    return Err(Error::InvalidArgument(format!("--alpha does not apply to {c}")));
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Dataset CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// Network document (JSON).
    #[arg(long)]
    pub network: PathBuf,
    #[command(flatten)]
    pub scoring: ScoringArgs,
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    /// Dataset CSV.
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    /// Maximum number of parents per variable.
    #[arg(long)]
    pub max_parents: Option<usize>,
    /// Output network document.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write CPTs fitted with this rule: ml, snml or bpp.
    #[arg(long)]
    pub fit: Option<Parameterization>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Network document with CPTs.
    #[arg(long)]
    pub model: PathBuf,
    /// Number of rows.
    #[arg(long)]
    pub n: usize,
    /// Random seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ShdArgs {
    /// First network document.
    #[arg(long)]
    pub a: PathBuf,
    /// Second network document.
    #[arg(long)]
    pub b: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Training CSV.
    #[arg(long)]
    pub train: PathBuf,
    /// Test CSV with the same header.
    #[arg(long)]
    pub test: PathBuf,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    /// Maximum number of parents per variable.
    #[arg(long)]
    pub max_parents: Option<usize>,
    /// Parameter rule: snml, bpp or ml (default: bpp for bdeu and bdq, snml otherwise).
    #[arg(long)]
    pub params: Option<Parameterization>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Spec file, or a built-in kind: regret-table, shd-curve, predict-rank, param-count.
    #[arg(long)]
    pub spec: String,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Record wall time in the manifest (makes it differ between runs).
    #[arg(long)]
    pub timing: bool,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let scoring = match &cli.command {
        Command::Score(a) => Some(&a.scoring),
        Command::Learn(a) => Some(&a.scoring),
        Command::Predict(a) => Some(&a.scoring),
        _ => None,
    };
    if let Some(msg) = scoring.and_then(ScoringArgs::usage_problem) {
        let _ = Cli::command().error(ErrorKind::ArgumentConflict, msg).print();
        return 1;
    }
    if let Some(k) = cli.threads {
        if k == 0 {
            eprintln!("error: --threads must be at least 1");
            return 1;
        }
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    let stdout = std::io::stdout();
    match dispatch(cli.command, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

pub fn dispatch(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Regret(a) => cmd_regret(a, out),
        Command::Score(a) => cmd_score(a, out),
        Command::Learn(a) => cmd_learn(a, out),
        Command::Sample(a) => cmd_sample(a),
        Command::Shd(a) => cmd_shd(a, out),
        Command::Predict(a) => cmd_predict(a, out),
        Command::Bench(a) => cmd_bench(a, out),
    }
}

fn cmd_regret(a: RegretArgs, out: &mut dyn Write) -> Result<()> {
    if a.table1 {
        return write_out(out, &regret_csv(&regret_table()));
    }
    let (n, r) = (a.n.unwrap_or(0), a.r.unwrap_or(0));
    let value = match a.method.as_str() {
        "brute" => regret_bruteforce_oracle(n, r)?,
        m => match m.parse::<RegretMethod>()? {
            RegretMethod::Exact => regret_exact(n, r)?,
            RegretMethod::SzpSmallR => regret_szp_small_r(n, r)?,
            RegretMethod::SzpAllRange => regret_szp_all_range(n, r)?,
        },
    };
    write_out(out, &format!("{value:.6}\n"))
}

fn score_report(names: &[String], per_variable: &[f64]) -> String {
    let mut s = String::from("variable,score\n");
    for (name, v) in names.iter().zip(per_variable) {
        s += &format!("{name},{v:.9}\n");
    }
    s += &format!("total,{:.9}\n", per_variable.iter().sum::<f64>());
    s
}

fn cmd_score(a: ScoreArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = a.scoring.config()?;
    let doc = NetworkDocument::load(&a.network)?;
    let data = doc.align(&load_dataset(&a.data, None)?)?;
    let g = doc.structure()?;
    let per_variable = Scorer::new(&data, cfg)?.per_variable(&g)?;
    write_out(out, &score_report(data.names(), &per_variable))
}

fn cmd_learn(a: LearnArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = a.scoring.config()?;
    let data = load_dataset(&a.data, None)?;
    let result = learn_exact(&data, &cfg, a.max_parents)?;
    let names = data.names().to_vec();
    let doc = match a.fit {
        Some(rule) => NetworkDocument::from_network(&fit(&data, &result.network, rule)?),
        None => NetworkDocument::from_structure(&result.network, &names, data.arities()),
    };
    doc.save(&a.out)?;
    write_out(out, &score_report(&names, &result.per_variable))
}

fn cmd_sample(a: SampleArgs) -> Result<()> {
    let net = NetworkDocument::load(&a.model)?.network()?;
    net.sample(a.n, a.seed)?.save_csv(&a.out)
}

fn cmd_shd(a: ShdArgs, out: &mut dyn Write) -> Result<()> {
    let da = NetworkDocument::load(&a.a)?;
    let db = NetworkDocument::load(&a.b)?;
    let ga = da.structure()?;
    let gb = db
        .structure_in_order(&da.names())
        .map_err(|e| Error::format(&a.b, e.to_string()))?;
    write_out(out, &format!("{}\n", shd(&ga, &gb)?))
}

fn cmd_predict(a: PredictArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = a.scoring.config()?;
    let sets = load_datasets_shared(&[a.train.as_path(), a.test.as_path()])?;
    let (train, test) = (&sets[0], &sets[1]);
    let learned = learn_exact(train, &cfg, a.max_parents)?;
    let rule = a.params.unwrap_or_else(|| prediction_parameters(cfg.criterion));
    let net = fit(train, &learned.network, rule)?;
    write_out(out, &format!("{:.6}\n", net.mean_test_loglik(test)?))
}

fn load_spec(spec: &str) -> Result<(ExperimentSpec, Option<PathBuf>)> {
    if let Some(kind) = ExperimentKind::parse(spec) {
        if !Path::new(spec).exists() {
            return Ok((ExperimentSpec::builtin(kind), None));
        }
    }
    let path = Path::new(spec);
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parsed = ExperimentSpec::parse(&text).map_err(|e| Error::format(path, e.to_string()))?;
    Ok((parsed, path.parent().map(Path::to_path_buf)))
}

fn cmd_bench(a: BenchArgs, out: &mut dyn Write) -> Result<()> {
    let (spec, base) = load_spec(&a.spec)?;
    let start = Instant::now();
    let mut result = run_experiment(&spec, base.as_deref())?;
    if a.timing {
        let (_, manifest) = result.files.last_mut().expect("manifest present");
        let mut value: serde_json::Value = serde_json::from_str(manifest).expect("manifest is JSON");
        value["wallTimeSeconds"] = serde_json::json!(start.elapsed().as_secs_f64());
        *manifest = serde_json::to_string_pretty(&value).expect("manifest serializes") + "\n";
    }
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    for (name, contents) in &result.files {
        let path = a.out.join(name);
        std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        write_out(out, &format!("{}\n", path.display()))?;
    }
    Ok(())
}
