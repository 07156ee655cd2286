//! Quotient normalized maximum likelihood (qNML) and companion scores for
//! Bayesian network structure learning.
//!
//! The crate covers categorical data ingestion, multinomial regret
//! computation, the BIC, BDeu, fNML, qNML and BDq local scores, exact
//! dynamic-programming structure search, equivalence-class utilities with
//! structural Hamming distance, CPT fitting, sampling and prediction, and an
//! experiment harness.

pub mod bench;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod learner;
pub mod model;
pub mod netfile;
pub mod regret;
pub mod scores;
pub mod structure;

pub use dataset::{contingency, empirical_cond_entropy, load_dataset, ContingencyTable, Dataset};
pub use error::{Error, Result};
pub use learner::{compute_local_scores, learn_bruteforce, learn_exact, LearnResult, LocalScoreTable};
pub use model::{BayesianNetwork, Parameterization};
pub use netfile::NetworkDocument;
pub use regret::{RegretCache, RegretMethod};
pub use scores::{total_score, Criterion, ScoreConfig, Scorer};
pub use structure::{shd, to_cpdag, Cpdag, DagStructure};
