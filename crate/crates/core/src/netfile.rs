//! JSON network documents.
//!
//! ```json
//! {
//!   "variables": [{"name": "rain", "arity": 2}, {"name": "wet", "arity": 2}],
//!   "parents": [[], ["rain"]],
//!   "cpts": [[[0.8, 0.2]], [[0.9, 0.1], [0.2, 0.8]]]
//! }
//! ```
//!
//! `parents` and `cpts` are aligned with `variables`. CPT rows follow the
//! dataset configuration order: parents in variable order, last one fastest.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::BayesianNetwork;
use crate::structure::DagStructure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub arity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDocument {
    pub variables: Vec<VariableSpec>,
    pub parents: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cpts: Option<Vec<Vec<Vec<f64>>>>,
}

impl NetworkDocument {
    pub fn names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.name.clone()).collect()
    }

    pub fn arities(&self) -> Vec<usize> {
        self.variables.iter().map(|v| v.arity).collect()
    }

    pub fn structure(&self) -> Result<DagStructure> {
        let names = self.names();
        if self.parents.len() != names.len() {
            return Err(Error::InvalidData(format!(
                "{} variables but {} parent lists",
                names.len(),
                self.parents.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(Error::InvalidData(format!("variable {dup:?} declared twice")));
        }
        if let Some(v) = self.variables.iter().find(|v| v.arity == 0) {
            return Err(Error::InvalidData(format!("variable {:?} has arity 0", v.name)));
        }
        let parents = self
            .parents
            .iter()
            .map(|ps| {
                ps.iter()
                    .map(|p| {
                        names
                            .iter()
                            .position(|n| n == p)
                            .ok_or_else(|| Error::InvalidData(format!("unknown parent {p:?}")))
                    })
                    .collect::<Result<Vec<usize>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        DagStructure::new(parents)?.with_names(names)
    }

    pub fn network(&self) -> Result<BayesianNetwork> {
        let cpts = self
            .cpts
            .clone()
            .ok_or_else(|| Error::InvalidData("network document has no CPTs".into()))?;
        BayesianNetwork::new(self.structure()?, self.names(), self.arities(), cpts)
    }

    pub fn from_structure(g: &DagStructure, names: &[String], arities: &[usize]) -> Self {
        NetworkDocument {
            variables: names
                .iter()
                .zip(arities)
                .map(|(n, &a)| VariableSpec {
                    name: n.clone(),
                    arity: a,
                })
                .collect(),
            parents: (0..g.n())
                .map(|i| g.parents(i).iter().map(|&p| names[p].clone()).collect())
                .collect(),
            cpts: None,
        }
    }

    pub fn from_network(net: &BayesianNetwork) -> Self {
        let mut doc = Self::from_structure(net.structure(), net.names(), net.arities());
        doc.cpts = Some(net.cpts().to_vec());
        doc
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::format(path, e.to_string()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidData(format!("network document: {e}")))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("network documents serialize");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    /// Reorders a dataset's columns to this document's variables and applies
    /// the declared arities.
    pub fn align(&self, data: &Dataset) -> Result<Dataset> {
        data.select_columns(&self.names())?.with_arities(&self.arities())
    }

    /// Structure with variables permuted into `names` order.
    pub fn structure_in_order(&self, names: &[String]) -> Result<DagStructure> {
        let own = self.names();
        if own.len() != names.len() {
            return Err(Error::InvalidData("networks have different variable sets".into()));
        }
        let perm: Vec<usize> = names
            .iter()
            .map(|n| {
                own.iter()
                    .position(|o| o == n)
                    .ok_or_else(|| Error::InvalidData(format!("variable {n:?} missing from network")))
            })
            .collect::<Result<_>>()?;
        let g = self.structure()?;
        let parents = perm
            .iter()
            .map(|&old| {
                g.parents(old)
                    .iter()
                    .map(|&p| perm.iter().position(|&q| q == p).expect("permutation"))
                    .collect()
            })
            .collect();
        DagStructure::new(parents)?.with_names(names.to_vec())
    }
}
