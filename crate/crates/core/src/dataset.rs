//! Categorical datasets and contingency counts.
//!
//! Values are stored column-major as category indices. Parent configurations
//! are encoded mixed-radix over the parents in ascending variable order with
//! the last parent varying fastest, so for parents `[p1, p2]` the
//! configuration index is `x[p1] * r[p2] + x[p2]`.

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Largest number of joint configurations any table may address.
pub const MAX_CONFIGURATIONS: u64 = 1 << 62;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    names: Vec<String>,
    arities: Vec<usize>,
    labels: Vec<Vec<String>>,
    columns: Vec<Vec<u32>>,
    n_rows: usize,
}

impl Dataset {
    /// Builds a dataset from row-major category indices. Labels default to
    /// the decimal index of each category.
    pub fn from_rows(names: Vec<String>, arities: Vec<usize>, rows: &[Vec<usize>]) -> Result<Self> {
        let n = names.len();
        if n == 0 {
            return Err(Error::InvalidData("a dataset needs at least one variable".into()));
        }
        if arities.len() != n {
            return Err(Error::InvalidData(format!(
                "{} names but {} arities",
                n,
                arities.len()
            )));
        }
        let mut columns = vec![Vec::with_capacity(rows.len()); n];
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidData(format!(
                    "row {} has {} values, expected {}",
                    r,
                    row.len(),
                    n
                )));
            }
            for (i, &v) in row.iter().enumerate() {
                columns[i].push(v as u32);
            }
        }
        let labels = arities
            .iter()
            .map(|&a| (0..a).map(|v| v.to_string()).collect())
            .collect();
        Self::from_parts(names, arities, labels, columns)
    }

    pub(crate) fn from_parts(
        names: Vec<String>,
        arities: Vec<usize>,
        labels: Vec<Vec<String>>,
        columns: Vec<Vec<u32>>,
    ) -> Result<Self> {
        let n_rows = columns.first().map_or(0, Vec::len);
        for (i, col) in columns.iter().enumerate() {
            let r = arities[i];
            if r == 0 {
                return Err(Error::InvalidData(format!("variable {} has arity 0", names[i])));
            }
            if r > u32::MAX as usize {
                return Err(Error::InvalidData(format!("arity of {} too large", names[i])));
            }
            if col.len() != n_rows {
                return Err(Error::InvalidData("columns have different lengths".into()));
            }
            if let Some(bad) = col.iter().find(|&&v| v as usize >= r) {
                return Err(Error::InvalidData(format!(
                    "value {} out of range for {} (arity {})",
                    bad, names[i], r
                )));
            }
        }
        Ok(Dataset {
            names,
            arities,
            labels,
            columns,
            n_rows,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn arities(&self) -> &[usize] {
        &self.arities
    }

    pub fn arity(&self, i: usize) -> usize {
        self.arities[i]
    }

    /// Category labels per variable. A column may have fewer labels than its
    /// arity when extra categories were declared but never observed.
    pub fn labels(&self) -> &[Vec<String>] {
        &self.labels
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn column(&self, i: usize) -> &[u32] {
        &self.columns[i]
    }

    pub fn value(&self, row: usize, var: usize) -> usize {
        self.columns[var][row] as usize
    }

    pub fn row(&self, row: usize) -> Vec<usize> {
        self.columns.iter().map(|c| c[row] as usize).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.n_rows).map(move |r| self.row(r))
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// New dataset with the given rows (in the given order); arities are kept.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let columns = self
            .columns
            .iter()
            .map(|c| rows.iter().map(|&r| c[r]).collect())
            .collect();
        Dataset {
            names: self.names.clone(),
            arities: self.arities.clone(),
            labels: self.labels.clone(),
            columns,
            n_rows: rows.len(),
        }
    }

    /// Reorders (or subsets) the columns by name.
    pub fn select_columns(&self, names: &[String]) -> Result<Dataset> {
        let mut idx = Vec::with_capacity(names.len());
        for name in names {
            let i = self
                .index_of(name)
                .ok_or_else(|| Error::InvalidData(format!("dataset has no column named {name:?}")))?;
            idx.push(i);
        }
        Self::from_parts(
            names.to_vec(),
            idx.iter().map(|&i| self.arities[i]).collect(),
            idx.iter().map(|&i| self.labels[i].clone()).collect(),
            idx.iter().map(|&i| self.columns[i].clone()).collect(),
        )
    }

    /// Raises arities to the given values; lowering is rejected.
    pub fn with_arities(mut self, arities: &[usize]) -> Result<Dataset> {
        if arities.len() != self.n_vars() {
            return Err(Error::InvalidData("arity list length mismatch".into()));
        }
        for (i, &a) in arities.iter().enumerate() {
            if a < self.arities[i] {
                return Err(Error::InvalidData(format!(
                    "declared arity {} of {} is below the {} categories present",
                    a, self.names[i], self.arities[i]
                )));
            }
            self.arities[i] = a;
        }
        Ok(self)
    }

    /// Writes the dataset as CSV using category labels (falling back to the
    /// index for unlabeled categories).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let wrap = |e: csv::Error| Error::InvalidData(format!("csv write: {e}"));
        w.write_record(&self.names).map_err(wrap)?;
        for r in 0..self.n_rows {
            let rec: Vec<String> = (0..self.n_vars())
                .map(|i| {
                    let v = self.value(r, i);
                    self.labels[i].get(v).cloned().unwrap_or_else(|| v.to_string())
                })
                .collect();
            w.write_record(&rec).map_err(wrap)?;
        }
        w.flush().map_err(|e| Error::InvalidData(format!("csv write: {e}")))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Mixed-radix parent configuration index of every row, and the number of
    /// configurations `q`.
    pub fn configuration_indices(&self, vars: &[usize]) -> Result<(Vec<u64>, u64)> {
        let q = self.configuration_count(vars)?;
        let mut idx = vec![0u64; self.n_rows];
        for &p in vars {
            let r = self.arities[p] as u64;
            for (j, &v) in idx.iter_mut().zip(&self.columns[p]) {
                *j = *j * r + v as u64;
            }
        }
        Ok((idx, q))
    }

    /// Product of arities over `vars`, guarded against overflow.
    pub fn configuration_count(&self, vars: &[usize]) -> Result<u64> {
        let mut q: u64 = 1;
        for &p in vars {
            if p >= self.n_vars() {
                return Err(Error::InvalidArgument(format!("variable index {p} out of range")));
            }
            q = q
                .checked_mul(self.arities[p] as u64)
                .filter(|&q| q <= MAX_CONFIGURATIONS)
                .ok_or_else(|| {
                    Error::ResourceLimit("parent configuration count exceeds 2^62".into())
                })?;
        }
        Ok(q)
    }
}

/// Reads a CSV file with a header row into a [`Dataset`].
///
/// Distinct strings in each column are sorted lexicographically and mapped to
/// indices `0..`. With `declared_arities`, a column's arity is the larger of
/// the declared value and the observed distinct count; a declaration below
/// the observed count is an error.
pub fn load_dataset(path: &Path, declared_arities: Option<&[usize]>) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    load_dataset_from_reader(file, path, declared_arities)
}

/// Like [`load_dataset`] but reads from any source; `origin` only labels errors.
pub fn load_dataset_from_reader<R: Read>(
    reader: R,
    origin: &Path,
    declared_arities: Option<&[usize]>,
) -> Result<Dataset> {
    let path = origin;
    let (names, raw) = read_raw(reader, path)?;
    let vocab = vocabulary(&names, std::slice::from_ref(&raw));
    let data = encode(path, names, &raw, &vocab)?;
    match declared_arities {
        Some(a) => data.with_arities(a),
        None => Ok(data),
    }
}

/// Loads several files that share a header, mapping values through one
/// vocabulary built from all of them so indices agree across files.
pub fn load_datasets_shared(paths: &[&Path]) -> Result<Vec<Dataset>> {
    let mut names: Option<Vec<String>> = None;
    let mut raws = Vec::with_capacity(paths.len());
    for path in paths {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let (n, raw) = read_raw(file, path)?;
        match &names {
            Some(prev) if *prev != n => {
                return Err(Error::format(*path, "header differs from the first file"));
            }
            Some(_) => {}
            None => names = Some(n),
        }
        raws.push(raw);
    }
    let names = names.unwrap_or_default();
    let vocab = vocabulary(&names, &raws);
    paths
        .iter()
        .zip(&raws)
        .map(|(p, raw)| encode(p, names.clone(), raw, &vocab))
        .collect()
}

fn read_raw<R: Read>(file: R, path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut records = reader.records();
    let header = match records.next() {
        None => return Err(Error::format(path, "empty file")),
        Some(h) => h.map_err(|e| Error::format(path, e.to_string()))?,
    };
    let names: Vec<String> = header.iter().map(str::to_string).collect();
    if names.iter().any(String::is_empty) {
        return Err(Error::format(path, "empty variable name in header"));
    }
    let unique: BTreeSet<&String> = names.iter().collect();
    if unique.len() != names.len() {
        return Err(Error::format(path, "duplicate variable name in header"));
    }
    let mut rows = Vec::new();
    for (line, rec) in records.enumerate() {
        let rec = rec.map_err(|e| Error::format(path, e.to_string()))?;
        if rec.len() != names.len() {
            return Err(Error::format(
                path,
                format!("row {} has {} fields, expected {}", line + 1, rec.len(), names.len()),
            ));
        }
        if let Some(col) = rec.iter().position(str::is_empty) {
            return Err(Error::format(
                path,
                format!("row {} has an empty value in column {}", line + 1, names[col]),
            ));
        }
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok((names, rows))
}

fn vocabulary(names: &[String], raws: &[Vec<Vec<String>>]) -> Vec<Vec<String>> {
    (0..names.len())
        .map(|i| {
            let set: BTreeSet<&str> = raws
                .iter()
                .flat_map(|raw| raw.iter().map(move |row| row[i].as_str()))
                .collect();
            set.into_iter().map(str::to_string).collect()
        })
        .collect()
}

fn encode(
    path: &Path,
    names: Vec<String>,
    raw: &[Vec<String>],
    vocab: &[Vec<String>],
) -> Result<Dataset> {
    let lookups: Vec<HashMap<&str, u32>> = vocab
        .iter()
        .map(|v| v.iter().enumerate().map(|(k, s)| (s.as_str(), k as u32)).collect())
        .collect();
    let columns = (0..names.len())
        .map(|i| raw.iter().map(|row| lookups[i][row[i].as_str()]).collect())
        .collect();
    let arities = vocab.iter().map(|v| v.len().max(1)).collect();
    Dataset::from_parts(names, arities, vocab.to_vec(), columns)
        .map_err(|e| Error::format(path, e.to_string()))
}

/// Counts `N_ijk` for one (child, parent set) pair. Only observed parent
/// configurations are stored; everything else is an implicit zero row.
#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyTable {
    child: usize,
    parents: Vec<usize>,
    r: usize,
    q: u64,
    n: u64,
    /// (configuration index, counts over child values), ascending by index.
    rows: Vec<(u64, Vec<u64>)>,
}

impl ContingencyTable {
    pub fn child(&self) -> usize {
        self.child
    }

    pub fn parents(&self) -> &[usize] {
        &self.parents
    }

    /// Child arity r_i.
    pub fn r(&self) -> usize {
        self.r
    }

    /// Number of parent configurations q_i (1 for no parents).
    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn total(&self) -> u64 {
        self.n
    }

    /// Observed configurations and their count rows.
    pub fn observed_rows(&self) -> &[(u64, Vec<u64>)] {
        &self.rows
    }

    pub fn count(&self, j: u64, k: usize) -> u64 {
        self.row(j).map_or(0, |row| row[k])
    }

    pub fn row(&self, j: u64) -> Option<&[u64]> {
        self.rows
            .binary_search_by_key(&j, |(idx, _)| *idx)
            .ok()
            .map(|p| self.rows[p].1.as_slice())
    }

    /// N_ij for configuration `j`.
    pub fn row_total(&self, j: u64) -> u64 {
        self.row(j).map_or(0, |row| row.iter().sum())
    }

    /// Dense `q x r` counts. Only sensible for small `q`.
    pub fn dense_counts(&self) -> Vec<Vec<u64>> {
        let mut out = vec![vec![0; self.r]; self.q as usize];
        for (j, row) in &self.rows {
            out[*j as usize].clone_from(row);
        }
        out
    }

    pub fn row_totals(&self) -> Vec<u64> {
        let mut out = vec![0; self.q as usize];
        for (j, row) in &self.rows {
            out[*j as usize] = row.iter().sum();
        }
        out
    }
}

/// Sorts and validates a parent list against `child`.
pub(crate) fn canonical_parents(n_vars: usize, child: usize, parents: &[usize]) -> Result<Vec<usize>> {
    if child >= n_vars {
        return Err(Error::InvalidArgument(format!("child index {child} out of range")));
    }
    let mut ps = parents.to_vec();
    ps.sort_unstable();
    for w in ps.windows(2) {
        if w[0] == w[1] {
            return Err(Error::InvalidArgument(format!("parent {} listed twice", w[0])));
        }
    }
    if let Some(&p) = ps.iter().find(|&&p| p >= n_vars) {
        return Err(Error::InvalidArgument(format!("parent index {p} out of range")));
    }
    if ps.contains(&child) {
        return Err(Error::InvalidArgument(format!(
            "variable {child} cannot be its own parent"
        )));
    }
    Ok(ps)
}

/// Counts child values per parent configuration.
pub fn contingency(data: &Dataset, child: usize, parents: &[usize]) -> Result<ContingencyTable> {
    let parents = canonical_parents(data.n_vars(), child, parents)?;
    let (idx, q) = data.configuration_indices(&parents)?;
    let r = data.arity(child);
    let col = data.column(child);
    let n = data.n_rows() as u64;

    // Dense accumulation when the table is small relative to the data.
    let dense_cells = q.saturating_mul(r as u64);
    let rows = if dense_cells <= (1 << 16) || dense_cells <= 4 * n {
        let mut counts = vec![0u64; dense_cells as usize];
        for (&j, &k) in idx.iter().zip(col) {
            counts[j as usize * r + k as usize] += 1;
        }
        counts
            .chunks(r)
            .enumerate()
            .filter(|(_, row)| row.iter().any(|&c| c > 0))
            .map(|(j, row)| (j as u64, row.to_vec()))
            .collect()
    } else {
        let mut map: HashMap<u64, Vec<u64>> = HashMap::new();
        for (&j, &k) in idx.iter().zip(col) {
            map.entry(j).or_insert_with(|| vec![0; r])[k as usize] += 1;
        }
        let mut rows: Vec<_> = map.into_iter().collect();
        rows.sort_unstable_by_key(|(j, _)| *j);
        rows
    };
    Ok(ContingencyTable {
        child,
        parents,
        r,
        q,
        n,
        rows,
    })
}

/// `x ln x` with the convention `0 ln 0 = 0`.
pub(crate) fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Maximized conditional log-likelihood `sum_jk N_ijk ln(N_ijk / N_ij)`.
pub(crate) fn conditional_loglik(table: &ContingencyTable) -> f64 {
    table
        .observed_rows()
        .iter()
        .map(|(_, row)| {
            let nij: u64 = row.iter().sum();
            row.iter().map(|&c| xlogx(c as f64)).sum::<f64>() - xlogx(nij as f64)
        })
        .sum()
}

/// Empirical conditional entropy H_N(child | parents) in nats.
pub fn empirical_cond_entropy(data: &Dataset, child: usize, parents: &[usize]) -> Result<f64> {
    if data.n_rows() == 0 {
        return Err(Error::InvalidData("conditional entropy of an empty dataset".into()));
    }
    let table = contingency(data, child, parents)?;
    let h = -conditional_loglik(&table) / data.n_rows() as f64;
    Ok(h.max(0.0))
}
