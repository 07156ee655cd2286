//! Parametric complexity (regret) of the multinomial NML distribution.
//!
//! `reg(N, r) = ln sum_{D in [r]^N} P(D | theta_hat(D))`, in nats.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Largest `r^N` the brute-force enumerator accepts.
pub const BRUTEFORCE_LIMIT: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum RegretMethod {
    /// Finite-sum representation of the normalizer, O(N).
    #[serde(rename = "exact")]
    Exact,
    /// Szpankowski expansion, accurate for fixed `r` and growing `N`.
    #[serde(rename = "szp1", alias = "szp-small-r")]
    SzpSmallR,
    /// Szpankowski-Weinberger approximation, accurate over all ranges.
    #[default]
    #[serde(rename = "szp2", alias = "szp-all-range")]
    SzpAllRange,
}

impl RegretMethod {
    pub fn regret(self, n: u64, r: u64) -> Result<f64> {
        match self {
            RegretMethod::Exact => regret_exact(n, r),
            RegretMethod::SzpSmallR => regret_szp_small_r(n, r),
            RegretMethod::SzpAllRange => regret_szp_all_range(n, r),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RegretMethod::Exact => "exact",
            RegretMethod::SzpSmallR => "szp1",
            RegretMethod::SzpAllRange => "szp2",
        }
    }
}

impl fmt::Display for RegretMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RegretMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(RegretMethod::Exact),
            "szp1" | "szp-small-r" => Ok(RegretMethod::SzpSmallR),
            "szp2" | "szp-all-range" => Ok(RegretMethod::SzpAllRange),
            other => Err(Error::InvalidArgument(format!(
                "unknown regret method {other:?} (expected exact, szp1 or szp2)"
            ))),
        }
    }
}

fn trivial(n: u64, r: u64) -> Result<Option<f64>> {
    if r == 0 {
        return Err(Error::InvalidArgument("category count r must be at least 1".into()));
    }
    Ok((n == 0 || r == 1).then_some(0.0))
}

/// Numerically stable `ln(e^a + e^b)`.
pub(crate) fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Exact regret from
/// `C(N, k) = sum_{l=0}^{N-1} (N-1)_l k^(l+1) / (N^(l+1) l!)`
/// with falling factorial `(N-1)_l` and rising factorial `k^(l+1)`.
///
/// Consecutive terms satisfy `t_l / t_{l-1} = (N-l)(k+l) / (N l)`, so the
/// sum is accumulated in log space without any factorial evaluations.
pub fn regret_exact(n: u64, r: u64) -> Result<f64> {
    if let Some(v) = trivial(n, r)? {
        return Ok(v);
    }
    let nf = n as f64;
    let k = r as f64;
    let ln_n = nf.ln();
    let mut term = k.ln() - ln_n;
    let mut acc = term;
    for l in 1..n {
        let lf = l as f64;
        term += (nf - lf).ln() + (k + lf).ln() - ln_n - lf.ln();
        acc = log_add(acc, term);
    }
    Ok(acc)
}

/// Regret approximation for constant `r` and growing `N` (five terms).
pub fn regret_szp_small_r(n: u64, r: u64) -> Result<f64> {
    if let Some(v) = trivial(n, r)? {
        return Ok(v);
    }
    let nf = n as f64;
    let rf = r as f64;
    // Gamma(r/2) / Gamma((r-1)/2)
    let gamma_ratio = (ln_gamma(rf / 2.0) - ln_gamma((rf - 1.0) / 2.0)).exp();
    let v = std::f64::consts::SQRT_2 * rf * gamma_ratio / (3.0 * nf.sqrt())
        + (rf - 1.0) / 2.0 * (nf / 2.0).ln()
        - ln_gamma(rf / 2.0)
        + 0.5 * std::f64::consts::PI.ln()
        - rf * rf * gamma_ratio * gamma_ratio / (9.0 * nf)
        + (2.0 * rf.powi(3) - 3.0 * rf * rf - 2.0 * rf + 3.0) / (36.0 * nf);
    Ok(v)
}

/// Regret approximation valid for all ranges of `N` and `r`.
pub fn regret_szp_all_range(n: u64, r: u64) -> Result<f64> {
    if let Some(v) = trivial(n, r)? {
        return Ok(v);
    }
    let nf = n as f64;
    let alpha = r as f64 / nf;
    let c = 0.5 + 0.5 * (1.0 + 4.0 / alpha).sqrt();
    Ok(nf * (alpha.ln() + (alpha + 2.0) * c.ln() - 1.0 / c) - 0.5 * (c + 2.0 / alpha).ln())
}

/// Literal enumeration of all `r^N` sequences. Test oracle only.
pub fn regret_bruteforce_oracle(n: u64, r: u64) -> Result<f64> {
    if r == 0 {
        return Err(Error::InvalidArgument("category count r must be at least 1".into()));
    }
    let total = u32::try_from(n)
        .ok()
        .and_then(|n| r.checked_pow(n))
        .filter(|&t| t <= BRUTEFORCE_LIMIT)
        .ok_or_else(|| Error::ResourceLimit(format!("r^N too large to enumerate ({r}^{n})")))?;
    let n = n as usize;
    let r = r as usize;
    let nf = n as f64;
    let mut seq = vec![0usize; n];
    let mut counts = vec![0usize; r];
    let mut sum = 0.0;
    for _ in 0..total {
        counts.iter_mut().for_each(|c| *c = 0);
        for &s in &seq {
            counts[s] += 1;
        }
        sum += counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| (c as f64 / nf).powi(c as i32))
            .product::<f64>();
        // odometer increment
        for digit in seq.iter_mut() {
            *digit += 1;
            if *digit < r {
                break;
            }
            *digit = 0;
        }
    }
    Ok(sum.ln())
}

/// Memoized regret values for one method, keyed on `(N, r)`.
///
/// Safe to share between threads; concurrent misses may compute the same
/// value twice, and whichever insert lands last wins.
#[derive(Debug, Default)]
pub struct RegretCache {
    method: RegretMethod,
    memo: RwLock<HashMap<(u64, u64), f64>>,
}

impl RegretCache {
    pub fn new(method: RegretMethod) -> Self {
        RegretCache {
            method,
            memo: RwLock::new(HashMap::new()),
        }
    }

    pub fn method(&self) -> RegretMethod {
        self.method
    }

    pub fn get(&self, n: u64, r: u64) -> Result<f64> {
        if let Some(v) = self.memo.read().expect("regret cache poisoned").get(&(n, r)) {
            return Ok(*v);
        }
        let v = self.method.regret(n, r)?;
        self.memo
            .write()
            .expect("regret cache poisoned")
            .insert((n, r), v);
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.memo.read().expect("regret cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// The (N, r) grid of the reference regret table.
pub const REFERENCE_GRID: [(u64, u64); 12] = [
    (50, 10),
    (50, 100),
    (50, 1000),
    (50, 10000),
    (500, 10),
    (500, 100),
    (500, 1000),
    (500, 10000),
    (5000, 10),
    (5000, 100),
    (5000, 1000),
    (5000, 10000),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretRow {
    pub n: u64,
    pub r: u64,
    pub szp_small_r: f64,
    pub szp_all_range: f64,
    pub exact: f64,
}

pub fn regret_table() -> Vec<RegretRow> {
    REFERENCE_GRID
        .iter()
        .map(|&(n, r)| RegretRow {
            n,
            r,
            szp_small_r: regret_szp_small_r(n, r).expect("valid grid"),
            szp_all_range: regret_szp_all_range(n, r).expect("valid grid"),
            exact: regret_exact(n, r).expect("valid grid"),
        })
        .collect()
}

/// CSV rendering of [`regret_table`], two decimals per value.
pub fn regret_table_csv() -> String {
    let mut out = String::from("N,r,szp1,szp2,exact\n");
    for row in regret_table() {
        out.push_str(&format!(
            "{},{},{:.2},{:.2},{:.2}\n",
            row.n, row.r, row.szp_small_r, row.szp_all_range, row.exact
        ));
    }
    out
}
