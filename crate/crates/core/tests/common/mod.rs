//! Test-side oracles, written independently of the library code paths.
#![allow(dead_code)]

use std::collections::HashMap;

use qnml::{Dataset, DagStructure};
use rand::seq::SliceRandom;
use rand::Rng;

/// ln of the multinomial NML normalizer by enumerating all `r^n` sequences.
pub fn brute_regret(n: u32, r: u32) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let total = (r as u64).pow(n);
    let mut sum = 0.0;
    let mut seq = vec![0u32; n as usize];
    for _ in 0..total {
        let mut counts = vec![0u32; r as usize];
        for &v in &seq {
            counts[v as usize] += 1;
        }
        sum += counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| (c as f64 / n as f64).powi(c as i32))
            .product::<f64>();
        for d in seq.iter_mut() {
            *d += 1;
            if *d < r {
                break;
            }
            *d = 0;
        }
    }
    sum.ln()
}

/// Maximized conditional log-likelihood of one family, counted with hash maps.
pub fn family_ml(rows: &[Vec<usize>], child: usize, parents: &[usize]) -> f64 {
    let mut joint: HashMap<(Vec<usize>, usize), f64> = HashMap::new();
    let mut marg: HashMap<Vec<usize>, f64> = HashMap::new();
    for row in rows {
        let key: Vec<usize> = parents.iter().map(|&p| row[p]).collect();
        *joint.entry((key.clone(), row[child])).or_default() += 1.0;
        *marg.entry(key).or_default() += 1.0;
    }
    joint.iter().map(|((key, _), c)| c * (c / marg[key]).ln()).sum()
}

/// Maximized log-likelihood of `rows` under `g`.
pub fn ml_oracle(rows: &[Vec<usize>], g: &DagStructure) -> f64 {
    (0..g.n()).map(|i| family_ml(rows, i, g.parents(i))).sum()
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// ln of the NML normalizer of `g` by enumerating every data matrix.
pub fn brute_nml_log_normalizer(arities: &[usize], g: &DagStructure, n_rows: usize) -> f64 {
    let cells: usize = arities.iter().product();
    let n_mats = cells.pow(n_rows as u32);
    let decode = |mut c: usize| -> Vec<usize> {
        let mut row = vec![0; arities.len()];
        for (v, &a) in row.iter_mut().zip(arities).rev() {
            *v = c % a;
            c /= a;
        }
        row
    };
    let mut logs = Vec::with_capacity(n_mats);
    let mut idx = vec![0usize; n_rows];
    for _ in 0..n_mats {
        let rows: Vec<Vec<usize>> = idx.iter().map(|&c| decode(c)).collect();
        logs.push(ml_oracle(&rows, g));
        for d in idx.iter_mut() {
            *d += 1;
            if *d < cells {
                break;
            }
            *d = 0;
        }
    }
    log_sum_exp(&logs)
}

/// Empirical conditional entropy H(X | Y) in nats, from raw rows.
pub fn entropy_oracle(rows: &[Vec<usize>], child: usize, parents: &[usize]) -> f64 {
    -family_ml(rows, child, parents) / rows.len() as f64
}

pub fn random_rows<R: Rng>(rng: &mut R, arities: &[usize], n_rows: usize) -> Vec<Vec<usize>> {
    (0..n_rows)
        .map(|_| arities.iter().map(|&a| rng.gen_range(0..a)).collect())
        .collect()
}

pub fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("x{i}")).collect()
}

pub fn dataset(arities: &[usize], rows: &[Vec<usize>]) -> Dataset {
    Dataset::from_rows(names(arities.len()), arities.to_vec(), rows).expect("valid rows")
}

/// Random dataset with `n_vars` variables of arity in `2..=max_arity`.
pub fn random_dataset<R: Rng>(rng: &mut R, n_vars: usize, n_rows: usize, max_arity: usize) -> (Dataset, Vec<Vec<usize>>) {
    let arities: Vec<usize> = (0..n_vars).map(|_| rng.gen_range(2..=max_arity)).collect();
    let rows = random_rows(rng, &arities, n_rows);
    (dataset(&arities, &rows), rows)
}

/// Random DAG: a random order, each forward pair joined with probability `p`.
pub fn random_dag<R: Rng>(rng: &mut R, n: usize, p: f64) -> DagStructure {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut arcs = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(p) {
                arcs.push((order[a], order[b]));
            }
        }
    }
    DagStructure::from_arcs(n, &arcs).expect("forward arcs are acyclic")
}

/// All DAGs on `n` nodes by filtering every orientation pattern for acyclicity.
pub fn all_dags(n: usize) -> Vec<DagStructure> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let mut out = Vec::new();
    for code in 0..3usize.pow(pairs.len() as u32) {
        let mut c = code;
        let mut arcs = Vec::new();
        for &(a, b) in &pairs {
            match c % 3 {
                1 => arcs.push((a, b)),
                2 => arcs.push((b, a)),
                _ => {}
            }
            c /= 3;
        }
        if let Ok(g) = DagStructure::from_arcs(n, &arcs) {
            out.push(g);
        }
    }
    out
}

/// Every connected component of the skeleton is a complete graph.
pub fn components_complete(g: &DagStructure) -> bool {
    let n = g.n();
    let mut comp: Vec<usize> = (0..n).collect();
    fn find(c: &mut Vec<usize>, x: usize) -> usize {
        if c[x] != x {
            let r = find(c, c[x]);
            c[x] = r;
        }
        c[x]
    }
    for (a, b) in g.arcs() {
        let (ra, rb) = (find(&mut comp, a), find(&mut comp, b));
        comp[ra] = rb;
    }
    (0..n).all(|a| {
        (a + 1..n).all(|b| find(&mut comp, a) != find(&mut comp, b) || g.adjacent(a, b))
    })
}
