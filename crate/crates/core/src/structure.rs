//! DAGs, Markov equivalence classes, structural Hamming distance and the
//! tournament-component family on which quotient NML is exact.

use std::collections::{BTreeSet, BinaryHeap};
use std::cmp::Reverse;

use crate::dataset::{conditional_loglik, contingency, Dataset};
use crate::error::{Error, Result};

/// Largest node count for which DAGs can be enumerated exhaustively.
pub const MAX_ENUMERATION_NODES: usize = 5;

/// Largest number of data matrices the brute-force NML normalizer sums over.
pub const NML_BRUTEFORCE_LIMIT: u64 = 1 << 24;

/// A directed acyclic graph stored as sorted parent lists.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DagStructure {
    parents: Vec<Vec<usize>>,
    names: Option<Vec<String>>,
}

impl DagStructure {
    /// Validates and canonicalizes the parent lists. Fails on self loops,
    /// duplicates, out-of-range indices and cycles.
    pub fn new(parents: Vec<Vec<usize>>) -> Result<Self> {
        let n = parents.len();
        let mut canon = Vec::with_capacity(n);
        for (i, ps) in parents.into_iter().enumerate() {
            let mut ps = ps;
            ps.sort_unstable();
            if ps.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidArgument(format!("duplicate parent of node {i}")));
            }
            if ps.iter().any(|&p| p >= n) {
                return Err(Error::InvalidArgument(format!("parent of node {i} out of range")));
            }
            if ps.contains(&i) {
                return Err(Error::InvalidArgument(format!("node {i} is its own parent")));
            }
            canon.push(ps);
        }
        let g = DagStructure {
            parents: canon,
            names: None,
        };
        g.topological_order()?;
        Ok(g)
    }

    pub fn empty(n: usize) -> Self {
        DagStructure {
            parents: vec![Vec::new(); n],
            names: None,
        }
    }

    /// Builds a DAG from `(from, to)` arcs.
    pub fn from_arcs(n: usize, arcs: &[(usize, usize)]) -> Result<Self> {
        let mut parents = vec![Vec::new(); n];
        for &(a, b) in arcs {
            if b >= n {
                return Err(Error::InvalidArgument(format!("arc target {b} out of range")));
            }
            parents[b].push(a);
        }
        Self::new(parents)
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n() {
            return Err(Error::InvalidArgument("name count does not match node count".into()));
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    pub fn n(&self) -> usize {
        self.parents.len()
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub fn parent_lists(&self) -> &[Vec<usize>] {
        &self.parents
    }

    pub fn has_arc(&self, a: usize, b: usize) -> bool {
        b < self.n() && self.parents[b].binary_search(&a).is_ok()
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.has_arc(a, b) || self.has_arc(b, a)
    }

    /// All arcs `(from, to)`, sorted by target then source.
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        self.parents
            .iter()
            .enumerate()
            .flat_map(|(b, ps)| ps.iter().map(move |&a| (a, b)))
            .collect()
    }

    pub fn arc_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    /// Topological order; among available nodes the smallest index comes first.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let n = self.n();
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut children = vec![Vec::new(); n];
        for (b, ps) in self.parents.iter().enumerate() {
            for &a in ps {
                children[a].push(b);
            }
        }
        let mut ready: BinaryHeap<Reverse<usize>> =
            (0..n).filter(|&i| indegree[i] == 0).map(Reverse).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(Reverse(v)) = ready.pop() {
            order.push(v);
            for &c in &children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.push(Reverse(c));
                }
            }
        }
        if order.len() == n {
            Ok(order)
        } else {
            Err(Error::Cyclic)
        }
    }
}

/// Tests `G_b = {a} ∪ G_a` for the arc `a -> b`.
pub fn is_covered_arc(g: &DagStructure, a: usize, b: usize) -> Result<bool> {
    if !g.has_arc(a, b) {
        return Err(Error::InvalidArgument(format!("arc {a} -> {b} is not in the graph")));
    }
    let mut expected: Vec<usize> = g.parents(a).to_vec();
    expected.push(a);
    expected.sort_unstable();
    Ok(g.parents(b) == expected.as_slice())
}

/// Reverses a covered arc; the result stays in the same equivalence class.
pub fn reverse_covered_arc(g: &DagStructure, a: usize, b: usize) -> Result<DagStructure> {
    if !is_covered_arc(g, a, b)? {
        return Err(Error::InvalidArgument(format!("arc {a} -> {b} is not covered")));
    }
    let mut parents = g.parent_lists().to_vec();
    parents[b].retain(|&p| p != a);
    parents[a].push(b);
    let mut out = DagStructure::new(parents)?;
    out.names = g.names.clone();
    Ok(out)
}

/// All covered arcs of `g`, in arc order.
pub fn covered_arcs(g: &DagStructure) -> Vec<(usize, usize)> {
    g.arcs()
        .into_iter()
        .filter(|&(a, b)| is_covered_arc(g, a, b).unwrap_or(false))
        .collect()
}

/// Completed partially directed graph of an equivalence class.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cpdag {
    n: usize,
    directed: BTreeSet<(usize, usize)>,
    undirected: BTreeSet<(usize, usize)>,
}

/// Status of one unordered node pair in a [`Cpdag`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeMark {
    Absent,
    Undirected,
    Directed { from: usize, to: usize },
}

impl Cpdag {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn directed(&self) -> &BTreeSet<(usize, usize)> {
        &self.directed
    }

    /// Undirected edges as `(min, max)` pairs.
    pub fn undirected(&self) -> &BTreeSet<(usize, usize)> {
        &self.undirected
    }

    pub fn edge(&self, a: usize, b: usize) -> EdgeMark {
        let key = (a.min(b), a.max(b));
        if self.undirected.contains(&key) {
            EdgeMark::Undirected
        } else if self.directed.contains(&(a, b)) {
            EdgeMark::Directed { from: a, to: b }
        } else if self.directed.contains(&(b, a)) {
            EdgeMark::Directed { from: b, to: a }
        } else {
            EdgeMark::Absent
        }
    }

    fn adjacent(&self, a: usize, b: usize) -> bool {
        self.edge(a, b) != EdgeMark::Absent
    }

    fn is_undirected(&self, a: usize, b: usize) -> bool {
        self.undirected.contains(&(a.min(b), a.max(b)))
    }

    fn orient(&mut self, a: usize, b: usize) {
        self.undirected.remove(&(a.min(b), a.max(b)));
        self.directed.insert((a, b));
    }

    /// Applies the four orientation rules once over all undirected edges.
    /// Returns whether anything changed.
    fn apply_rules_once(&mut self) -> bool {
        let n = self.n;
        let undirected: Vec<(usize, usize)> = self.undirected.iter().copied().collect();
        for (u, v) in undirected {
            for (a, b) in [(u, v), (v, u)] {
                if !self.is_undirected(a, b) {
                    break;
                }
                if self.should_orient(a, b, n) {
                    self.orient(a, b);
                    return true;
                }
            }
        }
        false
    }

    /// Whether the undirected edge `a - b` is forced to `a -> b`.
    fn should_orient(&self, a: usize, b: usize, n: usize) -> bool {
        let into = |x: usize, y: usize| self.directed.contains(&(x, y));
        // R1: c -> a - b, c and b nonadjacent.
        if (0..n).any(|c| into(c, a) && !self.adjacent(c, b)) {
            return true;
        }
        // R2: a -> c -> b.
        if (0..n).any(|c| into(a, c) && into(c, b)) {
            return true;
        }
        // R3: a - c -> b, a - d -> b, c and d nonadjacent.
        let mids: Vec<usize> = (0..n)
            .filter(|&c| self.is_undirected(a, c) && into(c, b))
            .collect();
        for (i, &c) in mids.iter().enumerate() {
            if mids[i + 1..].iter().any(|&d| !self.adjacent(c, d)) {
                return true;
            }
        }
        // R4: a - d, d -> c -> b, a adjacent to c, d and b nonadjacent.
        for d in (0..n).filter(|&d| self.is_undirected(a, d) && !self.adjacent(d, b)) {
            if (0..n).any(|c| into(d, c) && into(c, b) && self.adjacent(a, c)) {
                return true;
            }
        }
        false
    }

    /// True when no orientation rule applies any more.
    pub fn is_closed(&self) -> bool {
        let mut copy = self.clone();
        !copy.apply_rules_once()
    }
}

/// Skeleton plus v-structures, closed under the orientation rules.
pub fn to_cpdag(g: &DagStructure) -> Cpdag {
    let n = g.n();
    let mut cp = Cpdag {
        n,
        directed: BTreeSet::new(),
        undirected: g.arcs().into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect(),
    };
    for c in 0..n {
        let ps = g.parents(c);
        for (i, &a) in ps.iter().enumerate() {
            for &b in &ps[i + 1..] {
                if !g.adjacent(a, b) {
                    cp.orient(a, c);
                    cp.orient(b, c);
                }
            }
        }
    }
    while cp.apply_rules_once() {}
    cp
}

/// Structural Hamming distance between the equivalence classes of two DAGs:
/// one per unordered pair whose edge status differs.
pub fn shd(g1: &DagStructure, g2: &DagStructure) -> Result<usize> {
    if g1.n() != g2.n() {
        return Err(Error::InvalidArgument(format!(
            "graphs have {} and {} nodes",
            g1.n(),
            g2.n()
        )));
    }
    Ok(shd_cpdag(&to_cpdag(g1), &to_cpdag(g2)))
}

pub fn shd_cpdag(a: &Cpdag, b: &Cpdag) -> usize {
    let n = a.n();
    let mut d = 0;
    for i in 0..n {
        for j in i + 1..n {
            if a.edge(i, j) != b.edge(i, j) {
                d += 1;
            }
        }
    }
    d
}

/// Connected components of the skeleton, each sorted, ordered by smallest member.
pub fn connected_components(g: &DagStructure) -> Vec<Vec<usize>> {
    let n = g.n();
    let mut neighbours = vec![Vec::new(); n];
    for (a, b) in g.arcs() {
        neighbours[a].push(b);
        neighbours[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for &w in &neighbours[v] {
                if !seen[w] {
                    seen[w] = true;
                    comp.push(w);
                    stack.push(w);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// True when every connected component is a complete DAG.
pub fn is_tournament_component_dag(g: &DagStructure) -> bool {
    connected_components(g).iter().all(|comp| {
        comp.iter()
            .enumerate()
            .all(|(i, &a)| comp[i + 1..].iter().all(|&b| g.adjacent(a, b)))
    })
}

/// Number of labeled DAGs on `n` nodes whose components are tournaments
/// (OEIS A000262): `sum over integer partitions of n!/prod(multiplicity!)`.
pub fn count_tournament_component_dags(n: usize) -> Result<u128> {
    if n > 12 {
        return Err(Error::ResourceLimit(format!(
            "tournament-component counts are supported up to n = 12, got {n}"
        )));
    }
    let factorial = |k: usize| (1..=k as u128).product::<u128>();
    let mut total = 0u128;
    for partition in integer_partitions(n) {
        let mut denom = 1u128;
        let mut i = 0;
        while i < partition.len() {
            let run = partition[i..].iter().take_while(|&&p| p == partition[i]).count();
            denom *= factorial(run);
            i += run;
        }
        total += factorial(n) / denom;
    }
    Ok(total)
}

/// Integer partitions of `n` as non-increasing part lists.
pub fn integer_partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(rest: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest == 0 {
            out.push(cur.clone());
            return;
        }
        for part in (1..=max.min(rest)).rev() {
            cur.push(part);
            rec(rest - part, part, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out
}

/// Every labeled DAG on `n <= 5` nodes.
pub fn enumerate_dags(n: usize) -> Result<Vec<DagStructure>> {
    if n > MAX_ENUMERATION_NODES {
        return Err(Error::ResourceLimit(format!(
            "DAG enumeration supports at most {MAX_ENUMERATION_NODES} nodes"
        )));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let total = 3usize.pow(pairs.len() as u32);
    let mut out = Vec::new();
    for code in 0..total {
        let mut parents = vec![Vec::new(); n];
        let mut c = code;
        for &(a, b) in &pairs {
            match c % 3 {
                1 => parents[b].push(a),
                2 => parents[a].push(b),
                _ => {}
            }
            c /= 3;
        }
        if let Ok(g) = DagStructure::new(parents) {
            out.push(g);
        }
    }
    Ok(out)
}

/// Members of the equivalence class of `g` (exhaustive, `n <= 5`).
pub fn equivalence_class(g: &DagStructure) -> Result<Vec<DagStructure>> {
    let target = to_cpdag(g);
    Ok(enumerate_dags(g.n())?
        .into_iter()
        .filter(|h| h.arc_count() == g.arc_count() && to_cpdag(h) == target)
        .collect())
}

/// Maximized log-likelihood of the data under `g`.
pub fn max_loglik(data: &Dataset, g: &DagStructure) -> Result<f64> {
    if g.n() != data.n_vars() {
        return Err(Error::InvalidArgument("graph and dataset sizes differ".into()));
    }
    (0..g.n())
        .map(|i| contingency(data, i, g.parents(i)).map(|t| conditional_loglik(&t)))
        .sum()
}

/// `ln sum_{D'} P(D' | theta_hat(D'), G)` over every `N x n` data matrix
/// with the given arities.
pub fn nml_log_normalizer(arities: &[usize], g: &DagStructure, n_rows: usize) -> Result<f64> {
    if arities.len() != g.n() {
        return Err(Error::InvalidArgument("graph and arity list sizes differ".into()));
    }
    let joint: u64 = arities.iter().map(|&a| a as u64).product();
    let total = u32::try_from(n_rows)
        .ok()
        .and_then(|n| joint.checked_pow(n))
        .filter(|&t| t <= NML_BRUTEFORCE_LIMIT)
        .ok_or_else(|| {
            Error::ResourceLimit(format!("{joint}^{n_rows} data matrices is too many to enumerate"))
        })?;
    if n_rows == 0 {
        return Ok(0.0);
    }
    // Decode every joint value once.
    let decoded: Vec<Vec<usize>> = (0..joint)
        .map(|mut v| {
            let mut row = vec![0; arities.len()];
            for i in (0..arities.len()).rev() {
                row[i] = (v % arities[i] as u64) as usize;
                v /= arities[i] as u64;
            }
            row
        })
        .collect();
    let names: Vec<String> = (0..arities.len()).map(|i| i.to_string()).collect();
    let mut digits = vec![0usize; n_rows];
    let mut sum = 0.0;
    for _ in 0..total {
        let rows: Vec<Vec<usize>> = digits.iter().map(|&d| decoded[d].clone()).collect();
        let data = Dataset::from_rows(names.clone(), arities.to_vec(), &rows)?;
        sum += max_loglik(&data, g)?.exp();
        for d in digits.iter_mut() {
            *d += 1;
            if (*d as u64) < joint {
                break;
            }
            *d = 0;
        }
    }
    Ok(sum.ln())
}

/// Exact NML log-score by enumerating the normalizer. Test oracle.
pub fn nml_bruteforce(data: &Dataset, g: &DagStructure) -> Result<f64> {
    let norm = nml_log_normalizer(data.arities(), g, data.n_rows())?;
    Ok(max_loglik(data, g)? - norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dag(n: usize, arcs: &[(usize, usize)]) -> DagStructure {
        DagStructure::from_arcs(n, arcs).unwrap()
    }

    #[test]
    fn construction_rejects_bad_graphs() {
        assert!(matches!(DagStructure::from_arcs(2, &[(0, 1), (1, 0)]), Err(Error::Cyclic)));
        assert!(DagStructure::new(vec![vec![0]]).is_err());
        assert!(DagStructure::new(vec![vec![], vec![0, 0]]).is_err());
        assert!(DagStructure::new(vec![vec![3], vec![]]).is_err());
        let g = DagStructure::new(vec![vec![2, 1], vec![], vec![]]).unwrap();
        assert_eq!(g.parents(0), &[1, 2]);
    }

    #[test]
    fn topological_order_breaks_ties_by_index() {
        let g = dag(4, &[(3, 0), (2, 1)]);
        assert_eq!(g.topological_order().unwrap(), vec![2, 1, 3, 0]);
    }

    #[test]
    fn covered_arc_examples() {
        assert!(is_covered_arc(&dag(2, &[(0, 1)]), 0, 1).unwrap());
        let v = dag(3, &[(0, 2), (1, 2)]);
        assert!(!is_covered_arc(&v, 0, 2).unwrap());
        let t = dag(3, &[(0, 1), (0, 2), (1, 2)]);
        assert!(is_covered_arc(&t, 1, 2).unwrap());
        assert!(is_covered_arc(&dag(2, &[]), 0, 1).is_err());
    }

    #[test]
    fn reversal_examples() {
        let r = reverse_covered_arc(&dag(2, &[(0, 1)]), 0, 1).unwrap();
        assert_eq!(r, dag(2, &[(1, 0)]));

        // A=0, B=1, C=2; reverse B -> C.
        let t = dag(3, &[(0, 1), (0, 2), (1, 2)]);
        let r = reverse_covered_arc(&t, 1, 2).unwrap();
        // Parents of C lose B; parents of B gain C; A is untouched; the
        // reversed arc is covered in the new graph.
        assert_eq!(r.parents(2), &[0]);
        assert_eq!(r.parents(1), &[0, 2]);
        assert_eq!(r.parents(0), t.parents(0));
        assert!(is_covered_arc(&r, 2, 1).unwrap());
        let mut expected_b = r.parents(2).to_vec();
        expected_b.push(2);
        expected_b.sort_unstable();
        assert_eq!(r.parents(1), expected_b.as_slice());

        let v = dag(3, &[(0, 2), (1, 2)]);
        assert!(reverse_covered_arc(&v, 0, 2).is_err());
    }

    #[test]
    fn cpdag_examples() {
        let c = to_cpdag(&dag(2, &[(0, 1)]));
        assert!(c.directed().is_empty());
        assert_eq!(c.undirected().len(), 1);

        let c = to_cpdag(&dag(3, &[(0, 2), (1, 2)]));
        assert_eq!(c.directed().len(), 2);
        assert!(c.undirected().is_empty());

        let chain = dag(3, &[(0, 1), (1, 2)]);
        let c = to_cpdag(&chain);
        assert_eq!(c.undirected().len(), 2);
        for other in [dag(3, &[(1, 0), (1, 2)]), dag(3, &[(1, 0), (2, 1)])] {
            assert_eq!(to_cpdag(&other), c);
        }

        // v-structure propagates downstream: 0 -> 2 <- 1, 2 - 3 becomes 2 -> 3.
        let c = to_cpdag(&dag(4, &[(0, 2), (1, 2), (2, 3)]));
        assert_eq!(c.edge(2, 3), EdgeMark::Directed { from: 2, to: 3 });
        assert!(c.is_closed());
    }

    #[test]
    fn shd_examples() {
        let a = dag(2, &[(0, 1)]);
        assert_eq!(shd(&a, &a).unwrap(), 0);
        assert_eq!(shd(&a, &dag(2, &[(1, 0)])).unwrap(), 0);
        assert_eq!(shd(&dag(3, &[(0, 1), (1, 2)]), &DagStructure::empty(3)).unwrap(), 2);
        // collider vs chain on the same skeleton: both pairs change status.
        assert_eq!(shd(&dag(3, &[(0, 1), (2, 1)]), &dag(3, &[(0, 1), (1, 2)])).unwrap(), 2);
        assert!(shd(&a, &DagStructure::empty(3)).is_err());
    }

    #[test]
    fn components_and_tournaments() {
        assert_eq!(
            connected_components(&DagStructure::empty(3)),
            vec![vec![0], vec![1], vec![2]]
        );
        assert_eq!(connected_components(&dag(3, &[(0, 1)])), vec![vec![0, 1], vec![2]]);
        let full = dag(3, &[(0, 1), (0, 2), (1, 2)]);
        assert_eq!(connected_components(&full).len(), 1);
        assert!(is_tournament_component_dag(&DagStructure::empty(4)));
        assert!(is_tournament_component_dag(&full));
        assert!(!is_tournament_component_dag(&dag(3, &[(0, 1), (1, 2)])));
    }

    #[test]
    fn tournament_counts() {
        assert_eq!(count_tournament_component_dags(0).unwrap(), 1);
        assert_eq!(count_tournament_component_dags(2).unwrap(), 3);
        assert_eq!(count_tournament_component_dags(4).unwrap(), 73);
        assert_eq!(integer_partitions(4).len(), 5);
        assert!(count_tournament_component_dags(12).is_ok());
        assert!(count_tournament_component_dags(13).is_err());
    }

    #[test]
    fn dag_enumeration_counts() {
        let counts: Vec<usize> = (0..=4).map(|n| enumerate_dags(n).unwrap().len()).collect();
        assert_eq!(counts, vec![1, 1, 3, 25, 543]);
        assert!(enumerate_dags(6).is_err());
    }

    #[test]
    fn nml_single_variable_matches_regret() {
        let d = Dataset::from_rows(vec!["x".into()], vec![3], &[vec![0], vec![2], vec![2]]).unwrap();
        let g = DagStructure::empty(1);
        let expected = max_loglik(&d, &g).unwrap()
            - crate::regret::regret_bruteforce_oracle(3, 3).unwrap();
        assert!((nml_bruteforce(&d, &g).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn nml_guard() {
        let d = Dataset::from_rows(vec!["x".into()], vec![2], &vec![vec![0]; 25]).unwrap();
        assert!(matches!(
            nml_bruteforce(&d, &DagStructure::empty(1)),
            Err(Error::ResourceLimit(_))
        ));
    }
}
