mod common;

use qnml::dataset::contingency;
use qnml::regret::regret_exact;
use qnml::scores::{bdeu_local, bdq_local, max_loglik_conditional};
use qnml::structure::equivalence_class;
use qnml::{learn_exact, total_score, Criterion, DagStructure, RegretMethod, ScoreConfig, Scorer};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

fn exact(c: Criterion) -> ScoreConfig {
    ScoreConfig::new(c).with_regret(RegretMethod::Exact)
}

/// ln-likelihood of a set of columns treated as one categorical variable.
fn joint_ml(rows: &[Vec<usize>], cols: &[usize]) -> f64 {
    let mut counts = std::collections::HashMap::<Vec<usize>, f64>::new();
    for r in rows {
        *counts.entry(cols.iter().map(|&c| r[c]).collect()).or_default() += 1.0;
    }
    let n = rows.len() as f64;
    counts.values().map(|c| c * (c / n).ln()).sum()
}

#[test]
fn decomposability() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..40 {
        let n = rng.gen_range(1..=5);
        let n_rows = rng.gen_range(1..=40);
        let (data, _) = random_dataset(&mut rng, n, n_rows, 3);
        let g = random_dag(&mut rng, n, 0.4);
        for c in Criterion::ALL {
            let s = Scorer::new(&data, ScoreConfig::new(c)).unwrap();
            let by_hand: f64 = (0..n).map(|i| s.local(i, g.parents(i)).unwrap()).sum();
            assert_eq!(s.total(&g).unwrap(), by_hand);
            assert_eq!(total_score(&data, &g, &ScoreConfig::new(c)).unwrap(), by_hand);
        }
    }
}

#[test]
fn likelihood_quotient_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..100 {
        let n_rows = rng.gen_range(1..=50);
        let (data, rows) = random_dataset(&mut rng, 4, n_rows, 3);
        let parents: Vec<usize> = (1..4).filter(|_| rng.gen_bool(0.5)).collect();
        let mut family = vec![0];
        family.extend(&parents);
        let quotient = joint_ml(&rows, &family) - joint_ml(&rows, &parents);
        let t = contingency(&data, 0, &parents).unwrap();
        assert!((quotient - max_loglik_conditional(&t)).abs() < 1e-9);
    }
}

#[test]
fn qnml_and_fnml_agree_without_parents() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..30 {
        let n_rows = rng.gen_range(1..=60);
        let (data, _) = random_dataset(&mut rng, 2, n_rows, 3);
        let q = Scorer::new(&data, exact(Criterion::Qnml)).unwrap().local(0, &[]).unwrap();
        let f = Scorer::new(&data, exact(Criterion::Fnml)).unwrap().local(0, &[]).unwrap();
        assert_eq!(q, f);
    }
}

#[test]
fn qnml_copy_example() {
    // X2 copies X1 on [[0,0],[0,0],[1,1],[1,1]]: local score is -(reg(4,4) - reg(4,2)).
    let data = dataset(&[2, 2], &[vec![0, 0], vec![0, 0], vec![1, 1], vec![1, 1]]);
    let s = Scorer::new(&data, exact(Criterion::Qnml)).unwrap().local(1, &[0]).unwrap();
    let want = -(brute_regret(4, 4) - brute_regret(4, 2));
    assert!((s - want).abs() < 1e-12);
    let f = Scorer::new(&data, exact(Criterion::Fnml)).unwrap().local(1, &[0]).unwrap();
    assert!((f + 2.0 * 2.5f64.ln()).abs() < 1e-12);
}

#[test]
fn unit_arity_child_scores_zero() {
    let data = dataset(&[1, 3], &[vec![0, 2], vec![0, 1], vec![0, 1]]);
    for c in Criterion::ALL {
        let s = Scorer::new(&data, ScoreConfig::new(c)).unwrap();
        assert_eq!(s.local(0, &[1]).unwrap(), 0.0, "{c}");
        assert_eq!(s.local(0, &[]).unwrap(), 0.0, "{c}");
    }
}

#[test]
fn bayesian_scores_on_empty_data() {
    let data = dataset(&[2, 3], &[]);
    let t = contingency(&data, 0, &[1]).unwrap();
    assert_eq!(bdeu_local(&t, 1.0), 0.0);
    assert_eq!(bdq_local(&t, 0.5), 0.0);
}

#[test]
fn bic_uses_full_parent_configuration_count() {
    // Only one of the three parent values is observed.
    let data = dataset(&[2, 3], &[vec![0, 0], vec![1, 0], vec![0, 0], vec![1, 0]]);
    let s = Scorer::new(&data, ScoreConfig::new(Criterion::Bic)).unwrap().local(0, &[1]).unwrap();
    let want = 4.0 * 0.5f64.ln() - 3.0 * 0.5 * 4f64.ln();
    assert!((s - want).abs() < 1e-12);
    let q = Scorer::new(&data, exact(Criterion::Qnml)).unwrap().local(0, &[1]).unwrap();
    let want = 4.0 * 0.5f64.ln() - (regret_exact(4, 6).unwrap() - regret_exact(4, 3).unwrap());
    assert!((q - want).abs() < 1e-12);
}

#[test]
fn optimum_ties_across_its_class() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for c in [Criterion::Qnml, Criterion::Bdeu, Criterion::Bdq] {
        let cfg = exact(c);
        for _ in 0..10 {
            let n_rows = rng.gen_range(10..=60);
            let (data, _) = random_dataset(&mut rng, 4, n_rows, 3);
            let best = learn_exact(&data, &cfg, None).unwrap();
            for member in equivalence_class(&best.network).unwrap() {
                let s = total_score(&data, &member, &cfg).unwrap();
                assert!((s - best.total_score).abs() < 1e-9, "{c}");
            }
        }
    }
}

#[test]
fn config_validation() {
    let mut cfg = ScoreConfig::new(Criterion::Bdeu);
    cfg.bdeu_alpha = 0.0;
    assert!(cfg.validate().is_err());
    let data = dataset(&[2], &[vec![0]]);
    assert!(Scorer::new(&data, cfg).is_err());
    let cyclic = DagStructure::new(vec![vec![1], vec![0]]);
    assert!(cyclic.is_err());
    for c in Criterion::ALL {
        assert_eq!(c.as_str().parse::<Criterion>().unwrap(), c);
    }
}
