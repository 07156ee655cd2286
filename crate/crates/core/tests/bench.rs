use std::time::Instant;

use qnml::bench::{
    run_experiment, run_param_count, run_predict_rank, run_regret_table, tied_ranks, ExperimentKind, ExperimentSpec,
};
use qnml::Criterion;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn weather_spec(kind: ExperimentKind, reps: usize) -> ExperimentSpec {
    ExperimentSpec {
        datasets: vec!["builtin:weather".into()],
        repetitions: reps,
        train_fractions: vec![0.1, 0.9],
        seed: 5,
        ..ExperimentSpec::builtin(kind)
    }
}

#[test]
fn tied_ranks_match_counting_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..200 {
        let k = rng.gen_range(1..=6);
        // Few distinct values so ties are common.
        let v: Vec<f64> = (0..k).map(|_| rng.gen_range(0..3) as f64).collect();
        for higher in [true, false] {
            let ranks = tied_ranks(&v, higher);
            for i in 0..k {
                let better = (0..k).filter(|&j| if higher { v[j] > v[i] } else { v[j] < v[i] }).count();
                assert_eq!(ranks[i], better + 1);
            }
        }
    }
}

#[test]
fn bic_rank_worsens_with_more_training_data() {
    let rows = run_predict_rank(&weather_spec(ExperimentKind::PredictRank, 20), None).unwrap();
    let rank = |f: f64| {
        rows.iter()
            .find(|r| r.criterion == Criterion::Bic && r.fraction == f)
            .unwrap()
            .mean_rank
    };
    assert!(rank(0.9) > rank(0.1), "{} vs {}", rank(0.1), rank(0.9));
    for f in [0.1, 0.9] {
        let group: Vec<_> = rows.iter().filter(|r| r.fraction == f).collect();
        assert_eq!(group.len(), 4);
        assert!(group.iter().all(|r| (1.0..=4.0).contains(&r.mean_rank)));
        // Minimum-tied ranks sum to at most 1 + 2 + 3 + 4 per split.
        assert!(group.iter().map(|r| r.mean_rank).sum::<f64>() <= 10.0 + 1e-9);
    }
}

#[test]
fn bic_has_fewest_parameters_on_weather() {
    let rows = run_param_count(&weather_spec(ExperimentKind::ParamCount, 10), None).unwrap();
    for f in [0.1, 0.9] {
        let group: Vec<_> = rows.iter().filter(|r| r.fraction == f).collect();
        let bic = group.iter().find(|r| r.criterion == Criterion::Bic).unwrap().mean_parameters;
        assert!(group.iter().all(|r| r.mean_parameters >= bic));
    }
}

#[test]
fn reruns_are_byte_identical() {
    for spec in [
        weather_spec(ExperimentKind::PredictRank, 3),
        ExperimentSpec {
            networks: vec!["builtin:sprinkler5".into()],
            sample_sizes: vec![30, 300],
            repetitions: 3,
            ..ExperimentSpec::builtin(ExperimentKind::ShdCurve)
        },
    ] {
        let a = run_experiment(&spec, None).unwrap().files;
        let b = run_experiment(&spec, None).unwrap().files;
        assert_eq!(a, b);
        let manifest = &a.iter().find(|(n, _)| n == "manifest.json").unwrap().1;
        let json: serde_json::Value = serde_json::from_str(manifest).unwrap();
        assert_eq!(json["baseSeed"], 5 * (spec.kind == ExperimentKind::PredictRank) as u64);
    }
}

#[test]
fn regret_table_is_fast() {
    let start = Instant::now();
    let rows = run_regret_table();
    assert!(start.elapsed().as_secs_f64() < 1.0);
    assert_eq!(rows.len(), 12);
}

#[test]
fn unknown_resources_fail() {
    let spec = ExperimentSpec {
        datasets: vec!["no/such/file.csv".into()],
        ..weather_spec(ExperimentKind::PredictRank, 1)
    };
    let err = run_experiment(&spec, None).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("file.csv"), "{err}");
}
