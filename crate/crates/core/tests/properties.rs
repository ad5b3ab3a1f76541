mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use semevo::evolution::{run_evolution, EvolutionConfig};
use semevo::gsm::{build_perturbation, deflate, inflate};
use semevo::harness::{parse_model, prepare_split, split_for_run, wilcoxon_signed_rank, write_model};
use semevo::nn::{random_mlp, train_backprop, ArchConfig};
use semevo::trainer::aposteriori_train;
use semevo::{Activation, AprtMode, CompositeIndividual, Dataset, Error, MutationStep, OptConfig};

const POOL: [Activation; 3] = [Activation::Tanh, Activation::ReLU, Activation::Sigmoid];

#[test]
fn cached_sums_match_recomputation_over_random_histories() {
    let train = synthetic(21, 50, 4);
    let test = synthetic(22, 20, 4);
    let mut r = rng(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let ops = r.gen_range(0..40);
        let ind = random_composite(&train, &test, ops, 30, &mut r);
        let (tr, te) = ind.recomputed_sums().unwrap();
        worst = worst.max(tr.max_abs_diff(ind.train_semantics()));
        worst = worst.max(te.max_abs_diff(ind.test_semantics()));
    }
    assert!(worst <= 1e-9, "max drift {worst:e}");
}

#[test]
fn long_histories_do_not_drift() {
    let train = synthetic(23, 40, 3);
    let test = synthetic(24, 10, 3);
    let mut r = rng(2);
    let mut ind = random_composite(&train, &test, 0, 30, &mut r);
    let ms = MutationStep::new(2.0).unwrap();
    for step in 0..5000 {
        ind = if ind.block_count() > 0 && (ind.block_count() >= 20 || step % 3 == 2) {
            let k = r.gen_range(0..ind.block_count());
            deflate(&ind, k).unwrap()
        } else {
            let b = build_perturbation(&ind, &train, &test, ms, 1.0, &POOL, &mut r).unwrap();
            inflate(&ind, b).unwrap()
        };
    }
    let (tr, _) = ind.recomputed_sums().unwrap();
    assert!(tr.max_abs_diff(ind.train_semantics()) <= 1e-9);
    let oracle: Vec<f64> = (0..train.row_count()).map(|i| composite_output(&ind, train.row(i))).collect();
    assert!((rmse(&oracle, train.targets()) - ind.train_rmse()).abs() <= 1e-9);
}

#[test]
fn deflate_without_blocks_is_unavailable() {
    let train = synthetic(25, 10, 2);
    let ind = random_composite(&train, &train, 0, 30, &mut rng(3));
    assert!(matches!(deflate(&ind, 0), Err(Error::DeflateUnavailable)));
}

#[test]
fn wilcoxon_normal_mode_tracks_exact_distribution() {
    let mut r = rng(4);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let a = normals(&mut r, 30);
        let shift = r.gen_range(-0.6..0.6);
        let b: Vec<f64> = normals(&mut r, 30).iter().map(|x| x + shift).collect();
        let p = wilcoxon_signed_rank(&a, &b).unwrap().p_value;
        worst = worst.max((p - wilcoxon_exact_counts(&a, &b)).abs());
    }
    assert!(worst <= 0.02, "max |p - exact| = {worst}");
}

#[test]
fn wilcoxon_fixed_values() {
    let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
    let zeros = [0.0; 8];
    assert_eq!(wilcoxon_signed_rank(&a, &zeros).unwrap().p_value, 0.0078125);
    let same = wilcoxon_signed_rank(&a, &a).unwrap();
    assert!(same.degenerate && same.p_value == 1.0);
}

#[test]
fn standardization_uses_training_statistics_only() {
    let mut r = rng(5);
    let rows: Vec<Vec<f64>> = (0..200).map(|i| vec![i as f64, r.gen_range(0.0..10.0)]).collect();
    let ys: Vec<f64> = rows.iter().map(|x| x[0] + x[1]).collect();
    let data = Dataset::from_rows(&rows, &ys).unwrap();
    let split = split_for_run(200, 3, 0.8, 9).unwrap();
    let (train, test) = prepare_split(&data, &split).unwrap();
    let col_mean = |d: &Dataset, j: usize| (0..d.row_count()).map(|i| d.row(i)[j]).sum::<f64>() / d.row_count() as f64;
    for j in 0..2 {
        assert!(col_mean(&train, j).abs() < 1e-12);
    }
    assert!(col_mean(&test, 0).abs() > 1e-6 || col_mean(&test, 1).abs() > 1e-6);
    // targets are untouched
    assert_eq!(train.targets()[0], ys[split.train[0]]);
}

#[test]
fn small_gradient_steps_do_not_increase_loss() {
    let mut r = rng(6);
    for i in 0..50 {
        let data = synthetic(300 + i, 30, 3);
        let net = random_mlp(3, &ArchConfig::default(), &mut r).unwrap();
        let before = mse_of(&net, &data);
        let after = mse_of(&train_backprop(&net, &data, OptConfig { learning_rate: 1e-4, epochs: 1 }).unwrap().model, &data);
        assert!(after <= before + 1e-12, "instance {i}: {before} -> {after}");
    }
}

#[test]
fn fine_tuning_with_small_steps_does_not_hurt_training_error() {
    let train = synthetic(31, 60, 3);
    let test = synthetic(32, 20, 3);
    let mut r = rng(7);
    for _ in 0..10 {
        let ind = random_composite(&train, &test, r.gen_range(1..10), 30, &mut r);
        let out = aposteriori_train(&ind, &train, &test, OptConfig { learning_rate: 1e-4, epochs: 20 }).unwrap();
        assert!(out.train_rmse_after <= out.train_rmse_before + 1e-12);
        assert_eq!(out.individual.size(), ind.size());
    }
}

#[test]
fn evolution_is_reproducible_and_model_dumps_round_trip() {
    let train = synthetic(41, 60, 3);
    let test = synthetic(42, 20, 3);
    let cfg = EvolutionConfig {
        population_size: 20,
        generations: 15,
        aprt_mode: AprtMode::Half,
        aprt_opt: OptConfig { learning_rate: 0.001, epochs: 10 },
        seed: 77,
        ..EvolutionConfig::default()
    };
    let a = run_evolution(&cfg, &train, &test).unwrap();
    let b = run_evolution(&cfg, &train, &test).unwrap();
    let untimed = |o: &semevo::EvolutionOutcome| o.log.iter().map(|r| r.untimed()).collect::<Vec<_>>();
    assert_eq!(untimed(&a), untimed(&b));
    assert!(a.log.windows(2).all(|w| w[1].best_train_rmse <= w[0].best_train_rmse));

    let text = write_model(&a.best.materialize());
    let back = parse_model(&text).unwrap();
    assert_eq!(write_model(&back), text);
    let rebuilt = back.into_individual(&train, &test).unwrap();
    assert!((rebuilt.train_rmse() - a.best.train_rmse()).abs() <= 1e-12);
    let oracle: Vec<f64> = (0..test.row_count()).map(|i| composite_output(&a.best, test.row(i))).collect();
    assert!((rmse(&oracle, test.targets()) - a.best.test_rmse()).abs() <= 1e-12);
}

fn individual_strategy() -> impl Strategy<Value = (u64, usize, f64)> {
    (any::<u64>(), 0usize..25, 0.1f64..4.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn one_mutation_moves_each_row_by_at_most_ms((seed, ops, ms) in individual_strategy()) {
        let train = synthetic(51, 30, 3);
        let test = synthetic(52, 10, 3);
        let mut r = rng(seed);
        let parent: CompositeIndividual = random_composite(&train, &test, ops, 30, &mut r);
        let step = MutationStep::new(ms).unwrap();
        let block = build_perturbation(&parent, &train, &test, step, 1.0, &POOL, &mut r).unwrap();
        let child = inflate(&parent, block).unwrap();
        for (c, p) in child.train_semantics().as_slice().iter().zip(parent.train_semantics().as_slice()) {
            prop_assert!((c - p).abs() <= ms + 1e-12);
        }
        if parent.block_count() > 0 {
            let k = r.gen_range(0..parent.block_count());
            let removed = parent.blocks()[k].output_weight();
            prop_assert!(removed <= 4.0);
            let smaller = deflate(&parent, k).unwrap();
            prop_assert_eq!(smaller.block_count() + 1, parent.block_count());
            prop_assert!(smaller.size() < parent.size());
        }
    }
}
