//! Property tests over the numeric core, data pipeline, optimizer and metrics.

use idsnet_core::data::{smote_oversample, train_test_split, Dataset, LabelEncoder};
use idsnet_core::layers::{
    batchnorm_train, dropout_forward, multi_head_attention, scaled_dot_product_attention, MhaVars, Mode,
};
use idsnet_core::metrics::{class_report, confusion, roc_auc, ConfusionMatrix};
use idsnet_core::model::{ablation_grid, Model, ModelConfig};
use idsnet_core::train::{adam_step, cross_entropy, AdamConfig, AdamState, LOSS_FLOOR};
use idsnet_core::{Real, Tape, Tensor};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random(shape: &[usize], seed: u64, scale: Real) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn small_base() -> ModelConfig {
    ModelConfig {
        time_steps: 8,
        conv_filters: 4,
        gru_units: 3,
        num_heads: 2,
        key_dim: 2,
        dense_units: vec![6, 4],
        num_classes: 3,
        ..ModelConfig::default()
    }
}

fn labelled(rows: usize, features: usize, counts: &[usize], seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &n)| vec![c; n]).collect();
    assert_eq!(labels.len(), rows);
    let x: Vec<Real> = (0..rows * features).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let names: Vec<String> = (0..counts.len()).map(|c| format!("c{c}")).collect();
    let encoder = LabelEncoder::fit(names.iter().map(String::as_str));
    let features_names = (0..features).map(|f| format!("f{f}")).collect();
    Dataset::new(x, features, labels, encoder, features_names).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn softmax_rows_are_distributions(rows in 1usize..6, cols in 1usize..9, scale in 0.1f64..80.0, seed in any::<u64>()) {
        let mut tape = Tape::new();
        let x = tape.constant(random(&[rows, cols], seed, scale as Real));
        let p = tape.softmax(x, 1).unwrap();
        for r in tape.data(p).chunks(cols) {
            prop_assert!(r.iter().all(|&v| (0.0..=1.0).contains(&v)));
            prop_assert!((r.iter().sum::<Real>() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn fan_out_gradients_add(n in 1usize..10, seed in any::<u64>()) {
        // f = Σx + Σx·x + Σ3x uses x three times; ∂f/∂x = 4 + 2x
        let x0 = random(&[n], seed, 2.0);
        let mut tape = Tape::new();
        let x = tape.param(x0.clone());
        let a = tape.sum(x);
        let sq = tape.mul(x, x).unwrap();
        let b = tape.sum(sq);
        let t = tape.scale(x, 3.0);
        let c = tape.sum(t);
        let ab = tape.add(a, b).unwrap();
        let f = tape.add(ab, c).unwrap();
        tape.backward(f).unwrap();
        let g = tape.grad(x).unwrap();
        for (gi, xi) in g.iter().zip(x0.data()) {
            prop_assert!((gi - (4.0 + 2.0 * xi)).abs() < 1e-9);
        }
    }

    #[test]
    fn attention_rows_sum_to_one(b in 1usize..3, tq in 1usize..6, tk in 1usize..6, d in 1usize..5, seed in any::<u64>()) {
        let mut tape = Tape::new();
        let q = tape.constant(random(&[b, tq, d], seed, 3.0));
        let k = tape.constant(random(&[b, tk, d], seed ^ 1, 3.0));
        let v = tape.constant(random(&[b, tk, 2], seed ^ 2, 3.0));
        let a = scaled_dot_product_attention(&mut tape, q, k, v).unwrap();
        prop_assert_eq!(tape.shape(a.weights), &[b, tq, tk][..]);
        prop_assert_eq!(tape.shape(a.output), &[b, tq, 2][..]);
        for row in tape.data(a.weights).chunks(tk) {
            prop_assert!((row.iter().sum::<Real>() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn multi_head_preserves_time_axis(t in 1usize..7, heads in 1usize..4, key_dim in 1usize..4, seed in any::<u64>()) {
        let f = 5;
        let hd = heads * key_dim;
        let mut tape = Tape::new();
        let x = tape.constant(random(&[2, t, f], seed, 1.0));
        let p = MhaVars {
            w_q: tape.constant(random(&[f, hd], seed ^ 3, 1.0)),
            w_k: tape.constant(random(&[f, hd], seed ^ 4, 1.0)),
            w_v: tape.constant(random(&[f, hd], seed ^ 5, 1.0)),
            w_o: tape.constant(random(&[hd, f], seed ^ 6, 1.0)),
            num_heads: heads,
            key_dim,
        };
        let y = multi_head_attention(&mut tape, x, &p).unwrap();
        prop_assert_eq!(tape.shape(y), &[2, t, f][..]);
    }

    #[test]
    fn batchnorm_of_identical_samples_is_beta(b in 2usize..5, t in 1usize..5, seed in any::<u64>()) {
        let c = 3;
        // identical across batch and time, so every channel has zero variance
        let cell = random(&[c], seed, 5.0);
        let flat: Vec<Real> = (0..b * t).flat_map(|_| cell.data().to_vec()).collect();
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::new(vec![b, t, c], flat).unwrap());
        let gamma = tape.constant(random(&[c], seed ^ 7, 2.0));
        let beta = tape.constant(Tensor::new(vec![c], vec![0.5, -1.0, 2.0]).unwrap());
        let (y, stats) = batchnorm_train(&mut tape, x, gamma, beta, 1e-3).unwrap();
        for row in tape.data(y).chunks(c) {
            prop_assert!((row[0] - 0.5).abs() < 1e-9 && (row[1] + 1.0).abs() < 1e-9 && (row[2] - 2.0).abs() < 1e-9);
        }
        prop_assert!(stats.var.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn smote_invariants(minor in 2usize..9, mid in 9usize..20, seed in any::<u64>()) {
        let major = 24;
        let d = labelled(major + mid + minor, 3, &[major, mid, minor], seed);
        let o = smote_oversample(&d, 5, seed).unwrap();
        prop_assert!(o.dataset.class_counts().iter().all(|&n| n == major));
        prop_assert_eq!(o.synthetic.len(), (major - mid) + (major - minor));
        // originals untouched and in order
        prop_assert_eq!(&o.dataset.features()[..d.features().len()], d.features());
        for (s, i) in o.synthetic.iter().zip(d.len()..) {
            let (x, nb, z) = (d.row(s.base), d.row(s.neighbor), o.dataset.row(i));
            prop_assert_eq!(d.labels()[s.base], d.labels()[s.neighbor]);
            prop_assert_eq!(o.dataset.labels()[i], d.labels()[s.base]);
            prop_assert!((0.0..1.0).contains(&s.lambda));
            for f in 0..3 {
                prop_assert!((z[f] - (x[f] + s.lambda * (nb[f] - x[f]))).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn split_is_a_partition(n0 in 5usize..30, n1 in 5usize..30, fraction in 0.2f64..0.9, seed in any::<u64>()) {
        let d = labelled(n0 + n1, 2, &[n0, n1], seed);
        let s = train_test_split(&d, fraction, seed, true).unwrap();
        let mut all: Vec<usize> = s.train_indices.iter().chain(&s.test_indices).copied().collect();
        all.sort();
        prop_assert_eq!(all, (0..d.len()).collect::<Vec<_>>());
        for (c, &n) in [n0, n1].iter().enumerate() {
            let got = s.train.class_counts()[c] as f64;
            prop_assert!((got - fraction * n as f64).abs() <= 1.0);
        }
    }

    #[test]
    fn encoder_round_trips(names in prop::collection::vec("[a-z]{1,6}", 1..12)) {
        let enc = LabelEncoder::fit(names.iter().map(String::as_str));
        for n in &names {
            let i = enc.encode(n).unwrap();
            prop_assert_eq!(enc.decode(i), Some(n.as_str()));
        }
        prop_assert!(enc.class_names().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn adam_descends_a_convex_quadratic(n in 1usize..8, seed in any::<u64>()) {
        let target = random(&[n], seed, 3.0);
        let loss = |w: &[Real]| w.iter().zip(target.data()).map(|(a, b)| (a - b) * (a - b)).sum::<Real>();
        let mut w = vec![0.0; n];
        let mut state = AdamState::new(&[n], AdamConfig { lr: 0.05, ..AdamConfig::default() }).unwrap();
        let start = loss(&w);
        for _ in 0..200 {
            let g: Vec<Real> = w.iter().zip(target.data()).map(|(a, b)| 2.0 * (a - b)).collect();
            adam_step(&mut [&mut w[..]], &[&g[..]], &mut state).unwrap();
        }
        prop_assert!(loss(&w) < 0.05 * start + 1e-9);
    }

    #[test]
    fn loss_floor_keeps_loss_finite(k in 2usize..7, label in 0usize..7) {
        let label = label % k;
        let mut p = vec![0.0; k];
        p[(label + 1) % k] = 1.0;
        let l = cross_entropy(&p, k, &[label]);
        prop_assert!(l.is_finite());
        prop_assert!((l + LOSS_FLOOR.ln()).abs() < 1e-6);
    }

    #[test]
    fn accuracy_equals_weighted_recall(k in 2usize..6, cells in prop::collection::vec(0u64..40, 36)) {
        let counts: Vec<Vec<u64>> = (0..k).map(|r| cells[r * 6..r * 6 + k].to_vec()).collect();
        prop_assume!(counts.iter().flatten().sum::<u64>() > 0);
        let names = (0..k).map(|c| format!("c{c}")).collect();
        let cm = ConfusionMatrix::from_counts(counts, names).unwrap();
        let r = class_report(&cm);
        prop_assert!((r.accuracy - r.weighted_avg.recall).abs() < 1e-12);
        for c in 0..k {
            let b = cm.binary(c);
            prop_assert_eq!(b.tp + b.fp + b.fn_ + b.tn, cm.total());
        }
    }

    #[test]
    fn auc_ignores_monotone_transforms_and_order(n in 4usize..40, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth: Vec<usize> = (0..n).map(|i| if i < 2 { i } else { rng.gen_range(0..2) }).collect();
        // coarse scores so ties occur
        let s: Vec<Real> = (0..n).map(|_| (rng.gen_range(0..8) as Real) / 8.0).collect();
        let scores: Vec<Real> = s.iter().flat_map(|&v| [1.0 - v, v]).collect();
        let base = roc_auc(&scores, 2, &truth).unwrap();

        let warped: Vec<Real> = scores.iter().map(|&v| (3.0 * v).exp() - 7.0).collect();
        let w = roc_auc(&warped, 2, &truth).unwrap();

        let mut perm: Vec<usize> = (0..n).collect();
        perm.reverse();
        perm.rotate_left(seed as usize % n);
        let ps: Vec<Real> = perm.iter().flat_map(|&i| [scores[2 * i], scores[2 * i + 1]]).collect();
        let pt: Vec<usize> = perm.iter().map(|&i| truth[i]).collect();
        let p = roc_auc(&ps, 2, &pt).unwrap();
        for c in 0..2 {
            let a = base[c].auc.unwrap();
            prop_assert!((a - w[c].auc.unwrap()).abs() < 1e-12);
            prop_assert!((a - p[c].auc.unwrap()).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn model_build_and_forward_are_seed_deterministic(seed in any::<u64>()) {
        let cfg = small_base();
        let a = Model::build(&cfg, seed).unwrap();
        let b = Model::build(&cfg, seed).unwrap();
        prop_assert_eq!(a.params().export(), b.params().export());
        let x = random(&[3, 8, 1], seed, 1.0);
        let run = |m: &Model| {
            let mut tape = Tape::new();
            let v = tape.constant(x.clone());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pass = m.forward(&mut tape, v, Mode::Train, &mut rng).unwrap();
            tape.data(pass.probs).to_vec()
        };
        prop_assert_eq!(run(&a), run(&b));
    }

    #[test]
    fn dropout_preserves_expectation(rate in 0.05f64..0.9, seed in any::<u64>()) {
        let n = 20_000;
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::full(&[n], 1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = dropout_forward(&mut tape, x, rate as Real, Mode::Train, &mut rng).unwrap();
        let mean = tape.data(y).iter().sum::<Real>() / n as Real;
        // standard error of the mean is sqrt(rate/(1-rate)/n)
        let se = ((rate / (1.0 - rate)) / n as f64).sqrt();
        prop_assert!((mean as f64 - 1.0).abs() < 5.0 * se);
        let z = dropout_forward(&mut tape, x, rate as Real, Mode::Infer, &mut rng).unwrap();
        prop_assert!(tape.data(z).iter().all(|&v| v == 1.0));
    }
}

#[test]
fn every_grid_case_forward_passes() {
    let base = small_base();
    let grid = ablation_grid(&base);
    assert_eq!(grid.len(), 10);
    let x = random(&[2, 8, 1], 11, 1.0);
    for case in &grid {
        let m = Model::build(&case.config, 4).unwrap();
        for mode in [Mode::Train, Mode::Infer] {
            let mut tape = Tape::new();
            let v = tape.constant(x.clone());
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let pass = m.forward(&mut tape, v, mode, &mut rng).unwrap();
            assert_eq!(tape.shape(pass.probs), &[2, 3], "case {}", case.case_id);
            for r in tape.data(pass.probs).chunks(3) {
                assert!((r.iter().sum::<Real>() - 1.0).abs() < 1e-9, "case {}", case.case_id);
            }
        }
    }
}

#[test]
fn confusion_rejects_bad_labels() {
    assert!(confusion(&[0, 1], &[0], 2).is_err());
    assert!(confusion(&[0, 2], &[0, 1], 2).is_err());
}
