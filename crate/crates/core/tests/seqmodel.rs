//! Behavioural checks of the convolutional model: analytic gradients
//! against central differences, causality, normalization and the ability
//! to fit a batch.

use mutcomp::corpus::{MASK, NUM_RESERVED};
use mutcomp::seqmodel::{Batch, ModelConfig, SequenceModel};
use mutcomp::{ConvSeq2SeqF32, ConvSeq2SeqF64};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tiny(seed: u64) -> ModelConfig {
    ModelConfig { embed_dim: 4, hidden_dim: 4, max_len: 8, ..ModelConfig::default() }
        .with_vocab(9, 8)
        .with_seed(seed)
}

fn random_batch(rng: &mut ChaCha8Rng, n: usize, in_vocab: u32, out_vocab: u32, masked: bool) -> Batch {
    let pairs = (0..n)
        .map(|_| {
            let li = rng.random_range(1..=5);
            let lt = rng.random_range(0..=5);
            let i = (0..li).map(|_| rng.random_range(NUM_RESERVED..in_vocab)).collect();
            let t = (0..lt).map(|_| rng.random_range(NUM_RESERVED..out_vocab)).collect();
            (i, t)
        })
        .collect();
    Batch::new(pairs, masked).unwrap()
}

/// Central-difference derivative of the mean loss for every parameter,
/// compared with backpropagation.
fn check_gradients(seed: u64, masked: bool) {
    let mut model = ConvSeq2SeqF64::new(tiny(seed)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
    let batch = random_batch(&mut rng, 4, 9, 8, masked);
    let (_, analytic) = model.loss_and_gradient(&batch).unwrap();
    let eps = 1e-5;
    let mut worst = (0.0f64, String::new());
    for (name, range) in model.param_groups() {
        for i in range {
            let orig = model.params()[i];
            model.params_mut()[i] = orig + eps;
            let up = model.loss(&batch).unwrap();
            model.params_mut()[i] = orig - eps;
            let down = model.loss(&batch).unwrap();
            model.params_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let a = analytic[i];
            let diff = (a - numeric).abs();
            // parameters the batch never touches have zero gradient on both routes
            if diff < 1e-8 {
                continue;
            }
            let rel = diff / a.abs().max(numeric.abs());
            if rel > worst.0 {
                worst = (rel, format!("{name}[{i}] analytic {a:e} numeric {numeric:e}"));
            }
        }
    }
    assert!(worst.0 < 1e-3, "seed {seed}: worst relative error {} at {}", worst.0, worst.1);
}

#[test]
fn gradients_match_finite_differences() {
    for seed in [1, 2, 3] {
        check_gradients(seed, false);
    }
}

#[test]
fn gradients_match_finite_differences_masked() {
    check_gradients(4, true);
}

#[test]
fn decoder_is_causal() {
    let model = ConvSeq2SeqF32::new(tiny(11)).unwrap();
    let input = [4, 5, 6, 7];
    let target = [4, 5, 6, 7, 4];
    let base = model.sequence_logprobs(&input, &target).unwrap();
    for t in 0..target.len() {
        let mut perturbed = target;
        for s in perturbed.iter_mut().skip(t) {
            *s = if *s == 7 { 5 } else { 7 };
        }
        let rows = model.sequence_logprobs(&input, &perturbed).unwrap();
        // position t predicts target[t] from target[..t]
        assert_eq!(rows[t], base[t], "position {t}");
        let prefix = model.next_symbol_logprobs(&input, &target[..t]).unwrap();
        for (a, b) in prefix.iter().zip(&base[t]) {
            assert!((a - b).abs() < 1e-6 || a == b);
        }
    }
}

#[test]
fn masked_input_ignores_input_content() {
    let model = ConvSeq2SeqF32::new(tiny(12)).unwrap();
    let a = Batch::new(vec![(vec![4, 5, 6], vec![4, 5])], true).unwrap();
    let b = Batch::new(vec![(vec![8], vec![4, 5])], true).unwrap();
    assert_eq!(a.inputs()[0], vec![MASK]);
    assert_eq!(model.batch_codelength(&a).unwrap(), model.batch_codelength(&b).unwrap());
}

#[test]
fn overfits_one_batch() {
    // the measurement configuration, optimizer included
    let cfg = ModelConfig { max_len: 8, ..ModelConfig::default() }
        .with_vocab(12, 12)
        .with_seed(5);
    let mut model = ConvSeq2SeqF32::new(cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let batch = random_batch(&mut rng, 8, 12, 12, false);
    let initial = model.loss(&batch).unwrap();
    for _ in 0..200 {
        model.train_step(&batch).unwrap();
    }
    let fin = model.loss(&batch).unwrap();
    assert!(fin < 0.1 * initial, "initial {initial} final {fin}");
}

#[test]
fn training_reduces_held_batch_loss_for_most_seeds() {
    let seeds = 0..20u64;
    let mut improved = 0;
    for seed in seeds.clone() {
        let mut model = ConvSeq2SeqF32::new(tiny(seed)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let batch = random_batch(&mut rng, 8, 9, 8, false);
        let before = model.loss(&batch).unwrap();
        for _ in 0..50 {
            model.train_step(&batch).unwrap();
        }
        if model.loss(&batch).unwrap() < before {
            improved += 1;
        }
    }
    assert!(improved as f64 >= 0.95 * seeds.count() as f64, "{improved}/20");
}

#[test]
fn same_history_same_state() {
    let run = || {
        let mut model = ConvSeq2SeqF32::new(tiny(3)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut losses = Vec::new();
        for _ in 0..5 {
            let b = random_batch(&mut rng, 4, 9, 8, false);
            losses.push(model.train_step(&b).unwrap().to_bits());
        }
        (model.to_json(), losses)
    };
    assert_eq!(run(), run());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn distributions_sum_to_one(seed in 0u64..1000, input in prop::collection::vec(4u32..9, 1..8),
                                prefix in prop::collection::vec(4u32..8, 0..8)) {
        let model = ConvSeq2SeqF32::new(tiny(seed)).unwrap();
        let lp = model.next_symbol_logprobs(&input, &prefix).unwrap();
        let total: f64 = lp.iter().map(|x| x.exp2()).sum();
        prop_assert!((total - 1.0).abs() < 1e-6);
    }
}
