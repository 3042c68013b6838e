//! Properties of the coding harness with the convolutional coder.

use mutcomp::corpus::{CorpusMeta, PairedCorpus, NUM_RESERVED};
use mutcomp::prequential::{mirs_codelength, run_suite, CodelengthTrace, Direction, ReplayConfig};
use mutcomp::seqmodel::{ModelConfig, ModelError};
use mutcomp::ConvSeq2SeqF32;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const VOCAB: u32 = 10;

fn small(seed: u64) -> Result<ConvSeq2SeqF32, ModelError> {
    let cfg = ModelConfig { embed_dim: 8, hidden_dim: 8, max_len: 8, ..ModelConfig::default() }
        .with_vocab(VOCAB as usize, VOCAB as usize)
        .with_seed(seed);
    ConvSeq2SeqF32::new(cfg)
}

fn replay() -> ReplayConfig {
    ReplayConfig { streams: 3, batch_size: 4, ..Default::default() }
}

fn random_pairs(seed: u64, n: usize) -> Vec<(Vec<u32>, Vec<u32>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seq = |rng: &mut ChaCha8Rng| (0..rng.random_range(1..6)).map(|_| rng.random_range(NUM_RESERVED..VOCAB)).collect();
    (0..n).map(|_| (seq(&mut rng), seq(&mut rng))).collect()
}

fn code(pairs: &[(Vec<u32>, Vec<u32>)], masked: bool, seed: u64) -> CodelengthTrace {
    mirs_codelength(pairs, small, &replay(), masked, seed).unwrap()
}

#[test]
fn same_seed_same_trace() {
    let pairs = random_pairs(1, 18);
    let a = code(&pairs, false, 3);
    assert_eq!(a, code(&pairs, false, 3));
    assert_ne!(a.per_batch_bits, code(&pairs, false, 4).per_batch_bits);
}

#[test]
fn trace_bookkeeping() {
    let pairs = random_pairs(2, 18);
    let t = code(&pairs, false, 1);
    assert_eq!(t.per_batch_bits.len(), 18usize.div_ceil(4));
    assert_eq!(t.symbol_count, pairs.iter().map(|(_, y)| y.len() + 1).sum::<usize>());
    assert!(t.per_batch_bits.iter().all(|&b| b > 0.0));
    let cum = t.cumulative();
    assert_eq!(*cum.last().unwrap(), t.total_bits);
    assert!(cum.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn suite_order_and_values_do_not_depend_on_workers() {
    let words: Vec<(String, Vec<String>)> = random_pairs(5, 12)
        .into_iter()
        .map(|(o, p)| {
            let w = o.iter().map(|&s| char::from(b'a' + s as u8)).collect();
            (w, p.iter().map(|s| s.to_string()).collect())
        })
        .collect();
    let corpus = PairedCorpus::from_words(CorpusMeta::new("t", Default::default()), &words).unwrap();
    let cfg = ModelConfig { embed_dim: 8, hidden_dim: 8, ..ModelConfig::default() };
    let run = |workers| {
        run_suite(&corpus, &Direction::BOTH, &[1, 2], &cfg, &replay(), workers)
            .into_iter()
            .map(|e| (e.direction, e.seed, e.outcome.unwrap().result))
            .collect::<Vec<_>>()
    };
    let serial = run(1);
    assert_eq!(serial.iter().map(|(d, s, _)| (*d, *s)).collect::<Vec<_>>(), vec![
        (Direction::OrthToPhon, 1),
        (Direction::OrthToPhon, 2),
        (Direction::PhonToOrth, 1),
        (Direction::PhonToOrth, 2),
    ]);
    assert_eq!(serial, run(3));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    // masking hides the input, so shuffling inputs across entries cannot
    // change the unconditional code length
    #[test]
    fn masked_trace_ignores_inputs(data_seed in 0u64..1000, perm_seed in 0u64..1000, seed in 0u64..50) {
        let pairs = random_pairs(data_seed, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(perm_seed);
        let mut inputs: Vec<Vec<u32>> = pairs.iter().map(|(x, _)| x.clone()).collect();
        for i in (1..inputs.len()).rev() {
            inputs.swap(i, rng.random_range(0..=i));
        }
        let shuffled: Vec<_> = inputs.into_iter().zip(pairs.iter().map(|(_, y)| y.clone())).collect();
        prop_assert_eq!(code(&pairs, true, seed), code(&shuffled, true, seed));
    }
}
