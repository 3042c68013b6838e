use super::{Batch, ModelError, SequenceModel};
use crate::corpus::{EOS, NUM_RESERVED};

/// Count-based model with additive (Laplace) smoothing that ignores the
/// input and the prefix. Exact arithmetic makes it the reference model for
/// testing the coding harness.
///
/// By default the target lengths are treated as known, so only data symbols
/// are coded and `EOS` carries no cost. With [`scoring_eos`](Self::scoring_eos)
/// `EOS` becomes an ordinary counted symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct UnigramOracle {
    counts: Vec<f64>,
    alpha: f64,
    score_eos: bool,
}

impl UnigramOracle {
    pub fn new(output_vocab: usize, alpha: f64) -> Result<Self, ModelError> {
        if output_vocab <= NUM_RESERVED as usize {
            return Err(ModelError::Config("unigram oracle needs at least one data symbol".into()));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(ModelError::Config("smoothing constant must be positive".into()));
        }
        Ok(Self { counts: vec![0.0; output_vocab], alpha, score_eos: false })
    }

    pub fn scoring_eos(mut self) -> Self {
        self.score_eos = true;
        self
    }

    /// Adds `n` observations of `symbol`.
    pub fn observe(&mut self, symbol: u32, n: f64) {
        self.counts[symbol as usize] += n;
    }

    fn in_support(&self, s: u32) -> bool {
        s >= NUM_RESERVED || (self.score_eos && s == EOS)
    }

    fn support_size(&self) -> usize {
        self.counts.len() - NUM_RESERVED as usize + usize::from(self.score_eos)
    }

    fn total(&self) -> f64 {
        (0..self.counts.len() as u32).filter(|&s| self.in_support(s)).map(|s| self.counts[s as usize]).sum()
    }

    fn log2_prob(&self, s: u32) -> f64 {
        if !self.in_support(s) {
            return f64::NEG_INFINITY;
        }
        let denom = self.total() + self.alpha * self.support_size() as f64;
        ((self.counts[s as usize] + self.alpha) / denom).log2()
    }

    fn coded_symbols<'a>(&'a self, batch: &'a Batch) -> impl Iterator<Item = u32> + 'a {
        batch.targets().iter().flat_map(move |t| {
            t.iter().copied().chain(self.score_eos.then_some(EOS))
        })
    }

    fn check(&self, batch: &Batch) -> Result<(), ModelError> {
        let size = self.counts.len();
        for &s in batch.targets().iter().flatten() {
            if s < NUM_RESERVED || s as usize >= size {
                return Err(ModelError::BadSymbol { index: s, side: "output", size });
            }
        }
        Ok(())
    }
}

impl SequenceModel for UnigramOracle {
    fn output_vocab(&self) -> usize {
        self.counts.len()
    }

    fn next_symbol_logprobs(&self, _input: &[u32], _prefix: &[u32]) -> Result<Vec<f64>, ModelError> {
        Ok((0..self.counts.len() as u32).map(|s| self.log2_prob(s)).collect())
    }

    fn batch_codelength(&self, batch: &Batch) -> Result<f64, ModelError> {
        self.check(batch)?;
        Ok(self.coded_symbols(batch).map(|s| -self.log2_prob(s)).sum())
    }

    fn train_step(&mut self, batch: &Batch) -> Result<f64, ModelError> {
        let bits = self.batch_codelength(batch)?;
        let symbols: Vec<u32> = self.coded_symbols(batch).collect();
        for &s in &symbols {
            self.counts[s as usize] += 1.0;
        }
        Ok(if symbols.is_empty() { 0.0 } else { bits / symbols.len() as f64 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // data symbols 4 ("a") and 5 ("b")
    fn oracle() -> UnigramOracle {
        UnigramOracle::new(6, 1.0).unwrap()
    }

    #[test]
    fn laplace_probabilities() {
        let mut m = oracle();
        m.observe(4, 1.0);
        m.observe(5, 2.0);
        let lp = m.next_symbol_logprobs(&[], &[]).unwrap();
        assert!((lp[4].exp2() - 2.0 / 5.0).abs() < 1e-15);
        assert!((lp[5].exp2() - 3.0 / 5.0).abs() < 1e-15);
        assert_eq!(lp[EOS as usize], f64::NEG_INFINITY);
    }

    #[test]
    fn sequential_binary_code() {
        // "0", "1", "1" coded one at a time: 1 + log2(3) + 1 bits
        let mut m = oracle();
        let mut total = 0.0;
        for s in [4, 5, 5] {
            let b = Batch::new(vec![(vec![], vec![s])], true).unwrap();
            total += m.batch_codelength(&b).unwrap();
            m.train_step(&b).unwrap();
        }
        assert!((total - (2.0 + 3f64.log2())).abs() < 1e-12);
    }

    #[test]
    fn eos_scoring_is_optional() {
        let m = oracle().scoring_eos();
        let b = Batch::new(vec![(vec![], vec![4, 5])], true).unwrap();
        // three symbols from a support of three, uniform
        assert!((m.batch_codelength(&b).unwrap() - 3.0 * 3f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn rejects_reserved_targets() {
        let m = oracle();
        let b = Batch::new(vec![(vec![], vec![EOS])], true).unwrap();
        assert!(m.batch_codelength(&b).is_err());
    }
}
