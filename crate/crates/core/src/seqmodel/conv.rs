//! Convolutional encoder-decoder with gated linear units and dot-product
//! attention, trained with hand-written backpropagation.
//!
//! Encoder, per input position `t`:
//!
//! ```text
//! e_t = tok_in[x_t] + pos_in[t]
//! h_t = e_t W_ein + b_ein
//! z_t = GLU(conv_k(h)_t) + h_t          (zero padding on both sides)
//! ```
//!
//! Decoder, fed `BOS y_1 .. y_L` and predicting `y_1 .. y_L EOS`:
//!
//! ```text
//! u_t   = (tok_out[y_t] + pos_out[t]) W_din + b_din
//! d_t   = GLU(causal_conv_k(u)_t) + u_t
//! q_t   = d_t W_q + b_q
//! a_t   = softmax_j(q_t . z_j / sqrt(H))
//! o_t   = d_t + sum_j a_tj z_j
//! p(.|) = softmax(o_t W_out + b_out)    (PAD, BOS and MASK excluded)
//! ```
//!
//! All parameters live in one flat buffer; [`Layout`] names the slices.

use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::{Batch, ModelConfig, ModelError, SequenceModel};
use crate::corpus::{BOS, EOS, MASK, NUM_RESERVED, PAD};
use crate::scalar::Scalar;
use crate::seeding::{self, Purpose};

const LN2: f64 = std::f64::consts::LN_2;

#[derive(Debug, Clone, PartialEq)]
struct Layout {
    enc_tok: Range<usize>,
    enc_pos: Range<usize>,
    enc_in_w: Range<usize>,
    enc_in_b: Range<usize>,
    enc_conv_w: Range<usize>,
    enc_conv_b: Range<usize>,
    dec_tok: Range<usize>,
    dec_pos: Range<usize>,
    dec_in_w: Range<usize>,
    dec_in_b: Range<usize>,
    dec_conv_w: Range<usize>,
    dec_conv_b: Range<usize>,
    att_w: Range<usize>,
    att_b: Range<usize>,
    out_w: Range<usize>,
    out_b: Range<usize>,
    total: usize,
}

impl Layout {
    fn new(c: &ModelConfig) -> Self {
        let (e, h, k) = (c.embed_dim, c.hidden_dim, c.kernel_width);
        let positions = c.max_len + 1;
        let mut off = 0;
        let mut take = |n: usize| {
            let r = off..off + n;
            off += n;
            r
        };
        let mut l = Self {
            enc_tok: take(c.input_vocab * e),
            enc_pos: take(positions * e),
            enc_in_w: take(e * h),
            enc_in_b: take(h),
            enc_conv_w: take(k * h * 2 * h),
            enc_conv_b: take(2 * h),
            dec_tok: take(c.output_vocab * e),
            dec_pos: take(positions * e),
            dec_in_w: take(e * h),
            dec_in_b: take(h),
            dec_conv_w: take(k * h * 2 * h),
            dec_conv_b: take(2 * h),
            att_w: take(h * h),
            att_b: take(h),
            out_w: take(h * c.output_vocab),
            out_b: take(c.output_vocab),
            total: 0,
        };
        l.total = l.out_b.end;
        l
    }

    /// (name, slice, init bound) for every parameter group, in layout order.
    fn groups(&self, c: &ModelConfig) -> Vec<(&'static str, Range<usize>, f64)> {
        let inv_sqrt = |n: usize| 1.0 / (n as f64).sqrt();
        let (e, h, k) = (c.embed_dim, c.hidden_dim, c.kernel_width);
        vec![
            ("enc_tok", self.enc_tok.clone(), inv_sqrt(e)),
            ("enc_pos", self.enc_pos.clone(), inv_sqrt(e)),
            ("enc_in_w", self.enc_in_w.clone(), inv_sqrt(e)),
            ("enc_in_b", self.enc_in_b.clone(), inv_sqrt(e)),
            ("enc_conv_w", self.enc_conv_w.clone(), inv_sqrt(k * h)),
            ("enc_conv_b", self.enc_conv_b.clone(), inv_sqrt(k * h)),
            ("dec_tok", self.dec_tok.clone(), inv_sqrt(e)),
            ("dec_pos", self.dec_pos.clone(), inv_sqrt(e)),
            ("dec_in_w", self.dec_in_w.clone(), inv_sqrt(e)),
            ("dec_in_b", self.dec_in_b.clone(), inv_sqrt(e)),
            ("dec_conv_w", self.dec_conv_w.clone(), inv_sqrt(k * h)),
            ("dec_conv_b", self.dec_conv_b.clone(), inv_sqrt(k * h)),
            ("att_w", self.att_w.clone(), inv_sqrt(h)),
            ("att_b", self.att_b.clone(), inv_sqrt(h)),
            ("out_w", self.out_w.clone(), inv_sqrt(h)),
            ("out_b", self.out_b.clone(), inv_sqrt(h)),
        ]
    }
}

/// Padded index tensors for one batch.
struct Prepared {
    batch: usize,
    enc_t: usize,
    dec_t: usize,
    enc_len: Vec<usize>,
    dec_len: Vec<usize>,
    enc_tok: Vec<u32>,
    dec_in: Vec<u32>,
    dec_tgt: Vec<u32>,
}

impl Prepared {
    fn scored(&self) -> usize {
        self.dec_len.iter().sum()
    }

    fn enc_valid(&self, row: usize) -> bool {
        row % self.enc_t < self.enc_len[row / self.enc_t]
    }

    fn dec_valid(&self, row: usize) -> bool {
        row % self.dec_t < self.dec_len[row / self.dec_t]
    }
}

/// Activations kept for the backward pass.
struct Cache<T> {
    emb_e: Vec<T>,
    col_e: Vec<T>,
    // first half: linear part, second half: sigmoid of the gate
    glu_e: Vec<T>,
    z: Vec<T>,
    emb_d: Vec<T>,
    col_d: Vec<T>,
    glu_d: Vec<T>,
    d: Vec<T>,
    q: Vec<T>,
    attn: Vec<T>,
    o: Vec<T>,
    logp: Vec<T>,
}

/// The canonical conditional sequence model.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvSeq2Seq<T> {
    config: ModelConfig,
    layout: Layout,
    params: Vec<T>,
    adam: AdamState<T>,
}

/// Serialized model: configuration, step count, parameters and optimizer
/// moments. JSON round-trips exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint<T> {
    pub format: String,
    pub version: u32,
    pub scalar: String,
    pub config: ModelConfig,
    pub step: u64,
    pub params: Vec<T>,
    pub adam_m: Vec<T>,
    pub adam_v: Vec<T>,
}

const CHECKPOINT_FORMAT: &str = "mutcomp-convseq2seq";
const CHECKPOINT_VERSION: u32 = 1;

impl<T: Scalar> ConvSeq2Seq<T> {
    /// Initializes every parameter uniformly in `±1/sqrt(fan_in)` from the
    /// ChaCha8 stream of `config.seed`.
    pub fn new(config: ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let layout = Layout::new(&config);
        let mut params = vec![T::zero(); layout.total];
        let mut rng = seeding::rng(config.seed, Purpose::ModelInit);
        for (_, range, bound) in layout.groups(&config) {
            for p in &mut params[range] {
                *p = T::lit((rng.random::<f64>() * 2.0 - 1.0) * bound);
            }
        }
        let adam = AdamState::new(layout.total);
        Ok(Self { config, layout, params, adam })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.layout.total
    }

    pub fn step(&self) -> u64 {
        self.adam.step
    }

    /// Named parameter groups and their slices of [`params`](Self::params).
    pub fn param_groups(&self) -> Vec<(&'static str, Range<usize>)> {
        self.layout.groups(&self.config).into_iter().map(|(n, r, _)| (n, r)).collect()
    }

    pub fn to_checkpoint(&self) -> Checkpoint<T> {
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            scalar: T::NAME.into(),
            config: self.config.clone(),
            step: self.adam.step,
            params: self.params.clone(),
            adam_m: self.adam.m.clone(),
            adam_v: self.adam.v.clone(),
        }
    }

    pub fn from_checkpoint(ck: Checkpoint<T>) -> Result<Self, ModelError> {
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(ModelError::Checkpoint(format!("unsupported format {} v{}", ck.format, ck.version)));
        }
        if ck.scalar != T::NAME {
            return Err(ModelError::Checkpoint(format!("scalar type {} does not match {}", ck.scalar, T::NAME)));
        }
        ck.config.validate()?;
        let layout = Layout::new(&ck.config);
        if [ck.params.len(), ck.adam_m.len(), ck.adam_v.len()].iter().any(|&n| n != layout.total) {
            return Err(ModelError::Checkpoint("parameter count does not match config".into()));
        }
        if ck.params.iter().any(|p| !p.is_finite()) {
            return Err(ModelError::Checkpoint("non-finite parameter".into()));
        }
        Ok(Self {
            config: ck.config,
            layout,
            params: ck.params,
            adam: AdamState { m: ck.adam_m, v: ck.adam_v, step: ck.step },
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_checkpoint()).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let ck: Checkpoint<T> =
            serde_json::from_str(text).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        Self::from_checkpoint(ck)
    }

    /// Mean negative log-likelihood of the batch in bits per scored symbol.
    pub fn loss(&self, batch: &Batch) -> Result<f64, ModelError> {
        let prep = self.prepare(batch.inputs(), batch.targets())?;
        let cache = self.forward(&prep);
        Ok(self.nll_nats(&prep, &cache) / LN2 / prep.scored() as f64)
    }

    /// The mean loss in bits per symbol and its gradient with respect to
    /// every parameter, in [`params`](Self::params) order.
    pub fn loss_and_gradient(&self, batch: &Batch) -> Result<(f64, Vec<T>), ModelError> {
        let prep = self.prepare(batch.inputs(), batch.targets())?;
        let cache = self.forward(&prep);
        let loss = self.nll_nats(&prep, &cache) / LN2 / prep.scored() as f64;
        let grad = self.backward(&prep, &cache);
        Ok((loss, grad))
    }

    /// Base-2 log-probabilities at every decoder position for one pair:
    /// row `t` is the distribution of `target[t]` (row `target.len()` is the
    /// distribution of the symbol after the whole target).
    pub fn sequence_logprobs(&self, input: &[u32], target: &[u32]) -> Result<Vec<Vec<f64>>, ModelError> {
        let prep = self.prepare(&[input.to_vec()], &[target.to_vec()])?;
        let cache = self.forward(&prep);
        let v = self.config.output_vocab;
        Ok((0..prep.dec_len[0])
            .map(|t| cache.logp[t * v..(t + 1) * v].iter().map(|x| x.to_f64().unwrap() / LN2).collect())
            .collect())
    }

    fn slice(&self, r: &Range<usize>) -> &[T] {
        &self.params[r.clone()]
    }

    fn prepare(&self, inputs: &[Vec<u32>], targets: &[Vec<u32>]) -> Result<Prepared, ModelError> {
        let c = &self.config;
        if targets.is_empty() {
            return Err(ModelError::EmptyBatch);
        }
        for input in inputs {
            if input.is_empty() {
                return Err(ModelError::Config("empty input sequence; mask it instead".into()));
            }
            if input.len() > c.max_len {
                return Err(ModelError::TooLong { len: input.len(), max: c.max_len });
            }
            if let Some(&bad) = input.iter().find(|&&s| s as usize >= c.input_vocab || s == PAD || s == BOS || s == EOS) {
                return Err(ModelError::BadSymbol { index: bad, side: "input", size: c.input_vocab });
            }
        }
        for target in targets {
            if target.len() > c.max_len {
                return Err(ModelError::TooLong { len: target.len(), max: c.max_len });
            }
            if let Some(&bad) = target.iter().find(|&&s| s < NUM_RESERVED || s as usize >= c.output_vocab) {
                return Err(ModelError::BadSymbol { index: bad, side: "output", size: c.output_vocab });
            }
        }
        let batch = targets.len();
        let enc_len: Vec<usize> = inputs.iter().map(Vec::len).collect();
        let dec_len: Vec<usize> = targets.iter().map(|t| t.len() + 1).collect();
        let enc_t = *enc_len.iter().max().unwrap();
        let dec_t = *dec_len.iter().max().unwrap();
        let mut enc_tok = vec![PAD; batch * enc_t];
        let mut dec_in = vec![PAD; batch * dec_t];
        let mut dec_tgt = vec![PAD; batch * dec_t];
        for b in 0..batch {
            enc_tok[b * enc_t..b * enc_t + enc_len[b]].copy_from_slice(&inputs[b]);
            let row = &mut dec_in[b * dec_t..];
            row[0] = BOS;
            row[1..dec_len[b]].copy_from_slice(&targets[b]);
            let row = &mut dec_tgt[b * dec_t..];
            row[..dec_len[b] - 1].copy_from_slice(&targets[b]);
            row[dec_len[b] - 1] = EOS;
        }
        Ok(Prepared { batch, enc_t, dec_t, enc_len, dec_len, enc_tok, dec_in, dec_tgt })
    }

    fn forward(&self, p: &Prepared) -> Cache<T> {
        let c = &self.config;
        let (e, h, k, v) = (c.embed_dim, c.hidden_dim, c.kernel_width, c.output_vocab);
        let l = &self.layout;
        let re = p.batch * p.enc_t;
        let rd = p.batch * p.dec_t;

        // encoder
        let emb_e = embed(self.slice(&l.enc_tok), self.slice(&l.enc_pos), &p.enc_tok, p.enc_t, &p.enc_len, e);
        let mut hid = linear(&emb_e, re, e, self.slice(&l.enc_in_w), self.slice(&l.enc_in_b), h);
        zero_rows(&mut hid, h, |r| !p.enc_valid(r));
        let col_e = im2col(&hid, p.enc_t, &p.enc_len, h, k, (k - 1) / 2);
        let mut glu_e = linear(&col_e, re, k * h, self.slice(&l.enc_conv_w), self.slice(&l.enc_conv_b), 2 * h);
        let mut z = glu_forward(&mut glu_e, h);
        for (zi, hi) in z.iter_mut().zip(&hid) {
            *zi += *hi;
        }
        zero_rows(&mut z, h, |r| !p.enc_valid(r));

        // decoder
        let emb_d = embed(self.slice(&l.dec_tok), self.slice(&l.dec_pos), &p.dec_in, p.dec_t, &p.dec_len, e);
        let mut u = linear(&emb_d, rd, e, self.slice(&l.dec_in_w), self.slice(&l.dec_in_b), h);
        zero_rows(&mut u, h, |r| !p.dec_valid(r));
        let col_d = im2col(&u, p.dec_t, &p.dec_len, h, k, k - 1);
        let mut glu_d = linear(&col_d, rd, k * h, self.slice(&l.dec_conv_w), self.slice(&l.dec_conv_b), 2 * h);
        let mut d = glu_forward(&mut glu_d, h);
        for (di, ui) in d.iter_mut().zip(&u) {
            *di += *ui;
        }
        let q = linear(&d, rd, h, self.slice(&l.att_w), self.slice(&l.att_b), h);

        // attention
        let scale = T::lit(1.0 / (h as f64).sqrt());
        let (te, td) = (p.enc_t, p.dec_t);
        let mut attn = vec![T::zero(); p.batch * td * te];
        let mut o = d.clone();
        let mut ctx = vec![T::zero(); td * h];
        for b in 0..p.batch {
            let qb = &q[b * td * h..(b + 1) * td * h];
            let zb = &z[b * te * h..(b + 1) * te * h];
            let ab = &mut attn[b * td * te..(b + 1) * td * te];
            T::gemm(false, true, td, te, h, scale, qb, zb, T::zero(), ab);
            for row in ab.chunks_exact_mut(te) {
                masked_softmax(row, p.enc_len[b]);
            }
            T::gemm(false, false, td, h, te, T::one(), ab, zb, T::zero(), &mut ctx);
            for (oi, ci) in o[b * td * h..(b + 1) * td * h].iter_mut().zip(&ctx) {
                *oi += *ci;
            }
        }

        let mut logp = linear(&o, rd, h, self.slice(&l.out_w), self.slice(&l.out_b), v);
        for row in logp.chunks_exact_mut(v) {
            for s in [PAD, BOS, MASK] {
                row[s as usize] = T::neg_infinity();
            }
            log_softmax(row);
        }

        Cache { emb_e, col_e, glu_e, z, emb_d, col_d, glu_d, d, q, attn, o, logp }
    }

    /// Sum over scored positions of `-ln p(target)`.
    fn nll_nats(&self, p: &Prepared, cache: &Cache<T>) -> f64 {
        let v = self.config.output_vocab;
        (0..p.batch * p.dec_t)
            .filter(|&r| p.dec_valid(r))
            .map(|r| -cache.logp[r * v + p.dec_tgt[r] as usize].to_f64().unwrap())
            .sum()
    }

    fn backward(&self, p: &Prepared, cache: &Cache<T>) -> Vec<T> {
        let c = &self.config;
        let (e, h, k, v) = (c.embed_dim, c.hidden_dim, c.kernel_width, c.output_vocab);
        let l = &self.layout;
        let (te, td) = (p.enc_t, p.dec_t);
        let re = p.batch * te;
        let rd = p.batch * td;
        let mut grad = vec![T::zero(); l.total];

        // d loss / d logits for the mean loss in bits
        let w = T::lit(1.0 / (p.scored() as f64 * LN2));
        let mut dlogits = vec![T::zero(); rd * v];
        for r in (0..rd).filter(|&r| p.dec_valid(r)) {
            let row = &mut dlogits[r * v..(r + 1) * v];
            for (g, lp) in row.iter_mut().zip(&cache.logp[r * v..(r + 1) * v]) {
                *g = w * lp.exp();
            }
            row[p.dec_tgt[r] as usize] -= w;
        }
        let dout = linear_backward(
            &cache.o,
            &dlogits,
            rd,
            h,
            v,
            self.slice(&l.out_w),
            &mut grad,
            &l.out_w,
            &l.out_b,
        );

        // attention
        let scale = T::lit(1.0 / (h as f64).sqrt());
        let mut dd = dout.clone();
        let mut dq = vec![T::zero(); rd * h];
        let mut dz = vec![T::zero(); re * h];
        let mut da = vec![T::zero(); td * te];
        for b in 0..p.batch {
            let dctx = &dout[b * td * h..(b + 1) * td * h];
            let zb = &cache.z[b * te * h..(b + 1) * te * h];
            let qb = &cache.q[b * td * h..(b + 1) * td * h];
            let ab = &cache.attn[b * td * te..(b + 1) * td * te];
            let dzb = &mut dz[b * te * h..(b + 1) * te * h];
            T::gemm(false, true, td, te, h, T::one(), dctx, zb, T::zero(), &mut da);
            T::gemm(true, false, te, h, td, T::one(), ab, dctx, T::one(), dzb);
            for (drow, arow) in da.chunks_exact_mut(te).zip(ab.chunks_exact(te)) {
                let dot: T = drow.iter().zip(arow).map(|(&x, &y)| x * y).sum();
                for (dx, &ax) in drow.iter_mut().zip(arow) {
                    *dx = ax * (*dx - dot) * scale;
                }
            }
            T::gemm(false, false, td, h, te, T::one(), &da, zb, T::zero(), &mut dq[b * td * h..(b + 1) * td * h]);
            T::gemm(true, false, te, h, td, T::one(), &da, qb, T::one(), dzb);
        }
        let dd_q = linear_backward(&cache.d, &dq, rd, h, h, self.slice(&l.att_w), &mut grad, &l.att_w, &l.att_b);
        for (x, y) in dd.iter_mut().zip(&dd_q) {
            *x += *y;
        }

        // decoder layer: d = GLU(conv(u)) + u
        let dpre = glu_backward(&dd, &cache.glu_d, h);
        let dcol = linear_backward(
            &cache.col_d,
            &dpre,
            rd,
            k * h,
            2 * h,
            self.slice(&l.dec_conv_w),
            &mut grad,
            &l.dec_conv_w,
            &l.dec_conv_b,
        );
        let mut du = dd;
        col2im(&dcol, &mut du, td, &p.dec_len, h, k, k - 1);
        zero_rows(&mut du, h, |r| !p.dec_valid(r));
        let demb = linear_backward(
            &cache.emb_d,
            &du,
            rd,
            e,
            h,
            self.slice(&l.dec_in_w),
            &mut grad,
            &l.dec_in_w,
            &l.dec_in_b,
        );
        embed_backward(&demb, &p.dec_in, td, &p.dec_len, e, &mut grad, &l.dec_tok, &l.dec_pos);

        // encoder layer: z = GLU(conv(h)) + h
        zero_rows(&mut dz, h, |r| !p.enc_valid(r));
        let dpre = glu_backward(&dz, &cache.glu_e, h);
        let dcol = linear_backward(
            &cache.col_e,
            &dpre,
            re,
            k * h,
            2 * h,
            self.slice(&l.enc_conv_w),
            &mut grad,
            &l.enc_conv_w,
            &l.enc_conv_b,
        );
        let mut dh = dz;
        col2im(&dcol, &mut dh, te, &p.enc_len, h, k, (k - 1) / 2);
        zero_rows(&mut dh, h, |r| !p.enc_valid(r));
        let demb = linear_backward(
            &cache.emb_e,
            &dh,
            re,
            e,
            h,
            self.slice(&l.enc_in_w),
            &mut grad,
            &l.enc_in_w,
            &l.enc_in_b,
        );
        embed_backward(&demb, &p.enc_tok, te, &p.enc_len, e, &mut grad, &l.enc_tok, &l.enc_pos);
        grad
    }
}

impl<T: Scalar> SequenceModel for ConvSeq2Seq<T> {
    fn output_vocab(&self) -> usize {
        self.config.output_vocab
    }

    fn next_symbol_logprobs(&self, input: &[u32], prefix: &[u32]) -> Result<Vec<f64>, ModelError> {
        let mut rows = self.sequence_logprobs(input, prefix)?;
        Ok(rows.pop().expect("decoder has at least one position"))
    }

    fn batch_codelength(&self, batch: &Batch) -> Result<f64, ModelError> {
        let prep = self.prepare(batch.inputs(), batch.targets())?;
        let cache = self.forward(&prep);
        Ok(self.nll_nats(&prep, &cache) / LN2)
    }

    fn train_step(&mut self, batch: &Batch) -> Result<f64, ModelError> {
        let (loss, mut grad) = self.loss_and_gradient(batch)?;
        let step = self.adam.step + 1;
        if !loss.is_finite() {
            return Err(ModelError::NonFinite { what: "loss", step });
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(ModelError::NonFinite { what: "gradient", step });
        }
        let mut params = self.params.clone();
        let mut adam = self.adam.clone();
        adam.update(&self.config.optimizer, &mut params, &mut grad);
        if params.iter().any(|p| !p.is_finite()) {
            return Err(ModelError::NonFinite { what: "parameter", step });
        }
        self.params = params;
        self.adam = adam;
        Ok(loss)
    }
}

fn embed<T: Scalar>(tok: &[T], pos: &[T], ids: &[u32], width: usize, lens: &[usize], e: usize) -> Vec<T> {
    let mut out = vec![T::zero(); ids.len() * e];
    for (b, &len) in lens.iter().enumerate() {
        for t in 0..len {
            let r = b * width + t;
            let id = ids[r] as usize;
            let dst = &mut out[r * e..(r + 1) * e];
            for ((o, &x), &y) in dst.iter_mut().zip(&tok[id * e..(id + 1) * e]).zip(&pos[t * e..(t + 1) * e]) {
                *o = x + y;
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn embed_backward<T: Scalar>(
    demb: &[T],
    ids: &[u32],
    width: usize,
    lens: &[usize],
    e: usize,
    grad: &mut [T],
    tok: &Range<usize>,
    pos: &Range<usize>,
) {
    for (b, &len) in lens.iter().enumerate() {
        for t in 0..len {
            let r = b * width + t;
            let src = &demb[r * e..(r + 1) * e];
            let id = ids[r] as usize;
            for (g, &d) in grad[tok.start + id * e..tok.start + (id + 1) * e].iter_mut().zip(src) {
                *g += d;
            }
            for (g, &d) in grad[pos.start + t * e..pos.start + (t + 1) * e].iter_mut().zip(src) {
                *g += d;
            }
        }
    }
}

/// `x W + b` for `rows` rows.
fn linear<T: Scalar>(x: &[T], rows: usize, din: usize, w: &[T], bias: &[T], dout: usize) -> Vec<T> {
    let mut y: Vec<T> = Vec::with_capacity(rows * dout);
    for _ in 0..rows {
        y.extend_from_slice(bias);
    }
    T::gemm(false, false, rows, dout, din, T::one(), x, w, T::one(), &mut y);
    y
}

/// Accumulates the weight and bias gradients of `y = x W + b` and returns
/// the gradient with respect to `x`.
#[allow(clippy::too_many_arguments)]
fn linear_backward<T: Scalar>(
    x: &[T],
    dy: &[T],
    rows: usize,
    din: usize,
    dout: usize,
    w: &[T],
    grad: &mut [T],
    w_range: &Range<usize>,
    b_range: &Range<usize>,
) -> Vec<T> {
    T::gemm(true, false, din, dout, rows, T::one(), x, dy, T::one(), &mut grad[w_range.clone()]);
    let gb = &mut grad[b_range.clone()];
    for row in dy.chunks_exact(dout) {
        for (g, &d) in gb.iter_mut().zip(row) {
            *g += d;
        }
    }
    let mut dx = vec![T::zero(); rows * din];
    T::gemm(false, true, rows, din, dout, T::one(), dy, w, T::zero(), &mut dx);
    dx
}

fn zero_rows<T: Scalar>(x: &mut [T], width: usize, pred: impl Fn(usize) -> bool) {
    for (r, row) in x.chunks_exact_mut(width).enumerate() {
        if pred(r) {
            row.fill(T::zero());
        }
    }
}

/// Row `(b, t)` of the result holds `x[b, t + j - shift]` in block `j` for
/// `j in 0..k`, zero where that position falls outside the sequence.
fn im2col<T: Scalar>(x: &[T], width: usize, lens: &[usize], h: usize, k: usize, shift: usize) -> Vec<T> {
    let mut col = vec![T::zero(); lens.len() * width * k * h];
    for (b, &len) in lens.iter().enumerate() {
        for t in 0..len {
            let r = b * width + t;
            for j in 0..k {
                let src = t + j;
                if src < shift || src - shift >= len {
                    continue;
                }
                let sr = b * width + src - shift;
                col[(r * k + j) * h..(r * k + j + 1) * h].copy_from_slice(&x[sr * h..(sr + 1) * h]);
            }
        }
    }
    col
}

fn col2im<T: Scalar>(dcol: &[T], dx: &mut [T], width: usize, lens: &[usize], h: usize, k: usize, shift: usize) {
    for (b, &len) in lens.iter().enumerate() {
        for t in 0..len {
            let r = b * width + t;
            for j in 0..k {
                let src = t + j;
                if src < shift || src - shift >= len {
                    continue;
                }
                let sr = b * width + src - shift;
                for (g, &d) in dx[sr * h..(sr + 1) * h].iter_mut().zip(&dcol[(r * k + j) * h..(r * k + j + 1) * h]) {
                    *g += d;
                }
            }
        }
    }
}

/// Applies the gated linear unit to rows of width `2h`: returns `a * s`
/// and overwrites the gate half of `pre` with `s = sigmoid(gate)`.
fn glu_forward<T: Scalar>(pre: &mut [T], h: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(pre.len() / 2);
    for row in pre.chunks_exact_mut(2 * h) {
        let (a, g) = row.split_at_mut(h);
        for (&ai, gi) in a.iter().zip(g.iter_mut()) {
            *gi = T::one() / (T::one() + (-*gi).exp());
            out.push(ai * *gi);
        }
    }
    out
}

fn glu_backward<T: Scalar>(dout: &[T], glu: &[T], h: usize) -> Vec<T> {
    let mut dpre = vec![T::zero(); glu.len()];
    for ((drow, grow), dy) in dpre.chunks_exact_mut(2 * h).zip(glu.chunks_exact(2 * h)).zip(dout.chunks_exact(h)) {
        let (a, s) = grow.split_at(h);
        let (da, dg) = drow.split_at_mut(h);
        for i in 0..h {
            da[i] = dy[i] * s[i];
            dg[i] = dy[i] * a[i] * s[i] * (T::one() - s[i]);
        }
    }
    dpre
}

fn masked_softmax<T: Scalar>(row: &mut [T], valid: usize) {
    let max = row[..valid].iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for x in &mut row[..valid] {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in &mut row[..valid] {
        *x /= sum;
    }
    row[valid..].fill(T::zero());
}

fn log_softmax<T: Scalar>(row: &mut [T]) {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let sum: T = row.iter().map(|&x| (x - max).exp()).sum();
    let lse = max + sum.ln();
    for x in row.iter_mut() {
        *x = *x - lse;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ModelConfig {
        ModelConfig {
            embed_dim: 4,
            hidden_dim: 4,
            max_len: 8,
            ..ModelConfig::default()
        }
        .with_vocab(7, 8)
        .with_seed(7)
    }

    fn batch() -> Batch {
        Batch::new(vec![(vec![4, 5, 6], vec![4, 5]), (vec![6], vec![7, 7, 6])], false).unwrap()
    }

    #[test]
    fn init_is_deterministic_and_seeded() {
        let a = ConvSeq2Seq::<f32>::new(tiny()).unwrap();
        let b = ConvSeq2Seq::<f32>::new(tiny()).unwrap();
        assert_eq!(a.params(), b.params());
        let c = ConvSeq2Seq::<f32>::new(tiny().with_seed(8)).unwrap();
        assert_ne!(a.params(), c.params());
        assert!(ConvSeq2Seq::<f32>::new(tiny().with_vocab(0, 8)).is_err());
    }

    #[test]
    fn distributions_normalize() {
        let m = ConvSeq2Seq::<f32>::new(tiny()).unwrap();
        for prefix in [&[][..], &[4], &[4, 7, 6]] {
            let lp = m.next_symbol_logprobs(&[4, 5], prefix).unwrap();
            let total: f64 = lp.iter().map(|x| x.exp2()).sum();
            assert!((total - 1.0).abs() < 1e-6, "{total}");
            for s in [PAD, BOS, MASK] {
                assert_eq!(lp[s as usize], f64::NEG_INFINITY);
            }
        }
    }

    #[test]
    fn overlong_sequences_rejected() {
        let m = ConvSeq2Seq::<f32>::new(tiny()).unwrap();
        assert!(matches!(m.next_symbol_logprobs(&[4; 9], &[]), Err(ModelError::TooLong { .. })));
        assert!(matches!(m.next_symbol_logprobs(&[4], &[4; 9]), Err(ModelError::TooLong { .. })));
        assert!(matches!(m.next_symbol_logprobs(&[4], &[2]), Err(ModelError::BadSymbol { .. })));
    }

    #[test]
    fn codelength_matches_loss() {
        let m = ConvSeq2Seq::<f64>::new(tiny()).unwrap();
        let b = batch();
        let bits = m.batch_codelength(&b).unwrap();
        let loss = m.loss(&b).unwrap();
        assert!((bits - loss * b.scored_positions() as f64).abs() < 1e-9);
    }

    #[test]
    fn batch_padding_does_not_change_scores() {
        let m = ConvSeq2Seq::<f64>::new(tiny()).unwrap();
        let b = batch();
        let joint = m.batch_codelength(&b).unwrap();
        let split: f64 = b
            .inputs()
            .iter()
            .zip(b.targets())
            .map(|(i, t)| m.batch_codelength(&Batch::new(vec![(i.clone(), t.clone())], false).unwrap()).unwrap())
            .sum();
        assert!((joint - split).abs() < 1e-9);
    }

    #[test]
    fn uniform_output_layer_gives_uniform_code() {
        let mut m = ConvSeq2Seq::<f64>::new(tiny()).unwrap();
        let l = m.layout.clone();
        m.params_mut()[l.out_w.start..l.out_b.end].fill(0.0);
        // valid outputs: 4 data symbols + EOS
        let b = Batch::new(vec![(vec![4, 5], vec![4, 5, 6])], false).unwrap();
        let bits = m.batch_codelength(&b).unwrap();
        assert!((bits - 4.0 * 5f64.log2()).abs() < 1e-9);
    }

    #[test]
    fn checkpoint_roundtrip() {
        let mut m = ConvSeq2Seq::<f32>::new(tiny()).unwrap();
        m.train_step(&batch()).unwrap();
        let json = m.to_json();
        let back = ConvSeq2Seq::<f32>::from_json(&json).unwrap();
        assert_eq!(back, m);
        assert!(ConvSeq2Seq::<f64>::from_json(&json).is_err());
    }

    #[test]
    fn train_step_rejects_non_finite() {
        let mut m = ConvSeq2Seq::<f64>::new(tiny()).unwrap();
        let before = m.clone();
        let l = m.layout.clone();
        m.params_mut()[l.out_b.start + 4] = f64::NAN;
        let poisoned = m.clone();
        assert!(matches!(m.train_step(&batch()), Err(ModelError::NonFinite { .. })));
        let bits = |x: &ConvSeq2Seq<f64>| x.params().iter().map(|p| p.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&m), bits(&poisoned));
        assert_eq!(m.step(), 0);
        assert_ne!(bits(&m), bits(&before));
    }
}
