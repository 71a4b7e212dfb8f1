//! Model parameters and the plain (non-differentiable) forward paths:
//! encoding, one decoder step, greedy online decoding, and free-running
//! decoding under the expected (training-form) attention.

use super::{Mechanism, ModelConfig, END, START};
use crate::attention::{
    logistic, monotonic_alpha_row, monotonic_decode_step, selection_probabilities, soft_attention,
    AttentionRow, NoiseConfig,
};
use crate::chunkwise::{
    matcha_beta_row, matcha_decode_step, mocha_beta_row, mocha_decode_step, ChunkConfig,
};
use crate::energy::{AdditiveEnergyParams, DecoderQuery, Memory, NormalizedEnergyParams};
use crate::error::{Error, Result};
use crate::tensor::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Update/reset gated recurrent cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GruParams {
    pub w_z: Tensor,
    pub w_r: Tensor,
    pub w_c: Tensor,
    pub u_z: Tensor,
    pub u_r: Tensor,
    pub u_c: Tensor,
    pub b_z: Vec<f64>,
    pub b_r: Vec<f64>,
    pub b_c: Vec<f64>,
}

impl GruParams {
    pub fn init<R: Rng>(d_in: usize, d_out: usize, rng: &mut R) -> Self {
        let mut mat = |rows: usize, cols: usize| {
            let s = (6.0 / (rows + cols) as f64).sqrt();
            Tensor::from_vec((0..rows * cols).map(|_| rng.gen_range(-s..s)).collect(), rows, cols)
        };
        GruParams {
            w_z: mat(d_out, d_in),
            w_r: mat(d_out, d_in),
            w_c: mat(d_out, d_in),
            u_z: mat(d_out, d_out),
            u_r: mat(d_out, d_out),
            u_c: mat(d_out, d_out),
            b_z: vec![0.0; d_out],
            b_r: vec![0.0; d_out],
            b_c: vec![0.0; d_out],
        }
    }

    pub fn state_dim(&self) -> usize {
        self.w_z.rows()
    }

    /// One recurrence step: h' = (1-z) h + z tanh(W_c x + U_c (r h) + b_c).
    pub fn step(&self, x: &[f64], h: &[f64]) -> Vec<f64> {
        let d = self.state_dim();
        let mut z = vec![0.0; d];
        let mut r = vec![0.0; d];
        let mut cand = vec![0.0; d];
        let mut tmp = vec![0.0; d];

        self.w_z.matvec(x, &mut z);
        self.u_z.matvec(h, &mut tmp);
        for ((zv, t), b) in z.iter_mut().zip(&tmp).zip(&self.b_z) {
            *zv = logistic(*zv + t + b);
        }
        self.w_r.matvec(x, &mut r);
        self.u_r.matvec(h, &mut tmp);
        for ((rv, t), b) in r.iter_mut().zip(&tmp).zip(&self.b_r) {
            *rv = logistic(*rv + t + b);
        }
        let gated: Vec<f64> = r.iter().zip(h).map(|(rv, hv)| rv * hv).collect();
        self.w_c.matvec(x, &mut cand);
        self.u_c.matvec(&gated, &mut tmp);
        for ((c, t), b) in cand.iter_mut().zip(&tmp).zip(&self.b_c) {
            *c = (*c + t + b).tanh();
        }
        z.iter().zip(h).zip(&cand).map(|((zv, hv), cv)| (1.0 - zv) * hv + zv * cv).collect()
    }
}

/// A mutable view of one parameter group, used by the optimizer and the
/// finite-difference harness.
pub enum ParamMut<'a> {
    Matrix(&'a mut Tensor),
    Vector(&'a mut Vec<f64>),
    Scalar(&'a mut f64),
}

impl ParamMut<'_> {
    pub fn as_slice_mut(&mut self) -> &mut [f64] {
        match self {
            ParamMut::Matrix(t) => t.data_mut(),
            ParamMut::Vector(v) => v.as_mut_slice(),
            ParamMut::Scalar(s) => std::slice::from_mut(s),
        }
    }
}

/// An immutable view of one parameter group, convertible to a tensor for
/// staging on the tape.
pub enum ParamRef<'a> {
    Matrix(&'a Tensor),
    Vector(&'a Vec<f64>),
    Scalar(&'a f64),
}

impl ParamRef<'_> {
    pub fn to_tensor(&self) -> Tensor {
        match self {
            ParamRef::Matrix(t) => (*t).clone(),
            ParamRef::Vector(v) => Tensor::vector((*v).clone()),
            ParamRef::Scalar(s) => Tensor::scalar(**s),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ParamRef::Matrix(t) => t.len(),
            ParamRef::Vector(v) => v.len(),
            ParamRef::Scalar(_) => 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

const ENC_NAMES: [&str; 9] = [
    "enc_w_z", "enc_w_r", "enc_w_c", "enc_u_z", "enc_u_r", "enc_u_c", "enc_b_z", "enc_b_r",
    "enc_b_c",
];
const DEC_NAMES: [&str; 9] = [
    "dec_w_z", "dec_w_r", "dec_w_c", "dec_u_z", "dec_u_r", "dec_u_c", "dec_b_z", "dec_b_r",
    "dec_b_c",
];

/// Per-step attention trace: one row of weights per produced output token.
#[derive(Debug, Clone)]
pub struct AlignmentTrace {
    pub mechanism: Mechanism,
    pub memory_len: usize,
    pub rows: Vec<Vec<f64>>,
    /// Stop positions per step; None for soft attention or a step that ran
    /// off the end of the memory.
    pub stops: Vec<Option<usize>>,
}

/// Greedy decoding output.
#[derive(Debug, Clone)]
pub struct Transduction {
    /// Produced tokens, without the END sentinel.
    pub tokens: Vec<usize>,
    pub trace: AlignmentTrace,
    /// True when max_len was reached before an END token appeared.
    pub truncated: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelParams {
    pub config: ModelConfig,
    /// vocab x d_embed token embedding, shared by encoder and decoder.
    pub embed: Tensor,
    pub encoder: GruParams,
    pub decoder: GruParams,
    /// Additive energy for soft attention.
    pub soft_energy: AdditiveEnergyParams,
    /// Normalized energy driving the monotonic stopping decisions.
    pub mono_energy: NormalizedEnergyParams,
    /// Separate normalized energy for the chunk softmax.
    pub chunk_energy: NormalizedEnergyParams,
    /// vocab x (d_s + d_h) output projection over [state; context].
    pub out_w: Tensor,
    pub out_b: Vec<f64>,
}

impl ModelParams {
    pub fn init(config: ModelConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let embed = {
            let s = (6.0 / (config.vocab + config.d_embed) as f64).sqrt();
            Tensor::from_vec(
                (0..config.vocab * config.d_embed).map(|_| rng.gen_range(-s..s)).collect(),
                config.vocab,
                config.d_embed,
            )
        };
        let encoder = GruParams::init(config.d_embed, config.d_h, &mut rng);
        let decoder = GruParams::init(config.d_embed + config.d_h, config.d_s, &mut rng);
        let soft_energy = AdditiveEnergyParams::init(config.d_attn, config.d_h, config.d_s, &mut rng);
        let mono_energy = NormalizedEnergyParams::init(
            config.d_attn,
            config.d_h,
            config.d_s,
            config.energy_offset,
            &mut rng,
        );
        let chunk_energy = NormalizedEnergyParams::init(
            config.d_attn,
            config.d_h,
            config.d_s,
            config.energy_offset,
            &mut rng,
        );
        let out_dim = config.d_s + config.d_h;
        let out_w = {
            let s = (6.0 / (config.vocab + out_dim) as f64).sqrt();
            Tensor::from_vec(
                (0..config.vocab * out_dim).map(|_| rng.gen_range(-s..s)).collect(),
                config.vocab,
                out_dim,
            )
        };
        ModelParams {
            config,
            embed,
            encoder,
            decoder,
            soft_energy,
            mono_energy,
            chunk_energy,
            out_w,
            out_b: vec![0.0; config.vocab],
        }
    }

    pub fn visit(&self, f: &mut impl FnMut(&'static str, ParamRef<'_>)) {
        f("embed", ParamRef::Matrix(&self.embed));
        for (name, p) in Self::gru_refs(&self.encoder, &ENC_NAMES) {
            f(name, p);
        }
        for (name, p) in Self::gru_refs(&self.decoder, &DEC_NAMES) {
            f(name, p);
        }
        f("soft_w_h", ParamRef::Matrix(&self.soft_energy.w_h));
        f("soft_w_s", ParamRef::Matrix(&self.soft_energy.w_s));
        f("soft_b", ParamRef::Vector(&self.soft_energy.b));
        f("soft_v", ParamRef::Vector(&self.soft_energy.v));
        f("mono_w_h", ParamRef::Matrix(&self.mono_energy.base.w_h));
        f("mono_w_s", ParamRef::Matrix(&self.mono_energy.base.w_s));
        f("mono_b", ParamRef::Vector(&self.mono_energy.base.b));
        f("mono_v", ParamRef::Vector(&self.mono_energy.base.v));
        f("mono_g", ParamRef::Scalar(&self.mono_energy.g));
        f("mono_r", ParamRef::Scalar(&self.mono_energy.r));
        f("chunk_w_h", ParamRef::Matrix(&self.chunk_energy.base.w_h));
        f("chunk_w_s", ParamRef::Matrix(&self.chunk_energy.base.w_s));
        f("chunk_b", ParamRef::Vector(&self.chunk_energy.base.b));
        f("chunk_v", ParamRef::Vector(&self.chunk_energy.base.v));
        f("chunk_g", ParamRef::Scalar(&self.chunk_energy.g));
        f("chunk_r", ParamRef::Scalar(&self.chunk_energy.r));
        f("out_w", ParamRef::Matrix(&self.out_w));
        f("out_b", ParamRef::Vector(&self.out_b));
    }

    pub fn visit_mut(&mut self, f: &mut impl FnMut(&'static str, ParamMut<'_>)) {
        f("embed", ParamMut::Matrix(&mut self.embed));
        Self::gru_muts(&mut self.encoder, &ENC_NAMES, f);
        Self::gru_muts(&mut self.decoder, &DEC_NAMES, f);
        f("soft_w_h", ParamMut::Matrix(&mut self.soft_energy.w_h));
        f("soft_w_s", ParamMut::Matrix(&mut self.soft_energy.w_s));
        f("soft_b", ParamMut::Vector(&mut self.soft_energy.b));
        f("soft_v", ParamMut::Vector(&mut self.soft_energy.v));
        f("mono_w_h", ParamMut::Matrix(&mut self.mono_energy.base.w_h));
        f("mono_w_s", ParamMut::Matrix(&mut self.mono_energy.base.w_s));
        f("mono_b", ParamMut::Vector(&mut self.mono_energy.base.b));
        f("mono_v", ParamMut::Vector(&mut self.mono_energy.base.v));
        f("mono_g", ParamMut::Scalar(&mut self.mono_energy.g));
        f("mono_r", ParamMut::Scalar(&mut self.mono_energy.r));
        f("chunk_w_h", ParamMut::Matrix(&mut self.chunk_energy.base.w_h));
        f("chunk_w_s", ParamMut::Matrix(&mut self.chunk_energy.base.w_s));
        f("chunk_b", ParamMut::Vector(&mut self.chunk_energy.base.b));
        f("chunk_v", ParamMut::Vector(&mut self.chunk_energy.base.v));
        f("chunk_g", ParamMut::Scalar(&mut self.chunk_energy.g));
        f("chunk_r", ParamMut::Scalar(&mut self.chunk_energy.r));
        f("out_w", ParamMut::Matrix(&mut self.out_w));
        f("out_b", ParamMut::Vector(&mut self.out_b));
    }

    fn gru_refs<'a>(
        g: &'a GruParams,
        names: &'static [&'static str; 9],
    ) -> Vec<(&'static str, ParamRef<'a>)> {
        vec![
            (names[0], ParamRef::Matrix(&g.w_z)),
            (names[1], ParamRef::Matrix(&g.w_r)),
            (names[2], ParamRef::Matrix(&g.w_c)),
            (names[3], ParamRef::Matrix(&g.u_z)),
            (names[4], ParamRef::Matrix(&g.u_r)),
            (names[5], ParamRef::Matrix(&g.u_c)),
            (names[6], ParamRef::Vector(&g.b_z)),
            (names[7], ParamRef::Vector(&g.b_r)),
            (names[8], ParamRef::Vector(&g.b_c)),
        ]
    }

    fn gru_muts(
        g: &mut GruParams,
        names: &'static [&'static str; 9],
        f: &mut impl FnMut(&'static str, ParamMut<'_>),
    ) {
        f(names[0], ParamMut::Matrix(&mut g.w_z));
        f(names[1], ParamMut::Matrix(&mut g.w_r));
        f(names[2], ParamMut::Matrix(&mut g.w_c));
        f(names[3], ParamMut::Matrix(&mut g.u_z));
        f(names[4], ParamMut::Matrix(&mut g.u_r));
        f(names[5], ParamMut::Matrix(&mut g.u_c));
        f(names[6], ParamMut::Vector(&mut g.b_z));
        f(names[7], ParamMut::Vector(&mut g.b_r));
        f(names[8], ParamMut::Vector(&mut g.b_c));
    }

    fn check_token(&self, token: usize) -> Result<()> {
        if token >= self.config.vocab {
            return Err(Error::TokenOutOfRange { token, vocab: self.config.vocab });
        }
        Ok(())
    }

    /// Unidirectional encoding: memory entry j depends only on tokens 0..=j.
    pub fn encode(&self, tokens: &[usize]) -> Result<Memory> {
        let mut h = vec![0.0; self.config.d_h];
        let mut states = Vec::with_capacity(tokens.len() * self.config.d_h);
        for &tok in tokens {
            self.check_token(tok)?;
            h = self.encoder.step(self.embed.row(tok), &h);
            states.extend_from_slice(&h);
        }
        Memory::new(Tensor::from_vec(states, tokens.len(), self.config.d_h))
    }

    /// One decoder update: new state from the embedded previous token and
    /// the context, then output logits from [state; context].
    pub fn decode_step(
        &self,
        prev_token: usize,
        prev_state: &[f64],
        context: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_token(prev_token)?;
        let mut x = Vec::with_capacity(self.config.d_embed + self.config.d_h);
        x.extend_from_slice(self.embed.row(prev_token));
        x.extend_from_slice(context);
        let state = self.decoder.step(&x, prev_state);

        let mut cat = Vec::with_capacity(self.config.d_s + self.config.d_h);
        cat.extend_from_slice(&state);
        cat.extend_from_slice(context);
        let mut logits = vec![0.0; self.config.vocab];
        self.out_w.matvec(&cat, &mut logits);
        for (l, b) in logits.iter_mut().zip(&self.out_b) {
            *l += b;
        }
        Ok((state, logits))
    }

    /// Greedy decoding with the hard online attention process. Produces
    /// tokens until END or `max_len`, recording the attention row used at
    /// each step.
    pub fn greedy_transduce(&self, input: &[usize], max_len: usize) -> Result<Transduction> {
        let memory = self.encode(input)?;
        let t = memory.len();
        let mut state = vec![0.0; self.config.d_s];
        let mut cursor = 0usize;
        let mut prev_token = START;
        let mut tokens = Vec::new();
        let mut trace = AlignmentTrace {
            mechanism: self.config.mechanism,
            memory_len: t,
            rows: Vec::new(),
            stops: Vec::new(),
        };
        let mut truncated = true;

        for _ in 0..max_len {
            let query = DecoderQuery::new(state.clone())?;
            let (stop, context, row) = self.attend_hard(&memory, &query, cursor)?;
            if let Some(s) = stop {
                cursor = s;
            }
            trace.rows.push(row);
            trace.stops.push(stop);

            let (next_state, logits) = self.decode_step(prev_token, &state, &context)?;
            state = next_state;
            let token = argmax(&logits);
            if token == END {
                truncated = false;
                break;
            }
            tokens.push(token);
            prev_token = token;
        }
        Ok(Transduction { tokens, trace, truncated })
    }

    /// Expected (training-form) attention for one output step at sigma = 0:
    /// context, applied weight row, and the next monotonic alpha row.
    pub fn expected_attention(
        &self,
        memory: &Memory,
        query: &DecoderQuery,
        prev_alpha: &AttentionRow,
    ) -> Result<(Vec<f64>, Vec<f64>, AttentionRow)> {
        let noise = NoiseConfig::new(0.0, 0);
        match self.config.mechanism {
            Mechanism::Soft => {
                let e = self.soft_energy.energies(query, memory)?;
                let (alpha, ctx) = soft_attention(&e, memory);
                Ok((ctx, alpha.probs().to_vec(), prev_alpha.clone()))
            }
            Mechanism::Monotonic => {
                let e = self.mono_energy.energies(query, memory)?;
                let p = selection_probabilities(&e, &noise, false);
                let alpha = monotonic_alpha_row(&p, prev_alpha);
                let ctx = alpha.expected_context(memory);
                let row = alpha.probs().to_vec();
                Ok((ctx, row, alpha))
            }
            Mechanism::Mocha { width } => {
                let e = self.mono_energy.energies(query, memory)?;
                let p = selection_probabilities(&e, &noise, false);
                let alpha = monotonic_alpha_row(&p, prev_alpha);
                let u = self.chunk_energy.energies(query, memory)?;
                let beta = mocha_beta_row(&alpha, &u, ChunkConfig::new(width));
                let ctx = beta.expected_context(memory);
                Ok((ctx, beta.probs().to_vec(), alpha))
            }
            Mechanism::Matcha => {
                let e = self.mono_energy.energies(query, memory)?;
                let p = selection_probabilities(&e, &noise, false);
                let u = self.chunk_energy.energies(query, memory)?;
                let beta = matcha_beta_row(prev_alpha, &p, &u);
                let alpha = monotonic_alpha_row(&p, prev_alpha);
                let ctx = beta.expected_context(memory);
                Ok((ctx, beta.probs().to_vec(), alpha))
            }
        }
    }

    /// Free-running decoding that replaces the hard attention process with
    /// the expected (training-form) context at sigma = 0. Used to compare
    /// the two context paths once a model's selection probabilities have
    /// saturated.
    pub fn expected_transduce(&self, input: &[usize], max_len: usize) -> Result<Transduction> {
        let memory = self.encode(input)?;
        let t = memory.len();
        let mut prev_alpha = AttentionRow::one_hot(0, t);
        let mut state = vec![0.0; self.config.d_s];
        let mut prev_token = START;
        let mut tokens = Vec::new();
        let mut trace = AlignmentTrace {
            mechanism: self.config.mechanism,
            memory_len: t,
            rows: Vec::new(),
            stops: Vec::new(),
        };
        let mut truncated = true;

        for _ in 0..max_len {
            let query = DecoderQuery::new(state.clone())?;
            let (context, row, next_alpha) = self.expected_attention(&memory, &query, &prev_alpha)?;
            prev_alpha = next_alpha;
            trace.rows.push(row);
            trace.stops.push(None);

            let (next_state, logits) = self.decode_step(prev_token, &state, &context)?;
            state = next_state;
            let token = argmax(&logits);
            if token == END {
                truncated = false;
                break;
            }
            tokens.push(token);
            prev_token = token;
        }
        Ok(Transduction { tokens, trace, truncated })
    }

    /// Hard attention for one decode step: stop position, context, and the
    /// weight row actually applied (for alignment traces).
    fn attend_hard(
        &self,
        memory: &Memory,
        query: &DecoderQuery,
        cursor: usize,
    ) -> Result<(Option<usize>, Vec<f64>, Vec<f64>)> {
        let t = memory.len();
        match self.config.mechanism {
            Mechanism::Soft => {
                let e = self.soft_energy.energies(query, memory)?;
                let (alpha, ctx) = soft_attention(&e, memory);
                Ok((None, ctx, alpha.probs().to_vec()))
            }
            Mechanism::Monotonic => {
                let prepared = self.mono_energy.prepare(query)?;
                let (stop, ctx) = monotonic_decode_step(
                    memory,
                    |j| logistic(prepared.energy(memory, j).expect("consistent shapes")),
                    cursor,
                );
                let mut row = vec![0.0; t];
                if let Some(s) = stop {
                    row[s] = 1.0;
                }
                Ok((stop, ctx, row))
            }
            Mechanism::Mocha { width } => {
                let mono = self.mono_energy.prepare(query)?;
                let chunk = self.chunk_energy.prepare(query)?;
                let (stop, ctx) = mocha_decode_step(
                    memory,
                    |j| logistic(mono.energy(memory, j).expect("consistent shapes")),
                    |j| chunk.energy(memory, j).expect("consistent shapes"),
                    cursor,
                    ChunkConfig::new(width),
                );
                let row = match stop {
                    Some(s) => {
                        let lo = (s + 1).saturating_sub(width);
                        self.chunk_weight_row(memory, query, lo, s)?
                    }
                    None => vec![0.0; t],
                };
                Ok((stop, ctx, row))
            }
            Mechanism::Matcha => {
                let mono = self.mono_energy.prepare(query)?;
                let chunk = self.chunk_energy.prepare(query)?;
                let (stop, ctx) = matcha_decode_step(
                    memory,
                    |j| logistic(mono.energy(memory, j).expect("consistent shapes")),
                    |j| chunk.energy(memory, j).expect("consistent shapes"),
                    cursor,
                );
                let row = match stop {
                    Some(s) => self.chunk_weight_row(memory, query, cursor, s)?,
                    None => vec![0.0; t],
                };
                Ok((stop, ctx, row))
            }
        }
    }

    /// Softmax weights of the chunk energies over [lo, hi], embedded in a
    /// zero row of length T.
    fn chunk_weight_row(
        &self,
        memory: &Memory,
        query: &DecoderQuery,
        lo: usize,
        hi: usize,
    ) -> Result<Vec<f64>> {
        let prepared = self.chunk_energy.prepare(query)?;
        let mut u = Vec::with_capacity(hi - lo + 1);
        for j in lo..=hi {
            u.push(prepared.energy(memory, j)?);
        }
        let shift = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for e in u.iter_mut() {
            *e = (*e - shift).exp();
            total += *e;
        }
        let mut row = vec![0.0; memory.len()];
        for (k, j) in (lo..=hi).enumerate() {
            row[j] = u[k] / total;
        }
        Ok(row)
    }
}

pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, &v) in xs.iter().enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}
