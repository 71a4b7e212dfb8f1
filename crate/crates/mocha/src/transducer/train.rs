//! Teacher-forced training on the expected attention distributions, plus the
//! evaluation and gradient-checking harnesses.
//!
//! Each optimizer step stages the parameters on a fresh tape, builds the
//! full differentiable pipeline (encoder, attention rows, decoder, softmax
//! cross-entropy) for a batch of sequences, and applies one adaptive-moment
//! update. Everything is seeded; identical seeds give bitwise-identical
//! loss curves.

use super::model::{argmax, ModelParams, ParamMut};
use super::task::{Dataset, TaskSpec};
use super::{Mechanism, ModelConfig, START};
use crate::attention::AttentionRow;
use crate::autodiff::{Tape, Var};
use crate::energy::DecoderQuery;
use crate::error::{Error, Result};
use crate::tensor::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::collections::HashMap;

/// Floor under the survival cumprod in the differentiable path. Larger than
/// the kernel's floor: the backward pass divides by the floored value
/// squared, which must stay representable, and the clamp zeroes the
/// gradient wherever it engages.
const TRAIN_SURVIVAL_FLOOR: f64 = 1e-10;

/// Global gradient-norm ceiling applied before each update.
pub(crate) const GRAD_CLIP: f64 = 5.0;

#[derive(Debug, Clone, Copy)]
pub struct TrainOptions {
    pub steps: usize,
    pub batch: usize,
    pub lr: f64,
    /// Stop once held-out teacher-forced accuracy (sigma = 0) reaches this,
    /// checked every `eval_every` steps.
    pub early_stop_accuracy: Option<f64>,
    /// Cadence of the held-out early-stopping evaluation.
    pub eval_every: usize,
    /// Clone the parameters every N steps for alignment snapshots.
    pub snapshot_every: Option<usize>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            steps: 4000,
            batch: 16,
            lr: 3e-3,
            early_stop_accuracy: None,
            eval_every: 100,
            snapshot_every: None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrainRecord {
    pub step: usize,
    pub loss: f64,
    /// Teacher-forced token accuracy of this training batch (noisy path).
    pub accuracy: f64,
}

pub struct TrainOutcome {
    pub params: ModelParams,
    pub curve: Vec<TrainRecord>,
    pub stopped_early: bool,
    /// (step, parameters after that step) at the requested cadence.
    pub snapshots: Vec<(usize, ModelParams)>,
}

// ---------------------------------------------------------------------------
// Parameter staging
// ---------------------------------------------------------------------------

pub(crate) struct Staged {
    vars: HashMap<&'static str, Var>,
}

impl Staged {
    fn get(&self, name: &str) -> Var {
        *self.vars.get(name).unwrap_or_else(|| panic!("unknown parameter group {name}"))
    }
}

pub(crate) fn stage(tape: &mut Tape, params: &ModelParams) -> Staged {
    let mut vars = HashMap::new();
    params.visit(&mut |name, p| {
        vars.insert(name, tape.leaf(p.to_tensor()));
    });
    Staged { vars }
}

struct GruVars {
    w_z: Var,
    w_r: Var,
    w_c: Var,
    u_z: Var,
    u_r: Var,
    u_c: Var,
    b_z: Var,
    b_r: Var,
    b_c: Var,
}

fn gru_vars(staged: &Staged, prefix: &str) -> GruVars {
    let g = |field: &str| staged.get(&format!("{prefix}_{field}"));
    GruVars {
        w_z: g("w_z"),
        w_r: g("w_r"),
        w_c: g("w_c"),
        u_z: g("u_z"),
        u_r: g("u_r"),
        u_c: g("u_c"),
        b_z: g("b_z"),
        b_r: g("b_r"),
        b_c: g("b_c"),
    }
}

fn gru_step_tape(tape: &mut Tape, g: &GruVars, x: Var, h: Var) -> Var {
    let wx = tape.matvec(g.w_z, x);
    let uh = tape.matvec(g.u_z, h);
    let pre_z = tape.add(wx, uh);
    let pre_z = tape.add(pre_z, g.b_z);
    let z = tape.logistic(pre_z);

    let wx = tape.matvec(g.w_r, x);
    let uh = tape.matvec(g.u_r, h);
    let pre_r = tape.add(wx, uh);
    let pre_r = tape.add(pre_r, g.b_r);
    let r = tape.logistic(pre_r);

    let gated = tape.mul(r, h);
    let wx = tape.matvec(g.w_c, x);
    let uh = tape.matvec(g.u_c, gated);
    let pre_c = tape.add(wx, uh);
    let pre_c = tape.add(pre_c, g.b_c);
    let cand = tape.tanh(pre_c);

    let zh = tape.mul(z, h);
    let zc = tape.mul(z, cand);
    let keep = tape.sub(h, zh);
    tape.add(keep, zc)
}

// ---------------------------------------------------------------------------
// Differentiable attention pipelines
// ---------------------------------------------------------------------------

/// e = tanh(H W_h^T .+ (W_s s + b)) v over all memory rows at once.
fn additive_energy_tape(
    tape: &mut Tape,
    memory: Var,
    w_h: Var,
    w_s: Var,
    b: Var,
    v: Var,
    query: Var,
) -> Var {
    let projected = tape.matmul_t(memory, w_h);
    let qs = tape.matvec(w_s, query);
    let qsb = tape.add(qs, b);
    let pre = tape.add_row_broadcast(projected, qsb);
    let th = tape.tanh(pre);
    tape.matvec(th, v)
}

#[allow(clippy::too_many_arguments)]
fn normalized_energy_tape(
    tape: &mut Tape,
    memory: Var,
    w_h: Var,
    w_s: Var,
    b: Var,
    v: Var,
    g: Var,
    r: Var,
    query: Var,
) -> Var {
    let unit = tape.normalize(v);
    let e = additive_energy_tape(tape, memory, w_h, w_s, b, unit, query);
    let scaled = tape.broadcast_mul(e, g);
    tape.broadcast_add(scaled, r)
}

/// Max-shifted softmax; the shift is peeked as a constant, which is exact
/// because the softmax is shift-invariant.
fn soft_alpha_tape(tape: &mut Tape, energies: Var) -> Var {
    let shift = tensor_max(tape.value(energies));
    let offset = tape.scalar_constant(-shift);
    let shifted = tape.broadcast_add(energies, offset);
    let ex = tape.exp(shifted);
    let total = tape.sum(ex);
    let one = tape.scalar_constant(1.0);
    let inv = tape.div(one, total);
    tape.broadcast_mul(ex, inv)
}

pub(crate) fn monotonic_alpha_tape(tape: &mut Tape, p: Var, prev_alpha: Var, t: usize) -> Var {
    let ones = tape.constant(Tensor::vector(vec![1.0; t]));
    let survive = tape.sub(ones, p);
    let cp = tape.cumprod_exclusive(survive);
    let guarded = tape.clamp_min(cp, TRAIN_SURVIVAL_FLOOR);
    let ratio = tape.div(prev_alpha, guarded);
    let summed = tape.cumsum_inclusive(ratio);
    let pc = tape.mul(p, cp);
    tape.mul(pc, summed)
}

pub(crate) fn mocha_beta_tape(tape: &mut Tape, alpha: Var, u: Var, width: usize) -> Var {
    let shift = tensor_max(tape.value(u));
    let offset = tape.scalar_constant(-shift);
    let shifted = tape.broadcast_add(u, offset);
    let e = tape.exp(shifted);
    let denom = tape.movingsum(e, width, 1);
    let ratio = tape.div(alpha, denom);
    let spread = tape.movingsum(ratio, 1, width);
    tape.mul(e, spread)
}

/// Column-by-column evaluation of the adaptive-chunk distribution: for each
/// current-stop position l, the first-order recursion in j is solved with
/// the same cumsum/cumprod closed form as the monotonic row.
pub(crate) fn matcha_beta_tape(tape: &mut Tape, prev_alpha: Var, p: Var, u: Var, t: usize) -> Var {
    let shift = tensor_max(tape.value(u));
    let offset = tape.scalar_constant(-shift);
    let shifted = tape.broadcast_add(u, offset);
    let e = tape.exp(shifted);
    let prefix = tape.cumsum_inclusive(e);
    let prefix_exc = if t == 1 {
        tape.constant(Tensor::vector(vec![0.0]))
    } else {
        let head = tape.slice(prefix, 0, t - 1);
        tape.pad(head, 1, 0)
    };
    let ones = tape.constant(Tensor::vector(vec![1.0; t]));
    let survive = tape.sub(ones, p);
    let cumprod = tape.cumprod_exclusive(survive);
    let one = tape.constant(Tensor::vector(vec![1.0]));

    let mut acc = tape.constant(Tensor::vector(vec![0.0; t]));
    for l in 0..t {
        // chunk denominators: sum of exp(u') over [j, l] for each j <= l
        let s_l = tape.slice(prefix, l, 1);
        let exc_head = tape.slice(prefix_exc, 0, l + 1);
        let neg_exc = tape.scale(exc_head, -1.0);
        let denom_sums = tape.broadcast_add(neg_exc, s_l);

        let c_head = tape.slice(cumprod, 0, l + 1);
        let guarded = tape.clamp_min(c_head, TRAIN_SURVIVAL_FLOOR);
        let denom = tape.mul(denom_sums, guarded);
        let prev_head = tape.slice(prev_alpha, 0, l + 1);
        let ratio = tape.div(prev_head, denom);
        let summed = tape.cumsum_inclusive(ratio);
        let r_col = tape.mul(c_head, summed);

        // survival of [j, l): reversed inclusive cumprod of the reversed run
        let tail = if l == 0 {
            one
        } else {
            let head = tape.slice(survive, 0, l);
            let rev = tape.reverse(head);
            let prod = tape.cumprod_inclusive(rev);
            let back = tape.reverse(prod);
            tape.concat(back, one)
        };
        let weighted = tape.mul(tail, r_col);
        let p_l = tape.slice(p, l, 1);
        let contrib = tape.broadcast_mul(weighted, p_l);
        let padded = tape.pad(contrib, 0, t - (l + 1));
        acc = tape.add(acc, padded);
    }
    tape.mul(e, acc)
}

fn tensor_max(t: &Tensor) -> f64 {
    t.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

// ---------------------------------------------------------------------------
// Sequence graph
// ---------------------------------------------------------------------------

struct SequenceStats {
    loss_sum: Var,
    tokens: usize,
    correct: usize,
}

/// Teacher-forced loss graph for one (input, target) pair. `noise_rows`
/// supplies one pre-drawn pre-sigmoid noise row per output step when the
/// monotonic-family mechanisms train with sigma > 0.
fn build_sequence(
    tape: &mut Tape,
    staged: &Staged,
    config: &ModelConfig,
    input: &[usize],
    target: &[usize],
    noise_rows: Option<&[Vec<f64>]>,
) -> SequenceStats {
    let t = input.len();
    let enc = gru_vars(staged, "enc");
    let dec = gru_vars(staged, "dec");
    let embed = staged.get("embed");

    // encoder
    let mut h = tape.constant(Tensor::vector(vec![0.0; config.d_h]));
    let mut rows = Vec::with_capacity(t);
    for &tok in input {
        let x = tape.embed_row(embed, tok);
        h = gru_step_tape(tape, &enc, x, h);
        rows.push(h);
    }
    let memory = tape.stack_rows(&rows);

    let mut prev_alpha = {
        let mut init = vec![0.0; t];
        init[0] = 1.0;
        tape.constant(Tensor::vector(init))
    };
    let mut state = tape.constant(Tensor::vector(vec![0.0; config.d_s]));
    let mut prev_token = START;
    let mut loss_sum: Option<Var> = None;
    let mut correct = 0usize;

    for (i, &y) in target.iter().enumerate() {
        let context = match config.mechanism {
            Mechanism::Soft => {
                let e = additive_energy_tape(
                    tape,
                    memory,
                    staged.get("soft_w_h"),
                    staged.get("soft_w_s"),
                    staged.get("soft_b"),
                    staged.get("soft_v"),
                    state,
                );
                let alpha = soft_alpha_tape(tape, e);
                tape.matvec_t(memory, alpha)
            }
            Mechanism::Monotonic | Mechanism::Mocha { .. } | Mechanism::Matcha => {
                let mut e = normalized_energy_tape(
                    tape,
                    memory,
                    staged.get("mono_w_h"),
                    staged.get("mono_w_s"),
                    staged.get("mono_b"),
                    staged.get("mono_v"),
                    staged.get("mono_g"),
                    staged.get("mono_r"),
                    state,
                );
                if let Some(rows) = noise_rows {
                    let noise = tape.constant(Tensor::vector(rows[i].clone()));
                    e = tape.add(e, noise);
                }
                let p = tape.logistic(e);
                let alpha = monotonic_alpha_tape(tape, p, prev_alpha, t);

                let row = match config.mechanism {
                    Mechanism::Monotonic => alpha,
                    Mechanism::Mocha { width } => {
                        let u = normalized_energy_tape(
                            tape,
                            memory,
                            staged.get("chunk_w_h"),
                            staged.get("chunk_w_s"),
                            staged.get("chunk_b"),
                            staged.get("chunk_v"),
                            staged.get("chunk_g"),
                            staged.get("chunk_r"),
                            state,
                        );
                        mocha_beta_tape(tape, alpha, u, width)
                    }
                    Mechanism::Matcha => {
                        let u = normalized_energy_tape(
                            tape,
                            memory,
                            staged.get("chunk_w_h"),
                            staged.get("chunk_w_s"),
                            staged.get("chunk_b"),
                            staged.get("chunk_v"),
                            staged.get("chunk_g"),
                            staged.get("chunk_r"),
                            state,
                        );
                        matcha_beta_tape(tape, prev_alpha, p, u, t)
                    }
                    Mechanism::Soft => unreachable!(),
                };
                prev_alpha = alpha;
                tape.matvec_t(memory, row)
            }
        };

        let emb = tape.embed_row(embed, prev_token);
        let x = tape.concat(emb, context);
        state = gru_step_tape(tape, &dec, x, state);

        let cat = tape.concat(state, context);
        let projected = tape.matvec(staged.get("out_w"), cat);
        let logits = tape.add(projected, staged.get("out_b"));
        if argmax(tape.value(logits).data()) == y {
            correct += 1;
        }
        let loss = tape.softmax_cross_entropy(logits, y);
        loss_sum = Some(match loss_sum {
            Some(acc) => tape.add(acc, loss),
            None => loss,
        });
        prev_token = y;
    }

    SequenceStats {
        loss_sum: loss_sum.expect("target sequences are never empty"),
        tokens: target.len(),
        correct,
    }
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

/// Adam hyperparameters, recorded verbatim in every run log.
pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

struct Adam {
    lr: f64,
    step: usize,
    moments: HashMap<&'static str, (Vec<f64>, Vec<f64>)>,
}

impl Adam {
    fn new(lr: f64) -> Self {
        Adam { lr, step: 0, moments: HashMap::new() }
    }

    fn update(
        &mut self,
        params: &mut ModelParams,
        staged: &Staged,
        grads: &HashMap<&'static str, Tensor>,
    ) {
        let _ = staged;
        self.step += 1;
        let bc1 = 1.0 - ADAM_BETA1.powi(self.step as i32);
        let bc2 = 1.0 - ADAM_BETA2.powi(self.step as i32);

        // global norm clip
        let mut sq = 0.0;
        for g in grads.values() {
            sq += g.data().iter().map(|v| v * v).sum::<f64>();
        }
        let norm = sq.sqrt();
        let clip = if norm > GRAD_CLIP { GRAD_CLIP / norm } else { 1.0 };

        let moments = &mut self.moments;
        let lr = self.lr;
        params.visit_mut(&mut |name, mut p: ParamMut<'_>| {
            let Some(grad) = grads.get(name) else { return };
            let slice = p.as_slice_mut();
            let (m, v) = moments
                .entry(name)
                .or_insert_with(|| (vec![0.0; slice.len()], vec![0.0; slice.len()]));
            for ((w, &g_raw), (mi, vi)) in
                slice.iter_mut().zip(grad.data()).zip(m.iter_mut().zip(v.iter_mut()))
            {
                let g = g_raw * clip;
                *mi = ADAM_BETA1 * *mi + (1.0 - ADAM_BETA1) * g;
                *vi = ADAM_BETA2 * *vi + (1.0 - ADAM_BETA2) * g * g;
                *w -= lr * (*mi / bc1) / ((*vi / bc2).sqrt() + ADAM_EPS);
            }
        });
    }
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

pub fn train(task: &TaskSpec, config: &ModelConfig, opts: &TrainOptions) -> Result<TrainOutcome> {
    let data = task.generate();
    assert!(!data.is_empty(), "task generated an empty dataset");
    let mut params = ModelParams::init(*config);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x5eed_0f01));
    let mut adam = Adam::new(opts.lr);
    let mut curve = Vec::with_capacity(opts.steps);
    let mut stopped_early = false;
    let mut snapshots = Vec::new();
    // Held-out split for early stopping, disjoint from the training stream.
    let probe = opts
        .early_stop_accuracy
        .map(|_| task.with_samples(128).generate_salted(1));

    for step in 0..opts.steps {
        let mut tape = Tape::new();
        let staged = stage(&mut tape, &params);
        let mut loss_sum: Option<Var> = None;
        let mut tokens = 0usize;
        let mut correct = 0usize;

        for _ in 0..opts.batch {
            let (input, target) = &data.pairs[rng.gen_range(0..data.len())];
            let noise_rows = if config.sigma > 0.0 {
                let normal = Normal::new(0.0, config.sigma).expect("valid sigma");
                Some(
                    (0..target.len())
                        .map(|_| (0..input.len()).map(|_| normal.sample(&mut rng)).collect())
                        .collect::<Vec<Vec<f64>>>(),
                )
            } else {
                None
            };
            let stats =
                build_sequence(&mut tape, &staged, config, input, target, noise_rows.as_deref());
            tokens += stats.tokens;
            correct += stats.correct;
            loss_sum = Some(match loss_sum {
                Some(acc) => tape.add(acc, stats.loss_sum),
                None => stats.loss_sum,
            });
        }

        let mean = tape.scale(loss_sum.expect("nonempty batch"), 1.0 / tokens as f64);
        let loss = tape.value(mean).item();
        if !loss.is_finite() {
            return Err(Error::Diverged { step });
        }
        let grads = named_gradients(&tape, &staged, mean, &params);
        adam.update(&mut params, &staged, &grads);

        let accuracy = correct as f64 / tokens as f64;
        curve.push(TrainRecord { step, loss, accuracy });
        if let Some(every) = opts.snapshot_every {
            if (step + 1) % every == 0 {
                snapshots.push((step, params.clone()));
            }
        }

        if let (Some(threshold), Some(probe)) = (opts.early_stop_accuracy, probe.as_ref()) {
            if (step + 1) % opts.eval_every == 0
                && teacher_forced_accuracy(&params, probe)? >= threshold
            {
                stopped_early = true;
                break;
            }
        }
    }
    Ok(TrainOutcome { params, curve, stopped_early, snapshots })
}

fn named_gradients(
    tape: &Tape,
    staged: &Staged,
    loss: Var,
    params: &ModelParams,
) -> HashMap<&'static str, Tensor> {
    let grads = tape.backward(loss);
    let mut named = HashMap::new();
    params.visit(&mut |name, _| {
        if let Some(g) = grads.get(staged.get(name)) {
            named.insert(name, g.clone());
        }
    });
    named
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Teacher-forced loss and token accuracy on the plain (kernel) forward
/// path, expected attention, sigma = 0.
pub fn teacher_forced_loss_and_accuracy(
    params: &ModelParams,
    pairs: &[(Vec<usize>, Vec<usize>)],
) -> Result<(f64, f64)> {
    let mut loss_sum = 0.0;
    let mut tokens = 0usize;
    let mut correct = 0usize;
    for (input, target) in pairs {
        let memory = params.encode(input)?;
        let t = memory.len();
        let mut prev_alpha = AttentionRow::one_hot(0, t);
        let mut state = vec![0.0; params.config.d_s];
        let mut prev_token = START;
        for &y in target {
            let query = DecoderQuery::new(state.clone())?;
            let (context, _row, next_alpha) =
                params.expected_attention(&memory, &query, &prev_alpha)?;
            prev_alpha = next_alpha;
            let (next_state, logits) = params.decode_step(prev_token, &state, &context)?;
            state = next_state;
            if argmax(&logits) == y {
                correct += 1;
            }
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + logits.iter().map(|&l| (l - max).exp()).sum::<f64>().ln();
            loss_sum += lse - logits[y];
            tokens += 1;
            prev_token = y;
        }
    }
    Ok((loss_sum / tokens as f64, correct as f64 / tokens as f64))
}

pub fn teacher_forced_accuracy(params: &ModelParams, data: &Dataset) -> Result<f64> {
    teacher_forced_loss_and_accuracy(params, &data.pairs).map(|(_, acc)| acc)
}

/// Fraction of held-out sequences reproduced exactly (greedy decoding, END
/// required).
pub fn free_running_exact_accuracy(params: &ModelParams, data: &Dataset) -> Result<f64> {
    let mut exact = 0usize;
    for (input, target) in &data.pairs {
        let out = params.greedy_transduce(input, 2 * input.len() + 5)?;
        let want = &target[..target.len() - 1]; // strip END
        if !out.truncated && out.tokens == want {
            exact += 1;
        }
    }
    Ok(exact as f64 / data.len() as f64)
}

// ---------------------------------------------------------------------------
// Gradient checking
// ---------------------------------------------------------------------------

/// Tape loss and named analytic gradients for a fixed batch at sigma = 0.
pub fn collect_gradients(
    params: &ModelParams,
    pairs: &[(Vec<usize>, Vec<usize>)],
) -> (f64, HashMap<&'static str, Tensor>) {
    let mut tape = Tape::new();
    let staged = stage(&mut tape, params);
    let mut loss_sum: Option<Var> = None;
    let mut tokens = 0usize;
    for (input, target) in pairs {
        let stats = build_sequence(&mut tape, &staged, &params.config, input, target, None);
        tokens += stats.tokens;
        loss_sum = Some(match loss_sum {
            Some(acc) => tape.add(acc, stats.loss_sum),
            None => stats.loss_sum,
        });
    }
    let mean = tape.scale(loss_sum.expect("nonempty batch"), 1.0 / tokens as f64);
    let loss = tape.value(mean).item();
    (loss, named_gradients(&tape, &staged, mean, params))
}

#[derive(Debug)]
pub struct GradientCheckReport {
    pub total: usize,
    pub passing: usize,
    /// Coordinates where both gradients are below the negligibility cutoff.
    pub negligible: usize,
    pub worst_rel_err: f64,
    /// (group, passing incl. negligible, total) per parameter group.
    pub per_group: Vec<(&'static str, usize, usize)>,
}

impl GradientCheckReport {
    pub fn pass_fraction(&self) -> f64 {
        (self.passing + self.negligible) as f64 / self.total as f64
    }
}

const NEGLIGIBLE_GRADIENT: f64 = 1e-8;

/// Compare analytic (tape) gradients against central finite differencested
/// through the independent plain forward path, coordinate by coordinate
/// over every parameter group.
pub fn gradient_check(
    config: &ModelConfig,
    pairs: &[(Vec<usize>, Vec<usize>)],
    fd_step: f64,
    rel_tol: f64,
) -> Result<GradientCheckReport> {
    assert_eq!(config.sigma, 0.0, "gradient checks require a deterministic pipeline");
    let mut params = ModelParams::init(*config);
    let (tape_loss, analytic) = collect_gradients(&params, pairs);
    let (plain_loss, _) = teacher_forced_loss_and_accuracy(&params, pairs)?;
    assert!(
        (tape_loss - plain_loss).abs() <= 1e-10 * (1.0 + plain_loss.abs()),
        "tape loss {tape_loss} and plain loss {plain_loss} disagree"
    );

    let group_names: Vec<&'static str> = {
        let mut names = Vec::new();
        params.visit(&mut |name, _| names.push(name));
        names
    };

    let mut report = GradientCheckReport {
        total: 0,
        passing: 0,
        negligible: 0,
        worst_rel_err: 0.0,
        per_group: Vec::new(),
    };

    for name in group_names {
        let grad = analytic.get(name).cloned();
        let len = {
            let mut n = 0;
            params.visit(&mut |g, p| {
                if g == name {
                    n = p.len();
                }
            });
            n
        };
        let mut group_pass = 0usize;
        for i in 0..len {
            let a = grad.as_ref().map(|g| g.data()[i]).unwrap_or(0.0);
            let up = perturbed_loss(&mut params, name, i, fd_step, pairs)?;
            let down = perturbed_loss(&mut params, name, i, -fd_step, pairs)?;
            let fd = (up - down) / (2.0 * fd_step);

            report.total += 1;
            if a.abs() < NEGLIGIBLE_GRADIENT && fd.abs() < NEGLIGIBLE_GRADIENT {
                report.negligible += 1;
                group_pass += 1;
                continue;
            }
            let rel = (a - fd).abs() / a.abs().max(fd.abs());
            report.worst_rel_err = report.worst_rel_err.max(rel);
            if rel < rel_tol {
                report.passing += 1;
                group_pass += 1;
            }
        }
        report.per_group.push((name, group_pass, len));
    }
    Ok(report)
}

/// Plain-path loss with one coordinate of one group temporarily shifted.
fn perturbed_loss(
    params: &mut ModelParams,
    group: &str,
    index: usize,
    delta: f64,
    pairs: &[(Vec<usize>, Vec<usize>)],
) -> Result<f64> {
    shift_param(params, group, index, delta);
    let result = teacher_forced_loss_and_accuracy(params, pairs).map(|(loss, _)| loss);
    shift_param(params, group, index, -delta);
    result
}

fn shift_param(params: &mut ModelParams, group: &str, index: usize, delta: f64) {
    params.visit_mut(&mut |name, mut p| {
        if name == group {
            p.as_slice_mut()[index] += delta;
        }
    });
}
