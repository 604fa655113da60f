use super::{attend, encode, gru_step, EncodedSentence, Mode, ModeValues, ParamValues};
use crate::data::{SentenceTuple, TokenId, BOS, EOS};
use crate::rng::Rng;
use crate::tensor::{Tape, Tensor, Value};
use crate::{Error, Result};
use rand::Rng as _;

/// Forced gate values for ablations and structural tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateForce {
    Zero,
    One,
}

/// Per-step interventions on the gated decoder.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepOverrides<'a> {
    /// Replace the computed gate with a constant vector.
    pub force_gate: Option<GateForce>,
    /// Replace the preceding-sentence context `c^a` (a `[1, 2*hidden]`
    /// tensor) right after attention.
    pub ctx_a: Option<&'a Tensor>,
}

/// Inverted dropout on the pre-softmax output activation.
pub struct Dropout<'a> {
    pub rng: &'a mut Rng,
    pub rate: f64,
}

impl Dropout<'_> {
    fn mask(&mut self, n: usize) -> Tensor {
        let scale = 1.0 / (1.0 - self.rate);
        let data = (0..n)
            .map(|_| {
                if self.rng.random::<f64>() < self.rate {
                    0.0
                } else {
                    scale
                }
            })
            .collect();
        Tensor::row(data)
    }
}

/// Everything one decoder step produces, as tape values.
#[derive(Debug, Clone, Copy)]
pub struct StepState {
    /// New decoder state `s_t`.
    pub state: Value,
    /// Intermediate feedback state `s~` that queried the attention.
    pub pre_state: Value,
    pub ctx_a: Option<Value>,
    pub ctx_b: Value,
    pub gate: Option<Value>,
    pub attn_a: Option<Value>,
    pub attn_b: Value,
}

/// Materialized record of one decoding step.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub state: Vec<f64>,
    pub pre_state: Vec<f64>,
    pub ctx_a: Option<Vec<f64>>,
    pub ctx_b: Vec<f64>,
    pub gate: Option<Vec<f64>>,
    /// Attention weights over before-x positions.
    pub attn_a: Option<Vec<f64>>,
    /// Attention weights over x positions.
    pub attn_b: Vec<f64>,
    /// Output distribution over the target vocabulary.
    pub output: Vec<f64>,
}

impl TraceStep {
    pub fn capture(tape: &Tape, step: &StepState, dist: Value) -> Self {
        let take = |v: Value| tape.data(v).to_vec();
        TraceStep {
            state: take(step.state),
            pre_state: take(step.pre_state),
            ctx_a: step.ctx_a.map(take),
            ctx_b: take(step.ctx_b),
            gate: step.gate.map(take),
            attn_a: step.attn_a.map(take),
            attn_b: take(step.attn_b),
            output: take(dist),
        }
    }
}

/// Per-step records of one decoded sentence.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DecoderTrace {
    pub steps: Vec<TraceStep>,
}

impl DecoderTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Feedback state `s~ = GRU(s_prev, embed(y_prev))`, the attention query.
pub fn feedback_state(
    tape: &mut Tape,
    pv: &ParamValues,
    s_prev: Value,
    y_prev: TokenId,
) -> Result<Value> {
    let y = tape.embed(pv.emb_tgt, y_prev)?;
    gru_step(tape, &pv.feedback, y, s_prev)
}

/// Initial decoder state: tanh of a projection of the backward encoder's
/// state at position 0.
pub fn decoder_init(tape: &mut Tape, pv: &ParamValues, enc_b: &EncodedSentence) -> Result<Value> {
    let projected = tape.matmul(enc_b.bwd_first, pv.dec_init)?;
    Ok(tape.tanh(projected))
}

/// The inter-sentence gate
/// `z = sigmoid(U_z s_prev + W_z embed(y_prev) + C_b c_b + C_a c_a)`.
/// Elementwise in (0, 1), with the decoder's hidden width.
pub fn gate(
    tape: &mut Tape,
    pv: &ParamValues,
    s_prev: Value,
    y_prev: TokenId,
    ctx_b: Value,
    ctx_a: Value,
) -> Result<Value> {
    let isg = match &pv.mode {
        ModeValues::Isg(p) => *p,
        ModeValues::Baseline { .. } => {
            return Err(Error::Mode("gate called in baseline mode".into()))
        }
    };
    let s_term = tape.matmul(s_prev, isg.gate_state)?;
    let y_emb = tape.embed(pv.emb_tgt, y_prev)?;
    let y_term = tape.matmul(y_emb, isg.gate_emb)?;
    let b_term = tape.matmul(ctx_b, isg.gate_ctx_b)?;
    let a_term = tape.matmul(ctx_a, isg.gate_ctx_a)?;
    let sum = tape.add(s_term, y_term)?;
    let sum = tape.add(sum, b_term)?;
    let sum = tape.add(sum, a_term)?;
    Ok(tape.sigmoid(sum))
}

/// One gated decoder step.
///
/// The feedback state queries both encoders; the gate mixes the two
/// projected contexts, `fused = (c^a C1) ∘ z + (c^b C2) ∘ (1 - z)`; the
/// decoder GRU consumes the previous word embedding concatenated with the
/// fused context, with the feedback state as its recurrent state.
pub fn isg_decoder_step(
    tape: &mut Tape,
    pv: &ParamValues,
    s_prev: Value,
    y_prev: TokenId,
    enc_a: &EncodedSentence,
    enc_b: &EncodedSentence,
    overrides: &StepOverrides,
) -> Result<StepState> {
    let isg = match &pv.mode {
        ModeValues::Isg(p) => *p,
        ModeValues::Baseline { .. } => {
            return Err(Error::Mode("isg_decoder_step in baseline mode".into()))
        }
    };
    let hidden = pv.dims.hidden;
    let pre = feedback_state(tape, pv, s_prev, y_prev)?;
    let (ctx_a_attn, attn_a) = attend(tape, &pv.attention, pre, enc_a)?;
    let ctx_a = match overrides.ctx_a {
        Some(t) => tape.leaf(t),
        None => ctx_a_attn,
    };
    let (ctx_b, attn_b) = attend(tape, &pv.attention, pre, enc_b)?;

    let z = match overrides.force_gate {
        Some(GateForce::Zero) => tape.leaf(&Tensor::zeros(vec![1, hidden])),
        Some(GateForce::One) => tape.ones(1, hidden),
        None => gate(tape, pv, s_prev, y_prev, ctx_b, ctx_a)?,
    };

    let a_proj = tape.matmul(ctx_a, isg.ctx_a)?;
    let gated_a = tape.mul(a_proj, z)?;
    let b_proj = tape.matmul(ctx_b, isg.ctx_b)?;
    let ones = tape.ones(1, hidden);
    let z_inv = tape.sub(ones, z)?;
    let gated_b = tape.mul(b_proj, z_inv)?;
    let fused = tape.add(gated_a, gated_b)?;

    let y_emb = tape.embed(pv.emb_tgt, y_prev)?;
    let input = tape.concat(y_emb, fused)?;
    let state = gru_step(tape, &pv.decoder, input, pre)?;
    Ok(StepState {
        state,
        pre_state: pre,
        ctx_a: Some(ctx_a),
        ctx_b,
        gate: Some(z),
        attn_a: Some(attn_a),
        attn_b,
    })
}

/// One baseline decoder step: single attention over x, projected context
/// concatenated with the previous word embedding.
pub fn baseline_decoder_step(
    tape: &mut Tape,
    pv: &ParamValues,
    s_prev: Value,
    y_prev: TokenId,
    enc_b: &EncodedSentence,
) -> Result<StepState> {
    let ctx_proj = match &pv.mode {
        ModeValues::Baseline { ctx } => *ctx,
        ModeValues::Isg(_) => {
            return Err(Error::Mode("baseline_decoder_step in isg mode".into()))
        }
    };
    let pre = feedback_state(tape, pv, s_prev, y_prev)?;
    let (ctx_b, attn_b) = attend(tape, &pv.attention, pre, enc_b)?;
    let projected = tape.matmul(ctx_b, ctx_proj)?;
    let y_emb = tape.embed(pv.emb_tgt, y_prev)?;
    let input = tape.concat(y_emb, projected)?;
    let state = gru_step(tape, &pv.decoder, input, pre)?;
    Ok(StepState {
        state,
        pre_state: pre,
        ctx_a: None,
        ctx_b,
        gate: None,
        attn_a: None,
        attn_b,
    })
}

/// Output distribution `softmax(affine(s_t, embed(y_prev), c^b))`. Only the
/// current sentence's context feeds this layer. In train mode, inverted
/// dropout is applied to the pre-softmax activation.
pub fn output_probs(
    tape: &mut Tape,
    pv: &ParamValues,
    s_t: Value,
    y_prev: TokenId,
    ctx_b: Value,
    mut dropout: Option<&mut Dropout>,
) -> Result<Value> {
    let y_emb = tape.embed(pv.emb_tgt, y_prev)?;
    let s_term = tape.matmul(s_t, pv.out.state)?;
    let y_term = tape.matmul(y_emb, pv.out.emb)?;
    let c_term = tape.matmul(ctx_b, pv.out.ctx)?;
    let sum = tape.add(s_term, y_term)?;
    let sum = tape.add(sum, c_term)?;
    let mut logits = tape.add(sum, pv.out.bias)?;
    if let Some(d) = dropout.as_deref_mut() {
        let mask = d.mask(pv.dims.tgt_vocab);
        let mask = tape.leaf(&mask);
        logits = tape.mul(logits, mask)?;
    }
    tape.softmax(logits)
}

/// Teacher-forced negative log-likelihood of a tuple's target, summed over
/// the target tokens plus the end token, built on an existing tape.
pub fn sentence_nll_graph(
    tape: &mut Tape,
    pv: &ParamValues,
    tuple: &SentenceTuple,
    mut dropout: Option<&mut Dropout>,
    overrides: &StepOverrides,
) -> Result<(Value, DecoderTrace)> {
    let enc_b = encode(tape, pv, &tuple.x)?;
    let enc_a = match pv.mode() {
        Mode::Isg => Some(encode(tape, pv, &tuple.before_x)?),
        Mode::Baseline => None,
    };
    let mut state = decoder_init(tape, pv, &enc_b)?;
    let mut y_prev = BOS;
    let mut total: Option<Value> = None;
    let mut trace = DecoderTrace::default();

    let mut targets = tuple.y.clone();
    targets.push(EOS);
    for &target in &targets {
        let step = match &enc_a {
            Some(ea) => isg_decoder_step(tape, pv, state, y_prev, ea, &enc_b, overrides)?,
            None => baseline_decoder_step(tape, pv, state, y_prev, &enc_b)?,
        };
        let dist = output_probs(tape, pv, step.state, y_prev, step.ctx_b, dropout.as_deref_mut())?;
        let loss = tape.cross_entropy(dist, target)?;
        total = Some(match total {
            Some(acc) => tape.add(acc, loss)?,
            None => loss,
        });
        trace.steps.push(TraceStep::capture(tape, &step, dist));
        state = step.state;
        y_prev = target;
    }
    Ok((total.expect("at least the end token"), trace))
}

/// Standalone teacher-forced loss on a fresh graph. Pass a [`Dropout`] to
/// run in train mode.
pub fn sentence_nll(
    params: &super::ModelParams,
    tuple: &SentenceTuple,
    dropout: Option<Dropout>,
) -> Result<(f64, DecoderTrace)> {
    let mut tape = Tape::new();
    let pv = params.load(&mut tape);
    let mut dropout = dropout;
    let (loss, trace) =
        sentence_nll_graph(&mut tape, &pv, tuple, dropout.as_mut(), &StepOverrides::default())?;
    Ok((tape.scalar(loss), trace))
}
