use super::{beam_search_core, DecodeStepper, Hypothesis, StepOutput};
use crate::data::{TokenId, BOS, EOS};
use crate::model::{
    baseline_decoder_step, decoder_init, encode, isg_decoder_step, output_probs, DecoderTrace,
    EncodedSentence, GateForce, Mode, ModelParams, ParamValues, StepOverrides, TraceStep,
};
use crate::rng::{rng_from_seed, Rng};
use crate::tensor::{Tape, Tensor, Value};
use crate::{Error, Result};
use rand::Rng as _;

/// Replaces the preceding-sentence context with a fresh uniform [-1, 1]
/// vector: redrawn per decoding step by default, or drawn once per sentence.
#[derive(Debug, Clone, Copy)]
pub struct RandomContextOpts {
    pub seed: u64,
    pub per_sentence: bool,
}

/// Beam and intervention settings for one decoding call.
#[derive(Debug, Clone, Copy)]
pub struct DecodeOptions {
    pub width: usize,
    /// Emission cap; `None` means `2 * source length + 10`.
    pub max_out_len: Option<usize>,
    pub force_gate: Option<GateForce>,
    pub random_ctx: Option<RandomContextOpts>,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        DecodeOptions {
            width: 10,
            max_out_len: None,
            force_gate: None,
            random_ctx: None,
        }
    }
}

impl DecodeOptions {
    pub fn with_width(width: usize) -> Self {
        DecodeOptions {
            width,
            ..DecodeOptions::default()
        }
    }

    fn cap(&self, src_len: usize) -> usize {
        self.max_out_len.unwrap_or(2 * src_len + 10)
    }
}

enum RandomCtx {
    PerStep(Rng),
    Fixed(Tensor),
}

/// Drives the translation model one target token at a time over a shared
/// tape holding the source encodings.
pub struct ModelStepper {
    tape: Tape,
    pv: ParamValues,
    enc_a: Option<EncodedSentence>,
    enc_b: EncodedSentence,
    force_gate: Option<GateForce>,
    random_ctx: Option<RandomCtx>,
}

impl ModelStepper {
    /// Encodes the sources. In gated mode `before_x` is required (the NULL
    /// sentence stands in at document starts); the baseline ignores it.
    pub fn new(
        params: &ModelParams,
        before_x: Option<&[TokenId]>,
        x: &[TokenId],
        opts: &DecodeOptions,
    ) -> Result<Self> {
        let mut tape = Tape::new();
        let pv = params.load(&mut tape);
        let enc_b = encode(&mut tape, &pv, x)?;
        let enc_a = match params.mode() {
            Mode::Isg => {
                let before = before_x.ok_or_else(|| {
                    Error::Mode("gated decoding needs a preceding sentence".into())
                })?;
                Some(encode(&mut tape, &pv, before)?)
            }
            Mode::Baseline => None,
        };
        let random_ctx = opts.random_ctx.map(|rc| {
            let mut rng = rng_from_seed(rc.seed);
            if rc.per_sentence {
                RandomCtx::Fixed(uniform_context(&mut rng, 2 * params.dims.hidden))
            } else {
                RandomCtx::PerStep(rng)
            }
        });
        Ok(ModelStepper {
            tape,
            pv,
            enc_a,
            enc_b,
            force_gate: opts.force_gate,
            random_ctx,
        })
    }

    pub fn source_len(&self) -> usize {
        self.enc_b.len
    }
}

fn uniform_context(rng: &mut Rng, width: usize) -> Tensor {
    Tensor::row((0..width).map(|_| rng.random_range(-1.0..1.0)).collect())
}

impl DecodeStepper for ModelStepper {
    type State = Value;
    type Payload = TraceStep;

    fn initial(&mut self) -> Result<Value> {
        decoder_init(&mut self.tape, &self.pv, &self.enc_b)
    }

    fn step(&mut self, state: &Value, y_prev: TokenId) -> Result<StepOutput<Value, TraceStep>> {
        let replacement = match &mut self.random_ctx {
            Some(RandomCtx::PerStep(rng)) => {
                Some(uniform_context(rng, 2 * self.pv.dims.hidden))
            }
            Some(RandomCtx::Fixed(t)) => Some(t.clone()),
            None => None,
        };
        let overrides = StepOverrides {
            force_gate: self.force_gate,
            ctx_a: replacement.as_ref(),
        };
        let step = match &self.enc_a {
            Some(enc_a) => isg_decoder_step(
                &mut self.tape,
                &self.pv,
                *state,
                y_prev,
                enc_a,
                &self.enc_b,
                &overrides,
            )?,
            None => {
                baseline_decoder_step(&mut self.tape, &self.pv, *state, y_prev, &self.enc_b)?
            }
        };
        let dist = output_probs(&mut self.tape, &self.pv, step.state, y_prev, step.ctx_b, None)?;
        let log_probs = self
            .tape
            .data(dist)
            .iter()
            .map(|&p| p.max(1e-300).ln())
            .collect();
        Ok(StepOutput {
            log_probs,
            state: step.state,
            payload: TraceStep::capture(&self.tape, &step, dist),
        })
    }
}

/// Beam-search translation of one sentence (with its preceding source
/// sentence in gated mode). Returns the best hypothesis after length
/// normalization and its per-step trace.
pub fn beam_search(
    params: &ModelParams,
    before_x: Option<&[TokenId]>,
    x: &[TokenId],
    opts: &DecodeOptions,
) -> Result<(Hypothesis, DecoderTrace)> {
    let mut stepper = ModelStepper::new(params, before_x, x, opts)?;
    let max_len = opts.cap(stepper.source_len());
    let mut results = beam_search_core(&mut stepper, opts.width, max_len, BOS, EOS)?;
    let best = results.remove(0);
    Ok((
        best.hypothesis,
        DecoderTrace {
            steps: best.payloads,
        },
    ))
}

/// Teacher-forces an emitted sequence (which must end with eos) and returns
/// the sum of its token log-probabilities under the model.
pub fn score_sequence(
    params: &ModelParams,
    before_x: Option<&[TokenId]>,
    x: &[TokenId],
    ids: &[TokenId],
    opts: &DecodeOptions,
) -> Result<f64> {
    let mut stepper = ModelStepper::new(params, before_x, x, opts)?;
    let mut state = stepper.initial()?;
    let mut y_prev = BOS;
    let mut score = 0.0;
    for &tok in ids {
        let out = stepper.step(&state, y_prev)?;
        score += out.log_probs[tok];
        state = out.state;
        y_prev = tok;
    }
    Ok(score)
}
