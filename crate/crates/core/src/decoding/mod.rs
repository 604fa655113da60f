//! Beam-search decoding for single tuples and whole documents.
//!
//! The search core is generic over a [`DecodeStepper`], so the same code
//! drives the translation model and the table-backed steppers used in
//! tests. Document translation threads each sentence's source as the next
//! sentence's preceding context.

mod document;
mod rows;
mod stepper;

pub use document::{concat_baseline_translate, translate_document, SentenceTranslation};
pub use rows::{load_trace_rows, TraceRow, TRACE_HEADER};
pub use stepper::{beam_search, score_sequence, DecodeOptions, ModelStepper, RandomContextOpts};

use crate::data::TokenId;
use crate::Result;

/// One beam entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    /// Emitted tokens; ends with eos when finished.
    pub ids: Vec<TokenId>,
    /// Sum of per-token log-probabilities, including the final eos.
    pub score: f64,
    pub finished: bool,
}

impl Hypothesis {
    /// Score divided by emitted length, the final ranking key.
    pub fn normalized_score(&self) -> f64 {
        self.score / self.ids.len().max(1) as f64
    }
}

/// What one decoding transition produces: the distribution over the next
/// token, the successor state, and an arbitrary per-step record.
pub struct StepOutput<S, P> {
    pub log_probs: Vec<f64>,
    pub state: S,
    pub payload: P,
}

/// A sequence model the beam can drive: given a state and the previously
/// emitted token, produce the next-token distribution and successor state.
pub trait DecodeStepper {
    type State: Clone;
    type Payload: Clone;

    fn initial(&mut self) -> Result<Self::State>;
    fn step(&mut self, state: &Self::State, y_prev: TokenId)
        -> Result<StepOutput<Self::State, Self::Payload>>;
}

/// A finished hypothesis with its per-step payloads.
#[derive(Debug, Clone)]
pub struct ScoredSequence<P> {
    pub hypothesis: Hypothesis,
    pub payloads: Vec<P>,
}

struct Beam<S, P> {
    ids: Vec<TokenId>,
    score: f64,
    state: S,
    payloads: Vec<P>,
}

/// Standard beam search. Hypotheses that emit `eos` retire; the live beam
/// shrinks as they do. At `max_len` the remaining live hypotheses are
/// force-finished with one final eos transition so every returned score is
/// a complete sum of token log-probabilities. The result is sorted by
/// length-normalized score, best first.
pub fn beam_search_core<D: DecodeStepper>(
    stepper: &mut D,
    width: usize,
    max_len: usize,
    bos: TokenId,
    eos: TokenId,
) -> Result<Vec<ScoredSequence<D::Payload>>> {
    assert!(width >= 1, "beam width must be positive");
    let initial = stepper.initial()?;
    let mut live: Vec<Beam<D::State, D::Payload>> = vec![Beam {
        ids: Vec::new(),
        score: 0.0,
        state: initial,
        payloads: Vec::new(),
    }];
    let mut finished: Vec<ScoredSequence<D::Payload>> = Vec::new();

    for _ in 0..max_len {
        if live.is_empty() {
            break;
        }
        // (hyp index, token, score, step output index)
        let mut outputs = Vec::with_capacity(live.len());
        let mut candidates: Vec<(usize, TokenId, f64)> = Vec::new();
        for (hi, hyp) in live.iter().enumerate() {
            let y_prev = hyp.ids.last().copied().unwrap_or(bos);
            let out = stepper.step(&hyp.state, y_prev)?;
            for (tok, &lp) in out.log_probs.iter().enumerate() {
                candidates.push((hi, tok, hyp.score + lp));
            }
            outputs.push(out);
        }
        candidates.sort_by(|a, b| {
            b.2.total_cmp(&a.2)
                .then_with(|| a.0.cmp(&b.0))
                .then_with(|| a.1.cmp(&b.1))
        });

        let mut next_live = Vec::with_capacity(width);
        for &(hi, tok, score) in candidates.iter().take(width) {
            let hyp = &live[hi];
            let out = &outputs[hi];
            let mut ids = hyp.ids.clone();
            ids.push(tok);
            let mut payloads = hyp.payloads.clone();
            payloads.push(out.payload.clone());
            if tok == eos {
                finished.push(ScoredSequence {
                    hypothesis: Hypothesis {
                        ids,
                        score,
                        finished: true,
                    },
                    payloads,
                });
            } else {
                next_live.push(Beam {
                    ids,
                    score,
                    state: out.state.clone(),
                    payloads,
                });
            }
        }
        live = next_live;
    }

    // length cap reached: close out the survivors with an eos transition
    for hyp in live {
        let y_prev = hyp.ids.last().copied().unwrap_or(bos);
        let out = stepper.step(&hyp.state, y_prev)?;
        let mut ids = hyp.ids;
        ids.push(eos);
        let mut payloads = hyp.payloads;
        payloads.push(out.payload);
        finished.push(ScoredSequence {
            hypothesis: Hypothesis {
                ids,
                score: hyp.score + out.log_probs[eos],
                finished: true,
            },
            payloads,
        });
    }

    finished.sort_by(|a, b| {
        b.hypothesis
            .normalized_score()
            .total_cmp(&a.hypothesis.normalized_score())
            .then_with(|| a.hypothesis.ids.cmp(&b.hypothesis.ids))
    });
    Ok(finished)
}
