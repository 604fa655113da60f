use crate::data::{null_sentence, TokenId};
use crate::decoding::{
    beam_search, translate_document, DecodeOptions, RandomContextOpts, SentenceTranslation,
};
use crate::model::{GateForce, Mode, ModelParams};
use crate::rng::child_seed_indexed;
use crate::{Error, Result};

/// The validation interventions on the gated model: replace every
/// preceding sentence with NULL, force the gate closed, or replace the
/// preceding-sentence context with uniform [-1, 1] noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AblationMode {
    None,
    NullBeforeX,
    ZeroGate,
    RandomContext { seed: u64, per_sentence: bool },
}

/// Translates a document under an ablation. All interventions require
/// gated parameters.
pub fn ablate(
    params: &ModelParams,
    sentences: &[Vec<TokenId>],
    mode: AblationMode,
    opts: &DecodeOptions,
) -> Result<Vec<SentenceTranslation>> {
    if mode != AblationMode::None && params.mode() != Mode::Isg {
        return Err(Error::Mode(
            "ablations intervene on the inter-sentence gate and need gated parameters".into(),
        ));
    }
    match mode {
        AblationMode::None => translate_document(params, sentences, opts),
        AblationMode::NullBeforeX => {
            if sentences.is_empty() {
                return Err(Error::Eval("cannot translate an empty document".into()));
            }
            let null = null_sentence();
            let mut out = Vec::with_capacity(sentences.len());
            for x in sentences {
                let (hyp, trace) = beam_search(params, Some(&null), x, opts)?;
                out.push(finish(hyp, trace));
            }
            Ok(out)
        }
        AblationMode::ZeroGate => {
            let opts = DecodeOptions {
                force_gate: Some(GateForce::Zero),
                ..*opts
            };
            translate_document(params, sentences, &opts)
        }
        AblationMode::RandomContext { seed, per_sentence } => {
            if sentences.is_empty() {
                return Err(Error::Eval("cannot translate an empty document".into()));
            }
            let null = null_sentence();
            let mut out = Vec::with_capacity(sentences.len());
            for (i, x) in sentences.iter().enumerate() {
                let before: &[TokenId] = if i == 0 { &null } else { &sentences[i - 1] };
                let opts = DecodeOptions {
                    random_ctx: Some(RandomContextOpts {
                        seed: child_seed_indexed(seed, "random-context", i as u64),
                        per_sentence,
                    }),
                    ..*opts
                };
                let (hyp, trace) = beam_search(params, Some(before), x, &opts)?;
                out.push(finish(hyp, trace));
            }
            Ok(out)
        }
    }
}

fn finish(
    hyp: crate::decoding::Hypothesis,
    trace: crate::model::DecoderTrace,
) -> SentenceTranslation {
    let mut ids = hyp.ids;
    if ids.last() == Some(&crate::data::EOS) {
        ids.pop();
    }
    SentenceTranslation {
        ids,
        trace,
        score: hyp.score,
    }
}
