use super::{beam_search, DecodeOptions};
use crate::data::{null_sentence, TokenId, EOS};
use crate::model::{DecoderTrace, Mode, ModelParams};
use crate::{Error, Result};

/// One translated sentence: surface ids (eos stripped) and the winning
/// hypothesis' per-step trace.
#[derive(Debug, Clone)]
pub struct SentenceTranslation {
    pub ids: Vec<TokenId>,
    pub trace: DecoderTrace,
    pub score: f64,
}

/// Translates a document sentence by sentence. Sentence `i` uses source
/// sentence `i - 1` as its preceding context (the source itself, never its
/// translation); sentence 0 uses the NULL sentence. Baseline parameters
/// ignore the threading.
pub fn translate_document(
    params: &ModelParams,
    sentences: &[Vec<TokenId>],
    opts: &DecodeOptions,
) -> Result<Vec<SentenceTranslation>> {
    if sentences.is_empty() {
        return Err(Error::Eval("cannot translate an empty document".into()));
    }
    let null = null_sentence();
    let mut out = Vec::with_capacity(sentences.len());
    for (i, x) in sentences.iter().enumerate() {
        let before: &[TokenId] = if i == 0 { &null } else { &sentences[i - 1] };
        let (hyp, trace) = beam_search(params, Some(before), x, opts)?;
        out.push(SentenceTranslation {
            ids: strip_eos(hyp.ids),
            trace,
            score: hyp.score,
        });
    }
    Ok(out)
}

/// The concatenation baseline: feeds `before_x ‖ x` to a baseline model as
/// one source. Oversized concatenations are truncated from the left, so
/// the tail of the preceding sentence survives. The first sentence is
/// translated exactly as the plain baseline would.
pub fn concat_baseline_translate(
    params: &ModelParams,
    sentences: &[Vec<TokenId>],
    opts: &DecodeOptions,
) -> Result<Vec<SentenceTranslation>> {
    if params.mode() != Mode::Baseline {
        return Err(Error::Mode(
            "the concatenation baseline needs baseline parameters".into(),
        ));
    }
    if sentences.is_empty() {
        return Err(Error::Eval("cannot translate an empty document".into()));
    }
    let max_len = params.dims.max_len;
    let mut out = Vec::with_capacity(sentences.len());
    for (i, x) in sentences.iter().enumerate() {
        let mut joined: Vec<TokenId> = if i == 0 {
            x.clone()
        } else {
            let mut j = sentences[i - 1].clone();
            j.extend_from_slice(x);
            j
        };
        if joined.len() > max_len {
            joined = joined[joined.len() - max_len..].to_vec();
        }
        let (hyp, trace) = beam_search(params, None, &joined, opts)?;
        out.push(SentenceTranslation {
            ids: strip_eos(hyp.ids),
            trace,
            score: hyp.score,
        });
    }
    Ok(out)
}

fn strip_eos(mut ids: Vec<TokenId>) -> Vec<TokenId> {
    if ids.last() == Some(&EOS) {
        ids.pop();
    }
    ids
}
