use crate::data::TokenId;
use crate::model::DecoderTrace;
use crate::{Error, Result};

/// Natural-log entropy of a distribution, with `0 ln 0 := 0`.
pub fn entropy(dist: &[f64]) -> f64 {
    -dist
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

/// Per-position entropy of the attention over the preceding sentence,
/// labeled with the emitted target tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyCurve {
    pub entropies: Vec<f64>,
    pub tokens: Vec<TokenId>,
}

/// Computes the entropy of the before-x attention weights at every step of
/// a gated decoding trace. `tokens` are the emitted target ids (one per
/// step) used to label the curve.
pub fn attention_entropy(trace: &DecoderTrace, tokens: &[TokenId]) -> Result<EntropyCurve> {
    if trace.len() != tokens.len() {
        return Err(Error::Eval(format!(
            "trace has {} steps but {} tokens were emitted",
            trace.len(),
            tokens.len()
        )));
    }
    let entropies = trace
        .steps
        .iter()
        .map(|step| {
            step.attn_a
                .as_deref()
                .map(entropy)
                .ok_or_else(|| Error::Eval("trace has no before-x attention".into()))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(EntropyCurve {
        entropies,
        tokens: tokens.to_vec(),
    })
}
