use super::{gru_step, ParamValues};
use crate::data::TokenId;
use crate::tensor::{Tape, Tensor, Value};
use crate::{Error, Result};

/// A source sentence after the bidirectional encoder: annotation row `j`
/// is the forward state at `j` concatenated with the backward state at `j`.
#[derive(Debug, Clone, Copy)]
pub struct EncodedSentence {
    /// `[T, 2*hidden]` annotation matrix.
    pub annotations: Value,
    /// Source length `T`.
    pub len: usize,
    /// The backward pass state at position 0, kept for decoder
    /// initialization.
    pub bwd_first: Value,
}

/// Runs the forward and backward GRU passes from zero states and stacks
/// the concatenated annotations.
pub fn encode(tape: &mut Tape, pv: &ParamValues, ids: &[TokenId]) -> Result<EncodedSentence> {
    if ids.is_empty() {
        return Err(Error::Shape("cannot encode an empty sentence".into()));
    }
    if ids.len() > pv.dims.max_len {
        return Err(Error::Shape(format!(
            "sentence of {} tokens exceeds the maximum length {}",
            ids.len(),
            pv.dims.max_len
        )));
    }
    let hidden = pv.dims.hidden;
    let embedded: Vec<Value> = ids
        .iter()
        .map(|&id| tape.embed(pv.emb_src, id))
        .collect::<Result<_>>()?;

    let zero = tape.leaf(&Tensor::zeros(vec![1, hidden]));
    let mut fwd = Vec::with_capacity(ids.len());
    let mut state = zero;
    for &x in &embedded {
        state = gru_step(tape, &pv.enc_fwd, x, state)?;
        fwd.push(state);
    }

    let mut bwd = vec![zero; ids.len()];
    let mut state = zero;
    for (j, &x) in embedded.iter().enumerate().rev() {
        state = gru_step(tape, &pv.enc_bwd, x, state)?;
        bwd[j] = state;
    }

    let rows: Vec<Value> = fwd
        .iter()
        .zip(&bwd)
        .map(|(&f, &b)| tape.concat(f, b))
        .collect::<Result<_>>()?;
    let annotations = tape.stack_rows(&rows)?;
    Ok(EncodedSentence {
        annotations,
        len: ids.len(),
        bwd_first: bwd[0],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Mode, ModelDims, ModelParams};

    fn dims() -> ModelDims {
        ModelDims {
            src_vocab: 8,
            tgt_vocab: 8,
            embed: 3,
            hidden: 4,
            attn: 4,
            max_len: 50,
        }
    }

    #[test]
    fn single_token_concatenates_one_step_of_each_direction() {
        let m = ModelParams::init(dims(), Mode::Baseline, 21);
        let mut tape = Tape::new();
        let pv = m.load(&mut tape);
        let enc = encode(&mut tape, &pv, &[5]).unwrap();
        assert_eq!(enc.len, 1);
        assert_eq!(tape.shape(enc.annotations), (1, 8));

        // independent single steps from zero state
        let x = tape.embed(pv.emb_src, 5).unwrap();
        let zero = tape.leaf(&Tensor::zeros(vec![1, 4]));
        let f = gru_step(&mut tape, &pv.enc_fwd, x, zero).unwrap();
        let b = gru_step(&mut tape, &pv.enc_bwd, x, zero).unwrap();
        let row = tape.data(enc.annotations);
        assert_eq!(&row[..4], tape.data(f));
        assert_eq!(&row[4..], tape.data(b));
    }

    #[test]
    fn reversing_the_input_swaps_direction_roles() {
        // backward-pass states of x equal forward-pass states of
        // reversed(x) computed with the backward cell's weights
        let m = ModelParams::init(dims(), Mode::Baseline, 22);
        let mut tape = Tape::new();
        let pv = m.load(&mut tape);
        let ids = [1usize, 5, 2, 7];
        let enc = encode(&mut tape, &pv, &ids).unwrap();

        let reversed: Vec<usize> = ids.iter().rev().copied().collect();
        let zero = tape.leaf(&Tensor::zeros(vec![1, 4]));
        let mut state = zero;
        let mut manual = Vec::new();
        for &id in &reversed {
            let x = tape.embed(pv.emb_src, id).unwrap();
            state = gru_step(&mut tape, &pv.enc_bwd, x, state).unwrap();
            manual.push(tape.data(state).to_vec());
        }
        // annotation row j holds the backward state for position j in
        // columns [hidden, 2*hidden); manual pass visits positions T-1..0
        let annot = tape.data(enc.annotations).to_vec();
        for (k, m_state) in manual.iter().enumerate() {
            let j = ids.len() - 1 - k;
            let row = &annot[j * 8..(j + 1) * 8];
            assert_eq!(&row[4..], m_state.as_slice());
        }
    }

    #[test]
    fn length_limit_is_enforced() {
        let m = ModelParams::init(dims(), Mode::Baseline, 23);
        let mut tape = Tape::new();
        let pv = m.load(&mut tape);
        let fifty = vec![1usize; 50];
        assert!(encode(&mut tape, &pv, &fifty).is_ok());
        let fifty_one = vec![1usize; 51];
        assert!(encode(&mut tape, &pv, &fifty_one).is_err());
        assert!(encode(&mut tape, &pv, &[]).is_err());
    }
}
