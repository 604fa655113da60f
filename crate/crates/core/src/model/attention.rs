use super::{AttentionValues, EncodedSentence};
use crate::tensor::{Tape, Value};
use crate::Result;

/// Soft attention over one encoded sentence.
///
/// Scores come from a single-hidden-layer network,
/// `e_j = score · tanh(W_q q + W_h h_j)`, normalized with a softmax; the
/// context is the weight-averaged annotation. Returns `(context [1, 2H],
/// weights [T, 1])`.
pub fn attend(
    tape: &mut Tape,
    p: &AttentionValues,
    query: Value,
    enc: &EncodedSentence,
) -> Result<(Value, Value)> {
    let projected_query = tape.matmul(query, p.query)?;
    let projected_annot = tape.matmul(enc.annotations, p.annot)?;
    let pre = tape.add_row(projected_annot, projected_query)?;
    let activated = tape.tanh(pre);
    let scores = tape.matmul(activated, p.score)?;
    let weights = tape.softmax(scores)?;
    let weights_row = tape.transpose(weights);
    let context = tape.matmul(weights_row, enc.annotations)?;
    Ok((context, weights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{encode, Mode, ModelDims, ModelParams};
    use crate::rng::rng_from_seed;
    use crate::tensor::Tensor;
    use rand::Rng as _;

    fn dims() -> ModelDims {
        ModelDims {
            src_vocab: 9,
            tgt_vocab: 9,
            embed: 3,
            hidden: 4,
            attn: 5,
            max_len: 50,
        }
    }

    #[test]
    fn singleton_gets_full_weight_and_its_own_annotation() {
        let m = ModelParams::init(dims(), Mode::Baseline, 11);
        let mut tape = Tape::new();
        let pv = m.load(&mut tape);
        let enc = encode(&mut tape, &pv, &[4]).unwrap();
        let query = tape.leaf(&Tensor::row(vec![0.2, -0.3, 0.5, 0.1]));
        let (ctx, w) = attend(&mut tape, &pv.attention, query, &enc).unwrap();
        assert_eq!(tape.data(w), &[1.0]);
        assert_eq!(tape.data(ctx), tape.data(enc.annotations));
    }

    #[test]
    fn identical_rows_split_the_weight() {
        let m = ModelParams::init(dims(), Mode::Baseline, 12);
        let mut tape = Tape::new();
        let pv = m.load(&mut tape);
        // same token twice gives identical forward inputs but not identical
        // annotations (recurrence), so build the encoded matrix by hand
        let row = tape.leaf(&Tensor::row(vec![0.1, 0.2, -0.3, 0.4, 0.0, 0.5, -0.1, 0.2]));
        let annotations = tape.stack_rows(&[row, row]).unwrap();
        let enc = EncodedSentence {
            annotations,
            len: 2,
            bwd_first: row,
        };
        let query = tape.leaf(&Tensor::row(vec![0.3, 0.0, -0.2, 0.7]));
        let (_, w) = attend(&mut tape, &pv.attention, query, &enc).unwrap();
        assert_eq!(tape.data(w), &[0.5, 0.5]);
    }

    #[test]
    fn context_equals_explicit_weighted_sum() {
        let m = ModelParams::init(dims(), Mode::Baseline, 13);
        let mut tape = Tape::new();
        let pv = m.load(&mut tape);
        let mut rng = rng_from_seed(99);
        let ids: Vec<usize> = (0..6).map(|_| rng.random_range(0..9)).collect();
        let enc = encode(&mut tape, &pv, &ids).unwrap();
        let query = tape.leaf(&Tensor::row(
            (0..4).map(|_| rng.random_range(-1.0..1.0)).collect(),
        ));
        let (ctx, w) = attend(&mut tape, &pv.attention, query, &enc).unwrap();

        let weights = tape.data(w).to_vec();
        let annot = tape.data(enc.annotations).to_vec();
        let width = 2 * 4;
        let mut expect = vec![0.0; width];
        for (j, &wj) in weights.iter().enumerate() {
            for k in 0..width {
                expect[k] += wj * annot[j * width + k];
            }
        }
        for (got, want) in tape.data(ctx).iter().zip(&expect) {
            assert!((got - want).abs() < 1e-12);
        }
        let sum: f64 = weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }
}
