use super::{SentenceTuple, TokenId, PAD};
use crate::rng::rng_from_seed;
use rand::seq::SliceRandom;

/// A minibatch of tuples with each field padded to the batch maximum.
/// True lengths are kept so consumers mask padding out of loss and
/// attention by never feeding it.
#[derive(Debug, Clone)]
pub struct Batch {
    pub before_x: Vec<Vec<TokenId>>,
    pub x: Vec<Vec<TokenId>>,
    pub y: Vec<Vec<TokenId>>,
    pub before_x_len: Vec<usize>,
    pub x_len: Vec<usize>,
    pub y_len: Vec<usize>,
    pub is_doc_start: Vec<bool>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// The i-th tuple with padding stripped.
    pub fn item(&self, i: usize) -> SentenceTuple {
        SentenceTuple {
            before_x: self.before_x[i][..self.before_x_len[i]].to_vec(),
            x: self.x[i][..self.x_len[i]].to_vec(),
            y: self.y[i][..self.y_len[i]].to_vec(),
            is_doc_start: self.is_doc_start[i],
        }
    }

    fn from_tuples(tuples: &[&SentenceTuple]) -> Batch {
        let pad_to = |field: &dyn Fn(&SentenceTuple) -> &Vec<TokenId>| {
            let max = tuples.iter().map(|t| field(t).len()).max().unwrap_or(0);
            let padded: Vec<Vec<TokenId>> = tuples
                .iter()
                .map(|t| {
                    let mut v = field(t).clone();
                    v.resize(max, PAD);
                    v
                })
                .collect();
            let lens: Vec<usize> = tuples.iter().map(|t| field(t).len()).collect();
            (padded, lens)
        };
        let (before_x, before_x_len) = pad_to(&|t: &SentenceTuple| &t.before_x);
        let (x, x_len) = pad_to(&|t: &SentenceTuple| &t.x);
        let (y, y_len) = pad_to(&|t: &SentenceTuple| &t.y);
        Batch {
            before_x,
            x,
            y,
            before_x_len,
            x_len,
            y_len,
            is_doc_start: tuples.iter().map(|t| t.is_doc_start).collect(),
        }
    }
}

/// Shuffles the tuples with the given seed and chunks them into batches.
/// The final batch may be short.
pub fn make_batches(tuples: &[SentenceTuple], size: usize, seed: u64) -> Vec<Batch> {
    assert!(size > 0, "batch size must be positive");
    let mut order: Vec<usize> = (0..tuples.len()).collect();
    order.shuffle(&mut rng_from_seed(seed));
    order
        .chunks(size)
        .map(|chunk| {
            let items: Vec<&SentenceTuple> = chunk.iter().map(|&i| &tuples[i]).collect();
            Batch::from_tuples(&items)
        })
        .collect()
}
