//! Document corpus ingestion, vocabularies, and training-tuple extraction.
//!
//! A corpus is a pair of parallel files, one sentence per line, whitespace
//! pre-tokenized, with lines consisting solely of `<DOC>` separating
//! documents identically on both sides. Training consumes `(before-x, x, y)`
//! tuples: a source sentence, the source sentence that precedes it in the
//! same document (or the NULL sentence at document start), and the target.

mod batch;
mod corpus;
mod tuples;
mod vocab;

pub use batch::{make_batches, Batch};
pub use corpus::{load_corpus, Document, DOC_MARKER};
pub use tuples::{
    extract_tuples, load_tuples, null_sentence, save_tuples, ExtractConfig, ExtractionReport,
    SentenceTuple,
};
pub use vocab::{build_vocab, Side, Vocabulary};

/// Index into a vocabulary or embedding table.
pub type TokenId = usize;

pub const PAD: TokenId = 0;
pub const EOS: TokenId = 1;
pub const UNK: TokenId = 2;
pub const BOS: TokenId = 3;

pub const PAD_TOKEN: &str = "<pad>";
pub const EOS_TOKEN: &str = "</s>";
pub const UNK_TOKEN: &str = "<unk>";
pub const BOS_TOKEN: &str = "<s>";

/// Reserved entries present in every vocabulary, in id order.
pub const RESERVED: [&str; 4] = [PAD_TOKEN, EOS_TOKEN, UNK_TOKEN, BOS_TOKEN];
