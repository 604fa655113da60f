use super::{Document, TokenId, RESERVED, UNK};
use crate::{Error, Result};
use std::collections::HashMap;
use std::fs;
use std::path::Path;

/// Which side of the parallel corpus a vocabulary covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Source,
    Target,
}

/// Bidirectional token/id map with reserved entries pad, eos, unk, bos.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    token_to_id: HashMap<String, TokenId>,
    id_to_token: Vec<String>,
}

impl Vocabulary {
    fn with_reserved() -> Self {
        let mut v = Vocabulary {
            token_to_id: HashMap::new(),
            id_to_token: Vec::new(),
        };
        for tok in RESERVED {
            v.push(tok.to_string());
        }
        v
    }

    fn push(&mut self, token: String) {
        let id = self.id_to_token.len();
        self.token_to_id.insert(token.clone(), id);
        self.id_to_token.push(token);
    }

    pub fn size(&self) -> usize {
        self.id_to_token.len()
    }

    /// Id for a token; unknown tokens map to the unk id.
    pub fn id(&self, token: &str) -> TokenId {
        self.token_to_id.get(token).copied().unwrap_or(UNK)
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.id_to_token[id]
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<TokenId> {
        tokens.iter().map(|t| self.id(t)).collect()
    }

    pub fn decode(&self, ids: &[TokenId]) -> Vec<String> {
        ids.iter().map(|&i| self.token(i).to_string()).collect()
    }

    /// Writes one token per line in id order.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for tok in &self.id_to_token {
            out.push_str(tok);
            out.push('\n');
        }
        fs::write(path, out).map_err(Error::io(path))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(Error::io(path))?;
        let mut v = Vocabulary {
            token_to_id: HashMap::new(),
            id_to_token: Vec::new(),
        };
        for (i, line) in text.lines().enumerate() {
            if i < RESERVED.len() && line != RESERVED[i] {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    msg: format!("expected reserved token {:?}, found {:?}", RESERVED[i], line),
                });
            }
            v.push(line.to_string());
        }
        if v.size() < RESERVED.len() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: v.size(),
                msg: "vocabulary file shorter than the reserved prefix".into(),
            });
        }
        Ok(v)
    }
}

/// Builds a vocabulary of the `cap` most frequent tokens on one corpus side,
/// ties broken lexicographically. Everything beyond the cap maps to unk.
pub fn build_vocab(documents: &[Document], side: Side, cap: usize) -> Vocabulary {
    let mut freq: HashMap<&str, u64> = HashMap::new();
    for doc in documents {
        let sentences = match side {
            Side::Source => &doc.src,
            Side::Target => &doc.tgt,
        };
        for sent in sentences {
            for tok in sent {
                *freq.entry(tok.as_str()).or_insert(0) += 1;
            }
        }
    }
    let mut ranked: Vec<(&str, u64)> = freq.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let mut vocab = Vocabulary::with_reserved();
    for (tok, _) in ranked.into_iter().take(cap) {
        // reserved surface forms in the raw corpus stay reserved
        if !vocab.token_to_id.contains_key(tok) {
            vocab.push(tok.to_string());
        }
    }
    vocab
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::UNK_TOKEN;
    use proptest::prelude::*;

    fn doc(src: &[&str], tgt: &[&str]) -> Document {
        let split = |lines: &[&str]| {
            lines
                .iter()
                .map(|l| l.split_whitespace().map(str::to_string).collect())
                .collect()
        };
        Document {
            src: split(src),
            tgt: split(tgt),
        }
    }

    #[test]
    fn three_tokens_make_size_seven() {
        let docs = [doc(&["a b c"], &["x"])];
        let v = build_vocab(&docs, Side::Source, 30000);
        assert_eq!(v.size(), 7);
    }

    #[test]
    fn beyond_cap_maps_to_unk() {
        // "b" appears twice, "a" and "c" once each; cap 2 keeps b then a.
        let docs = [doc(&["b a b c"], &["x"])];
        let v = build_vocab(&docs, Side::Source, 2);
        assert_eq!(v.size(), 6);
        assert_ne!(v.id("b"), UNK);
        assert_ne!(v.id("a"), UNK);
        assert_eq!(v.id("c"), UNK);
    }

    #[test]
    fn frequency_ranking_matches_hand_count() {
        // 10 tokens: d:4, c:3, b:2, a:1 -> ids follow rank order after reserved.
        let docs = [doc(&["d c d b", "c d a c", "b d"], &["x", "y", "z"])];
        let v = build_vocab(&docs, Side::Source, 30000);
        assert_eq!(v.id("d"), 4);
        assert_eq!(v.id("c"), 5);
        assert_eq!(v.id("b"), 6);
        assert_eq!(v.id("a"), 7);
    }

    #[test]
    fn ties_break_lexicographically() {
        let docs = [doc(&["z q m"], &["x"])];
        let v = build_vocab(&docs, Side::Source, 30000);
        assert_eq!(v.id("m"), 4);
        assert_eq!(v.id("q"), 5);
        assert_eq!(v.id("z"), 6);
    }

    #[test]
    fn save_load_round_trip() {
        let docs = [doc(&["b a b c"], &["x"])];
        let v = build_vocab(&docs, Side::Source, 30000);
        let f = tempfile::NamedTempFile::new().unwrap();
        v.save(f.path()).unwrap();
        let loaded = Vocabulary::load(f.path()).unwrap();
        assert_eq!(loaded.size(), v.size());
        assert_eq!(loaded.id("b"), v.id("b"));
    }

    proptest! {
        #[test]
        fn encode_decode_round_trip_with_unk(
            words in proptest::collection::vec("[a-e]{1,3}", 1..12)
        ) {
            // vocabulary built from a fixed corpus that misses some words
            let docs = [doc(&["aa bb cc"], &["x"])];
            let v = build_vocab(&docs, Side::Source, 30000);
            let decoded = v.decode(&v.encode(&words));
            for (orig, dec) in words.iter().zip(&decoded) {
                if v.id(orig) == UNK {
                    prop_assert_eq!(dec.as_str(), UNK_TOKEN);
                } else {
                    prop_assert_eq!(dec, orig);
                }
            }
        }
    }
}
