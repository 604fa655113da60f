use crate::{Error, Result};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Token-to-vector map with a uniform dimension.
#[derive(Debug, Clone)]
pub struct WordVectors {
    vectors: HashMap<String, Vec<f64>>,
    pub dim: usize,
}

impl WordVectors {
    pub fn new(dim: usize) -> Self {
        WordVectors {
            vectors: HashMap::new(),
            dim,
        }
    }

    pub fn insert(&mut self, token: &str, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::Eval(format!(
                "vector for {token:?} has dimension {}, expected {}",
                vector.len(),
                self.dim
            )));
        }
        self.vectors.insert(token.to_string(), vector);
        Ok(())
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Writes the word2vec text format: a `count dim` line, then one
    /// `token v1 .. vdim` line per entry, tokens sorted for determinism.
    /// Values print in shortest round-trip form, so load(save(x)) == x
    /// to the bit.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        writeln!(out, "{} {}", self.vectors.len(), self.dim).expect("string write");
        let mut tokens: Vec<&String> = self.vectors.keys().collect();
        tokens.sort();
        for token in tokens {
            out.push_str(token);
            for v in &self.vectors[token] {
                write!(out, " {v}").expect("string write");
            }
            out.push('\n');
        }
        fs::write(path, out).map_err(Error::io(path))
    }
}

/// Parses the word2vec text format.
pub fn load_word_vectors(path: &Path) -> Result<WordVectors> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        msg: "empty word-vector file".into(),
    })?;
    let mut parts = header.split_whitespace();
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let count: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| parse_err(1, "expected `count dim` header".into()))?;
    let dim: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| parse_err(1, "expected `count dim` header".into()))?;

    let mut vectors = WordVectors::new(dim);
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let token = fields
            .next()
            .ok_or_else(|| parse_err(i + 1, "missing token".into()))?;
        let values: Vec<f64> = fields
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|e| parse_err(i + 1, format!("bad float {f:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        if values.len() != dim {
            return Err(parse_err(
                i + 1,
                format!("expected {dim} values, found {}", values.len()),
            ));
        }
        vectors.vectors.insert(token.to_string(), values);
    }
    if vectors.len() != count {
        return Err(parse_err(
            1,
            format!("header says {count} entries, file has {}", vectors.len()),
        ));
    }
    Ok(vectors)
}

/// Cosine similarity of the two sentences' mean word vectors. Tokens
/// without vectors are skipped; a sentence with no known token is an error.
pub fn sentence_similarity(s1: &str, s2: &str, vectors: &WordVectors) -> Result<f64> {
    let a = mean_vector(s1, vectors)?;
    let b = mean_vector(s2, vectors)?;
    cosine(&a, &b)
}

fn mean_vector(sentence: &str, vectors: &WordVectors) -> Result<Vec<f64>> {
    let mut sum = vec![0.0; vectors.dim];
    let mut known = 0usize;
    for token in sentence.split_whitespace() {
        if let Some(v) = vectors.get(token) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            known += 1;
        }
    }
    if known == 0 {
        return Err(Error::Eval(format!(
            "no known word vectors in sentence {sentence:?}"
        )));
    }
    for s in sum.iter_mut() {
        *s /= known as f64;
    }
    Ok(sum)
}

fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Eval("cosine of a zero vector".into()));
    }
    Ok(dot / (na * nb))
}

/// Corpus-level coherence: adjacent-sentence similarities pooled over all
/// documents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceReport {
    /// Mean similarity over all scored pairs; absent when no document has
    /// two scorable sentences.
    pub mean: Option<f64>,
    pub pairs: usize,
    /// Adjacent pairs skipped because one side had no known vectors.
    pub skipped: usize,
}

/// Averages [`sentence_similarity`] over consecutive sentences within each
/// document, pooled corpus-wide. Documents contribute `len - 1` pairs;
/// single-sentence documents contribute none.
pub fn document_coherence(documents: &[Vec<String>], vectors: &WordVectors) -> CoherenceReport {
    let mut sum = 0.0;
    let mut pairs = 0usize;
    let mut skipped = 0usize;
    for doc in documents {
        for pair in doc.windows(2) {
            match sentence_similarity(&pair[0], &pair[1], vectors) {
                Ok(sim) => {
                    sum += sim;
                    pairs += 1;
                }
                Err(_) => skipped += 1,
            }
        }
    }
    CoherenceReport {
        mean: (pairs > 0).then(|| sum / pairs as f64),
        pairs,
        skipped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_vectors() -> WordVectors {
        let mut v = WordVectors::new(2);
        v.insert("east", vec![1.0, 0.0]).unwrap();
        v.insert("north", vec![0.0, 1.0]).unwrap();
        v.insert("northeast", vec![1.0, 1.0]).unwrap();
        v.insert("west", vec![-1.0, 0.0]).unwrap();
        v
    }

    #[test]
    fn identical_sentences_have_similarity_one() {
        let v = toy_vectors();
        let s = "east north";
        assert!((sentence_similarity(s, s, &v).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_means_have_similarity_zero() {
        let v = toy_vectors();
        assert_eq!(sentence_similarity("east", "north", &v).unwrap(), 0.0);
    }

    #[test]
    fn hand_set_vectors_match_the_hand_computed_cosine() {
        let v = toy_vectors();
        // mean("east north") = (0.5, 0.5); mean("northeast east") = (1, 0.5)
        // cos = (0.5 + 0.25) / (sqrt(0.5) * sqrt(1.25))
        let want = 0.75 / (0.5_f64.sqrt() * 1.25_f64.sqrt());
        let got = sentence_similarity("east north", "northeast east", &v).unwrap();
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn similarity_is_symmetric_exactly() {
        let v = toy_vectors();
        let a = sentence_similarity("east north", "northeast west", &v).unwrap();
        let b = sentence_similarity("northeast west", "east north", &v).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn unknown_tokens_are_skipped_and_all_unknown_is_an_error() {
        let v = toy_vectors();
        let with_noise = sentence_similarity("east zzz north", "east north", &v).unwrap();
        let clean = sentence_similarity("east north", "east north", &v).unwrap();
        assert!((with_noise - clean).abs() < 1e-12);
        assert!(sentence_similarity("zzz qqq", "east", &v).is_err());
    }

    #[test]
    fn coherence_pools_pairs_across_documents() {
        let v = toy_vectors();
        let docs = vec![
            vec!["east".to_string(), "east".to_string(), "north".to_string()],
            vec!["north".to_string(), "northeast".to_string()],
            vec!["west".to_string()], // no pairs
        ];
        // pairs: (east,east)=1, (east,north)=0, (north,northeast)=1/sqrt(2)
        let report = document_coherence(&docs, &v);
        assert_eq!(report.pairs, 3);
        assert_eq!(report.skipped, 0);
        let want = (1.0 + 0.0 + 1.0 / 2.0_f64.sqrt()) / 3.0;
        assert!((report.mean.unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn single_sentence_documents_leave_the_mean_absent() {
        let v = toy_vectors();
        let docs = vec![vec!["east".to_string()], vec!["north".to_string()]];
        let report = document_coherence(&docs, &v);
        assert_eq!(report.mean, None);
        assert_eq!(report.pairs, 0);
    }

    #[test]
    fn identical_translations_everywhere_give_coherence_one() {
        let v = toy_vectors();
        let docs = vec![vec!["east north".to_string(); 4]];
        let report = document_coherence(&docs, &v);
        assert!((report.mean.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn word_vector_file_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vecs.txt");
        let mut v = WordVectors::new(3);
        v.insert("alpha", vec![0.1, -2.5e-7, 3.0 / 7.0]).unwrap();
        v.insert("beta", vec![1.0 / 3.0, -0.0, 42.5]).unwrap();
        v.save(&path).unwrap();
        let loaded = load_word_vectors(&path).unwrap();
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded.dim, 3);
        for token in ["alpha", "beta"] {
            for (a, b) in v.get(token).unwrap().iter().zip(loaded.get(token).unwrap()) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
        // and saving the loaded map reproduces the file byte for byte
        let path2 = dir.path().join("vecs2.txt");
        loaded.save(&path2).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&path2).unwrap());
    }

    #[test]
    fn two_word_file_parses_and_bad_dimensions_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vecs.txt");
        fs::write(&path, "2 2\nfoo 0.5 1.5\nbar -1 2\n").unwrap();
        let v = load_word_vectors(&path).unwrap();
        assert_eq!(v.get("foo").unwrap(), &[0.5, 1.5]);
        assert_eq!(v.get("bar").unwrap(), &[-1.0, 2.0]);

        fs::write(&path, "1 3\nfoo 0.5 1.5\n").unwrap();
        assert!(load_word_vectors(&path).is_err());
        fs::write(&path, "not a header\n").unwrap();
        assert!(load_word_vectors(&path).is_err());
        fs::write(&path, "").unwrap();
        assert!(load_word_vectors(&path).is_err());
    }
}
