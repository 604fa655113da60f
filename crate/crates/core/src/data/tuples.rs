use super::{Document, TokenId, Vocabulary, EOS};
use std::fmt;

/// The training unit: a source sentence `x`, the source sentence preceding
/// it in the same document (`before_x`, NULL at document start), and the
/// target `y`. Ids exclude the implicit target-side end token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceTuple {
    pub before_x: Vec<TokenId>,
    pub x: Vec<TokenId>,
    pub y: Vec<TokenId>,
    pub is_doc_start: bool,
}

/// The stand-in preceding sentence at document starts: exactly three
/// end-of-sentence ids.
pub fn null_sentence() -> Vec<TokenId> {
    vec![EOS; 3]
}

/// Filtering knobs for tuple extraction.
#[derive(Debug, Clone, Copy)]
pub struct ExtractConfig {
    /// Hard cap on the length of every tuple component.
    pub max_len: usize,
    /// Drop the tuple when max(|x|, |before_x|) / min(|x|, |before_x|)
    /// exceeds this ratio (skipped when before_x is NULL).
    pub max_len_ratio: f64,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            max_len: 50,
            max_len_ratio: 3.0,
        }
    }
}

/// Counts of kept and dropped tuples per filtering rule.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExtractionReport {
    pub kept: usize,
    pub dropped_length: usize,
    pub dropped_ratio: usize,
    pub dropped_empty: usize,
}

impl ExtractionReport {
    pub fn total(&self) -> usize {
        self.kept + self.dropped_length + self.dropped_ratio + self.dropped_empty
    }
}

impl fmt::Display for ExtractionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "sentence pairs        {}", self.total())?;
        writeln!(f, "tuples kept           {}", self.kept)?;
        writeln!(f, "dropped: over length  {}", self.dropped_length)?;
        writeln!(f, "dropped: length ratio {}", self.dropped_ratio)?;
        write!(f, "dropped: empty line   {}", self.dropped_empty)
    }
}

/// Walks every document and emits one tuple per aligned sentence pair,
/// silently dropping pairs that violate the length or disparity rules.
pub fn extract_tuples(
    documents: &[Document],
    vocab_src: &Vocabulary,
    vocab_tgt: &Vocabulary,
    config: &ExtractConfig,
) -> (Vec<SentenceTuple>, ExtractionReport) {
    let mut tuples = Vec::new();
    let mut report = ExtractionReport::default();

    for doc in documents {
        for i in 0..doc.len() {
            let x = vocab_src.encode(&doc.src[i]);
            let y = vocab_tgt.encode(&doc.tgt[i]);
            let is_doc_start = i == 0;
            let before_x = if is_doc_start {
                null_sentence()
            } else {
                vocab_src.encode(&doc.src[i - 1])
            };

            if x.is_empty() || y.is_empty() || before_x.is_empty() {
                report.dropped_empty += 1;
                continue;
            }
            if x.len() > config.max_len
                || y.len() > config.max_len
                || before_x.len() > config.max_len
            {
                report.dropped_length += 1;
                continue;
            }
            if !is_doc_start {
                let long = x.len().max(before_x.len()) as f64;
                let short = x.len().min(before_x.len()) as f64;
                if long / short > config.max_len_ratio {
                    report.dropped_ratio += 1;
                    continue;
                }
            }
            report.kept += 1;
            tuples.push(SentenceTuple {
                before_x,
                x,
                y,
                is_doc_start,
            });
        }
    }
    (tuples, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_vocab, Side};

    fn make_doc(src_lens: &[usize]) -> Document {
        make_doc_tagged(0, src_lens)
    }

    fn make_doc_tagged(tag: usize, src_lens: &[usize]) -> Document {
        // sentence i is one word repeated; unique per (document, position)
        let src: Vec<Vec<String>> = src_lens
            .iter()
            .enumerate()
            .map(|(i, &n)| vec![format!("d{tag}w{i}"); n])
            .collect();
        let tgt = src.clone();
        Document { src, tgt }
    }

    fn vocabs(docs: &[Document]) -> (Vocabulary, Vocabulary) {
        (
            build_vocab(docs, Side::Source, 30000),
            build_vocab(docs, Side::Target, 30000),
        )
    }

    #[test]
    fn null_sentence_is_three_eos() {
        let s = null_sentence();
        assert_eq!(s.len(), 3);
        assert!(s.iter().all(|&id| id == EOS));
    }

    #[test]
    fn document_construction_rule() {
        let docs = [make_doc(&[10, 12, 11])];
        let (vs, vt) = vocabs(&docs);
        let (tuples, report) = extract_tuples(&docs, &vs, &vt, &ExtractConfig::default());
        assert_eq!(tuples.len(), 3);
        assert_eq!(report.kept, 3);
        assert!(tuples[0].is_doc_start);
        assert_eq!(tuples[0].before_x, null_sentence());
        assert_eq!(tuples[1].before_x, tuples[0].x);
        assert_eq!(tuples[2].before_x, tuples[1].x);
    }

    #[test]
    fn length_disparity_drops_the_pair() {
        // |before_x| = 40, |x| = 5: ratio 8 > 3
        let docs = [make_doc(&[40, 5])];
        let (vs, vt) = vocabs(&docs);
        let (tuples, report) = extract_tuples(&docs, &vs, &vt, &ExtractConfig::default());
        assert_eq!(report.dropped_ratio, 1);
        assert_eq!(tuples.len(), 1); // only the document-start tuple survives
        assert!(tuples[0].is_doc_start);
    }

    #[test]
    fn ratio_exactly_three_is_kept() {
        let docs = [make_doc(&[9, 3])];
        let (vs, vt) = vocabs(&docs);
        let (_, report) = extract_tuples(&docs, &vs, &vt, &ExtractConfig::default());
        assert_eq!(report.kept, 2);
        assert_eq!(report.dropped_ratio, 0);
    }

    #[test]
    fn over_length_component_drops_the_tuple() {
        // 51-token x; also makes the next pair's before_x too long
        let docs = [make_doc(&[51, 50, 50])];
        let (vs, vt) = vocabs(&docs);
        let (tuples, report) = extract_tuples(&docs, &vs, &vt, &ExtractConfig::default());
        assert_eq!(report.dropped_length, 2);
        assert_eq!(report.kept, 1);
        assert_eq!(tuples.len(), 1);
        assert_eq!(tuples[0].x.len(), 50);
        assert!(!tuples[0].is_doc_start);
    }

    #[test]
    fn no_surviving_tuple_violates_constraints() {
        let docs = [make_doc(&[60, 20, 4, 13, 1, 2]), make_doc(&[50, 17, 51])];
        let (vs, vt) = vocabs(&docs);
        let cfg = ExtractConfig::default();
        let (tuples, _) = extract_tuples(&docs, &vs, &vt, &cfg);
        for t in &tuples {
            assert!(t.x.len() <= cfg.max_len);
            assert!(t.y.len() <= cfg.max_len);
            assert!(t.before_x.len() <= cfg.max_len);
            assert_eq!(t.before_x == null_sentence(), t.is_doc_start);
            if !t.is_doc_start {
                let long = t.x.len().max(t.before_x.len()) as f64;
                let short = t.x.len().min(t.before_x.len()) as f64;
                assert!(long / short <= cfg.max_len_ratio);
            }
        }
    }

    #[test]
    fn tuple_store_round_trips() {
        let docs = [make_doc(&[5, 6, 7])];
        let (vs, vt) = vocabs(&docs);
        let (tuples, report) = extract_tuples(&docs, &vs, &vt, &ExtractConfig::default());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tuples.txt");
        save_tuples(&path, &tuples, &report, 7).unwrap();
        let loaded = load_tuples(&path).unwrap();
        assert_eq!(loaded, tuples);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# seed=7\n"));
    }

    #[test]
    fn each_sentence_used_as_x_once_and_before_x_at_most_once() {
        let docs = [
            make_doc_tagged(0, &[5, 6, 7, 30, 8]),
            make_doc_tagged(1, &[3, 3]),
        ];
        let (vs, vt) = vocabs(&docs);
        let (tuples, _) = extract_tuples(&docs, &vs, &vt, &ExtractConfig::default());
        for doc in &docs {
            for (i, sent) in doc.src.iter().enumerate() {
                let ids = vs.encode(sent);
                let as_x = tuples.iter().filter(|t| t.x == ids).count();
                let as_before = tuples.iter().filter(|t| t.before_x == ids).count();
                if i > 0 {
                    // non-first sentences: x exactly once unless filtered
                    assert!(as_x <= 1);
                }
                assert!(as_before <= 1, "sentence {i} reused as before_x");
            }
        }
    }
}

/// Writes tuples to the preprocess output store: a seed header, a report
/// comment, then one `doc_start<TAB>before_x<TAB>x<TAB>y` line per tuple
/// with space-separated ids.
pub fn save_tuples(
    path: &std::path::Path,
    tuples: &[SentenceTuple],
    report: &ExtractionReport,
    seed: u64,
) -> crate::Result<()> {
    use std::fmt::Write as _;
    let mut out = String::new();
    writeln!(out, "# seed={seed}").expect("string write");
    writeln!(
        out,
        "# kept={} dropped_length={} dropped_ratio={} dropped_empty={}",
        report.kept, report.dropped_length, report.dropped_ratio, report.dropped_empty
    )
    .expect("string write");
    let ids = |v: &[TokenId]| {
        v.iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    for t in tuples {
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            u8::from(t.is_doc_start),
            ids(&t.before_x),
            ids(&t.x),
            ids(&t.y)
        )
        .expect("string write");
    }
    std::fs::write(path, out).map_err(crate::Error::io(path))
}

/// Reads a tuple store written by [`save_tuples`].
pub fn load_tuples(path: &std::path::Path) -> crate::Result<Vec<SentenceTuple>> {
    let text = std::fs::read_to_string(path).map_err(crate::Error::io(path))?;
    let mut tuples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| crate::Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(err(format!("expected 4 tab fields, found {}", fields.len())));
        }
        let parse_ids = |s: &str| -> crate::Result<Vec<TokenId>> {
            s.split_whitespace()
                .map(|t| {
                    t.parse::<TokenId>()
                        .map_err(|e| err(format!("bad id {t:?}: {e}")))
                })
                .collect()
        };
        tuples.push(SentenceTuple {
            is_doc_start: fields[0] == "1",
            before_x: parse_ids(fields[1])?,
            x: parse_ids(fields[2])?,
            y: parse_ids(fields[3])?,
        });
    }
    Ok(tuples)
}
