use crate::{Error, Result};
use std::fs;
use std::path::Path;

/// Line that separates documents in corpus files, on both sides.
pub const DOC_MARKER: &str = "<DOC>";

/// An aligned document: equal numbers of tokenized sentences per side.
#[derive(Debug, Clone)]
pub struct Document {
    pub src: Vec<Vec<String>>,
    pub tgt: Vec<Vec<String>>,
}

impl Document {
    pub fn len(&self) -> usize {
        self.src.len()
    }

    pub fn is_empty(&self) -> bool {
        self.src.is_empty()
    }
}

/// Loads a parallel document corpus from two sentence-per-line files.
///
/// Document boundaries must appear at the same positions on both sides;
/// within each document the sentence counts must agree.
pub fn load_corpus(source_path: &Path, target_path: &Path) -> Result<Vec<Document>> {
    let src_docs = read_side(source_path)?;
    let tgt_docs = read_side(target_path)?;
    if src_docs.len() != tgt_docs.len() {
        return Err(Error::Alignment {
            doc: src_docs.len().min(tgt_docs.len()),
            src: src_docs.len(),
            tgt: tgt_docs.len(),
        });
    }
    let mut docs = Vec::with_capacity(src_docs.len());
    for (i, (src, tgt)) in src_docs.into_iter().zip(tgt_docs).enumerate() {
        if src.len() != tgt.len() {
            return Err(Error::Alignment {
                doc: i,
                src: src.len(),
                tgt: tgt.len(),
            });
        }
        docs.push(Document { src, tgt });
    }
    Ok(docs)
}

/// One side of the corpus, split into documents of tokenized sentences.
/// Documents left empty by leading/trailing/doubled markers are dropped.
fn read_side(path: &Path) -> Result<Vec<Vec<Vec<String>>>> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    let mut docs = Vec::new();
    let mut current: Vec<Vec<String>> = Vec::new();
    for line in text.lines() {
        if line.trim() == DOC_MARKER {
            if !current.is_empty() {
                docs.push(std::mem::take(&mut current));
            }
        } else {
            current.push(line.split_whitespace().map(str::to_string).collect());
        }
    }
    if !current.is_empty() {
        docs.push(current);
    }
    Ok(docs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn two_documents_with_counts() {
        let src = write_tmp("a b\nc d\ne\n<DOC>\nf g\nh\n");
        let tgt = write_tmp("A B\nC D\nE\n<DOC>\nF G\nH\n");
        let docs = load_corpus(src.path(), tgt.path()).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].len(), 3);
        assert_eq!(docs[1].len(), 2);
        assert_eq!(docs[0].src[0], vec!["a", "b"]);
        assert_eq!(docs[1].tgt[1], vec!["H"]);
    }

    #[test]
    fn marker_mismatch_is_an_error() {
        let src = write_tmp("a\n<DOC>\nb\n");
        let tgt = write_tmp("A\nB\n");
        assert!(matches!(
            load_corpus(src.path(), tgt.path()),
            Err(Error::Alignment { .. })
        ));
    }

    #[test]
    fn unequal_sentence_counts_name_the_document() {
        let src = write_tmp("a\nb\n<DOC>\nc\nd\n");
        let tgt = write_tmp("A\nB\n<DOC>\nC\n");
        match load_corpus(src.path(), tgt.path()) {
            Err(Error::Alignment { doc, src, tgt }) => {
                assert_eq!((doc, src, tgt), (1, 2, 1));
            }
            other => panic!("expected alignment error, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_gives_empty_list() {
        let src = write_tmp("");
        let tgt = write_tmp("");
        assert!(load_corpus(src.path(), tgt.path()).unwrap().is_empty());
    }
}
