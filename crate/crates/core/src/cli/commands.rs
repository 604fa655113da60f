use super::RunConfig;
use crate::analysis::{
    bleu4, document_coherence, load_word_vectors, AblationMode, Smoothing,
};
use crate::data::{
    build_vocab, extract_tuples, load_corpus, load_tuples, save_tuples, Side, TokenId, Vocabulary,
    DOC_MARKER, EOS_TOKEN,
};
use crate::decoding::{
    concat_baseline_translate, load_trace_rows, DecodeOptions,
    SentenceTranslation, TraceRow, TRACE_HEADER,
};
use crate::model::{Mode, ModelParams};
use crate::rng::child_seed;
use crate::training::{pretrain_init, train, AdadeltaState};
use crate::{Error, Result};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Corpus ingestion end to end: vocabularies, the tuple store, and the
/// extraction report.
pub fn cmd_preprocess(config: &RunConfig) -> Result<()> {
    let seed = config.seed()?;
    let docs = load_corpus(&config.path("corpus_src")?, &config.path("corpus_tgt")?)?;
    let cap = config.usize_or("vocab_cap", 30_000)?;
    let vocab_src = build_vocab(&docs, Side::Source, cap);
    let vocab_tgt = build_vocab(&docs, Side::Target, cap);
    vocab_src.save(&config.path("vocab_src")?)?;
    vocab_tgt.save(&config.path("vocab_tgt")?)?;

    let (tuples, report) = extract_tuples(&docs, &vocab_src, &vocab_tgt, &config.extract_config()?);
    save_tuples(&config.path("tuples")?, &tuples, &report, seed)?;
    if let Some(report_path) = config.path_opt("report") {
        let text = format!("# seed={seed}\n{report}\n");
        fs::write(&report_path, text).map_err(Error::io(&report_path))?;
    }
    println!("{report}");
    Ok(())
}

/// Minibatch Adadelta training, optionally warm-started from a baseline
/// checkpoint (which realizes the pretraining strategy for the gated mode).
pub fn cmd_train(config: &RunConfig) -> Result<()> {
    let seed = config.seed()?;
    let train_config = config.train_config()?;
    let vocab_src = Vocabulary::load(&config.path("vocab_src")?)?;
    let vocab_tgt = Vocabulary::load(&config.path("vocab_tgt")?)?;
    let tuples = load_tuples(&config.path("tuples")?)?;
    let dev = match config.path_opt("dev_tuples") {
        Some(p) => Some(load_tuples(&p)?),
        None => None,
    };
    let dims = config.dims(vocab_src.size(), vocab_tgt.size())?;

    if train_config.mode == Mode::Isg && tuples.iter().all(|t| t.is_doc_start) {
        return Err(Error::Train(
            "gated training needs tuples with a real preceding sentence; \
             every tuple in the store is a document start"
                .into(),
        ));
    }

    let init = match config.path_opt("init_from") {
        None => None,
        Some(path) => {
            let (loaded, meta) = ModelParams::load_checkpoint(&path)?;
            if meta.dims != dims {
                return Err(Error::Checkpoint(format!(
                    "checkpoint dimensions {:?} do not match the configured {:?}",
                    meta.dims, dims
                )));
            }
            match (meta.mode, train_config.mode) {
                (Mode::Baseline, Mode::Isg) => Some(pretrain_init(&loaded, seed)?),
                (a, b) if a == b => Some(loaded),
                (a, b) => {
                    return Err(Error::Train(format!(
                        "cannot initialize {} training from a {} checkpoint",
                        b.as_str(),
                        a.as_str()
                    )))
                }
            }
        }
    };

    let ckpt_path = config.path("checkpoint")?;
    let log_path = config.path_opt("log");
    if let Some(p) = &log_path {
        fs::write(p, format!("# seed={seed}\n")).map_err(Error::io(p))?;
    }
    let cadence = train_config.checkpoint_every;
    let outcome = train(
        &train_config,
        dims,
        &tuples,
        dev.as_deref(),
        init,
        |params, optimizer, stats| {
            let mut line = format!("epoch={} mean_nll={}", stats.epoch, stats.mean_nll);
            if let Some(d) = stats.dev_nll {
                write!(line, " dev_nll={d}").expect("string write");
            }
            write!(line, " wall_s={:.3}", stats.wall_s).expect("string write");
            println!("{line}");
            if let Some(p) = &log_path {
                append_line(p, &line)?;
            }
            if cadence > 0 && (stats.epoch + 1) % cadence == 0 {
                let epoch_path = suffixed(&ckpt_path, &format!(".epoch{}", stats.epoch));
                params.save(&epoch_path, seed)?;
                save_optimizer(optimizer, &epoch_path, params, seed)?;
            }
            Ok(())
        },
    )?;

    outcome.best.save(&ckpt_path, seed)?;
    save_optimizer(&outcome.optimizer, &ckpt_path, &outcome.params, seed)?;
    println!(
        "saved {} checkpoint to {} (best epoch {})",
        train_config.mode.as_str(),
        ckpt_path.display(),
        outcome.best_epoch
    );
    Ok(())
}

fn save_optimizer(
    optimizer: &AdadeltaState,
    ckpt_path: &Path,
    params: &ModelParams,
    seed: u64,
) -> Result<()> {
    optimizer.save(
        &suffixed(ckpt_path, ".opt"),
        params.dims,
        params.mode(),
        seed,
    )
}

fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn append_line(path: &Path, line: &str) -> Result<()> {
    use std::io::Write as _;
    let mut f = fs::OpenOptions::new()
        .append(true)
        .open(path)
        .map_err(Error::io(path))?;
    writeln!(f, "{line}").map_err(Error::io(path))
}

/// Beam-search translation of a document-structured source file, with
/// optional ablations, the concatenation baseline, and a trace dump.
pub fn cmd_translate(config: &RunConfig) -> Result<()> {
    let seed = config.seed()?;
    let vocab_src = Vocabulary::load(&config.path("vocab_src")?)?;
    let vocab_tgt = Vocabulary::load(&config.path("vocab_tgt")?)?;
    let (params, _) = ModelParams::load_checkpoint(&config.path("checkpoint")?)?;
    if let Some(wanted) = config.get("mode") {
        if Mode::parse(wanted)? != params.mode() {
            return Err(Error::Mode(format!(
                "checkpoint is {} but the config asks for {wanted}",
                params.mode().as_str()
            )));
        }
    }

    let source_path = config.path("source")?;
    let documents = read_document_lines(&source_path)?;
    if documents.is_empty() {
        return Err(Error::Eval(format!(
            "no documents in {}",
            source_path.display()
        )));
    }
    let encoded: Vec<Vec<Vec<TokenId>>> = documents
        .iter()
        .map(|doc| {
            doc.iter()
                .map(|line| {
                    let tokens: Vec<String> =
                        line.split_whitespace().map(str::to_string).collect();
                    vocab_src.encode(&tokens)
                })
                .collect()
        })
        .collect();

    let opts = DecodeOptions {
        width: config.usize_or("width", 10)?,
        max_out_len: match config.get("max_out_len") {
            None => None,
            Some(_) => Some(config.usize_or("max_out_len", 0)?),
        },
        force_gate: None,
        random_ctx: None,
    };
    let ablation = parse_ablation(config, seed)?;
    let concat = config.bool_or("concat_baseline", false)?;
    if concat && ablation != AblationMode::None {
        return Err(Error::Config(
            "the concatenation baseline cannot be combined with an ablation".into(),
        ));
    }

    let mut translated_docs: Vec<Vec<SentenceTranslation>> = Vec::new();
    for doc in &encoded {
        let translations = if concat {
            concat_baseline_translate(&params, doc, &opts)?
        } else {
            crate::analysis::ablate(&params, doc, ablation, &opts)?
        };
        translated_docs.push(translations);
    }

    let out_path = config.path("output")?;
    let surfaces: Vec<Vec<String>> = translated_docs
        .iter()
        .map(|doc| {
            doc.iter()
                .map(|t| vocab_tgt.decode(&t.ids).join(" "))
                .collect()
        })
        .collect();
    write_document_lines(&out_path, &surfaces)?;

    if let Some(trace_path) = config.path_opt("trace") {
        let mut out = format!("# seed={seed}\n{TRACE_HEADER}\n");
        for (di, doc) in translated_docs.iter().enumerate() {
            for (si, sentence) in doc.iter().enumerate() {
                for (ti, step) in sentence.trace.steps.iter().enumerate() {
                    writeln!(out, "{}", TraceRow::from_step(di, si, ti, step).to_csv())
                        .expect("string write");
                }
            }
        }
        fs::write(&trace_path, out).map_err(Error::io(&trace_path))?;
    }
    println!(
        "translated {} documents ({} sentences) to {}",
        translated_docs.len(),
        translated_docs.iter().map(Vec::len).sum::<usize>(),
        out_path.display()
    );
    Ok(())
}

fn parse_ablation(config: &RunConfig, seed: u64) -> Result<AblationMode> {
    match config.get("ablate") {
        None | Some("none") => Ok(AblationMode::None),
        Some("null") => Ok(AblationMode::NullBeforeX),
        Some("zgate0") => Ok(AblationMode::ZeroGate),
        Some("rv") => Ok(AblationMode::RandomContext {
            seed: child_seed(seed, "random-context"),
            per_sentence: config.bool_or("rv_per_sentence", false)?,
        }),
        Some(other) => Err(Error::Config(format!(
            "unknown ablation {other:?}, expected null, zgate0 or rv"
        ))),
    }
}

/// BLEU against references, adjacent-sentence coherence (when word vectors
/// are available), and entropy curves (when a trace dump is available).
pub fn cmd_evaluate(config: &RunConfig) -> Result<()> {
    let seed = config.seed()?;
    let hyp_path = config.path("translations")?;
    let ref_path = config.path("references")?;
    let hyp_docs = read_document_lines(&hyp_path)?;
    let ref_docs = read_document_lines(&ref_path)?;

    let hyps: Vec<String> = hyp_docs.iter().flatten().cloned().collect();
    let refs: Vec<String> = ref_docs.iter().flatten().cloned().collect();
    let smoothing = if config.bool_or("bleu_smoothing", false)? {
        Smoothing::AddOne
    } else {
        Smoothing::None
    };
    let bleu = bleu4(&hyps, &refs, smoothing)?;
    let mut bleu_text = format!("# seed={seed}\nbleu={}\n", bleu.score);
    writeln!(
        bleu_text,
        "precisions={},{},{},{}",
        bleu.precisions[0], bleu.precisions[1], bleu.precisions[2], bleu.precisions[3]
    )
    .expect("string write");
    writeln!(
        bleu_text,
        "brevity_penalty={} hyp_tokens={} ref_tokens={}",
        bleu.brevity_penalty, bleu.hyp_tokens, bleu.ref_tokens
    )
    .expect("string write");
    if let Some(p) = config.path_opt("bleu_report") {
        fs::write(&p, &bleu_text).map_err(Error::io(&p))?;
    }
    println!("bleu = {:.4}", bleu.score);

    let testset = config.get("testset").unwrap_or("test").to_string();
    match config.path_opt("word_vectors") {
        Some(wv_path) => {
            let vectors = load_word_vectors(&wv_path)?;
            let model = document_coherence(&hyp_docs, &vectors);
            let reference = document_coherence(&ref_docs, &vectors);
            let fmt = |m: Option<f64>| m.map_or("NA".to_string(), |v| v.to_string());
            let mut text = format!("# seed={seed}\ntestset,system,value\n");
            writeln!(text, "{testset},model,{}", fmt(model.mean)).expect("string write");
            writeln!(text, "{testset},reference,{}", fmt(reference.mean))
                .expect("string write");
            if let Some(p) = config.path_opt("coherence_report") {
                fs::write(&p, &text).map_err(Error::io(&p))?;
            }
            println!(
                "coherence: model = {}, reference = {}",
                fmt(model.mean),
                fmt(reference.mean)
            );
        }
        None => {
            eprintln!("warning: no word_vectors configured; skipping coherence");
        }
    }

    if let Some(trace_path) = config.path_opt("trace") {
        let rows = load_trace_rows(&trace_path)?;
        let mut text = format!("# seed={seed}\nposition,label,value\n");
        let mut written = 0usize;
        for row in &rows {
            if !row.alpha_a_entropy.is_finite() {
                continue;
            }
            let label = hyp_docs
                .get(row.doc)
                .and_then(|d| d.get(row.sent))
                .and_then(|line| line.split_whitespace().nth(row.step))
                .unwrap_or(EOS_TOKEN);
            writeln!(text, "{},{label},{}", row.step, row.alpha_a_entropy)
                .expect("string write");
            written += 1;
        }
        if written > 0 {
            if let Some(p) = config.path_opt("entropy_report") {
                fs::write(&p, &text).map_err(Error::io(&p))?;
            }
            println!("entropy rows = {written}");
        } else {
            eprintln!("warning: trace has no before-x attention; skipping entropy report");
        }
    }
    Ok(())
}

/// Reads a document-structured text file: one sentence per line, documents
/// separated by `<DOC>` lines. Empty documents are dropped.
pub fn read_document_lines(path: &Path) -> Result<Vec<Vec<String>>> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    let mut docs = Vec::new();
    let mut current: Vec<String> = Vec::new();
    for line in text.lines() {
        if line.trim() == DOC_MARKER {
            if !current.is_empty() {
                docs.push(std::mem::take(&mut current));
            }
        } else {
            current.push(line.to_string());
        }
    }
    if !current.is_empty() {
        docs.push(current);
    }
    Ok(docs)
}

/// Writes sentences one per line with `<DOC>` markers between documents,
/// mirroring [`read_document_lines`].
pub fn write_document_lines(path: &Path, docs: &[Vec<String>]) -> Result<()> {
    let mut out = String::new();
    for (i, doc) in docs.iter().enumerate() {
        if i > 0 {
            out.push_str(DOC_MARKER);
            out.push('\n');
        }
        for line in doc {
            out.push_str(line);
            out.push('\n');
        }
    }
    fs::write(path, out).map_err(Error::io(path))
}
