//! Versioned binary checkpoints: a header, then a name -> (shape, row-major
//! f64 data) map. Floats are stored as little-endian bit patterns, so a
//! save/load cycle is exact to the bit.

use super::{
    AttentionParams, GruParams, IsgParams, Mode, ModeParams, ModelDims, ModelParams, OutputParams,
};
use crate::tensor::Tensor;
use crate::{Error, Result};
use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

const MAGIC: &[u8; 8] = b"ISGNMT01";

/// Header recorded with every checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckpointMeta {
    pub mode: Mode,
    pub dims: ModelDims,
    pub seed: u64,
}

/// Serializes named tensors with a header.
pub fn save_tensor_map(
    path: &Path,
    meta: &CheckpointMeta,
    entries: &[(String, &Tensor)],
) -> Result<()> {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.push(match meta.mode {
        Mode::Baseline => 0,
        Mode::Isg => 1,
    });
    for n in [
        meta.dims.src_vocab,
        meta.dims.tgt_vocab,
        meta.dims.embed,
        meta.dims.hidden,
        meta.dims.attn,
        meta.dims.max_len,
    ] {
        buf.extend_from_slice(&(n as u64).to_le_bytes());
    }
    buf.extend_from_slice(&meta.seed.to_le_bytes());
    buf.extend_from_slice(&(entries.len() as u64).to_le_bytes());
    for (name, tensor) in entries {
        let name_bytes = name.as_bytes();
        buf.extend_from_slice(&(name_bytes.len() as u32).to_le_bytes());
        buf.extend_from_slice(name_bytes);
        debug_assert_eq!(tensor.shape().len(), 2);
        buf.extend_from_slice(&(tensor.rows() as u64).to_le_bytes());
        buf.extend_from_slice(&(tensor.cols() as u64).to_le_bytes());
        for &x in tensor.data() {
            buf.extend_from_slice(&x.to_bits().to_le_bytes());
        }
    }
    let mut file = fs::File::create(path).map_err(Error::io(path))?;
    file.write_all(&buf).map_err(Error::io(path))?;
    Ok(())
}

/// Reads a checkpoint back into a name-keyed tensor map.
pub fn load_tensor_map(path: &Path) -> Result<(CheckpointMeta, BTreeMap<String, Tensor>)> {
    let bytes = fs::read(path).map_err(Error::io(path))?;
    let mut r = Reader {
        bytes: &bytes,
        pos: 0,
        path,
    };
    if r.take(8)? != MAGIC {
        return Err(Error::Checkpoint(format!(
            "{} is not a checkpoint (bad magic)",
            path.display()
        )));
    }
    let mode = match r.take(1)?[0] {
        0 => Mode::Baseline,
        1 => Mode::Isg,
        other => {
            return Err(Error::Checkpoint(format!("unknown mode byte {other}")));
        }
    };
    let mut dims = [0u64; 6];
    for d in dims.iter_mut() {
        *d = r.u64()?;
    }
    let dims = ModelDims {
        src_vocab: dims[0] as usize,
        tgt_vocab: dims[1] as usize,
        embed: dims[2] as usize,
        hidden: dims[3] as usize,
        attn: dims[4] as usize,
        max_len: dims[5] as usize,
    };
    let seed = r.u64()?;
    let count = r.u64()? as usize;
    let mut map = BTreeMap::new();
    for _ in 0..count {
        let name_len = r.u32()? as usize;
        let name = String::from_utf8(r.take(name_len)?.to_vec())
            .map_err(|e| Error::Checkpoint(format!("bad tensor name: {e}")))?;
        let rows = r.u64()? as usize;
        let cols = r.u64()? as usize;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            data.push(f64::from_bits(r.u64()?));
        }
        map.insert(name, Tensor::matrix(rows, cols, data)?);
    }
    Ok((CheckpointMeta { mode, dims, seed }, map))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Checkpoint(format!(
                "{} truncated at byte {}",
                self.path.display(),
                self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

impl ModelParams {
    pub fn save(&self, path: &Path, seed: u64) -> Result<()> {
        let meta = CheckpointMeta {
            mode: self.mode(),
            dims: self.dims,
            seed,
        };
        save_tensor_map(path, &meta, &self.named())
    }

    pub fn load_checkpoint(path: &Path) -> Result<(Self, CheckpointMeta)> {
        let (meta, mut map) = load_tensor_map(path)?;
        let mut take = |name: &str| -> Result<Tensor> {
            map.remove(name)
                .ok_or_else(|| Error::Checkpoint(format!("missing tensor {name:?}")))
        };
        let take_gru = |take: &mut dyn FnMut(&str) -> Result<Tensor>,
                        prefix: &str|
         -> Result<GruParams> {
            Ok(GruParams {
                input_gates: take(&format!("{prefix}.input_gates"))?,
                state_gates: take(&format!("{prefix}.state_gates"))?,
                gate_bias: take(&format!("{prefix}.gate_bias"))?,
                input_cand: take(&format!("{prefix}.input_cand"))?,
                state_cand: take(&format!("{prefix}.state_cand"))?,
                cand_bias: take(&format!("{prefix}.cand_bias"))?,
            })
        };
        let params = ModelParams {
            dims: meta.dims,
            emb_src: take("emb_src")?,
            emb_tgt: take("emb_tgt")?,
            enc_fwd: take_gru(&mut take, "enc_fwd")?,
            enc_bwd: take_gru(&mut take, "enc_bwd")?,
            dec_init: take("dec_init")?,
            feedback: take_gru(&mut take, "feedback")?,
            decoder: take_gru(&mut take, "decoder")?,
            attention: AttentionParams {
                query: take("attention.query")?,
                annot: take("attention.annot")?,
                score: take("attention.score")?,
            },
            out: OutputParams {
                state: take("out.state")?,
                emb: take("out.emb")?,
                ctx: take("out.ctx")?,
                bias: take("out.bias")?,
            },
            mode: match meta.mode {
                Mode::Baseline => ModeParams::Baseline {
                    ctx: take("ctx_proj")?,
                },
                Mode::Isg => ModeParams::Isg(IsgParams {
                    gate_state: take("gate.state")?,
                    gate_emb: take("gate.emb")?,
                    gate_ctx_b: take("gate.ctx_b")?,
                    gate_ctx_a: take("gate.ctx_a")?,
                    ctx_a: take("ctx_a")?,
                    ctx_b: take("ctx_b")?,
                }),
            },
        };
        params.validate_shapes()?;
        if !map.is_empty() {
            let extra: Vec<&String> = map.keys().collect();
            return Err(Error::Checkpoint(format!(
                "unexpected tensors in checkpoint: {extra:?}"
            )));
        }
        Ok((params, meta))
    }

    /// Every matrix shape must be consistent with the recorded dimensions.
    pub fn validate_shapes(&self) -> Result<()> {
        let d = &self.dims;
        let expect = |name: &str, t: &Tensor, rows: usize, cols: usize| -> Result<()> {
            if t.rows() != rows || t.cols() != cols {
                return Err(Error::Checkpoint(format!(
                    "{name}: expected [{rows}x{cols}], found [{}x{}]",
                    t.rows(),
                    t.cols()
                )));
            }
            Ok(())
        };
        let gru = |prefix: &str, g: &GruParams, d_in: usize| -> Result<()> {
            expect(prefix, &g.input_gates, d_in, 2 * d.hidden)?;
            expect(prefix, &g.state_gates, d.hidden, 2 * d.hidden)?;
            expect(prefix, &g.gate_bias, 1, 2 * d.hidden)?;
            expect(prefix, &g.input_cand, d_in, d.hidden)?;
            expect(prefix, &g.state_cand, d.hidden, d.hidden)?;
            expect(prefix, &g.cand_bias, 1, d.hidden)
        };
        expect("emb_src", &self.emb_src, d.src_vocab, d.embed)?;
        expect("emb_tgt", &self.emb_tgt, d.tgt_vocab, d.embed)?;
        gru("enc_fwd", &self.enc_fwd, d.embed)?;
        gru("enc_bwd", &self.enc_bwd, d.embed)?;
        expect("dec_init", &self.dec_init, d.hidden, d.hidden)?;
        gru("feedback", &self.feedback, d.embed)?;
        gru("decoder", &self.decoder, d.embed + d.hidden)?;
        expect("attention.query", &self.attention.query, d.hidden, d.attn)?;
        expect("attention.annot", &self.attention.annot, 2 * d.hidden, d.attn)?;
        expect("attention.score", &self.attention.score, d.attn, 1)?;
        expect("out.state", &self.out.state, d.hidden, d.tgt_vocab)?;
        expect("out.emb", &self.out.emb, d.embed, d.tgt_vocab)?;
        expect("out.ctx", &self.out.ctx, 2 * d.hidden, d.tgt_vocab)?;
        expect("out.bias", &self.out.bias, 1, d.tgt_vocab)?;
        match &self.mode {
            ModeParams::Baseline { ctx } => expect("ctx_proj", ctx, 2 * d.hidden, d.hidden),
            ModeParams::Isg(p) => {
                expect("gate.state", &p.gate_state, d.hidden, d.hidden)?;
                expect("gate.emb", &p.gate_emb, d.embed, d.hidden)?;
                expect("gate.ctx_b", &p.gate_ctx_b, 2 * d.hidden, d.hidden)?;
                expect("gate.ctx_a", &p.gate_ctx_a, 2 * d.hidden, d.hidden)?;
                expect("ctx_a", &p.ctx_a, 2 * d.hidden, d.hidden)?;
                expect("ctx_b", &p.ctx_b, 2 * d.hidden, d.hidden)
            }
        }
    }
}
