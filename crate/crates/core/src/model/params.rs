use crate::rng::{child_seed, rng_from_seed, Rng};
use crate::tensor::{Tape, Tensor, Value};
use crate::{Error, Result};
use rand::Rng as _;

/// Which decoder the parameters drive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Baseline,
    Isg,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Baseline => "baseline",
            Mode::Isg => "isg",
        }
    }

    pub fn parse(s: &str) -> Result<Mode> {
        match s {
            "baseline" => Ok(Mode::Baseline),
            "isg" => Ok(Mode::Isg),
            other => Err(Error::Config(format!(
                "unknown mode {other:?}, expected baseline or isg"
            ))),
        }
    }
}

/// Model dimensions, fixed at initialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    pub src_vocab: usize,
    pub tgt_vocab: usize,
    pub embed: usize,
    pub hidden: usize,
    /// Width of the attention scorer's hidden layer.
    pub attn: usize,
    /// Longest source sentence the encoder accepts.
    pub max_len: usize,
}

/// One GRU cell's weights. The two gates (update, then reset) are stacked
/// in the `*_gates` matrices along the output axis.
#[derive(Debug, Clone, PartialEq)]
pub struct GruParams {
    pub input_gates: Tensor, // [d_in, 2*hidden]
    pub state_gates: Tensor, // [hidden, 2*hidden]
    pub gate_bias: Tensor,   // [1, 2*hidden]
    pub input_cand: Tensor,  // [d_in, hidden]
    pub state_cand: Tensor,  // [hidden, hidden]
    pub cand_bias: Tensor,   // [1, hidden]
}

impl GruParams {
    fn init(rng: &mut Rng, d_in: usize, hidden: usize) -> Self {
        GruParams {
            input_gates: glorot(rng, d_in, 2 * hidden),
            state_gates: glorot(rng, hidden, 2 * hidden),
            gate_bias: Tensor::zeros(vec![1, 2 * hidden]),
            input_cand: glorot(rng, d_in, hidden),
            state_cand: glorot(rng, hidden, hidden),
            cand_bias: Tensor::zeros(vec![1, hidden]),
        }
    }

    pub fn zeros(d_in: usize, hidden: usize) -> Self {
        GruParams {
            input_gates: Tensor::zeros(vec![d_in, 2 * hidden]),
            state_gates: Tensor::zeros(vec![hidden, 2 * hidden]),
            gate_bias: Tensor::zeros(vec![1, 2 * hidden]),
            input_cand: Tensor::zeros(vec![d_in, hidden]),
            state_cand: Tensor::zeros(vec![hidden, hidden]),
            cand_bias: Tensor::zeros(vec![1, hidden]),
        }
    }

    pub fn load(&self, tape: &mut Tape) -> GruValues {
        GruValues {
            input_gates: tape.leaf(&self.input_gates),
            state_gates: tape.leaf(&self.state_gates),
            gate_bias: tape.leaf(&self.gate_bias),
            input_cand: tape.leaf(&self.input_cand),
            state_cand: tape.leaf(&self.state_cand),
            cand_bias: tape.leaf(&self.cand_bias),
        }
    }
}

/// GRU weights loaded onto a tape.
#[derive(Debug, Clone, Copy)]
pub struct GruValues {
    pub input_gates: Value,
    pub state_gates: Value,
    pub gate_bias: Value,
    pub input_cand: Value,
    pub state_cand: Value,
    pub cand_bias: Value,
}

/// The attention scorer: a single-hidden-layer feedforward network over
/// (query state, annotation row) pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    pub query: Tensor, // [hidden, attn]
    pub annot: Tensor, // [2*hidden, attn]
    pub score: Tensor, // [attn, 1]
}

impl AttentionParams {
    fn init(rng: &mut Rng, hidden: usize, attn: usize) -> Self {
        AttentionParams {
            query: glorot(rng, hidden, attn),
            annot: glorot(rng, 2 * hidden, attn),
            score: glorot(rng, attn, 1),
        }
    }

    pub fn load(&self, tape: &mut Tape) -> AttentionValues {
        AttentionValues {
            query: tape.leaf(&self.query),
            annot: tape.leaf(&self.annot),
            score: tape.leaf(&self.score),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AttentionValues {
    pub query: Value,
    pub annot: Value,
    pub score: Value,
}

/// Output layer: affine in (state, previous-word embedding, context),
/// then softmax over the target vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputParams {
    pub state: Tensor, // [hidden, tgt_vocab]
    pub emb: Tensor,   // [embed, tgt_vocab]
    pub ctx: Tensor,   // [2*hidden, tgt_vocab]
    pub bias: Tensor,  // [1, tgt_vocab]
}

impl OutputParams {
    fn init(rng: &mut Rng, dims: &ModelDims) -> Self {
        OutputParams {
            state: glorot(rng, dims.hidden, dims.tgt_vocab),
            emb: glorot(rng, dims.embed, dims.tgt_vocab),
            ctx: glorot(rng, 2 * dims.hidden, dims.tgt_vocab),
            bias: Tensor::zeros(vec![1, dims.tgt_vocab]),
        }
    }

    pub fn load(&self, tape: &mut Tape) -> OutputValues {
        OutputValues {
            state: tape.leaf(&self.state),
            emb: tape.leaf(&self.emb),
            ctx: tape.leaf(&self.ctx),
            bias: tape.leaf(&self.bias),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OutputValues {
    pub state: Value,
    pub emb: Value,
    pub ctx: Value,
    pub bias: Value,
}

/// Weights specific to the inter-sentence gate decoder: the gate's four
/// input projections and the two context projections it mixes.
#[derive(Debug, Clone, PartialEq)]
pub struct IsgParams {
    pub gate_state: Tensor, // [hidden, hidden]
    pub gate_emb: Tensor,   // [embed, hidden]
    pub gate_ctx_b: Tensor, // [2*hidden, hidden]
    pub gate_ctx_a: Tensor, // [2*hidden, hidden]
    pub ctx_a: Tensor,      // [2*hidden, hidden]
    pub ctx_b: Tensor,      // [2*hidden, hidden]
}

impl IsgParams {
    pub fn init(rng: &mut Rng, dims: &ModelDims) -> Self {
        IsgParams {
            gate_state: glorot(rng, dims.hidden, dims.hidden),
            gate_emb: glorot(rng, dims.embed, dims.hidden),
            gate_ctx_b: glorot(rng, 2 * dims.hidden, dims.hidden),
            gate_ctx_a: glorot(rng, 2 * dims.hidden, dims.hidden),
            ctx_a: glorot(rng, 2 * dims.hidden, dims.hidden),
            ctx_b: glorot(rng, 2 * dims.hidden, dims.hidden),
        }
    }

    pub fn load(&self, tape: &mut Tape) -> IsgValues {
        IsgValues {
            gate_state: tape.leaf(&self.gate_state),
            gate_emb: tape.leaf(&self.gate_emb),
            gate_ctx_b: tape.leaf(&self.gate_ctx_b),
            gate_ctx_a: tape.leaf(&self.gate_ctx_a),
            ctx_a: tape.leaf(&self.ctx_a),
            ctx_b: tape.leaf(&self.ctx_b),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IsgValues {
    pub gate_state: Value,
    pub gate_emb: Value,
    pub gate_ctx_b: Value,
    pub gate_ctx_a: Value,
    pub ctx_a: Value,
    pub ctx_b: Value,
}

/// Mode-specific parameters: the baseline projects its single context into
/// the decoder input; the gated decoder replaces that with two projections
/// mixed by the gate.
#[derive(Debug, Clone, PartialEq)]
pub enum ModeParams {
    Baseline {
        ctx: Tensor, // [2*hidden, hidden]
    },
    Isg(IsgParams),
}

#[derive(Debug, Clone, Copy)]
pub enum ModeValues {
    Baseline { ctx: Value },
    Isg(IsgValues),
}

/// Every learned weight of one model instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub dims: ModelDims,
    pub emb_src: Tensor, // [src_vocab, embed]
    pub emb_tgt: Tensor, // [tgt_vocab, embed]
    pub enc_fwd: GruParams,
    pub enc_bwd: GruParams,
    pub dec_init: Tensor, // [hidden, hidden]
    pub feedback: GruParams,
    pub decoder: GruParams, // input is [embed | fused context]
    pub attention: AttentionParams,
    pub out: OutputParams,
    pub mode: ModeParams,
}

impl ModelParams {
    /// Fresh parameters: matrices uniform in ±sqrt(6 / (fan_in + fan_out)),
    /// biases zero. Draw order is fixed by field order, so a seed pins every
    /// weight.
    pub fn init(dims: ModelDims, mode: Mode, seed: u64) -> Self {
        let mut rng = rng_from_seed(child_seed(seed, "param-init"));
        let r = &mut rng;
        ModelParams {
            dims,
            emb_src: glorot(r, dims.src_vocab, dims.embed),
            emb_tgt: glorot(r, dims.tgt_vocab, dims.embed),
            enc_fwd: GruParams::init(r, dims.embed, dims.hidden),
            enc_bwd: GruParams::init(r, dims.embed, dims.hidden),
            dec_init: glorot(r, dims.hidden, dims.hidden),
            feedback: GruParams::init(r, dims.embed, dims.hidden),
            decoder: GruParams::init(r, dims.embed + dims.hidden, dims.hidden),
            attention: AttentionParams::init(r, dims.hidden, dims.attn),
            out: OutputParams::init(r, &dims),
            mode: match mode {
                Mode::Baseline => ModeParams::Baseline {
                    ctx: glorot(r, 2 * dims.hidden, dims.hidden),
                },
                Mode::Isg => ModeParams::Isg(IsgParams::init(r, &dims)),
            },
        }
    }

    pub fn mode(&self) -> Mode {
        match self.mode {
            ModeParams::Baseline { .. } => Mode::Baseline,
            ModeParams::Isg(_) => Mode::Isg,
        }
    }

    /// Copies all weights onto a tape as leaves for one forward/backward.
    pub fn load(&self, tape: &mut Tape) -> ParamValues {
        ParamValues {
            dims: self.dims,
            emb_src: tape.leaf(&self.emb_src),
            emb_tgt: tape.leaf(&self.emb_tgt),
            enc_fwd: self.enc_fwd.load(tape),
            enc_bwd: self.enc_bwd.load(tape),
            dec_init: tape.leaf(&self.dec_init),
            feedback: self.feedback.load(tape),
            decoder: self.decoder.load(tape),
            attention: self.attention.load(tape),
            out: self.out.load(tape),
            mode: match &self.mode {
                ModeParams::Baseline { ctx } => ModeValues::Baseline {
                    ctx: tape.leaf(ctx),
                },
                ModeParams::Isg(p) => ModeValues::Isg(p.load(tape)),
            },
        }
    }

    /// All tensors with their checkpoint names, in a fixed order.
    pub fn named(&self) -> Vec<(String, &Tensor)> {
        let mut out: Vec<(String, &Tensor)> = Vec::new();
        out.push(("emb_src".into(), &self.emb_src));
        out.push(("emb_tgt".into(), &self.emb_tgt));
        named_gru(&mut out, "enc_fwd", &self.enc_fwd);
        named_gru(&mut out, "enc_bwd", &self.enc_bwd);
        out.push(("dec_init".into(), &self.dec_init));
        named_gru(&mut out, "feedback", &self.feedback);
        named_gru(&mut out, "decoder", &self.decoder);
        out.push(("attention.query".into(), &self.attention.query));
        out.push(("attention.annot".into(), &self.attention.annot));
        out.push(("attention.score".into(), &self.attention.score));
        out.push(("out.state".into(), &self.out.state));
        out.push(("out.emb".into(), &self.out.emb));
        out.push(("out.ctx".into(), &self.out.ctx));
        out.push(("out.bias".into(), &self.out.bias));
        match &self.mode {
            ModeParams::Baseline { ctx } => out.push(("ctx_proj".into(), ctx)),
            ModeParams::Isg(p) => {
                out.push(("gate.state".into(), &p.gate_state));
                out.push(("gate.emb".into(), &p.gate_emb));
                out.push(("gate.ctx_b".into(), &p.gate_ctx_b));
                out.push(("gate.ctx_a".into(), &p.gate_ctx_a));
                out.push(("ctx_a".into(), &p.ctx_a));
                out.push(("ctx_b".into(), &p.ctx_b));
            }
        }
        out
    }

    /// Assembles a [`ParamValues`] over externally created leaves given in
    /// [`named`] order. Used by gradient checks, which perturb raw tensors
    /// and need the model graph rebuilt over them.
    ///
    /// [`named`]: ModelParams::named
    pub fn values_from_leaves(&self, leaves: &[Value]) -> ParamValues {
        let names: Vec<String> = self.named().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names.len(), leaves.len(), "leaf count mismatch");
        let by_name: std::collections::HashMap<&str, Value> = names
            .iter()
            .map(String::as_str)
            .zip(leaves.iter().copied())
            .collect();
        let v = |n: &str| by_name[n];
        let gru = |prefix: &str| GruValues {
            input_gates: v(&format!("{prefix}.input_gates")),
            state_gates: v(&format!("{prefix}.state_gates")),
            gate_bias: v(&format!("{prefix}.gate_bias")),
            input_cand: v(&format!("{prefix}.input_cand")),
            state_cand: v(&format!("{prefix}.state_cand")),
            cand_bias: v(&format!("{prefix}.cand_bias")),
        };
        ParamValues {
            dims: self.dims,
            emb_src: v("emb_src"),
            emb_tgt: v("emb_tgt"),
            enc_fwd: gru("enc_fwd"),
            enc_bwd: gru("enc_bwd"),
            dec_init: v("dec_init"),
            feedback: gru("feedback"),
            decoder: gru("decoder"),
            attention: AttentionValues {
                query: v("attention.query"),
                annot: v("attention.annot"),
                score: v("attention.score"),
            },
            out: OutputValues {
                state: v("out.state"),
                emb: v("out.emb"),
                ctx: v("out.ctx"),
                bias: v("out.bias"),
            },
            mode: match self.mode() {
                Mode::Baseline => ModeValues::Baseline { ctx: v("ctx_proj") },
                Mode::Isg => ModeValues::Isg(IsgValues {
                    gate_state: v("gate.state"),
                    gate_emb: v("gate.emb"),
                    gate_ctx_b: v("gate.ctx_b"),
                    gate_ctx_a: v("gate.ctx_a"),
                    ctx_a: v("ctx_a"),
                    ctx_b: v("ctx_b"),
                }),
            },
        }
    }

    /// Mutable view over the same tensors, in the same order as [`named`].
    ///
    /// [`named`]: ModelParams::named
    pub fn named_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out: Vec<(String, &mut Tensor)> = Vec::new();
        out.push(("emb_src".into(), &mut self.emb_src));
        out.push(("emb_tgt".into(), &mut self.emb_tgt));
        named_gru_mut(&mut out, "enc_fwd", &mut self.enc_fwd);
        named_gru_mut(&mut out, "enc_bwd", &mut self.enc_bwd);
        out.push(("dec_init".into(), &mut self.dec_init));
        named_gru_mut(&mut out, "feedback", &mut self.feedback);
        named_gru_mut(&mut out, "decoder", &mut self.decoder);
        out.push(("attention.query".into(), &mut self.attention.query));
        out.push(("attention.annot".into(), &mut self.attention.annot));
        out.push(("attention.score".into(), &mut self.attention.score));
        out.push(("out.state".into(), &mut self.out.state));
        out.push(("out.emb".into(), &mut self.out.emb));
        out.push(("out.ctx".into(), &mut self.out.ctx));
        out.push(("out.bias".into(), &mut self.out.bias));
        match &mut self.mode {
            ModeParams::Baseline { ctx } => out.push(("ctx_proj".into(), ctx)),
            ModeParams::Isg(p) => {
                out.push(("gate.state".into(), &mut p.gate_state));
                out.push(("gate.emb".into(), &mut p.gate_emb));
                out.push(("gate.ctx_b".into(), &mut p.gate_ctx_b));
                out.push(("gate.ctx_a".into(), &mut p.gate_ctx_a));
                out.push(("ctx_a".into(), &mut p.ctx_a));
                out.push(("ctx_b".into(), &mut p.ctx_b));
            }
        }
        out
    }
}

/// Parameter leaves on a tape, mirroring [`ModelParams`].
#[derive(Debug, Clone, Copy)]
pub struct ParamValues {
    pub dims: ModelDims,
    pub emb_src: Value,
    pub emb_tgt: Value,
    pub enc_fwd: GruValues,
    pub enc_bwd: GruValues,
    pub dec_init: Value,
    pub feedback: GruValues,
    pub decoder: GruValues,
    pub attention: AttentionValues,
    pub out: OutputValues,
    pub mode: ModeValues,
}

impl ParamValues {
    pub fn mode(&self) -> Mode {
        match self.mode {
            ModeValues::Baseline { .. } => Mode::Baseline,
            ModeValues::Isg(_) => Mode::Isg,
        }
    }

    /// Leaf values in the same order as [`ModelParams::named`].
    pub fn named(&self) -> Vec<(String, Value)> {
        let mut out: Vec<(String, Value)> = Vec::new();
        let gru = |out: &mut Vec<(String, Value)>, prefix: &str, g: &GruValues| {
            out.push((format!("{prefix}.input_gates"), g.input_gates));
            out.push((format!("{prefix}.state_gates"), g.state_gates));
            out.push((format!("{prefix}.gate_bias"), g.gate_bias));
            out.push((format!("{prefix}.input_cand"), g.input_cand));
            out.push((format!("{prefix}.state_cand"), g.state_cand));
            out.push((format!("{prefix}.cand_bias"), g.cand_bias));
        };
        out.push(("emb_src".into(), self.emb_src));
        out.push(("emb_tgt".into(), self.emb_tgt));
        gru(&mut out, "enc_fwd", &self.enc_fwd);
        gru(&mut out, "enc_bwd", &self.enc_bwd);
        out.push(("dec_init".into(), self.dec_init));
        gru(&mut out, "feedback", &self.feedback);
        gru(&mut out, "decoder", &self.decoder);
        out.push(("attention.query".into(), self.attention.query));
        out.push(("attention.annot".into(), self.attention.annot));
        out.push(("attention.score".into(), self.attention.score));
        out.push(("out.state".into(), self.out.state));
        out.push(("out.emb".into(), self.out.emb));
        out.push(("out.ctx".into(), self.out.ctx));
        out.push(("out.bias".into(), self.out.bias));
        match &self.mode {
            ModeValues::Baseline { ctx } => out.push(("ctx_proj".into(), *ctx)),
            ModeValues::Isg(p) => {
                out.push(("gate.state".into(), p.gate_state));
                out.push(("gate.emb".into(), p.gate_emb));
                out.push(("gate.ctx_b".into(), p.gate_ctx_b));
                out.push(("gate.ctx_a".into(), p.gate_ctx_a));
                out.push(("ctx_a".into(), p.ctx_a));
                out.push(("ctx_b".into(), p.ctx_b));
            }
        }
        out
    }
}

fn named_gru<'a>(out: &mut Vec<(String, &'a Tensor)>, prefix: &str, g: &'a GruParams) {
    out.push((format!("{prefix}.input_gates"), &g.input_gates));
    out.push((format!("{prefix}.state_gates"), &g.state_gates));
    out.push((format!("{prefix}.gate_bias"), &g.gate_bias));
    out.push((format!("{prefix}.input_cand"), &g.input_cand));
    out.push((format!("{prefix}.state_cand"), &g.state_cand));
    out.push((format!("{prefix}.cand_bias"), &g.cand_bias));
}

fn named_gru_mut<'a>(out: &mut Vec<(String, &'a mut Tensor)>, prefix: &str, g: &'a mut GruParams) {
    out.push((format!("{prefix}.input_gates"), &mut g.input_gates));
    out.push((format!("{prefix}.state_gates"), &mut g.state_gates));
    out.push((format!("{prefix}.gate_bias"), &mut g.gate_bias));
    out.push((format!("{prefix}.input_cand"), &mut g.input_cand));
    out.push((format!("{prefix}.state_cand"), &mut g.state_cand));
    out.push((format!("{prefix}.cand_bias"), &mut g.cand_bias));
}

fn glorot(rng: &mut Rng, rows: usize, cols: usize) -> Tensor {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-bound..bound))
        .collect();
    Tensor::matrix(rows, cols, data).expect("consistent shape")
}
