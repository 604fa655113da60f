use super::{clip_global_norm, AdadeltaState, TrainConfig};
use crate::data::{make_batches, SentenceTuple};
use crate::model::{
    sentence_nll, sentence_nll_graph, Dropout, IsgParams, ModeParams, ModelDims,
    ModelParams, StepOverrides,
};
use crate::rng::{child_seed, child_seed_indexed, rng_from_seed};
use crate::tensor::{Tape, Tensor};
use crate::{Error, Result};
use std::time::Instant;

/// One line of the training log.
#[derive(Debug, Clone)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean negative log-likelihood per target token (end token included).
    pub mean_nll: f64,
    pub dev_nll: Option<f64>,
    pub wall_s: f64,
}

/// What a training run produces.
#[derive(Debug)]
pub struct TrainOutcome {
    /// Parameters after the last epoch.
    pub params: ModelParams,
    /// Parameters at the best dev loss (equal to `params` without a dev set).
    pub best: ModelParams,
    pub best_epoch: usize,
    pub history: Vec<EpochStats>,
    pub optimizer: AdadeltaState,
}

/// Minibatch Adadelta training. `init` continues from existing parameters
/// (mode must match the config); otherwise parameters are freshly seeded.
/// `on_epoch` runs after every epoch, for logging and checkpoint cadence.
pub fn train(
    config: &TrainConfig,
    dims: ModelDims,
    tuples: &[SentenceTuple],
    dev: Option<&[SentenceTuple]>,
    init: Option<ModelParams>,
    mut on_epoch: impl FnMut(&ModelParams, &AdadeltaState, &EpochStats) -> Result<()>,
) -> Result<TrainOutcome> {
    if tuples.is_empty() {
        return Err(Error::Train("no training tuples".into()));
    }
    let mut params = match init {
        Some(p) => {
            if p.mode() != config.mode {
                return Err(Error::Train(format!(
                    "initial parameters are {} but config wants {}",
                    p.mode().as_str(),
                    config.mode.as_str()
                )));
            }
            p.validate_shapes()?;
            p
        }
        None => ModelParams::init(dims, config.mode, config.seed),
    };
    let mut optimizer = AdadeltaState::new(&params, config.rho, config.eps);
    let mut dropout_rng = rng_from_seed(child_seed(config.seed, "dropout"));

    let mut history = Vec::new();
    let mut best = params.clone();
    let mut best_epoch = 0;
    let mut best_dev = f64::INFINITY;

    for epoch in 0..config.max_epochs {
        let started = Instant::now();
        let shuffle_seed = child_seed_indexed(config.seed, "shuffle", epoch as u64);
        let batches = make_batches(tuples, config.batch_size, shuffle_seed);

        let mut loss_sum = 0.0;
        let mut token_count = 0usize;
        for (bi, batch) in batches.iter().enumerate() {
            let mut tape = Tape::new();
            let pv = params.load(&mut tape);
            let mut total = None;
            for i in 0..batch.len() {
                let item = batch.item(i);
                let mut dropout = Dropout {
                    rng: &mut dropout_rng,
                    rate: config.dropout,
                };
                let use_dropout = config.dropout > 0.0;
                let (loss, _) = sentence_nll_graph(
                    &mut tape,
                    &pv,
                    &item,
                    if use_dropout { Some(&mut dropout) } else { None },
                    &StepOverrides::default(),
                )?;
                token_count += item.y.len() + 1;
                total = Some(match total {
                    Some(acc) => tape.add(acc, loss)?,
                    None => loss,
                });
            }
            let total = total.expect("non-empty batch");
            let batch_loss = tape.scalar(total);
            if !batch_loss.is_finite() {
                return Err(Error::Train(format!(
                    "non-finite loss {batch_loss} in epoch {epoch}, batch {bi}"
                )));
            }
            loss_sum += batch_loss;

            tape.backward(total)?;
            let inv_batch = 1.0 / batch.len() as f64;
            let mut grads: Vec<(String, Tensor)> = pv
                .named()
                .into_iter()
                .map(|(name, v)| {
                    let mut g = tape.grad_tensor(v).expect("backward has run");
                    for x in g.data_mut() {
                        *x *= inv_batch;
                    }
                    (name, g)
                })
                .collect();
            clip_global_norm(&mut grads, config.clip_norm);
            optimizer.step(&mut params, &grads)?;
        }

        let mean_nll = loss_sum / token_count as f64;
        let dev_nll = match dev {
            Some(dev_tuples) => Some(mean_token_nll(&params, dev_tuples)?),
            None => None,
        };
        if let Some(d) = dev_nll {
            if d < best_dev {
                best_dev = d;
                best = params.clone();
                best_epoch = epoch;
            }
        }
        let stats = EpochStats {
            epoch,
            mean_nll,
            dev_nll,
            wall_s: started.elapsed().as_secs_f64(),
        };
        on_epoch(&params, &optimizer, &stats)?;
        history.push(stats);
    }

    if dev.is_none() {
        best = params.clone();
        best_epoch = config.max_epochs.saturating_sub(1);
    }
    Ok(TrainOutcome {
        params,
        best,
        best_epoch,
        history,
        optimizer,
    })
}

/// Mean per-token negative log-likelihood over a tuple set, without dropout.
pub fn mean_token_nll(params: &ModelParams, tuples: &[SentenceTuple]) -> Result<f64> {
    if tuples.is_empty() {
        return Err(Error::Train("no tuples to evaluate".into()));
    }
    let mut sum = 0.0;
    let mut tokens = 0usize;
    for t in tuples {
        let (loss, _) = sentence_nll(params, t, None)?;
        sum += loss;
        tokens += t.y.len() + 1;
    }
    Ok(sum / tokens as f64)
}

/// Initializes a gated model from a trained baseline: every shared weight is
/// copied bit-exactly, the current-sentence context projection seeds `C2`,
/// and the gate weights plus `C1` are freshly drawn.
pub fn pretrain_init(baseline: &ModelParams, seed: u64) -> Result<ModelParams> {
    let ctx = match &baseline.mode {
        ModeParams::Baseline { ctx } => ctx.clone(),
        ModeParams::Isg(_) => {
            return Err(Error::Train(
                "pretrain_init needs a baseline checkpoint, found a gated one".into(),
            ))
        }
    };
    let mut rng = rng_from_seed(child_seed(seed, "gate-init"));
    let fresh = IsgParams::init(&mut rng, &baseline.dims);
    let mut params = baseline.clone();
    params.mode = ModeParams::Isg(IsgParams {
        ctx_b: ctx,
        ..fresh
    });
    params.validate_shapes()?;
    Ok(params)
}
