use crate::model::{Mode, ModelDims, ModelParams};
use crate::model::checkpoint::{load_tensor_map, save_tensor_map, CheckpointMeta};
use crate::tensor::Tensor;
use crate::{Error, Result};
use std::path::Path;

/// The Adadelta update rule on one parameter buffer:
///
/// ```text
/// E[g^2]  <- rho E[g^2] + (1 - rho) g^2
/// delta   =  -(sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps)) g
/// E[dx^2] <- rho E[dx^2] + (1 - rho) delta^2
/// param   <- param + delta
/// ```
pub fn adadelta_update(
    eg2: &mut [f64],
    ex2: &mut [f64],
    param: &mut [f64],
    grad: &[f64],
    rho: f64,
    eps: f64,
) {
    for i in 0..param.len() {
        let g = grad[i];
        eg2[i] = rho * eg2[i] + (1.0 - rho) * g * g;
        let delta = -((ex2[i] + eps).sqrt() / (eg2[i] + eps).sqrt()) * g;
        ex2[i] = rho * ex2[i] + (1.0 - rho) * delta * delta;
        param[i] += delta;
    }
}

/// Scales all gradients so their joint euclidean norm does not exceed
/// `max_norm`. Returns the pre-clip norm.
pub fn clip_global_norm(grads: &mut [(String, Tensor)], max_norm: f64) -> f64 {
    let sq: f64 = grads
        .iter()
        .flat_map(|(_, g)| g.data().iter())
        .map(|x| x * x)
        .sum();
    let norm = sq.sqrt();
    if norm > max_norm {
        let scale = max_norm / norm;
        for (_, g) in grads.iter_mut() {
            for x in g.data_mut() {
                *x *= scale;
            }
        }
    }
    norm
}

/// Per-parameter squared-gradient and squared-update accumulators, kept in
/// the model's fixed parameter order.
#[derive(Debug, Clone)]
pub struct AdadeltaState {
    pub rho: f64,
    pub eps: f64,
    slots: Vec<(String, Tensor, Tensor)>, // name, E[g^2], E[dx^2]
}

impl AdadeltaState {
    pub fn new(params: &ModelParams, rho: f64, eps: f64) -> Self {
        let slots = params
            .named()
            .into_iter()
            .map(|(name, t)| {
                let z = Tensor::zeros(t.shape().to_vec());
                (name, z.clone(), z)
            })
            .collect();
        AdadeltaState { rho, eps, slots }
    }

    /// Applies one Adadelta step to every parameter. `grads` must be in the
    /// model's named order with matching shapes.
    pub fn step(&mut self, params: &mut ModelParams, grads: &[(String, Tensor)]) -> Result<()> {
        let mut named = params.named_mut();
        if named.len() != grads.len() || named.len() != self.slots.len() {
            return Err(Error::Train(format!(
                "parameter count mismatch: {} params, {} grads, {} optimizer slots",
                named.len(),
                grads.len(),
                self.slots.len()
            )));
        }
        for (((name, param), (gname, grad)), (sname, eg2, ex2)) in
            named.iter_mut().zip(grads).zip(self.slots.iter_mut())
        {
            if name != gname || name != sname {
                return Err(Error::Train(format!(
                    "parameter order mismatch: {name} vs {gname} vs {sname}"
                )));
            }
            if param.shape() != grad.shape() {
                return Err(Error::Shape(format!(
                    "{name}: param {:?} vs grad {:?}",
                    param.shape(),
                    grad.shape()
                )));
            }
            adadelta_update(
                eg2.data_mut(),
                ex2.data_mut(),
                param.data_mut(),
                grad.data(),
                self.rho,
                self.eps,
            );
        }
        Ok(())
    }

    /// Persists accumulators next to a model checkpoint for exact resume.
    pub fn save(&self, path: &Path, dims: ModelDims, mode: Mode, seed: u64) -> Result<()> {
        let meta = CheckpointMeta { mode, dims, seed };
        let mut entries: Vec<(String, &Tensor)> = Vec::with_capacity(self.slots.len() * 2);
        for (name, eg2, ex2) in &self.slots {
            entries.push((format!("{name}#eg2"), eg2));
            entries.push((format!("{name}#ex2"), ex2));
        }
        save_tensor_map(path, &meta, &entries)
    }

    pub fn load(path: &Path, params: &ModelParams, rho: f64, eps: f64) -> Result<Self> {
        let (_, mut map) = load_tensor_map(path)?;
        let mut slots = Vec::new();
        for (name, t) in params.named() {
            let eg2 = map
                .remove(&format!("{name}#eg2"))
                .ok_or_else(|| Error::Checkpoint(format!("missing accumulator {name}#eg2")))?;
            let ex2 = map
                .remove(&format!("{name}#ex2"))
                .ok_or_else(|| Error::Checkpoint(format!("missing accumulator {name}#ex2")))?;
            if eg2.shape() != t.shape() || ex2.shape() != t.shape() {
                return Err(Error::Checkpoint(format!(
                    "accumulator shape mismatch for {name}"
                )));
            }
            slots.push((name, eg2, ex2));
        }
        Ok(AdadeltaState { rho, eps, slots })
    }
}
