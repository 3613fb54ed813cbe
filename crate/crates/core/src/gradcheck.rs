//! Central finite-difference check of [`backward`] against [`forward`].

use crate::corpus::IdGrid;
use crate::model::{
    backward, forward, loss_and_accuracy, tensor_specs, LstmState, Mode, ModelError, ModelParams,
};
use crate::numerics::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct TensorCheck {
    pub name: String,
    /// `|a - n| / (|a| + |n|)` over the whole tensor, Euclidean norms.
    pub rel_error: f64,
    pub max_abs_error: f64,
    pub analytic_norm: f64,
}

/// Everything needed to evaluate one loss value.
#[derive(Debug, Clone)]
pub struct Problem {
    pub inputs: IdGrid,
    pub targets: IdGrid,
    pub state: LstmState,
    pub mode: Mode,
    /// Forward passes reuse this rng from a clone, so dropout masks are
    /// identical across every evaluation.
    pub rng: Rng,
}

impl Problem {
    pub fn loss(&self, params: &ModelParams) -> Result<f64, ModelError> {
        let out = forward(params, &self.inputs, &self.state, self.mode, &mut self.rng.clone())?;
        Ok(loss_and_accuracy(&out.probs, &self.targets)?.0)
    }
}

/// Compares analytic gradients with `(L(w+eps) - L(w-eps)) / 2eps` for
/// every entry of every tensor.
pub fn check_gradients(
    params: &ModelParams,
    problem: &Problem,
    eps: f64,
) -> Result<Vec<TensorCheck>, ModelError> {
    let out = forward(
        params,
        &problem.inputs,
        &problem.state,
        problem.mode,
        &mut problem.rng.clone(),
    )?;
    let grads = backward(params, &out.cache, &problem.targets)?;
    let specs = tensor_specs(&params.config);
    let mut work = params.clone();
    let mut results = Vec::with_capacity(specs.len());
    for (ti, spec) in specs.iter().enumerate() {
        let analytic = grads.tensors()[ti].data().to_vec();
        let mut numeric = vec![0.0; analytic.len()];
        for (k, slot) in numeric.iter_mut().enumerate() {
            let orig = work.tensors()[ti].data()[k];
            work.tensors_mut()[ti].data_mut()[k] = orig + eps;
            let plus = problem.loss(&work)?;
            work.tensors_mut()[ti].data_mut()[k] = orig - eps;
            let minus = problem.loss(&work)?;
            work.tensors_mut()[ti].data_mut()[k] = orig;
            *slot = (plus - minus) / (2.0 * eps);
        }
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, n)| a - n).collect();
        let denom = norm(&analytic) + norm(&numeric);
        results.push(TensorCheck {
            name: spec.name.clone(),
            rel_error: if denom == 0.0 { 0.0 } else { norm(&diff) / denom },
            max_abs_error: diff.iter().fold(0.0, |m, d| f64::max(m, d.abs())),
            analytic_norm: norm(&analytic),
        });
    }
    Ok(results)
}
