//! Central finite-difference check of the analytic gradients.

use serde::{Deserialize, Serialize};

use super::{Differentiable, Example};

pub const GRADCHECK_STEP: f64 = 1e-5;
/// Parameters whose analytic and numeric gradients are both below this are skipped.
pub const GRADCHECK_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub checked: usize,
    pub skipped: usize,
}

/// Compare the analytic gradient of the loss on `batch` with central
/// differences over every parameter.
pub fn gradient_check<M: Differentiable<f64> + Clone>(model: &M, batch: &[Example<f64>]) -> GradCheck {
    let (_, analytic) = model.loss_and_grad(batch);
    let base = model.params();
    let mut probe = model.clone();
    let mut params = base.clone();
    let mut out = GradCheck {
        max_rel_error: 0.0,
        checked: 0,
        skipped: 0,
    };
    for (i, a) in analytic.iter().enumerate() {
        params[i] = base[i] + GRADCHECK_STEP;
        probe.set_params(&params);
        let up = probe.loss(batch);
        params[i] = base[i] - GRADCHECK_STEP;
        probe.set_params(&params);
        let down = probe.loss(batch);
        params[i] = base[i];
        let numeric = (up - down) / (2.0 * GRADCHECK_STEP);
        if a.abs() < GRADCHECK_FLOOR && numeric.abs() < GRADCHECK_FLOOR {
            out.skipped += 1;
            continue;
        }
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs());
        out.max_rel_error = out.max_rel_error.max(rel);
        out.checked += 1;
    }
    out
}
