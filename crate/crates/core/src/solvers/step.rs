//! Step-size rules: closed-form rescaling and the backtracking conditions.

use crate::forward::{CompressedImage, ForwardModel, KSpaceData};
use crate::linalg::{inner, norm_sqr};
use crate::{Error, Result};

/// Minimizer of `||alpha G(x_tilde) - Y||^2` over real `alpha`.
pub fn rescale_alpha(y: &KSpaceData, x_tilde: &CompressedImage, model: &ForwardModel) -> Result<f64> {
    let gx = model.forward(x_tilde)?;
    let den = norm_sqr(&gx.samples);
    if den == 0.0 {
        return Err(Error::ZeroForward);
    }
    Ok(inner(&y.samples, &gx.samples).re / den)
}

/// Outcome of the two acceptance conditions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BacktrackOutcome {
    pub cond_a: bool,
    pub cond_b: bool,
}

impl BacktrackOutcome {
    pub fn accept(&self) -> bool {
        self.cond_a && self.cond_b
    }
}

/// Evaluates the conditions from precomputed norms.
///
/// * a: `alpha <= 0.99 ||D||^2 / ||G^H G D||^2` with `D = x_new - x_old`;
///   no movement counts as satisfied.
/// * b: `||G^H Y - G^H G x_new||^2 <= ||G^H Y - G^H G x_old||^2`, or `>=`
///   with `literal`.
pub fn backtrack_conditions(
    alpha: f64,
    delta_sq: f64,
    normal_delta_sq: f64,
    metric_new: f64,
    metric_old: f64,
    literal: bool,
) -> BacktrackOutcome {
    let cond_a = if delta_sq == 0.0 || normal_delta_sq == 0.0 {
        true
    } else {
        alpha <= 0.99 * delta_sq / normal_delta_sq
    };
    let cond_b = if literal {
        metric_new >= metric_old
    } else {
        metric_new <= metric_old
    };
    BacktrackOutcome { cond_a, cond_b }
}

/// `||G^H (G x - Y)||^2`, the residual metric of condition b.
pub fn gradient_metric(x: &CompressedImage, y: &KSpaceData, model: &ForwardModel) -> Result<f64> {
    let mut r = model.forward(x)?;
    r.samples -= &y.samples;
    Ok(norm_sqr(&model.adjoint(&r)?.data))
}

/// Acceptance test for a trial iterate (decrease form of condition b).
pub fn backtrack_check(
    x_new: &CompressedImage,
    x_old: &CompressedImage,
    alpha: f64,
    y: &KSpaceData,
    model: &ForwardModel,
) -> Result<bool> {
    backtrack_check_with(x_new, x_old, alpha, y, model, false).map(|o| o.accept())
}

pub fn backtrack_check_with(
    x_new: &CompressedImage,
    x_old: &CompressedImage,
    alpha: f64,
    y: &KSpaceData,
    model: &ForwardModel,
    literal: bool,
) -> Result<BacktrackOutcome> {
    if !x_new.is_finite() || !x_old.is_finite() {
        return Err(Error::InvalidArgument("backtracking on non-finite iterate".into()));
    }
    let delta = x_new.with_data(&x_new.data - &x_old.data);
    let normal = model.normal(&delta)?;
    Ok(backtrack_conditions(
        alpha,
        norm_sqr(&delta.data),
        norm_sqr(&normal.data),
        gradient_metric(x_new, y, model)?,
        gradient_metric(x_old, y, model)?,
        literal,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_motion_accepts() {
        let o = backtrack_conditions(5.0, 0.0, 0.0, 1.0, 1.0, false);
        assert!(o.accept());
    }

    #[test]
    fn condition_directions() {
        assert!(!backtrack_conditions(1e6, 1.0, 1.0, 0.5, 1.0, false).cond_a);
        assert!(backtrack_conditions(0.5, 1.0, 1.0, 0.5, 1.0, false).accept());
        assert!(!backtrack_conditions(0.5, 1.0, 1.0, 2.0, 1.0, false).cond_b);
        assert!(backtrack_conditions(0.5, 1.0, 1.0, 2.0, 1.0, true).cond_b);
        assert!(!backtrack_conditions(0.5, 1.0, 1.0, 0.5, 1.0, true).cond_b);
    }
}
