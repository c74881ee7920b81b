//! Square and logistic loss: values, working residuals, group gradients, and
//! group-wise Lipschitz constants.
//!
//! Both losses share the same gradient form `∇kL = −Xkᵀr`, with
//! `r = y − Xβ` for square loss and `r = y − sigmoid(Xβ)` for logistic loss,
//! which lets one solver loop serve regression and classification.

use ndarray::{Array1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Which loss the problem minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    /// `ℓ(z, y) = (y − z)² / 2`
    Square,
    /// Negative Bernoulli log-likelihood with probabilities `sigmoid(z)`;
    /// requires `y ∈ {0, 1}`.
    Logistic,
}

/// Numerically safe `1 / (1 + exp(−x))`.
#[inline]
pub fn sigmoid<F: Scalar>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

/// Numerically safe `log(1 + exp(x))`.
#[inline]
fn softplus<F: Scalar>(x: F) -> F {
    if x >= F::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Loss evaluated from the linear predictor. No validity checks; callers on
/// untrusted data should go through [`loss_value`].
pub fn loss_from_eta<F: Scalar>(kind: LossKind, eta: &Array1<F>, y: &Array1<F>) -> F {
    match kind {
        LossKind::Square => {
            let half = F::cast(0.5);
            eta.iter()
                .zip(y.iter())
                .map(|(&e, &yi)| {
                    let d = yi - e;
                    half * d * d
                })
                .sum()
        }
        LossKind::Logistic => eta
            .iter()
            .zip(y.iter())
            .map(|(&e, &yi)| softplus(e) - yi * e)
            .sum(),
    }
}

/// Total loss `L(β)` at the given coefficients; errors on non-finite inputs.
pub fn loss_value<F: Scalar>(
    kind: LossKind,
    x: ArrayView2<'_, F>,
    y: &Array1<F>,
    beta: &Array1<F>,
) -> Result<F> {
    if x.nrows() != y.len() || x.ncols() != beta.len() {
        return Err(Error::DimensionMismatch(format!(
            "loss on {}x{} design with |y|={} |beta|={}",
            x.nrows(),
            x.ncols(),
            y.len(),
            beta.len()
        )));
    }
    let eta = x.dot(beta);
    let value = loss_from_eta(kind, &eta, y);
    if !value.is_finite() {
        return Err(Error::NonFinite("loss value"));
    }
    Ok(value)
}

/// Group-wise gradient `∇kL = −Xkᵀr`, valid for both losses when `r` is the
/// current working residual.
pub fn group_gradient<F: Scalar>(xk: ArrayView2<'_, F>, residual: &Array1<F>) -> Array1<F> {
    let mut g = xk.t().dot(residual);
    g.mapv_inplace(|v| -v);
    g
}

/// Convert a group Gram-matrix spectral bound into the loss-specific
/// Lipschitz constant of the group gradient.
#[inline]
pub fn lipschitz_from_gram_max<F: Scalar>(kind: LossKind, gram_max: F) -> F {
    match kind {
        LossKind::Square => gram_max,
        LossKind::Logistic => gram_max * F::cast(0.25),
    }
}

/// Group-wise Lipschitz constant of `∇kL`: the squared spectral norm of the
/// group block, quartered for logistic loss.
pub fn lipschitz_constant<F: Scalar>(kind: LossKind, xk: ArrayView2<'_, F>) -> Result<F> {
    let top = crate::linalg::gram_spectral_max(xk);
    if !(top > F::zero()) {
        return Err(Error::ZeroMatrix);
    }
    Ok(lipschitz_from_gram_max(kind, top))
}

/// The residual vector the solver keeps in memory, updated incrementally as
/// coefficient blocks move.
#[derive(Debug, Clone)]
pub struct WorkingResidual<F> {
    r: Array1<F>,
    /// Linear predictor, maintained for logistic loss only.
    eta: Option<Array1<F>>,
}

impl<F: Scalar> WorkingResidual<F> {
    pub fn new(
        kind: LossKind,
        x: ArrayView2<'_, F>,
        y: &Array1<F>,
        beta: &Array1<F>,
        intercept: F,
    ) -> Self {
        let mut eta = x.dot(beta);
        eta.mapv_inplace(|v| v + intercept);
        match kind {
            LossKind::Square => WorkingResidual {
                r: y - &eta,
                eta: None,
            },
            LossKind::Logistic => {
                let r = Array1::from_iter(
                    y.iter().zip(eta.iter()).map(|(&yi, &e)| yi - sigmoid(e)),
                );
                WorkingResidual { r, eta: Some(eta) }
            }
        }
    }

    pub fn residual(&self) -> &Array1<F> {
        &self.r
    }

    pub fn eta(&self) -> Option<&Array1<F>> {
        self.eta.as_ref()
    }

    /// Apply `βk ← βk + delta` to the residual state in `O(pk·n)`.
    pub fn apply_block_delta(
        &mut self,
        kind: LossKind,
        xk: ArrayView2<'_, F>,
        y: &Array1<F>,
        delta: &Array1<F>,
    ) {
        if delta.iter().all(|&d| d == F::zero()) {
            return;
        }
        let step = xk.dot(delta);
        match kind {
            LossKind::Square => {
                self.r.zip_mut_with(&step, |ri, &si| *ri = *ri - si);
            }
            LossKind::Logistic => {
                let eta = self.eta.as_mut().expect("logistic residual keeps eta");
                eta.zip_mut_with(&step, |ei, &si| *ei = *ei + si);
                for i in 0..self.r.len() {
                    self.r[i] = y[i] - sigmoid(eta[i]);
                }
            }
        }
    }

    /// Shift the intercept by `delta`.
    pub fn apply_intercept_delta(&mut self, kind: LossKind, y: &Array1<F>, delta: F) {
        if delta == F::zero() {
            return;
        }
        match kind {
            LossKind::Square => self.r.mapv_inplace(|ri| ri - delta),
            LossKind::Logistic => {
                let eta = self.eta.as_mut().expect("logistic residual keeps eta");
                eta.mapv_inplace(|ei| ei + delta);
                for i in 0..self.r.len() {
                    self.r[i] = y[i] - sigmoid(eta[i]);
                }
            }
        }
    }

    /// Recompute from scratch, discarding accumulated rounding drift.
    pub fn refresh(
        &mut self,
        kind: LossKind,
        x: ArrayView2<'_, F>,
        y: &Array1<F>,
        beta: &Array1<F>,
        intercept: F,
    ) {
        *self = Self::new(kind, x, y, beta, intercept);
    }

    /// Loss value implied by the current residual state.
    pub fn loss(&self, kind: LossKind, y: &Array1<F>) -> F {
        match kind {
            LossKind::Square => {
                let half = F::cast(0.5);
                self.r.iter().map(|&ri| half * ri * ri).sum()
            }
            LossKind::Logistic => {
                let eta = self.eta.as_ref().expect("logistic residual keeps eta");
                loss_from_eta(LossKind::Logistic, eta, y)
            }
        }
    }
}
