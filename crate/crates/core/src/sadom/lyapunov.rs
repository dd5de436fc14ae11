use serde::{Deserialize, Serialize};

use super::{Hyperparameters, SadomState};
use crate::objectives::{ProblemSpec, ReferenceSolution};
use crate::stacked::StackedVector;

/// Saddle point `(x*, y*, z*)` of the lifted problem, built from a reference
/// minimizer.
#[derive(Clone, Debug, PartialEq)]
pub struct SaddlePoint {
    pub x: StackedVector,
    pub y: StackedVector,
    pub z: StackedVector,
    /// `∇F(x*)` stacked.
    pub grad: StackedVector,
    /// `F(x*) = Σ_i f_i(x*)`.
    pub value: f64,
}

impl SaddlePoint {
    /// `y* = ∇F(x*) − νx*`, `z* = P(−y* − νx*)`.
    pub fn new(reference: &ReferenceSolution, n: usize, nu: f64) -> Self {
        let x = reference.stacked_x_star(n);
        let grad = reference.stacked_gradients();
        let y = StackedVector::lincomb(1.0, &grad, -nu, &x);
        let z = StackedVector::lincomb(-1.0, &y, -nu, &x).project_zero_sum();
        Self {
            x,
            y,
            z,
            grad,
            value: reference.f_star,
        }
    }

    /// A state sitting exactly at the saddle, `m = 0`.
    pub fn state(&self) -> SadomState {
        let zero = StackedVector::zeros(self.x.n(), self.x.d());
        SadomState::from_parts(self.x.clone(), self.y.clone(), self.z.clone(), zero).expect("shapes agree")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSnapshot {
    pub psi_x: f64,
    pub psi_yz: f64,
    /// `z − P m`.
    pub z_hat: StackedVector,
    /// `D_F(x_f, x*)`.
    pub bregman: f64,
}

impl LyapunovSnapshot {
    pub fn total(&self) -> f64 {
        self.psi_x + self.psi_yz
    }
}

/// `F(x_f) − F(x*) − ⟨∇F(x*), x_f − x*⟩`.
pub fn bregman(spec: &ProblemSpec, saddle: &SaddlePoint, x_f: &StackedVector) -> f64 {
    let diff = x_f.sub(&saddle.x);
    spec.stacked_value(x_f) - saddle.value - saddle.grad.dot(&diff)
}

pub fn lyapunov(state: &SadomState, hp: &Hyperparameters, saddle: &SaddlePoint, spec: &ProblemSpec) -> LyapunovSnapshot {
    let breg = bregman(spec, saddle, &state.x_f);
    let psi_x = (1.0 / hp.eta + hp.alpha) * state.x.dist_sq(&saddle.x)
        + 2.0 / hp.tau2 * (breg - 0.5 * hp.nu * state.x_f.dist_sq(&saddle.x));

    let z_hat = state.z.sub(&state.m.project_zero_sum());
    let yz_f = state.y_f.add(&state.z_f);
    let yz_star = saddle.y.add(&saddle.z);
    let psi_yz = (1.0 / hp.theta + 0.5 * hp.beta) * state.y.dist_sq(&saddle.y)
        + hp.beta / (2.0 * hp.vartheta2) * state.y_f.dist_sq(&saddle.y)
        + z_hat.dist_sq(&saddle.z) / hp.varkappa
        + 4.0 / (3.0 * hp.varkappa) * state.m.projected_norm_sq()
        + yz_f.dist_sq(&yz_star) / (hp.nu * hp.vartheta2);
    LyapunovSnapshot {
        psi_x,
        psi_yz,
        z_hat,
        bregman: breg,
    }
}
