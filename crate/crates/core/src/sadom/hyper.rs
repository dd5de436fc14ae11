use serde::{Deserialize, Serialize};

use super::SadomError;

/// Step sizes and momentum weights of the accelerated primal-dual iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub tau1: f64,
    pub tau2: f64,
    pub eta: f64,
    pub alpha: f64,
    pub nu: f64,
    pub beta: f64,
    pub theta: f64,
    pub vartheta1: f64,
    pub vartheta2: f64,
    pub pi_: f64,
    pub varkappa: f64,
    pub zeta: f64,
    pub chi: f64,
    pub mu: f64,
    pub l: f64,
}

/// Closed-form parameters for strong convexity `mu`, smoothness `l` and
/// network condition bound `chi`; `β` defaults to `1/(2L)`.
pub fn derive_hyperparameters(mu: f64, l: f64, chi: f64, beta_override: Option<f64>) -> Result<Hyperparameters, SadomError> {
    if !(mu > 0.0 && mu.is_finite() && l >= mu && l.is_finite()) {
        return Err(SadomError::BadConstants(format!("need 0 < mu <= L, got mu={mu}, L={l}")));
    }
    if !(chi >= 1.0 && chi.is_finite()) {
        return Err(SadomError::BadConstants(format!("chi must be at least 1, got {chi}")));
    }
    let cap = 1.0 / (2.0 * l);
    let beta = match beta_override {
        None => cap,
        Some(b) if b > 0.0 && b <= cap => b,
        Some(b) => return Err(SadomError::BadConstants(format!("beta={b} outside (0, 1/(2L)={cap}]"))),
    };
    let tau2 = (mu / l).sqrt();
    let tau1 = 1.0 / (1.0 / tau2 + 0.5);
    let eta = 1.0 / ((1.0 / beta + l) * tau2);
    let alpha = mu / 4.0;
    let nu = mu / 2.0;
    let vartheta2 = (beta * mu).sqrt() / (16.0 * chi);
    let vartheta1 = 1.0 / (1.0 / vartheta2 + 0.5);
    let pi_ = beta / 16.0;
    let varkappa = nu / (14.0 * vartheta2 * chi * chi);
    let theta = nu / (4.0 * vartheta2);
    Ok(Hyperparameters {
        tau1,
        tau2,
        eta,
        alpha,
        nu,
        beta,
        theta,
        vartheta1,
        vartheta2,
        pi_,
        varkappa,
        zeta: 0.5,
        chi,
        mu,
        l,
    })
}

impl Hyperparameters {
    /// Per-iteration contraction `1 − √(βμ)/(32χ)` of the deterministic method.
    pub fn contraction_factor(&self) -> f64 {
        1.0 - (self.beta * self.mu).sqrt() / (32.0 * self.chi)
    }

    /// Determinant of the coupled x/y update, `(1+ηα)(1+θβ) + ηθ`.
    pub fn implicit_denominator(&self) -> f64 {
        (1.0 + self.eta * self.alpha) * (1.0 + self.theta * self.beta) + self.eta * self.theta
    }
}

/// `β` for an `n_iters` budget with noise level `sigma2` and initial potential
/// `c0`: `√β = min{1/√(2L), ln(max{2, a c0 N/(b σ²)})/(aN)}` with
/// `a = √μ/(32χ)`, `b = 64χ/√μ³`.
pub fn beta_schedule(mu: f64, l: f64, chi: f64, n_iters: u64, sigma2: f64, c0: f64) -> f64 {
    let cap = 1.0 / (2.0 * l);
    if sigma2 <= 0.0 {
        return cap;
    }
    let n = n_iters.max(1) as f64;
    let a = mu.sqrt() / (32.0 * chi);
    let b = 64.0 * chi / mu.powf(1.5);
    let ratio = a * c0 * n / (b * sigma2);
    let root = ratio.max(2.0).ln() / (a * n);
    if root >= cap.sqrt() {
        cap
    } else {
        root * root
    }
}
