use serde::{Deserialize, Serialize};

use crate::topology::{multi_gossip_chi, multi_gossip_rounds};
use crate::zeroth_order::{gamma_for_accuracy, variance_bound_with, OracleConfig, OracleError, Scheme};

/// Inputs of the gradient-free complexity budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetInput {
    pub epsilon: f64,
    pub mu: f64,
    pub m2: f64,
    pub d: usize,
    pub chi: f64,
    pub batch: usize,
    pub scheme: Scheme,
    /// `G`, needed by the one-point single-realization scheme.
    pub g: Option<f64>,
    pub nodes: usize,
    /// `Ĉ₀` inside the logarithm of the deterministic branch.
    pub c0_hat: f64,
    pub multi_gossip: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub n_iterations: u64,
    pub n_comm: u64,
    pub n_oracle: u64,
    /// Largest admissible noise level `Δ̃`.
    pub delta_tilde_max: f64,
    pub scheme: Scheme,
    pub batch: usize,
    pub first_branch: f64,
    pub second_branch: f64,
    pub sigma2: f64,
    pub gamma: f64,
    /// `L_{F_γ} = √d M₂ / γ`.
    pub l_smoothed: f64,
    pub gossip_rounds: u32,
    /// `χ` entering the iteration count (reduced under multi-gossip).
    pub chi_effective: f64,
}

/// Iteration, communication and oracle budgets for reaching accuracy `ε`.
///
/// `N = ⌈max{64 χ d^{1/4} M₂/√(εμ) · ln(6Ĉ₀/ε), 6χ²σ̃²/(εBμ)}⌉`, with `σ̃²` the
/// scheme's variance bound at `γ = ε/(2M₂)` and zero noise.
pub fn budget_zo(input: &BudgetInput) -> Result<BudgetReport, OracleError> {
    let BudgetInput {
        epsilon,
        mu,
        m2,
        d,
        chi,
        batch,
        scheme,
        g,
        nodes,
        c0_hat,
        multi_gossip,
    } = *input;
    if scheme == Scheme::Exact {
        return Err(OracleError::SchemeMismatch);
    }
    for (name, v) in [("epsilon", epsilon), ("mu", mu), ("M2", m2), ("chi", chi), ("C0", c0_hat)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(OracleError::BadConfig(format!("{name} must be positive, got {v}")));
        }
    }
    if batch == 0 || d == 0 || nodes == 0 {
        return Err(OracleError::BadConfig("batch, d and nodes must be positive".into()));
    }
    let (gamma, l_smoothed) = gamma_for_accuracy(epsilon, m2, d);
    let cfg = OracleConfig::new(scheme, gamma, batch, 0);
    let sigma2 = variance_bound_with(&cfg, d, Some(m2), g)?;

    let (gossip_rounds, chi_eff) = if multi_gossip {
        let t = multi_gossip_rounds(chi);
        (t, multi_gossip_chi(chi, t))
    } else {
        (1, chi)
    };
    let df = d as f64;
    let b = batch as f64;
    let log_term = (6.0 * c0_hat / epsilon).ln().max(1.0);
    let first_branch = 64.0 * chi_eff * df.powf(0.25) * m2 / (epsilon * mu).sqrt() * log_term;
    let second_branch = 6.0 * chi_eff * chi_eff * sigma2 / (epsilon * b * mu);
    let n_iterations = first_branch.max(second_branch).ceil().max(1.0) as u64;
    let n = n_iterations as f64;

    let k = match scheme {
        Scheme::Tpf => 1,
        Scheme::OpfSingle => 2,
        _ => 3,
    };
    let delta_sq = f64::min(
        epsilon.powf(2.5) * mu.sqrt() / (df.powf(1.75) * m2 * n),
        b * mu * n * epsilon.powi(3) / (chi_eff * chi_eff * m2 * m2 * df.powi(k)),
    );
    Ok(BudgetReport {
        n_iterations,
        n_comm: n_iterations.saturating_mul(gossip_rounds as u64),
        n_oracle: n_iterations
            .saturating_mul(batch as u64)
            .saturating_mul(scheme.evaluations())
            .saturating_mul(nodes as u64),
        delta_tilde_max: delta_sq.sqrt(),
        scheme,
        batch,
        first_branch,
        second_branch,
        sigma2,
        gamma,
        l_smoothed,
        gossip_rounds,
        chi_effective: chi_eff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(scheme: Scheme) -> BudgetInput {
        BudgetInput {
            epsilon: 1e-2,
            mu: 0.1,
            m2: 2.0,
            d: 10,
            chi: 5.0,
            batch: 4,
            scheme,
            g: Some(3.0),
            nodes: 10,
            c0_hat: 1.0,
            multi_gossip: false,
        }
    }

    #[test]
    fn oracle_identity() {
        for scheme in [Scheme::Tpf, Scheme::OpfSingle, Scheme::OpfDouble] {
            let r = budget_zo(&input(scheme)).unwrap();
            assert_eq!(r.n_oracle, r.n_iterations * 4 * scheme.evaluations() * 10);
            assert_eq!(r.n_comm, r.n_iterations);
        }
    }

    #[test]
    fn second_branch_dominates_with_huge_variance() {
        let mut inp = input(Scheme::OpfSingle);
        inp.g = Some(1e2);
        let r = budget_zo(&inp).unwrap();
        let expected = (6.0 * 25.0 * r.sigma2 / (1e-2 * 4.0 * 0.1)).ceil() as u64;
        assert_eq!(r.n_iterations, expected);
    }

    #[test]
    fn multi_gossip_counts_rounds() {
        let mut inp = input(Scheme::Tpf);
        inp.multi_gossip = true;
        let r = budget_zo(&inp).unwrap();
        assert_eq!(r.gossip_rounds, 4);
        assert_eq!(r.n_comm, 4 * r.n_iterations);
        assert!(r.chi_effective <= 2.0);
    }

    #[test]
    fn missing_g() {
        let mut inp = input(Scheme::OpfSingle);
        inp.g = None;
        assert_eq!(budget_zo(&inp), Err(OracleError::MissingConstant("G")));
    }
}
