use serde::{Deserialize, Serialize};

use super::{Hyperparameters, SadomError};
use crate::stacked::StackedVector;
use crate::topology::{multi_gossip_apply, GossipRound};

/// Iterates of the method; `z`, `z_f` stay in the zero-sum subspace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SadomState {
    pub x: StackedVector,
    pub x_f: StackedVector,
    pub y: StackedVector,
    pub y_f: StackedVector,
    pub z: StackedVector,
    pub z_f: StackedVector,
    pub m: StackedVector,
    pub k: u64,
}

impl SadomState {
    /// `x⁰ = x_f⁰ = x0`, all dual variables zero.
    pub fn new(x0: StackedVector) -> Self {
        let zero = StackedVector::zeros(x0.n(), x0.d());
        Self {
            x_f: x0.clone(),
            x: x0,
            y: zero.clone(),
            y_f: zero.clone(),
            z: zero.clone(),
            z_f: zero.clone(),
            m: zero,
            k: 0,
        }
    }

    /// Explicit start with `x_f = x`, `y_f = y`, `z_f = z`.
    pub fn from_parts(x: StackedVector, y: StackedVector, z: StackedVector, m: StackedVector) -> Result<Self, SadomError> {
        if !(x.same_shape(&y) && x.same_shape(&z) && x.same_shape(&m)) {
            return Err(SadomError::Shape("state components differ in shape".into()));
        }
        Ok(Self {
            x_f: x.clone(),
            y_f: y.clone(),
            z_f: z.clone(),
            x,
            y,
            z,
            m,
            k: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.x.n()
    }

    pub fn d(&self) -> usize {
        self.x.d()
    }

    pub fn is_finite(&self) -> bool {
        [&self.x, &self.x_f, &self.y, &self.y_f, &self.z, &self.z_f, &self.m]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Exact solution of the coupled updates for `x^{k+1}` and `y^{k+1}`:
///
/// ```text
/// (1+ηα) x' − η y'  = u,   u = x + ηα x_g − η(g − ν x_g)
/// θ x' + (1+θβ) y'  = v,   v = y + θβ(g − ν x_g) − θν⁻¹(y_g + z_g)
/// ```
pub fn solve_implicit_xy(
    hp: &Hyperparameters,
    x: &StackedVector,
    x_g: &StackedVector,
    y: &StackedVector,
    y_g: &StackedVector,
    z_g: &StackedVector,
    g: &StackedVector,
) -> (StackedVector, StackedVector) {
    let (eta, alpha, theta, beta, nu) = (hp.eta, hp.alpha, hp.theta, hp.beta, hp.nu);
    let a = 1.0 + eta * alpha;
    let b = 1.0 + theta * beta;
    let det = a * b + eta * theta;
    let mut x_next = StackedVector::zeros(x.n(), x.d());
    let mut y_next = x_next.clone();
    let it = x_next
        .as_mut_slice()
        .iter_mut()
        .zip(y_next.as_mut_slice().iter_mut())
        .enumerate();
    let (xs, xgs, ys, ygs, zgs, gs) = (
        x.as_slice(),
        x_g.as_slice(),
        y.as_slice(),
        y_g.as_slice(),
        z_g.as_slice(),
        g.as_slice(),
    );
    for (i, (xo, yo)) in it {
        let drift = gs[i] - nu * xgs[i];
        let u = xs[i] + eta * alpha * xgs[i] - eta * drift;
        let v = ys[i] + theta * beta * drift - theta / nu * (ygs[i] + zgs[i]);
        *xo = (b * u + eta * v) / det;
        *yo = (a * v - theta * u) / det;
    }
    (x_next, y_next)
}

/// Resources consumed by one step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepCost {
    pub comm_rounds: u64,
    pub oracle_calls: u64,
}

/// One iteration. `grad` receives `x_g` and returns the stacked gradient
/// estimate with its oracle-call count. `gossip_rounds > 1` replaces each
/// application of `W` by `I − (I − W)^T`.
pub fn sadom_step<E>(
    state: &mut SadomState,
    hp: &Hyperparameters,
    w: &GossipRound,
    grad: impl FnOnce(&StackedVector) -> Result<(StackedVector, u64), E>,
    gossip_rounds: u32,
) -> Result<StepCost, E>
where
    E: From<SadomError>,
{
    let t = gossip_rounds.max(1);
    let x_g = StackedVector::lincomb(hp.tau1, &state.x, 1.0 - hp.tau1, &state.x_f);
    let (g, oracle_calls) = grad(&x_g)?;
    if !g.same_shape(&x_g) {
        return Err(SadomError::Shape("gradient shape differs from iterate".into()).into());
    }
    let y_g = StackedVector::lincomb(hp.vartheta1, &state.y, 1.0 - hp.vartheta1, &state.y_f);
    let z_g = StackedVector::lincomb(hp.vartheta1, &state.z, 1.0 - hp.vartheta1, &state.z_f);
    let (x_next, y_next) = solve_implicit_xy(hp, &state.x, &x_g, &state.y, &y_g, &z_g, &g);

    // x_f' = x_g + τ₂(x' − x)
    let mut x_f_next = x_g;
    x_f_next.axpy(hp.tau2, &x_next);
    x_f_next.axpy(-hp.tau2, &state.x);
    let mut y_f_next = y_g.clone();
    y_f_next.axpy(hp.vartheta2, &y_next);
    y_f_next.axpy(-hp.vartheta2, &state.y);

    let yz = y_g.add(&z_g);
    // ϰν⁻¹(y_g + z_g) + m
    let mut arg = state.m.clone();
    arg.axpy(hp.varkappa / hp.nu, &yz);
    let p1 = multi_gossip_apply(w, &arg, t).map_err(SadomError::from)?;
    let p2 = multi_gossip_apply(w, &yz, t).map_err(SadomError::from)?;

    let mut z_next = state.z.clone();
    z_next.axpy(hp.varkappa * hp.pi_, &z_g);
    z_next.axpy(-hp.varkappa * hp.pi_, &state.z);
    z_next.axpy(-1.0, &p1);
    let m_next = arg.sub(&p1);
    let mut z_f_next = z_g;
    z_f_next.axpy(-hp.zeta, &p2);

    state.x = x_next;
    state.x_f = x_f_next;
    state.y = y_next;
    state.y_f = y_f_next;
    state.z = z_next;
    state.z_f = z_f_next;
    state.m = m_next;
    state.k += 1;
    Ok(StepCost {
        comm_rounds: t as u64,
        oracle_calls,
    })
}
