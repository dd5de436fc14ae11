use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::rng::{streams, StreamKey};

/// Uniform draw from the unit sphere in `R^d`: a normalized Gaussian vector.
pub fn sample_unit_sphere(d: usize, key: StreamKey) -> Vec<f64> {
    assert!(d >= 1, "dimension must be positive");
    let mut rng = key.rng();
    loop {
        let mut v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if norm > 0.0 && norm.is_finite() {
            v.iter_mut().for_each(|t| *t /= norm);
            return v;
        }
    }
}

/// Uniform draw from the unit ball: a sphere draw scaled by `U^{1/d}`.
pub fn sample_unit_ball(d: usize, key: StreamKey) -> Vec<f64> {
    let mut v = sample_unit_sphere(d, key);
    let u: f64 = key.with_stream(streams::BALL_RADIUS).rng().random();
    let r = u.powf(1.0 / d as f64);
    v.iter_mut().for_each(|t| *t *= r);
    v
}

/// Monte-Carlo estimate of `E_ẽ f(x + γ ẽ)` and its standard error.
///
/// Draws are taken in antithetic pairs `(f(x + γẽ) + f(x − γẽ)) / 2`, which keeps
/// the estimate unbiased and makes every pair lie above `f(x)` for convex `f`.
pub fn smoothed_value(f: impl Fn(&[f64]) -> f64, x: &[f64], gamma: f64, samples: usize, key: StreamKey) -> (f64, f64) {
    assert!(samples >= 1, "need at least one sample");
    let d = x.len();
    let mut mean = 0.0;
    let mut m2 = 0.0;
    let mut plus = vec![0.0; d];
    let mut minus = vec![0.0; d];
    for k in 0..samples {
        let e = sample_unit_ball(d, key.with_index(k as u64));
        for i in 0..d {
            plus[i] = x[i] + gamma * e[i];
            minus[i] = x[i] - gamma * e[i];
        }
        let v = 0.5 * (f(&plus) + f(&minus));
        // Welford
        let delta = v - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (v - mean);
    }
    let std_err = if samples > 1 {
        (m2 / (samples - 1) as f64 / samples as f64).sqrt()
    } else {
        f64::INFINITY
    };
    (mean, std_err)
}
