//! Truncated Cauchy packet-volume model.
//!
//! Volumes follow `Cauchy(x0, gamma)` conditioned on `[0, m]`. Sampling is by
//! inverse CDF: draw `u` uniformly on `(F(0), F(m))` and map it through the
//! untruncated quantile `x0 + gamma * tan(pi * (u - 1/2))`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Location / scale / maximum triple of a truncated Cauchy distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CauchyParams<T = f64> {
    /// Location, packets per interval.
    pub x0: T,
    /// Scale, packets per interval.
    pub gamma: T,
    /// Maximum packet volume; upper end of the support.
    pub m: T,
}

impl<T: Scalar> CauchyParams<T> {
    pub fn new(x0: T, gamma: T, m: T) -> Result<Self> {
        let p = Self { x0, gamma, m };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.x0.is_finite() && self.gamma.is_finite() && self.m.is_finite();
        if !finite {
            return Err(Error::param(format!("non-finite Cauchy parameters {self:?}")));
        }
        if self.gamma <= T::zero() {
            return Err(Error::param(format!("Cauchy scale must be > 0, got {}", self.gamma)));
        }
        if self.m <= T::zero() {
            return Err(Error::param(format!("Cauchy maximum must be > 0, got {}", self.m)));
        }
        if self.x0 < T::zero() {
            return Err(Error::param(format!("Cauchy location must be >= 0, got {}", self.x0)));
        }
        Ok(())
    }

    /// Attack-time parameters: every component is multiplied by `1 + k`.
    pub fn scale_attack(&self, k: T) -> Result<Self> {
        if !(k >= T::zero()) || !k.is_finite() {
            return Err(Error::param(format!("attack intensity k must be >= 0, got {k}")));
        }
        let f = T::one() + k;
        Ok(Self {
            x0: self.x0 * f,
            gamma: self.gamma * f,
            m: self.m * f,
        })
    }

    fn as_f64(&self) -> (f64, f64, f64) {
        (self.x0.to_f64_lossy(), self.gamma.to_f64_lossy(), self.m.to_f64_lossy())
    }

    /// CDF of the truncated distribution.
    pub fn cdf(&self, x: T) -> T {
        let (x0, g, m) = self.as_f64();
        let x = x.to_f64_lossy();
        if x <= 0.0 {
            return T::zero();
        }
        if x >= m {
            return T::one();
        }
        let lo = cauchy_cdf(0.0, x0, g);
        let hi = cauchy_cdf(m, x0, g);
        T::from_f64_lossy((cauchy_cdf(x, x0, g) - lo) / (hi - lo))
    }

    /// Density of the truncated distribution.
    pub fn pdf(&self, x: T) -> T {
        let (x0, g, m) = self.as_f64();
        let x = x.to_f64_lossy();
        if !(0.0..=m).contains(&x) {
            return T::zero();
        }
        let mass = cauchy_cdf(m, x0, g) - cauchy_cdf(0.0, x0, g);
        let z = (x - x0) / g;
        T::from_f64_lossy(1.0 / (PI * g * (1.0 + z * z) * mass))
    }

    /// Quantile of the truncated distribution for `p` in `[0, 1]`.
    pub fn quantile(&self, p: f64) -> T {
        let (x0, g, m) = self.as_f64();
        let lo = cauchy_cdf(0.0, x0, g);
        let hi = cauchy_cdf(m, x0, g);
        T::from_f64_lossy(untruncated_quantile(lo + p * (hi - lo), x0, g).clamp(0.0, m))
    }

    /// One i.i.d. draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        let p: f64 = rng.random();
        self.quantile(p)
    }

    /// Mean of the truncated distribution (closed form).
    pub fn mean(&self) -> T {
        let (x0, g, m) = self.as_f64();
        let mass = cauchy_cdf(m, x0, g) - cauchy_cdf(0.0, x0, g);
        let za = (0.0 - x0) / g;
        let zb = (m - x0) / g;
        // E[X] = x0 + g * E[Z], with the integral of z/(pi(1+z^2)) over [za, zb]
        let ez = ((1.0 + zb * zb).ln() - (1.0 + za * za).ln()) / (2.0 * PI);
        T::from_f64_lossy(x0 + g * ez / mass)
    }
}

/// Untruncated Cauchy CDF.
pub fn cauchy_cdf(x: f64, x0: f64, gamma: f64) -> f64 {
    0.5 + ((x - x0) / gamma).atan() / PI
}

fn untruncated_quantile(u: f64, x0: f64, gamma: f64) -> f64 {
    x0 + gamma * (PI * (u - 0.5)).tan()
}

/// Attack-time parameters `(x0, gamma, m) * (1 + k)`.
pub fn scale_attack_params<T: Scalar>(benign: &CauchyParams<T>, k: T) -> Result<CauchyParams<T>> {
    benign.scale_attack(k)
}

/// Log-likelihood of `samples` under `Cauchy(x0, gamma)` truncated to `[0, m]`.
pub fn truncated_log_likelihood(samples: &[f64], x0: f64, gamma: f64, m: f64) -> f64 {
    if gamma <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let mass = cauchy_cdf(m, x0, gamma) - cauchy_cdf(0.0, x0, gamma);
    if mass <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let n = samples.len() as f64;
    let mut acc = 0.0;
    for &x in samples {
        let z = (x - x0) / gamma;
        acc += (1.0 + z * z).ln();
    }
    -n * (PI * gamma).ln() - acc - n * mass.ln()
}

/// Maximum-likelihood fit of `(x0, gamma)` with `m = max(samples)`.
///
/// The location is constrained to `x0 >= 0`; the search runs Nelder–Mead over
/// `(x0, ln gamma)` started from the sample median and half inter-quartile range.
pub fn fit_truncated_cauchy(samples: &[f64]) -> Result<CauchyParams<f64>> {
    if samples.is_empty() {
        return Err(Error::input("cannot fit a distribution to an empty sample"));
    }
    if let Some(bad) = samples.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::input(format!("packet volumes must be finite and >= 0, got {bad}")));
    }
    let m = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    if m == lo {
        return Err(Error::input("all samples identical; scale is degenerate"));
    }

    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = |p: f64| sorted[((sorted.len() - 1) as f64 * p).round() as usize];
    let median = q(0.5);
    let half_iqr = ((q(0.75) - q(0.25)) / 2.0).max((m - lo) * 1e-3);

    let objective = |p: &[f64; 2]| {
        let x0 = p[0];
        if x0 < 0.0 {
            return f64::INFINITY;
        }
        -truncated_log_likelihood(samples, x0, p[1].exp(), m)
    };
    let start = [median.max(0.0), half_iqr.ln()];
    let steps = [half_iqr.max(1e-6), 0.5];
    let mut best = nelder_mead(objective, start, steps, 2000, 1e-12);
    // restart once from the optimum to escape a collapsed simplex
    best = nelder_mead(objective, best, [steps[0] * 0.1, 0.05], 2000, 1e-14);

    CauchyParams::new(best[0].max(0.0), best[1].exp(), m)
}

fn nelder_mead<F>(f: F, start: [f64; 2], step: [f64; 2], max_iter: usize, tol: f64) -> [f64; 2]
where
    F: Fn(&[f64; 2]) -> f64,
{
    let mut simplex = [
        start,
        [start[0] + step[0], start[1]],
        [start[0], start[1] + step[1]],
    ];
    let mut values = simplex.map(|p| f(&p));

    for _ in 0..max_iter {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.map(|i| simplex[i]);
        values = order.map(|i| values[i]);

        if (values[2] - values[0]).abs() <= tol * (1.0 + values[0].abs()) {
            break;
        }

        let centroid = [
            (simplex[0][0] + simplex[1][0]) / 2.0,
            (simplex[0][1] + simplex[1][1]) / 2.0,
        ];
        let along = |t: f64| {
            [
                centroid[0] + t * (simplex[2][0] - centroid[0]),
                centroid[1] + t * (simplex[2][1] - centroid[1]),
            ]
        };

        let reflected = along(-1.0);
        let fr = f(&reflected);
        if fr < values[0] {
            let expanded = along(-2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[2] = expanded;
                values[2] = fe;
            } else {
                simplex[2] = reflected;
                values[2] = fr;
            }
            continue;
        }
        if fr < values[1] {
            simplex[2] = reflected;
            values[2] = fr;
            continue;
        }
        let contracted = if fr < values[2] { along(-0.5) } else { along(0.5) };
        let fc = f(&contracted);
        if fc < values[2].min(fr) {
            simplex[2] = contracted;
            values[2] = fc;
            continue;
        }
        // shrink toward the best vertex
        for i in 1..3 {
            simplex[i] = [
                simplex[0][0] + 0.5 * (simplex[i][0] - simplex[0][0]),
                simplex[0][1] + 0.5 * (simplex[i][1] - simplex[0][1]),
            ];
            values[i] = f(&simplex[i]);
        }
    }

    let best = (0..3).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    simplex[best]
}
