use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::chart::{exp_coords, log_coords, MalcevChart};
use super::{thread_pool, SchwartzFunction};
use crate::error::{Error, Result};
use crate::lie_basis::LayeredBasis;
use crate::tensor_algebra::GradedElement;

const CHUNK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    Left,
    Right,
}

/// Monte Carlo estimate of `I_1/I_0 − 1` with its delta-method standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HaarEstimate {
    pub deviation: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl HaarEstimate {
    /// Whether the deviation is within `k` standard errors of zero.
    pub fn within(&self, k: f64) -> bool {
        self.deviation.abs() <= k * self.std_error
    }
}

#[derive(Default, Clone, Copy)]
struct Moments {
    a: f64,
    b: f64,
    aa: f64,
    bb: f64,
    ab: f64,
}

impl Moments {
    fn add(mut self, o: Moments) -> Moments {
        self.a += o.a;
        self.b += o.b;
        self.aa += o.aa;
        self.bb += o.bb;
        self.ab += o.ab;
        self
    }

    fn estimate(self, n: usize) -> HaarEstimate {
        let nf = n as f64;
        let (ma, mb) = (self.a / nf, self.b / nf);
        let r = ma / mb;
        let var_a = self.aa / nf - ma * ma;
        let var_b = self.bb / nf - mb * mb;
        let cov = self.ab / nf - ma * mb;
        let var_r = (var_a - 2.0 * r * cov + r * r * var_b) / (mb * mb * nf);
        HaarEstimate { deviation: r - 1.0, std_error: var_r.max(0.0).sqrt(), samples: n }
    }
}

/// Importance sampling with a centred Gaussian proposal of width a quarter
/// of the decay box. `pair` maps a sample to the two integrands.
fn estimate(
    f: &SchwartzFunction,
    samples: usize,
    rng: &mut impl Rng,
    pair: impl Fn(&[f64]) -> Result<(f64, f64)> + Sync,
) -> Result<HaarEstimate> {
    if samples < 2 {
        return Err(Error::Input("need at least two Monte Carlo samples".into()));
    }
    let sigma: Vec<f64> = f.decay_box().iter().map(|b| b / 4.0).collect();
    let n = sigma.len();
    let log_norm: f64 = sigma.iter().map(|s| (s * (2.0 * std::f64::consts::PI).sqrt()).ln()).sum();
    let draws: Vec<f64> = (0..samples * n).map(|i| sigma[i % n] * rng.sample::<f64, _>(StandardNormal)).collect();
    let chunks = thread_pool()?.install(|| {
        draws
            .par_chunks(CHUNK * n)
            .map(|chunk| {
                let mut m = Moments::default();
                for x in chunk.chunks(n) {
                    let log_p = -x.iter().zip(&sigma).map(|(v, s)| v * v / (2.0 * s * s)).sum::<f64>() - log_norm;
                    let inv_p = (-log_p).exp();
                    let (ia, ib) = pair(x)?;
                    let (a, b) = (ia * inv_p, ib * inv_p);
                    m = m.add(Moments { a, b, aa: a * a, bb: b * b, ab: a * b });
                }
                Ok(m)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(chunks.into_iter().fold(Moments::default(), Moments::add).estimate(samples))
}

/// Checks that Lebesgue measure in exponential coordinates is invariant:
/// estimates `∫ f(a·x) dx / ∫ f(x) dx − 1` (or `x·a` for the right side),
/// using the real part of `f`.
pub fn haar_invariance_check(
    basis: &LayeredBasis,
    f: &SchwartzFunction,
    a: &GradedElement,
    side: Side,
    samples: usize,
    rng: &mut impl Rng,
) -> Result<HaarEstimate> {
    f.check_dim(basis)?;
    estimate(f, samples, rng, |x| {
        let g = exp_coords(basis, x)?;
        let moved = match side {
            Side::Left => a.mul(&g)?,
            Side::Right => g.mul(a)?,
        };
        Ok((f.eval(&log_coords(basis, &moved)?).re, f.eval(x).re))
    })
}

/// Compares `∫ f(γ(α)) dα` with `∫ f(exp x) dx` for the Malcev basis
/// coordinates of the second kind.
pub fn gamma_pushforward_check(basis: &LayeredBasis, f: &SchwartzFunction, samples: usize, rng: &mut impl Rng) -> Result<HaarEstimate> {
    f.check_dim(basis)?;
    let chart = MalcevChart::identity(basis);
    estimate(f, samples, rng, |alpha| {
        let g = chart.gamma(basis, alpha)?;
        Ok((f.eval(&log_coords(basis, &g)?).re, f.eval(alpha).re))
    })
}
