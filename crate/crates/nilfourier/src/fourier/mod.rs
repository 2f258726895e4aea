//! Numerical Fourier analysis on the group: Malcev charts, kernels of the
//! induced representations, traces, inversion and Plancherel.

mod chart;
mod haar;
mod inversion;
mod kernel;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie_basis::LayeredBasis;
use crate::tensor_algebra::GradedElement;

pub use chart::MalcevChart;
pub use haar::{gamma_pushforward_check, haar_invariance_check, HaarEstimate, Side};
pub use inversion::{c_norm, chart_for, d_matrix, invert, plancherel, sqrt_det_d, t_plane_nodes, InversionReport, PlancherelReport};
pub use kernel::{build_operator, character, hs_norm_sq, kernel, kernel_at, section_half_width, trace_shifted, KernelOperator};

/// Node counts and truncation bounds for every integral in the engine.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Nodes per axis of the H integral.
    pub h_nodes: usize,
    pub h_half_width: f64,
    /// Nodes per axis of section integrals (traces, operator grids).
    pub section_nodes: usize,
    /// The section box has half-width `section_offset + section_scale / |ℓ_T|`,
    /// following the `1/|ℓ|` spread of the kernel.
    pub section_offset: f64,
    pub section_scale: f64,
    /// Nodes per axis of the relative offset in Hilbert–Schmidt integrals.
    pub relative_nodes: usize,
    pub relative_half_width: f64,
    /// Nodes per axis of the T-plane.
    pub t_nodes: usize,
    pub t_half_width: f64,
    /// Nodes per axis for direct integrals over the group.
    pub direct_nodes: usize,
    /// Largest change, relative to the peak of `f`, allowed when the T-plane
    /// nodes are doubled.
    pub convergence_tol: f64,
    pub check_convergence: bool,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            h_nodes: 48,
            h_half_width: 8.0,
            section_nodes: 48,
            section_offset: 1.0,
            section_scale: 6.0,
            relative_nodes: 48,
            relative_half_width: 8.0,
            t_nodes: 64,
            t_half_width: 8.0,
            direct_nodes: 48,
            convergence_tol: 1e-3,
            check_convergence: true,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("h_nodes", self.h_nodes),
            ("section_nodes", self.section_nodes),
            ("relative_nodes", self.relative_nodes),
            ("t_nodes", self.t_nodes),
            ("direct_nodes", self.direct_nodes),
        ];
        for (name, n) in counts {
            if n < 8 {
                return Err(Error::Input(format!("{name} must be at least 8, got {n}")));
            }
        }
        let bounds = [
            ("h_half_width", self.h_half_width),
            ("section_offset", self.section_offset),
            ("section_scale", self.section_scale),
            ("relative_half_width", self.relative_half_width),
            ("t_half_width", self.t_half_width),
            ("convergence_tol", self.convergence_tol),
        ];
        for (name, b) in bounds {
            if !(b.is_finite() && b > 0.0) {
                return Err(Error::Input(format!("{name} must be positive, got {b}")));
            }
        }
        Ok(())
    }

    /// Same spec with every node count multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        QuadratureSpec {
            h_nodes: self.h_nodes * factor,
            section_nodes: self.section_nodes * factor,
            relative_nodes: self.relative_nodes * factor,
            t_nodes: self.t_nodes * factor,
            direct_nodes: self.direct_nodes * factor,
            ..self.clone()
        }
    }
}

type Evaluator = dyn Fn(&[f64]) -> Complex64 + Send + Sync;

/// A rapidly decaying function on the group, given in exponential
/// coordinates (Malcev order).
#[derive(Clone)]
pub struct SchwartzFunction {
    eval: Arc<Evaluator>,
    decay_box: Vec<f64>,
    peak: f64,
}

impl fmt::Debug for SchwartzFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SchwartzFunction").field("decay_box", &self.decay_box).field("peak", &self.peak).finish()
    }
}

impl SchwartzFunction {
    /// `decay_box` holds per-coordinate half-widths outside of which `f` is
    /// negligible; `peak` is `max |f|`.
    pub fn new(eval: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static, decay_box: Vec<f64>, peak: f64) -> Self {
        SchwartzFunction { eval: Arc::new(eval), decay_box, peak }
    }

    /// `exp(−Σ (x_i − c_i)² / 2w_i²)`, with an 8-width decay box.
    pub fn gaussian(widths: Vec<f64>, centre: Vec<f64>) -> Result<Self> {
        if widths.len() != centre.len() || widths.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Input("gaussian needs positive widths matching the centre".into()));
        }
        let decay_box = widths.iter().zip(&centre).map(|(w, c)| c.abs() + 8.0 * w).collect();
        let (w, c) = (widths.clone(), centre);
        let eval = move |x: &[f64]| {
            let e: f64 = x.iter().zip(&w).zip(&c).map(|((x, w), c)| (x - c).powi(2) / (2.0 * w * w)).sum();
            Complex64::new((-e).exp(), 0.0)
        };
        Ok(SchwartzFunction::new(eval, decay_box, 1.0))
    }

    pub fn dim(&self) -> usize {
        self.decay_box.len()
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        (self.eval)(x)
    }

    /// Evaluates at a group element through its exponential coordinates.
    pub fn eval_at(&self, basis: &LayeredBasis, g: &GradedElement) -> Result<Complex64> {
        Ok(self.eval(&chart::log_coords(basis, g)?))
    }

    pub fn decay_box(&self) -> &[f64] {
        &self.decay_box
    }

    pub fn peak(&self) -> f64 {
        self.peak
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let inner = self.eval.clone();
        SchwartzFunction {
            eval: Arc::new(move |x: &[f64]| factor * inner(x)),
            decay_box: self.decay_box.clone(),
            peak: self.peak * factor.norm(),
        }
    }

    /// Spot check of the decay claim at face centres and corners of the box.
    pub fn decays_on_box(&self) -> bool {
        let n = self.dim();
        let limit = 1e-12 * self.peak;
        let mut points = Vec::new();
        for i in 0..n {
            for sign in [-1.0, 1.0] {
                let mut p = vec![0.0; n];
                p[i] = sign * self.decay_box[i];
                points.push(p);
            }
        }
        if n <= 12 {
            for mask in 0..(1usize << n) {
                points.push((0..n).map(|i| if mask >> i & 1 == 1 { self.decay_box[i] } else { -self.decay_box[i] }).collect());
            }
        }
        points.iter().all(|p| self.eval(p).norm() <= limit)
    }

    pub(crate) fn check_dim(&self, basis: &LayeredBasis) -> Result<()> {
        if self.dim() != basis.dim() {
            return Err(Error::DimensionMismatch(format!(
                "function on {} coordinates used with a {}-dimensional group",
                self.dim(),
                basis.dim()
            )));
        }
        Ok(())
    }
}

/// Trapezoid nodes and weights on `[a, b]`.
pub fn trapezoid(a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    let h = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| {
            let w = if i == 0 || i == n - 1 { h / 2.0 } else { h };
            (a + i as f64 * h, w)
        })
        .collect()
}

/// Tensor product of one-dimensional rules, first axis slowest.
pub fn tensor_grid(axes: &[Vec<(f64, f64)>]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut nodes = vec![Vec::new()];
    let mut weights = vec![1.0];
    for axis in axes {
        let mut next_nodes = Vec::with_capacity(nodes.len() * axis.len());
        let mut next_weights = Vec::with_capacity(nodes.len() * axis.len());
        for (p, w) in nodes.iter().zip(&weights) {
            for &(x, wx) in axis {
                let mut q = p.clone();
                q.push(x);
                next_nodes.push(q);
                next_weights.push(w * wx);
            }
        }
        nodes = next_nodes;
        weights = next_weights;
    }
    (nodes, weights)
}

/// Thread pool honouring `NILFOURIER_THREADS`.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var("NILFOURIER_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        builder = builder.num_threads(n.max(1));
    }
    builder.build().map_err(|e| Error::Numerical(e.to_string()))
}
