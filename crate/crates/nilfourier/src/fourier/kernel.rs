use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::chart::{log_coords, MalcevChart};
use super::{tensor_grid, trapezoid, QuadratureSpec, SchwartzFunction};
use crate::coadjoint::{coadjoint_apply_coords, jump_sets, Functional};
use crate::error::{Error, Result};
use crate::lie_basis::LayeredBasis;
use crate::tensor_algebra::GradedElement;

const UNDERFLOW_RATIO: f64 = 1e-6;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `χ_ℓ(γ(t)) = e^{iℓ(log γ(t))}` for `t` in the h-coordinates of the chart.
pub fn character(basis: &LayeredBasis, ell: &Functional, chart: &MalcevChart, h_coords: &[f64]) -> Result<Complex64> {
    let g = chart.h_gamma(basis, h_coords)?;
    Ok(Complex64::cis(ell.eval(&log_coords(basis, &g)?)))
}

/// Half-width `offset + scale/|ℓ_T|` of the section box; the kernel of
/// `π_ℓ(f)` spreads like `1/|ℓ|` along the section.
pub fn section_half_width(basis: &LayeredBasis, ell: &Functional, q: &QuadratureSpec) -> Result<f64> {
    let t = jump_sets(basis).t_flat(basis);
    let norm_t = t.iter().map(|&j| ell.coords()[j].powi(2)).sum::<f64>().sqrt();
    let norm = if norm_t > 0.0 { norm_t } else { ell.coords().iter().map(|v| v * v).sum::<f64>().sqrt() };
    if norm == 0.0 {
        return Err(Error::Input("section box is unbounded for the zero functional".into()));
    }
    Ok(q.section_offset + q.section_scale / norm)
}

fn box_grid(dim: usize, half: f64, nodes: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let axis = trapezoid(-half, half, nodes);
    tensor_grid(&vec![axis; dim])
}

/// Quadrature over H for a fixed chart and function.
///
/// Everything downstream goes through
/// `J(s, ℓ') = ∫_H f(σ(s)·h) χ_ℓ'(h) dh`, evaluated as a weighted sum over a
/// tensor grid in the exponential coordinates of H. The f-values on that
/// grid ("rows") do not depend on ℓ and are shared across functionals.
pub(crate) struct Engine<'a> {
    basis: &'a LayeredBasis,
    f: &'a SchwartzFunction,
    chart: MalcevChart,
    axis: Vec<f64>,
    weights: Vec<f64>,
    elements: Vec<GradedElement>,
    boundary: Vec<bool>,
    quotient_abelian: bool,
}

impl<'a> Engine<'a> {
    pub(crate) fn new(basis: &'a LayeredBasis, f: &'a SchwartzFunction, chart: MalcevChart, q: &QuadratureSpec) -> Result<Self> {
        q.validate()?;
        f.check_dim(basis)?;
        if chart.dim() != basis.dim() {
            return Err(Error::DimensionMismatch("chart and basis differ in dimension".into()));
        }
        let half = q.h_half_width;
        let axis: Vec<f64> = trapezoid(-half, half, q.h_nodes).into_iter().map(|(x, _)| x).collect();
        let (nodes, weights) = box_grid(chart.h_dim(), half, q.h_nodes);
        let elements = nodes.iter().map(|t| chart.h_exp(basis, t)).collect::<Result<Vec<_>>>()?;
        let boundary = nodes.iter().map(|t| t.iter().any(|v| v.abs() >= half * (1.0 - 1e-12))).collect();
        let quotient_abelian = Self::derived_in_h(basis, &chart);
        Ok(Engine { basis, f, chart, axis, weights, elements, boundary, quotient_abelian })
    }

    fn derived_in_h(basis: &LayeredBasis, chart: &MalcevChart) -> bool {
        basis.structure_table().values().flatten().all(|&(target, _)| {
            let mut e = vec![0.0; basis.dim()];
            e[target] = 1.0;
            chart.to_chart_coords(&e)[chart.h_dim()..].iter().all(|v| v.abs() < 1e-12)
        })
    }

    /// Weighted values `w_v f(σ(s)·h_v)` over the H grid.
    pub(crate) fn row(&self, s: &[f64]) -> Result<Vec<Complex64>> {
        let sigma = self.chart.section(self.basis, s)?;
        let mut out = Vec::with_capacity(self.elements.len());
        let mut edge: f64 = 0.0;
        for ((h, w), &on_edge) in self.elements.iter().zip(&self.weights).zip(&self.boundary) {
            let v = self.f.eval(&log_coords(self.basis, &sigma.mul(h)?)?);
            if on_edge {
                edge = edge.max(v.norm());
            }
            out.push(v * *w);
        }
        let peak = self.f.peak();
        if peak > 0.0 && edge > UNDERFLOW_RATIO * peak {
            return Err(Error::QuadratureUnderflow { ratio: edge / peak });
        }
        Ok(out)
    }

    /// `J(s, ℓ')` from a precomputed row, with `ell_on_h[i] = ℓ'(Y_i)`.
    ///
    /// The phase `e^{iΣ t_i ℓ'(Y_i)}` factors over the tensor grid, so the sum
    /// is contracted one axis at a time, last axis first.
    pub(crate) fn integrate_row(&self, row: &[Complex64], ell_on_h: &[f64]) -> Complex64 {
        let m = self.axis.len();
        let mut current = row.to_vec();
        for &freq in ell_on_h.iter().rev() {
            let phases: Vec<Complex64> = self.axis.iter().map(|t| Complex64::cis(t * freq)).collect();
            current = current.chunks(m).map(|block| block.iter().zip(&phases).map(|(r, p)| r * p).sum()).collect();
        }
        current[0]
    }

    /// `ℓ_y = ℓ ∘ Ad(σ(y)⁻¹)` in Malcev coordinates.
    pub(crate) fn twisted(&self, ell: &Functional, y: &[f64]) -> Result<Vec<f64>> {
        let log_sigma = log_coords(self.basis, &self.chart.section(self.basis, y)?)?;
        Ok(coadjoint_apply_coords(self.basis, &log_sigma, ell))
    }

    fn on_h(&self, ell: &[f64]) -> Vec<f64> {
        self.chart.functional_on_vectors(ell)[..self.chart.h_dim()].to_vec()
    }

    /// `K(g, σ(y)) = ∫_H f(g u σ(y)⁻¹) χ_ℓ(u) du`.
    ///
    /// Substituting `u = σ(y)⁻¹ h σ(y)` and splitting `g σ(y)⁻¹ = σ(s) h_s`
    /// gives `χ_{ℓ_y}(h_s)⁻¹ J(s, ℓ_y)`, which keeps the H grid centred.
    pub(crate) fn kernel_at(&self, ell: &Functional, g: &GradedElement, y: &[f64]) -> Result<Complex64> {
        let sigma_y = self.chart.section(self.basis, y)?;
        let (s, h_s) = self.chart.decompose(self.basis, &g.mul(&sigma_y.group_inverse()?)?)?;
        let ell_y = self.twisted(ell, y)?;
        let twist = Complex64::cis(-dot(&ell_y, &log_coords(self.basis, &h_s)?));
        Ok(twist * self.integrate_row(&self.row(&s)?, &self.on_h(&ell_y)))
    }

    /// Split of `x = σ(s_x) h_x` with `log h_x`, needed by the shifted trace.
    pub(crate) fn split(&self, x: &GradedElement) -> Result<(Vec<f64>, Vec<f64>)> {
        let (s, h) = self.chart.decompose(self.basis, x)?;
        Ok((s, log_coords(self.basis, &h)?))
    }

    /// `∫ K(x σ(y), σ(y)) dy = ∫ χ_{ℓ_y}(h_x)⁻¹ J(s_x, ℓ_y) dy`.
    pub(crate) fn trace_with_row(&self, ell: &Functional, row: &[Complex64], log_h_x: &[f64], q: &QuadratureSpec) -> Result<Complex64> {
        let half = section_half_width(self.basis, ell, q)?;
        let (ys, wy) = box_grid(self.chart.section_dim(), half, q.section_nodes);
        let mut total = Complex64::new(0.0, 0.0);
        for (y, w) in ys.iter().zip(&wy) {
            let ell_y = self.twisted(ell, y)?;
            let twist = Complex64::cis(-dot(&ell_y, log_h_x));
            total += twist * self.integrate_row(row, &self.on_h(&ell_y)) * *w;
        }
        Ok(total)
    }

    /// Relative offsets `w` and their rows, for Hilbert–Schmidt norms.
    pub(crate) fn relative_rows(&self, q: &QuadratureSpec) -> Result<RelativeRows> {
        let (ws, weights) = box_grid(self.chart.section_dim(), q.relative_half_width, q.relative_nodes);
        let rows = ws.par_iter().map(|w| self.row(w)).collect::<Result<Vec<_>>>()?;
        Ok(RelativeRows { ws, weights, rows })
    }

    /// `∫∫ |K(σ(x), σ(y))|² dx dy` with `σ(x)H = σ(y)σ(w)H`, so the inner
    /// integral runs over the offset `w` and `|K| = |J(s, ℓ_y)|` where
    /// `σ(y)σ(w)σ(y)⁻¹ = σ(s)h`.
    pub(crate) fn hs_with_rows(&self, ell: &Functional, rel: &RelativeRows, q: &QuadratureSpec) -> Result<f64> {
        let half = section_half_width(self.basis, ell, q)?;
        let (ys, wy) = box_grid(self.chart.section_dim(), half, q.section_nodes);
        let mut total = 0.0;
        for (y, wy) in ys.iter().zip(&wy) {
            let ell_y = self.twisted(ell, y)?;
            let on_h = self.on_h(&ell_y);
            let sigma_y = self.chart.section(self.basis, y)?;
            let sigma_y_inv = sigma_y.group_inverse()?;
            let mut inner = 0.0;
            for ((w, ww), row) in rel.ws.iter().zip(&rel.weights).zip(&rel.rows) {
                let j = if self.quotient_abelian {
                    self.integrate_row(row, &on_h)
                } else {
                    let conj = sigma_y.mul(&self.chart.section(self.basis, w)?)?.mul(&sigma_y_inv)?;
                    let (s, _) = self.chart.decompose(self.basis, &conj)?;
                    self.integrate_row(&self.row(&s)?, &on_h)
                };
                inner += ww * j.norm_sqr();
            }
            total += wy * inner;
        }
        Ok(total)
    }
}

pub(crate) struct RelativeRows {
    ws: Vec<Vec<f64>>,
    weights: Vec<f64>,
    rows: Vec<Vec<Complex64>>,
}

/// Kernel of `π_ℓ(f)` at section points `x`, `y`.
pub fn kernel(
    basis: &LayeredBasis,
    f: &SchwartzFunction,
    ell: &Functional,
    chart: &MalcevChart,
    q: &QuadratureSpec,
    x: &[f64],
    y: &[f64],
) -> Result<Complex64> {
    let g = chart.section(basis, x)?;
    kernel_at(basis, f, ell, chart, q, &g, y)
}

/// Kernel with an arbitrary group element as first argument.
pub fn kernel_at(
    basis: &LayeredBasis,
    f: &SchwartzFunction,
    ell: &Functional,
    chart: &MalcevChart,
    q: &QuadratureSpec,
    g: &GradedElement,
    y: &[f64],
) -> Result<Complex64> {
    Engine::new(basis, f, chart.clone(), q)?.kernel_at(ell, g, y)
}

/// `∫ K(x σ(y), σ(y)) dy`, the trace of `π_ℓ(f) π_ℓ(x)`-type shifted operator
/// that enters the inversion formula.
pub fn trace_shifted(
    basis: &LayeredBasis,
    f: &SchwartzFunction,
    ell: &Functional,
    chart: &MalcevChart,
    q: &QuadratureSpec,
    x: &GradedElement,
) -> Result<Complex64> {
    let engine = Engine::new(basis, f, chart.clone(), q)?;
    let (s_x, log_h_x) = engine.split(x)?;
    engine.trace_with_row(ell, &engine.row(&s_x)?, &log_h_x, q)
}

/// `‖π_ℓ(f)‖²_HS`.
pub fn hs_norm_sq(basis: &LayeredBasis, f: &SchwartzFunction, ell: &Functional, chart: &MalcevChart, q: &QuadratureSpec) -> Result<f64> {
    let engine = Engine::new(basis, f, chart.clone(), q)?;
    let rel = engine.relative_rows(q)?;
    engine.hs_with_rows(ell, &rel, q)
}

/// `π_ℓ(f)` discretized on the section grid.
#[derive(Clone, Debug)]
pub struct KernelOperator {
    pub ell: Functional,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// `values[(a, b)] = K(x_a, y_b)`.
    pub values: DMatrix<Complex64>,
}

impl KernelOperator {
    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    pub fn trace(&self) -> Complex64 {
        self.weights.iter().enumerate().map(|(a, w)| self.values[(a, a)] * *w).sum()
    }

    pub fn hs_norm_sq(&self) -> f64 {
        let n = self.size();
        let mut total = 0.0;
        for a in 0..n {
            for b in 0..n {
                total += self.weights[a] * self.weights[b] * self.values[(a, b)].norm_sqr();
            }
        }
        total
    }

    /// `max |K(x_a, y_b) − conj K(x_b, y_a)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.size();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                worst = worst.max((self.values[(a, b)] - self.values[(b, a)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

pub fn build_operator(
    basis: &LayeredBasis,
    f: &SchwartzFunction,
    ell: &Functional,
    chart: &MalcevChart,
    q: &QuadratureSpec,
) -> Result<KernelOperator> {
    let engine = Engine::new(basis, f, chart.clone(), q)?;
    let half = section_half_width(basis, ell, q)?;
    let (nodes, weights) = box_grid(chart.section_dim(), half, q.section_nodes);
    let sections = nodes.iter().map(|x| chart.section(basis, x)).collect::<Result<Vec<_>>>()?;
    let rows: Vec<Vec<Complex64>> = sections
        .par_iter()
        .map(|g| nodes.iter().map(|y| engine.kernel_at(ell, g, y)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let n = nodes.len();
    let values = DMatrix::from_fn(n, n, |a, b| rows[a][b]);
    Ok(KernelOperator { ell: ell.clone(), nodes, weights, values })
}
