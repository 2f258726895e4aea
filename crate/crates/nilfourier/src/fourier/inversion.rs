use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::chart::MalcevChart;
use super::kernel::Engine;
use super::{tensor_grid, thread_pool, trapezoid, QuadratureSpec, SchwartzFunction};
use crate::coadjoint::{is_generic, jump_sets, Functional};
use crate::error::{Error, Result};
use crate::lie_basis::LayeredBasis;
use crate::linalg::pfaffian;
use crate::polarization::polarization_for;
use crate::tensor_algebra::GradedElement;

const NEGATIVE_DET_TOL: f64 = 1e-10;
const SAME_CHART_TOL: f64 = 1e-12;

/// `(2π)^{−(n − |S|/2)}`, the normalization of the inversion and Plancherel
/// integrals.
pub fn c_norm(n: usize, s_len: usize) -> f64 {
    (2.0 * PI).powf(-(n as f64 - s_len as f64 / 2.0))
}

/// `D(ℓ)_{is} = ℓ([X_{j_i}, X_{j_s}])` over the flat indices `s`.
pub fn d_matrix(basis: &LayeredBasis, ell: &Functional, s: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(s.len(), s.len(), |i, j| ell.on_bracket(basis, s[i], s[j]))
}

/// `√det D(ℓ)` as the absolute Pfaffian.
pub fn sqrt_det_d(basis: &LayeredBasis, ell: &Functional, s: &[usize]) -> Result<f64> {
    let d = d_matrix(basis, ell, s);
    let scale = d.amax();
    if s.is_empty() || scale == 0.0 {
        return Ok(if s.is_empty() { 1.0 } else { 0.0 });
    }
    let det = d.clone().determinant();
    if det < -NEGATIVE_DET_TOL * scale.powi(s.len() as i32) {
        return Err(Error::NegativeDeterminant(det));
    }
    Ok(pfaffian(&d).abs())
}

/// Malcev chart over the polarization used for `ℓ`.
pub fn chart_for(basis: &LayeredBasis, ell: &Functional) -> Result<MalcevChart> {
    MalcevChart::from_subalgebra(basis, &polarization_for(basis, ell)?)
}

/// Tensor trapezoid nodes on the T-plane, as flat-index coordinates.
pub fn t_plane_nodes(basis: &LayeredBasis, nodes: usize, half_width: f64) -> (Vec<usize>, Vec<Vec<f64>>, Vec<f64>) {
    let t = jump_sets(basis).t_flat(basis);
    let axis = trapezoid(-half_width, half_width, nodes);
    let (pts, w) = tensor_grid(&vec![axis; t.len()]);
    (t, pts, w)
}

struct PlanePoint {
    ell: Functional,
    sqrt_det: f64,
    chart: usize,
}

/// Tensor grid on the T-plane. Generic nodes carry a `PlanePoint`; the
/// integrand at a non-generic node is filled in from its neighbours.
struct Plane {
    points: Vec<PlanePoint>,
    /// For each grid node, the index of its point when it is generic.
    node_point: Vec<Option<usize>>,
    weights: Vec<f64>,
    axes: usize,
    nodes: usize,
    charts: Vec<MalcevChart>,
    c_norm: f64,
}

impl Plane {
    fn skipped(&self) -> usize {
        self.node_point.iter().filter(|p| p.is_none()).count()
    }

    /// `Σ w_node Φ(node)` with `Φ` given on the generic points. A node on the
    /// null set of non-generic functionals takes the mean of `Φ` at its two
    /// neighbours along some axis where both are generic, which keeps the
    /// trapezoid rule second order; nodes without such a pair contribute 0.
    fn integrate(&self, values: &[Complex64]) -> (Complex64, usize) {
        let mut total = Complex64::new(0.0, 0.0);
        let mut filled = 0;
        for (node, (slot, w)) in self.node_point.iter().zip(&self.weights).enumerate() {
            match slot {
                Some(p) => total += values[*p] * w,
                None => {
                    if let Some(v) = self.neighbour_mean(node, values) {
                        total += v * w;
                        filled += 1;
                    }
                }
            }
        }
        (total, filled)
    }

    fn neighbour_mean(&self, node: usize, values: &[Complex64]) -> Option<Complex64> {
        let mut stride = 1;
        for _ in 0..self.axes {
            let i = (node / stride) % self.nodes;
            if i > 0 && i + 1 < self.nodes {
                if let (Some(a), Some(b)) = (self.node_point[node - stride], self.node_point[node + stride]) {
                    return Some((values[a] + values[b]) * 0.5);
                }
            }
            stride *= self.nodes;
        }
        None
    }
}

fn plane(basis: &LayeredBasis, q: &QuadratureSpec, nodes: usize) -> Result<Plane> {
    let jumps = jump_sets(basis);
    let s = jumps.s_flat(basis);
    let (t, pts, weights) = t_plane_nodes(basis, nodes, q.t_half_width);
    let mut charts: Vec<MalcevChart> = Vec::new();
    let mut points = Vec::new();
    let mut node_point = Vec::with_capacity(pts.len());
    for p in &pts {
        let mut coords = vec![0.0; basis.dim()];
        for (&j, &v) in t.iter().zip(p) {
            coords[j] = v;
        }
        let ell = Functional::new(basis, coords)?;
        if !is_generic(basis, &ell)? {
            node_point.push(None);
            continue;
        }
        let chart = chart_for(basis, &ell)?;
        let id = match charts.iter().position(|c| (c.matrix() - chart.matrix()).amax() <= SAME_CHART_TOL) {
            Some(id) => id,
            None => {
                charts.push(chart);
                charts.len() - 1
            }
        };
        let sqrt_det = sqrt_det_d(basis, &ell, &s)?;
        node_point.push(Some(points.len()));
        points.push(PlanePoint { ell, sqrt_det, chart: id });
    }
    Ok(Plane { points, node_point, weights, axes: t.len(), nodes, charts, c_norm: c_norm(basis.dim(), s.len()) })
}

fn invert_at_resolution(
    basis: &LayeredBasis,
    f: &SchwartzFunction,
    x: &GradedElement,
    q: &QuadratureSpec,
    nodes: usize,
) -> Result<(Complex64, Plane, usize)> {
    let plane = plane(basis, q, nodes)?;
    let engines = plane.charts.iter().map(|c| Engine::new(basis, f, c.clone(), q)).collect::<Result<Vec<_>>>()?;
    let prepared = engines
        .iter()
        .map(|e| {
            let (s_x, log_h_x) = e.split(x)?;
            Ok((e.row(&s_x)?, log_h_x))
        })
        .collect::<Result<Vec<_>>>()?;
    let values = thread_pool()?.install(|| {
        plane
            .points
            .par_iter()
            .map(|p| {
                let (row, log_h_x) = &prepared[p.chart];
                Ok(engines[p.chart].trace_with_row(&p.ell, row, log_h_x, q)? * p.sqrt_det)
            })
            .collect::<Result<Vec<Complex64>>>()
    })?;
    let (total, filled) = plane.integrate(&values);
    Ok((total * plane.c_norm, plane, filled))
}

#[derive(Clone, Debug, Serialize)]
pub struct InversionReport {
    pub value: [f64; 2],
    /// Value with doubled T-plane nodes, when the convergence check ran.
    pub refined: Option<[f64; 2]>,
    pub t_nodes: usize,
    pub generic_nodes: usize,
    /// Nodes on the non-generic null set.
    pub skipped_nodes: usize,
    /// Skipped nodes whose integrand was interpolated from neighbours.
    pub filled_nodes: usize,
    pub charts: usize,
    pub c_norm: f64,
    pub seconds: f64,
}

impl InversionReport {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.value[0], self.value[1])
    }
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

/// Reconstructs `f(x)` from the shifted traces of `π_ℓ(f)` over the T-plane:
/// `c_norm ∫ √det D(ℓ) Tr(…) dℓ`.
pub fn invert(basis: &LayeredBasis, f: &SchwartzFunction, x: &GradedElement, q: &QuadratureSpec) -> Result<InversionReport> {
    let start = Instant::now();
    let (value, plane, filled) = invert_at_resolution(basis, f, x, q, q.t_nodes)?;
    let refined = if q.check_convergence {
        let (fine, _, _) = invert_at_resolution(basis, f, x, q, 2 * q.t_nodes)?;
        let tol = q.convergence_tol * f.peak();
        if (fine - value).norm() > tol {
            return Err(Error::NonConvergence { coarse: value.re, fine: fine.re, tol });
        }
        Some(pair(fine))
    } else {
        None
    };
    Ok(InversionReport {
        value: pair(value),
        refined,
        t_nodes: q.t_nodes,
        generic_nodes: plane.points.len(),
        skipped_nodes: plane.skipped(),
        filled_nodes: filled,
        charts: plane.charts.len(),
        c_norm: plane.c_norm,
        seconds: start.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PlancherelReport {
    /// `‖f‖²` by direct quadrature in exponential coordinates.
    pub lhs: f64,
    /// `c_norm ∫ √det D(ℓ) ‖π_ℓ(f)‖²_HS dℓ`.
    pub rhs: f64,
    pub ratio: f64,
    pub refined_rhs: Option<f64>,
    pub seconds: f64,
}

fn direct_norm_sq(f: &SchwartzFunction, nodes: usize) -> f64 {
    let axes: Vec<Vec<(f64, f64)>> = f.decay_box().iter().map(|&b| trapezoid(-b, b, nodes)).collect();
    let Some((first, rest)) = axes.split_first() else {
        return f.eval(&[]).norm_sqr();
    };
    let (pts, ws) = tensor_grid(rest);
    let partial: Vec<f64> = first
        .par_iter()
        .map(|&(x0, w0)| {
            let mut p = vec![0.0; axes.len()];
            p[0] = x0;
            let mut acc = 0.0;
            for (pt, w) in pts.iter().zip(&ws) {
                p[1..].copy_from_slice(pt);
                acc += w * f.eval(&p).norm_sqr();
            }
            w0 * acc
        })
        .collect();
    partial.iter().sum()
}

fn plancherel_rhs(basis: &LayeredBasis, f: &SchwartzFunction, q: &QuadratureSpec, nodes: usize) -> Result<f64> {
    let plane = plane(basis, q, nodes)?;
    let engines = plane.charts.iter().map(|c| Engine::new(basis, f, c.clone(), q)).collect::<Result<Vec<_>>>()?;
    thread_pool()?.install(|| {
        let rel = engines.iter().map(|e| e.relative_rows(q)).collect::<Result<Vec<_>>>()?;
        let values = plane
            .points
            .par_iter()
            .map(|p| Ok(Complex64::new(engines[p.chart].hs_with_rows(&p.ell, &rel[p.chart], q)? * p.sqrt_det, 0.0)))
            .collect::<Result<Vec<Complex64>>>()?;
        Ok(plane.integrate(&values).0.re * plane.c_norm)
    })
}

/// Both sides of the Plancherel identity `‖f‖² = c_norm ∫ √det D(ℓ) ‖π_ℓ(f)‖²_HS dℓ`.
pub fn plancherel(basis: &LayeredBasis, f: &SchwartzFunction, q: &QuadratureSpec) -> Result<PlancherelReport> {
    q.validate()?;
    f.check_dim(basis)?;
    let start = Instant::now();
    let lhs = thread_pool()?.install(|| direct_norm_sq(f, q.direct_nodes));
    let rhs = plancherel_rhs(basis, f, q, q.t_nodes)?;
    let refined_rhs = if q.check_convergence {
        let fine = plancherel_rhs(basis, f, q, 2 * q.t_nodes)?;
        let tol = q.convergence_tol * lhs;
        if (fine - rhs).abs() > tol {
            return Err(Error::NonConvergence { coarse: rhs, fine, tol });
        }
        Some(fine)
    } else {
        None
    };
    let ratio = if lhs == 0.0 {
        if rhs == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        rhs / lhs
    };
    Ok(PlancherelReport { lhs, rhs, ratio, refined_rhs, seconds: start.elapsed().as_secs_f64() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie_basis::GroupSpec;

    #[test]
    fn heisenberg_weight_is_abs_lambda() {
        let b = LayeredBasis::lyndon(GroupSpec::new(2, 2).unwrap()).unwrap();
        let s = jump_sets(&b).s_flat(&b);
        for lambda in [-2.5, 0.3, 1.0] {
            let ell = Functional::from_triples(&b, &[(2, 1, lambda)]).unwrap();
            assert!((sqrt_det_d(&b, &ell, &s).unwrap() - lambda.abs()).abs() < 1e-14);
        }
        assert_eq!(sqrt_det_d(&b, &Functional::zero(&b), &s).unwrap(), 0.0);
    }

    #[test]
    fn normalization_exponent() {
        assert!((c_norm(3, 2) - (2.0 * PI).powi(-2)).abs() < 1e-16);
        assert!((c_norm(14, 6) - (2.0 * PI).powi(-11)).abs() < 1e-22);
    }
}
