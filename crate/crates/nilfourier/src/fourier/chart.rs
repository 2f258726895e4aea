use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lie_basis::LayeredBasis;
use crate::polarization::Subalgebra;
use crate::tensor_algebra::GradedElement;

const PIVOT_TOL: f64 = 1e-10;
const IDEAL_TOL: f64 = 1e-9;

pub(crate) fn exp_coords(basis: &LayeredBasis, x: &[f64]) -> Result<GradedElement> {
    basis.to_algebra(x)?.exp_t()
}

pub(crate) fn log_coords(basis: &LayeredBasis, g: &GradedElement) -> Result<Vec<f64>> {
    basis.coords_of(&g.log_t()?)
}

/// Malcev basis `Y_1, …, Y_n` whose first `q_h` vectors span a subalgebra h.
///
/// The h-vectors are the reduced row echelon form of h with pivots taken in
/// Malcev order; the remaining vectors are the unused basis elements. Every
/// prefix span is checked to be an ideal, and `|det C| = 1`, so Lebesgue
/// measure in chart coordinates is Haar measure.
#[derive(Clone, Debug, PartialEq)]
pub struct MalcevChart {
    c: DMatrix<f64>,
    c_inv: DMatrix<f64>,
    q_h: usize,
}

impl MalcevChart {
    /// The Malcev basis itself, with trivial h.
    pub fn identity(basis: &LayeredBasis) -> Self {
        let n = basis.dim();
        MalcevChart { c: DMatrix::identity(n, n), c_inv: DMatrix::identity(n, n), q_h: 0 }
    }

    pub fn from_subalgebra(basis: &LayeredBasis, h: &Subalgebra) -> Result<Self> {
        let n = basis.dim();
        if h.vectors().nrows() != n {
            return Err(Error::DimensionMismatch(format!("subalgebra in {} coordinates, group has {n}", h.vectors().nrows())));
        }
        let mut rows = h.vectors().transpose();
        let q_h = rows.nrows();
        let scale = rows.amax().max(1.0);
        let mut pivots = Vec::with_capacity(q_h);
        for col in 0..n {
            let r0 = pivots.len();
            if r0 == q_h {
                break;
            }
            let (best, val) = (r0..q_h).map(|r| (r, rows[(r, col)].abs())).fold((r0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
            if val <= PIVOT_TOL * scale {
                continue;
            }
            rows.swap_rows(r0, best);
            let p = rows[(r0, col)];
            for c in 0..n {
                rows[(r0, c)] /= p;
            }
            for r in 0..q_h {
                if r != r0 {
                    let factor = rows[(r, col)];
                    if factor != 0.0 {
                        for c in 0..n {
                            rows[(r, c)] -= factor * rows[(r0, c)];
                        }
                        rows[(r, col)] = 0.0;
                    }
                }
            }
            pivots.push(col);
        }
        if pivots.len() < q_h {
            return Err(Error::ChartNotMalcev("subalgebra vectors are dependent".into()));
        }
        let mut c = DMatrix::zeros(n, n);
        for i in 0..q_h {
            for j in 0..n {
                c[(j, i)] = rows[(i, j)];
            }
        }
        for (col, j) in (q_h..).zip((0..n).filter(|j| !pivots.contains(j))) {
            c[(j, col)] = 1.0;
        }
        let c_inv = c.clone().try_inverse().ok_or_else(|| Error::ChartNotMalcev("singular chart".into()))?;
        let chart = MalcevChart { c, c_inv, q_h };
        chart.check_prefix_ideals(basis)?;
        Ok(chart)
    }

    fn check_prefix_ideals(&self, basis: &LayeredBasis) -> Result<()> {
        let n = self.dim();
        for i in 0..n {
            let y = self.vector(i);
            for a in 0..n {
                let mut e = vec![0.0; n];
                e[a] = 1.0;
                let br = basis.bracket(&e, &y);
                let coeffs = &self.c_inv * DVector::from_vec(br.clone());
                let size = br.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
                // [X_a, Y_i] must lie in span(Y_1..Y_i) so every prefix is an ideal.
                let leak = coeffs.iter().skip(i + 1).map(|v| v.abs()).fold(0.0, f64::max);
                if leak > IDEAL_TOL * size {
                    return Err(Error::ChartNotMalcev(format!("[{}, Y_{}] leaves the prefix span by {leak:.3e}", basis.label(a), i + 1)));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.c.ncols()
    }

    pub fn h_dim(&self) -> usize {
        self.q_h
    }

    pub fn section_dim(&self) -> usize {
        self.dim() - self.q_h
    }

    /// Chart vectors as columns in Malcev coordinates.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.c.column(i).iter().copied().collect()
    }

    pub fn to_chart_coords(&self, x: &[f64]) -> Vec<f64> {
        (&self.c_inv * DVector::from_column_slice(x)).iter().copied().collect()
    }

    pub fn from_chart_coords(&self, a: &[f64]) -> Vec<f64> {
        (&self.c * DVector::from_column_slice(a)).iter().copied().collect()
    }

    /// Values `ℓ(Y_i)` on the chart vectors.
    pub fn functional_on_vectors(&self, ell: &[f64]) -> Vec<f64> {
        (self.c.transpose() * DVector::from_column_slice(ell)).iter().copied().collect()
    }

    fn ordered_product(&self, basis: &LayeredBasis, alpha: &[f64], range: std::ops::Range<usize>) -> Result<GradedElement> {
        let mut g = GradedElement::one(basis.spec());
        for i in range.rev() {
            if alpha[i] != 0.0 {
                let y: Vec<f64> = self.c.column(i).iter().map(|v| v * alpha[i]).collect();
                g = g.mul(&exp_coords(basis, &y)?)?;
            }
        }
        Ok(g)
    }

    /// `γ(α) = exp(α_n Y_n) ··· exp(α_1 Y_1)`.
    pub fn gamma(&self, basis: &LayeredBasis, alpha: &[f64]) -> Result<GradedElement> {
        self.check_len(alpha.len(), self.dim())?;
        self.ordered_product(basis, alpha, 0..self.dim())
    }

    /// The section `σ(s) = exp(s_q Y_n) ··· exp(s_1 Y_{q_h+1})`.
    pub fn section(&self, basis: &LayeredBasis, s: &[f64]) -> Result<GradedElement> {
        self.check_len(s.len(), self.section_dim())?;
        let mut alpha = vec![0.0; self.dim()];
        alpha[self.q_h..].copy_from_slice(s);
        self.ordered_product(basis, &alpha, self.q_h..self.dim())
    }

    /// `γ` restricted to the h-coordinates; lands in `H = exp(h)`.
    pub fn h_gamma(&self, basis: &LayeredBasis, t: &[f64]) -> Result<GradedElement> {
        self.check_len(t.len(), self.q_h)?;
        let mut alpha = vec![0.0; self.dim()];
        alpha[..self.q_h].copy_from_slice(t);
        self.ordered_product(basis, &alpha, 0..self.q_h)
    }

    /// `exp(Σ t_i Y_i)` over the h-vectors.
    pub fn h_exp(&self, basis: &LayeredBasis, t: &[f64]) -> Result<GradedElement> {
        self.check_len(t.len(), self.q_h)?;
        let x = self.c.columns(0, self.q_h) * DVector::from_column_slice(t);
        exp_coords(basis, x.as_slice())
    }

    /// Inverse of `γ`, peeling one factor at a time from the left.
    pub fn gamma_coordinates(&self, basis: &LayeredBasis, g: &GradedElement) -> Result<Vec<f64>> {
        let n = self.dim();
        let mut alpha = vec![0.0; n];
        let mut rest = g.clone();
        for i in (0..n).rev() {
            let a = self.to_chart_coords(&log_coords(basis, &rest)?);
            alpha[i] = a[i];
            if alpha[i] != 0.0 {
                let y: Vec<f64> = self.c.column(i).iter().map(|v| -v * alpha[i]).collect();
                rest = exp_coords(basis, &y)?.mul(&rest)?;
            }
        }
        Ok(alpha)
    }

    /// Splits `g = σ(s)·h` with `h ∈ H`.
    pub fn decompose(&self, basis: &LayeredBasis, g: &GradedElement) -> Result<(Vec<f64>, GradedElement)> {
        let alpha = self.gamma_coordinates(basis, g)?;
        let s = alpha[self.q_h..].to_vec();
        let h = self.section(basis, &s)?.group_inverse()?.mul(g)?;
        Ok((s, h))
    }

    fn check_len(&self, got: usize, want: usize) -> Result<()> {
        if got != want {
            return Err(Error::DimensionMismatch(format!("expected {want} chart coordinates, got {got}")));
        }
        Ok(())
    }
}
