//! Maximal subordinate subalgebras (polarizations) for functionals.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::{json, Value};

use crate::coadjoint::{b_matrix, full_orbit_dim, is_generic, skew_form, Functional, RANK_TOL};
use crate::error::{Error, Result};
use crate::lie_basis::LayeredBasis;
use crate::linalg::{null_space, orthonormal_span, residual_outside};

const BRACKET_TOL: f64 = 1e-10;

/// Subspace of the Lie algebra, spanned by columns given in Malcev coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Subalgebra {
    vectors: DMatrix<f64>,
}

impl Subalgebra {
    /// Span of the given columns; dependent columns are dropped.
    pub fn from_columns(vectors: DMatrix<f64>) -> Self {
        let independent = crate::linalg::numerical_rank(&vectors, RANK_TOL) == vectors.ncols();
        let vectors = if independent { vectors } else { orthonormal_span(&vectors, RANK_TOL) };
        Subalgebra { vectors }
    }

    /// Span of basis elements given by flat Malcev indices.
    pub fn from_indices(basis: &LayeredBasis, indices: &[usize]) -> Self {
        let mut v = DMatrix::zeros(basis.dim(), indices.len());
        for (c, &j) in indices.iter().enumerate() {
            v[(j, c)] = 1.0;
        }
        Subalgebra { vectors: v }
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.vectors.column(c).iter().copied().collect()
    }

    /// Flat indices if every spanning vector is a basis element.
    pub fn unit_indices(&self) -> Option<Vec<usize>> {
        let mut out = Vec::new();
        for col in self.vectors.column_iter() {
            let nonzero: Vec<usize> = col.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i).collect();
            match nonzero.as_slice() {
                [i] if col[*i] == 1.0 => out.push(*i),
                _ => return None,
            }
        }
        out.sort_unstable();
        Some(out)
    }

    fn normalized_columns(&self) -> Vec<Vec<f64>> {
        self.vectors
            .column_iter()
            .map(|c| {
                let n = c.norm();
                c.iter().map(|v| v / n).collect()
            })
            .collect()
    }

    pub fn to_json(&self, basis: &LayeredBasis) -> Value {
        let vectors: Vec<Vec<f64>> = self.vectors.column_iter().map(|c| c.iter().copied().collect()).collect();
        let labels: Vec<String> = (0..basis.dim()).map(|j| basis.label(j)).collect();
        json!({ "dim": self.dim(), "coordinate_labels": labels, "basis_vectors": vectors })
    }
}

/// Whether `ℓ([X, Y])` vanishes on all pairs of (normalized) spanning vectors.
pub fn is_subordinate(basis: &LayeredBasis, ell: &Functional, h: &Subalgebra) -> bool {
    let cols = h.normalized_columns();
    cols.iter().enumerate().all(|(i, u)| cols[i + 1..].iter().all(|v| ell.eval(&basis.bracket(u, v)).abs() <= BRACKET_TOL))
}

/// Whether brackets of spanning vectors stay in the span.
pub fn is_bracket_closed(basis: &LayeredBasis, h: &Subalgebra) -> bool {
    let q = orthonormal_span(&h.vectors, RANK_TOL);
    let cols = h.normalized_columns();
    cols.iter().enumerate().all(|(i, u)| {
        cols[i + 1..].iter().all(|v| {
            let w = DVector::from_vec(basis.bracket(u, v));
            residual_outside(&q, &w) <= BRACKET_TOL * w.norm().max(1.0)
        })
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PolarizationReport {
    pub subordinate: bool,
    pub bracket_closed: bool,
    pub dim: usize,
    pub expected_dim: usize,
    pub pass: bool,
}

pub fn polarization_check(basis: &LayeredBasis, ell: &Functional, h: &Subalgebra) -> PolarizationReport {
    let subordinate = is_subordinate(basis, ell, h);
    let bracket_closed = is_bracket_closed(basis, h);
    let expected_dim = basis.dim() - full_orbit_dim(basis, ell) / 2;
    let dim = h.dim();
    PolarizationReport { subordinate, bracket_closed, dim, expected_dim, pass: subordinate && bracket_closed && dim == expected_dim }
}

/// Closed-form polarization for functionals in general position: the upper
/// half of the layers, plus for even N the kernels of the leading principal
/// blocks of the middle B-matrix.
pub fn generic_polarization(basis: &LayeredBasis, ell: &Functional) -> Result<Subalgebra> {
    let spec = basis.spec();
    if spec.is_degenerate() {
        return Err(Error::DegenerateSpec("use the Vergne construction".into()));
    }
    if !is_generic(basis, ell)? {
        return Err(Error::NotGeneric);
    }
    let n = spec.level;
    let upper: Vec<usize> = (n / 2 + 1..=n).flat_map(|k| basis.layer_range(k)).collect();
    let h = if n % 2 == 1 {
        let mut idx: Vec<usize> = (n.div_ceil(2)..=n).flat_map(|k| basis.layer_range(k)).collect();
        idx.sort_unstable();
        Subalgebra::from_indices(basis, &idx)
    } else {
        let k = n / 2;
        let mid = basis.layer_range(k);
        let mut kernel_cols: Vec<DVector<f64>> = Vec::new();
        for m in 1..=mid.len() {
            let block = b_matrix(basis, ell, k, m)?.rows(0, m).into_owned();
            let ker = null_space(&block, RANK_TOL);
            for c in ker.column_iter() {
                let mut v = DVector::zeros(basis.dim());
                for (i, &x) in c.iter().enumerate() {
                    v[mid.start + i] = x;
                }
                kernel_cols.push(v);
            }
        }
        let kernel_span = if kernel_cols.is_empty() {
            DMatrix::zeros(basis.dim(), 0)
        } else {
            orthonormal_span(&DMatrix::from_columns(&kernel_cols), RANK_TOL)
        };
        let mut cols: Vec<DVector<f64>> = upper
            .iter()
            .map(|&j| {
                let mut v = DVector::zeros(basis.dim());
                v[j] = 1.0;
                v
            })
            .collect();
        cols.extend(kernel_span.column_iter().map(|c| c.into_owned()));
        Subalgebra { vectors: DMatrix::from_columns(&cols) }
    };
    let report = polarization_check(basis, ell, &h);
    if !report.pass {
        return Err(Error::PolarizationCheck(format!("{report:?}")));
    }
    Ok(h)
}

/// `Σ_j r(ℓ_j)` over the Malcev prefix chain, where `r(ℓ_j)` is the radical
/// of the skew form of ℓ restricted to the j-th prefix.
pub fn vergne_polarization(basis: &LayeredBasis, ell: &Functional) -> Subalgebra {
    let n = basis.dim();
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for j in 1..=n {
        let radical = null_space(&skew_form(basis, ell, j), RANK_TOL);
        for c in radical.column_iter() {
            let mut v = DVector::zeros(n);
            v.rows_mut(0, j).copy_from(&c);
            cols.push(v);
        }
    }
    Subalgebra { vectors: orthonormal_span(&DMatrix::from_columns(&cols), RANK_TOL) }
}

/// Generic polarization where available, Vergne otherwise.
pub fn polarization_for(basis: &LayeredBasis, ell: &Functional) -> Result<Subalgebra> {
    if basis.spec().is_degenerate() {
        Ok(vergne_polarization(basis, ell))
    } else {
        generic_polarization(basis, ell)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie_basis::GroupSpec;

    fn heisenberg() -> (LayeredBasis, Functional) {
        let b = LayeredBasis::lyndon(GroupSpec::new(2, 2).unwrap()).unwrap();
        let ell = Functional::from_triples(&b, &[(2, 1, 1.0)]).unwrap();
        (b, ell)
    }

    #[test]
    fn heisenberg_subordination() {
        let (b, ell) = heisenberg();
        let x12 = b.flat_index(2, 1).unwrap();
        let x1 = b.flat_index(1, 1).unwrap();
        let x2 = b.flat_index(1, 2).unwrap();
        assert!(!is_subordinate(&b, &ell, &Subalgebra::from_indices(&b, &[x1, x2])));
        let good = Subalgebra::from_indices(&b, &[x12, x1]);
        assert!(is_subordinate(&b, &ell, &good));
        assert!(polarization_check(&b, &ell, &good).pass);
        let small = polarization_check(&b, &ell, &Subalgebra::from_indices(&b, &[x12]));
        assert!(small.subordinate && !small.pass);
        assert_eq!((small.dim, small.expected_dim), (1, 2));
    }

    #[test]
    fn heisenberg_generic_polarization() {
        let (b, ell) = heisenberg();
        let h = generic_polarization(&b, &ell).unwrap();
        assert_eq!(h.dim(), 2);
        let x1 = b.flat_index(1, 1).unwrap();
        let x12 = b.flat_index(2, 1).unwrap();
        let ix = h.unit_indices();
        // The kernel vector may come back with either sign.
        let spans = |j: usize| h.vectors().column_iter().any(|c| (c[j].abs() - 1.0).abs() < 1e-12);
        assert!(spans(x1) && spans(x12), "{ix:?}");
    }

    #[test]
    fn vergne_of_zero_is_everything() {
        let (b, _) = heisenberg();
        assert_eq!(vergne_polarization(&b, &Functional::zero(&b)).dim(), 3);
    }

    #[test]
    fn degenerate_routes_to_vergne() {
        let b = LayeredBasis::lyndon(GroupSpec::new(2, 3).unwrap()).unwrap();
        let ell = Functional::from_triples(&b, &[(3, 1, 1.0), (3, 2, 0.3), (2, 1, -0.7), (1, 1, 0.2)]).unwrap();
        assert!(matches!(generic_polarization(&b, &ell), Err(Error::DegenerateSpec(_))));
        let h = polarization_for(&b, &ell).unwrap();
        assert_eq!(h.dim(), 4);
        assert!(polarization_check(&b, &ell, &h).pass);
    }
}
