//! Linear functionals on the Lie algebra, the coadjoint action, B-matrices,
//! genericity, orbit dimensions in Malcev quotients and the jump sets S, T.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::lie_basis::{BracketTree, GroupSpec, LayeredBasis};
use crate::linalg::numerical_rank;
use crate::tensor_algebra::GradedElement;

/// Relative singular-value threshold for B-matrix and skew-form ranks.
pub const RANK_TOL: f64 = 1e-8;
/// Relative threshold for ranks of finite-difference Jacobians.
pub const JACOBIAN_RANK_TOL: f64 = 1e-6;
pub const FD_STEP: f64 = 1e-5;
const MAX_SAMPLING_TRIES: usize = 1000;

/// `ℓ = Σ α_i^k ℓ_i^k`, stored as coefficients in Malcev order.
#[derive(Clone, Debug, PartialEq)]
pub struct Functional {
    spec: GroupSpec,
    coords: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct FunctionalFile {
    spec: GroupSpec,
    coords: Vec<(usize, usize, f64)>,
}

impl Functional {
    pub fn new(basis: &LayeredBasis, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != basis.dim() {
            return Err(Error::DimensionMismatch(format!("functional needs {} coordinates, got {}", basis.dim(), coords.len())));
        }
        Ok(Functional { spec: basis.spec(), coords })
    }

    pub fn zero(basis: &LayeredBasis) -> Self {
        Functional { spec: basis.spec(), coords: vec![0.0; basis.dim()] }
    }

    /// From sparse `(k, i, α_i^k)` triples; unlisted coordinates are zero.
    pub fn from_triples(basis: &LayeredBasis, triples: &[(usize, usize, f64)]) -> Result<Self> {
        let mut f = Self::zero(basis);
        for &(k, i, v) in triples {
            f.coords[basis.flat_index(k, i)?] += v;
        }
        Ok(f)
    }

    pub fn from_json(basis: &LayeredBasis, value: Value) -> Result<Self> {
        let file: FunctionalFile = serde_json::from_value(value)?;
        if file.spec != basis.spec() {
            return Err(Error::SpecMismatch(format!("functional for {} used with {}", file.spec, basis.spec())));
        }
        Self::from_triples(basis, &file.coords)
    }

    /// Spec carried by a functional JSON document, so the caller can build
    /// the matching basis first.
    pub fn spec_of_json(value: &Value) -> Result<GroupSpec> {
        let spec = value.get("spec").ok_or_else(|| Error::Input("functional JSON lacks 'spec'".into()))?;
        Ok(serde_json::from_value(spec.clone())?)
    }

    pub fn to_json(&self, basis: &LayeredBasis) -> Value {
        let coords: Vec<(usize, usize, f64)> = self
            .coords
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                let (k, i) = basis.index_of(j);
                (k, i, v)
            })
            .collect();
        serde_json::to_value(FunctionalFile { spec: self.spec, coords }).expect("serializable")
    }

    pub fn spec(&self) -> GroupSpec {
        self.spec
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn get(&self, basis: &LayeredBasis, k: usize, i: usize) -> Result<f64> {
        Ok(self.coords[basis.flat_index(k, i)?])
    }

    /// ℓ on an element given by Malcev coordinates.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coords.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn eval_element(&self, basis: &LayeredBasis, x: &GradedElement) -> Result<f64> {
        self.check(basis)?;
        Ok(self.eval(&basis.coords_of(x)?))
    }

    /// `ℓ([X_a, X_b])` for flat indices.
    pub fn on_bracket(&self, basis: &LayeredBasis, a: usize, b: usize) -> f64 {
        basis.structure_constant(a, b).iter().map(|&(t, c)| c * self.coords[t]).sum()
    }

    fn check(&self, basis: &LayeredBasis) -> Result<()> {
        if self.spec == basis.spec() && self.coords.len() == basis.dim() {
            Ok(())
        } else {
            Err(Error::SpecMismatch(format!("functional for {} used with {}", self.spec, basis.spec())))
        }
    }
}

/// `exp(ad X)` in Malcev coordinates, i.e. the matrix of `Ad(exp X)`.
pub fn adjoint_matrix(basis: &LayeredBasis, x: &[f64]) -> DMatrix<f64> {
    let n = basis.dim();
    let ad = basis.ad_matrix(x);
    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..basis.spec().level {
        term = &ad * &term / k as f64;
        result += &term;
    }
    result
}

/// Coadjoint action computed in coordinates: `(Ad*(exp X) ℓ)(Y) = ℓ(Ad(exp −X) Y)`.
pub fn coadjoint_apply_coords(basis: &LayeredBasis, x: &[f64], ell: &Functional) -> Vec<f64> {
    let neg: Vec<f64> = x.iter().map(|v| -v).collect();
    let ad = adjoint_matrix(basis, &neg);
    (ad.transpose() * nalgebra::DVector::from_column_slice(&ell.coords)).iter().copied().collect()
}

/// Coadjoint action of a group element, pushing every basis element through
/// the tensor-algebra adjoint of `g⁻¹`.
pub fn coadjoint_apply(basis: &LayeredBasis, g: &GradedElement, ell: &Functional) -> Result<Functional> {
    ell.check(basis)?;
    if !g.spec().same_shape(&basis.spec()) {
        return Err(Error::SpecMismatch(format!("{} vs {}", g.spec(), basis.spec())));
    }
    let g_inv = g.group_inverse()?;
    let coords = (0..basis.dim())
        .map(|j| {
            let y = g_inv.adjoint(&basis.basis_algebra(j))?;
            Ok(ell.eval(&basis.coords_of(&y)?))
        })
        .collect::<Result<Vec<f64>>>()?;
    Functional::new(basis, coords)
}

/// `B_ℓ^k(m)_{ij} = ℓ([X_i^k, X_j^{N−k}])`, an `m_k × m` matrix.
pub fn b_matrix(basis: &LayeredBasis, ell: &Functional, k: usize, m: usize) -> Result<DMatrix<f64>> {
    let n = basis.spec().level;
    if k == 0 || k >= n || m == 0 || m > basis.layer_dim(n - k) {
        return Err(Error::IndexOutOfRange(format!("B-matrix (k={k}, m={m}) for {}", basis.spec())));
    }
    let rows = basis.layer_range(k);
    let cols = basis.layer_range(n - k);
    let mut b = DMatrix::zeros(rows.len(), m);
    for (i, a) in rows.enumerate() {
        for (j, c) in cols.clone().take(m).enumerate() {
            b[(i, j)] = ell.on_bracket(basis, a, c);
        }
    }
    Ok(b)
}

fn dims_of(spec: &GroupSpec) -> Vec<usize> {
    spec.layer_dims().expect("validated spec has representable layer dimensions")
}

fn dim_km_with(dims: &[usize], k: usize, m: usize) -> usize {
    let n = dims.len();
    if k == 0 || k >= n {
        return 0;
    }
    let mk = dims[k - 1];
    if 2 * k == n {
        let cap = if mk.is_multiple_of(2) { mk } else { mk - 1 };
        cap.min(m)
    } else {
        mk.min(dims[n - k - 1]).min(m)
    }
}

/// Maximal rank of `B_ℓ^k(m)` over all functionals.
pub fn dim_km(spec: &GroupSpec, k: usize, m: usize) -> usize {
    dim_km_with(&dims_of(spec), k, m)
}

/// Rank diagnostics for the genericity test.
#[derive(Clone, Debug, Serialize)]
pub struct GenericityReport {
    pub generic: bool,
    /// `(k, rank of B_ℓ^k, maximal rank)` for k ≤ ⌊N/2⌋.
    pub ranks: Vec<(usize, usize, usize)>,
    /// For the d=2, N=3 algebra: the coefficient `ℓ([X_1,[X_1,X_2]])`.
    pub alpha_112: Option<f64>,
}

/// `ℓ([X_1,[X_1,X_2]])`, whatever layer-3 basis is in use.
pub fn alpha_112(basis: &LayeredBasis, ell: &Functional) -> Result<f64> {
    let t = BracketTree::right_nested(&[1, 1, 2]).tensor(basis.spec().d);
    let c = basis.expand_in_basis(&t, 3)?;
    let range = basis.layer_range(3);
    // Clean pseudo-inverse noise so that α_112 vanishes exactly when it should.
    Ok(c.iter().zip(&ell.coords[range]).filter(|(a, _)| a.abs() > 1e-13).map(|(a, b)| a * b).sum())
}

pub fn genericity_report(basis: &LayeredBasis, ell: &Functional) -> Result<GenericityReport> {
    ell.check(basis)?;
    let spec = basis.spec();
    if spec.is_degenerate() {
        let a = alpha_112(basis, ell)?;
        return Ok(GenericityReport { generic: a.abs() > crate::linalg::SINGULAR_FLOOR, ranks: vec![], alpha_112: Some(a) });
    }
    let n = spec.level;
    let mut generic = true;
    let mut ranks = Vec::new();
    for k in 1..=n / 2 {
        let mk = basis.layer_dim(k);
        if mk == 0 {
            ranks.push((k, 0, 0));
            continue;
        }
        let b = b_matrix(basis, ell, k, mk)?;
        let rank = numerical_rank(&b, RANK_TOL);
        let target = dim_km(&spec, k, mk);
        let mut ok = rank == target;
        if ok && 2 * k == n && mk % 2 == 1 && mk > 1 {
            // Odd middle layer: the first m_k − 1 rows must be independent too.
            let head = b.rows(0, mk - 1).into_owned();
            ok = numerical_rank(&head, RANK_TOL) == mk - 1;
        }
        generic &= ok;
        ranks.push((k, rank, target));
    }
    Ok(GenericityReport { generic, ranks, alpha_112: None })
}

/// Whether ℓ lies in general position.
pub fn is_generic(basis: &LayeredBasis, ell: &Functional) -> Result<bool> {
    Ok(genericity_report(basis, ell)?.generic)
}

/// Generic orbit dimension in the quotient `g*/g*(N−k, m)`; `k = 0` is a
/// top-layer quotient and gives 0.
pub fn orbit_dim_quotient_generic(spec: &GroupSpec, k: usize, m: usize) -> usize {
    let dims = dims_of(spec);
    if k == 0 {
        return 0;
    }
    (1..k).map(|s| dim_km_with(&dims, s, dims[s - 1])).sum::<usize>() + dim_km_with(&dims, k, m)
}

/// Generic orbit dimensions `d_j` of every Malcev prefix quotient, `j = 1..=n`.
pub fn generic_prefix_dims(basis: &LayeredBasis) -> Vec<usize> {
    let spec = basis.spec();
    basis.malcev_order().into_iter().map(|(layer, m)| orbit_dim_quotient_generic(&spec, spec.level - layer, m)).collect()
}

fn coadjoint_jacobian(basis: &LayeredBasis, ell: &Functional, x: &[f64]) -> DMatrix<f64> {
    let n = basis.dim();
    let mut jac = DMatrix::zeros(n, n);
    let mut xp = x.to_vec();
    for c in 0..n {
        xp[c] = x[c] + FD_STEP;
        let fp = coadjoint_apply_coords(basis, &xp, ell);
        xp[c] = x[c] - FD_STEP;
        let fm = coadjoint_apply_coords(basis, &xp, ell);
        xp[c] = x[c];
        for r in 0..n {
            jac[(r, c)] = (fp[r] - fm[r]) / (2.0 * FD_STEP);
        }
    }
    jac
}

/// Numerical orbit dimensions of every Malcev prefix quotient: the rank of
/// the Jacobian of `X ↦ proj(Ad*(exp X) ℓ)`, maximized over the identity and
/// `samples` random points.
pub fn numeric_prefix_dims(basis: &LayeredBasis, ell: &Functional, samples: usize, rng: &mut impl Rng) -> Vec<usize> {
    let n = basis.dim();
    let mut best = vec![0; n];
    let mut point = vec![0.0; n];
    for s in 0..=samples {
        if s > 0 {
            point.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        }
        let jac = coadjoint_jacobian(basis, ell, &point);
        for (j, slot) in best.iter_mut().enumerate() {
            let rank = numerical_rank(&jac.rows(0, j + 1).into_owned(), JACOBIAN_RANK_TOL);
            *slot = (*slot).max(rank);
        }
    }
    best
}

/// Seed used when callers do not supply their own generator.
pub const DEFAULT_SEED: u64 = 0x5eed_2024;

/// Numerical orbit dimension in the quotient `g*/g*(N−k, m)`.
pub fn orbit_dim_numeric(basis: &LayeredBasis, ell: &Functional, k: usize, m: usize, samples: usize) -> Result<usize> {
    ell.check(basis)?;
    let n = basis.spec().level;
    if k >= n {
        return Err(Error::IndexOutOfRange(format!("quotient index k={k} for N={n}")));
    }
    let j = basis.flat_index(n - k, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    Ok(numeric_prefix_dims(basis, ell, samples, &mut rng)[j])
}

/// Rank of the skew form `M_ab = ℓ([X_a, X_b])`.
pub fn full_orbit_dim(basis: &LayeredBasis, ell: &Functional) -> usize {
    numerical_rank(&skew_form(basis, ell, basis.dim()), RANK_TOL)
}

/// Skew form of ℓ on the first `j` Malcev basis elements.
pub fn skew_form(basis: &LayeredBasis, ell: &Functional, j: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(j, j);
    for a in 0..j {
        for b in a + 1..j {
            let v = ell.on_bracket(basis, a, b);
            m[(a, b)] = v;
            m[(b, a)] = -v;
        }
    }
    m
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JumpData {
    /// Jump indices `(k, i)` in Malcev order.
    pub s: Vec<(usize, usize)>,
    /// Remaining indices in Malcev order; they coordinatize the T-plane.
    pub t: Vec<(usize, usize)>,
    /// Generic orbit dimension `d_j` of each Malcev prefix quotient.
    pub prefix_dims: Vec<usize>,
    /// Set for d=2, N=3, where S and T come from the jump definition applied
    /// to hand-computed orbit dimensions rather than from the layer formula.
    pub derived_from_jumps: bool,
}

impl JumpData {
    pub fn s_flat(&self, basis: &LayeredBasis) -> Vec<usize> {
        self.s.iter().map(|&(k, i)| basis.flat_index(k, i).expect("valid jump index")).collect()
    }

    pub fn t_flat(&self, basis: &LayeredBasis) -> Vec<usize> {
        self.t.iter().map(|&(k, i)| basis.flat_index(k, i).expect("valid jump index")).collect()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "S": self.s,
            "T": self.t,
            "S_size": self.s.len(),
            "T_size": self.t.len(),
            "prefix_orbit_dims": self.prefix_dims,
            "derived_from_jumps": self.derived_from_jumps,
        })
    }
}

/// Jump sets from the layer formula `S = ∪_k {(k,1),…,(k, dim(k, m_k))}`.
/// For d=2, N=3 they are read off the generic prefix dimensions instead.
pub fn jump_sets(basis: &LayeredBasis) -> JumpData {
    let spec = basis.spec();
    let order = basis.malcev_order();
    let prefix_dims = generic_prefix_dims(basis);
    let in_s: Vec<bool> = if spec.is_degenerate() {
        (0..order.len()).map(|j| prefix_dims[j] > if j == 0 { 0 } else { prefix_dims[j - 1] }).collect()
    } else {
        let dims = dims_of(&spec);
        order.iter().map(|&(k, i)| k < spec.level && i <= dim_km_with(&dims, k, dims[k - 1])).collect()
    };
    let (mut s, mut t) = (Vec::new(), Vec::new());
    for (&idx, &jump) in order.iter().zip(&in_s) {
        if jump {
            s.push(idx)
        } else {
            t.push(idx)
        }
    }
    JumpData { s, t, prefix_dims, derived_from_jumps: spec.is_degenerate() }
}

/// Rejection-samples a standard normal functional in general position.
pub fn sample_generic(basis: &LayeredBasis, seed: u64) -> Result<Functional> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_generic_with(basis, &mut rng)
}

pub fn sample_generic_with(basis: &LayeredBasis, rng: &mut impl Rng) -> Result<Functional> {
    for _ in 0..MAX_SAMPLING_TRIES {
        let coords = (0..basis.dim()).map(|_| rng.sample(StandardNormal)).collect();
        let ell = Functional::new(basis, coords)?;
        if is_generic(basis, &ell)? {
            return Ok(ell);
        }
    }
    Err(Error::SamplingExhausted(MAX_SAMPLING_TRIES))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(d: usize, n: usize) -> LayeredBasis {
        LayeredBasis::lyndon(GroupSpec::new(d, n).unwrap()).unwrap()
    }

    #[test]
    fn dim_km_examples() {
        assert_eq!(dim_km(&GroupSpec::new(3, 3).unwrap(), 1, 3), 3);
        assert_eq!(dim_km(&GroupSpec::new(2, 2).unwrap(), 1, 2), 2);
        assert_eq!(dim_km(&GroupSpec::new(3, 2).unwrap(), 1, 3), 2);
    }

    #[test]
    fn heisenberg_generic_and_dims() {
        let b = basis(2, 2);
        let ell = Functional::from_triples(&b, &[(2, 1, 1.0)]).unwrap();
        assert!(is_generic(&b, &ell).unwrap());
        assert_eq!(full_orbit_dim(&b, &ell), 2);
        assert_eq!(full_orbit_dim(&b, &Functional::zero(&b)), 0);
        let spec = b.spec();
        assert_eq!(orbit_dim_quotient_generic(&spec, 1, 1), 1);
        assert_eq!(orbit_dim_quotient_generic(&spec, 1, 2), 2);
        assert_eq!(orbit_dim_quotient_generic(&spec, 0, 1), 0);
    }

    #[test]
    fn d3_n3_quotient_dims() {
        let spec = GroupSpec::new(3, 3).unwrap();
        for m in 1..=3 {
            assert_eq!(orbit_dim_quotient_generic(&spec, 1, m), m);
            assert_eq!(orbit_dim_quotient_generic(&spec, 2, m), 3 + m);
        }
    }

    #[test]
    fn degenerate_genericity() {
        let b = basis(2, 3);
        // Layer 3 is {[1,[1,2]], [[1,2],2]}, so α_212 = ℓ([2,[1,2]]) = −coefficient of (3,2).
        let ell = Functional::from_triples(&b, &[(3, 2, -1.0)]).unwrap();
        assert!(!is_generic(&b, &ell).unwrap());
        let ell = Functional::from_triples(&b, &[(3, 1, 0.5)]).unwrap();
        assert!(is_generic(&b, &ell).unwrap());
        assert!((alpha_112(&b, &ell).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn odd_middle_layer_functional() {
        let b = basis(3, 2);
        let ell = Functional::from_triples(&b, &[(2, 1, 1.0)]).unwrap();
        assert!(is_generic(&b, &ell).unwrap());
        let bm = b_matrix(&b, &ell, 1, 3).unwrap();
        assert_eq!(bm[(0, 1)], 1.0);
        assert_eq!(bm[(1, 0)], -1.0);
    }

    #[test]
    fn b_matrix_index_checks() {
        let b = basis(2, 2);
        let ell = Functional::zero(&b);
        assert!(b_matrix(&b, &ell, 2, 1).is_err());
        assert!(b_matrix(&b, &ell, 1, 3).is_err());
        assert_eq!(b_matrix(&b, &ell, 1, 2).unwrap(), DMatrix::zeros(2, 2));
    }

    #[test]
    fn jump_sets_examples() {
        let j = jump_sets(&basis(3, 3));
        assert_eq!(j.s, vec![(2, 1), (2, 2), (2, 3), (1, 1), (1, 2), (1, 3)]);
        assert_eq!(j.t.len(), 8);
        let j = jump_sets(&basis(3, 2));
        assert_eq!(j.s, vec![(1, 1), (1, 2)]);
        assert_eq!(j.t, vec![(2, 1), (2, 2), (2, 3), (1, 3)]);
        let j = jump_sets(&basis(2, 3));
        assert!(j.derived_from_jumps);
        assert_eq!(j.prefix_dims, vec![0, 0, 1, 2, 2]);
        assert_eq!(j.s, vec![(2, 1), (1, 1)]);
    }

    #[test]
    fn functional_json_roundtrip() {
        let b = basis(2, 2);
        let ell = Functional::from_triples(&b, &[(2, 1, 1.5), (1, 2, -0.25)]).unwrap();
        let v = ell.to_json(&b);
        assert_eq!(Functional::spec_of_json(&v).unwrap(), b.spec());
        assert_eq!(Functional::from_json(&b, v).unwrap(), ell);
    }

    #[test]
    fn sampling_is_seeded() {
        let b = basis(2, 2);
        let a = sample_generic(&b, 1).unwrap();
        assert_eq!(a, sample_generic(&b, 1).unwrap());
        assert!(a.get(&b, 2, 1).unwrap() != 0.0);
    }
}
