//! Arithmetic in the truncated tensor algebra T^N(R^d).
//!
//! Elements store all levels `0..=N` contiguously; level k holds `d^k`
//! coefficients in row-major multi-index order with `i_1` slowest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie_basis::GroupSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// Level-0 entry exactly 0 (T_0^N, contains the Lie algebra).
    Algebra,
    /// Level-0 entry exactly 1 (T_1^N, contains the group).
    Group,
    Raw,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Algebra => "algebra",
            Role::Group => "group",
            Role::Raw => "raw",
        }
    }

    fn from_scalar(s: f64) -> Role {
        if s == 0.0 {
            Role::Algebra
        } else if s == 1.0 {
            Role::Group
        } else {
            Role::Raw
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawElement", into = "RawElement")]
pub struct GradedElement {
    spec: GroupSpec,
    role: Role,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawElement {
    spec: GroupSpec,
    role: Role,
    levels: Vec<Vec<f64>>,
}

impl TryFrom<RawElement> for GradedElement {
    type Error = Error;
    fn try_from(raw: RawElement) -> Result<Self> {
        GradedElement::from_levels(raw.spec, raw.levels, raw.role)
    }
}

impl From<GradedElement> for RawElement {
    fn from(g: GradedElement) -> Self {
        RawElement { spec: g.spec, role: g.role, levels: g.levels() }
    }
}

fn level_offset(d: usize, k: usize) -> usize {
    (0..k).map(|j| d.pow(j as u32)).sum()
}

fn total_len(spec: &GroupSpec) -> usize {
    level_offset(spec.d, spec.level + 1)
}

impl GradedElement {
    pub fn zero(spec: GroupSpec) -> Self {
        GradedElement { spec, role: Role::Algebra, data: vec![0.0; total_len(&spec)] }
    }

    pub fn one(spec: GroupSpec) -> Self {
        let mut g = Self::zero(spec);
        g.data[0] = 1.0;
        g.role = Role::Group;
        g
    }

    /// Algebra element concentrated at level 1.
    pub fn from_vector(spec: GroupSpec, v: &[f64]) -> Result<Self> {
        if v.len() != spec.d {
            return Err(Error::DimensionMismatch(format!("vector of length {} for d={}", v.len(), spec.d)));
        }
        let mut x = Self::zero(spec);
        x.data[1..1 + spec.d].copy_from_slice(v);
        Ok(x)
    }

    pub fn from_levels(spec: GroupSpec, levels: Vec<Vec<f64>>, role: Role) -> Result<Self> {
        if levels.len() != spec.level + 1 {
            return Err(Error::DimensionMismatch(format!("expected {} levels, got {}", spec.level + 1, levels.len())));
        }
        let mut data = Vec::with_capacity(total_len(&spec));
        for (k, lvl) in levels.iter().enumerate() {
            if lvl.len() != spec.tensor_dim(k) {
                return Err(Error::DimensionMismatch(format!("level {k} needs {} entries, got {}", spec.tensor_dim(k), lvl.len())));
            }
            data.extend_from_slice(lvl);
        }
        let expected = Role::from_scalar(data[0]);
        if role != Role::Raw && role != expected {
            return Err(Error::RoleError { expected: role.name(), found: expected.name() });
        }
        Ok(GradedElement { spec, role, data })
    }

    fn from_data(spec: GroupSpec, data: Vec<f64>) -> Self {
        let role = Role::from_scalar(data[0]);
        GradedElement { spec, role, data }
    }

    pub fn spec(&self) -> GroupSpec {
        self.spec
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn level(&self, k: usize) -> &[f64] {
        let d = self.spec.d;
        let start = level_offset(d, k);
        &self.data[start..start + d.pow(k as u32)]
    }

    pub fn levels(&self) -> Vec<Vec<f64>> {
        (0..=self.spec.level).map(|k| self.level(k).to_vec()).collect()
    }

    /// All coefficients, level by level.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs_diff(&self, other: &GradedElement) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn check_spec(&self, other: &GradedElement) -> Result<()> {
        if self.spec.same_shape(&other.spec) {
            Ok(())
        } else {
            Err(Error::SpecMismatch(format!("{} vs {}", self.spec, other.spec)))
        }
    }

    fn require(&self, role: Role) -> Result<()> {
        if self.role == role {
            Ok(())
        } else {
            Err(Error::RoleError { expected: role.name(), found: self.role.name() })
        }
    }

    pub fn add(&self, other: &GradedElement) -> Result<GradedElement> {
        self.check_spec(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self::from_data(self.spec, data))
    }

    pub fn sub(&self, other: &GradedElement) -> Result<GradedElement> {
        self.check_spec(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self::from_data(self.spec, data))
    }

    pub fn scale(&self, s: f64) -> GradedElement {
        Self::from_data(self.spec, self.data.iter().map(|a| a * s).collect())
    }

    /// Truncated tensor product.
    pub fn mul(&self, other: &GradedElement) -> Result<GradedElement> {
        self.check_spec(other)?;
        Ok(Self::from_data(self.spec, mul_raw(&self.spec, &self.data, &other.data)))
    }

    /// `X ⊗ Y − Y ⊗ X`.
    pub fn commutator(&self, other: &GradedElement) -> Result<GradedElement> {
        self.check_spec(other)?;
        let xy = mul_raw(&self.spec, &self.data, &other.data);
        let yx = mul_raw(&self.spec, &other.data, &self.data);
        Ok(Self::from_data(self.spec, xy.iter().zip(&yx).map(|(a, b)| a - b).collect()))
    }

    /// Truncated exponential series; the argument must be an algebra element.
    pub fn exp_t(&self) -> Result<GradedElement> {
        self.require(Role::Algebra)?;
        let mut result = self.data.clone();
        result[0] = 1.0;
        let mut term = self.data.clone();
        for k in 2..=self.spec.level {
            term = mul_raw(&self.spec, &term, &self.data);
            let inv = 1.0 / k as f64;
            term.iter_mut().for_each(|v| *v *= inv);
            result.iter_mut().zip(&term).for_each(|(r, t)| *r += t);
        }
        Ok(GradedElement { spec: self.spec, role: Role::Group, data: result })
    }

    /// Truncated logarithm series; the argument must be a group element.
    pub fn log_t(&self) -> Result<GradedElement> {
        self.require(Role::Group)?;
        let mut x = self.data.clone();
        x[0] = 0.0;
        let mut result = x.clone();
        let mut power = x.clone();
        for k in 2..=self.spec.level {
            power = mul_raw(&self.spec, &power, &x);
            let c = if k % 2 == 0 { -1.0 } else { 1.0 } / k as f64;
            result.iter_mut().zip(&power).for_each(|(r, p)| *r += c * p);
        }
        result[0] = 0.0;
        Ok(GradedElement { spec: self.spec, role: Role::Algebra, data: result })
    }

    /// `log(exp X · exp Y)`.
    pub fn bch(&self, other: &GradedElement) -> Result<GradedElement> {
        self.check_spec(other)?;
        self.require(Role::Algebra)?;
        other.require(Role::Algebra)?;
        self.exp_t()?.mul(&other.exp_t()?)?.log_t()
    }

    pub fn group_inverse(&self) -> Result<GradedElement> {
        self.require(Role::Group)?;
        self.log_t()?.scale(-1.0).exp_t()
    }

    /// `Ad(g) Y = Σ_k (ad X)^k Y / k!` with `X = log g`.
    pub fn adjoint(&self, y: &GradedElement) -> Result<GradedElement> {
        self.check_spec(y)?;
        self.require(Role::Group)?;
        y.require(Role::Algebra)?;
        let x = self.log_t()?;
        let mut result = y.clone();
        let mut term = y.clone();
        for k in 1..self.spec.level {
            term = x.commutator(&term)?.scale(1.0 / k as f64);
            result = result.add(&term)?;
        }
        result.data[0] = 0.0;
        result.role = Role::Algebra;
        Ok(result)
    }
}

/// Product of two flat graded arrays, truncated at the spec's level.
fn mul_raw(spec: &GroupSpec, a: &[f64], b: &[f64]) -> Vec<f64> {
    let d = spec.d;
    let n = spec.level;
    let offsets: Vec<usize> = (0..=n + 1).map(|k| level_offset(d, k)).collect();
    let mut out = vec![0.0; offsets[n + 1]];
    for i in 0..=n {
        let ai = &a[offsets[i]..offsets[i + 1]];
        if ai.iter().all(|&v| v == 0.0) {
            continue;
        }
        for j in 0..=n - i {
            let bj = &b[offsets[j]..offsets[j + 1]];
            let k = i + j;
            let target = &mut out[offsets[k]..offsets[k + 1]];
            let lb = bj.len();
            for (ia, &x) in ai.iter().enumerate() {
                if x == 0.0 {
                    continue;
                }
                let row = &mut target[ia * lb..(ia + 1) * lb];
                for (t, &y) in row.iter_mut().zip(bj) {
                    *t += x * y;
                }
            }
        }
    }
    out
}
