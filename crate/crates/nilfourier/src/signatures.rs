//! Truncated signatures and log-signatures of piecewise-linear paths.

use std::io::Read;

use crate::error::{Error, Result};
use crate::lie_basis::{Flavor, GroupSpec, LayeredBasis};
use crate::tensor_algebra::GradedElement;

#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseLinearPath {
    points: Vec<Vec<f64>>,
}

impl PiecewiseLinearPath {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Input("a path needs at least two points".into()));
        }
        let d = points[0].len();
        if d == 0 {
            return Err(Error::Input("path points must have at least one coordinate".into()));
        }
        if let Some(p) = points.iter().find(|p| p.len() != d) {
            return Err(Error::DimensionMismatch(format!("point of dimension {} in a {d}-dimensional path", p.len())));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Input("path coordinates must be finite".into()));
        }
        Ok(PiecewiseLinearPath { points })
    }

    /// Reads vertices from CSV, one row per point. A first row that does not
    /// parse as numbers is taken to be a header.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
        let mut points = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
            match parsed {
                Ok(p) => points.push(p),
                Err(_) if row == 0 => continue,
                Err(e) => return Err(Error::Input(format!("row {}: {e}", row + 1))),
            }
        }
        Self::new(points)
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn increments(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        self.points.windows(2).map(|w| w[1].iter().zip(&w[0]).map(|(b, a)| b - a).collect())
    }

    pub fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        points.reverse();
        PiecewiseLinearPath { points }
    }

    /// Concatenation; `other` must start where `self` ends.
    pub fn concat(&self, other: &PiecewiseLinearPath) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch("concatenating paths of different dimension".into()));
        }
        let end = self.points.last().expect("non-empty");
        let gap = end.iter().zip(&other.points[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if gap > 1e-12 {
            return Err(Error::Input(format!("paths do not share an endpoint (gap {gap:e})")));
        }
        let mut points = self.points.clone();
        points.extend(other.points[1..].iter().cloned());
        Ok(PiecewiseLinearPath { points })
    }
}

/// Signature of the straight segment with increment `v`, i.e. `exp(v)`.
pub fn segment_signature(v: &[f64], spec: GroupSpec) -> Result<GradedElement> {
    if v.len() != spec.d {
        return Err(Error::SpecMismatch(format!("increment of length {} for d={}", v.len(), spec.d)));
    }
    GradedElement::from_vector(spec, v)?.exp_t()
}

/// Chen product of the segment signatures in path order.
pub fn path_signature(path: &PiecewiseLinearPath, spec: GroupSpec) -> Result<GradedElement> {
    if path.dim() != spec.d {
        return Err(Error::DimensionMismatch(format!("path in R^{} for d={}", path.dim(), spec.d)));
    }
    let mut sig = GradedElement::one(spec);
    for inc in path.increments() {
        sig = sig.mul(&segment_signature(&inc, spec)?)?;
    }
    Ok(sig)
}

/// Log-signature as layer coordinates over a free nilpotent basis.
#[derive(Clone, Debug, PartialEq)]
pub struct LogSignature {
    /// Coordinates in Malcev order of the basis.
    pub coords: Vec<f64>,
    /// Basis labels, aligned with `coords`.
    pub labels: Vec<String>,
    /// Degree of each coordinate.
    pub degrees: Vec<usize>,
}

impl LogSignature {
    /// `(label, coefficient)` rows, layer 1 first.
    pub fn rows(&self) -> Vec<(String, f64)> {
        let mut idx: Vec<usize> = (0..self.coords.len()).collect();
        idx.sort_by_key(|&j| self.degrees[j]);
        idx.into_iter().map(|j| (self.labels[j].clone(), self.coords[j])).collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["element", "coefficient"])?;
        for (label, c) in self.rows() {
            w.write_record([label, format!("{c:.17e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn log_signature(path: &PiecewiseLinearPath, basis: &LayeredBasis) -> Result<LogSignature> {
    let spec = basis.spec();
    if spec.flavor != Flavor::FreeNilpotent {
        return Err(Error::Input("log-signatures need a free nilpotent basis".into()));
    }
    let log = path_signature(path, spec)?.log_t()?;
    let coords = basis.coords_of(&log)?;
    let labels = (0..basis.dim()).map(|j| basis.label(j)).collect();
    let degrees = (0..basis.dim()).map(|j| basis.degree_of(j)).collect();
    Ok(LogSignature { coords, labels, degrees })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_segment_path_level_two() {
        let spec = GroupSpec::new(2, 2).unwrap();
        let path = PiecewiseLinearPath::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let sig = path_signature(&path, spec).unwrap();
        assert_eq!(sig.level(2)[1], 1.0);
        assert_eq!(sig.level(2)[2], 0.0);
    }

    #[test]
    fn log_signature_of_corner() {
        let spec = GroupSpec::new(2, 2).unwrap();
        let basis = LayeredBasis::lyndon(spec).unwrap();
        let path = PiecewiseLinearPath::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let ls = log_signature(&path, &basis).unwrap();
        assert_eq!(ls.rows(), vec![("1".into(), 1.0), ("2".into(), 1.0), ("[1,2]".into(), 0.5)]);
    }

    #[test]
    fn csv_with_and_without_header() {
        let with = PiecewiseLinearPath::from_csv("x,y\n0,0\n1,2\n".as_bytes()).unwrap();
        let without = PiecewiseLinearPath::from_csv("0,0\n1,2\n".as_bytes()).unwrap();
        assert_eq!(with, without);
        assert!(PiecewiseLinearPath::from_csv("0,0\n1\n".as_bytes()).is_err());
    }

    #[test]
    fn dimension_checks() {
        let spec = GroupSpec::new(3, 2).unwrap();
        let path = PiecewiseLinearPath::new(vec![vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(path_signature(&path, spec), Err(Error::DimensionMismatch(_))));
        assert!(PiecewiseLinearPath::new(vec![vec![0.0]]).is_err());
    }
}
