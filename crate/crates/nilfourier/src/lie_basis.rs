//! Free nilpotent Lie algebras g_N(R^d) and the full truncated tensor algebra
//! as graded Lie algebras: layer dimensions, bracket bases embedded in the
//! tensor algebra, structure constants and the Malcev ordering.
//!
//! Basis elements are addressed either by `(layer, position)` with both
//! indices 1-based, or by a flat 0-based index in Malcev order: the top layer
//! comes first, layer 1 last. Every prefix of that order spans an ideal.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::tensor_algebra::{GradedElement, Role};

/// Largest truncation level accepted; factorial reciprocals lose meaning beyond it.
pub const MAX_LEVEL: usize = 20;

const RANK_TOL: f64 = 1e-10;
const RESIDUAL_TOL: f64 = 1e-10;
/// Structure-constant entries below this are rounding noise from the
/// least-squares expansion.
const COEFF_EPS: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    #[default]
    FreeNilpotent,
    FullTensor,
}

/// Dimension `d` of the underlying vector space, truncation `level` (the `N`
/// of g_N) and which graded algebra is meant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct GroupSpec {
    pub d: usize,
    pub level: usize,
    pub flavor: Flavor,
}

#[derive(Deserialize)]
struct RawSpec {
    d: usize,
    level: usize,
    #[serde(default)]
    flavor: Flavor,
}

impl TryFrom<RawSpec> for GroupSpec {
    type Error = Error;
    fn try_from(raw: RawSpec) -> Result<Self> {
        GroupSpec::with_flavor(raw.d, raw.level, raw.flavor)
    }
}

impl GroupSpec {
    pub fn new(d: usize, level: usize) -> Result<Self> {
        Self::with_flavor(d, level, Flavor::FreeNilpotent)
    }

    pub fn full_tensor(d: usize, level: usize) -> Result<Self> {
        Self::with_flavor(d, level, Flavor::FullTensor)
    }

    pub fn with_flavor(d: usize, level: usize, flavor: Flavor) -> Result<Self> {
        if d == 0 || level == 0 {
            return Err(Error::InvalidSpec(format!("need d >= 1 and N >= 1, got d={d}, N={level}")));
        }
        if level > MAX_LEVEL {
            return Err(Error::InvalidSpec(format!("N={level} exceeds the supported maximum {MAX_LEVEL}")));
        }
        d.checked_pow(level as u32).ok_or_else(|| Error::Overflow(format!("{d}^{level}")))?;
        Ok(GroupSpec { d, level, flavor })
    }

    /// The free 3-step nilpotent algebra on two generators, where the
    /// B-matrix genericity criterion does not apply.
    pub fn is_degenerate(&self) -> bool {
        self.flavor == Flavor::FreeNilpotent && self.d == 2 && self.level == 3
    }

    /// `d^k`, the size of the degree-k tensor level.
    pub fn tensor_dim(&self, k: usize) -> usize {
        self.d.pow(k as u32)
    }

    /// Layer dimensions `m_1, ..., m_N`.
    pub fn layer_dims(&self) -> Result<Vec<usize>> {
        (1..=self.level)
            .map(|k| match self.flavor {
                Flavor::FreeNilpotent => witt_dimension(self.d as u64, k as u64).map(|m| m as usize),
                Flavor::FullTensor => Ok(self.tensor_dim(k)),
            })
            .collect()
    }

    pub fn same_shape(&self, other: &GroupSpec) -> bool {
        self.d == other.d && self.level == other.level
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let flavor = match self.flavor {
            Flavor::FreeNilpotent => "free-nilpotent",
            Flavor::FullTensor => "full-tensor",
        };
        write!(f, "(d={}, N={}, {flavor})", self.d, self.level)
    }
}

fn mobius(mut n: u64) -> i64 {
    let mut result = 1;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return 0;
            }
            result = -result;
        }
        p += 1;
    }
    if n > 1 {
        result = -result;
    }
    result
}

/// Dimension of the degree-k layer of the free Lie algebra on `d` generators,
/// `(1/k) Σ_{n | k} μ(n) d^{k/n}`.
pub fn witt_dimension(d: u64, k: u64) -> Result<u64> {
    if d == 0 || k == 0 {
        return Err(Error::InvalidSpec(format!("witt_dimension needs d, k >= 1 (got {d}, {k})")));
    }
    let mut sum: i128 = 0;
    for n in (1..=k).filter(|n| k.is_multiple_of(*n)) {
        let mu = mobius(n);
        if mu == 0 {
            continue;
        }
        let exp = u32::try_from(k / n).map_err(|_| Error::Overflow(format!("{d}^{}", k / n)))?;
        let power = d.checked_pow(exp).ok_or_else(|| Error::Overflow(format!("{d}^{exp}")))?;
        sum += mu as i128 * power as i128;
    }
    Ok((sum / k as i128) as u64)
}

/// Iterated bracket of generators. Leaves hold 1-based generator indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BracketTree {
    Leaf(usize),
    Node(Box<BracketTree>, Box<BracketTree>),
}

impl BracketTree {
    pub fn leaf(i: usize) -> Self {
        BracketTree::Leaf(i)
    }

    pub fn node(left: BracketTree, right: BracketTree) -> Self {
        BracketTree::Node(Box::new(left), Box::new(right))
    }

    /// Right-nested bracket `[i_1,[i_2,[...,i_k]]]`.
    pub fn right_nested(indices: &[usize]) -> Self {
        let (last, rest) = indices.split_last().expect("non-empty index list");
        rest.iter().rev().fold(BracketTree::Leaf(*last), |acc, &i| BracketTree::node(BracketTree::Leaf(i), acc))
    }

    pub fn degree(&self) -> usize {
        match self {
            BracketTree::Leaf(_) => 1,
            BracketTree::Node(l, r) => l.degree() + r.degree(),
        }
    }

    fn max_generator(&self) -> usize {
        match self {
            BracketTree::Leaf(i) => *i,
            BracketTree::Node(l, r) => l.max_generator().max(r.max_generator()),
        }
    }

    fn min_generator(&self) -> usize {
        match self {
            BracketTree::Leaf(i) => *i,
            BracketTree::Node(l, r) => l.min_generator().min(r.min_generator()),
        }
    }

    /// Flat degree-k tensor of the bracket, with `[X,Y] = X⊗Y − Y⊗X`.
    pub fn tensor(&self, d: usize) -> Vec<f64> {
        match self {
            BracketTree::Leaf(i) => {
                let mut v = vec![0.0; d];
                v[i - 1] = 1.0;
                v
            }
            BracketTree::Node(l, r) => {
                let a = l.tensor(d);
                let b = r.tensor(d);
                commutator_tensors(&a, &b)
            }
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut pos = 0;
        let tree = parse_tree(&chars, &mut pos)?;
        if pos != chars.len() {
            return Err(Error::Input(format!("trailing characters in bracket '{s}'")));
        }
        Ok(tree)
    }
}

fn parse_tree(chars: &[char], pos: &mut usize) -> Result<BracketTree> {
    match chars.get(*pos) {
        Some('[') => {
            *pos += 1;
            let left = parse_tree(chars, pos)?;
            if chars.get(*pos) != Some(&',') {
                return Err(Error::Input(format!("expected ',' at position {}", *pos)));
            }
            *pos += 1;
            let right = parse_tree(chars, pos)?;
            if chars.get(*pos) != Some(&']') {
                return Err(Error::Input(format!("expected ']' at position {}", *pos)));
            }
            *pos += 1;
            Ok(BracketTree::node(left, right))
        }
        Some(c) if c.is_ascii_digit() => {
            let start = *pos;
            while chars.get(*pos).is_some_and(|c| c.is_ascii_digit()) {
                *pos += 1;
            }
            let digits: String = chars[start..*pos].iter().collect();
            let i: usize = digits.parse().map_err(|_| Error::Input(format!("bad generator '{digits}'")))?;
            Ok(BracketTree::Leaf(i))
        }
        _ => Err(Error::Input(format!("unexpected token at position {}", *pos))),
    }
}

impl fmt::Display for BracketTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BracketTree::Leaf(i) => write!(f, "{i}"),
            BracketTree::Node(l, r) => write!(f, "[{l},{r}]"),
        }
    }
}

/// `a⊗b − b⊗a` for flat tensors of degrees p and q over the same `d`.
pub(crate) fn commutator_tensors(a: &[f64], b: &[f64]) -> Vec<f64> {
    let (la, lb) = (a.len(), b.len());
    let mut out = vec![0.0; la * lb];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i * lb + j] += x * y;
            out[j * la + i] -= x * y;
        }
    }
    out
}

/// A basis element of one layer: a bracket of generators, or (full tensor
/// flavor) a plain word `e_{i_1} ⊗ ... ⊗ e_{i_k}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BasisElement {
    Bracket(BracketTree),
    Word(Vec<usize>),
}

impl BasisElement {
    pub fn degree(&self) -> usize {
        match self {
            BasisElement::Bracket(t) => t.degree(),
            BasisElement::Word(w) => w.len(),
        }
    }

    pub fn tensor(&self, d: usize) -> Vec<f64> {
        match self {
            BasisElement::Bracket(t) => t.tensor(d),
            BasisElement::Word(w) => {
                let mut v = vec![0.0; d.pow(w.len() as u32)];
                let idx = w.iter().fold(0, |acc, &i| acc * d + (i - 1));
                v[idx] = 1.0;
                v
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            BasisElement::Bracket(t) => t.to_string(),
            BasisElement::Word(w) => {
                let parts: Vec<String> = w.iter().map(|i| i.to_string()).collect();
                format!("({})", parts.join(","))
            }
        }
    }
}

/// Lyndon words of length at most `n` over `{1..d}`, in lexicographic order
/// (Duval's generation algorithm).
pub fn lyndon_words(d: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if d == 0 || n == 0 {
        return out;
    }
    let mut w: Vec<usize> = vec![0];
    while !w.is_empty() {
        out.push(w.iter().map(|&c| c + 1).collect());
        let m = w.len();
        while w.len() < n {
            w.push(w[w.len() - m]);
        }
        while w.last() == Some(&(d - 1)) {
            w.pop();
        }
        if let Some(last) = w.last_mut() {
            *last += 1;
        }
    }
    out
}

fn is_lyndon(w: &[usize]) -> bool {
    let n = w.len();
    (1..n).all(|r| {
        let rotated = w[r..].iter().chain(&w[..r]);
        w.iter().lt(rotated)
    })
}

/// Bracketing of a Lyndon word by its standard factorization `w = uv`, with
/// `v` the longest proper Lyndon suffix.
pub fn standard_bracketing(w: &[usize]) -> BracketTree {
    if w.len() == 1 {
        return BracketTree::Leaf(w[0]);
    }
    let split = (1..w.len()).find(|&i| is_lyndon(&w[i..])).expect("single letters are Lyndon");
    BracketTree::node(standard_bracketing(&w[..split]), standard_bracketing(&w[split..]))
}

/// The left-normed degree-3 list `[X_i,[X_j,X_s]]` for d=3 that omits
/// `(3,1,2)`; layers 1 and 2 are the generators and `[X_i,X_j]`, `i<j`.
pub fn left_normed_3_3() -> Vec<Vec<BracketTree>> {
    let layer1 = (1..=3).map(BracketTree::leaf).collect();
    let layer2 = [(1, 2), (1, 3), (2, 3)].iter().map(|&(i, j)| BracketTree::right_nested(&[i, j])).collect();
    let layer3 = [(1, 1, 2), (1, 1, 3), (1, 2, 3), (2, 1, 2), (2, 1, 3), (2, 2, 3), (3, 1, 3), (3, 2, 3)]
        .iter()
        .map(|&(i, j, s)| BracketTree::right_nested(&[i, j, s]))
        .collect();
    vec![layer1, layer2, layer3]
}

#[derive(Clone, Debug)]
pub enum BasisConvention {
    Lyndon,
    UserList(Vec<Vec<BracketTree>>),
}

#[derive(Clone, Debug)]
pub struct Layer {
    pub degree: usize,
    pub elements: Vec<BasisElement>,
    /// `d^k × m_k`; column i is the tensor of element i.
    pub embedding: DMatrix<f64>,
    pinv: DMatrix<f64>,
}

impl Layer {
    fn new(degree: usize, elements: Vec<BasisElement>, d: usize) -> Result<Self> {
        let rows = d.pow(degree as u32);
        let cols: Vec<Vec<f64>> = elements.iter().map(|e| e.tensor(d)).collect();
        let mut embedding = DMatrix::zeros(rows, elements.len());
        for (j, col) in cols.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                embedding[(i, j)] = v;
            }
        }
        let pinv = if elements.is_empty() {
            DMatrix::zeros(0, rows)
        } else if is_identity(&embedding) {
            embedding.transpose()
        } else {
            let svd = embedding.clone().svd(true, true);
            let s = &svd.singular_values;
            let ratio = s.min() / s.max();
            if ratio.is_nan() || ratio <= RANK_TOL {
                return Err(Error::DependentBasis { layer: degree, ratio });
            }
            svd.pseudo_inverse(0.0).map_err(|e| Error::Numerical(e.to_string()))?
        };
        Ok(Layer { degree, elements, embedding, pinv })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

fn is_identity(m: &DMatrix<f64>) -> bool {
    m.is_square()
        && m.iter().enumerate().all(|(idx, &v)| {
            let (i, j) = (idx % m.nrows(), idx / m.nrows());
            v == if i == j { 1.0 } else { 0.0 }
        })
}

/// Graded basis with embeddings, sparse structure constants and Malcev order.
/// Nonzero brackets `[X_a, X_b] = Σ c X_t` as `(a, b) → [(t, c)]`.
pub type StructureTable = BTreeMap<(usize, usize), Vec<(usize, f64)>>;

#[derive(Clone, Debug)]
pub struct LayeredBasis {
    spec: GroupSpec,
    layers: Vec<Layer>,
    /// `offsets[k-1]` is the flat Malcev index of `X_1^k`.
    offsets: Vec<usize>,
    dim: usize,
    structure: StructureTable,
}

impl LayeredBasis {
    pub fn lyndon(spec: GroupSpec) -> Result<Self> {
        build_layered_basis(spec, BasisConvention::Lyndon)
    }

    pub fn spec(&self) -> GroupSpec {
        self.spec
    }

    /// Dimension of the whole algebra.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn layer(&self, k: usize) -> &Layer {
        &self.layers[k - 1]
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layer_dim(&self, k: usize) -> usize {
        if k == 0 || k > self.spec.level {
            0
        } else {
            self.layers[k - 1].len()
        }
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        self.layers.iter().map(Layer::len).collect()
    }

    /// Flat Malcev index of `X_i^k` (both 1-based).
    pub fn flat_index(&self, k: usize, i: usize) -> Result<usize> {
        if k == 0 || k > self.spec.level || i == 0 || i > self.layer_dim(k) {
            return Err(Error::IndexOutOfRange(format!("basis index ({k},{i}) for {}", self.spec)));
        }
        Ok(self.offsets[k - 1] + i - 1)
    }

    /// Flat range of layer k in Malcev order.
    pub fn layer_range(&self, k: usize) -> std::ops::Range<usize> {
        self.offsets[k - 1]..self.offsets[k - 1] + self.layer_dim(k)
    }

    /// `(layer, position)` of a flat Malcev index.
    pub fn index_of(&self, flat: usize) -> (usize, usize) {
        let k = (1..=self.spec.level).find(|&k| self.layer_range(k).contains(&flat)).expect("flat index in range");
        (k, flat - self.offsets[k - 1] + 1)
    }

    pub fn degree_of(&self, flat: usize) -> usize {
        self.index_of(flat).0
    }

    pub fn element(&self, flat: usize) -> &BasisElement {
        let (k, i) = self.index_of(flat);
        &self.layers[k - 1].elements[i - 1]
    }

    pub fn label(&self, flat: usize) -> String {
        self.element(flat).label()
    }

    /// `(layer, position)` pairs in Malcev order.
    pub fn malcev_order(&self) -> Vec<(usize, usize)> {
        (0..self.dim).map(|j| self.index_of(j)).collect()
    }

    /// Layer-k coordinates of a degree-k tensor.
    pub fn expand_in_basis(&self, t: &[f64], k: usize) -> Result<Vec<f64>> {
        if k == 0 || k > self.spec.level {
            return Err(Error::IndexOutOfRange(format!("layer {k}")));
        }
        let layer = &self.layers[k - 1];
        if t.len() != layer.embedding.nrows() {
            return Err(Error::DimensionMismatch(format!("degree-{k} tensor needs {} entries, got {}", layer.embedding.nrows(), t.len())));
        }
        let x = mat_vec(&layer.pinv, t);
        let back = mat_vec(&layer.embedding, &x);
        let residual = back.iter().zip(t).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = 1.0 + t.iter().map(|v| v * v).sum::<f64>().sqrt();
        if residual > RESIDUAL_TOL * scale {
            return Err(Error::NotInLieImage { layer: k, residual });
        }
        Ok(x)
    }

    /// Malcev coordinates of an algebra element.
    pub fn coords_of(&self, x: &GradedElement) -> Result<Vec<f64>> {
        if !x.spec().same_shape(&self.spec) {
            return Err(Error::SpecMismatch(format!("{} vs {}", x.spec(), self.spec)));
        }
        if x.level(0)[0] != 0.0 {
            return Err(Error::RoleError { expected: "algebra", found: x.role().name() });
        }
        let mut out = vec![0.0; self.dim];
        for k in 1..=self.spec.level {
            let c = self.expand_in_basis(x.level(k), k)?;
            out[self.layer_range(k)].copy_from_slice(&c);
        }
        Ok(out)
    }

    /// Algebra element with the given Malcev coordinates.
    pub fn to_algebra(&self, coords: &[f64]) -> Result<GradedElement> {
        if coords.len() != self.dim {
            return Err(Error::DimensionMismatch(format!("expected {} coordinates, got {}", self.dim, coords.len())));
        }
        let mut levels = vec![vec![0.0]];
        for k in 1..=self.spec.level {
            let layer = &self.layers[k - 1];
            levels.push(mat_vec(&layer.embedding, &coords[self.layer_range(k)]));
        }
        GradedElement::from_levels(self.spec, levels, Role::Algebra)
    }

    /// Tensor image of a single basis element.
    pub fn basis_algebra(&self, flat: usize) -> GradedElement {
        let mut coords = vec![0.0; self.dim];
        coords[flat] = 1.0;
        self.to_algebra(&coords).expect("valid coordinates")
    }

    /// Sparse bracket `[X_a, X_b]` as `(flat target, coefficient)` pairs.
    pub fn structure_constant(&self, a: usize, b: usize) -> &[(usize, f64)] {
        self.structure.get(&(a, b)).map(Vec::as_slice).unwrap_or(&[])
    }

    /// All nonzero structure constants keyed by ordered pairs of flat indices.
    pub fn structure_table(&self) -> &StructureTable {
        &self.structure
    }

    /// Bracket of two elements given by Malcev coordinates.
    pub fn bracket(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (&(a, b), entries) in &self.structure {
            let w = x[a] * y[b];
            if w == 0.0 {
                continue;
            }
            for &(t, c) in entries {
                out[t] += w * c;
            }
        }
        out
    }

    /// Matrix of `ad X` in Malcev coordinates: column b is `[X, X_b]`.
    pub fn ad_matrix(&self, x: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (&(a, b), entries) in &self.structure {
            if x[a] == 0.0 {
                continue;
            }
            for &(t, c) in entries {
                m[(t, b)] += x[a] * c;
            }
        }
        m
    }

    /// JSON description: layers with serialized elements, Malcev order and
    /// structure constants as `(a, b, target, coefficient)` records.
    pub fn to_json(&self) -> Value {
        let layers: Vec<Value> = self
            .layers
            .iter()
            .map(|l| {
                json!({
                    "degree": l.degree,
                    "size": l.len(),
                    "elements": l.elements.iter().map(BasisElement::label).collect::<Vec<_>>(),
                })
            })
            .collect();
        let order: Vec<[usize; 2]> = self.malcev_order().into_iter().map(|(k, i)| [k, i]).collect();
        let pair = |flat: usize| {
            let (k, i) = self.index_of(flat);
            [k, i]
        };
        let mut structure = Vec::new();
        for (&(a, b), entries) in &self.structure {
            for &(t, c) in entries {
                structure.push(json!({"a": pair(a), "b": pair(b), "target": pair(t), "coefficient": c}));
            }
        }
        json!({
            "spec": self.spec,
            "dim": self.dim,
            "layers": layers,
            "malcev_order": order,
            "structure": structure,
        })
    }
}

fn mat_vec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m.nrows()];
    for (j, &x) in v.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (o, &a) in out.iter_mut().zip(m.column(j).iter()) {
            *o += a * x;
        }
    }
    out
}

fn lyndon_layers(spec: GroupSpec) -> Vec<Vec<BasisElement>> {
    let mut layers = vec![Vec::new(); spec.level];
    for w in lyndon_words(spec.d, spec.level) {
        layers[w.len() - 1].push(BasisElement::Bracket(standard_bracketing(&w)));
    }
    layers
}

fn word_layers(spec: GroupSpec) -> Vec<Vec<BasisElement>> {
    (1..=spec.level)
        .map(|k| {
            (0..spec.tensor_dim(k))
                .map(|mut idx| {
                    let mut w = vec![0; k];
                    for slot in w.iter_mut().rev() {
                        *slot = idx % spec.d + 1;
                        idx /= spec.d;
                    }
                    BasisElement::Word(w)
                })
                .collect()
        })
        .collect()
}

/// Builds the layered basis; structure constants come from commutators in
/// the tensor algebra expanded back into the target layer.
pub fn build_layered_basis(spec: GroupSpec, convention: BasisConvention) -> Result<LayeredBasis> {
    let dims = spec.layer_dims()?;
    let raw_layers = match (spec.flavor, convention) {
        (Flavor::FullTensor, BasisConvention::UserList(_)) => {
            return Err(Error::Input("the full tensor flavor uses the word basis; user lists are not supported".into()))
        }
        (Flavor::FullTensor, BasisConvention::Lyndon) => word_layers(spec),
        (Flavor::FreeNilpotent, BasisConvention::Lyndon) => lyndon_layers(spec),
        (Flavor::FreeNilpotent, BasisConvention::UserList(lists)) => {
            if lists.len() != spec.level {
                return Err(Error::DimensionMismatch(format!("user basis has {} layers, spec needs {}", lists.len(), spec.level)));
            }
            let mut layers = Vec::with_capacity(spec.level);
            for (k, list) in lists.into_iter().enumerate() {
                let k = k + 1;
                if list.len() != dims[k - 1] {
                    return Err(Error::DimensionMismatch(format!("layer {k} has {} elements, expected {}", list.len(), dims[k - 1])));
                }
                for t in &list {
                    if t.degree() != k {
                        return Err(Error::DegreeMismatch(format!("{t} has degree {} but sits in layer {k}", t.degree())));
                    }
                    if t.min_generator() == 0 || t.max_generator() > spec.d {
                        return Err(Error::IndexOutOfRange(format!("{t} uses a generator outside 1..={}", spec.d)));
                    }
                }
                layers.push(list.into_iter().map(BasisElement::Bracket).collect());
            }
            layers
        }
    };

    let layers = raw_layers.into_iter().enumerate().map(|(k, elems)| Layer::new(k + 1, elems, spec.d)).collect::<Result<Vec<_>>>()?;
    for (layer, &m) in layers.iter().zip(&dims) {
        debug_assert_eq!(layer.len(), m);
    }

    let mut offsets = vec![0; spec.level];
    let mut acc = 0;
    for k in (1..=spec.level).rev() {
        offsets[k - 1] = acc;
        acc += dims[k - 1];
    }
    let mut basis = LayeredBasis { spec, layers, offsets, dim: acc, structure: BTreeMap::new() };
    basis.structure = compute_structure(&basis)?;
    Ok(basis)
}

fn compute_structure(basis: &LayeredBasis) -> Result<StructureTable> {
    let n = basis.dim;
    let level = basis.spec.level;
    let tensors: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let (k, i) = basis.index_of(j);
            basis.layers[k - 1].embedding.column(i - 1).iter().copied().collect()
        })
        .collect();
    let mut table = BTreeMap::new();
    for a in 0..n {
        for b in a + 1..n {
            let deg = basis.degree_of(a) + basis.degree_of(b);
            if deg > level {
                continue;
            }
            let t = commutator_tensors(&tensors[a], &tensors[b]);
            let coords = basis.expand_in_basis(&t, deg)?;
            let offset = basis.offsets[deg - 1];
            let entries: Vec<(usize, f64)> =
                coords.iter().enumerate().filter(|(_, c)| c.abs() > COEFF_EPS).map(|(i, &c)| (offset + i, c)).collect();
            if entries.is_empty() {
                continue;
            }
            let negated = entries.iter().map(|&(t, c)| (t, -c)).collect();
            table.insert((a, b), entries);
            table.insert((b, a), negated);
        }
    }
    Ok(table)
}
