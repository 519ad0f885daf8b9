//! Stratified complex Lie algebras given by structure constants over an
//! adapted basis.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::bch::DynkinTable;
use crate::error::{Error, Result};

const LAW_TOL: f64 = 1e-12;
const RANK_TOL: f64 = 1e-10;

/// A nonzero structure constant `[e_i, e_j]` has component `value` along `e_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureConstant {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub value: Complex64,
}

/// A stratified complex Lie algebra `g = V_1 ⊕ ... ⊕ V_m` in an adapted basis.
///
/// Coordinates are ordered by ascending layer; coordinate `j` carries the
/// dilation weight `c_j` equal to its layer number. Construction only checks
/// that the table is well formed; the Lie and stratification laws are checked
/// by [`StratifiedAlgebra::validate`].
#[derive(Clone)]
pub struct StratifiedAlgebra {
    name: String,
    layers: Vec<usize>,
    weights: Vec<u32>,
    table: Vec<Complex64>,
    nonzero: Vec<StructureConstant>,
    dynkin: DynkinTable,
}

impl fmt::Debug for StratifiedAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StratifiedAlgebra")
            .field("name", &self.name)
            .field("layers", &self.layers)
            .field("brackets", &self.nonzero.len())
            .finish()
    }
}

impl PartialEq for StratifiedAlgebra {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers && self.table == other.table
    }
}

/// A violated algebra law together with the basis indices that witness it.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum LawViolation {
    Antisymmetry {
        i: usize,
        j: usize,
        residual: f64,
    },
    Jacobi {
        i: usize,
        j: usize,
        k: usize,
        residual: f64,
    },
    Grading {
        i: usize,
        j: usize,
        k: usize,
    },
    /// `span [V_1, V_layer] != V_{layer + 1}`; `rank` is the dimension actually spanned.
    Stratification {
        layer: usize,
        rank: usize,
        expected: usize,
    },
    /// `[V_1, V_m]` must vanish.
    TopLayerNotCentral {
        i: usize,
        j: usize,
    },
}

impl fmt::Display for LawViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LawViolation::Antisymmetry { i, j, residual } => {
                write!(f, "antisymmetry fails on ({i}, {j}), residual {residual:e}")
            }
            LawViolation::Jacobi { i, j, k, residual } => {
                write!(f, "Jacobi identity fails on ({i}, {j}, {k}), residual {residual:e}")
            }
            LawViolation::Grading { i, j, k } => {
                write!(f, "[e_{i}, e_{j}] has a component along e_{k} outside the graded layer")
            }
            LawViolation::Stratification { layer, rank, expected } => {
                write!(f, "[V_1, V_{layer}] spans dimension {rank}, expected {expected}")
            }
            LawViolation::TopLayerNotCentral { i, j } => {
                write!(f, "[e_{i}, e_{j}] != 0 with e_{j} in the top layer")
            }
        }
    }
}

impl StratifiedAlgebra {
    /// Builds an algebra from layer dimensions and a list of structure
    /// constants `(i, j, k, c)` meaning `[e_i, e_j]` has coefficient `c` on `e_k`.
    ///
    /// Entries are taken verbatim; antisymmetric partners are not filled in.
    pub fn new(
        name: impl Into<String>,
        layers: Vec<usize>,
        entries: impl IntoIterator<Item = (usize, usize, usize, Complex64)>,
    ) -> Result<Self> {
        if layers.is_empty() || layers.contains(&0) {
            return Err(Error::Structural(format!(
                "layer dimensions must be positive, got {layers:?}"
            )));
        }
        let weights: Vec<u32> = layers
            .iter()
            .enumerate()
            .flat_map(|(l, &d)| std::iter::repeat_n(l as u32 + 1, d))
            .collect();
        let n = weights.len();
        let mut table = vec![Complex64::new(0.0, 0.0); n * n * n];
        for (i, j, k, c) in entries {
            if i >= n || j >= n || k >= n {
                return Err(Error::Structural(format!(
                    "bracket entry ({i}, {j}) -> {k} out of range for dimension {n}"
                )));
            }
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(Error::Structural(format!(
                    "bracket entry ({i}, {j}) -> {k} is not finite"
                )));
            }
            table[(i * n + j) * n + k] = c;
        }
        let nonzero = collect_nonzero(&table, n);
        let dynkin = DynkinTable::new(layers.len());
        Ok(Self {
            name: name.into(),
            layers,
            weights,
            table,
            nonzero,
            dynkin,
        })
    }

    /// The complex Heisenberg–Weyl algebra of dimension `2n + 1`:
    /// `[e_{2k-1}, e_{2k}] = e_{2n+1}` for `k = 1..n`.
    pub fn heisenberg_weyl(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("heisenberg_weyl requires n >= 1".into()));
        }
        let center = 2 * n;
        let one = Complex64::new(1.0, 0.0);
        let entries = (0..n).flat_map(|k| [(2 * k, 2 * k + 1, center, one), (2 * k + 1, 2 * k, center, -one)]);
        Self::new(format!("heisenberg:{n}"), vec![2 * n, 1], entries)
    }

    /// `C^n` with the zero bracket, a single layer.
    pub fn abelian(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("abelian requires n >= 1".into()));
        }
        Self::new(format!("abelian:{n}"), vec![n], std::iter::empty())
    }

    /// The standard filiform algebra of step `m`: `V_1 = span(e_1, e_2)`,
    /// `V_j = span(e_{j+1})`, with `[e_1, e_k] = e_{k+1}` for `k >= 2`.
    pub fn filiform(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::Domain("filiform requires step >= 2".into()));
        }
        let mut layers = vec![2];
        layers.extend(std::iter::repeat_n(1, m - 1));
        let one = Complex64::new(1.0, 0.0);
        let entries = (1..m).flat_map(|k| [(0, k, k + 1, one), (k, 0, k + 1, -one)]);
        Self::new(format!("filiform:{m}"), layers, entries)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Layer dimensions `(d_1, ..., d_m)`.
    pub fn layers(&self) -> &[usize] {
        &self.layers
    }

    /// Step `m` of the stratification.
    pub fn step(&self) -> usize {
        self.layers.len()
    }

    /// Total complex dimension `N`.
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Dilation weight `c_j` (the layer number) of each coordinate.
    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    /// Homogeneous dimension `D = Σ j d_j`.
    pub fn homogeneous_dim(&self) -> usize {
        self.layers.iter().enumerate().map(|(j, &d)| (j + 1) * d).sum()
    }

    /// Coordinate range of layer `layer` (1-based).
    pub fn layer_range(&self, layer: usize) -> std::ops::Range<usize> {
        let start: usize = self.layers[..layer - 1].iter().sum();
        start..start + self.layers[layer - 1]
    }

    /// Structure constant `c^k_{ij}`.
    pub fn constant(&self, i: usize, j: usize, k: usize) -> Complex64 {
        let n = self.dim();
        self.table[(i * n + j) * n + k]
    }

    /// All nonzero structure constants in `(i, j, k)` order.
    pub fn structure_constants(&self) -> &[StructureConstant] {
        &self.nonzero
    }

    pub(crate) fn dynkin(&self) -> &DynkinTable {
        &self.dynkin
    }

    pub fn is_abelian(&self) -> bool {
        self.nonzero.is_empty()
    }

    /// Lie bracket of two coefficient vectors.
    pub fn bracket(&self, u: &[Complex64], v: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(u.len())?;
        self.check_len(v.len())?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        self.bracket_into(u, v, &mut out);
        Ok(out)
    }

    /// Unchecked bracket writing into `out` (overwrites).
    pub(crate) fn bracket_into(&self, u: &[Complex64], v: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        for sc in &self.nonzero {
            out[sc.k] += u[sc.i] * v[sc.j] * sc.value;
        }
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: len,
            });
        }
        Ok(())
    }

    fn basis(&self, i: usize) -> Vec<Complex64> {
        let mut e = vec![Complex64::new(0.0, 0.0); self.dim()];
        e[i] = Complex64::new(1.0, 0.0);
        e
    }

    /// Checks antisymmetry, the Jacobi identity, the grading and the
    /// stratification conditions. Returns an empty list iff all hold.
    pub fn validate(&self) -> Vec<LawViolation> {
        let n = self.dim();
        let mut out = Vec::new();

        for i in 0..n {
            for j in i..n {
                let residual = (0..n)
                    .map(|k| (self.constant(i, j, k) + self.constant(j, i, k)).norm())
                    .fold(0.0, f64::max);
                if residual > LAW_TOL {
                    out.push(LawViolation::Antisymmetry { i, j, residual });
                }
            }
        }

        let basis: Vec<Vec<Complex64>> = (0..n).map(|i| self.basis(i)).collect();
        let br = |u: &[Complex64], v: &[Complex64]| {
            let mut o = vec![Complex64::new(0.0, 0.0); n];
            self.bracket_into(u, v, &mut o);
            o
        };
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let a = br(&basis[i], &br(&basis[j], &basis[k]));
                    let b = br(&basis[j], &br(&basis[k], &basis[i]));
                    let c = br(&basis[k], &br(&basis[i], &basis[j]));
                    let residual = (0..n).map(|l| (a[l] + b[l] + c[l]).norm()).fold(0.0, f64::max);
                    if residual > LAW_TOL {
                        out.push(LawViolation::Jacobi { i, j, k, residual });
                    }
                }
            }
        }

        let m = self.step() as u32;
        for sc in &self.nonzero {
            let target = self.weights[sc.i] + self.weights[sc.j];
            if target > m || self.weights[sc.k] != target {
                out.push(LawViolation::Grading {
                    i: sc.i,
                    j: sc.j,
                    k: sc.k,
                });
            }
        }

        let first = self.layer_range(1);
        for layer in 1..self.step() {
            let next = self.layer_range(layer + 1);
            let mut rows = Vec::new();
            for i in first.clone() {
                for j in self.layer_range(layer) {
                    rows.push(next.clone().map(|k| self.constant(i, j, k)).collect::<Vec<_>>());
                }
            }
            let rank = complex_rank(rows, RANK_TOL);
            if rank != next.len() {
                out.push(LawViolation::Stratification {
                    layer,
                    rank,
                    expected: next.len(),
                });
            }
        }
        let top = self.layer_range(self.step());
        for i in first {
            for j in top.clone() {
                if (0..n).any(|k| self.constant(i, j, k).norm() > LAW_TOL) {
                    out.push(LawViolation::TopLayerNotCentral { i, j });
                }
            }
        }
        out
    }

    /// Parses a group tag (`heisenberg:n`, `abelian:n`, `filiform:m`) or a
    /// JSON group specification.
    pub fn from_tag(tag: &str) -> Result<Self> {
        let (kind, arg) = tag
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("unknown group tag `{tag}`")))?;
        let n: usize = arg
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad group size in `{tag}`")))?;
        match kind.trim() {
            "heisenberg" => Self::heisenberg_weyl(n),
            "abelian" => Self::abelian(n),
            "filiform" => Self::filiform(n),
            other => Err(Error::Parse(format!("unknown builtin group `{other}`"))),
        }
    }

    /// Builds an algebra from the JSON group-spec schema. A bracket `(i, j)`
    /// whose partner `(j, i)` is absent from the list is filled in by
    /// antisymmetry; when both are listed both are kept as given.
    pub fn from_spec(spec: &GroupSpec) -> Result<Self> {
        let mut entries: BTreeMap<(usize, usize, usize), Complex64> = BTreeMap::new();
        let mut given = std::collections::BTreeSet::new();
        for b in &spec.brackets {
            given.insert((b.i, b.j));
        }
        for b in &spec.brackets {
            for (k, [re, im]) in &b.out {
                let k: usize = k
                    .parse()
                    .map_err(|_| Error::Structural(format!("bracket output key `{k}` is not an index")))?;
                let c = Complex64::new(*re, *im);
                entries.insert((b.i, b.j, k), c);
                if !given.contains(&(b.j, b.i)) {
                    entries.insert((b.j, b.i, k), -c);
                }
            }
        }
        Self::new(
            spec.name.clone(),
            spec.layers.clone(),
            entries.into_iter().map(|((i, j, k), c)| (i, j, k, c)),
        )
    }

    /// The JSON group specification describing this algebra.
    pub fn to_spec(&self) -> GroupSpec {
        let mut brackets: Vec<BracketSpec> = Vec::new();
        for sc in &self.nonzero {
            match brackets.last_mut() {
                Some(b) if b.i == sc.i && b.j == sc.j => {
                    b.out.insert(sc.k.to_string(), [sc.value.re, sc.value.im]);
                }
                _ => brackets.push(BracketSpec {
                    i: sc.i,
                    j: sc.j,
                    out: BTreeMap::from([(sc.k.to_string(), [sc.value.re, sc.value.im])]),
                }),
            }
        }
        GroupSpec {
            name: self.name.clone(),
            layers: self.layers.clone(),
            brackets,
        }
    }
}

/// JSON group specification: `{"name", "layers", "brackets": [{"i", "j", "out": {"k": [re, im]}}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub name: String,
    pub layers: Vec<usize>,
    #[serde(default)]
    pub brackets: Vec<BracketSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketSpec {
    pub i: usize,
    pub j: usize,
    pub out: BTreeMap<String, [f64; 2]>,
}

fn collect_nonzero(table: &[Complex64], n: usize) -> Vec<StructureConstant> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let value = table[(i * n + j) * n + k];
                if value != Complex64::new(0.0, 0.0) {
                    out.push(StructureConstant { i, j, k, value });
                }
            }
        }
    }
    out
}

/// Rank of a complex matrix given by rows, by Gaussian elimination with
/// partial pivoting.
fn complex_rank(mut rows: Vec<Vec<Complex64>>, tol: f64) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..cols {
        let pivot = (rank..rows.len()).max_by(|&a, &b| rows[a][col].norm().total_cmp(&rows[b][col].norm()));
        let Some(p) = pivot else { break };
        if rows[p][col].norm() <= tol {
            continue;
        }
        rows.swap(rank, p);
        let pivot_row = rows[rank].clone();
        for row in rows.iter_mut().skip(rank + 1) {
            let factor = row[col] / pivot_row[col];
            for (x, y) in row.iter_mut().zip(&pivot_row).skip(col) {
                *x -= factor * y;
            }
        }
        rank += 1;
    }
    rank
}
