//! Simplicial r-chains: a shared vertex table plus oriented index cells with
//! real multiplicities.
//!
//! A cell's orientation is the order of its vertex indices; an even
//! permutation of the indices denotes the same oriented simplex. Boundary
//! faces are accumulated under sorted keys with the permutation parity, so
//! interior faces of consistently oriented complexes cancel exactly.

use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::{pair_coeffs, sort_with_sign, MultiVector};
use crate::form::{AxisBox, FormField};
use crate::quadrature::simplex_rule;

/// A geometric oriented simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct Simplex {
    vertices: Vec<Vec<f64>>,
    orientation: f64,
}

impl Simplex {
    pub fn new(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let s = Self {
            vertices,
            orientation: 1.0,
        };
        s.check()?;
        Ok(s)
    }

    pub fn with_orientation(mut self, sign: f64) -> Self {
        self.orientation = if sign < 0.0 { -1.0 } else { 1.0 };
        self
    }

    fn check(&self) -> Result<()> {
        let n = self.vertices.first().map(Vec::len).unwrap_or(0);
        if self.vertices.is_empty() || self.vertices.iter().any(|v| v.len() != n) {
            return Err(Error::InvalidParameter("simplex vertices must share one dimension".into()));
        }
        if self.degree() > n {
            return Err(Error::DegreeOverflow {
                degree: self.degree(),
                ambient: n,
            });
        }
        let vol = self.volume();
        if self.degree() > 0 && !(vol > 0.0) {
            return Err(Error::DegenerateSimplex { volume: vol });
        }
        Ok(())
    }

    pub fn degree(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn ambient(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    /// Wedge of the edge vectors `v_k − v_0` (orientation included); its
    /// mass is `r!` times the volume.
    pub fn edge_wedge(&self) -> MultiVector {
        edge_wedge(&self.vertices.iter().map(Vec::as_slice).collect::<Vec<_>>()).scale(self.orientation)
    }

    /// r-dimensional volume from the Gram determinant.
    pub fn volume(&self) -> f64 {
        simplex_volume(&self.vertices.iter().map(Vec::as_slice).collect::<Vec<_>>())
    }

    /// Unit orienting r-vector.
    pub fn tangent(&self) -> MultiVector {
        let w = self.edge_wedge();
        let m = w.norm();
        if m == 0.0 {
            w
        } else {
            w.scale(1.0 / m)
        }
    }

    pub fn centroid(&self) -> Vec<f64> {
        centroid(&self.vertices.iter().map(Vec::as_slice).collect::<Vec<_>>())
    }
}

fn edge_wedge(vs: &[&[f64]]) -> MultiVector {
    let n = vs[0].len();
    let edges: Vec<Vec<f64>> = vs[1..]
        .iter()
        .map(|v| v.iter().zip(vs[0]).map(|(a, b)| a - b).collect())
        .collect();
    let refs: Vec<&[f64]> = edges.iter().map(Vec::as_slice).collect();
    MultiVector::from_vectors(n, &refs).expect("edge count ≤ ambient dimension")
}

fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |a, i| a * i as f64)
}

fn simplex_volume(vs: &[&[f64]]) -> f64 {
    let r = vs.len() - 1;
    if r == 0 {
        return 1.0;
    }
    let e = DMatrix::from_fn(vs[0].len(), r, |i, k| vs[k + 1][i] - vs[0][i]);
    let g = e.transpose() * e;
    g.determinant().max(0.0).sqrt() / factorial(r)
}

fn centroid(vs: &[&[f64]]) -> Vec<f64> {
    let n = vs[0].len();
    (0..n)
        .map(|i| vs.iter().map(|v| v[i]).sum::<f64>() / vs.len() as f64)
        .collect()
}

/// An oriented cell of a chain: vertex indices and multiplicity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub indices: Vec<usize>,
    #[serde(default = "one")]
    pub multiplicity: f64,
}

fn one() -> f64 {
    1.0
}

/// Result of a mass computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassReport {
    pub value: f64,
    /// False when overlapping cells were detected; the value is then only
    /// an upper bound of the dual mass.
    pub exact: bool,
}

/// Quadrature settings for chain evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    /// Polynomial exactness degree of the simplex rule.
    pub degree: usize,
    /// Uniform subdivision levels applied before integrating.
    pub levels: usize,
    /// Also integrate one level finer and report a Richardson estimate.
    pub estimate_error: bool,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            degree: 5,
            levels: 0,
            estimate_error: false,
        }
    }
}

impl Quadrature {
    pub fn with_degree(degree: usize) -> Self {
        Self {
            degree,
            ..Self::default()
        }
    }

    pub fn with_levels(mut self, levels: usize) -> Self {
        self.levels = levels;
        self
    }
}

/// A value with an optional quadrature error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub error: Option<f64>,
}

/// Serialized chain layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainFile {
    pub ambient: usize,
    pub degree: usize,
    pub vertices: Vec<Vec<f64>>,
    pub simplices: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    ambient: usize,
    degree: usize,
    vertices: Vec<Vec<f64>>,
    cells: Vec<Cell>,
}

fn vertex_key(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| if *x == 0.0 { 0 } else { x.to_bits() }).collect()
}

impl Chain {
    pub fn new(ambient: usize, degree: usize, vertices: Vec<Vec<f64>>, cells: Vec<Cell>) -> Result<Self> {
        if degree > ambient {
            return Err(Error::DegreeOverflow { degree, ambient });
        }
        if let Some(v) = vertices.iter().find(|v| v.len() != ambient) {
            return Err(Error::DimensionMismatch {
                expected: ambient,
                found: v.len(),
            });
        }
        if vertices.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite vertex coordinate".into()));
        }
        for c in &cells {
            if c.indices.len() != degree + 1 {
                return Err(Error::DegreeMismatch {
                    expected: degree,
                    found: c.indices.len().saturating_sub(1),
                });
            }
            if c.indices.iter().any(|&i| i >= vertices.len()) || sort_with_sign(&c.indices).is_none() {
                return Err(Error::InvalidMultiIndex(c.indices.clone()));
            }
            if !c.multiplicity.is_finite() {
                return Err(Error::InvalidParameter("non-finite multiplicity".into()));
            }
        }
        Ok(Self {
            ambient,
            degree,
            vertices,
            cells,
        })
    }

    pub fn zero(ambient: usize, degree: usize) -> Self {
        Self {
            ambient,
            degree,
            vertices: Vec::new(),
            cells: Vec::new(),
        }
    }

    /// Builds a chain from explicit simplices, merging coincident vertices.
    pub fn from_simplices(ambient: usize, degree: usize, simplices: &[(Vec<Vec<f64>>, f64)]) -> Result<Self> {
        let mut table: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut vertices = Vec::new();
        let mut cells = Vec::new();
        for (vs, m) in simplices {
            let indices = vs
                .iter()
                .map(|v| {
                    *table.entry(vertex_key(v)).or_insert_with(|| {
                        vertices.push(v.clone());
                        vertices.len() - 1
                    })
                })
                .collect();
            cells.push(Cell {
                indices,
                multiplicity: *m,
            });
        }
        Self::new(ambient, degree, vertices, cells)
    }

    /// A single simplex with multiplicity 1.
    pub fn simplex(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let s = Simplex::new(vertices)?;
        let (n, r) = (s.ambient(), s.degree());
        Self::from_simplices(n, r, &[(s.vertices, 1.0)])
    }

    /// A 0-chain: a weighted point.
    pub fn point(x: Vec<f64>, multiplicity: f64) -> Self {
        let n = x.len();
        Self::new(
            n,
            0,
            vec![x],
            vec![Cell {
                indices: vec![0],
                multiplicity,
            }],
        )
        .expect("valid point")
    }

    /// The oriented segment from `a` to `b`.
    pub fn segment(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        Self::simplex(vec![a, b])
    }

    /// `[0,1]²` as two positively oriented triangles.
    pub fn unit_square() -> Self {
        Self::kuhn_box(&AxisBox::unit(2), 1).expect("valid box")
    }

    /// Kuhn (Freudenthal) triangulation of a box at `m` cells per axis,
    /// every top simplex positively oriented.
    pub fn kuhn_box(region: &AxisBox, m: usize) -> Result<Self> {
        Ok(crate::complex::SimplicialComplex::freudenthal(region, m)?.fundamental_chain())
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn simplices(&self) -> impl Iterator<Item = (Simplex, f64)> + '_ {
        self.cells.iter().map(|c| {
            (
                Simplex {
                    vertices: c.indices.iter().map(|&i| self.vertices[i].clone()).collect(),
                    orientation: 1.0,
                },
                c.multiplicity,
            )
        })
    }

    fn cell_vertices(&self, c: &Cell) -> Vec<&[f64]> {
        c.indices.iter().map(|&i| self.vertices[i].as_slice()).collect()
    }

    pub fn to_file(&self) -> ChainFile {
        ChainFile {
            ambient: self.ambient,
            degree: self.degree,
            vertices: self.vertices.clone(),
            simplices: self.cells.clone(),
        }
    }

    pub fn from_file(f: ChainFile) -> Result<Self> {
        Self::new(f.ambient, f.degree, f.vertices, f.simplices)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("chain serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: ChainFile = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_file(f)
    }

    /// Smallest box containing the vertices used by cells.
    pub fn bounding_box(&self) -> Option<AxisBox> {
        let used: Vec<Vec<f64>> = self
            .cells
            .iter()
            .flat_map(|c| c.indices.iter().map(|&i| self.vertices[i].clone()))
            .collect();
        AxisBox::bounding(&used)
    }

    pub fn scale(&self, s: f64) -> Chain {
        let mut out = self.clone();
        out.cells.iter_mut().for_each(|c| c.multiplicity *= s);
        out
    }

    /// Formal sum; coincident vertices are merged.
    pub fn add(&self, other: &Chain) -> Result<Chain> {
        if self.ambient != other.ambient {
            return Err(Error::DimensionMismatch {
                expected: self.ambient,
                found: other.ambient,
            });
        }
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch {
                expected: self.degree,
                found: other.degree,
            });
        }
        let mut all: Vec<(Vec<Vec<f64>>, f64)> = Vec::new();
        for ch in [self, other] {
            for c in &ch.cells {
                all.push((c.indices.iter().map(|&i| ch.vertices[i].clone()).collect(), c.multiplicity));
            }
        }
        Chain::from_simplices(self.ambient, self.degree, &all)
    }

    pub fn sub(&self, other: &Chain) -> Result<Chain> {
        self.add(&other.scale(-1.0))
    }

    /// Merges cells on the same vertex set (with orientation parity) and
    /// drops zero multiplicities.
    pub fn simplify(&self) -> Chain {
        let mut acc: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for c in &self.cells {
            let (sign, key) = sort_with_sign(&c.indices).expect("distinct indices");
            *acc.entry(key).or_insert(0.0) += sign * c.multiplicity;
        }
        let scale = self.cells.iter().map(|c| c.multiplicity.abs()).fold(0.0, f64::max);
        let cells = acc
            .into_iter()
            .filter(|(_, m)| m.abs() > 1e-14 * scale)
            .map(|(indices, multiplicity)| Cell { indices, multiplicity })
            .collect();
        Chain {
            cells,
            ..self.clone()
        }
    }

    /// Boundary chain with exact cancellation of shared faces.
    pub fn boundary(&self) -> Result<Chain> {
        if self.degree == 0 {
            return Err(Error::DegreeZero);
        }
        let mut faces = Vec::with_capacity(self.cells.len() * (self.degree + 1));
        for c in &self.cells {
            for k in 0..c.indices.len() {
                let face: Vec<usize> = c
                    .indices
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != k)
                    .map(|(_, &i)| i)
                    .collect();
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                faces.push(Cell {
                    indices: face,
                    multiplicity: sign * c.multiplicity,
                });
            }
        }
        Ok(Chain {
            ambient: self.ambient,
            degree: self.degree - 1,
            vertices: self.vertices.clone(),
            cells: faces,
        }
        .simplify())
    }

    /// `Σ |m_i| vol_i`, flagged inexact when overlapping cells are found.
    pub fn mass(&self) -> MassReport {
        let value = self
            .cells
            .iter()
            .map(|c| c.multiplicity.abs() * simplex_volume(&self.cell_vertices(c)))
            .sum();
        MassReport {
            value,
            exact: !self.has_overlap(),
        }
    }

    /// Detects repeated vertex sets and, for full-dimensional chains,
    /// cells whose centroid lies strictly inside another cell.
    pub fn has_overlap(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        for c in &self.cells {
            let (_, key) = sort_with_sign(&c.indices).expect("distinct indices");
            let pos_key: Vec<Vec<u64>> = {
                let mut k: Vec<Vec<u64>> = key.iter().map(|&i| vertex_key(&self.vertices[i])).collect();
                k.sort();
                k
            };
            if !seen.insert(pos_key) {
                return true;
            }
        }
        if self.degree != self.ambient || self.degree == 0 || self.cells.len() > 20_000 {
            return false;
        }
        let n = self.ambient;
        let boxes: Vec<(Vec<f64>, Vec<f64>)> = self
            .cells
            .iter()
            .map(|c| {
                let vs = self.cell_vertices(c);
                let lo = (0..n).map(|i| vs.iter().map(|v| v[i]).fold(f64::INFINITY, f64::min)).collect();
                let hi = (0..n).map(|i| vs.iter().map(|v| v[i]).fold(f64::NEG_INFINITY, f64::max)).collect();
                (lo, hi)
            })
            .collect();
        let mut order: Vec<usize> = (0..self.cells.len()).collect();
        order.sort_by(|&a, &b| boxes[a].0[0].total_cmp(&boxes[b].0[0]));
        for (pos, &a) in order.iter().enumerate() {
            let ca = centroid(&self.cell_vertices(&self.cells[a]));
            for &b in &order[pos + 1..] {
                if boxes[b].0[0] > boxes[a].1[0] {
                    break;
                }
                let cb = centroid(&self.cell_vertices(&self.cells[b]));
                if strictly_inside(&self.cell_vertices(&self.cells[b]), &ca)
                    || strictly_inside(&self.cell_vertices(&self.cells[a]), &cb)
                {
                    return true;
                }
            }
        }
        false
    }

    /// Applies `f` to every vertex (vertex-mapped image chain).
    pub fn map_vertices<F: Fn(&[f64]) -> Vec<f64> + Sync>(&self, f: F) -> Result<Chain> {
        let vertices: Vec<Vec<f64>> = self.vertices.par_iter().map(|v| f(v)).collect();
        let n = vertices.first().map(Vec::len).unwrap_or(self.ambient);
        Chain::new(n, self.degree, vertices, self.cells.clone())
    }

    /// Count of cells whose image volume is zero (collapsed).
    pub fn degenerate_cells(&self) -> usize {
        if self.degree == 0 {
            return 0;
        }
        self.cells
            .iter()
            .filter(|c| !(simplex_volume(&self.cell_vertices(c)) > 0.0))
            .count()
    }

    /// Uniform edgewise (Freudenthal) subdivision, `2^r` children per
    /// simplex and level. Cells are first put in increasing global index
    /// order, so shared faces are split identically and boundaries still
    /// cancel.
    pub fn subdivide(&self, levels: usize) -> Chain {
        let mut cur = self.clone();
        for _ in 0..levels {
            cur = cur.subdivide_once();
        }
        cur
    }

    fn subdivide_once(&self) -> Chain {
        let r = self.degree;
        if r == 0 {
            return self.clone();
        }
        let template = subdivision_template(r);
        let mut vertices = self.vertices.clone();
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut cells = Vec::with_capacity(self.cells.len() << r);
        for c in &self.cells {
            let (sign, sorted) = sort_with_sign(&c.indices).expect("distinct indices");
            for child in template {
                let indices = child
                    .pairs
                    .iter()
                    .map(|&(a, b)| {
                        let (ga, gb) = (sorted[a], sorted[b]);
                        if ga == gb {
                            return ga;
                        }
                        *midpoints.entry((ga, gb)).or_insert_with(|| {
                            let m = vertices[ga].iter().zip(&vertices[gb]).map(|(p, q)| 0.5 * (p + q)).collect();
                            vertices.push(m);
                            vertices.len() - 1
                        })
                    })
                    .collect();
                cells.push(Cell {
                    indices,
                    multiplicity: sign * child.sign * c.multiplicity,
                });
            }
        }
        Chain {
            ambient: self.ambient,
            degree: r,
            vertices,
            cells,
        }
    }

    fn check_domain(&self, phi: &FormField) -> Result<()> {
        if let Some(d) = phi.domain() {
            for c in &self.cells {
                for &i in &c.indices {
                    if !d.contains(&self.vertices[i]) {
                        return Err(Error::DomainEscape {
                            point: self.vertices[i].clone(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn integrate(&self, phi: &FormField, degree: usize) -> f64 {
        let r = self.degree;
        let rule = simplex_rule(r, degree);
        let rfact = factorial(r);
        let terms: Vec<f64> = self
            .cells
            .par_iter()
            .map(|c| {
                let vs = self.cell_vertices(c);
                let xi = edge_wedge(&vs);
                if xi.is_zero() && r > 0 {
                    return 0.0;
                }
                let mut x = vec![0.0; self.ambient];
                let mut acc = 0.0;
                for (bary, w) in rule.barycentric.iter().zip(&rule.weights) {
                    x.iter_mut().for_each(|xi| *xi = 0.0);
                    for (l, v) in bary.iter().zip(&vs) {
                        x.iter_mut().zip(v.iter()).for_each(|(xi, vi)| *xi += l * vi);
                    }
                    acc += w * pair_coeffs(&phi.eval_coeffs(&x), xi.coeffs());
                }
                c.multiplicity * acc / rfact
            })
            .collect();
        terms.iter().sum()
    }

    fn check_form(&self, phi: &FormField) -> Result<()> {
        if phi.dim() != self.ambient {
            return Err(Error::DimensionMismatch {
                expected: self.ambient,
                found: phi.dim(),
            });
        }
        if phi.degree() != self.degree {
            return Err(Error::DegreeMismatch {
                expected: self.degree,
                found: phi.degree(),
            });
        }
        self.check_domain(phi)
    }

    /// `T(φ) = Σ m_i ∫_{σ_i} ⟨φ, T⃗⟩ dVol` with the default rule.
    pub fn evaluate(&self, phi: &FormField) -> Result<f64> {
        Ok(self.evaluate_with(phi, &Quadrature::default())?.value)
    }

    pub fn evaluate_with(&self, phi: &FormField, q: &Quadrature) -> Result<Evaluation> {
        self.check_form(phi)?;
        let base = self.subdivide(q.levels);
        let coarse = base.integrate(phi, q.degree);
        if !q.estimate_error || self.degree == 0 {
            return Ok(Evaluation {
                value: coarse,
                error: if q.estimate_error { Some(0.0) } else { None },
            });
        }
        let fine = base.subdivide_once().integrate(phi, q.degree);
        let p = (simplex_rule(self.degree, q.degree).degree + 1) as i32;
        Ok(Evaluation {
            value: fine,
            error: Some((fine - coarse).abs() / (2f64.powi(p) - 1.0)),
        })
    }
}

fn strictly_inside(vs: &[&[f64]], x: &[f64]) -> bool {
    let n = x.len();
    let a = DMatrix::from_fn(n, n, |i, k| vs[k + 1][i] - vs[0][i]);
    let b = nalgebra::DVector::from_fn(n, |i, _| x[i] - vs[0][i]);
    match a.lu().solve(&b) {
        Some(l) => {
            let s: f64 = l.iter().sum();
            l.iter().all(|&li| li > 1e-12) && s < 1.0 - 1e-12
        }
        None => false,
    }
}

/// One child of the edgewise subdivision of the reference simplex: each
/// vertex is the midpoint of local vertices `(a, b)` (`a == b` for an
/// original vertex), plus its orientation relative to the parent.
#[derive(Debug)]
struct Child {
    pairs: Vec<(usize, usize)>,
    sign: f64,
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// The parent simplex `v_0 … v_r` corresponds to `{2 ≥ y_1 ≥ … ≥ y_r ≥ 0}`
/// under `x = v_0 + Σ_k (y_k/2)(v_k − v_{k−1})`; its children are the Kuhn
/// simplices of the unit cubes of `[0,2]^r` lying in that region.
fn subdivision_template(r: usize) -> &'static [Child] {
    static CACHE: OnceLock<Vec<Vec<Child>>> = OnceLock::new();
    let all = CACHE.get_or_init(|| (0..=crate::exterior::MAX_DIM).map(build_template).collect());
    &all[r]
}

fn build_template(r: usize) -> Vec<Child> {
    if r == 0 || r > 6 {
        return Vec::new();
    }
    let mut out = Vec::new();
    let perms = permutations(r);
    for corner in 0..(1u32 << r) {
        let c: Vec<i32> = (0..r).map(|i| ((corner >> i) & 1) as i32).collect();
        for p in &perms {
            let mut pts = vec![c.clone()];
            for &axis in p {
                let mut y = pts.last().unwrap().clone();
                y[axis] += 1;
                pts.push(y);
            }
            let ordered = pts.iter().all(|y| y.windows(2).all(|w| w[0] >= w[1]) && y[0] <= 2);
            if !ordered {
                continue;
            }
            let pairs = pts
                .iter()
                .map(|y| {
                    let twos = y.iter().filter(|&&v| v == 2).count();
                    let nonzero = y.iter().filter(|&&v| v >= 1).count();
                    (twos, nonzero)
                })
                .collect();
            let m = DMatrix::from_fn(r, r, |i, k| (pts[k + 1][i] - pts[0][i]) as f64);
            let sign = m.determinant().signum();
            out.push(Child { pairs, sign });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polynomial::Polynomial;
    use approx::assert_abs_diff_eq;

    fn c(n: usize, v: f64) -> Polynomial {
        Polynomial::constant(n, v)
    }

    #[test]
    fn template_has_two_to_the_r_children() {
        for r in 1..=4 {
            let t = subdivision_template(r);
            assert_eq!(t.len(), 1 << r);
            assert!(t.iter().all(|ch| ch.sign.abs() == 1.0));
        }
    }

    #[test]
    fn evaluation_examples() {
        let seg = Chain::segment(vec![0.0], vec![1.0]).unwrap();
        let dx = FormField::monomial_form(1, &[0], c(1, 1.0)).unwrap();
        assert_abs_diff_eq!(seg.evaluate(&dx).unwrap(), 1.0, epsilon = 1e-15);
        let xdx = FormField::monomial_form(1, &[0], Polynomial::var(1, 0)).unwrap();
        assert_abs_diff_eq!(seg.evaluate(&xdx).unwrap(), 0.5, epsilon = 1e-15);
        let sq = Chain::unit_square();
        let area = FormField::monomial_form(2, &[0, 1], c(2, 1.0)).unwrap();
        assert_abs_diff_eq!(sq.evaluate(&area).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn mass_examples() {
        let sq = Chain::unit_square();
        assert_eq!(sq.cells().len(), 2);
        let m = sq.mass();
        assert_abs_diff_eq!(m.value, 1.0, epsilon = 1e-15);
        assert!(m.exact);
        assert_abs_diff_eq!(sq.scale(-2.0).mass().value, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sq.boundary().unwrap().mass().value, 4.0, epsilon = 1e-15);
        let doubled = Chain::new(2, 2, sq.vertices().to_vec(), [sq.cells(), sq.cells()].concat()).unwrap();
        assert!(!doubled.mass().exact);
    }

    #[test]
    fn boundary_examples() {
        let tri = Chain::simplex(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let b = tri.boundary().unwrap();
        assert_eq!(b.cells().len(), 3);
        assert_abs_diff_eq!(b.mass().value, 2.0 + 2f64.sqrt(), epsilon = 1e-14);
        let tet = Chain::simplex(vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        assert!(tet.boundary().unwrap().boundary().unwrap().is_empty());
        assert_eq!(Chain::point(vec![0.0], 1.0).boundary().unwrap_err(), Error::DegreeZero);
    }

    #[test]
    fn subdivision_preserves_boundary_and_evaluation() {
        let sq = Chain::unit_square();
        let fine = sq.subdivide(2);
        assert_eq!(fine.cells().len(), 2 * 16);
        assert_abs_diff_eq!(fine.mass().value, 1.0, epsilon = 1e-14);
        let b = fine.boundary().unwrap();
        assert_abs_diff_eq!(b.mass().value, 4.0, epsilon = 1e-14);
        assert_eq!(b.cells().len(), 16);
        let x = Polynomial::var(2, 0);
        let phi = FormField::monomial_form(2, &[0, 1], x.pow(7)).unwrap();
        let e = sq.evaluate_with(&phi, &Quadrature { levels: 2, estimate_error: true, ..Default::default() }).unwrap();
        assert!((e.value - 0.125).abs() < 1e-6);
        assert!(e.error.unwrap() < 1e-5);
    }

    #[test]
    fn json_round_trip() {
        let sq = Chain::unit_square();
        let back = Chain::from_json(&sq.to_json()).unwrap();
        assert_eq!(back, sq);
        assert!(matches!(Chain::from_json("{ nope"), Err(Error::Parse(_))));
    }

    #[test]
    fn degenerate_simplex_rejected() {
        assert!(matches!(
            Simplex::new(vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]]),
            Err(Error::DegenerateSimplex { .. })
        ));
    }
}
