//! Simplicial complexes hosting chains for the flat-norm LP.
//!
//! Every k-simplex is stored with increasing vertex indices; that order is
//! its reference orientation. Coefficient vectors over k-simplices are
//! multiplicities relative to that orientation.

use std::collections::{BTreeSet, HashMap};

use nalgebra::DMatrix;

use crate::chain::{Cell, Chain};
use crate::error::{Error, Result};
use crate::exterior::sort_with_sign;
use crate::form::AxisBox;

#[derive(Debug, Clone)]
pub struct SimplicialComplex {
    dim: usize,
    vertices: Vec<Vec<f64>>,
    /// `simplices[k]` lists the k-simplices, each with sorted indices.
    simplices: Vec<Vec<Vec<usize>>>,
    lookup: Vec<HashMap<Vec<usize>, usize>>,
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

fn volume(vs: &[&[f64]]) -> f64 {
    let r = vs.len() - 1;
    if r == 0 {
        return 1.0;
    }
    let e = DMatrix::from_fn(vs[0].len(), r, |i, k| vs[k + 1][i] - vs[0][i]);
    let f: f64 = (1..=r).map(|i| i as f64).product();
    (e.transpose() * e).determinant().max(0.0).sqrt() / f
}

impl SimplicialComplex {
    /// Builds the complex generated by the given top simplices (all faces
    /// are added).
    pub fn from_top_simplices(vertices: Vec<Vec<f64>>, top: Vec<Vec<usize>>) -> Result<Self> {
        let dim = top.first().map(|s| s.len() - 1).unwrap_or(0);
        let mut sets: Vec<BTreeSet<Vec<usize>>> = vec![BTreeSet::new(); dim + 1];
        for s in &top {
            if s.len() != dim + 1 {
                return Err(Error::DegreeMismatch {
                    expected: dim,
                    found: s.len().saturating_sub(1),
                });
            }
            let (_, sorted) = sort_with_sign(s).ok_or_else(|| Error::InvalidMultiIndex(s.clone()))?;
            if sorted.iter().any(|&i| i >= vertices.len()) {
                return Err(Error::InvalidMultiIndex(s.clone()));
            }
            for mask in 1u32..(1 << (dim + 1)) {
                let face: Vec<usize> = (0..=dim).filter(|k| mask & (1 << k) != 0).map(|k| sorted[k]).collect();
                sets[face.len() - 1].insert(face);
            }
        }
        let simplices: Vec<Vec<Vec<usize>>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
        let lookup = simplices
            .iter()
            .map(|list| list.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect())
            .collect();
        Ok(Self {
            dim,
            vertices,
            simplices,
            lookup,
        })
    }

    /// Freudenthal/Kuhn triangulation of a box with `m` cells per axis:
    /// each grid cube is split into `n!` simplices along its main diagonal.
    pub fn freudenthal(region: &AxisBox, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("resolution must be positive".into()));
        }
        let n = region.dim();
        let side = m + 1;
        let total = side.pow(n as u32);
        let vertices: Vec<Vec<f64>> = (0..total)
            .map(|flat| {
                let mut rem = flat;
                (0..n)
                    .map(|i| {
                        let k = rem % side;
                        rem /= side;
                        let (a, b) = (region.lower()[i], region.upper()[i]);
                        if k == m {
                            b
                        } else {
                            a + (b - a) * k as f64 / m as f64
                        }
                    })
                    .collect()
            })
            .collect();
        let strides: Vec<usize> = (0..n).map(|i| side.pow(i as u32)).collect();
        let perms = permutations(n);
        let mut top = Vec::with_capacity(m.pow(n as u32) * perms.len());
        for cube in 0..m.pow(n as u32) {
            let mut rem = cube;
            let base: usize = (0..n)
                .map(|i| {
                    let k = rem % m;
                    rem /= m;
                    k * strides[i]
                })
                .sum();
            for p in &perms {
                let mut cur = base;
                let mut s = vec![cur];
                for &axis in p {
                    cur += strides[axis];
                    s.push(cur);
                }
                top.push(s);
            }
        }
        Self::from_top_simplices(vertices, top)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    /// The k-simplices (empty above the top dimension).
    pub fn simplices(&self, k: usize) -> &[Vec<usize>] {
        self.simplices.get(k).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn index_of(&self, k: usize, sorted: &[usize]) -> Option<usize> {
        self.lookup.get(k)?.get(sorted).copied()
    }

    /// Volumes of the k-simplices.
    pub fn volumes(&self, k: usize) -> Vec<f64> {
        self.simplices(k)
            .iter()
            .map(|s| volume(&s.iter().map(|&i| self.vertices[i].as_slice()).collect::<Vec<_>>()))
            .collect()
    }

    /// Signed orientation of each top simplex's sorted vertex order
    /// relative to the standard orientation of ℝⁿ (only when the complex
    /// is full-dimensional).
    pub fn top_orientations(&self) -> Vec<f64> {
        let n = self.vertices.first().map(Vec::len).unwrap_or(0);
        self.simplices(self.dim)
            .iter()
            .map(|s| {
                if self.dim != n {
                    return 1.0;
                }
                let v = |k: usize| &self.vertices[s[k]];
                DMatrix::from_fn(n, n, |i, k| v(k + 1)[i] - v(0)[i]).determinant().signum()
            })
            .collect()
    }

    /// Signed incidence matrix between k-faces (rows) and
    /// (k+1)-simplices (columns): `∂σ = Σ_j (−1)^j face_j(σ)`.
    pub fn incidence(&self, k: usize) -> DMatrix<f64> {
        let rows = self.simplices(k).len();
        let cols = self.simplices(k + 1);
        let mut b = DMatrix::zeros(rows, cols.len());
        for (j, s) in cols.iter().enumerate() {
            for (f, sign) in faces(s) {
                let i = self.index_of(k, &f).expect("faces of complex simplices are present");
                b[(i, j)] += sign;
            }
        }
        b
    }

    /// Same incidence as sparse column lists `(row, sign)`.
    pub fn incidence_columns(&self, k: usize) -> Vec<Vec<(usize, f64)>> {
        self.simplices(k + 1)
            .iter()
            .map(|s| {
                faces(s)
                    .into_iter()
                    .map(|(f, sign)| (self.index_of(k, &f).expect("face present"), sign))
                    .collect()
            })
            .collect()
    }

    fn locate_vertex(&self, x: &[f64], index: &HashMap<Vec<u64>, usize>, tol: f64) -> Option<usize> {
        let key: Vec<u64> = x.iter().map(|v| if *v == 0.0 { 0 } else { v.to_bits() }).collect();
        if let Some(&i) = index.get(&key) {
            return Some(i);
        }
        self.vertices
            .iter()
            .position(|v| v.iter().zip(x).all(|(a, b)| (a - b).abs() <= tol))
    }

    /// Coefficients of a chain over the k-simplices of the complex.
    pub fn chain_coefficients(&self, chain: &Chain) -> Result<Vec<f64>> {
        let k = chain.degree();
        let index: HashMap<Vec<u64>, usize> = self
            .vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.iter().map(|x| if *x == 0.0 { 0 } else { x.to_bits() }).collect(), i))
            .collect();
        let scale = self
            .vertices
            .iter()
            .flatten()
            .fold(1.0f64, |a, x| a.max(x.abs()));
        let mut out = vec![0.0; self.simplices(k).len()];
        for c in chain.cells() {
            let mapped: Option<Vec<usize>> = c
                .indices
                .iter()
                .map(|&i| self.locate_vertex(&chain.vertices()[i], &index, 1e-12 * scale))
                .collect();
            let not_supported = || Error::ChainNotSupported {
                cell: c.indices.clone(),
            };
            let mapped = mapped.ok_or_else(not_supported)?;
            let (sign, sorted) = sort_with_sign(&mapped).ok_or_else(not_supported)?;
            let j = self.index_of(k, &sorted).ok_or_else(not_supported)?;
            out[j] += sign * c.multiplicity;
        }
        Ok(out)
    }

    /// Chain with the given multiplicities on the k-simplices (zero
    /// entries are dropped).
    pub fn chain_from_coefficients(&self, k: usize, coeffs: &[f64]) -> Chain {
        let n = self.vertices.first().map(Vec::len).unwrap_or(0);
        let cells = self
            .simplices(k)
            .iter()
            .zip(coeffs)
            .filter(|(_, &c)| c != 0.0)
            .map(|(s, &c)| Cell {
                indices: s.clone(),
                multiplicity: c,
            })
            .collect();
        Chain::new(n, k, self.vertices.clone(), cells).expect("complex simplices are valid cells")
    }

    /// The positively oriented fundamental chain of a full-dimensional
    /// complex.
    pub fn fundamental_chain(&self) -> Chain {
        self.chain_from_coefficients(self.dim, &self.top_orientations())
    }

    /// Image complex under a vertex map (same combinatorics).
    pub fn map_vertices<F: Fn(&[f64]) -> Vec<f64>>(&self, f: F) -> SimplicialComplex {
        SimplicialComplex {
            vertices: self.vertices.iter().map(|v| f(v)).collect(),
            ..self.clone()
        }
    }
}

/// Oriented faces of a sorted simplex with their boundary signs.
fn faces(s: &[usize]) -> Vec<(Vec<usize>, f64)> {
    (0..s.len())
        .map(|k| {
            let f: Vec<usize> = s.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, &i)| i).collect();
            (f, if k % 2 == 0 { 1.0 } else { -1.0 })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn freudenthal_counts() {
        let cx = SimplicialComplex::freudenthal(&AxisBox::unit(2), 3).unwrap();
        assert_eq!(cx.vertices().len(), 16);
        assert_eq!(cx.simplices(2).len(), 18);
        // edges: 2·3·4 axis edges + 9 diagonals
        assert_eq!(cx.simplices(1).len(), 33);
        let cube = SimplicialComplex::freudenthal(&AxisBox::unit(3), 2).unwrap();
        assert_eq!(cube.simplices(3).len(), 48);
        let total: f64 = cube.volumes(3).iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn incidence_matches_chain_boundary() {
        let cx = SimplicialComplex::freudenthal(&AxisBox::unit(2), 2).unwrap();
        let b = cx.incidence(1);
        for (j, s) in cx.simplices(2).iter().enumerate() {
            let ch = cx.chain_from_coefficients(2, &(0..cx.simplices(2).len()).map(|i| if i == j { 1.0 } else { 0.0 }).collect::<Vec<_>>());
            let bd = cx.chain_coefficients(&ch.boundary().unwrap()).unwrap();
            for i in 0..bd.len() {
                assert_eq!(bd[i], b[(i, j)], "simplex {s:?}");
            }
        }
        // boundary of boundary vanishes
        let bb = cx.incidence(0) * &b;
        assert!(bb.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn fundamental_chain_boundary_is_the_square_perimeter() {
        let cx = SimplicialComplex::freudenthal(&AxisBox::unit(2), 4).unwrap();
        let t = cx.fundamental_chain();
        assert!((t.mass().value - 1.0).abs() < 1e-14);
        assert!((t.boundary().unwrap().mass().value - 4.0).abs() < 1e-14);
    }

    #[test]
    fn unsupported_chain_is_reported() {
        let cx = SimplicialComplex::freudenthal(&AxisBox::unit(2), 2).unwrap();
        let seg = Chain::segment(vec![0.1, 0.0], vec![0.5, 0.0]).unwrap();
        assert!(matches!(cx.chain_coefficients(&seg), Err(Error::ChainNotSupported { .. })));
    }
}
