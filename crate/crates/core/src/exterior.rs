//! Finite-dimensional exterior algebra over ℝⁿ.
//!
//! r-vectors and r-covectors are stored densely, one coefficient per
//! increasing multi-index, in lexicographic order. Indices are 0-based in
//! the API (`e_0 = e_x`); the JSON formats in [`crate::io`] are 1-based.
//!
//! The contraction convention is front-slot insertion:
//! `(ω ⌐ v)(ξ) = ω(v ∧ ξ)`, so `(dx∧dy) ⌐ e_x = dy` and
//! `(dx∧dy) ⌐ e_y = −dx`. `v ⌟ ω` denotes the same operation.

use std::fmt;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Largest ambient dimension with a cached basis table.
pub const MAX_DIM: usize = 10;

/// Binomial coefficient C(n, k), zero when k > n.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < r - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::with_capacity(binomial(n, r));
    rec(0, n, r, &mut Vec::with_capacity(r), &mut out);
    out
}

type BasisTable = Vec<Vec<Vec<Vec<usize>>>>;

fn table() -> &'static BasisTable {
    static TABLE: OnceLock<BasisTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        (0..=MAX_DIM)
            .map(|n| (0..=n).map(|r| combinations(n, r)).collect())
            .collect()
    })
}

/// All increasing multi-indices of length `r` in `0..n`, lexicographically
/// ordered. The position in the slice is the coefficient rank.
pub fn basis(n: usize, r: usize) -> &'static [Vec<usize>] {
    assert!(n <= MAX_DIM, "ambient dimension {n} exceeds {MAX_DIM}");
    assert!(r <= n, "degree {r} exceeds ambient dimension {n}");
    &table()[n][r]
}

/// Lexicographic rank of an increasing index set, `None` if not increasing
/// or out of range.
pub fn rank_of(n: usize, entries: &[usize]) -> Option<usize> {
    if entries.len() > n || entries.iter().any(|&i| i >= n) {
        return None;
    }
    if entries.windows(2).any(|w| w[0] >= w[1]) {
        return None;
    }
    basis(n, entries.len())
        .binary_search_by(|probe| probe.as_slice().cmp(entries))
        .ok()
}

/// Sign of the permutation sorting `entries`, together with the sorted
/// indices; `None` when an index repeats.
pub fn sort_with_sign(entries: &[usize]) -> Option<(f64, Vec<usize>)> {
    let mut v = entries.to_vec();
    let mut sign = 1.0;
    // insertion sort, counting transpositions
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((sign, v))
}

/// A strictly increasing sequence of `r` indices in `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    entries: Vec<usize>,
    ambient: usize,
}

impl MultiIndex {
    pub fn new(ambient: usize, entries: Vec<usize>) -> Result<Self> {
        if rank_of(ambient, &entries).is_none() {
            return Err(Error::InvalidMultiIndex(entries));
        }
        Ok(Self { entries, ambient })
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn degree(&self) -> usize {
        self.entries.len()
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn rank(&self) -> usize {
        rank_of(self.ambient, &self.entries).expect("validated at construction")
    }

    /// Every multi-index of degree `r` in lexicographic order.
    pub fn all(ambient: usize, r: usize) -> impl Iterator<Item = MultiIndex> {
        basis(ambient, r).iter().map(move |e| MultiIndex {
            entries: e.clone(),
            ambient,
        })
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(|i| (i + 1).to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

macro_rules! graded_common {
    ($name:ident) => {
        impl $name {
            /// Builds a value from dense lexicographic coefficients.
            pub fn new(ambient: usize, degree: usize, coeffs: Vec<f64>) -> Result<Self> {
                if degree > ambient {
                    return Err(Error::DegreeOverflow { degree, ambient });
                }
                let expected = binomial(ambient, degree);
                if coeffs.len() != expected {
                    return Err(Error::DimensionMismatch {
                        expected,
                        found: coeffs.len(),
                    });
                }
                if coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidParameter("non-finite coefficient".into()));
                }
                Ok(Self {
                    ambient,
                    degree,
                    coeffs,
                })
            }

            pub fn zero(ambient: usize, degree: usize) -> Self {
                Self {
                    ambient,
                    degree,
                    coeffs: vec![0.0; binomial(ambient, degree)],
                }
            }

            /// The degree-0 element with value `c`.
            pub fn scalar(ambient: usize, c: f64) -> Self {
                Self {
                    ambient,
                    degree: 0,
                    coeffs: vec![c],
                }
            }

            /// Basis element for the index set `entries`, which need not be
            /// sorted; the permutation sign is applied.
            pub fn basis(ambient: usize, entries: &[usize]) -> Result<Self> {
                let (sign, sorted) = sort_with_sign(entries)
                    .ok_or_else(|| Error::InvalidMultiIndex(entries.to_vec()))?;
                let rank = rank_of(ambient, &sorted)
                    .ok_or_else(|| Error::InvalidMultiIndex(entries.to_vec()))?;
                let mut out = Self::zero(ambient, sorted.len());
                out.coeffs[rank] = sign;
                Ok(out)
            }

            pub fn ambient(&self) -> usize {
                self.ambient
            }

            pub fn degree(&self) -> usize {
                self.degree
            }

            pub fn coeffs(&self) -> &[f64] {
                &self.coeffs
            }

            pub fn coeffs_mut(&mut self) -> &mut [f64] {
                &mut self.coeffs
            }

            pub fn into_coeffs(self) -> Vec<f64> {
                self.coeffs
            }

            /// Coefficient of a sorted index set.
            pub fn coeff(&self, entries: &[usize]) -> f64 {
                rank_of(self.ambient, entries)
                    .filter(|_| entries.len() == self.degree)
                    .map(|r| self.coeffs[r])
                    .unwrap_or(0.0)
            }

            /// Euclidean norm of the coefficient vector.
            pub fn norm(&self) -> f64 {
                self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
            }

            pub fn is_zero(&self) -> bool {
                self.coeffs.iter().all(|&c| c == 0.0)
            }

            pub fn scale(&self, s: f64) -> Self {
                Self {
                    ambient: self.ambient,
                    degree: self.degree,
                    coeffs: self.coeffs.iter().map(|c| c * s).collect(),
                }
            }

            pub fn add(&self, other: &Self) -> Result<Self> {
                self.check_same(other)?;
                Ok(Self {
                    ambient: self.ambient,
                    degree: self.degree,
                    coeffs: self
                        .coeffs
                        .iter()
                        .zip(&other.coeffs)
                        .map(|(a, b)| a + b)
                        .collect(),
                })
            }

            pub fn sub(&self, other: &Self) -> Result<Self> {
                self.add(&other.scale(-1.0))
            }

            /// Exterior product. Fails when the degrees sum past the ambient
            /// dimension.
            pub fn wedge(&self, other: &Self) -> Result<Self> {
                if self.ambient != other.ambient {
                    return Err(Error::DimensionMismatch {
                        expected: self.ambient,
                        found: other.ambient,
                    });
                }
                let coeffs = wedge_coeffs(
                    self.ambient,
                    self.degree,
                    &self.coeffs,
                    other.degree,
                    &other.coeffs,
                )?;
                Ok(Self {
                    ambient: self.ambient,
                    degree: self.degree + other.degree,
                    coeffs,
                })
            }

            /// Wedge of a list of 1-element coordinate vectors.
            pub fn from_vectors(ambient: usize, vectors: &[&[f64]]) -> Result<Self> {
                let mut acc = Self::scalar(ambient, 1.0);
                for v in vectors {
                    let one = Self::new(ambient, 1, v.to_vec())?;
                    acc = acc.wedge(&one)?;
                }
                Ok(acc)
            }

            fn check_same(&self, other: &Self) -> Result<()> {
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
                Ok(())
            }
        }
    };
}

/// An r-vector over ℝⁿ.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiVector {
    ambient: usize,
    degree: usize,
    coeffs: Vec<f64>,
}

/// An r-covector over ℝⁿ, paired with r-vectors through the orthonormal
/// lexicographic basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CoVector {
    ambient: usize,
    degree: usize,
    coeffs: Vec<f64>,
}

graded_common!(MultiVector);
graded_common!(CoVector);

pub(crate) fn wedge_coeffs(
    n: usize,
    p: usize,
    a: &[f64],
    q: usize,
    b: &[f64],
) -> Result<Vec<f64>> {
    if p + q > n {
        return Err(Error::DegreeOverflow {
            degree: p + q,
            ambient: n,
        });
    }
    let mut out = vec![0.0; binomial(n, p + q)];
    let ba = basis(n, p);
    let bb = basis(n, q);
    let mut merged = Vec::with_capacity(p + q);
    for (ia, &ca) in a.iter().enumerate() {
        if ca == 0.0 {
            continue;
        }
        for (ib, &cb) in b.iter().enumerate() {
            if cb == 0.0 {
                continue;
            }
            merged.clear();
            merged.extend_from_slice(&ba[ia]);
            merged.extend_from_slice(&bb[ib]);
            if let Some((sign, sorted)) = sort_with_sign(&merged) {
                let r = rank_of(n, &sorted).expect("sorted indices in range");
                out[r] += sign * ca * cb;
            }
        }
    }
    Ok(out)
}

/// Front-slot contraction of dense covector coefficients with a vector.
pub(crate) fn contract_coeffs(n: usize, r: usize, w: &[f64], v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; binomial(n, r - 1)];
    let b = basis(n, r);
    let mut rest = Vec::with_capacity(r);
    for (i, &c) in w.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let idx = &b[i];
        for (k, &slot) in idx.iter().enumerate() {
            let vk = v[slot];
            if vk == 0.0 {
                continue;
            }
            rest.clear();
            rest.extend(idx.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, &e)| e));
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let pos = rank_of(n, &rest).expect("subset of a valid index");
            out[pos] += sign * c * vk;
        }
    }
    out
}

impl CoVector {
    /// Interior product `ω ⌐ v`, inserting `v` in the first slot.
    pub fn interior_product(&self, v: &[f64]) -> Result<CoVector> {
        if self.degree == 0 {
            return Err(Error::DegreeZero);
        }
        if v.len() != self.ambient {
            return Err(Error::DimensionMismatch {
                expected: self.ambient,
                found: v.len(),
            });
        }
        Ok(CoVector {
            ambient: self.ambient,
            degree: self.degree - 1,
            coeffs: contract_coeffs(self.ambient, self.degree, &self.coeffs, v),
        })
    }

    /// Alias of [`CoVector::interior_product`] written `v ⌟ ω`.
    pub fn contract_front(&self, v: &[f64]) -> Result<CoVector> {
        self.interior_product(v)
    }

    /// Comass with the default optimizer settings.
    pub fn comass(&self) -> Comass {
        self.comass_with(&ComassOptions::default())
    }

    /// Supremum of `ω(ξ)` over simple unit r-vectors `ξ`, with a maximizing
    /// witness. Exact for `r ∈ {0, 1, n−1, n}`; otherwise a lower bound from
    /// block-coordinate ascent over orthonormal r-frames with restarts.
    pub fn comass_with(&self, opts: &ComassOptions) -> Comass {
        let n = self.ambient;
        let r = self.degree;
        let norm = self.norm();
        if r == 0 || r == n {
            let sign = if self.coeffs[0] < 0.0 { -1.0 } else { 1.0 };
            let witness = MultiVector::new(n, r, vec![sign]).expect("single coefficient");
            return Comass {
                value: self.coeffs[0].abs(),
                witness,
                exact: true,
            };
        }
        if r == 1 || r + 1 == n {
            // every 1-vector and every (n-1)-vector is simple
            let coeffs = if norm > 0.0 {
                self.coeffs.iter().map(|c| c / norm).collect()
            } else {
                let mut e = vec![0.0; self.coeffs.len()];
                e[0] = 1.0;
                e
            };
            return Comass {
                value: norm,
                witness: MultiVector::new(n, r, coeffs).expect("same layout"),
                exact: true,
            };
        }
        if norm == 0.0 {
            let mut e = vec![0.0; self.coeffs.len()];
            e[0] = 1.0;
            return Comass {
                value: 0.0,
                witness: MultiVector::new(n, r, e).expect("same layout"),
                exact: true,
            };
        }
        self.comass_ascent(opts)
    }

    fn comass_ascent(&self, opts: &ComassOptions) -> Comass {
        let n = self.ambient;
        let r = self.degree;
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut best_val = f64::NEG_INFINITY;
        let mut best_frame: Vec<Vec<f64>> = Vec::new();

        // first start: the dominant basis element
        let (top, _) = self
            .coeffs
            .iter()
            .enumerate()
            .fold((0, 0.0), |acc, (i, c)| if c.abs() > acc.1 { (i, c.abs()) } else { acc });
        let top_idx = &basis(n, r)[top];
        let starts = opts.restarts.max(1);
        for start in 0..starts {
            let mut frame: Vec<Vec<f64>> = if start == 0 {
                top_idx
                    .iter()
                    .map(|&i| {
                        let mut e = vec![0.0; n];
                        e[i] = 1.0;
                        e
                    })
                    .collect()
            } else {
                let raw: Vec<Vec<f64>> = (0..r)
                    .map(|_| (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect())
                    .collect();
                match gram_schmidt(raw) {
                    Some(f) => f,
                    None => continue,
                }
            };
            let val = self.ascend(&mut frame, opts);
            if val > best_val {
                best_val = val;
                best_frame = frame;
            }
        }
        let refs: Vec<&[f64]> = best_frame.iter().map(|v| v.as_slice()).collect();
        let witness = MultiVector::from_vectors(n, &refs).expect("r ≤ n");
        Comass {
            value: best_val.max(0.0),
            witness,
            exact: false,
        }
    }

    fn frame_value(&self, frame: &[Vec<f64>]) -> f64 {
        let refs: Vec<&[f64]> = frame.iter().map(|v| v.as_slice()).collect();
        let xi = MultiVector::from_vectors(self.ambient, &refs).expect("r ≤ n");
        pair_coeffs(&self.coeffs, xi.coeffs())
    }

    fn ascend(&self, frame: &mut [Vec<f64>], opts: &ComassOptions) -> f64 {
        let n = self.ambient;
        let r = self.degree;
        let mut value = self.frame_value(frame);
        for _ in 0..opts.max_sweeps {
            for k in 0..r {
                // gradient of the multilinear value in the k-th slot
                let others: Vec<&[f64]> = frame
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != k)
                    .map(|(_, v)| v.as_slice())
                    .collect();
                let w = MultiVector::from_vectors(n, &others).expect("r-1 ≤ n");
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let mut g: Vec<f64> = (0..n)
                    .map(|j| {
                        let mut e = vec![0.0; n];
                        e[j] = 1.0;
                        let c = contract_coeffs(n, r, &self.coeffs, &e);
                        sign * pair_coeffs(&c, w.coeffs())
                    })
                    .collect();
                for (j, other) in frame.iter().enumerate() {
                    if j == k {
                        continue;
                    }
                    let d: f64 = g.iter().zip(other).map(|(a, b)| a * b).sum();
                    for (gi, oi) in g.iter_mut().zip(other) {
                        *gi -= d * oi;
                    }
                }
                let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                if gn > 1e-300 {
                    frame[k] = g.into_iter().map(|x| x / gn).collect();
                }
            }
            let next = self.frame_value(frame);
            let gain = next - value;
            value = next;
            if gain.abs() <= opts.tolerance * value.abs().max(1.0) {
                break;
            }
        }
        value
    }
}

fn gram_schmidt(mut vs: Vec<Vec<f64>>) -> Option<Vec<Vec<f64>>> {
    for i in 0..vs.len() {
        for j in 0..i {
            let d: f64 = vs[i].iter().zip(&vs[j]).map(|(a, b)| a * b).sum();
            let (head, tail) = vs.split_at_mut(i);
            for (a, b) in tail[0].iter_mut().zip(&head[j]) {
                *a -= d * b;
            }
        }
        let nrm = vs[i].iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm < 1e-12 {
            return None;
        }
        vs[i].iter_mut().for_each(|x| *x /= nrm);
    }
    Some(vs)
}

pub(crate) fn pair_coeffs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Settings for the comass optimizer used when `2 ≤ r ≤ n−2`.
#[derive(Debug, Clone)]
pub struct ComassOptions {
    pub restarts: usize,
    pub tolerance: f64,
    pub max_sweeps: usize,
    pub seed: u64,
}

impl Default for ComassOptions {
    fn default() -> Self {
        Self {
            restarts: 100,
            tolerance: 1e-8,
            max_sweeps: 500,
            seed: 42,
        }
    }
}

/// Comass value with a simple unit r-vector attaining it.
#[derive(Debug, Clone)]
pub struct Comass {
    pub value: f64,
    pub witness: MultiVector,
    /// False when the value came from the nonconvex optimizer.
    pub exact: bool,
}

/// Duality pairing `ω(ξ)`.
pub fn pair(omega: &CoVector, xi: &MultiVector) -> Result<f64> {
    if omega.ambient != xi.ambient {
        return Err(Error::DimensionMismatch {
            expected: omega.ambient,
            found: xi.ambient,
        });
    }
    if omega.degree != xi.degree {
        return Err(Error::DegreeMismatch {
            expected: omega.degree,
            found: xi.degree,
        });
    }
    Ok(pair_coeffs(&omega.coeffs, &xi.coeffs))
}

/// Euclidean mass of an r-vector.
pub fn mass(xi: &MultiVector) -> f64 {
    xi.norm()
}

/// The r-th compound of a linear map: coefficient `(μ, λ)` is the minor of
/// `a` with rows `μ` and columns `λ`. Acts on r-vectors in the lexicographic
/// basis, `∧ʳA (e_λ) = Σ_μ det(A[μ, λ]) e_μ`.
pub fn compound_matrix(a: &nalgebra::DMatrix<f64>, r: usize) -> nalgebra::DMatrix<f64> {
    let rows = basis(a.nrows(), r);
    let cols = basis(a.ncols(), r);
    let mut out = nalgebra::DMatrix::zeros(rows.len(), cols.len());
    for (i, mu) in rows.iter().enumerate() {
        for (j, lambda) in cols.iter().enumerate() {
            out[(i, j)] = if r == 0 {
                1.0
            } else {
                nalgebra::DMatrix::from_fn(r, r, |p, q| a[(mu[p], lambda[q])]).determinant()
            };
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn e(n: usize, idx: &[usize]) -> MultiVector {
        MultiVector::basis(n, idx).unwrap()
    }

    fn dx(n: usize, idx: &[usize]) -> CoVector {
        CoVector::basis(n, idx).unwrap()
    }

    #[test]
    fn basis_enumeration() {
        assert_eq!(basis(4, 2).len(), 6);
        assert_eq!(basis(4, 2)[0], vec![0, 1]);
        assert_eq!(basis(4, 2)[5], vec![2, 3]);
        assert_eq!(rank_of(4, &[1, 3]), Some(4));
        assert_eq!(rank_of(4, &[3, 1]), None);
        assert!(MultiIndex::new(3, vec![0, 0]).is_err());
        assert_eq!(MultiIndex::all(5, 3).count(), 10);
        assert_eq!(MultiIndex::new(3, vec![0, 2]).unwrap().to_string(), "{1,3}");
    }

    #[test]
    fn wedge_basis() {
        let e1 = e(2, &[0]);
        let e2 = e(2, &[1]);
        assert_eq!(e1.wedge(&e2).unwrap().coeffs(), &[1.0]);
        assert_eq!(e1.wedge(&e1).unwrap().coeffs(), &[0.0]);
        assert_eq!(e2.wedge(&e1).unwrap().coeffs(), &[-1.0]);
    }

    #[test]
    fn wedge_overflow_is_an_error() {
        let a = e(2, &[0, 1]);
        let b = e(2, &[0]);
        assert_eq!(
            a.wedge(&b),
            Err(Error::DegreeOverflow { degree: 3, ambient: 2 })
        );
    }

    #[test]
    fn contraction_convention() {
        let w = dx(2, &[0, 1]);
        assert_eq!(w.interior_product(&[1.0, 0.0]).unwrap(), dx(2, &[1]));
        assert_eq!(w.interior_product(&[0.0, 1.0]).unwrap(), dx(2, &[0]).scale(-1.0));
        let one = dx(2, &[0]).interior_product(&[1.0, 0.0]).unwrap();
        assert_eq!(one.degree(), 0);
        assert_eq!(one.coeffs(), &[1.0]);
        assert_eq!(
            CoVector::scalar(2, 1.0).interior_product(&[1.0, 0.0]),
            Err(Error::DegreeZero)
        );
    }

    #[test]
    fn pairing_examples() {
        let n = 4;
        assert_eq!(pair(&dx(n, &[0, 1]), &e(n, &[0, 1])).unwrap(), 1.0);
        assert_eq!(pair(&dx(n, &[0, 1]), &e(n, &[0, 2])).unwrap(), 0.0);
        let w = dx(n, &[0, 1]).scale(2.0).add(&dx(n, &[2, 3])).unwrap();
        assert_eq!(pair(&w, &e(n, &[2, 3])).unwrap(), 1.0);
        assert!(pair(&dx(n, &[0]), &e(n, &[0, 1])).is_err());
    }

    #[test]
    fn mass_examples() {
        assert_eq!(mass(&e(4, &[0, 1])), 1.0);
        let xi = e(4, &[0, 1]).scale(3.0).add(&e(4, &[2, 3]).scale(4.0)).unwrap();
        assert_eq!(mass(&xi), 5.0);
        assert_eq!(mass(&MultiVector::zero(4, 2)), 0.0);
    }

    #[test]
    fn comass_exact_branches() {
        assert_eq!(dx(3, &[0]).comass().value, 1.0);
        assert_eq!(dx(2, &[0, 1]).comass().value, 1.0);
        let w = CoVector::new(3, 2, vec![3.0, 0.0, 4.0]).unwrap();
        let c = w.comass();
        assert!(c.exact);
        assert_abs_diff_eq!(c.value, 5.0, epsilon = 1e-15);
        assert_abs_diff_eq!(pair(&w, &c.witness).unwrap(), 5.0, epsilon = 1e-12);
    }

    #[test]
    fn comass_of_symplectic_form_in_r4() {
        // dx12 + dx34 has comass 1, attained at e12
        let w = dx(4, &[0, 1]).add(&dx(4, &[2, 3])).unwrap();
        let c = w.comass();
        assert!(!c.exact);
        assert_abs_diff_eq!(c.value, 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(mass(&c.witness), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(pair(&w, &c.witness).unwrap(), c.value, epsilon = 1e-12);
    }

    #[test]
    fn compound_of_rotation_preserves_area() {
        let (s, c) = 0.3f64.sin_cos();
        let a = nalgebra::DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let m = compound_matrix(&a, 2);
        assert_abs_diff_eq!(m[(0, 0)], 1.0, epsilon = 1e-15);
        let m1 = compound_matrix(&a, 1);
        assert_eq!(m1, a);
    }
}
