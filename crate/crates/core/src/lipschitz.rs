//! Lipschitz maps: a small trait with a built-in library, sampled
//! Lipschitz and bi-Lipschitz constants, strong-Lipschitz distances,
//! mollification, and vertex-mapped pushforward of chains.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::form::{AxisBox, Grid};
use crate::mollifier::Mollifier;

/// A map `ℝᵐ → ℝⁿ` (usually `m = n`).
pub trait LipMap: Send + Sync + fmt::Debug {
    fn source_dim(&self) -> usize;

    fn target_dim(&self) -> usize {
        self.source_dim()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64>;

    /// Exact Jacobian `∂f^i/∂x^j` where available (a one-sided choice is
    /// fine on kinks of piecewise-linear maps).
    fn jacobian(&self, _x: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    /// `(A, b)` when the map is `x ↦ Ax + b`.
    fn affine(&self) -> Option<(DMatrix<f64>, Vec<f64>)> {
        None
    }

    /// Exact inverse where the family provides one.
    fn inverse(&self, _y: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Declared compact set outside of which the map is the identity.
    fn identity_outside(&self) -> Option<AxisBox> {
        None
    }

    fn name(&self) -> String;

    fn clone_arc(&self) -> Arc<dyn LipMap>;
}

/// Central-difference Jacobian.
pub fn jacobian_fd(f: &dyn LipMap, x: &[f64], h: f64) -> DMatrix<f64> {
    let m = f.source_dim();
    let n = f.target_dim();
    let mut out = DMatrix::zeros(n, m);
    let mut y = x.to_vec();
    for j in 0..m {
        y[j] = x[j] + h;
        let p = f.apply(&y);
        y[j] = x[j] - h;
        let q = f.apply(&y);
        y[j] = x[j];
        for i in 0..n {
            out[(i, j)] = (p[i] - q[i]) / (2.0 * h);
        }
    }
    out
}

/// Jacobian from the map if available, otherwise by central differences.
pub fn jacobian_or_fd(f: &dyn LipMap, x: &[f64]) -> DMatrix<f64> {
    f.jacobian(x).unwrap_or_else(|| jacobian_fd(f, x, 1e-6))
}

fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    a.singular_values().iter().fold(0.0, |m: f64, &s| m.max(s))
}

/// `x ↦ Ax + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    a: DMatrix<f64>,
    b: Vec<f64>,
}

impl AffineMap {
    pub fn new(a: DMatrix<f64>, b: Vec<f64>) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                found: b.len(),
            });
        }
        Ok(Self { a, b })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            a: DMatrix::identity(n, n),
            b: vec![0.0; n],
        }
    }

    pub fn scaling(n: usize, s: f64) -> Self {
        Self {
            a: DMatrix::identity(n, n) * s,
            b: vec![0.0; n],
        }
    }

    pub fn translation(c: &[f64]) -> Self {
        Self {
            a: DMatrix::identity(c.len(), c.len()),
            b: c.to_vec(),
        }
    }

    /// Planar rotation by `angle` about `center`.
    pub fn rotation(angle: f64, center: [f64; 2]) -> Self {
        let (s, c) = angle.sin_cos();
        let a = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let b = vec![
            center[0] - c * center[0] + s * center[1],
            center[1] - s * center[0] - c * center[1],
        ];
        Self { a, b }
    }

    /// `(x, y) ↦ (x + k y, y)`.
    pub fn shear(k: f64) -> Self {
        Self {
            a: DMatrix::from_row_slice(2, 2, &[1.0, k, 0.0, 1.0]),
            b: vec![0.0, 0.0],
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn offset(&self) -> &[f64] {
        &self.b
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AffineMap) -> AffineMap {
        let b = &self.a * nalgebra::DVector::from_column_slice(&inner.b);
        AffineMap {
            a: &self.a * &inner.a,
            b: b.iter().zip(&self.b).map(|(p, q)| p + q).collect(),
        }
    }
}

impl LipMap for AffineMap {
    fn source_dim(&self) -> usize {
        self.a.ncols()
    }

    fn target_dim(&self) -> usize {
        self.a.nrows()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.a.nrows())
            .map(|i| self.b[i] + (0..self.a.ncols()).map(|j| self.a[(i, j)] * x[j]).sum::<f64>())
            .collect()
    }

    fn jacobian(&self, _x: &[f64]) -> Option<DMatrix<f64>> {
        Some(self.a.clone())
    }

    fn affine(&self) -> Option<(DMatrix<f64>, Vec<f64>)> {
        Some((self.a.clone(), self.b.clone()))
    }

    fn inverse(&self, y: &[f64]) -> Option<Vec<f64>> {
        if !self.a.is_square() {
            return None;
        }
        let rhs = nalgebra::DVector::from_iterator(y.len(), y.iter().zip(&self.b).map(|(p, q)| p - q));
        self.a.clone().lu().solve(&rhs).map(|v| v.iter().copied().collect())
    }

    fn name(&self) -> String {
        format!("affine{:?}", self.a.as_slice())
    }

    fn clone_arc(&self) -> Arc<dyn LipMap> {
        Arc::new(self.clone())
    }
}

type PointFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type MatFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// A map given by closures.
#[derive(Clone)]
pub struct FnMap {
    name: String,
    dim: usize,
    apply: PointFn,
    jacobian: Option<MatFn>,
    inverse: Option<PointFn>,
    support: Option<AxisBox>,
}

impl fmt::Debug for FnMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnMap({})", self.name)
    }
}

impl FnMap {
    pub fn new<F>(name: impl Into<String>, dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            dim,
            apply: Arc::new(f),
            jacobian: None,
            inverse: None,
            support: None,
        }
    }

    pub fn with_jacobian<F>(mut self, j: F) -> Self
    where
        F: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(j));
        self
    }

    pub fn with_inverse<F>(mut self, g: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.inverse = Some(Arc::new(g));
        self
    }

    /// Declares the map to be the identity outside `k`; evaluation outside
    /// returns the input point unchanged.
    pub fn identity_outside_box(mut self, k: AxisBox) -> Self {
        self.support = Some(k);
        self
    }
}

impl LipMap for FnMap {
    fn source_dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        match &self.support {
            Some(k) if !k.contains(x) => x.to_vec(),
            _ => (self.apply)(x),
        }
    }

    fn jacobian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        match &self.support {
            Some(k) if !k.contains(x) => Some(DMatrix::identity(self.dim, self.dim)),
            _ => self.jacobian.as_ref().map(|j| j(x)),
        }
    }

    fn inverse(&self, y: &[f64]) -> Option<Vec<f64>> {
        self.inverse.as_ref().map(|g| g(y))
    }

    fn identity_outside(&self) -> Option<AxisBox> {
        self.support.clone()
    }

    fn name(&self) -> String {
        self.name.clone()
    }

    fn clone_arc(&self) -> Arc<dyn LipMap> {
        Arc::new(self.clone())
    }
}

/// Piecewise-linear hat function of the Kuhn triangulation of the lattice
/// `center + h·ℤⁿ`, equal to 1 at `center` and 0 at every other node.
pub fn kuhn_hat(u: &[f64]) -> f64 {
    let hi = u.iter().copied().fold(0.0, f64::max);
    let lo = u.iter().copied().fold(0.0, f64::min);
    (1.0 - (hi - lo)).max(0.0)
}

/// Gradient of [`kuhn_hat`] (one-sided choice on kinks).
pub fn kuhn_hat_gradient(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let mut g = vec![0.0; n];
    if kuhn_hat(u) <= 0.0 {
        return g;
    }
    let (imax, vmax) = u.iter().enumerate().fold((0, f64::NEG_INFINITY), |a, (i, &v)| if v > a.1 { (i, v) } else { a });
    let (imin, vmin) = u.iter().enumerate().fold((0, f64::INFINITY), |a, (i, &v)| if v < a.1 { (i, v) } else { a });
    if vmax > 0.0 {
        g[imax] -= 1.0;
    }
    if vmin < 0.0 {
        g[imin] += 1.0;
    }
    g
}

/// Tent map `x ↦ x + a·hat((x − c)/h)`: piecewise linear on the Kuhn
/// simplices of the lattice `c + hℤⁿ`, identity outside `c ± h`.
#[derive(Debug, Clone, PartialEq)]
pub struct TentMap {
    center: Vec<f64>,
    width: f64,
    amplitude: Vec<f64>,
}

impl TentMap {
    pub fn new(center: Vec<f64>, width: f64, amplitude: Vec<f64>) -> Result<Self> {
        if center.len() != amplitude.len() {
            return Err(Error::DimensionMismatch {
                expected: center.len(),
                found: amplitude.len(),
            });
        }
        if !(width > 0.0) {
            return Err(Error::InvalidParameter("tent width must be positive".into()));
        }
        Ok(Self {
            center,
            width,
            amplitude,
        })
    }

    pub fn hat(&self, x: &[f64]) -> f64 {
        let u: Vec<f64> = x.iter().zip(&self.center).map(|(a, c)| (a - c) / self.width).collect();
        kuhn_hat(&u)
    }

    pub fn hat_gradient(&self, x: &[f64]) -> Vec<f64> {
        let u: Vec<f64> = x.iter().zip(&self.center).map(|(a, c)| (a - c) / self.width).collect();
        kuhn_hat_gradient(&u).into_iter().map(|g| g / self.width).collect()
    }

    pub fn amplitude(&self) -> &[f64] {
        &self.amplitude
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn width(&self) -> f64 {
        self.width
    }
}

impl LipMap for TentMap {
    fn source_dim(&self) -> usize {
        self.center.len()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let s = self.hat(x);
        x.iter().zip(&self.amplitude).map(|(xi, a)| xi + a * s).collect()
    }

    fn jacobian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let n = self.source_dim();
        let g = self.hat_gradient(x);
        Some(DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } + self.amplitude[i] * g[j]))
    }

    fn identity_outside(&self) -> Option<AxisBox> {
        Some(AxisBox::new(
            self.center.iter().map(|c| c - self.width).collect(),
            self.center.iter().map(|c| c + self.width).collect(),
        )
        .expect("positive width"))
    }

    fn name(&self) -> String {
        "tent".into()
    }

    fn clone_arc(&self) -> Arc<dyn LipMap> {
        Arc::new(self.clone())
    }
}

/// `outer ∘ inner`.
#[derive(Debug, Clone)]
pub struct Composition {
    outer: Arc<dyn LipMap>,
    inner: Arc<dyn LipMap>,
}

impl Composition {
    pub fn new(outer: Arc<dyn LipMap>, inner: Arc<dyn LipMap>) -> Result<Self> {
        if outer.source_dim() != inner.target_dim() {
            return Err(Error::DimensionMismatch {
                expected: outer.source_dim(),
                found: inner.target_dim(),
            });
        }
        Ok(Self { outer, inner })
    }
}

impl LipMap for Composition {
    fn source_dim(&self) -> usize {
        self.inner.source_dim()
    }

    fn target_dim(&self) -> usize {
        self.outer.target_dim()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.outer.apply(&self.inner.apply(x))
    }

    fn jacobian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let ji = self.inner.jacobian(x)?;
        let jo = self.outer.jacobian(&self.inner.apply(x))?;
        Some(jo * ji)
    }

    fn affine(&self) -> Option<(DMatrix<f64>, Vec<f64>)> {
        let (ao, bo) = self.outer.affine()?;
        let (ai, bi) = self.inner.affine()?;
        let o = AffineMap::new(ao, bo).ok()?;
        let c = o.compose(&AffineMap::new(ai, bi).ok()?);
        Some((c.a, c.b))
    }

    fn inverse(&self, y: &[f64]) -> Option<Vec<f64>> {
        self.inner.inverse(&self.outer.inverse(y)?)
    }

    fn name(&self) -> String {
        format!("{}∘{}", self.outer.name(), self.inner.name())
    }

    fn clone_arc(&self) -> Arc<dyn LipMap> {
        Arc::new(self.clone())
    }
}

/// Convolution of a map with a mollifier.
#[derive(Debug, Clone)]
pub struct MollifiedMap {
    inner: Arc<dyn LipMap>,
    kernel: Mollifier,
}

impl LipMap for MollifiedMap {
    fn source_dim(&self) -> usize {
        self.inner.source_dim()
    }

    fn target_dim(&self) -> usize {
        self.inner.target_dim()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.kernel.convolve(|y| self.inner.apply(y), x)
    }

    fn affine(&self) -> Option<(DMatrix<f64>, Vec<f64>)> {
        // affine maps are fixed by symmetric unit-mass kernels
        self.inner.affine()
    }

    fn name(&self) -> String {
        format!("mollify({}, {})", self.inner.name(), self.kernel.radius())
    }

    fn clone_arc(&self) -> Arc<dyn LipMap> {
        Arc::new(self.clone())
    }
}

/// Mollifies `f` with a Gaussian kernel of radius `rho`.
pub fn mollify(f: &dyn LipMap, rho: f64) -> Result<MollifiedMap> {
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter("mollifier radius must be positive".into()));
    }
    Ok(MollifiedMap {
        inner: f.clone_arc(),
        kernel: Mollifier::gaussian(rho),
    })
}

/// Mollifies `f`, which is only defined on `domain`, for use on `k`; the
/// kernel support around `k` must stay inside the domain.
pub fn mollify_on(f: &dyn LipMap, rho: f64, domain: &AxisBox, k: &AxisBox) -> Result<MollifiedMap> {
    if !domain.contains_box(&k.dilate(rho)) {
        return Err(Error::InvalidParameter(format!(
            "mollifier radius {rho} exceeds the distance from K to the domain boundary"
        )));
    }
    mollify(f, rho)
}

/// Radical-inverse (Halton) coordinate of `index` in `base`.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

const PRIMES: [u64; 20] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71];

/// Quasi-random point pairs in `k` from a `2n`-dimensional Halton sequence.
pub fn halton_pairs(k: &AxisBox, count: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let n = k.dim();
    assert!(2 * n <= PRIMES.len(), "dimension too large for the Halton table");
    (1..=count as u64)
        .map(|i| {
            let pt = |off: usize| -> Vec<f64> {
                (0..n)
                    .map(|d| k.lower()[d] + (k.upper()[d] - k.lower()[d]) * halton(i, PRIMES[d + off]))
                    .collect()
            };
            (pt(0), pt(n))
        })
        .collect()
}

/// Sampling settings for the constant estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSampling {
    /// Use all grid pairs when the grid has at most this many points.
    pub all_pairs_limit: usize,
    pub quasi_random_pairs: usize,
}

impl Default for PairSampling {
    fn default() -> Self {
        Self {
            all_pairs_limit: 33 * 33,
            quasi_random_pairs: 100_000,
        }
    }
}

/// A sampled constant with its sample count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub samples: usize,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// All ratios `|f(x) − f(y)| / |x − y|` over the sampled pairs.
fn pair_ratios(f: &(dyn Fn(&[f64]) -> Vec<f64> + Sync), grid: &Grid, s: &PairSampling) -> Vec<f64> {
    let pts = grid.points();
    let img: Vec<Vec<f64>> = pts.iter().map(|x| f(x)).collect();
    let n = pts.len();
    let mut out = Vec::new();
    if n <= s.all_pairs_limit {
        for i in 0..n {
            for j in (i + 1)..n {
                out.push(dist(&img[i], &img[j]) / dist(&pts[i], &pts[j]));
            }
        }
    } else {
        for (i, j) in grid.neighbor_pairs() {
            out.push(dist(&img[i], &img[j]) / dist(&pts[i], &pts[j]));
        }
    }
    let extra: Vec<f64> = halton_pairs(grid.region(), s.quasi_random_pairs)
        .par_iter()
        .filter_map(|(x, y)| {
            let d = dist(x, y);
            (d > 0.0).then(|| dist(&f(x), &f(y)) / d)
        })
        .collect();
    out.extend(extra);
    out
}

/// Sampled Lipschitz constant on `K`, refined by Jacobian spectral norms
/// at the grid points when the map provides exact Jacobians.
pub fn lipschitz_constant(f: &dyn LipMap, grid: &Grid) -> Estimate {
    lipschitz_constant_with(f, grid, &PairSampling::default())
}

pub fn lipschitz_constant_with(f: &dyn LipMap, grid: &Grid, s: &PairSampling) -> Estimate {
    let ratios = pair_ratios(&|x| f.apply(x), grid, s);
    let mut value = ratios.iter().copied().fold(0.0, f64::max);
    let mut samples = ratios.len();
    if f.jacobian(&grid.point(0)).is_some() {
        let jmax = (0..grid.len())
            .into_par_iter()
            .map(|i| spectral_norm(&f.jacobian(&grid.point(i)).expect("jacobian available")))
            .reduce(|| 0.0, f64::max);
        value = value.max(jmax);
        samples += grid.len();
    }
    Estimate { value, samples }
}

/// Two-sided distortion bounds `c|x − y| ≤ |f(x) − f(y)| ≤ d|x − y|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiLipschitz {
    pub lower: f64,
    pub upper: f64,
    pub samples: usize,
}

impl BiLipschitz {
    /// Whether the map is injective at the sampling resolution.
    pub fn is_embedding(&self) -> bool {
        self.lower > 1e-9
    }
}

pub fn bi_lipschitz_constants(f: &dyn LipMap, grid: &Grid) -> BiLipschitz {
    bi_lipschitz_constants_with(f, grid, &PairSampling::default())
}

pub fn bi_lipschitz_constants_with(f: &dyn LipMap, grid: &Grid, s: &PairSampling) -> BiLipschitz {
    let ratios = pair_ratios(&|x| f.apply(x), grid, s);
    BiLipschitz {
        lower: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        upper: ratios.iter().copied().fold(0.0, f64::max),
        samples: ratios.len(),
    }
}

/// `max(sup_K |f − g|, Lip_{f−g,K})`.
pub fn strong_lip_distance(f: &dyn LipMap, g: &dyn LipMap, grid: &Grid) -> f64 {
    strong_lip_distance_with(f, g, grid, &PairSampling::default())
}

pub fn strong_lip_distance_with(f: &dyn LipMap, g: &dyn LipMap, grid: &Grid, s: &PairSampling) -> f64 {
    let diff = |x: &[f64]| -> Vec<f64> { f.apply(x).iter().zip(g.apply(x)).map(|(a, b)| a - b).collect() };
    let sup = (0..grid.len())
        .into_par_iter()
        .map(|i| diff(&grid.point(i)).iter().map(|c| c * c).sum::<f64>().sqrt())
        .reduce(|| 0.0, f64::max);
    let lip = pair_ratios(&diff, grid, s).into_iter().fold(0.0, f64::max);
    sup.max(lip)
}

/// Vertex-mapped pushforward: subdivide `levels` times, map vertices, keep
/// orientations. Exact for maps that are affine on each simplex.
pub fn pushforward_chain(f: &dyn LipMap, t: &Chain, levels: usize) -> Result<Chain> {
    if f.source_dim() != t.ambient() {
        return Err(Error::DimensionMismatch {
            expected: t.ambient(),
            found: f.source_dim(),
        });
    }
    let fine = t.subdivide(levels);
    let image = fine.map_vertices(|x| f.apply(x))?;
    let collapsed = image.degenerate_cells();
    if collapsed > 0 {
        return Err(Error::DegenerateImage { count: collapsed });
    }
    Ok(image)
}

/// Pushforward that first checks injectivity on the chain's vertices
/// (every pair, so use on moderately sized chains).
pub fn pushforward_chain_checked(f: &dyn LipMap, t: &Chain, levels: usize) -> Result<Chain> {
    let fine = t.subdivide(levels);
    let vs = fine.vertices();
    let imgs: Vec<Vec<f64>> = vs.iter().map(|x| f.apply(x)).collect();
    let mut lower = f64::INFINITY;
    for i in 0..vs.len() {
        for j in (i + 1)..vs.len() {
            let d = dist(&vs[i], &vs[j]);
            if d > 0.0 {
                lower = lower.min(dist(&imgs[i], &imgs[j]) / d);
            }
        }
    }
    if lower <= 1e-9 {
        return Err(Error::NotInjective { lower });
    }
    pushforward_chain(f, t, levels)
}

/// Scenario description of a built-in map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MapSpec {
    Identity { dim: usize },
    Scaling { dim: usize, factor: f64 },
    Translation { offset: Vec<f64> },
    Rotation { angle: f64, #[serde(default)] center: [f64; 2] },
    Shear { k: f64 },
    Affine { matrix: Vec<Vec<f64>>, offset: Vec<f64> },
    /// `x ↦ x(1 + s·χ(|x|))` with a smooth cutoff between `r1` and `r2`.
    RadialStretch { dim: usize, s: f64, r1: f64, r2: f64 },
    Tent { center: Vec<f64>, width: f64, amplitude: Vec<f64> },
    Compose { outer: Box<MapSpec>, inner: Box<MapSpec> },
}

impl MapSpec {
    pub fn build(&self) -> Result<Arc<dyn LipMap>> {
        Ok(match self {
            MapSpec::Identity { dim } => Arc::new(AffineMap::identity(*dim)),
            MapSpec::Scaling { dim, factor } => Arc::new(AffineMap::scaling(*dim, *factor)),
            MapSpec::Translation { offset } => Arc::new(AffineMap::translation(offset)),
            MapSpec::Rotation { angle, center } => Arc::new(AffineMap::rotation(*angle, *center)),
            MapSpec::Shear { k } => Arc::new(AffineMap::shear(*k)),
            MapSpec::Affine { matrix, offset } => {
                let rows = matrix.len();
                let cols = matrix.first().map(Vec::len).unwrap_or(0);
                if matrix.iter().any(|r| r.len() != cols) {
                    return Err(Error::InvalidParameter("ragged affine matrix".into()));
                }
                let a = DMatrix::from_fn(rows, cols, |i, j| matrix[i][j]);
                Arc::new(AffineMap::new(a, offset.clone())?)
            }
            MapSpec::RadialStretch { dim, s, r1, r2 } => Arc::new(radial_stretch(*dim, *s, *r1, *r2)?),
            MapSpec::Tent {
                center,
                width,
                amplitude,
            } => Arc::new(TentMap::new(center.clone(), *width, amplitude.clone())?),
            MapSpec::Compose { outer, inner } => Arc::new(Composition::new(outer.build()?, inner.build()?)?),
        })
    }
}

/// Quintic smoothstep cutoff: 1 for `s ≤ r1`, 0 for `s ≥ r2`, C² between.
pub fn cutoff(s: f64, r1: f64, r2: f64) -> f64 {
    if s <= r1 {
        1.0
    } else if s >= r2 {
        0.0
    } else {
        let u = (r2 - s) / (r2 - r1);
        u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
    }
}

/// Derivative of [`cutoff`] in `s`.
pub fn cutoff_derivative(s: f64, r1: f64, r2: f64) -> f64 {
    if s <= r1 || s >= r2 {
        0.0
    } else {
        let u = (r2 - s) / (r2 - r1);
        -30.0 * u * u * (1.0 - u) * (1.0 - u) / (r2 - r1)
    }
}

/// `x ↦ x(1 + s·χ(|x|))`, the identity outside the ball of radius `r2`.
pub fn radial_stretch(dim: usize, s: f64, r1: f64, r2: f64) -> Result<FnMap> {
    if !(0.0 <= r1 && r1 < r2) {
        return Err(Error::InvalidParameter("radial stretch needs 0 ≤ r1 < r2".into()));
    }
    let jac = move |x: &[f64]| {
        let rho = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        let g = 1.0 + s * cutoff(rho, r1, r2);
        let dg = if rho > 0.0 { s * cutoff_derivative(rho, r1, r2) / rho } else { 0.0 };
        DMatrix::from_fn(dim, dim, |i, j| if i == j { g } else { 0.0 } + dg * x[i] * x[j])
    };
    Ok(FnMap::new("radial_stretch", dim, move |x| {
        let rho = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        let g = 1.0 + s * cutoff(rho, r1, r2);
        x.iter().map(|c| c * g).collect()
    })
    .with_jacobian(jac)
    .identity_outside_box(AxisBox::centered(dim, r2)))
}
