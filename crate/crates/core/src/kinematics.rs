//! Motions of chains: families of embeddings `κ_t` that are the identity
//! outside a compact set, their Eulerian velocity fields, flows,
//! deformation chains, the Reynolds operator, and the transport theorem
//! with finite-difference oracles.

use std::cell::RefCell;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::chain::{Chain, Quadrature};
use crate::current::{v_wedge, Current};
use crate::error::{Error, Result};
use crate::exterior::{basis, binomial, compound_matrix, contract_coeffs, rank_of};
use crate::form::{AxisBox, FormField, Grid, VectorField};
use crate::lipschitz::{cutoff, cutoff_derivative, jacobian_fd, kuhn_hat, kuhn_hat_gradient, pushforward_chain, LipMap};
use crate::polynomial::Polynomial;
use crate::quadrature::{gauss_legendre_on, integrate_adaptive};

/// Built-in motion families. Smooth families blend to the identity with a
/// quintic cutoff `χ(|x − center|)` that is 1 on the ball of radius `r1`
/// and 0 outside radius `r2`, so each is exactly rigid (or linear) near
/// the chain and exactly the identity outside the ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MotionSpec {
    Static {
        dim: usize,
    },
    /// `x + t·c·χ`.
    Translation {
        velocity: Vec<f64>,
        center: Vec<f64>,
        r1: f64,
        r2: f64,
    },
    /// Rotation by `ω t χ` in the plane of the first two axes.
    Rotation {
        omega: f64,
        center: Vec<f64>,
        r1: f64,
        r2: f64,
    },
    /// `x₁ += t·k·χ·(x₂ − c₂)`.
    Shear {
        rate: f64,
        center: Vec<f64>,
        r1: f64,
        r2: f64,
    },
    /// `c + (x − c)(1 + t χ)`.
    Expansion {
        center: Vec<f64>,
        r1: f64,
        r2: f64,
    },
    /// `c + (x − c)·exp(t χ)`.
    ExponentialScaling {
        center: Vec<f64>,
        r1: f64,
        r2: f64,
    },
    /// `x + t·a·hat((x − c)/h)` with the Kuhn hat function.
    Tent {
        center: Vec<f64>,
        width: f64,
        amplitude: Vec<f64>,
    },
    /// `κ_t = outer_t ∘ inner_t`.
    Compose {
        outer: Box<MotionSpec>,
        inner: Box<MotionSpec>,
    },
}

/// A motion over a time interval.
#[derive(Clone, PartialEq)]
pub struct Motion {
    spec: MotionSpec,
    interval: (f64, f64),
    dim: usize,
    support: AxisBox,
}

impl fmt::Debug for Motion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Motion({}, {:?})", self.name(), self.interval)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(p, q)| p - q).collect()
}

/// `(ρ, ∇χ)` at `x` for a radial cutoff about `c`.
fn radial(x: &[f64], c: &[f64], r1: f64, r2: f64) -> (f64, f64, Vec<f64>) {
    let d = diff(x, c);
    let rho = norm(&d);
    let chi = cutoff(rho, r1, r2);
    let dchi = cutoff_derivative(rho, r1, r2);
    let grad = if rho > 0.0 { d.iter().map(|v| dchi * v / rho).collect() } else { vec![0.0; x.len()] };
    (rho, chi, grad)
}

fn rot(theta: f64, d: &[f64]) -> Vec<f64> {
    let (s, c) = theta.sin_cos();
    let mut out = d.to_vec();
    out[0] = c * d[0] - s * d[1];
    out[1] = s * d[0] + c * d[1];
    out
}

/// Largest root-finding bracket used by the monotone 1-D inverses.
fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-16 * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn check_radii(r1: f64, r2: f64) -> Result<()> {
    if !(0.0 <= r1 && r1 < r2 && r2.is_finite()) {
        return Err(Error::InvalidParameter(format!("cutoff radii must satisfy 0 ≤ r1 < r2, got {r1}, {r2}")));
    }
    Ok(())
}

impl MotionSpec {
    fn dim(&self) -> usize {
        match self {
            MotionSpec::Static { dim } => *dim,
            MotionSpec::Translation { center, .. }
            | MotionSpec::Rotation { center, .. }
            | MotionSpec::Shear { center, .. }
            | MotionSpec::Expansion { center, .. }
            | MotionSpec::ExponentialScaling { center, .. }
            | MotionSpec::Tent { center, .. } => center.len(),
            MotionSpec::Compose { inner, .. } => inner.dim(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            MotionSpec::Static { dim } => {
                if *dim == 0 {
                    return Err(Error::InvalidParameter("dimension must be positive".into()));
                }
            }
            MotionSpec::Translation { velocity, center, r1, r2 } => {
                check_radii(*r1, *r2)?;
                if velocity.len() != center.len() {
                    return Err(Error::DimensionMismatch {
                        expected: center.len(),
                        found: velocity.len(),
                    });
                }
            }
            MotionSpec::Rotation { center, r1, r2, .. } | MotionSpec::Shear { center, r1, r2, .. } => {
                check_radii(*r1, *r2)?;
                if center.len() < 2 {
                    return Err(Error::InvalidParameter("planar families need n ≥ 2".into()));
                }
            }
            MotionSpec::Expansion { r1, r2, .. } | MotionSpec::ExponentialScaling { r1, r2, .. } => {
                check_radii(*r1, *r2)?
            }
            MotionSpec::Tent { center, width, amplitude } => {
                crate::lipschitz::TentMap::new(center.clone(), *width, amplitude.clone())?;
            }
            MotionSpec::Compose { outer, inner } => {
                outer.validate()?;
                inner.validate()?;
                if outer.dim() != inner.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: inner.dim(),
                        found: outer.dim(),
                    });
                }
            }
        }
        Ok(())
    }

    fn support(&self) -> AxisBox {
        let ball = |c: &[f64], r: f64| {
            AxisBox::new(c.iter().map(|v| v - r).collect(), c.iter().map(|v| v + r).collect()).expect("r2 > 0")
        };
        match self {
            MotionSpec::Static { dim } => AxisBox::centered(*dim, 1e-12),
            MotionSpec::Translation { center, r2, .. }
            | MotionSpec::Rotation { center, r2, .. }
            | MotionSpec::Shear { center, r2, .. }
            | MotionSpec::Expansion { center, r2, .. }
            | MotionSpec::ExponentialScaling { center, r2, .. } => ball(center, *r2),
            MotionSpec::Tent { center, width, .. } => ball(center, *width),
            MotionSpec::Compose { outer, inner } => {
                let (a, b) = (outer.support(), inner.support());
                AxisBox::new(
                    a.lower().iter().zip(b.lower()).map(|(p, q)| p.min(*q)).collect(),
                    a.upper().iter().zip(b.upper()).map(|(p, q)| p.max(*q)).collect(),
                )
                .expect("union of boxes")
            }
        }
    }

    fn apply(&self, t: f64, x: &[f64]) -> Vec<f64> {
        match self {
            MotionSpec::Static { .. } => x.to_vec(),
            MotionSpec::Translation { velocity, center, r1, r2 } => {
                let (_, chi, _) = radial(x, center, *r1, *r2);
                x.iter().zip(velocity).map(|(xi, c)| xi + t * c * chi).collect()
            }
            MotionSpec::Rotation { omega, center, r1, r2 } => {
                let (_, chi, _) = radial(x, center, *r1, *r2);
                let d = diff(x, center);
                rot(omega * t * chi, &d).iter().zip(center).map(|(a, b)| a + b).collect()
            }
            MotionSpec::Shear { rate, center, r1, r2 } => {
                let (_, chi, _) = radial(x, center, *r1, *r2);
                let mut y = x.to_vec();
                y[0] += t * rate * chi * (x[1] - center[1]);
                y
            }
            MotionSpec::Expansion { center, r1, r2 } => {
                let (_, chi, _) = radial(x, center, *r1, *r2);
                x.iter().zip(center).map(|(xi, c)| c + (xi - c) * (1.0 + t * chi)).collect()
            }
            MotionSpec::ExponentialScaling { center, r1, r2 } => {
                let (_, chi, _) = radial(x, center, *r1, *r2);
                let g = (t * chi).exp();
                x.iter().zip(center).map(|(xi, c)| c + (xi - c) * g).collect()
            }
            MotionSpec::Tent { center, width, amplitude } => {
                let s = tent_hat(x, center, *width);
                x.iter().zip(amplitude).map(|(xi, a)| xi + t * a * s).collect()
            }
            MotionSpec::Compose { outer, inner } => outer.apply(t, &inner.apply(t, x)),
        }
    }

    /// `∂κ_t(x)/∂t`.
    fn velocity(&self, t: f64, x: &[f64]) -> Vec<f64> {
        match self {
            MotionSpec::Static { dim } => vec![0.0; *dim],
            MotionSpec::Translation { velocity, center, r1, r2 } => {
                let (_, chi, _) = radial(x, center, *r1, *r2);
                velocity.iter().map(|c| c * chi).collect()
            }
            MotionSpec::Rotation { omega, center, r1, r2 } => {
                let (_, chi, _) = radial(x, center, *r1, *r2);
                let r = rot(omega * t * chi, &diff(x, center));
                let mut v = vec![0.0; x.len()];
                v[0] = -omega * chi * r[1];
                v[1] = omega * chi * r[0];
                v
            }
            MotionSpec::Shear { rate, center, r1, r2 } => {
                let (_, chi, _) = radial(x, center, *r1, *r2);
                let mut v = vec![0.0; x.len()];
                v[0] = rate * chi * (x[1] - center[1]);
                v
            }
            MotionSpec::Expansion { center, r1, r2 } => {
                let (_, chi, _) = radial(x, center, *r1, *r2);
                x.iter().zip(center).map(|(xi, c)| chi * (xi - c)).collect()
            }
            MotionSpec::ExponentialScaling { center, r1, r2 } => {
                let (_, chi, _) = radial(x, center, *r1, *r2);
                let g = (t * chi).exp();
                x.iter().zip(center).map(|(xi, c)| chi * g * (xi - c)).collect()
            }
            MotionSpec::Tent { center, width, amplitude } => {
                let s = tent_hat(x, center, *width);
                amplitude.iter().map(|a| a * s).collect()
            }
            MotionSpec::Compose { outer, inner } => {
                let y = inner.apply(t, x);
                let jo = outer.jacobian(t, &y);
                let vi = DVector::from_vec(inner.velocity(t, x));
                let vo = outer.velocity(t, &y);
                let jv = jo * vi;
                vo.iter().zip(jv.iter()).map(|(a, b)| a + b).collect()
            }
        }
    }

    /// Spatial Jacobian `Dκ_t(x)` (one-sided on kinks of the tent).
    fn jacobian(&self, t: f64, x: &[f64]) -> DMatrix<f64> {
        let n = x.len();
        let eye = DMatrix::<f64>::identity(n, n);
        match self {
            MotionSpec::Static { .. } => eye,
            MotionSpec::Translation { velocity, center, r1, r2 } => {
                let (_, _, g) = radial(x, center, *r1, *r2);
                eye + DMatrix::from_fn(n, n, |i, j| t * velocity[i] * g[j])
            }
            MotionSpec::Rotation { omega, center, r1, r2 } => {
                let (_, chi, g) = radial(x, center, *r1, *r2);
                let theta = omega * t * chi;
                let (s, c) = theta.sin_cos();
                let r = rot(theta, &diff(x, center));
                let mut m = eye;
                m[(0, 0)] = c;
                m[(0, 1)] = -s;
                m[(1, 0)] = s;
                m[(1, 1)] = c;
                // (d/dθ R(θ) d) ⊗ ∇θ with d/dθ R d = J R d
                let jr = [-r[1], r[0]];
                for j in 0..n {
                    let gt = omega * t * g[j];
                    m[(0, j)] += jr[0] * gt;
                    m[(1, j)] += jr[1] * gt;
                }
                m
            }
            MotionSpec::Shear { rate, center, r1, r2 } => {
                let (_, chi, g) = radial(x, center, *r1, *r2);
                let mut m = eye;
                for j in 0..n {
                    m[(0, j)] += t * rate * (x[1] - center[1]) * g[j];
                }
                m[(0, 1)] += t * rate * chi;
                m
            }
            MotionSpec::Expansion { center, r1, r2 } => {
                let (_, chi, g) = radial(x, center, *r1, *r2);
                let d = diff(x, center);
                eye * (1.0 + t * chi) + DMatrix::from_fn(n, n, |i, j| t * d[i] * g[j])
            }
            MotionSpec::ExponentialScaling { center, r1, r2 } => {
                let (_, chi, g) = radial(x, center, *r1, *r2);
                let e = (t * chi).exp();
                let d = diff(x, center);
                eye * e + DMatrix::from_fn(n, n, |i, j| e * t * d[i] * g[j])
            }
            MotionSpec::Tent { center, width, amplitude } => {
                let u: Vec<f64> = x.iter().zip(center).map(|(a, c)| (a - c) / width).collect();
                let g = kuhn_hat_gradient(&u);
                eye + DMatrix::from_fn(n, n, |i, j| t * amplitude[i] * g[j] / width)
            }
            MotionSpec::Compose { outer, inner } => {
                let y = inner.apply(t, x);
                outer.jacobian(t, &y) * inner.jacobian(t, x)
            }
        }
    }

    /// Closed-form (or monotone 1-D root-finding) inverse where the family
    /// provides one.
    fn inverse(&self, t: f64, y: &[f64]) -> Option<Vec<f64>> {
        match self {
            MotionSpec::Static { .. } => Some(y.to_vec()),
            MotionSpec::Rotation { omega, center, r1, r2 } => {
                // rotations preserve |x − c|, so χ can be read off the image
                let (_, chi, _) = radial(y, center, *r1, *r2);
                let back = rot(-omega * t * chi, &diff(y, center));
                Some(back.iter().zip(center).map(|(a, b)| a + b).collect())
            }
            MotionSpec::Expansion { center, r1, r2 } | MotionSpec::ExponentialScaling { center, r1, r2 } => {
                let d = diff(y, center);
                let big_r = norm(&d);
                if big_r == 0.0 {
                    return Some(y.to_vec());
                }
                let exp = matches!(self, MotionSpec::ExponentialScaling { .. });
                let radius = |rho: f64| {
                    let chi = cutoff(rho, *r1, *r2);
                    if exp {
                        rho * (t * chi).exp()
                    } else {
                        rho * (1.0 + t * chi)
                    }
                };
                let hi = big_r.max(*r2) * 4.0 + 1.0;
                let rho = bisect(|r| radius(r) - big_r, 0.0, hi);
                Some(d.iter().zip(center).map(|(v, c)| c + v * rho / big_r).collect())
            }
            MotionSpec::Tent { center, width, amplitude } => {
                // y = x + t a s with s = hat(x): solve s = hat(y − t a s)
                let g = |s: f64| {
                    let x: Vec<f64> = y.iter().zip(amplitude).map(|(yi, a)| yi - t * a * s).collect();
                    s - tent_hat(&x, center, *width)
                };
                let s = bisect(g, -1e-12, 1.0 + 1e-12).clamp(0.0, 1.0);
                Some(y.iter().zip(amplitude).map(|(yi, a)| yi - t * a * s).collect())
            }
            MotionSpec::Compose { outer, inner } => {
                let z = outer.inverse(t, y)?;
                inner.inverse(t, &z)
            }
            MotionSpec::Translation { .. } | MotionSpec::Shear { .. } => None,
        }
    }

    fn name(&self) -> String {
        match self {
            MotionSpec::Static { .. } => "static".into(),
            MotionSpec::Translation { .. } => "translation".into(),
            MotionSpec::Rotation { .. } => "rotation".into(),
            MotionSpec::Shear { .. } => "shear".into(),
            MotionSpec::Expansion { .. } => "expansion".into(),
            MotionSpec::ExponentialScaling { .. } => "exponential_scaling".into(),
            MotionSpec::Tent { .. } => "tent".into(),
            MotionSpec::Compose { outer, inner } => format!("{}∘{}", outer.name(), inner.name()),
        }
    }

    fn is_smooth(&self) -> bool {
        match self {
            MotionSpec::Tent { .. } => false,
            MotionSpec::Compose { outer, inner } => outer.is_smooth() && inner.is_smooth(),
            _ => true,
        }
    }
}

fn tent_hat(x: &[f64], center: &[f64], width: f64) -> f64 {
    let u: Vec<f64> = x.iter().zip(center).map(|(a, c)| (a - c) / width).collect();
    kuhn_hat(&u)
}

/// Damped Newton solve of `f(x) = y` starting from `x0`.
fn newton_inverse<F, J>(f: F, jac: J, y: &[f64], x0: Vec<f64>, tol: f64) -> Option<Vec<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
    J: Fn(&[f64]) -> DMatrix<f64>,
{
    let mut x = x0;
    let mut r = diff(&f(&x), y);
    let mut rn = norm(&r);
    for _ in 0..100 {
        if rn <= tol {
            return Some(x);
        }
        let step = jac(&x).lu().solve(&DVector::from_vec(r.clone()))?;
        let mut lambda = 1.0;
        loop {
            let cand: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a - lambda * s).collect();
            let cr = diff(&f(&cand), y);
            let cn = norm(&cr);
            if cn < rn || lambda < 1e-6 {
                x = cand;
                r = cr;
                rn = cn;
                break;
            }
            lambda *= 0.5;
        }
    }
    (rn <= tol).then_some(x)
}

impl Motion {
    pub fn new(spec: MotionSpec, interval: (f64, f64)) -> Result<Self> {
        spec.validate()?;
        if !(interval.0 < interval.1) {
            return Err(Error::InvalidParameter("motion interval must have positive length".into()));
        }
        let dim = spec.dim();
        let support = spec.support();
        Ok(Self {
            spec,
            interval,
            dim,
            support,
        })
    }

    pub fn spec(&self) -> &MotionSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    /// Compact set `K_m` outside which every `κ_t` is the identity; each
    /// `κ_t` maps it onto itself, so it also serves as `K_m′`.
    pub fn support(&self) -> &AxisBox {
        &self.support
    }

    pub fn name(&self) -> String {
        self.spec.name()
    }

    pub fn is_smooth(&self) -> bool {
        self.spec.is_smooth()
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let (a, b) = self.interval;
        if t < a || t > b {
            return Err(Error::TimeOutOfRange { t, start: a, end: b });
        }
        Ok(())
    }

    pub fn apply(&self, t: f64, x: &[f64]) -> Vec<f64> {
        // exact identity outside K_m (c + (x − c) need not round-trip)
        if !self.support.contains(x) {
            return x.to_vec();
        }
        self.spec.apply(t, x)
    }

    /// `κ̇_t(x)`.
    pub fn velocity(&self, t: f64, x: &[f64]) -> Vec<f64> {
        if !self.support.contains(x) {
            return vec![0.0; self.dim];
        }
        self.spec.velocity(t, x)
    }

    pub fn jacobian(&self, t: f64, x: &[f64]) -> DMatrix<f64> {
        self.spec.jacobian(t, x)
    }

    /// `η_t(y) = κ_t⁻¹(y)`: closed form when the family has one, else
    /// damped Newton from `y` and then from the nearest mapped grid point
    /// of `K_m` (tolerance 1e−12).
    pub fn inverse(&self, t: f64, y: &[f64]) -> Result<Vec<f64>> {
        if !self.support.contains(y) {
            return Ok(y.to_vec());
        }
        if let Some(x) = self.spec.inverse(t, y) {
            return Ok(x);
        }
        let f = |x: &[f64]| self.apply(t, x);
        let j = |x: &[f64]| self.jacobian(t, x);
        if let Some(x) = newton_inverse(f, j, y, y.to_vec(), 1e-12) {
            return Ok(x);
        }
        let grid = Grid::uniform(self.support.clone(), 17)?;
        let start = grid
            .points()
            .into_iter()
            .min_by(|a, b| norm(&diff(&f(a), y)).total_cmp(&norm(&diff(&f(b), y))))
            .expect("nonempty grid");
        newton_inverse(f, j, y, start, 1e-12).ok_or_else(|| Error::InversionFailed { point: y.to_vec() })
    }

    /// Eulerian velocity `v̂_t(y) = κ̇_t(η_t(y))`, zero outside `K_m`.
    pub fn eulerian_velocity(&self, t: f64, y: &[f64]) -> Result<Vec<f64>> {
        if !self.support.contains(y) {
            return Ok(vec![0.0; self.dim]);
        }
        let x = self.inverse(t, y)?;
        Ok(self.velocity(t, &x))
    }

    /// `κ_t` as a map.
    pub fn at(&self, t: f64) -> MotionAt {
        MotionAt {
            motion: self.clone(),
            t,
        }
    }

    /// Vertex-mapped `κ_t#T` after `levels` subdivisions.
    pub fn pushforward(&self, t: f64, chain: &Chain, levels: usize) -> Result<Chain> {
        self.check_time(t)?;
        pushforward_chain(&self.at(t), chain, levels)
    }

    /// Checks the structural invariants on samples: identity and zero
    /// velocity outside `K_m`, and a positive lower bi-Lipschitz constant
    /// of each sampled `κ_t` on `K_m`. Returns the smallest lower constant.
    pub fn check_invariants(&self, times: &[f64], m: usize) -> Result<f64> {
        let outer = self.support.dilate(1.0);
        let outside = Grid::uniform(outer, m)?;
        let mut lower = f64::INFINITY;
        for &t in times {
            for x in outside.points() {
                if self.support.contains(&x) {
                    continue;
                }
                if self.apply(t, &x) != x || self.velocity(t, &x).iter().any(|v| *v != 0.0) {
                    return Err(Error::InvalidParameter(format!("motion moves {x:?} outside K_m")));
                }
            }
            let grid = Grid::uniform(self.support.clone(), m)?;
            let b = crate::lipschitz::bi_lipschitz_constants_with(
                &self.at(t),
                &grid,
                &crate::lipschitz::PairSampling {
                    all_pairs_limit: 400,
                    quasi_random_pairs: 2000,
                },
            );
            if !b.is_embedding() {
                return Err(Error::NotInjective { lower: b.lower });
            }
            lower = lower.min(b.lower);
        }
        Ok(lower)
    }
}

/// The embedding `κ_t` at a fixed time.
#[derive(Debug, Clone)]
pub struct MotionAt {
    motion: Motion,
    t: f64,
}

impl LipMap for MotionAt {
    fn source_dim(&self) -> usize {
        self.motion.dim
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.motion.apply(self.t, x)
    }

    fn jacobian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        Some(self.motion.jacobian(self.t, x))
    }

    fn inverse(&self, y: &[f64]) -> Option<Vec<f64>> {
        self.motion.inverse(self.t, y).ok()
    }

    fn identity_outside(&self) -> Option<AxisBox> {
        Some(self.motion.support.clone())
    }

    fn name(&self) -> String {
        format!("{}@{}", self.motion.name(), self.t)
    }

    fn clone_arc(&self) -> Arc<dyn LipMap> {
        Arc::new(self.clone())
    }
}

/// `v̂_t` as a vector field. Inversion failures surface as NaN components,
/// which poison any quadrature they enter.
pub fn velocity_field(m: &Motion, t: f64) -> Result<VectorField> {
    m.check_time(t)?;
    let motion = m.clone();
    Ok(VectorField::from_fn(m.dim(), move |y| {
        motion
            .eulerian_velocity(t, y)
            .unwrap_or_else(|_| vec![f64::NAN; y.len()])
    }))
}

/// A time-dependent vector field `(t, x) ↦ v(t, x)`.
pub type TimeField = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;

/// The Eulerian velocity of a motion as a time-dependent field.
pub fn motion_field(m: &Motion) -> TimeField {
    let motion = m.clone();
    Arc::new(move |t, y| motion.eulerian_velocity(t, y).unwrap_or_else(|_| vec![f64::NAN; y.len()]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    pub step: f64,
    /// Bound on the step-doubling local error estimate.
    pub tolerance: f64,
    pub min_step: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            step: 1e-2,
            tolerance: 1e-11,
            min_step: 1e-7,
        }
    }
}

fn rk4_step(v: &TimeField, t: f64, x: &[f64], h: f64) -> Vec<f64> {
    let add = |a: &[f64], b: &[f64], s: f64| -> Vec<f64> { a.iter().zip(b).map(|(p, q)| p + s * q).collect() };
    let k1 = v(t, x);
    let k2 = v(t + 0.5 * h, &add(x, &k1, 0.5 * h));
    let k3 = v(t + 0.5 * h, &add(x, &k2, 0.5 * h));
    let k4 = v(t + h, &add(x, &k3, h));
    (0..x.len())
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// `J_{s,t}(x)`: the solution at time `s` of `ẏ = v(τ, y)` with `y(t) = x`.
/// Classical RK4 with step doubling; a step whose local error estimate
/// exceeds the bound is halved, and an error is returned if the minimum
/// step is reached.
pub fn flow(v: &TimeField, s: f64, t: f64, x: &[f64], opts: &FlowOptions) -> Result<Vec<f64>> {
    let mut y = x.to_vec();
    if s == t {
        return Ok(y);
    }
    let dir = (s - t).signum();
    let mut tau = t;
    let mut h = opts.step;
    while (s - tau) * dir > 0.0 {
        let step = h.min((s - tau).abs()) * dir;
        let full = rk4_step(v, tau, &y, step);
        let half = rk4_step(v, tau, &y, 0.5 * step);
        let two = rk4_step(v, tau + 0.5 * step, &half, 0.5 * step);
        let err = norm(&diff(&full, &two)) / 15.0;
        if !err.is_finite() {
            return Err(Error::StepRejected { error: err, bound: opts.tolerance });
        }
        if err > opts.tolerance {
            if h * 0.5 < opts.min_step {
                return Err(Error::StepRejected {
                    error: err,
                    bound: opts.tolerance,
                });
            }
            h *= 0.5;
            continue;
        }
        y = two;
        tau += step;
        if err < opts.tolerance / 64.0 {
            h = (h * 2.0).min(opts.step);
        }
    }
    Ok(y)
}

/// A time-dependent cochain represented by a form `D_ψ(t)`.
#[derive(Debug, Clone)]
pub enum Cochain {
    Static(FormField),
    /// Components are polynomials in `(t, x₁, …, xₙ)`, time first.
    TimePolynomial {
        dim: usize,
        degree: usize,
        components: Vec<Polynomial>,
    },
}

/// Fixes the first variable of a polynomial at `t`.
pub fn fix_first_variable(p: &Polynomial, t: f64) -> Polynomial {
    let n = p.nvars() - 1;
    let mut out = Polynomial::zero(n);
    for (e, c) in p.terms() {
        out.add_term(e[1..].to_vec(), c * t.powi(e[0] as i32));
    }
    out
}

impl Cochain {
    pub fn time_polynomial(dim: usize, degree: usize, components: Vec<Polynomial>) -> Result<Self> {
        if components.len() != binomial(dim, degree) {
            return Err(Error::DimensionMismatch {
                expected: binomial(dim, degree),
                found: components.len(),
            });
        }
        if let Some(p) = components.iter().find(|p| p.nvars() != dim + 1) {
            return Err(Error::DimensionMismatch {
                expected: dim + 1,
                found: p.nvars(),
            });
        }
        Ok(Cochain::TimePolynomial {
            dim,
            degree,
            components,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Cochain::Static(f) => f.dim(),
            Cochain::TimePolynomial { dim, .. } => *dim,
        }
    }

    pub fn degree(&self) -> usize {
        match self {
            Cochain::Static(f) => f.degree(),
            Cochain::TimePolynomial { degree, .. } => *degree,
        }
    }

    /// `D_ψ(t)`.
    pub fn form_at(&self, t: f64) -> FormField {
        match self {
            Cochain::Static(f) => f.clone(),
            Cochain::TimePolynomial { dim, degree, components } => FormField::polynomial(
                *dim,
                *degree,
                components.iter().map(|p| fix_first_variable(p, t)).collect(),
            )
            .expect("validated layout"),
        }
    }

    /// `Ḋ_ψ(t)`.
    pub fn rate_at(&self, t: f64) -> FormField {
        match self {
            Cochain::Static(f) => FormField::zero(f.dim(), f.degree()),
            Cochain::TimePolynomial { dim, degree, components } => FormField::polynomial(
                *dim,
                *degree,
                components
                    .iter()
                    .map(|p| fix_first_variable(&p.derivative(0), t))
                    .collect(),
            )
            .expect("validated layout"),
        }
    }

    /// Spatial exterior derivative of the time-polynomial components.
    fn spatial_d(&self) -> Option<Vec<Polynomial>> {
        match self {
            Cochain::TimePolynomial { dim, degree, components } => {
                let n = *dim;
                let r = *degree;
                if r >= n {
                    return Some(Vec::new());
                }
                let mut out = vec![Polynomial::zero(n + 1); binomial(n, r + 1)];
                for (i, idx) in basis(n, r).iter().enumerate() {
                    for j in 0..n {
                        let mut merged = vec![j];
                        merged.extend_from_slice(idx);
                        if let Some((sign, sorted)) = crate::exterior::sort_with_sign(&merged) {
                            let pos = rank_of(n, &sorted).expect("valid");
                            out[pos] = out[pos].add(&components[i].derivative(j + 1).scale(sign));
                        }
                    }
                }
                Some(out)
            }
            Cochain::Static(_) => None,
        }
    }
}

/// Time integration rule for deformation chains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeRule {
    /// Composite 5-point Gauss with panel splitting on disagreement above
    /// the tolerance.
    Adaptive { tolerance: f64, max_depth: usize },
    Composite { panels: usize, points: usize },
}

impl Default for TimeRule {
    fn default() -> Self {
        TimeRule::Adaptive {
            tolerance: 1e-9,
            max_depth: 14,
        }
    }
}

fn integrate_time<F>(rule: &TimeRule, a: f64, b: f64, f: F) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if a == b {
        return Ok(0.0);
    }
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let g = |t: f64| match f(t) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    let value = match *rule {
        TimeRule::Adaptive { tolerance, max_depth } => integrate_adaptive(&g, a, b, tolerance, max_depth),
        TimeRule::Composite { panels, points } => {
            let h = (b - a) / panels as f64;
            (0..panels)
                .map(|p| {
                    let lo = a + h * p as f64;
                    let r = gauss_legendre_on(points, lo, lo + h);
                    r.nodes.iter().zip(&r.weights).map(|(t, w)| w * g(*t)).sum::<f64>()
                })
                .sum()
        }
    };
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

/// Discretization settings shared by the kinematic computations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicOptions {
    /// Subdivision levels before vertex-mapping a chain.
    pub levels: usize,
    pub quadrature: Quadrature,
    pub time_rule: TimeRule,
}

impl Default for KinematicOptions {
    fn default() -> Self {
        Self {
            levels: 0,
            quadrature: Quadrature::default(),
            time_rule: TimeRule::default(),
        }
    }
}

/// `κ_#([a,b] × T)`, the (r+1)-current swept by `T`, evaluated as
/// `ω ↦ ∫_a^b (κ_τ#T)(ω ⌐ v̂_τ) dτ`.
#[derive(Debug, Clone)]
pub struct DeformationChain {
    motion: Motion,
    a: f64,
    b: f64,
    chain: Chain,
    opts: KinematicOptions,
}

impl DeformationChain {
    pub fn new(motion: &Motion, a: f64, b: f64, chain: &Chain, opts: KinematicOptions) -> Result<Self> {
        motion.check_time(a)?;
        motion.check_time(b)?;
        if chain.ambient() != motion.dim() {
            return Err(Error::DimensionMismatch {
                expected: motion.dim(),
                found: chain.ambient(),
            });
        }
        if chain.degree() + 1 > chain.ambient() {
            return Err(Error::DegreeOverflow {
                degree: chain.degree() + 1,
                ambient: chain.ambient(),
            });
        }
        Ok(Self {
            motion: motion.clone(),
            a,
            b,
            chain: chain.clone(),
            opts,
        })
    }

    pub fn degree(&self) -> usize {
        self.chain.degree() + 1
    }

    pub fn ambient(&self) -> usize {
        self.chain.ambient()
    }

    pub fn evaluate_with(&self, omega: &FormField, q: &Quadrature) -> Result<f64> {
        let fine = self.chain.subdivide(self.opts.levels);
        integrate_time(&self.opts.time_rule, self.a, self.b, |tau| {
            let image = self.motion.pushforward(tau, &fine, 0)?;
            let v = velocity_field(&self.motion, tau)?;
            Ok(image.evaluate_with(&omega.contract(&v)?, q)?.value)
        })
    }

    pub fn evaluate(&self, omega: &FormField) -> Result<f64> {
        self.evaluate_with(omega, &self.opts.quadrature)
    }
}

pub fn deformation_chain(m: &Motion, a: f64, b: f64, t: &Chain, opts: KinematicOptions) -> Result<Current> {
    Ok(Current::Deformation(Arc::new(DeformationChain::new(m, a, b, t, opts)?)))
}

/// `R_v(T) = v∧∂T + ∂(v∧T)`, the dual of the Lie derivative.
pub fn reynolds_operator(v: &VectorField, t: Current) -> Result<Current> {
    let r = t.degree();
    let n = t.ambient();
    let mut terms = Vec::new();
    if r >= 1 {
        terms.push(v_wedge(v, t.clone().boundary()?)?);
    }
    if r < n {
        terms.push(v_wedge(v, t)?.boundary()?);
    }
    Ok(Current::Sum(terms))
}

/// `|(κ_b#T − κ_a#T)(φ) − [∂κ_#([a,b]×T) + κ_#([a,b]×∂T)](φ)|`.
pub fn homotopy_residual(m: &Motion, a: f64, b: f64, t: &Chain, phi: &FormField, opts: KinematicOptions) -> Result<f64> {
    let q = opts.quadrature;
    let end = m.pushforward(b, t, opts.levels)?.evaluate_with(phi, &q)?.value;
    let start = m.pushforward(a, t, opts.levels)?.evaluate_with(phi, &q)?.value;
    let n = t.ambient();
    let r = t.degree();
    let swept = if r < n && r < phi.dim() {
        DeformationChain::new(m, a, b, t, opts)?.evaluate_with(&phi.exterior_derivative()?, &q)?
    } else {
        0.0
    };
    let side = if r >= 1 {
        DeformationChain::new(m, a, b, &t.boundary()?, opts)?.evaluate_with(phi, &q)?
    } else {
        0.0
    };
    Ok((end - start - swept - side).abs())
}

/// `X_ψ(t)(κ_t#T)`.
pub fn transported_value(m: &Motion, t: &Chain, psi: &Cochain, time: f64, opts: &KinematicOptions) -> Result<f64> {
    Ok(m.pushforward(time, t, opts.levels)?
        .evaluate_with(&psi.form_at(time), &opts.quadrature)?
        .value)
}

/// Transport derivative from the Eulerian formula
/// `Ẋ_ψ(κ#T) + X_ψ(∂(v̂∧κ#T) + v̂∧κ#∂T)`, evaluated term by term with
/// pointwise velocities only.
pub fn transport_derivative(m: &Motion, t: &Chain, psi: &Cochain, tau: f64, opts: &KinematicOptions) -> Result<f64> {
    Ok(transport_terms(m, t, psi, tau, opts)?.total())
}

/// The three terms of the Eulerian transport formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportTerms {
    /// `Ẋ_ψ(τ)(κ_τ#T)`.
    pub rate: f64,
    /// `X_ψ(τ)(∂(v̂∧κ_τ#T)) = (κ_τ#T)(dψ ⌐ v̂)`.
    pub swept: f64,
    /// `X_ψ(τ)(v̂∧κ_τ#∂T) = (κ_τ#∂T)(ψ ⌐ v̂)`.
    pub flux: f64,
}

impl TransportTerms {
    pub fn total(&self) -> f64 {
        self.rate + self.swept + self.flux
    }
}

pub fn transport_terms(m: &Motion, t: &Chain, psi: &Cochain, tau: f64, opts: &KinematicOptions) -> Result<TransportTerms> {
    m.check_time(tau)?;
    let q = opts.quadrature;
    let n = t.ambient();
    let r = t.degree();
    let image = m.pushforward(tau, t, opts.levels)?;
    let v = velocity_field(m, tau)?;
    let form = psi.form_at(tau);
    let rate = image.evaluate_with(&psi.rate_at(tau), &q)?.value;
    let swept = if r < n {
        image.evaluate_with(&form.exterior_derivative()?.contract(&v)?, &q)?.value
    } else {
        0.0
    };
    let flux = if r >= 1 {
        let b = m.pushforward(tau, &t.boundary()?, opts.levels)?;
        b.evaluate_with(&form.contract(&v)?, &q)?.value
    } else {
        0.0
    };
    Ok(TransportTerms { rate, swept, flux })
}

/// Betounes-type form `(κ_τ#T)(Ḋ_ψ + L_{v̂} D_ψ)` with the Lie derivative
/// from Cartan's formula.
pub fn transport_derivative_betounes(m: &Motion, t: &Chain, psi: &Cochain, tau: f64, opts: &KinematicOptions) -> Result<f64> {
    m.check_time(tau)?;
    let v = velocity_field(m, tau)?;
    let integrand = psi.rate_at(tau).add(&psi.form_at(tau).lie_derivative(&v)?)?;
    Ok(m.pushforward(tau, t, opts.levels)?
        .evaluate_with(&integrand, &opts.quadrature)?
        .value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Difference {
    Central,
    Forward,
}

/// Finite-difference oracle of `d/dt X_ψ(t)(κ_t#T)` at `τ`.
pub fn transport_fd(
    m: &Motion,
    t: &Chain,
    psi: &Cochain,
    tau: f64,
    eps: f64,
    scheme: Difference,
    opts: &KinematicOptions,
) -> Result<f64> {
    let val = |s: f64| transported_value(m, t, psi, s, opts);
    Ok(match scheme {
        Difference::Central => (val(tau + eps)? - val(tau - eps)?) / (2.0 * eps),
        Difference::Forward => (val(tau + eps)? - val(tau)?) / eps,
    })
}

/// Lagrangian pipeline: finite difference of `t ↦ T(κ_t^# D_ψ(t))`.
pub fn transport_lagrangian_fd(
    m: &Motion,
    t: &Chain,
    psi: &Cochain,
    tau: f64,
    eps: f64,
    scheme: Difference,
    opts: &KinematicOptions,
) -> Result<f64> {
    let val = |s: f64| -> Result<f64> {
        m.check_time(s)?;
        let pulled = psi.form_at(s).pullback(&m.at(s))?;
        Ok(t.subdivide(opts.levels).evaluate_with(&pulled, &opts.quadrature)?.value)
    };
    Ok(match scheme {
        Difference::Central => (val(tau + eps)? - val(tau - eps)?) / (2.0 * eps),
        Difference::Forward => (val(tau + eps)? - val(tau)?) / eps,
    })
}

/// One row of a finite-difference convergence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdRow {
    pub eps: f64,
    pub fd: f64,
    pub error: f64,
    /// Observed order against the previous row (`None` for the first).
    pub order: Option<f64>,
}

/// Observed orders `log(e_{k−1}/e_k)/log(h_{k−1}/h_k)`.
pub fn observed_orders(h: &[f64], err: &[f64]) -> Vec<Option<f64>> {
    (0..h.len())
        .map(|k| {
            if k == 0 || err[k] <= 0.0 || err[k - 1] <= 0.0 {
                None
            } else {
                Some((err[k - 1] / err[k]).ln() / (h[k - 1] / h[k]).ln())
            }
        })
        .collect()
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// FD ladder against the Eulerian derivative.
pub fn fd_ladder(
    m: &Motion,
    t: &Chain,
    psi: &Cochain,
    tau: f64,
    eps: &[f64],
    scheme: Difference,
    opts: &KinematicOptions,
) -> Result<(f64, Vec<FdRow>)> {
    let exact = transport_derivative(m, t, psi, tau, opts)?;
    let fds: Vec<f64> = eps
        .iter()
        .map(|&e| transport_fd(m, t, psi, tau, e, scheme, opts))
        .collect::<Result<_>>()?;
    let errs: Vec<f64> = fds.iter().map(|f| (f - exact).abs()).collect();
    let orders = observed_orders(eps, &errs);
    Ok((
        exact,
        eps.iter()
            .zip(&fds)
            .zip(&errs)
            .zip(orders)
            .map(|(((&eps, &fd), &error), order)| FdRow { eps, fd, error, order })
            .collect(),
    ))
}

/// Classical Reynolds transport theorem for a full-dimensional chain and
/// a density `ω(t)`: `d/dt ∫_{κ_t#T} ω = ∫ ∂ω/∂t + ∮ ω v̂·ν`, with the flux
/// computed from outward face normals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalReynolds {
    pub lhs: f64,
    pub volume_term: f64,
    pub flux_term: f64,
}

impl ClassicalReynolds {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.volume_term - self.flux_term).abs()
    }
}

/// `density` is a polynomial in `(t, x)`, time first.
pub fn classical_reynolds(m: &Motion, t: &Chain, density: &Polynomial, tau: f64, opts: &KinematicOptions) -> Result<ClassicalReynolds> {
    let n = t.ambient();
    if t.degree() != n {
        return Err(Error::DegreeMismatch {
            expected: n,
            found: t.degree(),
        });
    }
    let psi = Cochain::time_polynomial(n, n, vec![density.clone()])?;
    let lhs = transport_derivative(m, t, &psi, tau, opts)?;
    let image = m.pushforward(tau, t, opts.levels)?;
    let volume_term = image.evaluate_with(&psi.rate_at(tau), &opts.quadrature)?.value;
    let bnd = m.pushforward(tau, &t.boundary()?, opts.levels)?;
    let rho = fix_first_variable(density, tau);
    let v = velocity_field(m, tau)?;
    let rule = crate::quadrature::simplex_rule(n - 1, opts.quadrature.degree);
    let mut flux_term = 0.0;
    for (s, mult) in bnd.simplices() {
        let vs = s.vertices();
        let xi = s.edge_wedge();
        // outward normal: ν ∧ ξ is the positive volume element
        let top = basis(n, n).len();
        debug_assert_eq!(top, 1);
        let mut normal = vec![0.0; n];
        for (i, ni) in normal.iter_mut().enumerate() {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            let w = crate::exterior::MultiVector::new(n, 1, e)?.wedge(&xi)?;
            *ni = w.coeffs()[0];
        }
        let area_factor = crate::chain::Simplex::new(vs.to_vec()).map(|s| s.volume()).unwrap_or(0.0);
        let nn = norm(&normal);
        if nn == 0.0 {
            continue;
        }
        let mut acc = 0.0;
        for (bary, w) in rule.barycentric.iter().zip(&rule.weights) {
            let x: Vec<f64> = (0..n).map(|i| bary.iter().zip(vs).map(|(l, v)| l * v[i]).sum()).collect();
            let vel = v.eval(&x);
            let vn: f64 = vel.iter().zip(&normal).map(|(a, b)| a * b).sum::<f64>() / nn;
            acc += w * rho.eval(&x) * vn;
        }
        flux_term += mult * acc * area_factor;
    }
    Ok(ClassicalReynolds {
        lhs,
        volume_term,
        flux_term,
    })
}

/// Dual estimates `sup_φ |(κ_{t+ε#}T − κ_{t#}T)(φ)| / M_K(φ)` over a test
/// family, one per `ε`.
pub fn continuity_modulus(
    m: &Motion,
    t: &Chain,
    time: f64,
    eps: &[f64],
    family: &[FormField],
    grid: &Grid,
    opts: &KinematicOptions,
) -> Result<Vec<f64>> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let denoms: Vec<f64> = family
        .iter()
        .map(|phi| {
            if phi.is_polynomial() {
                crate::form::seminorm_upper_bounds(phi, grid).map(|b| b.comass)
            } else {
                Ok(crate::form::seminorm_comass(phi, grid).value)
            }
        })
        .collect::<Result<_>>()?;
    let base = m.pushforward(time, t, opts.levels)?;
    let base_vals: Vec<f64> = family
        .iter()
        .map(|phi| Ok(base.evaluate_with(phi, &opts.quadrature)?.value))
        .collect::<Result<_>>()?;
    eps.iter()
        .map(|&e| {
            let moved = m.pushforward(time + e, t, opts.levels)?;
            let mut best = 0.0f64;
            for (k, phi) in family.iter().enumerate() {
                if denoms[k] > 0.0 {
                    let d = moved.evaluate_with(phi, &opts.quadrature)?.value - base_vals[k];
                    best = best.max(d.abs() / denoms[k]);
                }
            }
            Ok(best)
        })
        .collect()
}

/// Result of the balance-law form of the transport theorem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceReport {
    /// `X_φ(κ#T) + (X_ψ⌐v̂ − X_ξ)(κ#∂T) + X_ψ(∂(v̂∧κ#T))`.
    pub balance_form: f64,
    pub transport: f64,
    /// Largest coefficient of `ψ̇ + dξ − φ` on the check grid.
    pub balance_residual: f64,
}

/// Transport derivative re-expressed through the balance law
/// `ψ̇ + dξ = φ`. `xi` is an (r−1)-cochain (ignored for r = 0).
pub fn balance_transport(
    m: &Motion,
    t: &Chain,
    psi: &Cochain,
    xi: Option<&Cochain>,
    source: &Cochain,
    tau: f64,
    check: &Grid,
    opts: &KinematicOptions,
) -> Result<BalanceReport> {
    let r = t.degree();
    let n = t.ambient();
    let q = opts.quadrature;
    // residual of the balance law on the grid
    let rate = psi.rate_at(tau);
    let src = source.form_at(tau);
    let dxi = match (xi, r) {
        (Some(x), r) if r >= 1 => Some(x.form_at(tau).exterior_derivative()?),
        _ => None,
    };
    let mut resid = 0.0f64;
    for y in check.points() {
        let mut c = rate.eval_coeffs(&y);
        if let Some(d) = &dxi {
            c.iter_mut().zip(d.eval_coeffs(&y)).for_each(|(a, b)| *a += b);
        }
        c.iter_mut().zip(src.eval_coeffs(&y)).for_each(|(a, b)| *a -= b);
        resid = resid.max(c.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    if resid > 1e-8 {
        return Err(Error::BalanceResidual {
            residual: resid,
            bound: 1e-8,
        });
    }
    let image = m.pushforward(tau, t, opts.levels)?;
    let v = velocity_field(m, tau)?;
    let form = psi.form_at(tau);
    let mut total = image.evaluate_with(&src, &q)?.value;
    if r >= 1 {
        let bimage = m.pushforward(tau, &t.boundary()?, opts.levels)?;
        let mut boundary_form = form.contract(&v)?;
        if let Some(x) = xi {
            boundary_form = boundary_form.sub(&x.form_at(tau))?;
        }
        total += bimage.evaluate_with(&boundary_form, &q)?.value;
    }
    if r < n {
        total += image.evaluate_with(&form.exterior_derivative()?.contract(&v)?, &q)?.value;
    }
    Ok(BalanceReport {
        balance_form: total,
        transport: transport_derivative(m, t, psi, tau, opts)?,
        balance_residual: resid,
    })
}

/// Manufactured source `φ := ψ̇ + dξ` for time-polynomial `ψ` and `ξ`.
pub fn manufactured_source(psi: &Cochain, xi: Option<&Cochain>) -> Result<Cochain> {
    let (dim, degree, comps) = match psi {
        Cochain::TimePolynomial { dim, degree, components } => (*dim, *degree, components),
        Cochain::Static(_) => return Err(Error::InvalidParameter("manufactured source needs a time-polynomial ψ".into())),
    };
    let mut out: Vec<Polynomial> = comps.iter().map(|p| p.derivative(0)).collect();
    if let Some(x) = xi {
        let d = x
            .spatial_d()
            .ok_or_else(|| Error::InvalidParameter("flux must be a time-polynomial cochain".into()))?;
        if d.len() != out.len() {
            return Err(Error::DegreeMismatch {
                expected: degree,
                found: x.degree() + 1,
            });
        }
        out = out.iter().zip(&d).map(|(a, b)| a.add(b)).collect();
    }
    Cochain::time_polynomial(dim, degree, out)
}

/// Pointwise residual of `∂_t(κ_t^#φ)|_τ = κ_τ^#(L_{v̂_τ} φ)` at `x`, with
/// the left side by central differences of step `eps`.
pub fn pullback_derivative_residual(m: &Motion, phi: &FormField, tau: f64, eps: f64, x: &[f64]) -> Result<f64> {
    let at = |s: f64| -> Result<Vec<f64>> { Ok(phi.pullback(&m.at(s))?.eval_coeffs(x)) };
    let plus = at(tau + eps)?;
    let minus = at(tau - eps)?;
    let v = velocity_field(m, tau)?;
    let rhs = phi.lie_derivative(&v)?.pullback(&m.at(tau))?.eval_coeffs(x);
    Ok(plus
        .iter()
        .zip(&minus)
        .zip(&rhs)
        .map(|((p, q), r)| ((p - q) / (2.0 * eps) - r).abs())
        .fold(0.0, f64::max))
}

/// Pointwise residual of `κ^#(ω) ⌐ e_t = κ_τ^#(ω ⌐ v̂_τ)` at `(τ, x)`,
/// where `κ(t, x) = κ_t(x)` is the space-time map and only the spatial
/// components of the left side are compared.
pub fn contraction_identity_residual(m: &Motion, omega: &FormField, tau: f64, x: &[f64]) -> Result<f64> {
    let n = m.dim();
    let k = omega.degree();
    if k == 0 {
        return Err(Error::DegreeZero);
    }
    let y = m.apply(tau, x);
    let vel = m.velocity(tau, x);
    let dk = m.jacobian(tau, x);
    // space-time Jacobian [κ̇ | Dκ], n × (1+n)
    let full = DMatrix::from_fn(n, n + 1, |i, j| if j == 0 { vel[i] } else { dk[(i, j - 1)] });
    let c = compound_matrix(&full, k);
    let w = omega.eval_coeffs(&y);
    let pulled: Vec<f64> = (0..c.ncols()).map(|l| (0..c.nrows()).map(|mu| w[mu] * c[(mu, l)]).sum()).collect();
    let mut e_t = vec![0.0; n + 1];
    e_t[0] = 1.0;
    let contracted = contract_coeffs(n + 1, k, &pulled, &e_t);
    let lhs: Vec<f64> = basis(n + 1, k - 1)
        .iter()
        .zip(&contracted)
        .filter(|(idx, _)| idx.first() != Some(&0))
        .map(|(_, &c)| c)
        .collect();
    // right side: κ_τ^#(ω⌐v̂) at x, with v̂(κ_τ x) = κ̇_τ(x)
    let wv = contract_coeffs(n, k, &w, &vel);
    let cs = compound_matrix(&dk, k - 1);
    let rhs: Vec<f64> = (0..cs.ncols()).map(|l| (0..cs.nrows()).map(|mu| wv[mu] * cs[(mu, l)]).sum()).collect();
    Ok(lhs.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// Weak sharp-topology check of the derivative: the largest normalized
/// defect `|FD(φ) − (κ_τ#T)(L_v̂ φ)| / S_K(φ)` over a test family.
pub fn sharp_derivative_defect(
    m: &Motion,
    t: &Chain,
    tau: f64,
    eps: f64,
    family: &[FormField],
    grid: &Grid,
    opts: &KinematicOptions,
) -> Result<f64> {
    let plus = m.pushforward(tau + eps, t, opts.levels)?;
    let minus = m.pushforward(tau - eps, t, opts.levels)?;
    let here = m.pushforward(tau, t, opts.levels)?;
    let v = velocity_field(m, tau)?;
    let mut worst = 0.0f64;
    for phi in family {
        let s = crate::form::seminorm_upper_bounds(phi, grid)?.sharp;
        if !(s > 0.0) {
            continue;
        }
        let q = opts.quadrature;
        let fd = (plus.evaluate_with(phi, &q)?.value - minus.evaluate_with(phi, &q)?.value) / (2.0 * eps);
        let reynolds = here.evaluate_with(&phi.lie_derivative(&v)?, &q)?.value;
        worst = worst.max((fd - reynolds).abs() / s);
    }
    Ok(worst)
}

/// Jacobian of a [`LipMap`]: exact when the map provides one, otherwise by
/// central differences.
pub fn map_jacobian(f: &dyn LipMap, x: &[f64]) -> DMatrix<f64> {
    f.jacobian(x).unwrap_or_else(|| jacobian_fd(f, x, 1e-6))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn rotation() -> Motion {
        Motion::new(
            MotionSpec::Rotation {
                omega: 1.0,
                center: vec![0.5, 0.5],
                r1: 1.0,
                r2: 2.0,
            },
            (-1.0, 1.0),
        )
        .unwrap()
    }

    fn translation() -> Motion {
        Motion::new(
            MotionSpec::Translation {
                velocity: vec![1.0, 0.5],
                center: vec![0.5, 0.5],
                r1: 1.5,
                r2: 4.0,
            },
            (-0.5, 0.5),
        )
        .unwrap()
    }

    #[test]
    fn velocity_examples() {
        let tr = translation();
        let v = tr.eulerian_velocity(0.3, &[0.8, 0.6]).unwrap();
        assert_abs_diff_eq!(v[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v[1], 0.5, epsilon = 1e-12);
        let st = Motion::new(MotionSpec::Static { dim: 2 }, (0.0, 1.0)).unwrap();
        assert_eq!(st.eulerian_velocity(0.5, &[0.1, 0.2]).unwrap(), vec![0.0, 0.0]);
        let ex = Motion::new(
            MotionSpec::ExponentialScaling {
                center: vec![0.0, 0.0],
                r1: 2.0,
                r2: 4.0,
            },
            (-0.2, 0.2),
        )
        .unwrap();
        let y = [0.4, -0.3];
        let v = ex.eulerian_velocity(0.1, &y).unwrap();
        assert_abs_diff_eq!(v[0], y[0], epsilon = 1e-12);
        assert_abs_diff_eq!(v[1], y[1], epsilon = 1e-12);
    }

    #[test]
    fn inverses_round_trip() {
        let specs = [
            rotation(),
            translation(),
            Motion::new(
                MotionSpec::Shear {
                    rate: 0.5,
                    center: vec![0.5, 0.5],
                    r1: 1.0,
                    r2: 3.0,
                },
                (-0.5, 0.5),
            )
            .unwrap(),
            Motion::new(
                MotionSpec::Expansion {
                    center: vec![0.0, 0.0],
                    r1: 2.0,
                    r2: 4.0,
                },
                (-0.2, 0.2),
            )
            .unwrap(),
            Motion::new(
                MotionSpec::Tent {
                    center: vec![0.5, 0.5],
                    width: 0.25,
                    amplitude: vec![0.1, 0.05],
                },
                (-1.0, 1.0),
            )
            .unwrap(),
        ];
        for m in &specs {
            for x in [[0.3, 0.2], [1.7, -0.4], [0.55, 0.6]] {
                let y = m.apply(0.37 * m.interval().1, &x);
                let back = m.inverse(0.37 * m.interval().1, &y).unwrap();
                assert!(norm(&diff(&back, &x)) < 1e-10, "{} at {x:?}", m.name());
            }
        }
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let m = rotation();
        let x = [1.4, 0.9];
        let j = m.jacobian(0.7, &x);
        let jf = jacobian_fd(&m.at(0.7), &x, 1e-6);
        assert!((j - jf).abs().max() < 1e-8);
    }

    #[test]
    fn flow_examples() {
        let c: TimeField = Arc::new(|_, _| vec![1.0, -2.0]);
        let y = flow(&c, 0.5, 0.0, &[0.0, 0.0], &FlowOptions::default()).unwrap();
        assert_abs_diff_eq!(y[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(y[1], -1.0, epsilon = 1e-12);
        let lin: TimeField = Arc::new(|_, x| x.to_vec());
        let y = flow(&lin, 1.0, 0.0, &[1.0], &FlowOptions::default()).unwrap();
        assert_abs_diff_eq!(y[0], 1f64.exp(), epsilon = 1e-8);
        assert_eq!(flow(&lin, 0.3, 0.3, &[2.0], &FlowOptions::default()).unwrap(), vec![2.0]);
    }

    #[test]
    fn flow_matches_motion() {
        let m = rotation();
        let v = motion_field(&m);
        let x = [0.9, 0.2];
        let y = flow(&v, 0.6, 0.1, &m.apply(0.1, &x), &FlowOptions::default()).unwrap();
        let expect = m.apply(0.6, &x);
        assert!(norm(&diff(&y, &expect)) < 1e-8);
    }

    #[test]
    fn deformation_examples() {
        let seg = Chain::segment(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
        let area = FormField::monomial_form(2, &[0, 1], Polynomial::constant(2, 1.0)).unwrap();
        let st = Motion::new(MotionSpec::Static { dim: 2 }, (0.0, 1.0)).unwrap();
        let d = deformation_chain(&st, 0.0, 1.0, &seg, KinematicOptions::default()).unwrap();
        assert_eq!(d.evaluate(&area).unwrap(), 0.0);
        // sweeping e_x-segment by velocity (1, 0.5) for time 0.4: parallelogram
        // with signed area (v ∧ e_x) = −0.5·0.4
        let tr = translation();
        let d = deformation_chain(&tr, 0.0, 0.4, &seg, KinematicOptions::default()).unwrap();
        assert_abs_diff_eq!(d.evaluate(&area).unwrap(), -0.2, epsilon = 1e-10);
        let d = deformation_chain(&tr, 0.2, 0.2, &seg, KinematicOptions::default()).unwrap();
        assert_eq!(d.evaluate(&area).unwrap(), 0.0);
        assert!(matches!(
            DeformationChain::new(&tr, 0.0, 0.9, &seg, KinematicOptions::default()),
            Err(Error::TimeOutOfRange { .. })
        ));
    }

    #[test]
    fn static_transport_is_zero() {
        let st = Motion::new(MotionSpec::Static { dim: 2 }, (-1.0, 1.0)).unwrap();
        let psi = Cochain::Static(FormField::monomial_form(2, &[0, 1], Polynomial::var(2, 0)).unwrap());
        let d = transport_derivative(&st, &Chain::unit_square(), &psi, 0.0, &KinematicOptions::default()).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn expanding_box_volume_rate() {
        let m = Motion::new(
            MotionSpec::Expansion {
                center: vec![0.0, 0.0],
                r1: 2.0,
                r2: 4.0,
            },
            (-0.2, 0.2),
        )
        .unwrap();
        let one = Polynomial::constant(3, 1.0);
        let r = classical_reynolds(&m, &Chain::unit_square(), &one, 0.0, &KinematicOptions::default()).unwrap();
        assert_abs_diff_eq!(r.lhs, 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r.flux_term, 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r.volume_term, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn invariants_hold_for_rotation() {
        let lower = rotation().check_invariants(&[-0.5, 0.5], 9).unwrap();
        assert!(lower > 0.0);
    }
}
