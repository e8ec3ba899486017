//! Differential forms on boxes in ℝⁿ.
//!
//! A [`FormField`] has either an exact polynomial backend (one polynomial
//! per basis covector) or a sampled backend (a pure evaluator plus a
//! finite-difference step). Operations between polynomial fields stay
//! polynomial; anything touching a sampled field becomes sampled.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exterior::{
    basis, binomial, compound_matrix, contract_coeffs, rank_of, sort_with_sign, wedge_coeffs, CoVector,
    ComassOptions,
};
use crate::lipschitz::{jacobian_fd, LipMap};
use crate::mollifier::Mollifier;
use crate::polynomial::Polynomial;

/// Axis-aligned box `[lower, upper]` in ℝⁿ.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl AxisBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::InvalidBox("corner dimensions differ or are empty".into()));
        }
        if lower.iter().zip(&upper).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::InvalidBox(format!("lower {lower:?} must be below upper {upper:?}")));
        }
        Ok(Self { lower, upper })
    }

    /// The unit cube `[0, 1]ⁿ`.
    pub fn unit(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            upper: vec![1.0; n],
        }
    }

    /// The cube `[−h, h]ⁿ`.
    pub fn centered(n: usize, h: f64) -> Self {
        Self {
            lower: vec![-h; n],
            upper: vec![h; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (a, b))| *v >= *a && *v <= *b)
    }

    pub fn contains_box(&self, other: &AxisBox) -> bool {
        self.contains(&other.lower) && self.contains(&other.upper)
    }

    pub fn diameter(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }

    /// Grows the box by `margin` on every side.
    pub fn dilate(&self, margin: f64) -> AxisBox {
        AxisBox {
            lower: self.lower.iter().map(|a| a - margin).collect(),
            upper: self.upper.iter().map(|b| b + margin).collect(),
        }
    }

    /// Smallest box containing all points.
    pub fn bounding(points: &[Vec<f64>]) -> Option<AxisBox> {
        let first = points.first()?;
        let mut lower = first.clone();
        let mut upper = first.clone();
        for p in points {
            for i in 0..p.len() {
                lower[i] = lower[i].min(p[i]);
                upper[i] = upper[i].max(p[i]);
            }
        }
        for i in 0..lower.len() {
            if lower[i] == upper[i] {
                lower[i] -= 1e-9;
                upper[i] += 1e-9;
            }
        }
        Some(AxisBox { lower, upper })
    }
}

/// Uniform sample grid on a compact box `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    region: AxisBox,
    resolution: Vec<usize>,
}

impl Grid {
    pub fn new(region: AxisBox, resolution: Vec<usize>) -> Result<Self> {
        if resolution.len() != region.dim() {
            return Err(Error::DimensionMismatch {
                expected: region.dim(),
                found: resolution.len(),
            });
        }
        if resolution.iter().any(|&m| m < 2) {
            return Err(Error::InvalidParameter("grid needs at least 2 points per axis".into()));
        }
        Ok(Self { region, resolution })
    }

    /// `m` points per axis.
    pub fn uniform(region: AxisBox, m: usize) -> Result<Self> {
        let n = region.dim();
        Self::new(region, vec![m; n])
    }

    pub fn region(&self) -> &AxisBox {
        &self.region
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn spacing(&self, axis: usize) -> f64 {
        (self.region.upper[axis] - self.region.lower[axis]) / (self.resolution[axis] - 1) as f64
    }

    /// Largest distance from a point of `K` to the nearest grid point.
    pub fn covering_radius(&self) -> f64 {
        0.5 * (0..self.region.dim())
            .map(|i| self.spacing(i).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut rem = flat;
        (0..self.region.dim())
            .map(|i| {
                let k = rem % self.resolution[i];
                rem /= self.resolution[i];
                if k + 1 == self.resolution[i] {
                    self.region.upper[i]
                } else {
                    self.region.lower[i] + k as f64 * self.spacing(i)
                }
            })
            .collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Index pairs of grid points adjacent along one axis or one diagonal
    /// of a grid cell.
    pub fn neighbor_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.region.dim();
        let mut strides = vec![1usize; n];
        for i in 1..n {
            strides[i] = strides[i - 1] * self.resolution[i - 1];
        }
        let mut out = Vec::new();
        for flat in 0..self.len() {
            let mut rem = flat;
            let idx: Vec<usize> = (0..n)
                .map(|i| {
                    let k = rem % self.resolution[i];
                    rem /= self.resolution[i];
                    k
                })
                .collect();
            for mask in 1u32..(1 << n) {
                let mut ok = true;
                let mut other = flat;
                for i in 0..n {
                    if mask & (1 << i) != 0 {
                        if idx[i] + 1 >= self.resolution[i] {
                            ok = false;
                            break;
                        }
                        other += strides[i];
                    }
                }
                if ok {
                    out.push((flat, other));
                }
            }
        }
        out
    }
}

type CoeffFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
enum Backend {
    Polynomial(Vec<Polynomial>),
    Sampled {
        eval: CoeffFn,
        step: f64,
        derivative: Option<Arc<FormField>>,
    },
}

/// A differential r-form on (a box of) ℝⁿ.
#[derive(Clone)]
pub struct FormField {
    dim: usize,
    degree: usize,
    backend: Backend,
    domain: Option<AxisBox>,
}

impl fmt::Debug for FormField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.backend {
            Backend::Polynomial(p) => format!("polynomial{:?}", p.iter().map(|q| q.to_string()).collect::<Vec<_>>()),
            Backend::Sampled { step, .. } => format!("sampled(h={step:e})"),
        };
        write!(f, "FormField(n={}, r={}, {kind})", self.dim, self.degree)
    }
}

/// Default finite-difference step relative to the box diameter.
pub const DEFAULT_RELATIVE_STEP: f64 = 1e-5;

impl FormField {
    /// Polynomial form from one polynomial per basis covector, in
    /// lexicographic order.
    pub fn polynomial(dim: usize, degree: usize, components: Vec<Polynomial>) -> Result<Self> {
        if degree > dim {
            return Err(Error::DegreeOverflow { degree, ambient: dim });
        }
        let expected = binomial(dim, degree);
        if components.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: components.len(),
            });
        }
        if let Some(p) = components.iter().find(|p| p.nvars() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.nvars(),
            });
        }
        Ok(Self {
            dim,
            degree,
            backend: Backend::Polynomial(components),
            domain: None,
        })
    }

    pub fn zero(dim: usize, degree: usize) -> Self {
        Self::polynomial(dim, degree, vec![Polynomial::zero(dim); binomial(dim, degree)])
            .expect("degree ≤ dim checked by caller")
    }

    /// Constant form with the given covector value.
    pub fn constant(value: &CoVector) -> Self {
        let n = value.ambient();
        Self::polynomial(
            n,
            value.degree(),
            value.coeffs().iter().map(|&c| Polynomial::constant(n, c)).collect(),
        )
        .expect("covector layout matches")
    }

    /// `p dx^{entries}` for a single (possibly unsorted) index set.
    pub fn monomial_form(dim: usize, entries: &[usize], coefficient: Polynomial) -> Result<Self> {
        let (sign, sorted) =
            sort_with_sign(entries).ok_or_else(|| Error::InvalidMultiIndex(entries.to_vec()))?;
        let rank = rank_of(dim, &sorted).ok_or_else(|| Error::InvalidMultiIndex(entries.to_vec()))?;
        let mut comps = vec![Polynomial::zero(dim); binomial(dim, sorted.len())];
        comps[rank] = coefficient.scale(sign);
        Self::polynomial(dim, sorted.len(), comps)
    }

    /// Sampled form from a pure evaluator returning dense coefficients.
    pub fn sampled<F>(dim: usize, degree: usize, step: f64, eval: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        assert!(degree <= dim);
        Self {
            dim,
            degree,
            backend: Backend::Sampled {
                eval: Arc::new(eval),
                step,
                derivative: None,
            },
            domain: None,
        }
    }

    /// Attaches a known exterior derivative to a sampled form, replacing the
    /// finite-difference one.
    pub fn with_exterior_derivative(mut self, d: FormField) -> Result<Self> {
        if d.degree != self.degree + 1 || d.dim != self.dim {
            return Err(Error::DegreeMismatch {
                expected: self.degree + 1,
                found: d.degree,
            });
        }
        if let Backend::Sampled { derivative, .. } = &mut self.backend {
            *derivative = Some(Arc::new(d));
        }
        Ok(self)
    }

    pub fn with_domain(mut self, domain: AxisBox) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn domain(&self) -> Option<&AxisBox> {
        self.domain.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_polynomial(&self) -> bool {
        matches!(self.backend, Backend::Polynomial(_))
    }

    pub fn components(&self) -> Option<&[Polynomial]> {
        match &self.backend {
            Backend::Polynomial(p) => Some(p),
            Backend::Sampled { .. } => None,
        }
    }

    /// Finite-difference step of the sampled backend (`None` for
    /// polynomial forms).
    pub fn step(&self) -> Option<f64> {
        match &self.backend {
            Backend::Sampled { step, .. } => Some(*step),
            Backend::Polynomial(_) => None,
        }
    }

    fn fd_step(&self) -> f64 {
        match &self.backend {
            Backend::Sampled { step, .. } => *step,
            Backend::Polynomial(_) => self
                .domain
                .as_ref()
                .map(|d| DEFAULT_RELATIVE_STEP * d.diameter())
                .unwrap_or(DEFAULT_RELATIVE_STEP),
        }
    }

    /// Dense coefficients at `x` without domain checking.
    pub fn eval_coeffs(&self, x: &[f64]) -> Vec<f64> {
        match &self.backend {
            Backend::Polynomial(p) => p.iter().map(|q| q.eval(x)).collect(),
            Backend::Sampled { eval, .. } => eval(x),
        }
    }

    pub fn eval(&self, x: &[f64]) -> CoVector {
        CoVector::new(self.dim, self.degree, self.eval_coeffs(x)).expect("evaluator returned a valid layout")
    }

    /// Evaluation that reports points outside the declared domain.
    pub fn try_eval(&self, x: &[f64]) -> Result<CoVector> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        if let Some(d) = &self.domain {
            if !d.contains(x) {
                return Err(Error::DomainEscape { point: x.to_vec() });
            }
        }
        Ok(self.eval(x))
    }

    fn check_same(&self, other: &FormField) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
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

    fn merged_domain(&self, other: &FormField) -> Option<AxisBox> {
        self.domain.clone().or_else(|| other.domain.clone())
    }

    pub fn add(&self, other: &FormField) -> Result<FormField> {
        self.check_same(other)?;
        let domain = self.merged_domain(other);
        if let (Backend::Polynomial(a), Backend::Polynomial(b)) = (&self.backend, &other.backend) {
            let mut out = FormField::polynomial(self.dim, self.degree, a.iter().zip(b).map(|(p, q)| p.add(q)).collect())?;
            out.domain = domain;
            return Ok(out);
        }
        let (a, b) = (self.clone(), other.clone());
        let step = self.fd_step().min(other.fd_step());
        let mut out = FormField::sampled(self.dim, self.degree, step, move |x| {
            let mut u = a.eval_coeffs(x);
            u.iter_mut().zip(b.eval_coeffs(x)).for_each(|(p, q)| *p += q);
            u
        });
        if let (Ok(da), Ok(db)) = (self.exact_derivative(), other.exact_derivative()) {
            if let (Some(da), Some(db)) = (da, db) {
                out = out.with_exterior_derivative(da.add(&db)?)?;
            }
        }
        out.domain = domain;
        Ok(out)
    }

    pub fn sub(&self, other: &FormField) -> Result<FormField> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> FormField {
        let mut out = match &self.backend {
            Backend::Polynomial(p) => FormField {
                dim: self.dim,
                degree: self.degree,
                backend: Backend::Polynomial(p.iter().map(|q| q.scale(s)).collect()),
                domain: None,
            },
            Backend::Sampled { eval, step, derivative } => {
                let e = eval.clone();
                FormField {
                    dim: self.dim,
                    degree: self.degree,
                    backend: Backend::Sampled {
                        eval: Arc::new(move |x| e(x).into_iter().map(|c| c * s).collect()),
                        step: *step,
                        derivative: derivative.as_ref().map(|d| Arc::new(d.scale(s))),
                    },
                    domain: None,
                }
            }
        };
        out.domain = self.domain.clone();
        out
    }

    /// Multiplies a form by a scalar polynomial.
    pub fn multiply_polynomial(&self, f: &Polynomial) -> Result<FormField> {
        match &self.backend {
            Backend::Polynomial(p) => {
                let mut out = FormField::polynomial(self.dim, self.degree, p.iter().map(|q| q.mul(f)).collect())?;
                out.domain = self.domain.clone();
                Ok(out)
            }
            Backend::Sampled { .. } => {
                let scalar = FormField::polynomial(self.dim, 0, vec![f.clone()])?;
                scalar.wedge(self)
            }
        }
    }

    fn exact_derivative(&self) -> Result<Option<FormField>> {
        match &self.backend {
            Backend::Polynomial(_) => self.exterior_derivative().map(Some),
            Backend::Sampled { derivative, .. } => Ok(derivative.as_ref().map(|d| (**d).clone())),
        }
    }

    /// Exterior derivative: exact for polynomials, central differences with
    /// the backend step otherwise (unless an exact derivative is attached).
    pub fn exterior_derivative(&self) -> Result<FormField> {
        let n = self.dim;
        let r = self.degree;
        if r >= n {
            return Err(Error::DegreeOverflow { degree: r + 1, ambient: n });
        }
        match &self.backend {
            Backend::Polynomial(p) => {
                let mut out = vec![Polynomial::zero(n); binomial(n, r + 1)];
                let b = basis(n, r);
                let mut merged = Vec::with_capacity(r + 1);
                for (i, comp) in p.iter().enumerate() {
                    if comp.is_zero() {
                        continue;
                    }
                    for j in 0..n {
                        merged.clear();
                        merged.push(j);
                        merged.extend_from_slice(&b[i]);
                        if let Some((sign, sorted)) = sort_with_sign(&merged) {
                            let pos = rank_of(n, &sorted).expect("valid index");
                            out[pos] = out[pos].add(&comp.derivative(j).scale(sign));
                        }
                    }
                }
                let mut f = FormField::polynomial(n, r + 1, out)?;
                f.domain = self.domain.clone();
                Ok(f)
            }
            Backend::Sampled { derivative: Some(d), .. } => Ok((**d).clone()),
            Backend::Sampled { eval, step, .. } => {
                let e = eval.clone();
                let h = *step;
                let mut f = FormField::sampled(n, r + 1, h, move |x| {
                    let grads = central_gradient(&*e, x, h);
                    d_from_gradients(n, r, &grads)
                });
                f.domain = self.domain.clone();
                Ok(f)
            }
        }
    }

    /// Exterior product of two forms.
    pub fn wedge(&self, other: &FormField) -> Result<FormField> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let n = self.dim;
        let (p, q) = (self.degree, other.degree);
        if p + q > n {
            return Err(Error::DegreeOverflow { degree: p + q, ambient: n });
        }
        let domain = self.merged_domain(other);
        if let (Backend::Polynomial(a), Backend::Polynomial(b)) = (&self.backend, &other.backend) {
            let mut out = vec![Polynomial::zero(n); binomial(n, p + q)];
            let ba = basis(n, p);
            let bb = basis(n, q);
            for (i, pa) in a.iter().enumerate() {
                if pa.is_zero() {
                    continue;
                }
                for (j, pb) in b.iter().enumerate() {
                    if pb.is_zero() {
                        continue;
                    }
                    let mut merged = ba[i].clone();
                    merged.extend_from_slice(&bb[j]);
                    if let Some((sign, sorted)) = sort_with_sign(&merged) {
                        let pos = rank_of(n, &sorted).expect("valid index");
                        out[pos] = out[pos].add(&pa.mul(pb).scale(sign));
                    }
                }
            }
            let mut f = FormField::polynomial(n, p + q, out)?;
            f.domain = domain;
            return Ok(f);
        }
        let (a, b) = (self.clone(), other.clone());
        let mut f = FormField::sampled(n, p + q, self.fd_step().min(other.fd_step()), move |x| {
            wedge_coeffs(n, p, &a.eval_coeffs(x), q, &b.eval_coeffs(x)).expect("degree checked")
        });
        f.domain = domain;
        Ok(f)
    }

    /// Pointwise contraction `φ ⌐ v`. A Lipschitz (non-polynomial) field is
    /// continuous, so the mollified limit coincides with the pointwise
    /// value; see [`FormField::contract_mollified`] for the explicit limit.
    pub fn contract(&self, v: &VectorField) -> Result<FormField> {
        if self.degree == 0 {
            return Err(Error::DegreeZero);
        }
        if v.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.dim(),
            });
        }
        let n = self.dim;
        let r = self.degree;
        if let (Backend::Polynomial(p), Some(vp)) = (&self.backend, v.polynomial()) {
            let mut out = vec![Polynomial::zero(n); binomial(n, r - 1)];
            let b = basis(n, r);
            for (i, comp) in p.iter().enumerate() {
                if comp.is_zero() {
                    continue;
                }
                let idx = &b[i];
                for (k, &slot) in idx.iter().enumerate() {
                    if vp[slot].is_zero() {
                        continue;
                    }
                    let rest: Vec<usize> = idx.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, &e)| e).collect();
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    let pos = rank_of(n, &rest).expect("valid index");
                    out[pos] = out[pos].add(&comp.mul(&vp[slot]).scale(sign));
                }
            }
            let mut f = FormField::polynomial(n, r - 1, out)?;
            f.domain = self.domain.clone();
            return Ok(f);
        }
        let (a, vv) = (self.clone(), v.clone());
        let mut f = FormField::sampled(n, r - 1, self.fd_step(), move |x| {
            contract_coeffs(n, r, &a.eval_coeffs(x), &vv.eval(x))
        });
        f.domain = self.domain.clone();
        Ok(f)
    }

    /// Contraction with a mollified field, Richardson-extrapolated over the
    /// radii `4h, 2h, h`.
    pub fn contract_mollified(&self, v: &VectorField, h: f64) -> Result<FormField> {
        let fields: Vec<FormField> = [4.0 * h, 2.0 * h, h]
            .iter()
            .map(|&rho| self.contract(&v.mollified(&Mollifier::gaussian(rho))))
            .collect::<Result<_>>()?;
        let n = self.dim;
        let r = self.degree - 1;
        let step = self.fd_step();
        let mut f = FormField::sampled(n, r, step, move |x| {
            let c4 = fields[0].eval_coeffs(x);
            let c2 = fields[1].eval_coeffs(x);
            let c1 = fields[2].eval_coeffs(x);
            (0..c1.len())
                .map(|i| {
                    let fine = (4.0 * c1[i] - c2[i]) / 3.0;
                    let coarse = (4.0 * c2[i] - c4[i]) / 3.0;
                    (16.0 * fine - coarse) / 15.0
                })
                .collect()
        });
        f.domain = self.domain.clone();
        Ok(f)
    }

    /// Lie derivative by Cartan's formula `L_v φ = d(φ⌐v) + (dφ)⌐v`.
    pub fn lie_derivative(&self, v: &VectorField) -> Result<FormField> {
        let n = self.dim;
        let r = self.degree;
        let first = if r == 0 {
            FormField::zero(n, 0)
        } else {
            self.contract(v)?.exterior_derivative()?
        };
        let second = if r == n {
            FormField::zero(n, r)
        } else {
            self.exterior_derivative()?.contract(v)?
        };
        first.add(&second)
    }

    /// Lie derivative from the local component representation
    /// `L_v ω = Dω(v) + v^i_{,j} ω_λ dx^j ∧ (dx^λ ⌐ e_i)`, computed without
    /// the exterior derivative or contraction routines.
    pub fn lie_derivative_components(&self, v: &VectorField) -> Result<FormField> {
        if v.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.dim(),
            });
        }
        let n = self.dim;
        let r = self.degree;
        let terms = lie_component_terms(n, r);
        if let (Backend::Polynomial(w), Some(vp)) = (&self.backend, v.polynomial()) {
            let mut out: Vec<Polynomial> = w
                .iter()
                .map(|wl| {
                    (0..n).fold(Polynomial::zero(n), |acc, j| acc.add(&vp[j].mul(&wl.derivative(j))))
                })
                .collect();
            for t in &terms {
                let dv = vp[t.i].derivative(t.j);
                if dv.is_zero() || w[t.src].is_zero() {
                    continue;
                }
                out[t.dst] = out[t.dst].add(&dv.mul(&w[t.src]).scale(t.sign));
            }
            let mut f = FormField::polynomial(n, r, out)?;
            f.domain = self.domain.clone();
            return Ok(f);
        }
        let (a, vv) = (self.clone(), v.clone());
        let h = self.fd_step();
        let mut f = FormField::sampled(n, r, h, move |x| {
            let grads = central_gradient(&|y: &[f64]| a.eval_coeffs(y), x, h);
            let vx = vv.eval(x);
            let jac = vv.jacobian(x);
            let w = a.eval_coeffs(x);
            let mut out: Vec<f64> = (0..w.len())
                .map(|l| (0..n).map(|j| vx[j] * grads[j][l]).sum())
                .collect();
            for t in &terms {
                out[t.dst] += t.sign * jac[(t.i, t.j)] * w[t.src];
            }
            out
        });
        f.domain = self.domain.clone();
        Ok(f)
    }

    /// Pullback `f^#φ` under a map from ℝᵐ into this form's space.
    /// Exact (polynomial) when the map is affine and the form polynomial.
    pub fn pullback(&self, map: &dyn LipMap) -> Result<FormField> {
        if map.target_dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: map.target_dim(),
            });
        }
        let m = map.source_dim();
        let r = self.degree;
        if r > m {
            return Err(Error::DegreeOverflow { degree: r, ambient: m });
        }
        if let (Backend::Polynomial(p), Some((a, b))) = (&self.backend, map.affine()) {
            let subs: Vec<Polynomial> = (0..self.dim)
                .map(|i| {
                    (0..m).fold(Polynomial::constant(m, b[i]), |acc, j| {
                        acc.add(&Polynomial::var(m, j).scale(a[(i, j)]))
                    })
                })
                .collect();
            let composed: Vec<Polynomial> = p.iter().map(|q| q.compose(&subs)).collect();
            let c = compound_matrix(&a, r);
            let out: Vec<Polynomial> = (0..binomial(m, r))
                .map(|lam| {
                    composed
                        .iter()
                        .enumerate()
                        .fold(Polynomial::zero(m), |acc, (mu, q)| acc.add(&q.scale(c[(mu, lam)])))
                })
                .collect();
            return FormField::polynomial(m, r, out);
        }
        let form = self.clone();
        let map = map.clone_arc();
        let h = DEFAULT_RELATIVE_STEP;
        Ok(FormField::sampled(m, r, h, move |x| {
            let y = map.apply(x);
            let jac = map.jacobian(x).unwrap_or_else(|| jacobian_fd(&*map, x, h));
            let c = compound_matrix(&jac, r);
            let w = form.eval_coeffs(&y);
            (0..c.ncols())
                .map(|lam| (0..c.nrows()).map(|mu| w[mu] * c[(mu, lam)]).sum())
                .collect()
        }))
    }

    /// Pullback with a check that the mapped grid of `source` stays inside
    /// this form's domain.
    pub fn pullback_checked(&self, map: &dyn LipMap, source: &Grid) -> Result<FormField> {
        if let Some(d) = &self.domain {
            for x in source.points() {
                let y = map.apply(&x);
                if !d.contains(&y) {
                    return Err(Error::DomainEscape { point: y });
                }
            }
        }
        let mut f = self.pullback(map)?;
        f.domain = Some(source.region().clone());
        Ok(f)
    }
}

/// Central-difference gradients of a coefficient field: `out[j][l]` is
/// `∂_j` of coefficient `l`.
fn central_gradient<F: Fn(&[f64]) -> Vec<f64> + ?Sized>(f: &F, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|j| {
            y[j] = x[j] + h;
            let plus = f(&y);
            y[j] = x[j] - h;
            let minus = f(&y);
            y[j] = x[j];
            plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * h)).collect()
        })
        .collect()
}

fn d_from_gradients(n: usize, r: usize, grads: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; binomial(n, r + 1)];
    let b = basis(n, r);
    let mut merged = Vec::with_capacity(r + 1);
    for (i, idx) in b.iter().enumerate() {
        for (j, g) in grads.iter().enumerate() {
            merged.clear();
            merged.push(j);
            merged.extend_from_slice(idx);
            if let Some((sign, sorted)) = sort_with_sign(&merged) {
                out[rank_of(n, &sorted).expect("valid")] += sign * g[i];
            }
        }
    }
    out
}

struct LieTerm {
    src: usize,
    dst: usize,
    i: usize,
    j: usize,
    sign: f64,
}

/// Nonzero basis terms `dx^j ∧ (dx^λ ⌐ e_i)`.
fn lie_component_terms(n: usize, r: usize) -> Vec<LieTerm> {
    let mut out = Vec::new();
    if r == 0 {
        return out;
    }
    for (src, lam) in basis(n, r).iter().enumerate() {
        for (k, &i) in lam.iter().enumerate() {
            let contracted_sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let rest: Vec<usize> = lam.iter().copied().filter(|&e| e != i).collect();
            for j in 0..n {
                let mut merged = vec![j];
                merged.extend_from_slice(&rest);
                if let Some((sign, sorted)) = sort_with_sign(&merged) {
                    out.push(LieTerm {
                        src,
                        dst: rank_of(n, &sorted).expect("valid"),
                        i,
                        j,
                        sign: sign * contracted_sign,
                    });
                }
            }
        }
    }
    out
}

type VecFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type JacFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// A vector field on ℝⁿ.
#[derive(Clone)]
pub struct VectorField {
    dim: usize,
    eval: VecFn,
    polynomial: Option<Vec<Polynomial>>,
    jacobian: Option<JacFn>,
    lipschitz: Option<f64>,
    step: f64,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VectorField(n={}, polynomial={})", self.dim, self.polynomial.is_some())
    }
}

impl VectorField {
    pub fn from_fn<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            dim,
            eval: Arc::new(f),
            polynomial: None,
            jacobian: None,
            lipschitz: None,
            step: DEFAULT_RELATIVE_STEP,
        }
    }

    pub fn polynomial_field(components: Vec<Polynomial>) -> Self {
        let dim = components.len();
        let comps = components.clone();
        let grads: Vec<Vec<Polynomial>> = components.iter().map(|p| p.gradient()).collect();
        Self {
            dim,
            eval: Arc::new(move |x| comps.iter().map(|p| p.eval(x)).collect()),
            polynomial: Some(components),
            jacobian: Some(Arc::new(move |x| DMatrix::from_fn(dim, dim, |i, j| grads[i][j].eval(x)))),
            lipschitz: None,
            step: DEFAULT_RELATIVE_STEP,
        }
    }

    pub fn constant(c: &[f64]) -> Self {
        let n = c.len();
        let mut v = Self::polynomial_field(c.iter().map(|&ci| Polynomial::constant(n, ci)).collect());
        v.lipschitz = Some(0.0);
        v
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant(&vec![0.0; dim])
    }

    pub fn with_jacobian<F>(mut self, j: F) -> Self
    where
        F: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(j));
        self
    }

    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz = Some(l);
        self
    }

    pub fn with_step(mut self, h: f64) -> Self {
        self.step = h;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn polynomial(&self) -> Option<&[Polynomial]> {
        self.polynomial.as_deref()
    }

    pub fn known_lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.eval)(x)
    }

    /// Jacobian `∂v^i/∂x^j`, exact when available, central differences
    /// otherwise.
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        if let Some(j) = &self.jacobian {
            return j(x);
        }
        let g = central_gradient(&*self.eval, x, self.step);
        DMatrix::from_fn(self.dim, self.dim, |i, j| g[j][i])
    }

    pub fn scale(&self, s: f64) -> VectorField {
        match &self.polynomial {
            Some(p) => {
                let mut v = VectorField::polynomial_field(p.iter().map(|q| q.scale(s)).collect());
                v.lipschitz = self.lipschitz.map(|l| l * s.abs());
                v
            }
            None => {
                let e = self.eval.clone();
                let mut v = VectorField::from_fn(self.dim, move |x| e(x).into_iter().map(|c| c * s).collect());
                v.step = self.step;
                v.lipschitz = self.lipschitz.map(|l| l * s.abs());
                v
            }
        }
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        if let (Some(a), Some(b)) = (&self.polynomial, &other.polynomial) {
            return VectorField::polynomial_field(a.iter().zip(b).map(|(p, q)| p.add(q)).collect());
        }
        let (a, b) = (self.eval.clone(), other.eval.clone());
        let mut v = VectorField::from_fn(self.dim, move |x| {
            a(x).into_iter().zip(b(x)).map(|(p, q)| p + q).collect()
        });
        v.step = self.step.min(other.step);
        v
    }

    /// Convolution with a mollifier.
    pub fn mollified(&self, m: &Mollifier) -> VectorField {
        let e = self.eval.clone();
        let m = m.clone();
        let mut v = VectorField::from_fn(self.dim, move |x| m.convolve(|y| e(y), x));
        v.step = self.step;
        v
    }
}

/// Grid estimate of a seminorm with the resolution it was computed on.
#[derive(Debug, Clone, PartialEq)]
pub struct GridEstimate {
    pub value: f64,
    pub resolution: Vec<usize>,
    pub samples: usize,
}

/// Settings for the grid seminorm estimators.
#[derive(Debug, Clone)]
pub struct SeminormOptions {
    pub comass: ComassOptions,
    /// Above this many grid points the Lipschitz estimate switches from all
    /// pairs to neighbor pairs plus random pairs.
    pub all_pairs_limit: usize,
    pub random_pairs: usize,
    pub seed: u64,
}

impl Default for SeminormOptions {
    fn default() -> Self {
        Self {
            comass: ComassOptions {
                restarts: 12,
                ..ComassOptions::default()
            },
            all_pairs_limit: 33 * 33,
            random_pairs: 100_000,
            seed: 42,
        }
    }
}

fn comass_at(phi: &FormField, x: &[f64], opts: &ComassOptions) -> f64 {
    phi.eval(x).comass_with(opts).value
}

/// `M_K(φ)`: maximum comass over the grid points.
pub fn seminorm_comass(phi: &FormField, grid: &Grid) -> GridEstimate {
    seminorm_comass_with(phi, grid, &SeminormOptions::default())
}

pub fn seminorm_comass_with(phi: &FormField, grid: &Grid, opts: &SeminormOptions) -> GridEstimate {
    let value = (0..grid.len())
        .into_par_iter()
        .map(|i| comass_at(phi, &grid.point(i), &opts.comass))
        .reduce(|| 0.0, f64::max);
    GridEstimate {
        value,
        resolution: grid.resolution().to_vec(),
        samples: grid.len(),
    }
}

/// `F_K(φ) = max(M_K(φ), M_K(dφ))`; top-degree forms have `dφ = 0`.
pub fn seminorm_flat(phi: &FormField, grid: &Grid) -> Result<GridEstimate> {
    seminorm_flat_with(phi, grid, &SeminormOptions::default())
}

pub fn seminorm_flat_with(phi: &FormField, grid: &Grid, opts: &SeminormOptions) -> Result<GridEstimate> {
    let m = seminorm_comass_with(phi, grid, opts);
    if phi.degree() == phi.dim() {
        return Ok(m);
    }
    let d = seminorm_comass_with(&phi.exterior_derivative()?, grid, opts);
    Ok(GridEstimate {
        value: m.value.max(d.value),
        ..m
    })
}

/// `Lip_{φ,K}` in the comass norm, from grid pairs.
pub fn form_lipschitz(phi: &FormField, grid: &Grid, opts: &SeminormOptions) -> GridEstimate {
    let pts = grid.points();
    let values: Vec<CoVector> = pts.par_iter().map(|x| phi.eval(x)).collect();
    let ratio = |i: usize, j: usize| -> f64 {
        let dist = pts[i]
            .iter()
            .zip(&pts[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if dist == 0.0 {
            return 0.0;
        }
        let diff = values[i].sub(&values[j]).expect("same layout");
        diff.comass_with(&opts.comass).value / dist
    };
    let n = pts.len();
    let (value, samples) = if n <= opts.all_pairs_limit {
        let v = (0..n)
            .into_par_iter()
            .map(|i| ((i + 1)..n).map(|j| ratio(i, j)).fold(0.0, f64::max))
            .reduce(|| 0.0, f64::max);
        (v, n * (n - 1) / 2)
    } else {
        let neighbors = grid.neighbor_pairs();
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let random: Vec<(usize, usize)> = (0..opts.random_pairs)
            .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n)))
            .collect();
        let v = neighbors
            .par_iter()
            .chain(random.par_iter())
            .map(|&(i, j)| ratio(i, j))
            .reduce(|| 0.0, f64::max);
        (v, neighbors.len() + random.len())
    };
    GridEstimate {
        value,
        resolution: grid.resolution().to_vec(),
        samples,
    }
}

/// `S_K(φ) = max(sup comass, (r+1)·Lip_{φ,K})`.
pub fn seminorm_sharp(phi: &FormField, grid: &Grid) -> GridEstimate {
    seminorm_sharp_with(phi, grid, &SeminormOptions::default())
}

pub fn seminorm_sharp_with(phi: &FormField, grid: &Grid, opts: &SeminormOptions) -> GridEstimate {
    let m = seminorm_comass_with(phi, grid, opts);
    let lip = form_lipschitz(phi, grid, opts);
    GridEstimate {
        value: m.value.max((phi.degree() + 1) as f64 * lip.value),
        resolution: m.resolution,
        samples: m.samples + lip.samples,
    }
}

/// Sup norm and Lipschitz constant of a vector field on the grid;
/// `‖v‖_{Lip,K} = max(sup|v|, Lip_{v,K})`.
pub fn vector_lip_norm(v: &VectorField, grid: &Grid) -> f64 {
    let pts = grid.points();
    let vals: Vec<Vec<f64>> = pts.par_iter().map(|x| v.eval(x)).collect();
    let sup = vals
        .iter()
        .map(|u| u.iter().map(|c| c * c).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let n = pts.len();
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    let lip = (0..n)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..n)
                .map(|j| dist(&vals[i], &vals[j]) / dist(&pts[i], &pts[j]))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    sup.max(lip)
}

/// Certified upper bounds of the K-seminorms of a polynomial form,
/// valid for the true suprema over the box (not only the grid).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeminormBounds {
    pub comass: f64,
    pub flat: f64,
    pub lipschitz: f64,
    pub sharp: f64,
}

/// Gradient bound `G` with `|φ(x) − φ(y)|₂ ≤ G |x − y|` on the box.
fn coefficient_lipschitz_bound(comps: &[Polynomial], k: &AxisBox) -> f64 {
    comps
        .iter()
        .map(|p| {
            p.gradient()
                .iter()
                .map(|g| g.abs_bound(k.lower(), k.upper()).powi(2))
                .sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}

fn comass_exact_for(n: usize, r: usize) -> bool {
    r <= 1 || r + 1 >= n
}

/// Upper bound of `sup_K comass(φ)`: the grid maximum is exact for affine
/// forms whose comass is a Euclidean norm (convex, maximized at a corner);
/// otherwise the grid maximum is padded by the covering radius times a
/// gradient bound.
fn comass_upper(phi: &FormField, grid: &Grid, opts: &SeminormOptions) -> Result<f64> {
    let comps = phi.components().ok_or_else(|| {
        Error::InvalidParameter("certified bounds need a polynomial form".into())
    })?;
    let n = phi.dim();
    let r = phi.degree();
    let est = seminorm_comass_with(phi, grid, opts).value;
    let affine = comps.iter().all(|p| p.degree() <= 1);
    if affine && comass_exact_for(n, r) {
        return Ok(est);
    }
    let pad = grid.covering_radius() * coefficient_lipschitz_bound(comps, grid.region());
    if comass_exact_for(n, r) {
        Ok(est + pad)
    } else {
        // the optimizer only gives a lower bound; fall back to the
        // Euclidean coefficient norm, which dominates the comass
        let eu = (0..grid.len())
            .map(|i| phi.eval(&grid.point(i)).norm())
            .fold(0.0, f64::max);
        Ok(eu + pad)
    }
}

/// Certified upper bounds for the comass, flat and sharp seminorms of a
/// polynomial form over the grid's box.
pub fn seminorm_upper_bounds(phi: &FormField, grid: &Grid) -> Result<SeminormBounds> {
    let opts = SeminormOptions::default();
    let comps = phi
        .components()
        .ok_or_else(|| Error::InvalidParameter("certified bounds need a polynomial form".into()))?;
    let comass = comass_upper(phi, grid, &opts)?;
    let dcomass = if phi.degree() < phi.dim() {
        comass_upper(&phi.exterior_derivative()?, grid, &opts)?
    } else {
        0.0
    };
    let affine = comps.iter().all(|p| p.degree() <= 1);
    let lipschitz = if affine && comass_exact_for(phi.dim(), phi.degree()) {
        // constant Jacobian of the coefficient map; spectral norm is exact
        let origin = vec![0.0; phi.dim()];
        let j = DMatrix::from_fn(comps.len(), phi.dim(), |l, i| comps[l].derivative(i).eval(&origin));
        j.singular_values().iter().fold(0.0, |a: f64, &s| a.max(s))
    } else {
        coefficient_lipschitz_bound(comps, grid.region())
    };
    let flat = comass.max(dcomass);
    let sharp = comass.max((phi.degree() + 1) as f64 * lipschitz).max(flat);
    Ok(SeminormBounds {
        comass,
        flat,
        lipschitz,
        sharp,
    })
}

/// Constant of the contraction bound `M_K(φ⌐v) ≤ C·sup|v|·M_K(φ)` for an
/// `(r+1)`-form `φ`: `C(n, r)` components, each a sum of `n − r` products.
pub fn contraction_bound_constant(n: usize, r: usize) -> f64 {
    (binomial(n, r) * (n - r)) as f64
}

/// Constant of the Lie bound `M_K(L_v φ) ≤ C·S_K(φ)·‖v‖_{Lip,K}` for an
/// r-form, assembled from the two terms of the component representation:
/// `1/(r+1)` from `Dφ(v)` and `C(n,r)·r·(n−r+1)` from the `Dv` term.
pub fn lie_bound_constant(n: usize, r: usize) -> f64 {
    1.0 / (r + 1) as f64 + (binomial(n, r) * r * (n + 1 - r)) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn x(n: usize, i: usize) -> Polynomial {
        Polynomial::var(n, i)
    }

    fn c(n: usize, v: f64) -> Polynomial {
        Polynomial::constant(n, v)
    }

    #[test]
    fn box_validation() {
        assert!(AxisBox::new(vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(AxisBox::new(vec![0.0], vec![1.0, 2.0]).is_err());
        let b = AxisBox::unit(2);
        assert!(b.contains(&[0.5, 1.0]));
        assert!(!b.contains(&[0.5, 1.1]));
        assert!(Grid::uniform(b, 1).is_err());
    }

    #[test]
    fn exterior_derivative_examples() {
        // d(x dy) = dx∧dy
        let phi = FormField::monomial_form(2, &[1], x(2, 0)).unwrap();
        let d = phi.exterior_derivative().unwrap();
        assert_eq!(d.components().unwrap()[0], c(2, 1.0));
        // d(constant 0-form) = 0
        let f = FormField::polynomial(2, 0, vec![c(2, 3.0)]).unwrap();
        assert!(f.exterior_derivative().unwrap().components().unwrap().iter().all(|p| p.is_zero()));
        // top degree
        assert!(d.exterior_derivative().is_err());
    }

    #[test]
    fn sampled_derivative_matches_polynomial() {
        let phi = FormField::monomial_form(2, &[1], x(2, 0).mul(&x(2, 0))).unwrap();
        let p2 = phi.clone();
        let s = FormField::sampled(2, 1, 1e-5, move |y| p2.eval_coeffs(y));
        let d = s.exterior_derivative().unwrap();
        assert_abs_diff_eq!(d.eval(&[0.3, 0.1]).coeffs()[0], 0.6, epsilon = 1e-8);
    }

    #[test]
    fn pullback_examples() {
        use crate::lipschitz::AffineMap;
        let dx = FormField::monomial_form(1, &[0], c(1, 1.0)).unwrap();
        let id = AffineMap::identity(1);
        assert_eq!(dx.pullback(&id).unwrap().components().unwrap()[0], c(1, 1.0));
        let dbl = AffineMap::new(DMatrix::from_row_slice(1, 1, &[2.0]), vec![0.0]).unwrap();
        assert_eq!(dx.pullback(&dbl).unwrap().components().unwrap()[0], c(1, 2.0));
        let (s, co) = 0.7f64.sin_cos();
        let rot = AffineMap::new(DMatrix::from_row_slice(2, 2, &[co, -s, s, co]), vec![0.0, 0.0]).unwrap();
        let area = FormField::monomial_form(2, &[0, 1], c(2, 1.0)).unwrap();
        let pulled = area.pullback(&rot).unwrap();
        assert_abs_diff_eq!(pulled.eval(&[0.2, 0.3]).coeffs()[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn pullback_domain_escape() {
        use crate::lipschitz::AffineMap;
        let dx = FormField::monomial_form(1, &[0], c(1, 1.0)).unwrap().with_domain(AxisBox::unit(1));
        let dbl = AffineMap::new(DMatrix::from_row_slice(1, 1, &[2.0]), vec![0.0]).unwrap();
        let grid = Grid::uniform(AxisBox::unit(1), 5).unwrap();
        assert!(matches!(dx.pullback_checked(&dbl, &grid), Err(Error::DomainEscape { .. })));
    }

    #[test]
    fn contraction_examples() {
        let area = FormField::monomial_form(2, &[0, 1], c(2, 1.0)).unwrap();
        let got = area.contract(&VectorField::constant(&[1.0, 0.0])).unwrap();
        assert_eq!(got.components().unwrap(), &[c(2, 0.0), c(2, 1.0)]);
        let zero = area.contract(&VectorField::zero(2)).unwrap();
        assert!(zero.components().unwrap().iter().all(|p| p.is_zero()));
        let f = FormField::polynomial(2, 0, vec![c(2, 1.0)]).unwrap();
        assert_eq!(f.contract(&VectorField::zero(2)).unwrap_err(), Error::DegreeZero);
    }

    #[test]
    fn lie_derivative_examples() {
        // L_{e_x}(x dy) = dy
        let phi = FormField::monomial_form(2, &[1], x(2, 0)).unwrap();
        let l = phi.lie_derivative(&VectorField::constant(&[1.0, 0.0])).unwrap();
        assert_eq!(l.components().unwrap(), &[c(2, 0.0), c(2, 1.0)]);
        // constant form, constant field
        let k = FormField::monomial_form(2, &[0], c(2, 2.0)).unwrap();
        let l = k.lie_derivative(&VectorField::constant(&[1.0, -3.0])).unwrap();
        assert!(l.components().unwrap().iter().all(|p| p.is_zero()));
        let lc = phi.lie_derivative_components(&VectorField::constant(&[1.0, 0.0])).unwrap();
        assert_eq!(lc.components().unwrap(), &[c(2, 0.0), c(2, 1.0)]);
    }

    #[test]
    fn seminorm_examples() {
        let k1 = Grid::uniform(AxisBox::unit(1), 101).unwrap();
        let k2 = Grid::uniform(AxisBox::unit(2), 9).unwrap();
        let cdx = FormField::monomial_form(1, &[0], c(1, -3.0)).unwrap();
        assert_eq!(seminorm_comass(&cdx, &k1).value, 3.0);
        assert_eq!(seminorm_flat(&cdx, &k1).unwrap().value, 3.0);
        assert_eq!(seminorm_sharp(&cdx, &k1).value, 3.0);
        let xdx = FormField::monomial_form(1, &[0], x(1, 0)).unwrap();
        assert_eq!(seminorm_comass(&xdx, &k1).value, 1.0);
        assert_abs_diff_eq!(seminorm_sharp(&xdx, &k1).value, 2.0, epsilon = 1e-12);
        let xdy = FormField::monomial_form(2, &[1], x(2, 0)).unwrap();
        assert_eq!(seminorm_flat(&xdy, &k2).unwrap().value, 1.0);
        let x2dy = FormField::monomial_form(2, &[1], x(2, 0).mul(&x(2, 0))).unwrap();
        assert_eq!(seminorm_flat(&x2dy, &k2).unwrap().value, 2.0);
    }

    #[test]
    fn sine_form_grid_maximum() {
        let k = Grid::uniform(AxisBox::unit(1), 101).unwrap();
        let s = FormField::sampled(1, 1, 1e-5, |y| vec![(std::f64::consts::PI * y[0]).sin()]);
        assert_abs_diff_eq!(seminorm_comass(&s, &k).value, 1.0, epsilon = 1e-3);
    }

    #[test]
    fn certified_bounds_dominate_estimates() {
        let k = Grid::uniform(AxisBox::unit(2), 9).unwrap();
        let phi = FormField::monomial_form(2, &[1], x(2, 0).mul(&x(2, 1)).sub(&x(2, 1).scale(0.3))).unwrap();
        let b = seminorm_upper_bounds(&phi, &k).unwrap();
        let fine = Grid::uniform(AxisBox::unit(2), 65).unwrap();
        assert!(b.comass >= seminorm_comass(&phi, &fine).value);
        assert!(b.flat >= seminorm_flat(&phi, &fine).unwrap().value);
        assert!(b.sharp >= seminorm_sharp(&phi, &k).value);
        // affine forms are exact
        let xdy = FormField::monomial_form(2, &[1], x(2, 0)).unwrap();
        let b = seminorm_upper_bounds(&xdy, &k).unwrap();
        assert_eq!((b.comass, b.flat, b.lipschitz), (1.0, 1.0, 1.0));
    }

    #[test]
    fn lie_constants() {
        assert_eq!(lie_bound_constant(2, 0), 1.0);
        assert_eq!(lie_bound_constant(2, 1), 0.5 + 2.0 * 1.0 * 2.0);
        assert_eq!(contraction_bound_constant(2, 1), 2.0);
    }
}
