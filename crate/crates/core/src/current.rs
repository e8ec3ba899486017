//! Currents as expression trees over simplicial chains, evaluated against
//! forms.

use std::sync::Arc;

use crate::chain::{Chain, Quadrature};
use crate::error::{Error, Result};
use crate::exterior::{basis, binomial, contract_coeffs, rank_of};
use crate::form::{FormField, VectorField};
use crate::kinematics::DeformationChain;
use crate::lipschitz::{pushforward_chain, LipMap};
use crate::quadrature::gauss_legendre_on;

#[derive(Debug, Clone)]
pub enum Current {
    Chain(Chain),
    /// `∂T`, evaluated as `T(dφ)`.
    Boundary(Box<Current>),
    /// `v ∧ T`, evaluated as `T(φ ⌐ v)`.
    VWedge(VectorField, Box<Current>),
    /// Vertex-mapped image of a chain after `levels` subdivisions.
    Pushforward {
        map: Arc<dyn LipMap>,
        chain: Chain,
        levels: usize,
    },
    /// Swept chain of a motion over a time interval.
    Deformation(Arc<DeformationChain>),
    Sum(Vec<Current>),
    Scale(f64, Box<Current>),
}

impl From<Chain> for Current {
    fn from(c: Chain) -> Self {
        Current::Chain(c)
    }
}

impl Current {
    pub fn boundary(self) -> Result<Current> {
        if self.degree() == 0 {
            return Err(Error::DegreeZero);
        }
        Ok(Current::Boundary(Box::new(self)))
    }

    pub fn scaled(self, s: f64) -> Current {
        Current::Scale(s, Box::new(self))
    }

    pub fn plus(self, other: Current) -> Result<Current> {
        if self.degree() != other.degree() {
            return Err(Error::DegreeMismatch {
                expected: self.degree(),
                found: other.degree(),
            });
        }
        Ok(Current::Sum(vec![self, other]))
    }

    pub fn minus(self, other: Current) -> Result<Current> {
        self.plus(other.scaled(-1.0))
    }

    pub fn degree(&self) -> usize {
        match self {
            Current::Chain(c) => c.degree(),
            Current::Boundary(t) => t.degree().saturating_sub(1),
            Current::VWedge(_, t) => t.degree() + 1,
            Current::Pushforward { chain, .. } => chain.degree(),
            Current::Deformation(d) => d.degree(),
            Current::Sum(ts) => ts.first().map(Current::degree).unwrap_or(0),
            Current::Scale(_, t) => t.degree(),
        }
    }

    pub fn ambient(&self) -> usize {
        match self {
            Current::Chain(c) => c.ambient(),
            Current::Boundary(t) | Current::VWedge(_, t) | Current::Scale(_, t) => t.ambient(),
            Current::Pushforward { map, .. } => map.target_dim(),
            Current::Deformation(d) => d.ambient(),
            Current::Sum(ts) => ts.first().map(Current::ambient).unwrap_or(0),
        }
    }

    pub fn evaluate(&self, phi: &FormField) -> Result<f64> {
        self.evaluate_with(phi, &Quadrature::default())
    }

    pub fn evaluate_with(&self, phi: &FormField, q: &Quadrature) -> Result<f64> {
        if phi.degree() != self.degree() {
            return Err(Error::DegreeMismatch {
                expected: self.degree(),
                found: phi.degree(),
            });
        }
        match self {
            Current::Chain(c) => Ok(c.evaluate_with(phi, q)?.value),
            Current::Boundary(t) => t.evaluate_with(&phi.exterior_derivative()?, q),
            Current::VWedge(v, t) => t.evaluate_with(&phi.contract(v)?, q),
            Current::Pushforward { map, chain, levels } => {
                Ok(pushforward_chain(&**map, chain, *levels)?.evaluate_with(phi, q)?.value)
            }
            Current::Deformation(d) => d.evaluate_with(phi, q),
            Current::Sum(ts) => ts.iter().map(|t| t.evaluate_with(phi, q)).sum(),
            Current::Scale(s, t) => Ok(s * t.evaluate_with(phi, q)?),
        }
    }
}

/// `v ∧ T`; the result is only available as a functional.
pub fn v_wedge(v: &VectorField, t: Current) -> Result<Current> {
    if t.degree() + 1 > t.ambient() {
        return Err(Error::DegreeOverflow {
            degree: t.degree() + 1,
            ambient: t.ambient(),
        });
    }
    if v.dim() != t.ambient() {
        return Err(Error::DimensionMismatch {
            expected: t.ambient(),
            found: v.dim(),
        });
    }
    Ok(Current::VWedge(v.clone(), Box::new(t)))
}

/// Spatial form `x ↦ ω(t, x) ⌐ e_t` restricted to ℝⁿ, for an
/// `(r+1)`-form on ℝ×ℝⁿ with time as coordinate 0.
pub fn time_slice_contracted(omega: &FormField, t: f64) -> FormField {
    let big = omega.dim();
    let n = big - 1;
    let r = omega.degree() - 1;
    let omega = omega.clone();
    let spatial: Vec<usize> = basis(big, r)
        .iter()
        .filter(|idx| idx.first() != Some(&0))
        .map(|idx| rank_of(big, idx).expect("valid"))
        .collect();
    debug_assert_eq!(spatial.len(), binomial(n, r));
    let mut e_t = vec![0.0; big];
    e_t[0] = 1.0;
    FormField::sampled(n, r, 1e-5, move |x| {
        let mut y = Vec::with_capacity(big);
        y.push(t);
        y.extend_from_slice(x);
        let c = contract_coeffs(big, r + 1, &omega.eval_coeffs(&y), &e_t);
        spatial.iter().map(|&i| c[i]).collect()
    })
}

/// `([a,b] × T)(ω) = ∫_a^b T(ω(t,·) ⌐ e_t) dt` by composite Gauss–Legendre
/// quadrature in `t` (`panels` panels of `points` nodes).
pub fn interval_product_evaluate(
    a: f64,
    b: f64,
    t: &Chain,
    omega: &FormField,
    panels: usize,
    points: usize,
) -> Result<f64> {
    if omega.dim() != t.ambient() + 1 {
        return Err(Error::DimensionMismatch {
            expected: t.ambient() + 1,
            found: omega.dim(),
        });
    }
    if omega.degree() != t.degree() + 1 {
        return Err(Error::DegreeMismatch {
            expected: t.degree() + 1,
            found: omega.degree(),
        });
    }
    if a == b {
        return Ok(0.0);
    }
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + h * p as f64;
        let rule = gauss_legendre_on(points, lo, lo + h);
        for (tau, w) in rule.nodes.iter().zip(&rule.weights) {
            total += w * t.evaluate(&time_slice_contracted(omega, *tau))?;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polynomial::Polynomial;
    use approx::assert_abs_diff_eq;

    fn seg_x() -> Chain {
        Chain::segment(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap()
    }

    #[test]
    fn interval_product_examples() {
        let seg = Chain::segment(vec![0.0], vec![1.0]).unwrap();
        let dtdx = FormField::monomial_form(2, &[0, 1], Polynomial::constant(2, 1.0)).unwrap();
        assert_abs_diff_eq!(interval_product_evaluate(0.0, 1.0, &seg, &dtdx, 1, 3).unwrap(), 1.0, epsilon = 1e-14);
        let tdtdx = FormField::monomial_form(2, &[0, 1], Polynomial::var(2, 0)).unwrap();
        assert_abs_diff_eq!(interval_product_evaluate(0.0, 1.0, &seg, &tdtdx, 1, 3).unwrap(), 0.5, epsilon = 1e-14);
        let seg2 = seg_x();
        let dxdy = FormField::monomial_form(3, &[1, 2], Polynomial::constant(3, 1.0)).unwrap();
        assert_eq!(interval_product_evaluate(0.0, 1.0, &seg2, &dxdy, 1, 3).unwrap(), 0.0);
        assert_eq!(interval_product_evaluate(0.5, 0.5, &seg, &dtdx, 1, 3).unwrap(), 0.0);
    }

    #[test]
    fn v_wedge_examples() {
        let area = FormField::monomial_form(2, &[0, 1], Polynomial::constant(2, 1.0)).unwrap();
        let t = v_wedge(&VectorField::constant(&[0.0, 1.0]), seg_x().into()).unwrap();
        assert_eq!(t.degree(), 2);
        assert_abs_diff_eq!(t.evaluate(&area).unwrap(), -1.0, epsilon = 1e-15);
        let z = v_wedge(&VectorField::zero(2), seg_x().into()).unwrap();
        assert_eq!(z.evaluate(&area).unwrap(), 0.0);
        let sq: Current = Chain::unit_square().into();
        assert!(v_wedge(&VectorField::zero(2), sq).is_err());
    }

    #[test]
    fn boundary_degree_bookkeeping() {
        let sq: Current = Chain::unit_square().into();
        let b = sq.boundary().unwrap();
        assert_eq!(b.degree(), 1);
        let pt: Current = Chain::point(vec![0.0], 1.0).into();
        assert_eq!(pt.boundary().unwrap_err(), Error::DegreeZero);
    }
}
