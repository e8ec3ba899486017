//! Unit-mass smoothing kernels, discretized as tensor-product quadrature
//! stencils.

use crate::quadrature::{gauss_hermite_normal, gauss_legendre, integrate_adaptive};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// Gaussian with standard deviation `radius / 3`, sampled by a 5-point
    /// Gauss–Hermite rule per axis (all nodes inside the radius).
    Gaussian,
    /// Compactly supported product bump `exp(−1/(1−(x/ρ)²))` per axis.
    Truncated,
}

#[derive(Debug, Clone)]
pub struct Mollifier {
    radius: f64,
    kind: KernelKind,
    offsets: Vec<f64>,
    weights: Vec<f64>,
}

fn bump(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

fn bump_mass() -> f64 {
    integrate_adaptive(&bump, -1.0, 1.0, 1e-15, 30)
}

impl Mollifier {
    pub fn new(radius: f64, kind: KernelKind) -> Self {
        assert!(radius > 0.0, "mollifier radius must be positive");
        let (offsets, weights) = match kind {
            KernelKind::Gaussian => {
                let r = gauss_hermite_normal(5);
                let sigma = radius / 3.0;
                (r.nodes.iter().map(|x| x * sigma).collect(), r.weights)
            }
            KernelKind::Truncated => {
                let r = gauss_legendre(12);
                let norm = bump_mass();
                let w: Vec<f64> = r
                    .nodes
                    .iter()
                    .zip(&r.weights)
                    .map(|(x, w)| w * bump(*x) / norm)
                    .collect();
                let s: f64 = w.iter().sum();
                (
                    r.nodes.iter().map(|x| x * radius).collect(),
                    w.iter().map(|x| x / s).collect(),
                )
            }
        };
        Self {
            radius,
            kind,
            offsets,
            weights,
        }
    }

    pub fn gaussian(radius: f64) -> Self {
        Self::new(radius, KernelKind::Gaussian)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    /// Integral of the continuous kernel over its support (1-D factor).
    pub fn mass(&self) -> f64 {
        match self.kind {
            KernelKind::Gaussian => {
                let sigma = self.radius / 3.0;
                let density = |x: f64| (-(x * x) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
                integrate_adaptive(&density, -12.0 * sigma, 12.0 * sigma, 1e-15, 30)
            }
            KernelKind::Truncated => {
                let norm = bump_mass();
                let rho = self.radius;
                integrate_adaptive(&|x: f64| bump(x / rho) / (norm * rho), -rho, rho, 1e-15, 30)
            }
        }
    }

    /// Sum of the discrete stencil weights in `dim` dimensions.
    pub fn stencil_mass(&self, dim: usize) -> f64 {
        self.weights.iter().sum::<f64>().powi(dim as i32)
    }

    /// Convolves a vector-valued function with the kernel at `x`.
    pub fn convolve<F: Fn(&[f64]) -> Vec<f64>>(&self, f: F, x: &[f64]) -> Vec<f64> {
        let dim = x.len();
        let k = self.offsets.len();
        let total = k.pow(dim as u32);
        let mut acc: Option<Vec<f64>> = None;
        let mut y = x.to_vec();
        for flat in 0..total {
            let mut rem = flat;
            let mut w = 1.0;
            for (i, yi) in y.iter_mut().enumerate() {
                let j = rem % k;
                rem /= k;
                *yi = x[i] - self.offsets[j];
                w *= self.weights[j];
            }
            let v = f(&y);
            match acc.as_mut() {
                None => acc = Some(v.iter().map(|c| c * w).collect()),
                Some(a) => a.iter_mut().zip(&v).for_each(|(ai, vi)| *ai += w * vi),
            }
        }
        acc.unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kernels_have_unit_mass() {
        for kind in [KernelKind::Gaussian, KernelKind::Truncated] {
            let m = Mollifier::new(0.3, kind);
            assert_abs_diff_eq!(m.mass(), 1.0, epsilon = 1e-10);
            assert_abs_diff_eq!(m.stencil_mass(3), 1.0, epsilon = 1e-13);
            assert!(m.offsets.iter().all(|o| o.abs() <= m.radius()));
        }
    }

    #[test]
    fn affine_functions_are_fixed() {
        let m = Mollifier::gaussian(0.2);
        let f = |x: &[f64]| vec![2.0 * x[0] - x[1] + 1.0];
        let out = m.convolve(f, &[0.3, -0.7]);
        assert_abs_diff_eq!(out[0], 2.0 * 0.3 + 0.7 + 1.0, epsilon = 1e-13);
    }
}
