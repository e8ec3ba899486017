//! Quadrature rules: Gauss–Legendre on intervals, Gauss–Hermite for
//! Gaussian mollifiers, and Grundmann–Möller rules on simplices.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

/// Nodes and weights of a 1-D rule.
#[derive(Debug, Clone)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn golub_welsch(diag: &[f64], off: &[f64], mu0: f64) -> Rule1d {
    let n = diag.len();
    let mut j = DMatrix::zeros(n, n);
    for i in 0..n {
        j[(i, i)] = diag[i];
        if i + 1 < n {
            j[(i, i + 1)] = off[i];
            j[(i + 1, i)] = off[i];
        }
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], mu0 * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // symmetrize: both families are symmetric about 0
    for k in 0..n / 2 {
        let m = n - 1 - k;
        let x = 0.5 * (pairs[m].0 - pairs[k].0);
        let w = 0.5 * (pairs[m].1 + pairs[k].1);
        pairs[k] = (-x, w);
        pairs[m] = (x, w);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    Rule1d {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// Gauss–Legendre rule with `n` points on `[-1, 1]`, exact to degree `2n−1`.
pub fn gauss_legendre(n: usize) -> Rule1d {
    assert!(n >= 1);
    let off: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        })
        .collect();
    golub_welsch(&vec![0.0; n], &off, 2.0)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Rule1d {
    let r = gauss_legendre(n);
    let h = 0.5 * (b - a);
    let m = 0.5 * (a + b);
    Rule1d {
        nodes: r.nodes.iter().map(|x| m + h * x).collect(),
        weights: r.weights.iter().map(|w| w * h).collect(),
    }
}

/// Gauss–Hermite rule for the standard normal density; weights sum to 1.
pub fn gauss_hermite_normal(n: usize) -> Rule1d {
    assert!(n >= 1);
    let off: Vec<f64> = (1..n).map(|k| (k as f64).sqrt()).collect();
    let mut r = golub_welsch(&vec![0.0; n], &off, 1.0);
    let s: f64 = r.weights.iter().sum();
    r.weights.iter_mut().for_each(|w| *w /= s);
    r
}

/// Composite Gauss–Legendre integral of `f` over `[a, b]`.
pub fn integrate_composite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, points: usize) -> f64 {
    if a == b {
        return 0.0;
    }
    let base = gauss_legendre(points);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + h * p as f64;
        let mid = lo + 0.5 * h;
        for (x, w) in base.nodes.iter().zip(&base.weights) {
            total += 0.5 * h * w * f(mid + 0.5 * h * x);
        }
    }
    total
}

/// Adaptive composite 5-point Gauss integral: a panel is split when its
/// value disagrees with the sum over its halves by more than `tol`.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, max_depth: usize) -> f64 {
    fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rule: &Rule1d) -> f64 {
        let h = 0.5 * (b - a);
        let m = 0.5 * (a + b);
        rule.nodes
            .iter()
            .zip(&rule.weights)
            .map(|(x, w)| h * w * f(m + h * x))
            .sum()
    }
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: usize, rule: &Rule1d) -> f64 {
        let m = 0.5 * (a + b);
        let left = panel(f, a, m, rule);
        let right = panel(f, m, b, rule);
        let gap = (left + right - whole).abs();
        if gap <= tol {
            return left + right;
        }
        if depth == 0 {
            log::warn!("adaptive quadrature on [{a}, {b}] stopped at the depth limit (gap {gap:e} > {tol:e})");
            return left + right;
        }
        rec(f, a, m, left, 0.5 * tol, depth - 1, rule) + rec(f, m, b, right, 0.5 * tol, depth - 1, rule)
    }
    if a == b {
        return 0.0;
    }
    let rule = gauss_legendre(5);
    let whole = panel(f, a, b, &rule);
    rec(f, a, b, whole, tol, max_depth, &rule)
}

/// Quadrature rule on the reference r-simplex in barycentric coordinates.
/// Weights are normalized to sum to 1 (multiply by the simplex volume).
#[derive(Debug, Clone)]
pub struct SimplexRule {
    pub dim: usize,
    pub degree: usize,
    pub barycentric: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |a, i| a * i as f64)
}

fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            let mut v = vec![first];
            v.append(&mut rest);
            out.push(v);
        }
    }
    out
}

/// Grundmann–Möller rule of odd degree `2s+1` on the `dim`-simplex.
pub fn grundmann_moller(dim: usize, s: usize) -> SimplexRule {
    if dim == 0 {
        return SimplexRule {
            dim,
            degree: usize::MAX,
            barycentric: vec![vec![1.0]],
            weights: vec![1.0],
        };
    }
    let d = 2 * s + 1;
    let n = dim;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for i in 0..=s {
        let denom = (d + n - 2 * i) as f64;
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let w = sign * 2f64.powi(-2 * s as i32) * denom.powi(d as i32)
            / (factorial(i) * factorial(d + n - i))
            * factorial(n);
        for beta in compositions(s - i, n + 1) {
            points.push(beta.iter().map(|&b| (2 * b + 1) as f64 / denom).collect());
            weights.push(w);
        }
    }
    SimplexRule {
        dim,
        degree: d,
        barycentric: points,
        weights,
    }
}

/// Cached simplex rule exact to at least `degree`.
pub fn simplex_rule(dim: usize, degree: usize) -> Arc<SimplexRule> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<SimplexRule>>>> = OnceLock::new();
    let s = degree.saturating_sub(1).div_ceil(2);
    let key = (dim, s);
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard
        .entry(key)
        .or_insert_with(|| Arc::new(grundmann_moller(dim, s)))
        .clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Exact integral of a barycentric monomial over the unit-volume
    /// normalized simplex: α! n! / (|α| + n)!.
    fn dirichlet_moment(alpha: &[usize]) -> f64 {
        let n = alpha.len() - 1;
        let total: usize = alpha.iter().sum();
        alpha.iter().map(|&a| factorial(a)).product::<f64>() * factorial(n) / factorial(total + n)
    }

    #[test]
    fn legendre_integrates_polynomials() {
        let r = gauss_legendre(3);
        let s: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(4)).sum();
        assert_abs_diff_eq!(s, 2.0 / 5.0, epsilon = 1e-14);
        let r = gauss_legendre_on(2, 0.0, 1.0);
        let s: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(3)).sum();
        assert_abs_diff_eq!(s, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn hermite_moments() {
        let r = gauss_hermite_normal(5);
        let m2: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x * x).sum();
        let m4: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(4)).sum();
        assert_abs_diff_eq!(r.weights.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m2, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m4, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn grundmann_moller_is_exact_to_its_degree() {
        for dim in 1..=4 {
            let rule = grundmann_moller(dim, 2);
            assert_abs_diff_eq!(rule.weights.iter().sum::<f64>(), 1.0, epsilon = 1e-13);
            for total in 0..=5 {
                for alpha in compositions(total, dim + 1) {
                    let q: f64 = rule
                        .barycentric
                        .iter()
                        .zip(&rule.weights)
                        .map(|(l, w)| w * l.iter().zip(&alpha).map(|(x, &a)| x.powi(a as i32)).product::<f64>())
                        .sum();
                    assert_abs_diff_eq!(q, dirichlet_moment(&alpha), epsilon = 1e-13);
                }
            }
        }
    }

    #[test]
    fn adaptive_integration() {
        let v = integrate_adaptive(&|t: f64| t.sin(), 0.0, std::f64::consts::PI, 1e-12, 20);
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-11);
        assert_eq!(integrate_composite(|t| t, 1.0, 1.0, 4, 5), 0.0);
    }
}
