//! Flat norm of simplicial chains by linear programming, and certified
//! lower bounds of the flat and sharp norms of currents by duality.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chain::Chain;
use crate::complex::SimplicialComplex;
use crate::current::Current;
use crate::error::{Error, Result};
use crate::exterior::{basis, binomial};
use crate::form::{seminorm_upper_bounds, AxisBox, FormField, Grid};
use crate::lp::{LpProblem, LpSolution, LpStatus, Sense, SolverOptions};
use crate::polynomial::Polynomial;

/// Optimal decomposition `T = R + ∂S` with `F(T) = M(R) + M(S)`.
#[derive(Debug, Clone)]
pub struct FlatNorm {
    pub value: f64,
    pub mass_r: f64,
    pub mass_s: f64,
    pub r: Chain,
    pub s: Chain,
    pub iterations: usize,
}

/// Assembles the flat-norm LP. Variables are `[s⁺, s⁻, p, q]` with
/// `s = s⁺ − s⁻` on the (r+1)-simplices and `R = p − q` on the r-faces;
/// the rows impose `p − q + B(s⁺ − s⁻) = t`.
pub fn flat_norm_problem(t: &Chain, complex: &SimplicialComplex) -> Result<(LpProblem, Vec<f64>)> {
    let r = t.degree();
    let coeffs = complex.chain_coefficients(t)?;
    let faces = complex.simplices(r).len();
    let cofaces = complex.simplices(r + 1).len();
    let vol_r = complex.volumes(r);
    let vol_s = complex.volumes(r + 1);
    let nvar = 2 * cofaces + 2 * faces;
    let mut p = LpProblem::new(nvar);
    let mut names = Vec::with_capacity(nvar);
    for j in 0..cofaces {
        p.cost[j] = vol_s[j];
        p.cost[cofaces + j] = vol_s[j];
    }
    for i in 0..faces {
        p.cost[2 * cofaces + i] = vol_r[i];
        p.cost[2 * cofaces + faces + i] = vol_r[i];
    }
    for prefix in ["sp", "sm"] {
        names.extend((0..cofaces).map(|j| format!("{prefix}{j}")));
    }
    for prefix in ["rp", "rm"] {
        names.extend((0..faces).map(|i| format!("{prefix}{i}")));
    }
    p.names = Some(names);
    let mut rows: Vec<Vec<(usize, f64)>> = (0..faces)
        .map(|i| vec![(2 * cofaces + i, 1.0), (2 * cofaces + faces + i, -1.0)])
        .collect();
    if r < complex.dim() {
        for (j, col) in complex.incidence_columns(r).into_iter().enumerate() {
            for (i, sign) in col {
                rows[i].push((j, sign));
                rows[i].push((cofaces + j, -sign));
            }
        }
    }
    for (i, row) in rows.into_iter().enumerate() {
        p.add_constraint(row, Sense::Eq, coeffs[i]);
    }
    Ok((p, coeffs))
}

/// Simplicial flat norm of `t` over `complex`.
pub fn flat_norm_lp(t: &Chain, complex: &SimplicialComplex) -> Result<FlatNorm> {
    flat_norm_lp_with(t, complex, &SolverOptions::default())
}

pub fn flat_norm_lp_with(t: &Chain, complex: &SimplicialComplex, opts: &SolverOptions) -> Result<FlatNorm> {
    let r = t.degree();
    let (problem, _) = flat_norm_problem(t, complex)?;
    let sol: LpSolution = problem.solve_with(opts)?;
    log::debug!("flat norm LP: {:?} after {} pivots", sol.status, sol.iterations);
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::Infeasible),
        LpStatus::Unbounded => return Err(Error::Unbounded),
        other => return Err(Error::Solver(format!("{other:?} (residual {:e})", sol.residual))),
    }
    let cofaces = complex.simplices(r + 1).len();
    let faces = complex.simplices(r).len();
    let clean = |x: f64| if x.abs() < 1e-12 { 0.0 } else { x };
    let s: Vec<f64> = (0..cofaces).map(|j| clean(sol.x[j] - sol.x[cofaces + j])).collect();
    let rr: Vec<f64> = (0..faces)
        .map(|i| clean(sol.x[2 * cofaces + i] - sol.x[2 * cofaces + faces + i]))
        .collect();
    let vol_r = complex.volumes(r);
    let vol_s = complex.volumes(r + 1);
    let mass_r: f64 = rr.iter().zip(&vol_r).map(|(c, v)| c.abs() * v).sum();
    let mass_s: f64 = s.iter().zip(&vol_s).map(|(c, v)| c.abs() * v).sum();
    let s_chain = if r < complex.dim() {
        complex.chain_from_coefficients(r + 1, &s)
    } else {
        Chain::zero(t.ambient(), r + 1)
    };
    Ok(FlatNorm {
        value: sol.objective,
        mass_r,
        mass_s,
        r: complex.chain_from_coefficients(r, &rr),
        s: s_chain,
        iterations: sol.iterations,
    })
}

/// Brute-force flat norm with `s` restricted to `{−1, 0, 1}` per
/// (r+1)-simplex. Only for tiny complexes; an upper bound of the LP value,
/// equal to it when an integral optimum exists.
pub fn flat_norm_exhaustive(t: &Chain, complex: &SimplicialComplex) -> Result<f64> {
    let r = t.degree();
    let tc = complex.chain_coefficients(t)?;
    let cofaces = complex.simplices(r + 1).len();
    if cofaces > 12 {
        return Err(Error::InvalidParameter("exhaustive search limited to 12 simplices".into()));
    }
    let cols = complex.incidence_columns(r);
    let vol_r = complex.volumes(r);
    let vol_s = complex.volumes(r + 1);
    let mut best = f64::INFINITY;
    let total = 3usize.pow(cofaces as u32);
    let mut s = vec![0i32; cofaces];
    for code in 0..total {
        let mut rem = code;
        for sj in s.iter_mut() {
            *sj = (rem % 3) as i32 - 1;
            rem /= 3;
        }
        let mut resid = tc.clone();
        let mut cost = 0.0;
        for (j, &sj) in s.iter().enumerate() {
            if sj != 0 {
                cost += vol_s[j];
                for &(i, sign) in &cols[j] {
                    resid[i] -= sign * sj as f64;
                }
            }
        }
        cost += resid.iter().zip(&vol_r).map(|(c, v)| c.abs() * v).sum::<f64>();
        best = best.min(cost);
    }
    Ok(best)
}

/// Best ratio over a test family and the member attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualBound {
    pub value: f64,
    pub best: Option<usize>,
    /// True when every denominator was a certified upper bound (polynomial
    /// forms); sampled forms fall back to grid estimates.
    pub certified: bool,
}

fn dual_bound<F>(t: &Current, family: &[FormField], denom: F) -> Result<DualBound>
where
    F: Fn(&FormField) -> Result<(f64, bool)>,
{
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let mut out = DualBound {
        value: 0.0,
        best: None,
        certified: true,
    };
    for (k, phi) in family.iter().enumerate() {
        let (d, certified) = denom(phi)?;
        out.certified &= certified;
        if !(d > 0.0) {
            continue;
        }
        let v = t.evaluate(phi)?.abs() / d;
        if v > out.value {
            out.value = v;
            out.best = Some(k);
        }
    }
    Ok(out)
}

fn certified_or_estimated(phi: &FormField, grid: &Grid, sharp: bool) -> Result<(f64, bool)> {
    if phi.is_polynomial() {
        let b = seminorm_upper_bounds(phi, grid)?;
        Ok((if sharp { b.sharp } else { b.flat }, true))
    } else if sharp {
        let s = crate::form::seminorm_sharp(phi, grid).value;
        let f = crate::form::seminorm_flat(phi, grid)?.value;
        Ok((s.max(f), false))
    } else {
        Ok((crate::form::seminorm_flat(phi, grid)?.value, false))
    }
}

/// `max_φ |T(φ)| / F_K(φ)` with certified upper bounds of `F_K(φ)`, hence
/// a lower bound of the K-flat norm of `T`.
pub fn dual_flat_lower_bound(t: &Current, family: &[FormField], grid: &Grid) -> Result<DualBound> {
    dual_bound(t, family, |phi| certified_or_estimated(phi, grid, false))
}

/// `max_φ |T(φ)| / S_K(φ)`; the denominator dominates the flat one, so
/// this never exceeds [`dual_flat_lower_bound`] on the same family.
pub fn sharp_lower_bound(t: &Current, family: &[FormField], grid: &Grid) -> Result<DualBound> {
    dual_bound(t, family, |phi| certified_or_estimated(phi, grid, true))
}

/// Test forms of degree `r` on ℝⁿ: the constant basis forms, coordinate
/// monomial multiples up to `max_degree`, and `random` random polynomial
/// forms with coefficients in `[−1, 1]`.
pub fn test_family(n: usize, r: usize, max_degree: u32, random: usize, seed: u64) -> Vec<FormField> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nb = binomial(n, r);
    for idx in basis(n, r) {
        out.push(FormField::monomial_form(n, idx, Polynomial::constant(n, 1.0)).expect("valid basis"));
        for d in 1..=max_degree {
            for i in 0..n {
                let mut e = vec![0u32; n];
                e[i] = d;
                out.push(FormField::monomial_form(n, idx, Polynomial::monomial(e, 1.0)).expect("valid basis"));
            }
        }
    }
    for _ in 0..random {
        let comps = (0..nb).map(|_| random_polynomial(n, max_degree, &mut rng)).collect();
        out.push(FormField::polynomial(n, r, comps).expect("consistent layout"));
    }
    out
}

/// Random dense polynomial of total degree ≤ `deg` with coefficients in
/// `[−1, 1]`.
pub fn random_polynomial<R: Rng>(n: usize, deg: u32, rng: &mut R) -> Polynomial {
    let mut p = Polynomial::zero(n);
    let mut e = vec![0u32; n];
    fn rec<R: Rng>(p: &mut Polynomial, e: &mut Vec<u32>, i: usize, left: u32, rng: &mut R) {
        if i == e.len() {
            p.add_term(e.clone(), rng.gen_range(-1.0..1.0));
            return;
        }
        for k in 0..=left {
            e[i] = k;
            rec(p, e, i + 1, left - k, rng);
        }
        e[i] = 0;
    }
    rec(&mut p, &mut e, 0, deg, rng);
    p
}

/// Default grid on the bounding box of a chain for the dual estimators.
pub fn default_grid(t: &Chain, m: usize) -> Result<Grid> {
    let bb = t
        .bounding_box()
        .unwrap_or_else(|| AxisBox::unit(t.ambient()));
    Grid::uniform(bb, m)
}
