//! The four subcommands. Each maps a scenario to a list of report rows;
//! numerical failures become `error` rows rather than aborting the run.

use std::path::Path;

use currentkit::chain::Quadrature;
use currentkit::flat::{dual_flat_lower_bound, flat_norm_lp, sharp_lower_bound, test_family};
use currentkit::form::{seminorm_comass, seminorm_sharp};
use currentkit::kinematics::{
    classical_reynolds, continuity_modulus, fd_ladder, homotopy_residual, log_log_slope, observed_orders,
    pullback_derivative_residual, contraction_identity_residual, reynolds_operator, transport_derivative_betounes,
    transport_lagrangian_fd, transport_terms, Cochain, Difference, KinematicOptions, MotionSpec, TimeRule,
};
use currentkit::{AxisBox, Chain, Current, FormField, Grid, Polynomial, VectorField};

use crate::config::Scenario;
use crate::report::Row;

type Computation = std::result::Result<Vec<Row>, currentkit::Error>;

/// Settings shared across scenarios.
#[derive(Debug, Clone, Copy)]
pub struct RunSettings {
    pub seed_override: Option<u64>,
    pub tolerance_scale: f64,
}

struct Ctx<'a> {
    s: &'a Scenario,
    seed: u64,
    scale: f64,
}

impl<'a> Ctx<'a> {
    fn new(s: &'a Scenario, settings: &RunSettings) -> Self {
        Ctx {
            s,
            seed: settings.seed_override.unwrap_or(s.seed),
            scale: settings.tolerance_scale,
        }
    }

    fn name(&self) -> &str {
        &self.s.name
    }

    fn tol(&self, quantity: &str, default: f64) -> f64 {
        self.s.tolerance(quantity, default, self.scale)
    }

    /// Order thresholds are not scaled, but may be overridden.
    fn threshold(&self, quantity: &str, default: f64) -> f64 {
        self.s.tolerances.get(quantity).copied().unwrap_or(default)
    }

    /// The scenario cochain, or a seeded polynomial test form.
    fn cochain(&self) -> Cochain {
        self.s.cochain.clone().unwrap_or_else(|| {
            let t = &self.s.chain;
            Cochain::Static(test_family(t.ambient(), t.degree(), 2, 1, self.seed).pop().expect("nonempty family"))
        })
    }

    fn form(&self) -> FormField {
        self.cochain().form_at(self.s.tau)
    }

    /// Seeded polynomial vector field of degree ≤ 2.
    fn vector_field(&self) -> VectorField {
        let n = self.s.chain.ambient();
        let f = test_family(n, 1, 2, 1, self.seed.wrapping_add(1)).pop().expect("nonempty family");
        VectorField::polynomial_field(f.components().expect("polynomial").to_vec())
    }

    /// Box around the chain (and the support of any motion), for grids.
    fn region(&self) -> AxisBox {
        let base = self.s.chain.bounding_box().unwrap_or_else(|| AxisBox::unit(self.s.chain.ambient()));
        base.dilate(0.25)
    }

    fn guard(&self, quantity: &str, f: impl FnOnce() -> Computation) -> Vec<Row> {
        match f() {
            Ok(rows) => rows,
            Err(e) => vec![Row::error(self.name(), quantity, "", e.to_string())],
        }
    }
}

fn max_coeff_diff(a: &FormField, b: &FormField) -> Option<f64> {
    let (pa, pb) = (a.components()?, b.components()?);
    Some(pa.iter().zip(pb).map(|(p, q)| p.sub(q).max_abs_coeff()).fold(0.0, f64::max))
}

fn sample_points(t: &Chain) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = t.simplices().take(4).map(|(s, _)| s.centroid()).collect();
    if pts.is_empty() {
        pts.push(vec![0.5; t.ambient()]);
    }
    pts
}

/// Least-squares order over the leading entries whose errors sit above the
/// roundoff floor; `None` when fewer than two remain (exact results).
fn usable_order(h: &[f64], err: &[f64], floor: f64) -> Option<f64> {
    let idx: Vec<usize> = (0..err.len()).filter(|&i| err[i] > floor).collect();
    if idx.len() < 2 {
        return None;
    }
    let hs: Vec<f64> = idx.iter().map(|&i| h[i]).collect();
    let es: Vec<f64> = idx.iter().map(|&i| err[i]).collect();
    Some(log_log_slope(&hs, &es))
}

fn expected_order(d: Difference) -> f64 {
    match d {
        Difference::Central => 1.9,
        Difference::Forward => 0.9,
    }
}

fn fd_rows(cx: &Ctx, opts: &KinematicOptions) -> Computation {
    let s = cx.s;
    let m = s.motion.as_ref().expect("motion checked");
    let psi = cx.cochain();
    let (exact, rows) = fd_ladder(m, &s.chain, &psi, s.tau, &s.eps, s.difference, opts)?;
    let mut out = vec![Row::info(cx.name(), "transport_derivative", format!("tau={}", s.tau), exact)];
    for r in &rows {
        out.push(
            Row {
                oracle: Some(exact),
                ..Row::info(cx.name(), "fd", format!("eps={}", r.eps), r.fd)
            }
            .with_order(r.order),
        );
    }
    if matches!(m.spec(), MotionSpec::Static { .. }) && matches!(psi, Cochain::Static(_)) {
        // nothing moves and nothing changes: every derivative is zero
        let tol = cx.tol("static_derivative", 1e-12);
        out.push(Row::compare(cx.name(), "static_derivative", "analytic", exact, 0.0, tol));
        for r in &rows {
            out.push(Row::compare(cx.name(), "static_derivative", format!("fd eps={}", r.eps), r.fd, 0.0, tol));
        }
        return Ok(out);
    }
    let eps: Vec<f64> = rows.iter().map(|r| r.eps).collect();
    let errs: Vec<f64> = rows.iter().map(|r| r.error).collect();
    let exact_tol = cx.tol("fd_exact", 1e-8) * (1.0 + exact.abs());
    // the leading rows carry the truncation error; later rows may reach roundoff
    let lead = errs.len().min(2);
    let roundoff = 1e-12 * (1.0 + exact.abs());
    match usable_order(&eps[..lead], &errs[..lead], roundoff) {
        Some(order) => {
            let scheme = match s.difference {
                Difference::Central => "central",
                Difference::Forward => "forward",
            };
            out.push(Row::at_least(
                cx.name(),
                "fd_order",
                scheme,
                order,
                cx.threshold("fd_order", expected_order(s.difference)),
            ));
        }
        None => {
            let worst = errs.iter().copied().fold(0.0, f64::max);
            out.push(Row::at_most(cx.name(), "fd_exact", "max error", worst, 0.0, exact_tol));
        }
    }
    Ok(out)
}

pub fn verify(s: &Scenario, settings: &RunSettings) -> Vec<Row> {
    let cx = Ctx::new(s, settings);
    let t = &s.chain;
    let (n, r) = (t.ambient(), t.degree());
    let mut rows = Vec::new();
    rows.extend(cx.guard("d_squared", || {
        let phi = cx.form();
        if r + 2 > n {
            return Ok(vec![]);
        }
        let dd = phi.exterior_derivative()?.exterior_derivative()?;
        let v = max_coeff_diff(&dd, &FormField::zero(n, r + 2)).unwrap_or(f64::NAN);
        Ok(vec![Row::compare(cx.name(), "d_squared", "", v, 0.0, cx.tol("d_squared", 1e-12))])
    }));
    rows.extend(cx.guard("cartan", || {
        let phi = cx.form();
        let v = cx.vector_field();
        let a = phi.lie_derivative(&v)?;
        let b = phi.lie_derivative_components(&v)?;
        let diff = max_coeff_diff(&a, &b).unwrap_or(f64::NAN);
        Ok(vec![Row::compare(cx.name(), "cartan", "", diff, 0.0, cx.tol("cartan", 1e-9))])
    }));
    rows.extend(cx.guard("boundary_squared", || {
        if r < 2 {
            return Ok(vec![]);
        }
        let bb = t.boundary()?.boundary()?.simplify();
        Ok(vec![Row::compare(cx.name(), "boundary_squared", "", bb.mass().value, 0.0, cx.tol("boundary_squared", 0.0))])
    }));
    rows.extend(cx.guard("adjointness", || {
        if r == 0 {
            return Ok(vec![]);
        }
        let b = t.boundary()?;
        let mut worst = 0.0f64;
        for phi in test_family(n, r - 1, 2, 3, cx.seed) {
            let lhs = b.evaluate(&phi)?;
            let rhs = t.evaluate(&phi.exterior_derivative()?)?;
            worst = worst.max((lhs - rhs).abs());
        }
        Ok(vec![Row::compare(cx.name(), "adjointness", "", worst, 0.0, cx.tol("adjointness", 1e-8))])
    }));
    rows.extend(cx.guard("reynolds_duality", || {
        let phi = cx.form();
        let v = cx.vector_field();
        let lhs = reynolds_operator(&v, Current::Chain(t.clone()))?.evaluate(&phi)?;
        let rhs = t.evaluate(&phi.lie_derivative_components(&v)?)?;
        let tol = cx.tol("reynolds_duality", 1e-8) * (1.0 + rhs.abs());
        Ok(vec![Row::compare(cx.name(), "reynolds_duality", "", lhs, rhs, tol)])
    }));
    if let Some(m) = &s.motion {
        let opts = KinematicOptions::default();
        let (a, b) = m.interval();
        rows.extend(cx.guard("motion_invariants", || {
            let lower = m.check_invariants(&[a, s.tau, b], 7)?;
            Ok(vec![Row {
                oracle: Some(0.0),
                status: if lower > 0.0 { crate::report::Status::Pass } else { crate::report::Status::Fail },
                ..Row::info(cx.name(), "motion_invariants", "min lower bi-Lipschitz", lower)
            }])
        }));
        rows.extend(cx.guard("homotopy", || {
            if !m.is_smooth() || a >= s.tau {
                return Ok(vec![]);
            }
            let phi = cx.form();
            let res = homotopy_residual(m, a, s.tau, t, &phi, opts)?;
            Ok(vec![Row::compare(cx.name(), "homotopy", format!("[{a}, {}]", s.tau), res, 0.0, cx.tol("homotopy", 1e-6))])
        }));
        rows.extend(cx.guard("transport_pipelines", || {
            let psi = cx.cochain();
            let eulerian = transport_terms(m, t, &psi, s.tau, &opts)?.total();
            let betounes = transport_derivative_betounes(m, t, &psi, s.tau, &opts)?;
            let tol = cx.tol("transport_pipelines", 1e-8) * (1.0 + eulerian.abs());
            Ok(vec![Row::compare(cx.name(), "transport_pipelines", "betounes vs eulerian", betounes, eulerian, tol)])
        }));
        rows.extend(cx.guard("fd_order", || fd_rows(&cx, &opts)));
        rows.extend(cx.guard("pullback_derivative", || {
            if !m.is_smooth() {
                return Ok(vec![]);
            }
            let phi = cx.form();
            let eps = *s.eps.last().expect("nonempty");
            let mut worst = 0.0f64;
            for x in sample_points(t) {
                worst = worst.max(pullback_derivative_residual(m, &phi, s.tau, eps, &x)?);
            }
            Ok(vec![Row::compare(cx.name(), "pullback_derivative", format!("eps={eps}"), worst, 0.0, cx.tol("pullback_derivative", 1e-5))])
        }));
        rows.extend(cx.guard("contraction_identity", || {
            let omega = if r >= 1 { cx.form() } else { cx.form().exterior_derivative()? };
            let mut worst = 0.0f64;
            for x in sample_points(t) {
                worst = worst.max(contraction_identity_residual(m, &omega, s.tau, &x)?);
            }
            Ok(vec![Row::compare(cx.name(), "contraction_identity", "", worst, 0.0, cx.tol("contraction_identity", 1e-10))])
        }));
    }
    if s.complex.is_some() {
        rows.extend(cx.guard("norm_ladder", || norm_ladder(&cx)));
    }
    rows
}

fn norm_ladder(cx: &Ctx) -> Computation {
    let s = cx.s;
    let complex = s.complex.as_ref().expect("complex checked");
    let t = &s.chain;
    let family = test_family(t.ambient(), t.degree(), 2, 8, cx.seed);
    let grid = Grid::uniform(cx.region(), 7)?;
    let cur = Current::Chain(t.clone());
    let sharp = sharp_lower_bound(&cur, &family, &grid)?.value;
    let dual = dual_flat_lower_bound(&cur, &family, &grid)?.value;
    let lp = flat_norm_lp(t, complex)?.value;
    let mass = t.mass().value;
    let slack = cx.tol("norm_ladder", 1e-6);
    Ok(vec![
        Row::at_most(cx.name(), "norm_ladder", "sharp <= dual flat", sharp, dual, slack),
        Row::at_most(cx.name(), "norm_ladder", "dual flat <= LP flat", dual, lp, slack),
        Row::at_most(cx.name(), "norm_ladder", "LP flat <= mass", lp, mass, slack),
    ])
}

/// Static cochains become space-time densities with no time dependence.
fn density(psi: &Cochain) -> Option<Polynomial> {
    match psi {
        Cochain::TimePolynomial { components, .. } => Some(components[0].clone()),
        Cochain::Static(f) => Some(f.components()?[0].prepend_vars(1)),
    }
}

pub fn transport(s: &Scenario, settings: &RunSettings) -> Vec<Row> {
    let cx = Ctx::new(s, settings);
    let m = s.motion.as_ref().expect("motion checked");
    let t = &s.chain;
    let opts = KinematicOptions::default();
    let mut rows = Vec::new();
    rows.extend(cx.guard("transport_terms", || {
        let terms = transport_terms(m, t, &cx.cochain(), s.tau, &opts)?;
        Ok(vec![
            Row::info(cx.name(), "rate_term", "", terms.rate),
            Row::info(cx.name(), "swept_term", "", terms.swept),
            Row::info(cx.name(), "flux_term", "", terms.flux),
        ])
    }));
    rows.extend(cx.guard("fd_order", || fd_rows(&cx, &opts)));
    rows.extend(cx.guard("lagrangian", || {
        let psi = cx.cochain();
        let exact = transport_terms(m, t, &psi, s.tau, &opts)?.total();
        let mut out = Vec::new();
        let mut errs = Vec::new();
        for &e in &s.eps {
            let fd = transport_lagrangian_fd(m, t, &psi, s.tau, e, s.difference, &opts)?;
            errs.push((fd - exact).abs());
            out.push(Row {
                oracle: Some(exact),
                ..Row::info(cx.name(), "lagrangian_fd", format!("eps={e}"), fd)
            });
        }
        for (row, order) in out.iter_mut().zip(observed_orders(&s.eps, &errs)) {
            row.order = order;
        }
        Ok(out)
    }));
    if t.degree() == t.ambient() {
        rows.extend(cx.guard("classical_reynolds", || {
            let Some(rho) = density(&cx.cochain()) else {
                return Ok(vec![]);
            };
            let c = classical_reynolds(m, t, &rho, s.tau, &opts)?;
            let tol = cx.tol("classical_reynolds", 1e-6) * (1.0 + c.lhs.abs());
            Ok(vec![
                Row::info(cx.name(), "reynolds_volume_term", "", c.volume_term),
                Row::info(cx.name(), "reynolds_flux_term", "", c.flux_term),
                Row::compare(cx.name(), "classical_reynolds", "lhs vs volume+flux", c.lhs, c.volume_term + c.flux_term, tol),
            ])
        }));
    }
    rows
}

/// Runs the flat-norm LP; returns the rows and the optimal `(R, S)`.
pub fn flatnorm(s: &Scenario, settings: &RunSettings) -> (Vec<Row>, Option<(Chain, Chain)>) {
    let cx = Ctx::new(s, settings);
    let complex = s.complex.as_ref().expect("complex checked");
    let t = &s.chain;
    let mut decomposition = None;
    let mut rows = cx.guard("flat_norm", || {
        let f = flat_norm_lp(t, complex)?;
        let residual = t.sub(&f.r)?.sub(&f.s.boundary()?)?.simplify().mass().value;
        let mass = t.mass().value;
        let tol = cx.tol("decomposition", 1e-9) * (1.0 + mass);
        let out = vec![
            Row::info(cx.name(), "flat_norm", "LP", f.value),
            Row::compare(cx.name(), "flat_norm_split", "M(R) + M(S)", f.mass_r + f.mass_s, f.value, cx.tol("flat_norm_split", 1e-9)),
            Row::info(cx.name(), "mass_r", "", f.mass_r),
            Row::info(cx.name(), "mass_s", "", f.mass_s),
            Row::info(cx.name(), "mass_t", "", mass),
            Row::compare(cx.name(), "decomposition", "M(T - R - dS)", residual, 0.0, tol),
            Row::at_most(cx.name(), "flat_below_mass", "", f.value, mass, cx.tol("flat_below_mass", 1e-9)),
            Row::info(cx.name(), "lp_iterations", "", f.iterations as f64),
        ];
        decomposition = Some((f.r, f.s));
        Ok(out)
    });
    rows.extend(cx.guard("norm_ladder", || norm_ladder(&cx)));
    (rows, decomposition)
}

pub fn converge(s: &Scenario, settings: &RunSettings) -> Vec<Row> {
    let cx = Ctx::new(s, settings);
    let t = &s.chain;
    let (n, r) = (t.ambient(), t.degree());
    let mut rows = Vec::new();
    rows.extend(cx.guard("adjointness_refinement", || {
        if r == 0 {
            return Ok(vec![]);
        }
        // cubic test forms are not integrated exactly by the centroid rule,
        // so the residual measures the quadrature error under subdivision
        let phi = test_family(n, r - 1, 3, 1, cx.seed).pop().expect("nonempty");
        let dphi = phi.exterior_derivative()?;
        let b = t.boundary()?;
        let mut h = Vec::new();
        let mut res = Vec::new();
        let mut out = Vec::new();
        for &l in &s.levels {
            let q = Quadrature::with_degree(1).with_levels(l);
            let v = (b.evaluate_with(&phi, &q)?.value - t.evaluate_with(&dphi, &q)?.value).abs();
            h.push(0.5f64.powi(l as i32));
            res.push(v);
            out.push(Row::info(cx.name(), "adjointness_residual", format!("levels={l}"), v));
        }
        for (row, o) in out.iter_mut().zip(observed_orders(&h, &res)) {
            row.order = o;
        }
        let floor = cx.tol("adjointness_exact", 1e-12);
        match usable_order(&h, &res, floor) {
            Some(o) => out.push(Row::at_least(cx.name(), "adjointness_order", "centroid rule", o, cx.threshold("adjointness_order", 1.9))),
            None => out.push(Row::at_most(cx.name(), "adjointness_exact", "", res.iter().copied().fold(0.0, f64::max), 0.0, floor)),
        }
        Ok(out)
    }));
    rows.extend(cx.guard("seminorm_grids", || {
        let phi = cx.form();
        let mut out = Vec::new();
        let (mut prev_c, mut prev_s) = (0.0f64, 0.0f64);
        let mut monotone = true;
        for m in [2usize, 4, 8] {
            let grid = Grid::uniform(cx.region(), m + 1)?;
            let c = seminorm_comass(&phi, &grid).value;
            let sh = seminorm_sharp(&phi, &grid).value;
            monotone &= c >= prev_c - 1e-12 && sh >= prev_s - 1e-12;
            prev_c = c;
            prev_s = sh;
            out.push(Row::info(cx.name(), "comass_estimate", format!("grid={}", m + 1), c));
            out.push(Row::info(cx.name(), "sharp_estimate", format!("grid={}", m + 1), sh));
        }
        out.push(Row {
            status: if monotone { crate::report::Status::Pass } else { crate::report::Status::Fail },
            ..Row::info(cx.name(), "seminorm_monotone", "nested grids", if monotone { 1.0 } else { 0.0 })
        });
        Ok(out)
    }));
    if let Some(m) = &s.motion {
        let opts = KinematicOptions::default();
        let (a, _) = m.interval();
        rows.extend(cx.guard("continuity_modulus", || {
            let family = test_family(n, r, 2, 6, cx.seed);
            let grid = Grid::uniform(cx.region().dilate(0.5), 9)?;
            let modulus = continuity_modulus(m, t, s.tau, &s.eps, &family, &grid, &opts)?;
            let mut out: Vec<Row> = s
                .eps
                .iter()
                .zip(&modulus)
                .map(|(e, v)| Row::info(cx.name(), "continuity_modulus", format!("eps={e}"), *v))
                .collect();
            let floor = cx.tol("continuity_exact", 1e-12);
            if modulus.iter().all(|v| *v <= floor) {
                out.push(Row::at_most(cx.name(), "continuity_exact", "", modulus[0], 0.0, floor));
            } else if m.is_smooth() && modulus.iter().all(|v| *v > 0.0) && modulus.len() >= 2 {
                let slope = log_log_slope(&s.eps, &modulus);
                let lo = cx.threshold("continuity_slope", 0.9);
                out.push(Row {
                    status: if (lo..=2.0 - lo).contains(&slope) { crate::report::Status::Pass } else { crate::report::Status::Fail },
                    oracle: Some(1.0),
                    tolerance: Some(1.0 - lo),
                    order: Some(slope),
                    ..Row::info(cx.name(), "continuity_slope", "log-log", slope)
                });
            } else {
                let decays = modulus.windows(2).all(|w| w[1] <= w[0]);
                out.push(Row {
                    status: if decays { crate::report::Status::Pass } else { crate::report::Status::Fail },
                    ..Row::info(cx.name(), "continuity_decay", "monotone", *modulus.last().expect("nonempty"))
                });
            }
            Ok(out)
        }));
        rows.extend(cx.guard("homotopy_panels", || {
            if !m.is_smooth() || a >= s.tau {
                return Ok(vec![]);
            }
            let phi = cx.form();
            let panels = [1usize, 2, 4, 8];
            let mut errs = Vec::new();
            let mut out = Vec::new();
            for &p in &panels {
                let o = KinematicOptions {
                    time_rule: TimeRule::Composite { panels: p, points: 2 },
                    quadrature: Quadrature::with_degree(11),
                    ..KinematicOptions::default()
                };
                let e = homotopy_residual(m, a, s.tau, t, &phi, o)?;
                errs.push(e);
                out.push(Row::info(cx.name(), "homotopy_residual", format!("panels={p}"), e));
            }
            let h: Vec<f64> = panels.iter().map(|p| 1.0 / *p as f64).collect();
            for (row, o) in out.iter_mut().zip(observed_orders(&h, &errs)) {
                row.order = o;
            }
            let floor = cx.tol("homotopy_exact", 1e-12);
            match usable_order(&h, &errs, floor) {
                Some(o) => out.push(Row::at_least(cx.name(), "homotopy_order", "2-point Gauss", o, cx.threshold("homotopy_order", 2.0))),
                None => out.push(Row::at_most(cx.name(), "homotopy_exact", "", errs.iter().copied().fold(0.0, f64::max), 0.0, floor)),
            }
            Ok(out)
        }));
        rows.extend(cx.guard("fd_order", || fd_rows(&cx, &opts)));
    }
    rows
}

/// Writes `<prefix>_R.json` and `<prefix>_S.json`.
pub fn write_decomposition(dir: &Path, prefix: &str, r: &Chain, s: &Chain) -> anyhow::Result<()> {
    std::fs::write(dir.join(format!("{prefix}_R.json")), r.to_json())?;
    std::fs::write(dir.join(format!("{prefix}_S.json")), s.to_json())?;
    Ok(())
}
