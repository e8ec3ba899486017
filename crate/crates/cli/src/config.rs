//! Scenario configuration files.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use currentkit::bundled;
use currentkit::complex::SimplicialComplex;
use currentkit::exterior::binomial;
use currentkit::kinematics::{Cochain, Difference, Motion, MotionSpec};
use currentkit::{AxisBox, Chain, FormField, Polynomial};

/// The bundled default suite, used when no `--config` is given.
pub const DEFAULT_SUITE: &str = include_str!("../scenarios/suite.json");

/// Invalid input; reported with exit status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainSource {
    /// Path to a chain JSON file, relative to the configuration file.
    File(PathBuf),
    /// One of the chains shipped with the library.
    Builtin(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub resolution: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionConfig {
    pub interval: [f64; 2],
    pub spec: MotionSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub exponent: Vec<u32>,
    pub coeff: f64,
}

/// Polynomial form coefficients; with `time_dependent` each exponent has a
/// leading entry for the time variable.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CochainSpec {
    pub degree: usize,
    #[serde(default)]
    pub time_dependent: bool,
    pub components: Vec<Vec<Term>>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum DifferenceSpec {
    Central,
    Forward,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub seed: Option<u64>,
    pub chain: ChainSource,
    #[serde(default)]
    pub complex: Option<ComplexSpec>,
    #[serde(default)]
    pub motion: Option<MotionConfig>,
    #[serde(default)]
    pub cochain: Option<CochainSpec>,
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    #[serde(default = "default_levels")]
    pub levels: Vec<usize>,
    /// Finite-difference scheme; defaults to central for smooth motions and
    /// forward otherwise.
    #[serde(default)]
    pub difference: Option<DifferenceSpec>,
    /// Per-check tolerance overrides, keyed by quantity name.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    /// File-name prefix for per-scenario artifacts (defaults to the name).
    #[serde(default)]
    pub output_prefix: Option<String>,
}

fn default_eps() -> Vec<f64> {
    vec![1e-2, 1e-3, 1e-4]
}

fn default_levels() -> Vec<usize> {
    vec![0, 1, 2, 3]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Entry {
    Path(PathBuf),
    Inline(Box<ScenarioConfig>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct Suite {
    scenarios: Vec<Entry>,
}

/// A validated scenario with everything built.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub chain: Chain,
    pub complex: Option<SimplicialComplex>,
    pub motion: Option<Motion>,
    pub cochain: Option<Cochain>,
    pub tau: f64,
    pub eps: Vec<f64>,
    pub levels: Vec<usize>,
    pub difference: Difference,
    pub tolerances: BTreeMap<String, f64>,
    pub output_prefix: String,
}

impl Scenario {
    pub fn tolerance(&self, quantity: &str, default: f64, scale: f64) -> f64 {
        self.tolerances.get(quantity).copied().unwrap_or(default) * scale
    }
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str, origin: &str) -> Result<T, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        bad(format!(
            "{origin}: line {}, column {}: field `{path}`: {inner}",
            inner.line(),
            inner.column()
        ))
    })
}

/// Loads a scenario or a suite (`{"scenarios": [...]}`); suite entries are
/// inline scenarios or paths relative to the suite file.
pub fn load(path: Option<&Path>) -> Result<Vec<Scenario>, ConfigError> {
    let (text, origin, base) = match path {
        Some(p) => (
            std::fs::read_to_string(p).map_err(|e| bad(format!("{}: {e}", p.display())))?,
            p.display().to_string(),
            p.parent().map(Path::to_path_buf).unwrap_or_default(),
        ),
        None => (DEFAULT_SUITE.to_string(), "bundled suite".to_string(), PathBuf::new()),
    };
    load_text(&text, &origin, &base)
}

fn load_text(text: &str, origin: &str, base: &Path) -> Result<Vec<Scenario>, ConfigError> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| bad(format!("{origin}: line {}, column {}: {e}", e.line(), e.column())))?;
    let configs: Vec<(ScenarioConfig, PathBuf)> = if value.get("scenarios").is_some() {
        let suite: Suite = parse(text, origin)?;
        let mut out = Vec::new();
        for entry in suite.scenarios {
            match entry {
                Entry::Inline(c) => out.push((*c, base.to_path_buf())),
                Entry::Path(p) => {
                    let full = base.join(&p);
                    let t = std::fs::read_to_string(&full).map_err(|e| bad(format!("{}: {e}", full.display())))?;
                    let c: ScenarioConfig = parse(&t, &full.display().to_string())?;
                    out.push((c, full.parent().map(Path::to_path_buf).unwrap_or_default()));
                }
            }
        }
        out
    } else {
        vec![(parse(text, origin)?, base.to_path_buf())]
    };
    let mut names = std::collections::BTreeSet::new();
    let mut scenarios = Vec::new();
    for (c, dir) in configs {
        if !names.insert(c.name.clone()) {
            return Err(bad(format!("duplicate scenario name '{}'", c.name)));
        }
        scenarios.push(build(c, &dir)?);
    }
    Ok(scenarios)
}

fn build_polynomial(terms: &[Term], nvars: usize, ctx: &str) -> Result<Polynomial, ConfigError> {
    let mut p = Polynomial::zero(nvars);
    for (k, t) in terms.iter().enumerate() {
        if t.exponent.len() != nvars {
            return Err(bad(format!(
                "{ctx}[{k}].exponent: expected {nvars} entries, found {}",
                t.exponent.len()
            )));
        }
        if !t.coeff.is_finite() {
            return Err(bad(format!("{ctx}[{k}].coeff must be finite")));
        }
        p.add_term(t.exponent.clone(), t.coeff);
    }
    Ok(p)
}

fn build_cochain(spec: &CochainSpec, n: usize, ctx: &str) -> Result<Cochain, ConfigError> {
    let expect = binomial(n, spec.degree);
    if spec.degree > n || spec.components.len() != expect {
        return Err(bad(format!(
            "{ctx}: a {}-form on R^{n} needs {expect} components, found {}",
            spec.degree,
            spec.components.len()
        )));
    }
    let nvars = if spec.time_dependent { n + 1 } else { n };
    let comps = spec
        .components
        .iter()
        .enumerate()
        .map(|(i, terms)| build_polynomial(terms, nvars, &format!("{ctx}.components[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    if spec.time_dependent {
        Cochain::time_polynomial(n, spec.degree, comps).map_err(|e| bad(format!("{ctx}: {e}")))
    } else {
        FormField::polynomial(n, spec.degree, comps)
            .map(Cochain::Static)
            .map_err(|e| bad(format!("{ctx}: {e}")))
    }
}

fn build(c: ScenarioConfig, dir: &Path) -> Result<Scenario, ConfigError> {
    let ctx = format!("scenario '{}'", c.name);
    if c.name.is_empty() || !c.name.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_' || ch == '-') {
        return Err(bad(format!("{ctx}: name must be nonempty and use [A-Za-z0-9_-]")));
    }
    let (chain, bundled_complex) = match &c.chain {
        ChainSource::File(p) => {
            let full = dir.join(p);
            let text = std::fs::read_to_string(&full).map_err(|e| bad(format!("{ctx}: chain file {}: {e}", full.display())))?;
            let chain = Chain::from_json(&text).map_err(|e| bad(format!("{ctx}: chain file {}: {e}", full.display())))?;
            (chain, None)
        }
        ChainSource::Builtin(name) => {
            let b = bundled::chain(name).map_err(|e| bad(format!("{ctx}: {e}")))?;
            (b.chain, Some(b.complex))
        }
    };
    let n = chain.ambient();
    let complex = match &c.complex {
        Some(spec) => {
            if spec.lower.len() != n || spec.upper.len() != n {
                return Err(bad(format!("{ctx}: complex box must have {n} coordinates")));
            }
            if !(1..=64).contains(&spec.resolution) {
                return Err(bad(format!("{ctx}: complex.resolution must lie in 1..=64")));
            }
            let region = AxisBox::new(spec.lower.clone(), spec.upper.clone()).map_err(|e| bad(format!("{ctx}: complex: {e}")))?;
            Some(SimplicialComplex::freudenthal(&region, spec.resolution).map_err(|e| bad(format!("{ctx}: complex: {e}")))?)
        }
        None => bundled_complex,
    };
    if let Some(cx) = &complex {
        cx.chain_coefficients(&chain)
            .map_err(|e| bad(format!("{ctx}: the chain is not supported on the complex: {e}")))?;
    }
    let motion = match &c.motion {
        Some(m) => {
            let motion = Motion::new(m.spec.clone(), (m.interval[0], m.interval[1])).map_err(|e| bad(format!("{ctx}: motion: {e}")))?;
            if motion.dim() != n {
                return Err(bad(format!("{ctx}: motion acts on R^{} but the chain lives in R^{n}", motion.dim())));
            }
            Some(motion)
        }
        None => None,
    };
    let cochain = match &c.cochain {
        Some(spec) => {
            if spec.degree != chain.degree() {
                return Err(bad(format!(
                    "{ctx}: cochain degree {} does not match chain degree {}",
                    spec.degree,
                    chain.degree()
                )));
            }
            Some(build_cochain(spec, n, &format!("{ctx}: cochain"))?)
        }
        None => None,
    };
    if c.eps.is_empty() || c.eps.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
        return Err(bad(format!("{ctx}: eps must be a nonempty list in (0, 1)")));
    }
    if c.eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(bad(format!("{ctx}: eps must be strictly decreasing")));
    }
    if c.levels.is_empty() || c.levels.iter().any(|l| *l > 6) {
        return Err(bad(format!("{ctx}: levels must be a nonempty list with entries ≤ 6")));
    }
    let tau = match (c.tau, &motion) {
        (Some(t), Some(m)) => {
            let (a, b) = m.interval();
            let reach = c.eps[0];
            if t - reach < a || t + reach > b {
                return Err(bad(format!(
                    "{ctx}: tau ± max(eps) = [{}, {}] leaves the motion interval [{a}, {b}]",
                    t - reach,
                    t + reach
                )));
            }
            t
        }
        (Some(t), None) => t,
        (None, Some(m)) => 0.5 * (m.interval().0 + m.interval().1),
        (None, None) => 0.0,
    };
    let smooth = motion.as_ref().map(Motion::is_smooth).unwrap_or(true);
    let difference = match c.difference {
        Some(DifferenceSpec::Central) => Difference::Central,
        Some(DifferenceSpec::Forward) => Difference::Forward,
        None if smooth => Difference::Central,
        None => Difference::Forward,
    };
    for (k, v) in &c.tolerances {
        if !(*v >= 0.0) {
            return Err(bad(format!("{ctx}: tolerances.{k} must be nonnegative")));
        }
    }
    Ok(Scenario {
        output_prefix: c.output_prefix.clone().unwrap_or_else(|| c.name.clone()),
        name: c.name,
        seed: c.seed.unwrap_or(42),
        chain,
        complex,
        motion,
        cochain,
        tau,
        eps: c.eps,
        levels: c.levels,
        difference,
        tolerances: c.tolerances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_loads() {
        let s = load(None).unwrap();
        assert!(s.len() >= 4);
    }

    #[test]
    fn field_errors_name_the_field() {
        let text = r#"{"name": "x", "chain": {"builtin": "segment"}, "eps": "oops"}"#;
        let err = load_text(text, "inline", Path::new("")).unwrap_err();
        assert!(err.0.contains("eps"), "{err}");
        assert!(err.0.contains("line 1"), "{err}");
    }

    #[test]
    fn tau_must_leave_room_for_differences() {
        let text = r#"{"name": "x", "chain": {"builtin": "segment"}, "tau": 0.995,
            "motion": {"interval": [0.0, 1.0], "spec": {"family": "static", "dim": 2}}}"#;
        assert!(load_text(text, "inline", Path::new("")).is_err());
    }
}
