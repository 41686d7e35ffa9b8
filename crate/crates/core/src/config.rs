//! TOML description of a hybrid system with its propositions, certificates
//! and sampler, and the conversion into runtime objects.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cert::{CertError, Role, Sampler, ScalarCertificate};
use crate::expr::{parse_expression, BindError, Env, Expr, ExprType, ParseError};
use crate::hybrid::{
    HybridSystem, PropositionSet, ScalarField, StateMap, StatePredicate, StateSet, SystemError,
};
use crate::sim::SimOptions;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("invalid config: {0}")]
    Toml(String),
    #[error("{context}: {error}")]
    Parse { context: String, error: ParseError },
    #[error("{context}: {error}")]
    Bind { context: String, error: BindError },
    #[error("{context}: expected a {expected} expression")]
    Type { context: String, expected: &'static str },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Cert(#[from] CertError),
}

/// A set as a boolean expression, optionally with a margin expression that
/// is `<= 0` exactly on the set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SetSpec {
    Plain(String),
    WithMargin {
        expr: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        margin: Option<String>,
    },
}

impl SetSpec {
    pub fn expr(&self) -> &str {
        match self {
            SetSpec::Plain(e) | SetSpec::WithMargin { expr: e, .. } => e,
        }
    }

    pub fn margin(&self) -> Option<&str> {
        match self {
            SetSpec::Plain(_) => None,
            SetSpec::WithMargin { margin, .. } => margin.as_deref(),
        }
    }
}

/// A number, or an expression over constants such as `"2^0.75"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamSpec {
    Num(f64),
    Expr(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateConfig {
    pub expr: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient: Option<Vec<String>>,
    pub role: Role,
    #[serde(default)]
    pub nonsmooth: bool,
    /// Proposition defining the target set K (Q for until).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prop: Option<String>,
    /// Proposition that must hold until the target is reached.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hold_prop: Option<String>,
    /// Barrier certificate paired with this one for `eventually always`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub barrier: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neighborhood: Option<SetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<ParamSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<ParamSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2: Option<ParamSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c3: Option<ParamSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<ParamSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<Sampler>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub dim: usize,
    #[serde(default)]
    pub constants: BTreeMap<String, ParamSpec>,
    pub flow_set: SetSpec,
    pub jump_set: SetSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_space: Option<SetSpec>,
    #[serde(default)]
    pub flow_selections: Vec<Vec<String>>,
    #[serde(default)]
    pub jump_selections: Vec<Vec<String>>,
    #[serde(default)]
    pub propositions: BTreeMap<String, SetSpec>,
    #[serde(default)]
    pub certificates: BTreeMap<String, CertificateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<Sampler>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimOptions>,
}

/// A certificate ready for the checkers.
#[derive(Debug, Clone)]
pub struct LoadedCertificate {
    pub cert: ScalarCertificate,
    pub prop: Option<String>,
    pub hold_prop: Option<String>,
    pub barrier: Option<String>,
    pub neighborhood: Option<StateSet>,
    /// Resolved values of `c`, `c1`, `c2`, `c3` and `r` when given.
    pub params: BTreeMap<String, f64>,
    pub sampler: Option<Sampler>,
}

#[derive(Debug, Clone)]
pub struct LoadedSystem {
    pub config: SystemConfig,
    pub constants: BTreeMap<String, f64>,
    pub system: HybridSystem,
    pub propositions: PropositionSet,
    pub certificates: BTreeMap<String, LoadedCertificate>,
    pub sampler: Option<Sampler>,
    pub simulation: SimOptions,
}

impl LoadedSystem {
    pub fn certificate(&self, name: &str) -> Result<&LoadedCertificate, ConfigError> {
        self.certificates.get(name).ok_or_else(|| {
            ConfigError::Invalid(format!(
                "system `{}` has no certificate `{name}` (known: {})",
                self.config.name,
                self.certificates.keys().cloned().collect::<Vec<_>>().join(", ")
            ))
        })
    }

    pub fn proposition(&self, name: &str) -> Result<&StateSet, ConfigError> {
        self.propositions.get(name).ok_or_else(|| {
            ConfigError::Invalid(format!(
                "system `{}` has no proposition `{name}`",
                self.config.name
            ))
        })
    }

    /// Free-form metadata stored with simulated traces so that formulas can
    /// later be checked against the same propositions.
    pub fn trace_meta(&self) -> serde_json::Value {
        serde_json::json!({
            "system": self.config.name,
            "constants": self.constants,
            "propositions": self.config.propositions,
        })
    }
}

fn parse_typed(src: &str, ty: ExprType, context: &str) -> Result<Expr, ConfigError> {
    let e = parse_expression(src).map_err(|error| ConfigError::Parse {
        context: context.to_string(),
        error,
    })?;
    if e.ty() != ty {
        return Err(ConfigError::Type {
            context: context.to_string(),
            expected: match ty {
                ExprType::Number => "numeric",
                ExprType::Boolean => "boolean",
            },
        });
    }
    Ok(e)
}

/// Parses `src`, checks it against `dim` and `constants`, and substitutes the
/// constants.
pub fn compile_expr(
    src: &str,
    ty: ExprType,
    dim: usize,
    constants: &BTreeMap<String, f64>,
    context: &str,
) -> Result<Expr, ConfigError> {
    let e = parse_typed(src, ty, context)?;
    e.check_bindings(dim, constants)
        .map_err(|error| ConfigError::Bind {
            context: context.to_string(),
            error,
        })?;
    Ok(e.substitute(constants))
}

fn predicate(e: Expr) -> StatePredicate {
    Arc::new(move |x: &[f64]| e.eval_bool(&Env::state(x)).unwrap_or(false))
}

fn scalar(e: Expr) -> ScalarField {
    Arc::new(move |x: &[f64]| e.eval_num(&Env::state(x)).unwrap_or(f64::NAN))
}

/// Builds a [`StateSet`] from its specification.
pub fn compile_set(
    spec: &SetSpec,
    dim: usize,
    constants: &BTreeMap<String, f64>,
    context: &str,
) -> Result<StateSet, ConfigError> {
    let contains = predicate(compile_expr(spec.expr(), ExprType::Boolean, dim, constants, context)?);
    Ok(match spec.margin() {
        Some(m) => {
            let margin = compile_expr(m, ExprType::Number, dim, constants, &format!("{context} margin"))?;
            StateSet::with_margin(contains, scalar(margin))
        }
        None => StateSet::new(contains),
    })
}

/// Builds the propositions of a config, e.g. from trace metadata.
pub fn compile_propositions(
    specs: &BTreeMap<String, SetSpec>,
    dim: usize,
    constants: &BTreeMap<String, f64>,
) -> Result<PropositionSet, ConfigError> {
    let mut props = PropositionSet::new();
    for (name, spec) in specs {
        if !is_identifier(name) {
            return Err(ConfigError::Invalid(format!(
                "proposition name `{name}` is not an identifier"
            )));
        }
        props.insert(
            name.clone(),
            compile_set(spec, dim, constants, &format!("proposition `{name}`"))?,
        );
    }
    Ok(props)
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn compile_map(
    exprs: &[String],
    dim: usize,
    constants: &BTreeMap<String, f64>,
    context: &str,
) -> Result<StateMap, ConfigError> {
    if exprs.len() != dim {
        return Err(ConfigError::Invalid(format!(
            "{context}: has {} components, expected {dim}",
            exprs.len()
        )));
    }
    let compiled = exprs
        .iter()
        .enumerate()
        .map(|(i, s)| {
            compile_expr(s, ExprType::Number, dim, constants, &format!("{context} component {}", i + 1))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Arc::new(move |x: &[f64]| {
        compiled
            .iter()
            .map(|e| e.eval_num(&Env::state(x)).unwrap_or(f64::NAN))
            .collect()
    }))
}

/// Evaluates a parameter that may refer to constants.
pub fn eval_param(
    spec: &ParamSpec,
    constants: &BTreeMap<String, f64>,
    context: &str,
) -> Result<f64, ConfigError> {
    match spec {
        ParamSpec::Num(v) => Ok(*v),
        ParamSpec::Expr(src) => {
            let e = compile_expr(src, ExprType::Number, 0, constants, context)?;
            e.eval_num(&Env::state(&[]))
                .map_err(|err| ConfigError::Invalid(format!("{context}: {err}")))
        }
    }
}

/// Resolves constants that may be defined in terms of each other.
fn resolve_constants(
    specs: &BTreeMap<String, ParamSpec>,
) -> Result<BTreeMap<String, f64>, ConfigError> {
    let mut done = BTreeMap::new();
    let mut pending: Vec<(&String, &ParamSpec)> = specs.iter().collect();
    while !pending.is_empty() {
        let before = pending.len();
        let mut rest = Vec::new();
        for (name, spec) in pending {
            match eval_param(spec, &done, &format!("constant `{name}`")) {
                Ok(v) => {
                    done.insert(name.clone(), v);
                }
                Err(ConfigError::Bind {
                    error: BindError::UnknownConstant(_),
                    ..
                }) => rest.push((name, spec)),
                Err(e) => return Err(e),
            }
        }
        if rest.len() == before {
            let names: Vec<&str> = rest.iter().map(|(n, _)| n.as_str()).collect();
            return Err(ConfigError::Invalid(format!(
                "constants cannot be resolved (unknown or cyclic references): {}",
                names.join(", ")
            )));
        }
        pending = rest;
    }
    Ok(done)
}

impl SystemConfig {
    pub fn from_toml_str(src: &str) -> Result<Self, ConfigError> {
        toml::from_str(src).map_err(|e| ConfigError::Toml(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Replaces or adds a constant before loading.
    pub fn set_constant(&mut self, name: &str, value: f64) {
        self.constants.insert(name.to_string(), ParamSpec::Num(value));
    }

    pub fn load(&self) -> Result<LoadedSystem, ConfigError> {
        let dim = self.dim;
        if dim == 0 {
            return Err(SystemError::ZeroDimension.into());
        }
        let constants = resolve_constants(&self.constants)?;
        let flow_set = compile_set(&self.flow_set, dim, &constants, "flow_set")?;
        let jump_set = compile_set(&self.jump_set, dim, &constants, "jump_set")?;
        let flows = self
            .flow_selections
            .iter()
            .enumerate()
            .map(|(i, f)| compile_map(f, dim, &constants, &format!("flow selection {}", i + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        let jumps = self
            .jump_selections
            .iter()
            .enumerate()
            .map(|(i, g)| compile_map(g, dim, &constants, &format!("jump selection {}", i + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        let mut system = HybridSystem::new(self.name.clone(), dim, flow_set, jump_set, flows, jumps)?;
        if let Some(space) = &self.state_space {
            system = system.with_state_space(compile_set(space, dim, &constants, "state_space")?);
        }
        let propositions = compile_propositions(&self.propositions, dim, &constants)?;

        if let Some(s) = &self.sampler {
            s.validate(dim)?;
        }
        let mut certificates = BTreeMap::new();
        for (name, c) in &self.certificates {
            let loaded = self.load_certificate(name, c, &constants, &propositions)?;
            certificates.insert(name.clone(), loaded);
        }
        for (name, c) in &certificates {
            if let Some(b) = &c.barrier {
                match certificates.get(b) {
                    Some(bc) if bc.cert.role == Role::Barrier => {}
                    _ => {
                        return Err(ConfigError::Invalid(format!(
                            "certificate `{name}`: `{b}` is not a barrier certificate of this system"
                        )))
                    }
                }
            }
        }
        let simulation = self.simulation.clone().unwrap_or_default();
        simulation
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("simulation: {e}")))?;
        Ok(LoadedSystem {
            config: self.clone(),
            constants,
            system,
            propositions,
            certificates,
            sampler: self.sampler.clone(),
            simulation,
        })
    }

    fn load_certificate(
        &self,
        name: &str,
        c: &CertificateConfig,
        constants: &BTreeMap<String, f64>,
        propositions: &PropositionSet,
    ) -> Result<LoadedCertificate, ConfigError> {
        let ctx = format!("certificate `{name}`");
        let dim = self.dim;
        let expr = compile_expr(&c.expr, ExprType::Number, dim, constants, &ctx)?;
        let mut cert = ScalarCertificate::new(name, expr, c.role).nonsmooth(c.nonsmooth);
        if let Some(g) = &c.gradient {
            if g.len() != dim {
                return Err(ConfigError::Invalid(format!(
                    "{ctx}: gradient has {} components, expected {dim}",
                    g.len()
                )));
            }
            let grad = g
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    compile_expr(s, ExprType::Number, dim, constants, &format!("{ctx} gradient {}", i + 1))
                })
                .collect::<Result<Vec<_>, _>>()?;
            cert = cert.with_gradient(grad);
        }
        for p in [&c.prop, &c.hold_prop].into_iter().flatten() {
            if !propositions.contains_name(p) {
                return Err(ConfigError::Invalid(format!("{ctx}: unknown proposition `{p}`")));
            }
        }
        let neighborhood = c
            .neighborhood
            .as_ref()
            .map(|n| compile_set(n, dim, constants, &format!("{ctx} neighborhood")))
            .transpose()?;
        let mut params = BTreeMap::new();
        for (key, spec) in [("c", &c.c), ("c1", &c.c1), ("c2", &c.c2), ("c3", &c.c3), ("r", &c.r)] {
            if let Some(spec) = spec {
                params.insert(key.to_string(), eval_param(spec, constants, &format!("{ctx} {key}"))?);
            }
        }
        let sampler = c.sampler.clone().or_else(|| self.sampler.clone());
        if let Some(s) = &sampler {
            s.validate(dim)?;
            // Supplied gradients are checked against finite differences at load.
            cert.check_gradient(&s.bounds, 100, s.seed)?;
        }
        Ok(LoadedCertificate {
            cert,
            prop: c.prop.clone(),
            hold_prop: c.hold_prop.clone(),
            barrier: c.barrier.clone(),
            neighborhood,
            params,
            sampler: c.sampler.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        name = "line"
        dim = 1
        flow_set = "x1 >= 0"
        jump_set = { expr = "x1 <= 0", margin = "x1" }
        flow_selections = [["-a"]]
        jump_selections = [["b"]]

        [constants]
        a = 1.0
        b = "2 * a"
    "#;

    #[test]
    fn loads_minimal_config() {
        let cfg = SystemConfig::from_toml_str(MINIMAL).unwrap();
        let sys = cfg.load().unwrap();
        assert_eq!(sys.constants["b"], 2.0);
        assert_eq!(sys.system.flow_directions(&[0.5]), vec![vec![-1.0]]);
        assert_eq!(sys.system.jump_successors(&[0.0]), vec![vec![2.0]]);
        assert!(sys.system.jump_set.contains_within(&[1e-12], 1e-9));
        let again = SystemConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn reports_bad_expressions() {
        let bad = MINIMAL.replace("\"-a\"", "\"-q\"");
        let err = SystemConfig::from_toml_str(&bad).unwrap().load().unwrap_err();
        assert!(matches!(err, ConfigError::Bind { .. }), "{err}");

        let bad = MINIMAL.replace("\"x1 >= 0\"", "\"x1 + 1\"");
        let err = SystemConfig::from_toml_str(&bad).unwrap().load().unwrap_err();
        assert!(matches!(err, ConfigError::Type { .. }), "{err}");

        let bad = MINIMAL.replace("[[\"b\"]]", "[[\"b\", \"1\"]]");
        let err = SystemConfig::from_toml_str(&bad).unwrap().load().unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)), "{err}");

        let bad = MINIMAL.replace("b = \"2 * a\"", "b = \"2 * c\"\nc = \"b\"");
        let err = SystemConfig::from_toml_str(&bad).unwrap().load().unwrap_err();
        assert!(err.to_string().contains("cyclic"), "{err}");
    }

    #[test]
    fn rejects_inconsistent_gradient() {
        let src = format!(
            "{MINIMAL}\n[sampler]\nmode = \"random\"\nbounds = [[-1.0, 1.0]]\n\n\
             [certificates.V]\nexpr = \"x1^2\"\ngradient = [\"x1\"]\nrole = \"lyapunov\"\n"
        );
        let err = SystemConfig::from_toml_str(&src).unwrap().load().unwrap_err();
        assert!(matches!(err, ConfigError::Cert(CertError::GradientMismatch { .. })), "{err}");
        let ok = src.replace("gradient = [\"x1\"]", "gradient = [\"2*x1\"]");
        assert!(SystemConfig::from_toml_str(&ok).unwrap().load().is_ok());
    }
}
