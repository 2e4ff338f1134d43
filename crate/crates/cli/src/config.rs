//! Run configuration: strict JSON parsing, defaults and validation.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Verify,
    Bessel,
    CollisionConverge,
    ClassicalCompare,
    GrowthExponent,
    ContinuumProbe,
    Trajectory,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Verify,
        Experiment::Bessel,
        Experiment::CollisionConverge,
        Experiment::ClassicalCompare,
        Experiment::GrowthExponent,
        Experiment::ContinuumProbe,
        Experiment::Trajectory,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Verify => "verify",
            Experiment::Bessel => "bessel",
            Experiment::CollisionConverge => "collision-converge",
            Experiment::ClassicalCompare => "classical-compare",
            Experiment::GrowthExponent => "growth-exponent",
            Experiment::ContinuumProbe => "continuum-probe",
            Experiment::Trajectory => "trajectory",
        }
    }

    /// Default configuration used when no `--config` is given.
    pub fn default_config(self) -> RunConfig {
        let mut c = RunConfig::bare(self);
        match self {
            Experiment::Verify => {
                c.chain_length = Some(5);
                c.alpha = Some(Scalars::Many(vec![0.3, 1.0, 2.7]));
            }
            Experiment::Bessel => {
                c.chain_length = Some(15);
                c.alpha = Some(Scalars::One(1.0));
                c.time_horizon = Some(0.5);
            }
            Experiment::CollisionConverge => {
                c.chain_length = Some(3);
                c.alpha = Some(Scalars::One(1.0));
                c.time_horizon = Some(1.0);
                c.dt = Some(Scalars::Many(vec![0.1, 0.05, 0.025]));
            }
            Experiment::ClassicalCompare => {
                c.chain_length = Some(5);
                c.alpha = Some(Scalars::Many(vec![0.0, 0.7, 1.0]));
                c.time_horizon = Some(1.0);
                c.seeds = Some(Seeds::Range { count: 100_000, base: 0 });
            }
            Experiment::GrowthExponent => {
                c.chain_length = Some(4096);
                c.alpha = Some(Scalars::One(0.0));
                c.time_horizon = Some(1000.0);
                c.seeds = Some(Seeds::Range { count: 200, base: 0 });
            }
            Experiment::ContinuumProbe => {
                c.chain_length = Some(6);
                c.alpha = Some(Scalars::Many(vec![1.0, 10.0, 100.0]));
            }
            Experiment::Trajectory => {
                c.chain_length = Some(3);
                c.alpha = Some(Scalars::One(1.0));
                c.time_horizon = Some(1.0);
                c.dt = Some(Scalars::One(0.05));
                c.seeds = Some(Seeds::Range { count: 1000, base: 0 });
            }
        }
        c
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One number or a list of numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalars {
    One(f64),
    Many(Vec<f64>),
}

impl Scalars {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Scalars::One(v) => vec![*v],
            Scalars::Many(v) => v.clone(),
        }
    }
}

/// Explicit seed list, or `count` consecutive seeds starting at `base`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    List(Vec<u64>),
    Range { count: u64, base: u64 },
}

impl Seeds {
    pub fn expand(&self) -> Vec<u64> {
        match self {
            Seeds::List(v) => v.clone(),
            Seeds::Range { count, base } => (0..*count).map(|i| base.wrapping_add(i)).collect(),
        }
    }
}

/// Pass/fail thresholds; every field may be overridden from the config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub identity: f64,
    pub equivalence: f64,
    pub bessel: f64,
    pub quantum_classical: f64,
    pub off_diagonal: f64,
    pub population: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub truncation_change: f64,
    pub sigma: f64,
    pub beta_min: f64,
    pub beta_max: f64,
    pub control_beta_min: f64,
    pub control_beta_max: f64,
    pub probe: f64,
    pub norm: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            identity: 1e-10,
            equivalence: 1e-11,
            bessel: 1e-6,
            quantum_classical: 1e-9,
            off_diagonal: 1e-10,
            population: 1e-9,
            ratio_min: 1.7,
            ratio_max: 2.3,
            truncation_change: 0.01,
            sigma: 4.0,
            beta_min: 0.28,
            beta_max: 0.38,
            control_beta_min: 0.2,
            control_beta_max: 0.3,
            probe: 1e-12,
            norm: 1e-10,
        }
    }
}

impl Tolerances {
    fn validate(&self) -> Result<(), ConfigError> {
        let fields = [
            ("identity", self.identity),
            ("equivalence", self.equivalence),
            ("bessel", self.bessel),
            ("quantum_classical", self.quantum_classical),
            ("off_diagonal", self.off_diagonal),
            ("population", self.population),
            ("ratio_min", self.ratio_min),
            ("ratio_max", self.ratio_max),
            ("truncation_change", self.truncation_change),
            ("sigma", self.sigma),
            ("beta_min", self.beta_min),
            ("beta_max", self.beta_max),
            ("control_beta_min", self.control_beta_min),
            ("control_beta_max", self.control_beta_max),
            ("probe", self.probe),
            ("norm", self.norm),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::new(format!("tolerances.{name}"), "must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain_length: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Scalars>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_horizon: Option<f64>,
    /// Collision step; a list gives the steps of a convergence study.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<Scalars>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Seeds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Site compared in `bessel`; the centre of the chain by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site: Option<usize>,
    /// Sample times for `bessel` and `classical-compare`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    /// Also run the full density-matrix path in `bessel` (default: L <= 9).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_quantum: Option<bool>,
    /// Log-log fit window of `growth-exponent`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<[f64; 2]>,
    /// Ancilla Fock levels in `collision-converge` and `trajectory`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
}

pub const KNOWN_KEYS: [&str; 13] = [
    "experiment",
    "chain_length",
    "alpha",
    "time_horizon",
    "dt",
    "seeds",
    "output_path",
    "tolerances",
    "site",
    "times",
    "full_quantum",
    "fit_window",
    "truncation",
];

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    /// Dotted path of the offending field, empty for document-level errors.
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.is_empty() {
            write!(f, "config error: {}", self.message)
        } else {
            write!(f, "config error at `{}`: {}", self.field, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

/// Field named in a serde message such as "missing field `experiment`".
fn quoted_field(msg: &str) -> String {
    let mut parts = msg.split('`');
    parts.next();
    parts.next().unwrap_or("").to_string()
}

/// Parses a JSON run configuration. In strict mode unknown keys are errors;
/// otherwise unknown top-level keys are dropped with a warning.
pub fn parse_config(text: &str, strict: bool) -> Result<RunConfig, ConfigError> {
    let mut value: Value =
        serde_json::from_str(text).map_err(|e| ConfigError::new("", format!("malformed JSON: {e}")))?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| ConfigError::new("", "top level must be a JSON object"))?;
    if !obj.contains_key("experiment") {
        return Err(ConfigError::new("experiment", "missing required field"));
    }
    let unknown: Vec<String> = obj
        .keys()
        .filter(|k| !KNOWN_KEYS.contains(&k.as_str()))
        .cloned()
        .collect();
    if let Some(first) = unknown.first() {
        if strict {
            return Err(ConfigError::new(first.clone(), "unknown field"));
        }
        for k in &unknown {
            log::warn!("ignoring unknown config field `{k}`");
            obj.remove(k);
        }
    }
    for key in KNOWN_KEYS {
        if let Some(v) = obj.get(key) {
            if key == "experiment" {
                continue;
            }
            check_field(key, v)?;
        }
    }
    let config: RunConfig = serde_json::from_value(value).map_err(|e| {
        let msg = e.to_string();
        let field = quoted_field(&msg);
        ConfigError::new(field, msg)
    })?;
    validate(&config)?;
    Ok(config)
}

/// Per-field deserialization so that errors carry the field path.
fn check_field(key: &str, v: &Value) -> Result<(), ConfigError> {
    let err = |e: serde_json::Error| {
        let msg = e.to_string();
        let inner = quoted_field(&msg);
        let field = if inner.is_empty() || key != "tolerances" {
            key.to_string()
        } else {
            format!("{key}.{inner}")
        };
        ConfigError::new(field, msg)
    };
    match key {
        "chain_length" | "site" | "truncation" => serde_json::from_value::<usize>(v.clone()).map(drop),
        "alpha" | "dt" => serde_json::from_value::<Scalars>(v.clone()).map(drop),
        "time_horizon" => serde_json::from_value::<f64>(v.clone()).map(drop),
        "seeds" => serde_json::from_value::<Seeds>(v.clone()).map(drop),
        "output_path" => serde_json::from_value::<String>(v.clone()).map(drop),
        "tolerances" => serde_json::from_value::<Tolerances>(v.clone()).map(drop),
        "times" => serde_json::from_value::<Vec<f64>>(v.clone()).map(drop),
        "full_quantum" => serde_json::from_value::<bool>(v.clone()).map(drop),
        "fit_window" => serde_json::from_value::<[f64; 2]>(v.clone()).map(drop),
        _ => Ok(()),
    }
    .map_err(err)
}

impl RunConfig {
    fn bare(experiment: Experiment) -> Self {
        Self {
            experiment,
            chain_length: None,
            alpha: None,
            time_horizon: None,
            dt: None,
            seeds: None,
            output_path: None,
            tolerances: Tolerances::default(),
            site: None,
            times: None,
            full_quantum: None,
            fit_window: None,
            truncation: None,
        }
    }

    pub fn length(&self) -> usize {
        self.chain_length.expect("validated config has chain_length")
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.alpha.as_ref().map(Scalars::values).unwrap_or_default()
    }

    pub fn horizon(&self) -> f64 {
        self.time_horizon.expect("validated config has time_horizon")
    }

    pub fn seed_list(&self) -> Vec<u64> {
        self.seeds.as_ref().map(Seeds::expand).unwrap_or_default()
    }

    /// Replaces the seed base (or the whole list) with `--seed`.
    pub fn with_seed_base(mut self, base: u64) -> Self {
        self.seeds = Some(match self.seeds.take() {
            Some(Seeds::Range { count, .. }) => Seeds::Range { count, base },
            Some(Seeds::List(v)) => Seeds::Range {
                count: v.len() as u64,
                base,
            },
            None => Seeds::Range { count: 1, base },
        });
        self
    }
}

fn required(ok: bool, field: &str, experiment: Experiment) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::new(field, format!("required by `{experiment}`")))
    }
}

/// Checks that the fields each experiment needs are present and sane.
pub fn validate(c: &RunConfig) -> Result<(), ConfigError> {
    use Experiment::*;
    let e = c.experiment;
    required(c.chain_length.is_some(), "chain_length", e)?;
    required(c.alpha.is_some(), "alpha", e)?;
    let needs_horizon = matches!(e, Bessel | CollisionConverge | ClassicalCompare | GrowthExponent | Trajectory);
    required(!needs_horizon || c.time_horizon.is_some(), "time_horizon", e)?;
    let needs_seeds = matches!(e, ClassicalCompare | GrowthExponent | Trajectory);
    required(!needs_seeds || c.seeds.is_some(), "seeds", e)?;
    required(e != Trajectory || c.dt.is_some(), "dt", e)?;

    let l = c.length();
    if l < 2 {
        return Err(ConfigError::new("chain_length", "must be at least 2"));
    }
    let alphas = c.alphas();
    if alphas.is_empty() {
        return Err(ConfigError::new("alpha", "must not be empty"));
    }
    if alphas.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
        return Err(ConfigError::new("alpha", "values must be finite and >= 0"));
    }
    if let Some(t) = c.time_horizon {
        if !(t > 0.0 && t.is_finite()) {
            return Err(ConfigError::new("time_horizon", "must be positive"));
        }
    }
    if let Some(dt) = &c.dt {
        let v = dt.values();
        if v.is_empty() || v.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(ConfigError::new("dt", "values must be positive"));
        }
    }
    if let Some(seeds) = &c.seeds {
        let list = seeds.expand();
        if list.is_empty() {
            return Err(ConfigError::new("seeds", "at least one seed is required"));
        }
        let mut sorted = list.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(ConfigError::new("seeds", "seeds must be distinct"));
        }
    }
    if let Some(times) = &c.times {
        if times.is_empty() || times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(ConfigError::new("times", "must be a non-empty list of times >= 0"));
        }
    }
    if let Some([a, b]) = c.fit_window {
        if !(a > 0.0 && a < b) {
            return Err(ConfigError::new("fit_window", "must satisfy 0 < start < end"));
        }
    }
    c.tolerances.validate()?;
    match e {
        Bessel | CollisionConverge | Trajectory => {
            if alphas.iter().any(|a| *a <= 0.0) {
                return Err(ConfigError::new("alpha", format!("`{e}` needs alpha > 0")));
            }
        }
        ContinuumProbe => {
            if alphas.iter().any(|a| *a <= 0.0) {
                return Err(ConfigError::new("alpha", "probe alphas must be positive"));
            }
        }
        _ => {}
    }
    if matches!(e, GrowthExponent) && alphas.len() != 1 {
        return Err(ConfigError::new("alpha", "`growth-exponent` takes a single alpha"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_examples_parse() {
        let c = parse_config(r#"{"experiment":"verify","chain_length":5,"alpha":1.0}"#, true).unwrap();
        assert_eq!(c.experiment, Experiment::Verify);
        assert_eq!(c.tolerances, Tolerances::default());
        let c = parse_config(
            r#"{"experiment":"bessel","chain_length":15,"alpha":1.0,"time_horizon":0.5}"#,
            true,
        )
        .unwrap();
        assert_eq!(c.horizon(), 0.5);
    }

    #[test]
    fn missing_experiment_names_the_field() {
        let e = parse_config(r#"{"chain_length":5,"alpha":1.0}"#, true).unwrap_err();
        assert_eq!(e.field, "experiment");
    }

    #[test]
    fn unknown_keys_depend_on_strictness() {
        let text = r#"{"experiment":"verify","chain_length":5,"alpha":1.0,"tolerence":1}"#;
        assert_eq!(parse_config(text, true).unwrap_err().field, "tolerence");
        assert!(parse_config(text, false).is_ok());
        let nested = r#"{"experiment":"verify","chain_length":5,"alpha":1.0,"tolerances":{"identiy":1e-9}}"#;
        assert_eq!(parse_config(nested, true).unwrap_err().field, "tolerances.identiy");
    }

    #[test]
    fn seeds_in_both_forms() {
        let c = parse_config(
            r#"{"experiment":"trajectory","chain_length":3,"alpha":1,"time_horizon":1,"dt":0.1,"seeds":{"count":3,"base":10}}"#,
            true,
        )
        .unwrap();
        assert_eq!(c.seed_list(), vec![10, 11, 12]);
        let c = parse_config(
            r#"{"experiment":"trajectory","chain_length":3,"alpha":1,"time_horizon":1,"dt":0.1,"seeds":[4,2]}"#,
            true,
        )
        .unwrap();
        assert_eq!(c.seed_list(), vec![4, 2]);
        assert_eq!(c.with_seed_base(7).seed_list(), vec![7, 8]);
    }

    #[test]
    fn zero_seeds_are_rejected() {
        let text = r#"{"experiment":"growth-exponent","chain_length":64,"alpha":0,"time_horizon":10,"seeds":{"count":0,"base":0}}"#;
        assert_eq!(parse_config(text, true).unwrap_err().field, "seeds");
        let text = r#"{"experiment":"growth-exponent","chain_length":64,"alpha":0,"time_horizon":10,"seeds":[]}"#;
        assert_eq!(parse_config(text, true).unwrap_err().field, "seeds");
    }

    #[test]
    fn type_errors_name_the_field() {
        let e = parse_config(r#"{"experiment":"verify","chain_length":"five","alpha":1}"#, true).unwrap_err();
        assert_eq!(e.field, "chain_length");
        let e = parse_config(r#"{"experiment":"verify","chain_length":5,"alpha":1,"tolerances":{"identity":-1}}"#, true)
            .unwrap_err();
        assert_eq!(e.field, "tolerances.identity");
        let e = parse_config(r#"{"experiment":"bessel","chain_length":15,"alpha":1}"#, true).unwrap_err();
        assert_eq!(e.field, "time_horizon");
    }

    #[test]
    fn defaults_validate() {
        for e in Experiment::ALL {
            validate(&e.default_config()).unwrap();
        }
    }

    #[test]
    fn config_round_trips() {
        let c = Experiment::CollisionConverge.default_config();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(parse_config(&text, true).unwrap(), c);
    }
}
