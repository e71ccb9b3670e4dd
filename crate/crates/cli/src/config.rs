//! Experiment configuration.
//!
//! A run is described by one JSON document. Values are layered, later layers winning:
//! preset defaults for the chosen experiment, then the config file, then `--override
//! key=value` pairs (dotted keys address nested fields), then `--out`.

use std::fmt;
use std::path::PathBuf;

use nlqw_core::dynamics::Boundary;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::presets;

/// Configuration problem tied to the field that caused it.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
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
        write!(f, "invalid config field `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Fig1StabilityPanels,
    Fig2StationarySoliton,
    Fig3MovingSolitons,
    Fig4Collision,
    Fig5DarkSoliton,
    Fig6DarkFormation,
    Fig7Electric,
    Fig8StabilityMap,
    Dim2Dispersion,
    Custom,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 10] = [
        ExperimentKind::Fig1StabilityPanels,
        ExperimentKind::Fig2StationarySoliton,
        ExperimentKind::Fig3MovingSolitons,
        ExperimentKind::Fig4Collision,
        ExperimentKind::Fig5DarkSoliton,
        ExperimentKind::Fig6DarkFormation,
        ExperimentKind::Fig7Electric,
        ExperimentKind::Fig8StabilityMap,
        ExperimentKind::Dim2Dispersion,
        ExperimentKind::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Fig1StabilityPanels => "fig1_stability_panels",
            ExperimentKind::Fig2StationarySoliton => "fig2_stationary_soliton",
            ExperimentKind::Fig3MovingSolitons => "fig3_moving_solitons",
            ExperimentKind::Fig4Collision => "fig4_collision",
            ExperimentKind::Fig5DarkSoliton => "fig5_dark_soliton",
            ExperimentKind::Fig6DarkFormation => "fig6_dark_formation",
            ExperimentKind::Fig7Electric => "fig7_electric",
            ExperimentKind::Fig8StabilityMap => "fig8_stability_map",
            ExperimentKind::Dim2Dispersion => "dim2_dispersion",
            ExperimentKind::Custom => "custom",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Continuum parameters; when present the lattice `theta0`/`alpha` must equal
/// `epsilon` times these.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuumSpec {
    pub theta0_t: f64,
    pub alpha_t: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolitonSlot {
    pub center: i64,
    #[serde(default)]
    pub nu: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    BrightSoliton {
        beta: f64,
        #[serde(default)]
        center: i64,
    },
    MovingSoliton {
        beta: f64,
        nu: f64,
        #[serde(default)]
        center: i64,
    },
    /// Several moving solitons in one walker state, normalized together.
    SolitonTrain { beta: f64, solitons: Vec<SolitonSlot> },
    DarkSoliton {
        beta: f64,
        /// Defaults to `beta`.
        #[serde(default)]
        intensity: Option<f64>,
        #[serde(default)]
        center: i64,
    },
    /// Coin state `(1, e^{-i delta}) / sqrt(2)` on `[j_lo, j_hi]` (or its complement).
    /// Without `intensity` the block has unit total norm.
    UniformBlock {
        j_lo: i64,
        j_hi: i64,
        delta: f64,
        #[serde(default)]
        invert: bool,
        #[serde(default)]
        intensity: Option<f64>,
    },
    ProductSoliton2d { beta: f64, half: i64 },
    /// A single occupied site; `u` and `d` are `[re, im]`.
    Site { j: i64, u: [f64; 2], d: [f64; 2] },
}

impl InitialSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            InitialSpec::BrightSoliton { .. } => "bright_soliton",
            InitialSpec::MovingSoliton { .. } => "moving_soliton",
            InitialSpec::SolitonTrain { .. } => "soliton_train",
            InitialSpec::DarkSoliton { .. } => "dark_soliton",
            InitialSpec::UniformBlock { .. } => "uniform_block",
            InitialSpec::ProductSoliton2d { .. } => "product_soliton2d",
            InitialSpec::Site { .. } => "site",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityGrid {
    pub intensity_ratio_max: f64,
    pub k2_ratio_max: f64,
    pub points: usize,
}

/// Named modification of the base config, applied as dotted-key overrides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variant {
    pub label: String,
    #[serde(default)]
    pub set: Map<String, Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub steps: usize,
    /// Spacing of the time series and heatmap rows written to disk.
    pub record_every: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Seeds the optional initial-state perturbation.
    #[serde(default)]
    pub seed: u64,
    /// Relative amplitude of a seeded random perturbation added to occupied sites.
    #[serde(default)]
    pub noise: f64,
    pub epsilon: f64,
    pub theta0: f64,
    pub alpha: f64,
    #[serde(default)]
    pub phi: f64,
    #[serde(default)]
    pub electric_start: usize,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default)]
    pub continuum: Option<ContinuumSpec>,
    /// Initial lattice is `[-half_width, half_width]` (open lattices grow as needed).
    pub half_width: i64,
    pub initial: InitialSpec,
    #[serde(default)]
    pub variants: Vec<Variant>,
    #[serde(default)]
    pub stability_grid: Option<StabilityGrid>,
    /// 2D runs: write a `P(x, y)` snapshot every this many steps.
    #[serde(default)]
    pub snapshot_every: Option<usize>,
}

fn finite(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(field, format!("must be finite, got {v}")))
    }
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(field, format!("must be positive, got {v}")))
    }
}

impl ExperimentConfig {
    /// Checks cross-field consistency that the JSON schema cannot express.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.record_every == 0 {
            return Err(ConfigError::new("record_every", "must be at least 1"));
        }
        positive("epsilon", self.epsilon)?;
        finite("theta0", self.theta0)?;
        finite("alpha", self.alpha)?;
        finite("phi", self.phi)?;
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return Err(ConfigError::new("noise", "must be non-negative"));
        }
        if self.half_width < 1 {
            return Err(ConfigError::new("half_width", "must be at least 1"));
        }
        if let Some(c) = self.continuum {
            finite("continuum.theta0_t", c.theta0_t)?;
            finite("continuum.alpha_t", c.alpha_t)?;
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + b.abs());
            if !close(self.theta0, self.epsilon * c.theta0_t) {
                return Err(ConfigError::new(
                    "theta0",
                    format!("must equal epsilon * continuum.theta0_t = {}", self.epsilon * c.theta0_t),
                ));
            }
            if !close(self.alpha, self.epsilon * c.alpha_t) {
                return Err(ConfigError::new(
                    "alpha",
                    format!("must equal epsilon * continuum.alpha_t = {}", self.epsilon * c.alpha_t),
                ));
            }
        }
        if let Some(g) = self.stability_grid {
            positive("stability_grid.intensity_ratio_max", g.intensity_ratio_max)?;
            positive("stability_grid.k2_ratio_max", g.k2_ratio_max)?;
            if g.points < 2 {
                return Err(ConfigError::new("stability_grid.points", "must be at least 2"));
            }
        }
        if self.snapshot_every == Some(0) {
            return Err(ConfigError::new("snapshot_every", "must be at least 1"));
        }
        self.validate_initial()?;
        self.validate_experiment()
    }

    fn validate_initial(&self) -> Result<(), ConfigError> {
        match &self.initial {
            InitialSpec::BrightSoliton { beta, .. }
            | InitialSpec::MovingSoliton { beta, .. }
            | InitialSpec::ProductSoliton2d { beta, .. } => positive("initial.beta", *beta)?,
            InitialSpec::SolitonTrain { beta, solitons } => {
                positive("initial.beta", *beta)?;
                if solitons.is_empty() {
                    return Err(ConfigError::new("initial.solitons", "needs at least one soliton"));
                }
            }
            InitialSpec::DarkSoliton { beta, intensity, .. } => {
                positive("initial.beta", *beta)?;
                if let Some(i) = intensity {
                    positive("initial.intensity", *i)?;
                }
            }
            InitialSpec::UniformBlock { j_lo, j_hi, delta, intensity, .. } => {
                finite("initial.delta", *delta)?;
                if j_lo > j_hi {
                    return Err(ConfigError::new("initial.j_lo", "must not exceed initial.j_hi"));
                }
                if *j_lo < -self.half_width || *j_hi > self.half_width {
                    return Err(ConfigError::new("initial.j_hi", "block must lie inside [-half_width, half_width]"));
                }
                if let Some(i) = intensity {
                    positive("initial.intensity", *i)?;
                }
            }
            InitialSpec::Site { j, .. } => {
                if j.abs() > self.half_width {
                    return Err(ConfigError::new("initial.j", "site must lie inside [-half_width, half_width]"));
                }
            }
        }
        if let InitialSpec::ProductSoliton2d { half, .. } = self.initial {
            if half < 1 {
                return Err(ConfigError::new("initial.half", "must be at least 1"));
            }
        }
        Ok(())
    }

    fn validate_experiment(&self) -> Result<(), ConfigError> {
        let is_2d = matches!(self.initial, InitialSpec::ProductSoliton2d { .. });
        match self.experiment {
            ExperimentKind::Dim2Dispersion => {
                if !matches!(self.initial, InitialSpec::ProductSoliton2d { .. } | InitialSpec::Site { .. }) {
                    return Err(ConfigError::new("initial.kind", "dim2_dispersion needs product_soliton2d or site"));
                }
                if self.phi != 0.0 {
                    return Err(ConfigError::new("phi", "the 2D walk has no electric field"));
                }
            }
            ExperimentKind::Fig6DarkFormation => match self.initial {
                InitialSpec::UniformBlock { invert: true, intensity: Some(_), .. } => {}
                InitialSpec::UniformBlock { invert: true, intensity: None, .. } => {
                    return Err(ConfigError::new(
                        "initial.intensity",
                        "required for fig6_dark_formation (the block intensity is not given with the figure)",
                    ))
                }
                _ => return Err(ConfigError::new("initial.kind", "fig6_dark_formation needs an inverted uniform_block")),
            },
            ExperimentKind::Fig8StabilityMap => {
                let c = self
                    .continuum
                    .ok_or_else(|| ConfigError::new("continuum", "required for fig8_stability_map"))?;
                positive("continuum.theta0_t", c.theta0_t)?;
                positive("continuum.alpha_t", c.alpha_t)?;
                if self.stability_grid.is_none() {
                    return Err(ConfigError::new("stability_grid", "required for fig8_stability_map"));
                }
            }
            _ if is_2d => {
                return Err(ConfigError::new("initial.kind", "product_soliton2d is only valid for dim2_dispersion"));
            }
            _ => {}
        }
        Ok(())
    }

    /// One fully resolved config per variant (or the config itself when there are none).
    pub fn variant_configs(&self) -> Result<Vec<(String, ExperimentConfig)>, ConfigError> {
        if self.variants.is_empty() {
            return Ok(vec![(self.experiment.name().to_string(), self.clone())]);
        }
        let mut base = serde_json::to_value(self).expect("config serializes");
        base.as_object_mut().unwrap().remove("variants");
        let mut out = Vec::with_capacity(self.variants.len());
        for (n, v) in self.variants.iter().enumerate() {
            if v.label.is_empty() || !v.label.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(ConfigError::new(
                    format!("variants[{n}].label"),
                    "must be non-empty and use only [A-Za-z0-9_-]",
                ));
            }
            let mut value = base.clone();
            for (key, val) in &v.set {
                set_path(&mut value, key, val.clone())
                    .map_err(|e| ConfigError::new(format!("variants[{n}].set.{key}"), e.message))?;
            }
            let cfg = from_value(value).map_err(|e| ConfigError::new(format!("variants[{n}].set.{}", e.field), e.message))?;
            out.push((v.label.clone(), cfg));
        }
        let mut labels: Vec<&str> = out.iter().map(|(l, _)| l.as_str()).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(ConfigError::new("variants", "labels must be unique"));
        }
        Ok(out)
    }
}

/// Deserializes and validates, reporting the path of the first offending field.
pub fn from_value(value: Value) -> Result<ExperimentConfig, ConfigError> {
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." { "<root>".to_string() } else { path };
        ConfigError::new(field, e.into_inner().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Recursively merges `top` into `base`. Objects merge key by key, except that an object
/// whose `kind` changes is replaced wholesale; everything else is replaced.
pub fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            let kind_changed = matches!((b.get("kind"), t.get("kind")), (Some(x), Some(y)) if x != y);
            if kind_changed {
                *b = t;
                return;
            }
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, t) => *b = t,
    }
}

/// Sets a dotted path such as `initial.nu` or `variants.0.label`, creating objects as needed.
pub fn set_path(root: &mut Value, key: &str, value: Value) -> Result<(), ConfigError> {
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(ConfigError::new(key, "empty path segment"));
    }
    let mut node = root;
    let segments: Vec<&str> = key.split('.').collect();
    for (n, seg) in segments.iter().enumerate() {
        let last = n + 1 == segments.len();
        if node.is_null() {
            *node = Value::Object(Map::new());
        }
        node = match node {
            Value::Object(map) => {
                if last {
                    let old = map.entry(seg.to_string()).or_insert(Value::Null);
                    if old.is_object() && value.is_object() {
                        merge(old, value);
                    } else {
                        *old = value;
                    }
                    return Ok(());
                }
                map.entry(seg.to_string()).or_insert(Value::Null)
            }
            Value::Array(items) => {
                let idx: usize = seg
                    .parse()
                    .map_err(|_| ConfigError::new(key, format!("`{seg}` is not an array index")))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| ConfigError::new(key, format!("index {idx} out of range (length {len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(ConfigError::new(key, format!("`{}` is not an object", segments[..n].join(".")))),
        };
    }
    unreachable!("loop returns on the last segment")
}

/// Parses one `key=value` override; the value is JSON when it parses as JSON and a
/// plain string otherwise.
pub fn parse_override(s: &str) -> Result<(String, Value), ConfigError> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| ConfigError::new(s, "override must look like key=value"))?;
    let key = k.trim().to_string();
    let value = serde_json::from_str(v.trim()).unwrap_or_else(|_| Value::String(v.trim().to_string()));
    Ok((key, value))
}

/// Builds the effective config from an optional file document, an optional preset name and
/// command-line overrides.
pub fn resolve(
    file: Option<Value>,
    preset: Option<ExperimentKind>,
    overrides: &[String],
) -> Result<ExperimentConfig, ConfigError> {
    from_value(resolve_value(file, preset, overrides)?)
}

/// The merged JSON document, before deserialization and validation.
pub fn resolve_value(
    file: Option<Value>,
    preset: Option<ExperimentKind>,
    overrides: &[String],
) -> Result<Value, ConfigError> {
    let parsed: Vec<(String, Value)> = overrides.iter().map(|s| parse_override(s)).collect::<Result<_, _>>()?;
    if let Some(f) = &file {
        if !f.is_object() {
            return Err(ConfigError::new("<root>", "config must be a JSON object"));
        }
    }
    let kind_value = parsed
        .iter()
        .rev()
        .find(|(k, _)| k == "experiment")
        .map(|(_, v)| v.clone())
        .or_else(|| file.as_ref().and_then(|f| f.get("experiment").cloned()));
    let kind = match (kind_value, preset) {
        (Some(Value::String(name)), _) => ExperimentKind::from_name(&name)
            .ok_or_else(|| ConfigError::new("experiment", format!("unknown experiment `{name}`")))?,
        (Some(other), _) => return Err(ConfigError::new("experiment", format!("expected a name, got {other}"))),
        (None, Some(k)) => k,
        (None, None) => return Err(ConfigError::new("experiment", "missing; name an experiment or a preset")),
    };
    let mut value = serde_json::to_value(presets::defaults(kind)).expect("preset serializes");
    if let Some(f) = file {
        merge(&mut value, f);
    }
    for (k, v) in parsed {
        set_path(&mut value, &k, v)?;
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn names_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(ExperimentKind::from_name(k.name()), Some(k));
            assert_eq!(serde_json::to_value(k).unwrap(), json!(k.name()));
        }
    }

    #[test]
    fn layering_precedence() {
        let file = json!({"experiment": "fig2_stationary_soliton", "steps": 100});
        let cfg = resolve(Some(file), None, &["steps=7".into(), "record_every=3".into()]).unwrap();
        assert_eq!(cfg.steps, 7);
        assert_eq!(cfg.record_every, 3);
        assert_eq!(cfg.experiment, ExperimentKind::Fig2StationarySoliton);
        assert_eq!(cfg.epsilon, 0.5);
    }

    #[test]
    fn errors_name_the_field() {
        let e = resolve(Some(json!({"experiment": "fig2_stationary_soliton", "steps": "many"})), None, &[]).unwrap_err();
        assert_eq!(e.field, "steps");
        let e = resolve(None, Some(ExperimentKind::Custom), &["initial.beta=-1".into()]).unwrap_err();
        assert_eq!(e.field, "initial.beta");
        let e = resolve(None, Some(ExperimentKind::Custom), &["bogus=1".into()]).unwrap_err();
        assert!(e.message.contains("bogus"), "{e}");
        let e = resolve(None, Some(ExperimentKind::Fig2StationarySoliton), &["theta0=1".into()]).unwrap_err();
        assert_eq!(e.field, "theta0");
        let e = resolve(None, None, &[]).unwrap_err();
        assert_eq!(e.field, "experiment");
        let e = resolve(None, Some(ExperimentKind::Fig6DarkFormation), &[]).unwrap_err();
        assert_eq!(e.field, "initial.intensity");
    }

    #[test]
    fn kind_change_replaces_initial() {
        let file = json!({"experiment": "custom", "initial": {"kind": "site", "j": 0, "u": [1.0, 0.0], "d": [0.0, 0.0]}});
        let cfg = resolve(Some(file), None, &[]).unwrap();
        assert!(matches!(cfg.initial, InitialSpec::Site { j: 0, .. }));
    }

    #[test]
    fn set_path_cases() {
        let mut v = json!({"a": {"b": 1}, "xs": [1, 2]});
        set_path(&mut v, "a.c", json!(2)).unwrap();
        set_path(&mut v, "xs.1", json!(5)).unwrap();
        set_path(&mut v, "new.deep", json!(true)).unwrap();
        assert_eq!(v, json!({"a": {"b": 1, "c": 2}, "xs": [1, 5], "new": {"deep": true}}));
        assert!(set_path(&mut v, "xs.9", json!(0)).is_err());
        assert!(set_path(&mut v, "a.b.c", json!(0)).is_err());
        assert_eq!(parse_override("boundary=periodic").unwrap().1, json!("periodic"));
        assert_eq!(parse_override("phi=0.5").unwrap().1, json!(0.5));
        assert!(parse_override("nonsense").is_err());
    }

    #[test]
    fn variants_resolve_individually() {
        let cfg = resolve(None, Some(ExperimentKind::Fig7Electric), &[]).unwrap();
        let runs = cfg.variant_configs().unwrap();
        assert_eq!(runs.len(), 3);
        assert!(runs.iter().all(|(_, c)| c.variants.is_empty() && c.phi != 0.0));
    }
}
