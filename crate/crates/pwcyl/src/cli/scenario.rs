//! Scenario ingestion: a flat `key = value` file (one pair per line, `#`
//! comments) or the equivalent JSON object, with exact per-mode key sets.
//! Unknown keys are rejected so fixture drift is caught early.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::model::{
    AffinePiece, CanonicalParams, FocusCanonicalParams, PiecewiseSystem, QuasinormalParams,
    QuasinormalPiece,
};
use crate::tol;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read config: {0}")]
    Io(String),
    #[error("config line {line}: expected `key = value`, got `{text}`")]
    BadLine { line: usize, text: String },
    #[error("config line {line}: cannot parse `{text}` as a number")]
    BadNumber { line: usize, text: String },
    #[error("invalid JSON config: {0}")]
    BadJson(String),
    #[error("missing `mode` key")]
    MissingMode,
    #[error("unknown mode `{0}` (expected canonical, focus, quasinormal or raw)")]
    UnknownMode(String),
    #[error("unknown key `{0}` for mode {1}")]
    UnknownKey(String, String),
    #[error("missing key `{0}` for mode {1}")]
    MissingKey(String, String),
    #[error("key `{key}`: {what}")]
    BadValue { key: String, what: String },
    #[error("unknown output format `{0}` (expected json or csv)")]
    BadFormat(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Mode {
    Canonical,
    Focus,
    Quasinormal,
    Raw,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Canonical => "canonical",
            Mode::Focus => "focus",
            Mode::Quasinormal => "quasinormal",
            Mode::Raw => "raw",
        }
    }
}

/// Parameters in whichever form the scenario supplied them.
#[derive(Debug, Clone)]
pub enum ModeParams {
    Canonical(CanonicalParams),
    Focus(FocusCanonicalParams),
    Quasinormal(QuasinormalParams),
    Raw(PiecewiseSystem),
}

/// Analysis options shared by every command.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AnalysisOptions {
    pub y_min: f64,
    pub y_max: f64,
    pub grid_nodes: usize,
    pub surface_nodes: usize,
    pub t_max: Option<f64>,
    pub eps_disc: f64,
    pub seed: u64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            y_min: tol::DEFAULT_Y_MIN,
            y_max: tol::DEFAULT_Y_MAX,
            grid_nodes: tol::DEFAULT_GRID_NODES,
            surface_nodes: tol::DEFAULT_SURFACE_NODES,
            t_max: None,
            eps_disc: tol::DISC_EPS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub mode: Mode,
    pub params: ModeParams,
    pub options: AnalysisOptions,
    pub format: OutputFormat,
}

const OPTION_KEYS: &[&str] = &[
    "y_min",
    "y_max",
    "grid_nodes",
    "surface_nodes",
    "t_max",
    "eps_disc",
    "seed",
    "format",
];

const CANONICAL_KEYS: &[&str] = &[
    "a_plus", "b_plus", "c_plus", "d_plus", "a_minus", "b_minus", "c_minus", "d_minus", "m",
];

const FOCUS_KEYS: &[&str] = &[
    "a_plus", "b_plus", "a_minus", "b_minus", "m", "d1", "d2", "t1", "t2", "a1", "a2",
];

fn quasinormal_keys() -> Vec<String> {
    let mut keys = Vec::new();
    for side in ["plus", "minus"] {
        for base in ["a11", "a12", "a13", "a21", "a22", "a23", "a33", "b1", "b2"] {
            keys.push(format!("{base}_{side}"));
        }
    }
    keys
}

fn raw_keys() -> Vec<String> {
    let mut keys = Vec::new();
    for side in ["plus", "minus"] {
        for base in [
            "a11", "a12", "a13", "a21", "a22", "a23", "a31", "a32", "a33", "b1", "b2", "b3",
        ] {
            keys.push(format!("{base}_{side}"));
        }
    }
    keys
}

/// One scalar value as parsed from the config (number or string).
#[derive(Debug, Clone)]
enum RawValue {
    Number(f64),
    Text(String),
}

impl RawValue {
    fn as_f64(&self, key: &str) -> Result<f64, ScenarioError> {
        match self {
            RawValue::Number(v) => Ok(*v),
            RawValue::Text(s) => Err(ScenarioError::BadValue {
                key: key.into(),
                what: format!("expected a number, got `{s}`"),
            }),
        }
    }

    fn as_text(&self) -> String {
        match self {
            RawValue::Number(v) => format!("{v}"),
            RawValue::Text(s) => s.clone(),
        }
    }
}

/// Parses a scalar, accepting plain decimals and exact rationals `p/q`.
fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        return Some(v);
    }
    let (num, den) = s.split_once('/')?;
    let n = num.trim().parse::<f64>().ok()?;
    let d = den.trim().parse::<f64>().ok()?;
    if d == 0.0 {
        return None;
    }
    Some(n / d)
}

fn parse_kv(text: &str) -> Result<BTreeMap<String, RawValue>, ScenarioError> {
    let mut map = BTreeMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ScenarioError::BadLine {
                line: idx + 1,
                text: raw_line.trim().into(),
            });
        };
        let key = key.trim().to_string();
        let value = value.trim();
        let parsed = if key == "mode" || key == "format" {
            RawValue::Text(value.to_string())
        } else {
            RawValue::Number(parse_number(value).ok_or(ScenarioError::BadNumber {
                line: idx + 1,
                text: value.into(),
            })?)
        };
        map.insert(key, parsed);
    }
    Ok(map)
}

fn parse_json(text: &str) -> Result<BTreeMap<String, RawValue>, ScenarioError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| ScenarioError::BadJson(e.to_string()))?;
    let serde_json::Value::Object(obj) = value else {
        return Err(ScenarioError::BadJson("top level must be an object".into()));
    };
    let mut map = BTreeMap::new();
    for (key, v) in obj {
        let parsed = match v {
            serde_json::Value::Number(n) => RawValue::Number(n.as_f64().ok_or_else(|| {
                ScenarioError::BadValue {
                    key: key.clone(),
                    what: "not representable as f64".into(),
                }
            })?),
            serde_json::Value::String(s) => RawValue::Text(s),
            other => {
                return Err(ScenarioError::BadValue {
                    key,
                    what: format!("unsupported JSON value {other}"),
                })
            }
        };
        map.insert(key, parsed);
    }
    Ok(map)
}

/// Parses a scenario from config text (sniffing JSON by the leading `{`).
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let map = if text.trim_start().starts_with('{') {
        parse_json(text)?
    } else {
        parse_kv(text)?
    };
    scenario_from_map(&map)
}

fn take_f64(
    map: &BTreeMap<String, RawValue>,
    key: &str,
    mode: &str,
) -> Result<f64, ScenarioError> {
    map.get(key)
        .ok_or_else(|| ScenarioError::MissingKey(key.into(), mode.into()))?
        .as_f64(key)
}

fn scenario_from_map(map: &BTreeMap<String, RawValue>) -> Result<Scenario, ScenarioError> {
    let mode_text = map
        .get("mode")
        .ok_or(ScenarioError::MissingMode)?
        .as_text();
    let mode = match mode_text.as_str() {
        "canonical" => Mode::Canonical,
        "focus" => Mode::Focus,
        "quasinormal" => Mode::Quasinormal,
        "raw" => Mode::Raw,
        other => return Err(ScenarioError::UnknownMode(other.into())),
    };

    let param_keys: Vec<String> = match mode {
        Mode::Canonical => CANONICAL_KEYS.iter().map(|s| s.to_string()).collect(),
        Mode::Focus => FOCUS_KEYS.iter().map(|s| s.to_string()).collect(),
        Mode::Quasinormal => quasinormal_keys(),
        Mode::Raw => raw_keys(),
    };
    for key in map.keys() {
        if key == "mode" || OPTION_KEYS.contains(&key.as_str()) {
            continue;
        }
        if !param_keys.iter().any(|k| k == key) {
            return Err(ScenarioError::UnknownKey(key.clone(), mode_text.clone()));
        }
    }

    let g = |key: &str| take_f64(map, key, mode.name());
    let params = match mode {
        Mode::Canonical => ModeParams::Canonical(CanonicalParams {
            a_plus: g("a_plus")?,
            b_plus: g("b_plus")?,
            c_plus: g("c_plus")?,
            d_plus: g("d_plus")?,
            a_minus: g("a_minus")?,
            b_minus: g("b_minus")?,
            c_minus: g("c_minus")?,
            d_minus: g("d_minus")?,
            m: g("m")?,
        }),
        Mode::Focus => ModeParams::Focus(FocusCanonicalParams {
            a_plus: g("a_plus")?,
            b_plus: g("b_plus")?,
            a_minus: g("a_minus")?,
            b_minus: g("b_minus")?,
            m: g("m")?,
            d1: g("d1")?,
            d2: g("d2")?,
            t1: g("t1")?,
            t2: g("t2")?,
            a1: g("a1")?,
            a2: g("a2")?,
        }),
        Mode::Quasinormal => {
            let piece = |side: &str| -> Result<QuasinormalPiece, ScenarioError> {
                Ok(QuasinormalPiece {
                    a11: g(&format!("a11_{side}"))?,
                    a12: g(&format!("a12_{side}"))?,
                    a13: g(&format!("a13_{side}"))?,
                    a21: g(&format!("a21_{side}"))?,
                    a22: g(&format!("a22_{side}"))?,
                    a23: g(&format!("a23_{side}"))?,
                    a33: g(&format!("a33_{side}"))?,
                    b1: g(&format!("b1_{side}"))?,
                    b2: g(&format!("b2_{side}"))?,
                })
            };
            ModeParams::Quasinormal(QuasinormalParams {
                upper: piece("plus")?,
                lower: piece("minus")?,
            })
        }
        Mode::Raw => {
            let piece = |side: &str| -> Result<AffinePiece, ScenarioError> {
                let e = |base: &str| g(&format!("{base}_{side}"));
                Ok(AffinePiece {
                    a: [
                        [e("a11")?, e("a12")?, e("a13")?],
                        [e("a21")?, e("a22")?, e("a23")?],
                        [e("a31")?, e("a32")?, e("a33")?],
                    ],
                    b: [e("b1")?, e("b2")?, e("b3")?],
                })
            };
            ModeParams::Raw(PiecewiseSystem {
                upper: piece("plus")?,
                lower: piece("minus")?,
            })
        }
    };

    let mut options = AnalysisOptions::default();
    if let Some(v) = map.get("y_min") {
        options.y_min = v.as_f64("y_min")?;
    }
    if let Some(v) = map.get("y_max") {
        options.y_max = v.as_f64("y_max")?;
    }
    if let Some(v) = map.get("grid_nodes") {
        options.grid_nodes = v.as_f64("grid_nodes")? as usize;
    }
    if let Some(v) = map.get("surface_nodes") {
        options.surface_nodes = v.as_f64("surface_nodes")? as usize;
    }
    if let Some(v) = map.get("t_max") {
        options.t_max = Some(v.as_f64("t_max")?);
    }
    if let Some(v) = map.get("eps_disc") {
        options.eps_disc = v.as_f64("eps_disc")?;
    }
    if let Some(v) = map.get("seed") {
        options.seed = v.as_f64("seed")? as u64;
    }
    if !(options.y_min > 0.0 && options.y_max > options.y_min) {
        return Err(ScenarioError::BadValue {
            key: "y_min/y_max".into(),
            what: format!(
                "need 0 < y_min < y_max, got ({}, {})",
                options.y_min, options.y_max
            ),
        });
    }
    if options.grid_nodes < 2 {
        return Err(ScenarioError::BadValue {
            key: "grid_nodes".into(),
            what: "need at least 2 nodes".into(),
        });
    }

    let format = match map.get("format").map(|v| v.as_text()) {
        None => OutputFormat::Json,
        Some(s) if s == "json" => OutputFormat::Json,
        Some(s) if s == "csv" => OutputFormat::Csv,
        Some(other) => return Err(ScenarioError::BadFormat(other)),
    };

    Ok(Scenario {
        mode,
        params,
        options,
        format,
    })
}

/// Overrides one scenario key with a new numeric value (used by sweeps) and
/// re-validates the whole map.
pub fn override_key(text: &str, key: &str, value: f64) -> Result<Scenario, ScenarioError> {
    let mut map = if text.trim_start().starts_with('{') {
        parse_json(text)?
    } else {
        parse_kv(text)?
    };
    if !map.contains_key(key) {
        return Err(ScenarioError::BadValue {
            key: key.into(),
            what: "sweep parameter must be present in the base config".into(),
        });
    }
    map.insert(key.to_string(), RawValue::Number(value));
    scenario_from_map(&map)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE_1: &str = "\
# unique-cylinder fixture
mode = canonical
a_plus = 1/20
b_plus = 0
c_plus = -7/16
d_plus = 5/8
a_minus = 1
b_minus = 1
c_minus = 1/2
d_minus = 3/16
m = 1
";

    #[test]
    fn parses_kv_with_rationals() {
        let sc = parse_scenario(EXAMPLE_1).unwrap();
        assert_eq!(sc.mode, Mode::Canonical);
        let ModeParams::Canonical(cp) = sc.params else {
            panic!()
        };
        assert_eq!(cp.a_plus, 0.05);
        assert_eq!(cp.c_plus, -0.4375);
        assert_eq!(cp.d_minus, 0.1875);
        assert_eq!(sc.format, OutputFormat::Json);
    }

    #[test]
    fn parses_equivalent_json() {
        let json = r#"{
            "mode": "canonical",
            "a_plus": 0.05, "b_plus": 0, "c_plus": -0.4375, "d_plus": 0.625,
            "a_minus": 1, "b_minus": 1, "c_minus": 0.5, "d_minus": 0.1875,
            "m": 1
        }"#;
        let a = parse_scenario(EXAMPLE_1).unwrap();
        let b = parse_scenario(json).unwrap();
        let (ModeParams::Canonical(ca), ModeParams::Canonical(cb)) = (a.params, b.params) else {
            panic!()
        };
        assert_eq!(ca, cb);
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = format!("{EXAMPLE_1}\nbogus = 3\n");
        assert!(matches!(
            parse_scenario(&text),
            Err(ScenarioError::UnknownKey(k, _)) if k == "bogus"
        ));
    }

    #[test]
    fn rejects_missing_keys_and_mode() {
        assert!(matches!(
            parse_scenario("mode = canonical\na_plus = 1\n"),
            Err(ScenarioError::MissingKey(_, _))
        ));
        assert!(matches!(
            parse_scenario("a_plus = 1\n"),
            Err(ScenarioError::MissingMode)
        ));
    }

    #[test]
    fn rejects_cross_mode_keys() {
        // focus keys are not canonical keys
        let text = format!("{EXAMPLE_1}\nt1 = 0.5\n");
        assert!(matches!(
            parse_scenario(&text),
            Err(ScenarioError::UnknownKey(_, _))
        ));
    }

    #[test]
    fn options_parse_and_validate() {
        let text = format!("{EXAMPLE_1}\ny_min = 0.01\ny_max = 10\nseed = 7\nformat = csv\n");
        let sc = parse_scenario(&text).unwrap();
        assert_eq!(sc.options.y_min, 0.01);
        assert_eq!(sc.options.seed, 7);
        assert_eq!(sc.format, OutputFormat::Csv);
        let bad = format!("{EXAMPLE_1}\ny_min = 5\ny_max = 1\n");
        assert!(parse_scenario(&bad).is_err());
    }

    #[test]
    fn sweep_override_replaces_value() {
        let sc = override_key(EXAMPLE_1, "c_minus", 0.75).unwrap();
        let ModeParams::Canonical(cp) = sc.params else {
            panic!()
        };
        assert_eq!(cp.c_minus, 0.75);
        assert!(override_key(EXAMPLE_1, "nonexistent", 1.0).is_err());
    }
}
