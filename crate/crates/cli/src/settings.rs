//! Configuration: a JSON file overlaid with command-line flags.

use std::path::{Path, PathBuf};

use lmcf::solitons::{FamilyDescriptor, SolitonFamily, SolitonKind, Window};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::output::Failure;

pub const DEFAULT_SEED: u64 = 42;

fn default_seed() -> u64 {
    DEFAULT_SEED
}

/// Keys shared by every experiment, wrapped around the command's own settings.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Config<S> {
    #[serde(default)]
    pub experiment: Option<String>,
    /// Output directory. Not embedded in reports, so runs into different
    /// directories stay byte-identical.
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySpec>,
    #[serde(flatten)]
    pub settings: S,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    #[serde(default)]
    pub u: Option<[f64; 2]>,
    #[serde(default)]
    pub v: Option<[f64; 2]>,
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default)]
    pub hv: Option<f64>,
    #[serde(default)]
    pub component: Option<usize>,
}

/// Family descriptor as written in configs; anything missing gets a per-kind default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    #[serde(default)]
    pub kind: Option<SolitonKind>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub shoot: Option<f64>,
    #[serde(default)]
    pub window: Option<WindowSpec>,
    #[serde(default)]
    pub profile: Option<String>,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub span: Option<f64>,
}

/// Window used when a config does not give one.
pub fn default_window(kind: SolitonKind, h: f64) -> Window {
    match kind {
        SolitonKind::Plane => Window::square(2.0, h),
        SolitonKind::GrimReaper => Window::grim_reaper([-1.4, 1.4], [-1.0, 1.0], h).expect("fixed window is valid"),
        SolitonKind::JltTranslator => Window::square(3.0, h),
        SolitonKind::Expander => Window::new([-2.0, 2.0], [-3.0, 3.0], h),
        SolitonKind::Product => Window::new([0.0, 1.0], [-1.0, 1.0], 0.0025).with_hv(h),
    }
}

impl FamilySpec {
    /// The fully resolved form of a descriptor, for embedding in reports.
    pub fn from_descriptor(d: &FamilyDescriptor) -> Self {
        Self {
            kind: Some(d.kind),
            alpha: d.alpha,
            shoot: d.shoot,
            window: Some(WindowSpec {
                u: Some(d.window.u),
                v: Some(d.window.v),
                h: Some(d.window.h),
                hv: Some(d.window.hv()),
                component: Some(d.window.component),
            }),
            profile: d.profile.clone(),
            radius: d.radius,
            span: d.span,
        }
    }

    pub fn kind_or(&self, default: SolitonKind) -> SolitonKind {
        self.kind.unwrap_or(default)
    }

    /// Fills in defaults and returns the descriptor together with the node spacing.
    pub fn resolve(
        &self,
        default_kind: SolitonKind,
        h: Option<f64>,
        default_h: f64,
    ) -> Result<FamilyDescriptor, Failure> {
        let kind = self.kind_or(default_kind);
        let ws = self.window.clone().unwrap_or_default();
        let h = h.or(ws.h).unwrap_or(default_h);
        if !(h > 0.0 && h.is_finite()) {
            return Err(Failure::Validation(format!("spacing h must be positive, got {h}")));
        }
        let mut window = default_window(kind, h);
        if kind != SolitonKind::Product {
            window.h = h;
        }
        if let Some(u) = ws.u {
            window.u = u;
        }
        if let Some(v) = ws.v {
            window.v = v;
        }
        if let Some(hv) = ws.hv {
            window.hv = Some(hv);
        }
        if let Some(c) = ws.component {
            window.component = c;
        }
        let needs_shoot = matches!(kind, SolitonKind::JltTranslator | SolitonKind::Expander);
        let desc = FamilyDescriptor {
            kind,
            alpha: match kind {
                SolitonKind::Plane => Some(self.alpha.unwrap_or(0.0)),
                _ => self.alpha,
            },
            shoot: if needs_shoot {
                Some(self.shoot.unwrap_or(1.0))
            } else {
                self.shoot
            },
            window,
            profile: match kind {
                SolitonKind::Product => Some(self.profile.clone().unwrap_or_else(|| "circle".into())),
                _ => self.profile.clone(),
            },
            radius: match kind {
                SolitonKind::Product => Some(self.radius.unwrap_or(1.0)),
                _ => self.radius,
            },
            span: if needs_shoot {
                Some(self.span.unwrap_or(lmcf::solitons::DEFAULT_CURVE_SPAN))
            } else {
                self.span
            },
        };
        if let Some(s) = desc.shoot {
            if !(s > 0.0) {
                return Err(Failure::Validation(format!("shoot must be positive, got {s}")));
            }
        }
        let w = &desc.window;
        if !(w.u[0] < w.u[1] && w.v[0] < w.v[1] && w.hv() > 0.0) {
            return Err(Failure::Validation(format!("malformed window {w:?}")));
        }
        Ok(desc)
    }
}

pub fn build_family(desc: &FamilyDescriptor) -> Result<SolitonFamily, Failure> {
    desc.build().map_err(|e| match e {
        lmcf::Error::Invalid(m) => Failure::Validation(m),
        e => Failure::numerical("construct-family", e),
    })
}

/// Family flags shared by the soliton-based commands.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct FamilyArgs {
    /// plane, grim-reaper, jlt, expander or product.
    #[arg(long = "family")]
    pub kind: Option<String>,
    /// Angle of the plane family.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Shooting parameter of the expander curve.
    #[arg(long)]
    pub shoot: Option<f64>,
    /// Arc-length half span of the expander curve.
    #[arg(long)]
    pub span: Option<f64>,
    /// Product profile: circle, ellipse, looped or line.
    #[arg(long)]
    pub profile: Option<String>,
    /// Radius (or scale) of the product profile.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Parameter window `u0,u1,v0,v1`.
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    pub window: Option<NumList>,
    /// Spacing in `v` when it differs from `--h`.
    #[arg(long)]
    pub hv: Option<f64>,
}

impl FamilyArgs {
    pub fn overlay(&self) -> Result<Value, Failure> {
        let mut family = Map::new();
        if let Some(k) = &self.kind {
            family.insert("kind".into(), Value::String(k.clone()));
        }
        insert_opt(&mut family, "alpha", self.alpha);
        insert_opt(&mut family, "shoot", self.shoot);
        insert_opt(&mut family, "span", self.span);
        insert_opt(&mut family, "profile", self.profile.clone());
        insert_opt(&mut family, "radius", self.radius);
        let mut window = Map::new();
        if let Some(NumList(w)) = &self.window {
            if w.len() != 4 {
                return Err(Failure::Validation("--window expects u0,u1,v0,v1".into()));
            }
            window.insert("u".into(), serde_json::json!([w[0], w[1]]));
            window.insert("v".into(), serde_json::json!([w[2], w[3]]));
        }
        insert_opt(&mut window, "hv", self.hv);
        if !window.is_empty() {
            family.insert("window".into(), Value::Object(window));
        }
        let mut out = Map::new();
        if !family.is_empty() {
            out.insert("family".into(), Value::Object(family));
        }
        Ok(Value::Object(out))
    }
}

/// Flags every subcommand accepts.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct CommonArgs {
    /// JSON config; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Node spacing.
    #[arg(long)]
    pub h: Option<f64>,
    /// Seed for randomized sampling [default: 42].
    #[arg(long)]
    pub seed: Option<u64>,
}

impl CommonArgs {
    pub fn overlay(&self) -> Value {
        let mut m = Map::new();
        insert_opt(&mut m, "out", self.out.as_ref().map(|p| p.display().to_string()));
        insert_opt(&mut m, "h", self.h);
        insert_opt(&mut m, "seed", self.seed);
        Value::Object(m)
    }
}

pub fn insert_opt<T: Serialize>(m: &mut Map<String, Value>, key: &str, v: Option<T>) {
    if let Some(v) = v {
        m.insert(key.into(), serde_json::to_value(v).expect("plain values serialize"));
    }
}

/// Parses a number; `m e x` with a fractional exponent (`1e-1.5`) is read as `m * 10^x`.
pub fn parse_number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    if let Ok(x) = s.parse::<f64>() {
        return Ok(x);
    }
    let bad = || format!("`{s}` is not a number");
    let (m, e) = s.split_once(['e', 'E']).ok_or_else(bad)?;
    let m: f64 = m.parse().map_err(|_| bad())?;
    let e: f64 = e.parse().map_err(|_| bad())?;
    Ok(m * 10f64.powf(e))
}

/// Comma-separated numbers given as one flag value.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct NumList(pub Vec<f64>);

pub fn parse_list(s: &str) -> Result<NumList, String> {
    s.split(',').map(parse_number).collect::<Result<_, _>>().map(NumList)
}

/// Recursively overlays `top` onto `base`; objects merge key by key.
pub fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, t) => *b = t,
    }
}

pub fn read_config(path: Option<&Path>) -> Result<Value, Failure> {
    let Some(path) = path else {
        return Ok(Value::Object(Map::new()));
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("cannot read config {}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::Validation(format!("config {} is not valid JSON: {e}", path.display())))?;
    if !v.is_object() {
        return Err(Failure::Validation("config must be a JSON object".into()));
    }
    Ok(v)
}

/// Top-level keys of `input` that the resolved config does not know.
fn unknown_keys(input: &Value, resolved: &Value) -> Vec<String> {
    let (Some(i), Some(r)) = (input.as_object(), resolved.as_object()) else {
        return Vec::new();
    };
    i.keys()
        .filter(|k| k.as_str() != "out" && !r.contains_key(k.as_str()))
        .cloned()
        .collect()
}

/// Reads the config file, overlays the flags and deserializes.
pub fn resolve<S: DeserializeOwned + Serialize>(common: &CommonArgs, overlays: &[Value]) -> Result<Config<S>, Failure> {
    let mut v = read_config(common.config.as_deref())?;
    merge(&mut v, common.overlay());
    for o in overlays {
        merge(&mut v, o.clone());
    }
    let cfg: Config<S> =
        serde_json::from_value(v.clone()).map_err(|e| Failure::Validation(format!("invalid config: {e}")))?;
    let back = serde_json::to_value(&cfg).expect("config serializes");
    let unknown = unknown_keys(&v, &back);
    if !unknown.is_empty() {
        return Err(Failure::Validation(format!(
            "unknown config keys: {}",
            unknown.join(", ")
        )));
    }
    Ok(cfg)
}

/// Serializes a flag struct, dropping unset options.
pub fn flags<T: Serialize>(t: &T) -> Value {
    fn strip(v: Value) -> Value {
        match v {
            Value::Object(m) => Value::Object(
                m.into_iter()
                    .filter(|(_, v)| !v.is_null())
                    .map(|(k, v)| (k, strip(v)))
                    .collect(),
            ),
            v => v,
        }
    }
    strip(serde_json::to_value(t).expect("flags serialize"))
}

pub fn positive(name: &str, x: f64) -> Result<(), Failure> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Failure::Validation(format!("`{name}` must be positive, got {x}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractional_exponents() {
        assert_eq!(parse_number("1e-2").unwrap(), 0.01);
        assert!((parse_number("1e-1.5").unwrap() - 10f64.powf(-1.5)).abs() < 1e-18);
        assert_eq!(parse_list("1e-1,-0.5").unwrap(), NumList(vec![0.1, -0.5]));
        assert!(parse_number("x").is_err());
    }

    #[test]
    fn merge_overrides_leaves() {
        let mut a = serde_json::json!({"h": 1, "family": {"kind": "jlt", "shoot": 2}});
        merge(&mut a, serde_json::json!({"family": {"shoot": 3}}));
        assert_eq!(a, serde_json::json!({"h": 1, "family": {"kind": "jlt", "shoot": 3}}));
    }
}
