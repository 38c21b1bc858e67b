//! Run configuration: catalog presets, an optional `key=value` file, `--set`
//! overrides and explicit flags, applied in that order.

use std::collections::BTreeMap;
use std::sync::Arc;

use hecke_core::coset::Caps;
use hecke_core::growth::GrowthConfig;
use hecke_core::pair::{catalog, custom_pair, HeckePairContext};
use hecke_core::rd::{Family, PowerIteration, RdConfig};
use hecke_core::{HeckeError, Result};
use serde::Serialize;
use serde_json::{json, Value};

/// Every recognized key. Anything else in a config file is rejected.
pub const KEYS: &[&str] = &[
    "pair",
    "rmax",
    "seed",
    "caps.max_cosets",
    "caps.max_orbit",
    "growth.delta",
    "growth.tail_fraction",
    "growth.min_r2",
    "rd.r_max",
    "rd.padding",
    "rd.moment_order",
    "rd.moment_budget",
    "rd.families",
    "rd.random_per_radius",
    "rd.poly_slope_max",
    "rd.stable_slope",
    "rd.s_grid",
    "rd.tol",
    "rd.max_iter",
    "kesten.moments",
    "kesten.radius",
    "kesten.threshold",
    "kesten.tol",
    "kesten.max_iter",
    "ltable.lr",
];

#[derive(Clone, Debug, Serialize)]
pub struct KestenConfig {
    pub moments: usize,
    pub radius: u32,
    /// Index below this value is reported as "gap" (heuristic).
    pub threshold: f64,
    pub power: PowerIteration,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub pair_label: String,
    pub pair: Arc<HeckePairContext>,
    pub r_max: Option<u32>,
    pub seed: u64,
    pub caps: Caps,
    pub growth: GrowthConfig,
    pub rd: RdConfig,
    pub kesten: KestenConfig,
    pub ltable_lr: bool,
}

/// Parses `key=value` lines; `#` starts a comment.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| HeckeError::Config(format!("line {}: expected key=value", n + 1)))?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            return Err(HeckeError::Config(format!("line {}: unknown key `{k}`", n + 1)));
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| HeckeError::Config(format!("bad value `{v}` for `{key}`")))
}

fn positive<T: std::str::FromStr + PartialOrd + Default>(key: &str, v: &str) -> Result<T> {
    let x: T = num(key, v)?;
    if x <= T::default() {
        return Err(HeckeError::Config(format!("`{key}` must be positive")));
    }
    Ok(x)
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',').map(|t| num(key, t.trim())).collect()
}

/// Kesten radius and moment count per catalog family.
fn kesten_preset(label: &str) -> (u32, usize) {
    match label.split(':').next().unwrap_or("") {
        "z" if label == "z:1" => (30, 20),
        "z" => (12, 10),
        "dinf" => (30, 20),
        "psl2z1p" | "sl2z1p" => (6, 8),
        "bcp" => (4, 6),
        _ => (8, 20),
    }
}

impl RunConfig {
    /// Resolves the pair, then layers the presets for it under `settings`.
    /// `pair_file` holds the text of a custom pair description.
    pub fn resolve(settings: &BTreeMap<String, String>, pair_file: Option<&str>) -> Result<Self> {
        let (pair_label, pair) = match pair_file {
            Some(text) => {
                let ctx = custom_pair(text)?;
                (ctx.label.clone(), ctx)
            }
            None => {
                let label = settings.get("pair").cloned().unwrap_or_else(|| "z:1".into());
                let ctx = catalog(&label)?;
                (label, ctx)
            }
        };
        let mut caps = Caps::default();
        let mut growth = GrowthConfig::default();
        let mut rd = RdConfig::for_pair(&pair_label);
        let (k_radius, k_moments) = kesten_preset(&pair_label);
        let mut kesten = KestenConfig {
            moments: k_moments,
            radius: k_radius,
            threshold: 0.95,
            power: PowerIteration::default(),
        };
        let mut r_max = None;
        let mut seed = 0;
        let mut ltable_lr = false;
        for (k, v) in settings {
            let k = k.as_str();
            match k {
                "pair" => {}
                "rmax" => r_max = Some(num(k, v)?),
                "seed" => seed = num(k, v)?,
                "caps.max_cosets" => caps.max_cosets = positive(k, v)?,
                "caps.max_orbit" => caps.max_orbit = positive(k, v)?,
                "growth.delta" => growth.delta = positive(k, v)?,
                "growth.tail_fraction" => growth.tail_fraction = positive(k, v)?,
                "growth.min_r2" => growth.min_r2 = num(k, v)?,
                "rd.r_max" => rd.r_max = num(k, v)?,
                "rd.padding" => rd.padding = num(k, v)?,
                "rd.moment_order" => rd.moment_order = positive(k, v)?,
                "rd.moment_budget" => rd.moment_budget = positive(k, v)?,
                "rd.families" => {
                    rd.families = v
                        .split(',')
                        .map(|t| {
                            Family::parse(t.trim()).ok_or_else(|| {
                                HeckeError::Config(format!("unknown family `{}`", t.trim()))
                            })
                        })
                        .collect::<Result<_>>()?
                }
                "rd.random_per_radius" => rd.random_per_radius = num(k, v)?,
                "rd.poly_slope_max" => rd.poly_slope_max = num(k, v)?,
                "rd.stable_slope" => rd.stable_slope = num(k, v)?,
                "rd.s_grid" => rd.s_grid = list(k, v)?,
                "rd.tol" => rd.power.tol = positive(k, v)?,
                "rd.max_iter" => rd.power.max_iter = positive(k, v)?,
                "kesten.moments" => kesten.moments = positive(k, v)?,
                "kesten.radius" => kesten.radius = num(k, v)?,
                "kesten.threshold" => kesten.threshold = num(k, v)?,
                "kesten.tol" => kesten.power.tol = positive(k, v)?,
                "kesten.max_iter" => kesten.power.max_iter = positive(k, v)?,
                "ltable.lr" => ltable_lr = num(k, v)?,
                other => return Err(HeckeError::Config(format!("unknown key `{other}`"))),
            }
        }
        rd.seed = seed;
        rd.max_orbit = caps.max_orbit;
        Ok(RunConfig {
            pair_label,
            pair: Arc::new(pair),
            r_max,
            seed,
            caps,
            growth,
            rd,
            kesten,
            ltable_lr,
        })
    }

    /// Every effective setting, defaults included.
    pub fn to_json(&self) -> Value {
        json!({
            "pair": self.pair_label,
            "rmax": self.r_max,
            "seed": self.seed,
            "caps": { "max_cosets": self.caps.max_cosets, "max_orbit": self.caps.max_orbit },
            "growth": self.growth,
            "rd": self.rd,
            "kesten": self.kesten,
            "ltable": { "lr": self.ltable_lr },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layered_settings() {
        let mut s = parse_kv("pair = psl2z1p:2\n# comment\nseed=7\nrd.s_grid=0.5,1\n").unwrap();
        s.insert("rd.r_max".into(), "3".into());
        let cfg = RunConfig::resolve(&s, None).unwrap();
        assert_eq!(cfg.pair_label, "psl2z1p:2");
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.rd.seed, 7);
        assert_eq!(cfg.rd.r_max, 3);
        assert_eq!(cfg.rd.padding, RdConfig::for_pair("psl2z1p:2").padding);
        assert_eq!(cfg.rd.s_grid, vec![0.5, 1.0]);
        assert_eq!(cfg.kesten.moments, 8);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_kv("nonsense=1").is_err());
        assert!(parse_kv("seed").is_err());
        let s = parse_kv("caps.max_orbit=0").unwrap();
        assert!(RunConfig::resolve(&s, None).is_err());
        let s = parse_kv("pair=nope").unwrap();
        assert_eq!(RunConfig::resolve(&s, None).unwrap_err(), HeckeError::UnknownPair("nope".into()));
    }
}
