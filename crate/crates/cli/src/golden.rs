//! In-repo snapshots of every catalog pair at a small radius.

use std::path::Path;
use std::sync::Arc;

use hecke_core::coset::{enumerate_ball, Caps, CosetStore};
use hecke_core::pair::{catalog, HeckePairContext, CATALOG_LABELS};
use hecke_core::Result;
use serde_json::Value;

use crate::suites::SuiteResult;

pub fn radius(label: &str) -> u32 {
    match label {
        "z:1" | "dinf" => 4,
        "bc" => 2,
        _ => 3,
    }
}

pub fn file_name(label: &str) -> String {
    format!("{}.json", label.replace(':', "_"))
}

fn embedded(label: &str) -> Option<&'static str> {
    Some(match label {
        "sl2z1p:2" => include_str!("../golden/sl2z1p_2.json"),
        "psl2z1p:2" => include_str!("../golden/psl2z1p_2.json"),
        "bc" => include_str!("../golden/bc.json"),
        "bcp:2" => include_str!("../golden/bcp_2.json"),
        "bcp:3" => include_str!("../golden/bcp_3.json"),
        "bcp:5" => include_str!("../golden/bcp_5.json"),
        "z:1" => include_str!("../golden/z_1.json"),
        "z:2" => include_str!("../golden/z_2.json"),
        "dinf" => include_str!("../golden/dinf.json"),
        "s3-h12" => include_str!("../golden/s3-h12.json"),
        "s4-h12" => include_str!("../golden/s4-h12.json"),
        "s4-h12-34" => include_str!("../golden/s4-h12-34.json"),
        _ => return None,
    })
}

/// Ball of radius `r`. A pair that is not finitely generated is explored
/// with its sample generators instead.
pub fn sample_ball(ctx: Arc<HeckePairContext>, r: u32, caps: Caps) -> Result<CosetStore> {
    if ctx.finitely_generated {
        return enumerate_ball(ctx, r, caps);
    }
    let mut store = CosetStore::new(ctx, caps);
    store.extend_radius(r)?;
    store.seal();
    Ok(store)
}

/// Ball, classes, left counts and inverses, as a JSON snapshot.
pub fn snapshot(label: &str, caps: Caps) -> Result<Value> {
    let r = radius(label);
    let mut store = sample_ball(Arc::new(catalog(label)?), r, caps)?;
    store.classify_ball(r, caps.max_orbit)?;
    store.fill_left_counts(caps.max_orbit)?;
    store.fill_inverses(caps.max_orbit)?;
    Ok(store.snapshot())
}

pub fn render(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("snapshot serializes") + "\n"
}

pub fn check(label: &str, caps: Caps) -> Result<SuiteResult> {
    let fresh = render(&snapshot(label, caps)?);
    let (passed, detail) = match embedded(label) {
        None => (false, "no stored snapshot".to_string()),
        Some(stored) if stored == fresh => (true, format!("radius {}", radius(label))),
        Some(stored) => {
            let line = stored
                .lines()
                .zip(fresh.lines())
                .position(|(a, b)| a != b)
                .unwrap_or_else(|| stored.lines().count().min(fresh.lines().count()));
            (false, format!("differs from stored snapshot at line {}", line + 1))
        }
    };
    Ok(SuiteResult {
        suite: "golden".into(),
        pair: label.into(),
        passed,
        checked: 1,
        detail,
    })
}

pub fn check_all(caps: Caps) -> Result<Vec<SuiteResult>> {
    CATALOG_LABELS.iter().map(|l| check(l, caps)).collect()
}

/// Rewrites every snapshot file under `dir`.
pub fn bless(dir: &Path, caps: Caps) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir).map_err(|e| hecke_core::HeckeError::Config(e.to_string()))?;
    let mut written = Vec::new();
    for label in CATALOG_LABELS {
        let path = dir.join(file_name(label));
        std::fs::write(&path, render(&snapshot(label, caps)?))
            .map_err(|e| hecke_core::HeckeError::Config(format!("{}: {e}", path.display())))?;
        written.push(path.display().to_string());
    }
    Ok(written)
}
