//! The subcommands. Each returns an artifact and an exit code; errors are
//! mapped to codes by [`exit_code`].

use std::sync::Arc;

use hecke_core::coset::{unimodularity_check, CosetStore};
use hecke_core::growth::{classify_growth, coset_depth_series, growth_series, GrowthVerdict};
use hecke_core::length::{characteristic_length, word_length};
use hecke_core::pair::{catalog, HeckePairContext, CATALOG_LABELS};
use hecke_core::rd::{kesten_diagnostic, rd_profile, RdVerdict};
use hecke_core::{HeckeError, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::golden::{self, sample_ball};
use crate::output::{fmt_float, Artifact};
use crate::suites::{self, SuiteResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;
pub const EXIT_OBSTRUCTED: i32 = 4;
pub const EXIT_SUPERPOLYNOMIAL: i32 = 5;

pub struct Outcome {
    pub artifact: Artifact,
    pub code: i32,
}

pub fn exit_code(e: &HeckeError) -> i32 {
    match e {
        HeckeError::Config(_)
        | HeckeError::UnknownPair(_)
        | HeckeError::NotFinitelyGenerated(_)
        | HeckeError::Parse { .. } => EXIT_USAGE,
        HeckeError::CapExceeded { .. }
        | HeckeError::OrbitCapExceeded { .. }
        | HeckeError::BallIncomplete { .. } => EXIT_PARTIAL,
        _ => EXIT_FAILURE,
    }
}

fn is_cap(e: &HeckeError) -> bool {
    exit_code(e) == EXIT_PARTIAL
}

fn envelope(command: &str, cfg: &RunConfig, result: Value) -> Value {
    json!({
        "command": command,
        "seed": cfg.seed,
        "config": cfg.to_json(),
        "result": result,
    })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Artifact for a run stopped by a cap: the error and the config.
fn capped(command: &str, cfg: &RunConfig, e: &HeckeError) -> Outcome {
    let json = envelope(command, cfg, json!({ "partial": true, "error": e.to_string() }));
    Outcome {
        artifact: Artifact {
            name: command.to_string(),
            json,
            csv: format!("error\n{}\n", csv_field(&e.to_string())),
        },
        code: EXIT_PARTIAL,
    }
}

/// Runs `f`; a cap error becomes a partial artifact with exit code 3.
fn with_caps(command: &str, cfg: &RunConfig, f: impl FnOnce() -> Result<Outcome>) -> Result<Outcome> {
    match f() {
        Err(e) if is_cap(&e) => Ok(capped(command, cfg, &e)),
        other => other,
    }
}

fn ball(cfg: &RunConfig, r: u32) -> Result<CosetStore> {
    hecke_core::coset::enumerate_ball(cfg.pair.clone(), r, cfg.caps)
}

fn dc_csv(snapshot: &Value) -> String {
    let mut out = String::from("dc_id,rep,R,L,delta,inv\n");
    for d in snapshot["double_cosets"].as_array().into_iter().flatten() {
        let s = |k: &str| match &d[k] {
            Value::Null => String::new(),
            Value::String(s) => s.clone(),
            v => v.to_string(),
        };
        out += &format!(
            "{},{},{},{},{},{}\n",
            s("id"),
            csv_field(&s("rep")),
            s("R"),
            s("L"),
            s("delta"),
            s("inv")
        );
    }
    out
}

/// Ball enumeration plus classes, left counts and inverses. A cap hit
/// still writes what was built, flagged partial.
pub fn cmd_enumerate(cfg: &RunConfig) -> Result<Outcome> {
    let r = cfg.r_max.unwrap_or(3);
    if !cfg.pair.finitely_generated {
        return Err(HeckeError::NotFinitelyGenerated(cfg.pair_label.clone()));
    }
    let mut store = CosetStore::new(cfg.pair.clone(), cfg.caps);
    let build = |store: &mut CosetStore| -> Result<()> {
        store.extend_radius(r)?;
        store.seal();
        store.classify_ball(r, cfg.caps.max_orbit)?;
        store.fill_left_counts(cfg.caps.max_orbit)?;
        store.fill_inverses(cfg.caps.max_orbit)
    };
    let (partial, code, error) = match build(&mut store) {
        Ok(()) => (false, EXIT_OK, None),
        Err(e) if is_cap(&e) => (true, EXIT_PARTIAL, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    let snap = store.snapshot();
    let csv = dc_csv(&snap);
    let json = envelope(
        "enumerate",
        cfg,
        json!({
            "radius": r,
            "partial": partial,
            "error": error,
            "cosets": store.len(),
            "double_cosets": store.num_double_cosets(),
            "snapshot": snap,
        }),
    );
    Ok(Outcome { artifact: Artifact { name: "enumerate".into(), json, csv }, code })
}

/// Per-class table: counts, Δ, word length and characteristic length.
pub fn cmd_ltable(cfg: &RunConfig) -> Result<Outcome> {
    with_caps("ltable", cfg, || {
        let r = cfg.r_max.unwrap_or(3);
        let max_orbit = cfg.caps.max_orbit;
        let mut store = ball(cfg, r)?;
        let lw = word_length(&mut store, max_orbit)?;
        store.fill_left_counts(max_orbit)?;
        store.fill_inverses(max_orbit)?;
        let classes: Vec<_> = lw.classes().collect();
        for &d in &classes {
            store.delta(d, max_orbit)?;
        }
        let (lc, note) = match characteristic_length(&mut store, &classes, max_orbit, cfg.ltable_lr) {
            Ok(l) => (Some(l), None),
            Err(HeckeError::NotRelativelyUnimodular(w)) => (
                None,
                Some(format!("l_char omitted: not relatively unimodular ({w}); set ltable.lr=true for ln(L*R)")),
            ),
            Err(e) => return Err(e),
        };
        let mut csv = String::from("dc_id,rep,L,R,delta,l_word,l_char\n");
        let mut rows = Vec::new();
        for &d in &classes {
            let rec = store.double_coset(d)?;
            let l_char = lc.as_ref().and_then(|l| l.value(d));
            let delta = rec.delta.as_ref().map(hecke_core::group::render_q);
            csv += &format!(
                "{},{},{},{},{},{},{}\n",
                d.0,
                csv_field(&rec.rep.to_string()),
                opt(rec.l),
                rec.r,
                opt(delta.clone()),
                opt(lw.value(d).map(fmt_float)),
                opt(l_char.map(fmt_float)),
            );
            rows.push(json!({
                "dc_id": d.0,
                "rep": rec.rep.to_string(),
                "L": rec.l,
                "R": rec.r,
                "delta": delta,
                "inv": rec.inverse.map(|e| e.0),
                "l_word": lw.value(d),
                "l_word_partial": lw.is_partial(d),
                "l_char": l_char,
            }));
        }
        let json = envelope(
            "ltable",
            cfg,
            json!({
                "radius": r,
                "l_char_kind": lc.as_ref().map(|l| format!("{:?}", l.kind)),
                "note": note,
                "rows": rows,
            }),
        );
        Ok(Outcome { artifact: Artifact { name: "ltable".into(), json, csv }, code: EXIT_OK })
    })
}

fn default_growth_radius(label: &str) -> u32 {
    match label.split(':').next().unwrap_or("") {
        "z" if label == "z:1" => 40,
        "z" => 25,
        "dinf" => 40,
        "psl2z1p" | "sl2z1p" => 8,
        "bcp" => 6,
        _ => 6,
    }
}

/// Word-length growth series and its classification. Inconclusive exits 3.
pub fn cmd_growth(cfg: &RunConfig) -> Result<Outcome> {
    with_caps("growth", cfg, || {
        let r = cfg.r_max.unwrap_or_else(|| default_growth_radius(&cfg.pair_label));
        let mut store = ball(cfg, r)?;
        let lw = word_length(&mut store, cfg.caps.max_orbit)?;
        let series = growth_series(&store, &lw, r)?;
        let depth = coset_depth_series(&store, r)?;
        let class = classify_growth(&series, &cfg.growth)?;
        let code = if class.verdict == GrowthVerdict::Inconclusive { EXIT_PARTIAL } else { EXIT_OK };
        let json = envelope(
            "growth",
            cfg,
            json!({
                "radius": r,
                "series": series,
                "coset_depth_series": depth,
                "classification": class,
            }),
        );
        Ok(Outcome { artifact: Artifact { name: "growth".into(), json, csv: series.to_csv() }, code })
    })
}

/// RD profile with exit codes 0 compatible, 3 inconclusive, 4 obstructed,
/// 5 superpolynomial.
pub fn cmd_rd_profile(cfg: &RunConfig) -> Result<Outcome> {
    with_caps("rd-profile", cfg, || {
        let report = unimodularity_check(&cfg.pair, cfg.caps.max_orbit)?;
        let profile = if report.verdict {
            let mut store = ball(cfg, cfg.rd.store_radius())?;
            let lw = word_length(&mut store, cfg.caps.max_orbit)?;
            rd_profile(&mut store, &lw, &report, &cfg.rd)?
        } else {
            hecke_core::rd::obstructed_profile(&report, &cfg.rd)
        };
        let code = match profile.verdict {
            RdVerdict::PolynomialCompatible { .. } => EXIT_OK,
            RdVerdict::ObstructedNonunimodular => EXIT_OBSTRUCTED,
            RdVerdict::SuperpolynomialRatio => EXIT_SUPERPOLYNOMIAL,
            RdVerdict::Inconclusive => EXIT_PARTIAL,
        };
        let mut csv = String::from(
            "r,family,index,l1,l2,truncated_norm,truncated_radius,converged,moments_used,rho,lower_bound,ratio\n",
        );
        for rec in &profile.records {
            csv += &format!(
                "{},{:?},{},{},{},{},{},{},{},{},{},{}\n",
                rec.r,
                rec.family,
                rec.index,
                fmt_float(rec.l1),
                fmt_float(rec.l2),
                fmt_float(rec.truncated_norm),
                rec.truncated_radius,
                rec.truncated_converged,
                rec.moments_used,
                opt(rec.rho.map(fmt_float)),
                fmt_float(rec.lower_bound),
                fmt_float(rec.ratio),
            );
        }
        let json = envelope(
            "rd-profile",
            cfg,
            json!({ "unimodularity": report, "profile": profile }),
        );
        Ok(Outcome { artifact: Artifact { name: "rd-profile".into(), json, csv }, code })
    })
}

/// Amenability index of the default symmetric random-walk element.
pub fn cmd_kesten(cfg: &RunConfig) -> Result<Outcome> {
    with_caps("kesten", cfg, || {
        let k = &cfg.kesten;
        let report = unimodularity_check(&cfg.pair, cfg.caps.max_orbit)?;
        let mut store = ball(cfg, k.radius)?;
        let kr = kesten_diagnostic(&mut store, None, k.moments, &report, k.power, cfg.caps.max_orbit)?;
        let label = if kr.amenability_index >= k.threshold { "amenable-like" } else { "gap" };
        let mut csv = String::from("n,moment,rho\n");
        for (i, (m, rho)) in kr.moments.iter().zip(&kr.rho).enumerate() {
            csv += &format!("{},{},{}\n", i + 1, m, fmt_float(*rho));
        }
        let json = envelope(
            "kesten",
            cfg,
            json!({ "report": kr, "label": label, "threshold": k.threshold, "heuristic": true }),
        );
        Ok(Outcome { artifact: Artifact { name: "kesten".into(), json, csv }, code: EXIT_OK })
    })
}

pub const VERIFY_CASES: usize = 50;

/// Radius of the ball the algebra laws draw their supports from. Triple
/// products multiply `R`, so the fast-growing pairs use radius 2.
pub fn law_radius(label: &str) -> u32 {
    match label {
        "psl2z1p:2" | "sl2z1p:2" | "bc" | "bcp:5" => 2,
        _ => 3,
    }
}

/// Radius the length suite is run at.
pub fn length_radius(label: &str) -> u32 {
    match label.split(':').next().unwrap_or("") {
        "z" if label == "z:1" => 10,
        "z" | "dinf" => 8,
        "psl2z1p" | "sl2z1p" => 6,
        "bc" => 2,
        _ => 4,
    }
}

/// Invariant suites for one pair.
pub fn pair_suites(ctx: Arc<HeckePairContext>, cfg: &RunConfig, cases: usize) -> Result<Vec<SuiteResult>> {
    let max_orbit = cfg.caps.max_orbit;
    let label = ctx.label.clone();
    let mut out = Vec::new();
    let r = law_radius(&label);
    let mut store = sample_ball(ctx.clone(), r, cfg.caps)?;
    let classes = store.classify_ball(r, max_orbit)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    out.push(suites::algebra_laws(&mut store, &classes, cases, &mut rng, max_orbit)?);
    let mut store = sample_ball(ctx, length_radius(&label), cfg.caps)?;
    out.extend(suites::length_suite(&mut store, max_orbit)?);
    Ok(out)
}

/// Finite-oracle equivalence, invariant suites on every catalog pair and
/// the golden snapshots. Any failure exits 1.
pub fn cmd_verify(cfg: &RunConfig) -> Result<Outcome> {
    let mut results = Vec::new();
    for label in ["s3-h12", "s4-h12", "s4-h12-34"] {
        results.push(suites::finite_oracle_equivalence(Arc::new(catalog(label)?), cfg.caps)?);
    }
    for label in CATALOG_LABELS {
        results.extend(pair_suites(Arc::new(catalog(label)?), cfg, VERIFY_CASES)?);
    }
    results.extend(golden::check_all(cfg.caps)?);
    let passed = results.iter().all(|r| r.passed);
    let mut csv = String::from("suite,pair,passed,checked,detail\n");
    for r in &results {
        csv += &format!(
            "{},{},{},{},{}\n",
            r.suite,
            r.pair,
            r.passed,
            r.checked,
            csv_field(&r.detail)
        );
    }
    let json = envelope("verify", cfg, json!({ "passed": passed, "suites": results }));
    Ok(Outcome {
        artifact: Artifact { name: "verify".into(), json, csv },
        code: if passed { EXIT_OK } else { EXIT_FAILURE },
    })
}
