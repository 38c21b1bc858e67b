//! Exact verification suites run by `hecke verify`.

use std::collections::HashMap;
use std::sync::Arc;

use hecke_core::algebra::{
    convolve, finite_group_oracle, identity_element, involution, structure_constants,
    HeckeElement,
};
use hecke_core::coset::{enumerate_ball, Caps, CosetStore, DoubleCosetId};
use hecke_core::group::{q, GroupElement, Perm};
use hecke_core::growth::{coset_depth_series, growth_series};
use hecke_core::length::{
    characteristic_length, check_length_invariants, indicator_length, word_length,
};
use hecke_core::pair::{perm_closure, HeckePairContext, Membership};
use hecke_core::Result;
use rand::Rng;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct SuiteResult {
    pub suite: String,
    pub pair: String,
    pub passed: bool,
    pub checked: usize,
    pub detail: String,
}

impl SuiteResult {
    fn new(suite: &str, pair: &str, passed: bool, checked: usize, detail: String) -> Self {
        SuiteResult { suite: suite.into(), pair: pair.into(), passed, checked, detail }
    }
}

/// Store covering a finite `H\G` completely, with every class known.
pub fn full_finite_store(ctx: Arc<HeckePairContext>, caps: Caps) -> Result<CosetStore> {
    let mut store = enumerate_ball(ctx, 0, caps)?;
    let mut r = 0;
    while r == 0 || store.depth_histogram()[r as usize] > 0 {
        r += 1;
        store.extend_radius(r)?;
    }
    store.classify_ball(r, caps.max_orbit)?;
    Ok(store)
}

/// Classes, `L`, `R`, `Δ` and all structure constants of the coset engine
/// against the exhaustive group-algebra oracle.
pub fn finite_oracle_equivalence(ctx: Arc<HeckePairContext>, caps: Caps) -> Result<SuiteResult> {
    let label = ctx.label.clone();
    let Membership::Finite { elements: h, .. } = &ctx.membership else {
        return Ok(SuiteResult::new("finite-oracle", &label, false, 0, "H is not finite".into()));
    };
    let degree = h[0].images.len();
    let gens: Vec<Perm> = ctx
        .g_generators
        .iter()
        .filter_map(|g| match g {
            GroupElement::Perm(p) => Some(p.clone()),
            _ => None,
        })
        .collect();
    let group = perm_closure(&gens, degree);
    let oracle = finite_group_oracle(&group, h)?;
    let mut store = full_finite_store(ctx.clone(), caps)?;
    let mut mismatches = Vec::new();
    let mut map: HashMap<usize, DoubleCosetId> = HashMap::new();
    let mut checked = 0;
    for (i, members) in oracle.classes.iter().enumerate() {
        let d = store.class_of(&GroupElement::Perm(members[0].clone()), caps.max_orbit)?;
        map.insert(i, d);
        let l = store.ensure_left_count(d, caps.max_orbit)?;
        let r = store.double_coset(d)?.r;
        let delta = store.delta(d, caps.max_orbit)?;
        checked += 3;
        if (l, r, &delta) != (oracle.l[i], oracle.r[i], &oracle.delta[i]) {
            mismatches.push(format!("class {i}: engine L={l} R={r}, oracle L={} R={}", oracle.l[i], oracle.r[i]));
        }
    }
    if store.num_double_cosets() != oracle.classes.len() {
        mismatches.push(format!(
            "engine has {} classes, oracle {}",
            store.num_double_cosets(),
            oracle.classes.len()
        ));
    }
    for i in 0..oracle.classes.len() {
        for j in 0..oracle.classes.len() {
            let engine = structure_constants(&mut store, map[&i], map[&j], caps.max_orbit)?;
            let mut engine: Vec<(DoubleCosetId, hecke_core::group::Q)> =
                engine.into_iter().map(|(d, n)| (d, q(n as i64))).collect();
            engine.sort();
            let mut expected: Vec<(DoubleCosetId, hecke_core::group::Q)> = oracle
                .structure_constants(i, j)
                .iter()
                .map(|(k, c)| (map[k], c.clone()))
                .collect();
            expected.sort();
            checked += 1;
            if engine != expected {
                mismatches.push(format!("T{i}*T{j}: engine {engine:?} oracle {expected:?}"));
            }
        }
    }
    Ok(SuiteResult::new(
        "finite-oracle",
        &label,
        mismatches.is_empty(),
        checked,
        if mismatches.is_empty() {
            format!("{} classes, |G| = {}, |H| = {}", oracle.classes.len(), group.len(), h.len())
        } else {
            mismatches.join("; ")
        },
    ))
}

/// Random element with 1 to 3 terms on `classes`, coefficients in `-3..=3`.
pub fn random_element<R: Rng>(
    store: &CosetStore,
    classes: &[DoubleCosetId],
    rng: &mut R,
) -> Result<HeckeElement> {
    let k = rng.gen_range(1..=3.min(classes.len()));
    let terms: Vec<_> = (0..k)
        .map(|_| {
            let d = classes[rng.gen_range(0..classes.len())];
            let num = rng.gen_range(-3i64..=3);
            let den = rng.gen_range(1i64..=2);
            (d, hecke_core::group::q_frac(num, den))
        })
        .collect();
    HeckeElement::from_terms(store, terms)
}

/// Associativity, two-sided unit, `(f∗g)* = g*∗f*` and `(f*)* = f`, exactly.
pub fn algebra_laws<R: Rng>(
    store: &mut CosetStore,
    classes: &[DoubleCosetId],
    cases: usize,
    rng: &mut R,
    max_orbit: usize,
) -> Result<SuiteResult> {
    let label = store.context().label.clone();
    let id = identity_element(store)?;
    let mut failures = Vec::new();
    for case in 0..cases {
        let f = random_element(store, classes, rng)?;
        let g = random_element(store, classes, rng)?;
        let h = random_element(store, classes, rng)?;
        let fg = convolve(store, &f, &g, max_orbit)?;
        let left = convolve(store, &fg, &h, max_orbit)?;
        let gh = convolve(store, &g, &h, max_orbit)?;
        let right = convolve(store, &f, &gh, max_orbit)?;
        if left != right {
            failures.push(format!("case {case}: associativity"));
        }
        if convolve(store, &id, &f, max_orbit)? != f || convolve(store, &f, &id, max_orbit)? != f {
            failures.push(format!("case {case}: unit"));
        }
        let fg_star = involution(store, &fg, max_orbit)?;
        let g_star = involution(store, &g, max_orbit)?;
        let f_star = involution(store, &f, max_orbit)?;
        if fg_star != convolve(store, &g_star, &f_star, max_orbit)? {
            failures.push(format!("case {case}: anti-multiplicativity"));
        }
        if involution(store, &f_star, max_orbit)? != f {
            failures.push(format!("case {case}: involutive"));
        }
    }
    Ok(SuiteResult::new(
        "algebra-laws",
        &label,
        failures.is_empty(),
        cases,
        if failures.is_empty() { format!("{cases} cases on {} classes", classes.len()) } else { failures.join("; ") },
    ))
}

/// Word, characteristic (when relatively unimodular, else the `L·R` variant)
/// and indicator lengths: zero on `H`, symmetric, subadditive over the
/// half-radius classes.
pub fn length_suite(store: &mut CosetStore, max_orbit: usize) -> Result<Vec<SuiteResult>> {
    let label = store.context().label.clone();
    let lw = word_length(store, max_orbit)?;
    let half = lw.classes_within((lw.radius / 2) as f64);
    let all: Vec<DoubleCosetId> = lw.classes().collect();
    let lc = match characteristic_length(store, &all, max_orbit, false) {
        Ok(l) => l,
        Err(hecke_core::HeckeError::NotRelativelyUnimodular(_)) => {
            characteristic_length(store, &all, max_orbit, true)?
        }
        Err(e) => return Err(e),
    };
    let li = indicator_length(store)?;
    let mut out = Vec::new();
    for l in [&lw, &lc, &li] {
        let rep = check_length_invariants(store, l, &half, max_orbit)?;
        out.push(SuiteResult::new(
            &format!("length-{:?}", l.kind),
            &label,
            rep.holds(),
            rep.symmetry_checked + rep.subadditivity_checked,
            format!(
                "zero_on_h={} symmetry_failures={:?} subadditivity_failures={:?}",
                rep.zero_on_h, rep.symmetry_failures, rep.subadditivity_failures
            ),
        ));
    }
    if store.context().h_generators.is_empty() {
        let r = lw.radius;
        let by_class = growth_series(store, &lw, r)?;
        let by_depth = coset_depth_series(store, r)?;
        out.push(SuiteResult::new(
            "growth-depth-identity",
            &label,
            by_class == by_depth,
            r as usize + 1,
            format!("ball counts {:?}", by_class.ball_counts),
        ));
    }
    Ok(out)
}
