//! Length functions on a pair: bi-H-invariant, symmetric, subadditive,
//! vanishing on `H`. Values live on double cosets.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use num_bigint::BigInt;
use num_traits::Zero;
use rand::Rng;
use serde::Serialize;

use crate::algebra::{ln_abs_q, structure_constants};
use crate::coset::{unimodularity_check, CosetStore, DoubleCosetId};
use crate::error::{HeckeError, Result};
use crate::group::{q, render_q, GroupElement, Q};
use crate::pair::HeckePairContext;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LengthKind {
    /// Schreier-graph distance from `He`, minimized over the class.
    WordSchreier,
    /// `ln L`.
    Characteristic,
    /// `ln (L·R)`, usable without relative unimodularity.
    CharacteristicLr,
    /// 0 on `H`, 1 elsewhere.
    Indicator,
    Custom,
}

#[derive(Clone, Debug)]
pub struct LengthFunction {
    pub kind: LengthKind,
    store_id: u64,
    values: BTreeMap<DoubleCosetId, f64>,
    /// Exact value for word and indicator lengths; `exp(l)` (an integer) for
    /// the characteristic variants.
    exact: BTreeMap<DoubleCosetId, Q>,
    /// Classes that reach past the enumerated ball.
    partial: BTreeSet<DoubleCosetId>,
    /// Radius of the ball the values were read from.
    pub radius: u32,
    pub note: String,
}

impl LengthFunction {
    pub fn custom(store: &CosetStore, values: BTreeMap<DoubleCosetId, f64>, note: &str) -> Self {
        LengthFunction {
            kind: LengthKind::Custom,
            store_id: store.store_id(),
            values,
            exact: BTreeMap::new(),
            partial: BTreeSet::new(),
            radius: store.radius_complete(),
            note: note.into(),
        }
    }

    pub fn store_id(&self) -> u64 {
        self.store_id
    }

    pub fn value(&self, d: DoubleCosetId) -> Option<f64> {
        self.values.get(&d).copied()
    }

    pub fn exact(&self, d: DoubleCosetId) -> Option<&Q> {
        self.exact.get(&d)
    }

    /// Exact value when the kind stores one directly.
    pub fn exact_value(&self, d: DoubleCosetId) -> Option<&Q> {
        match self.kind {
            LengthKind::WordSchreier | LengthKind::Indicator => self.exact.get(&d),
            _ => None,
        }
    }

    pub fn is_partial(&self, d: DoubleCosetId) -> bool {
        self.partial.contains(&d)
    }

    pub fn classes(&self) -> impl Iterator<Item = DoubleCosetId> + '_ {
        self.values.keys().copied()
    }

    pub fn values(&self) -> &BTreeMap<DoubleCosetId, f64> {
        &self.values
    }

    /// Classes with `l(d) ≤ r`.
    pub fn classes_within(&self, r: f64) -> Vec<DoubleCosetId> {
        self.values.iter().filter(|(_, &v)| v <= r).map(|(d, _)| *d).collect()
    }

    /// Whether `l(d) ≤ l(d1) + l(d2)`, decided exactly when the kind allows.
    /// `None` when a value is missing.
    pub fn subadditive_at(
        &self,
        d: DoubleCosetId,
        d1: DoubleCosetId,
        d2: DoubleCosetId,
    ) -> Option<bool> {
        match self.kind {
            LengthKind::WordSchreier | LengthKind::Indicator => {
                let (a, b, c) = (self.exact.get(&d)?, self.exact.get(&d1)?, self.exact.get(&d2)?);
                Some(*a <= b + c)
            }
            LengthKind::Characteristic | LengthKind::CharacteristicLr => {
                let (a, b, c) = (self.exact.get(&d)?, self.exact.get(&d1)?, self.exact.get(&d2)?);
                Some(*a <= b * c)
            }
            LengthKind::Custom => {
                let (a, b, c) = (self.value(d)?, self.value(d1)?, self.value(d2)?);
                Some(a <= b + c + 1e-12 * (1.0 + b + c))
            }
        }
    }

    fn equal_at(&self, d: DoubleCosetId, e: DoubleCosetId) -> Option<bool> {
        match (self.exact.get(&d), self.exact.get(&e)) {
            (Some(a), Some(b)) => Some(a == b),
            _ => Some((self.value(d)? - self.value(e)?).abs() <= 1e-12),
        }
    }

    /// `(dc, rep, L, R, Δ, l)` rows for every valued class.
    pub fn table(&self, store: &CosetStore) -> Vec<LengthRow> {
        self.values
            .iter()
            .filter_map(|(&d, &v)| {
                let rec = store.double_coset(d).ok()?;
                Some(LengthRow {
                    dc: d.0,
                    rep: rec.rep.to_string(),
                    l_count: rec.l,
                    r_count: rec.r,
                    delta: rec.delta.as_ref().map(render_q),
                    value: v,
                    exact: self.exact.get(&d).map(render_q),
                    partial: self.partial.contains(&d),
                })
            })
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LengthRow {
    pub dc: usize,
    pub rep: String,
    pub l_count: Option<usize>,
    pub r_count: usize,
    pub delta: Option<String>,
    pub value: f64,
    pub exact: Option<String>,
    pub partial: bool,
}

/// Word length on the pair for the generating set `HŜH`: `l(HxH)` is the
/// least `n` with `x ∈ (HŜH)ⁿ`. Computed as a breadth-first search on
/// classes, where `d` reaches the class of `Hxh·s` for every member `Hxh`
/// of `d` and every `s ∈ Ŝ`. Values up to the store radius are exact.
///
/// The minimum Schreier depth over a class only sees words in `HŜⁿH` and
/// can fail subadditivity. The two agree when `H` is trivial.
pub fn word_length(store: &mut CosetStore, max_orbit: usize) -> Result<LengthFunction> {
    if store.is_empty() {
        return Err(HeckeError::EmptyStore);
    }
    let radius = store.radius_complete();
    store.classify_ball(radius, max_orbit)?;
    let steps: Vec<GroupElement> = {
        let ctx = store.context();
        store.generators().iter().filter(|s| !ctx.in_h(s)).cloned().collect()
    };
    let mut level = BTreeMap::from([(store.identity_class()?, 0u32)]);
    let mut frontier = vec![store.identity_class()?];
    for depth in 1..=radius {
        let mut next = Vec::new();
        for d in frontier {
            let members = store.double_coset(d)?.members.clone();
            for c in members {
                let rep = store.rep(c).clone();
                for s in &steps {
                    let e = store.class_of(&rep.mul(s)?, max_orbit)?;
                    if let std::collections::btree_map::Entry::Vacant(v) = level.entry(e) {
                        v.insert(depth);
                        next.push(e);
                    }
                }
            }
        }
        next.sort();
        frontier = next;
    }
    let mut lf = LengthFunction {
        kind: LengthKind::WordSchreier,
        store_id: store.store_id(),
        values: BTreeMap::new(),
        exact: BTreeMap::new(),
        partial: BTreeSet::new(),
        radius,
        note: format!("class distance for the generating set HSH, exact up to {radius}"),
    };
    for (d, n) in level {
        let rec = store.double_coset(d)?;
        if rec.members.iter().any(|&c| store.word_length(c).map_or(true, |w| w > radius)) {
            lf.partial.insert(d);
        }
        lf.values.insert(d, n as f64);
        lf.exact.insert(d, q(n as i64));
    }
    Ok(lf)
}

/// `l(d) = ln L(d)` (or `ln L(d)R(d)` with `use_lr`) on the given classes.
/// Without `use_lr` the pair must be relatively unimodular.
pub fn characteristic_length(
    store: &mut CosetStore,
    classes: &[DoubleCosetId],
    max_orbit: usize,
    use_lr: bool,
) -> Result<LengthFunction> {
    if !use_lr {
        let report = unimodularity_check(store.context(), max_orbit)?;
        if let Some((g, delta)) = report.witness() {
            return Err(HeckeError::NotRelativelyUnimodular(format!(
                "Δ({g}) = {}",
                render_q(delta)
            )));
        }
    }
    let mut lf = LengthFunction {
        kind: if use_lr { LengthKind::CharacteristicLr } else { LengthKind::Characteristic },
        store_id: store.store_id(),
        values: BTreeMap::new(),
        exact: BTreeMap::new(),
        partial: BTreeSet::new(),
        radius: store.radius_complete(),
        note: if use_lr { "ln(L*R)".into() } else { "ln L".into() },
    };
    for &d in classes {
        let l = store.ensure_left_count(d, max_orbit)?;
        if !use_lr && store.delta(d, max_orbit)? != q(1) {
            return Err(HeckeError::NotRelativelyUnimodular(store.double_coset(d)?.rep.to_string()));
        }
        let r = store.double_coset(d)?.r;
        let e = if use_lr { BigInt::from(l) * BigInt::from(r) } else { BigInt::from(l) };
        let e = Q::from_integer(e);
        lf.values.insert(d, ln_abs_q(&e));
        lf.exact.insert(d, e);
    }
    Ok(lf)
}

/// 0 on `HeH`, 1 on every other known class.
pub fn indicator_length(store: &mut CosetStore) -> Result<LengthFunction> {
    let e = store.identity_class()?;
    let mut lf = LengthFunction {
        kind: LengthKind::Indicator,
        store_id: store.store_id(),
        values: BTreeMap::new(),
        exact: BTreeMap::new(),
        partial: BTreeSet::new(),
        radius: store.radius_complete(),
        note: "0 on H, 1 elsewhere".into(),
    };
    for i in 0..store.num_double_cosets() {
        let d = DoubleCosetId(i);
        let v = if d == e { 0 } else { 1 };
        lf.values.insert(d, v as f64);
        lf.exact.insert(d, q(v));
    }
    Ok(lf)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct LengthInvariantReport {
    pub kind: String,
    pub zero_on_h: bool,
    pub symmetry_checked: usize,
    pub symmetry_failures: Vec<(usize, usize)>,
    pub subadditivity_checked: usize,
    /// `(d1, d2, d)` with `l(d) > l(d1) + l(d2)`.
    pub subadditivity_failures: Vec<(usize, usize, usize)>,
}

impl LengthInvariantReport {
    pub fn holds(&self) -> bool {
        self.zero_on_h && self.symmetry_failures.is_empty() && self.subadditivity_failures.is_empty()
    }
}

/// Checks `l(HeH) = 0`, `l(inv d) = l(d)` on every valued class, and
/// `l(d) ≤ l(d₁) + l(d₂)` over `supp(T_{d₁} ∗ T_{d₂})` for all pairs drawn
/// from `pair_classes`.
pub fn check_length_invariants(
    store: &mut CosetStore,
    lf: &LengthFunction,
    pair_classes: &[DoubleCosetId],
    max_orbit: usize,
) -> Result<LengthInvariantReport> {
    let e = store.identity_class()?;
    let mut report = LengthInvariantReport {
        kind: format!("{:?}", lf.kind),
        zero_on_h: lf.value(e) == Some(0.0),
        ..Default::default()
    };
    let classes: Vec<DoubleCosetId> = lf.classes().collect();
    for d in classes {
        let inv = store.invert_double_coset(d, max_orbit)?;
        if let Some(ok) = lf.equal_at(d, inv) {
            report.symmetry_checked += 1;
            if !ok {
                report.symmetry_failures.push((d.0, inv.0));
            }
        }
    }
    for &d1 in pair_classes {
        for &d2 in pair_classes {
            for (d, _) in structure_constants(store, d1, d2, max_orbit)? {
                if let Some(ok) = lf.subadditive_at(d, d1, d2) {
                    report.subadditivity_checked += 1;
                    if !ok {
                        report.subadditivity_failures.push((d1.0, d2.0, d.0));
                    }
                }
            }
        }
    }
    Ok(report)
}

/// `L(d) ≤ L(d₁)·L(d₂)` for every `d` in `supp(T_{d₁} ∗ T_{d₂})`, exactly.
/// Returns the violating triples.
pub fn check_left_count_submultiplicative(
    store: &mut CosetStore,
    classes: &[DoubleCosetId],
    max_orbit: usize,
) -> Result<Vec<(usize, usize, usize)>> {
    let mut bad = Vec::new();
    for &d1 in classes {
        for &d2 in classes {
            let l1 = store.ensure_left_count(d1, max_orbit)?;
            let l2 = store.ensure_left_count(d2, max_orbit)?;
            for (d, _) in structure_constants(store, d1, d2, max_orbit)? {
                if store.ensure_left_count(d, max_orbit)? > l1 * l2 {
                    bad.push((d1.0, d2.0, d.0));
                }
            }
        }
    }
    Ok(bad)
}

/// Word lengths of group elements, by BFS over `Ŝ` from the identity.
#[derive(Clone, Debug)]
pub struct ElementLengths {
    pub values: HashMap<GroupElement, u64>,
    pub radius: u32,
}

impl ElementLengths {
    pub fn get(&self, g: &GroupElement) -> Option<u64> {
        self.values.get(g).copied()
    }

    /// Elements of length at most `r`, sorted.
    pub fn ball(&self, r: u32) -> Vec<GroupElement> {
        let mut v: Vec<GroupElement> =
            self.values.iter().filter(|(_, &l)| l <= r as u64).map(|(g, _)| g.clone()).collect();
        v.sort();
        v
    }
}

pub fn element_word_lengths(ctx: &HeckePairContext, radius: u32) -> Result<ElementLengths> {
    let gens = ctx.symmetric_generators();
    let e = ctx.identity();
    let mut values = HashMap::from([(e.clone(), 0u64)]);
    let mut queue = VecDeque::from([e]);
    while let Some(x) = queue.pop_front() {
        let lx = values[&x];
        if lx >= radius as u64 {
            continue;
        }
        for s in &gens {
            let y = x.mul(s)?;
            if !values.contains_key(&y) {
                values.insert(y.clone(), lx + 1);
                queue.push_back(y);
            }
        }
    }
    Ok(ElementLengths { values, radius })
}

#[derive(Clone, Debug, Serialize)]
pub struct AveragedRow {
    pub element: String,
    pub l: u64,
    pub l1: u64,
    pub l_prime: u64,
    pub bound: u64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AveragedLength {
    pub h_order: usize,
    pub h_length_sum: u64,
    pub radius: u32,
    pub rows: Vec<AveragedRow>,
    pub bound_holds: bool,
    pub kernel_contains_h: bool,
    #[serde(skip)]
    pub l1: HashMap<GroupElement, u64>,
    #[serde(skip)]
    pub l_prime: HashMap<GroupElement, u64>,
}

/// Conjugation average `l₁(g) = Σ_{h∈H} l(hgh⁻¹)` and its H-coset infimum
/// `l'(g) = min_h l₁(hg)` for finite `H`, on the elements of length ≤ `radius`,
/// with the pointwise bound `l₁(g) ≤ |H|·l(g) + 2Σ_h l(h)` checked exactly.
pub fn averaged_length(
    ctx: &HeckePairContext,
    l: &ElementLengths,
    radius: u32,
) -> Result<AveragedLength> {
    let h = ctx.finite_h()?;
    let incomplete = || HeckeError::BallIncomplete { requested: radius, complete: l.radius };
    let mut h_max = 0;
    let mut h_sum = 0;
    for x in &h {
        let lx = l.get(x).ok_or_else(incomplete)?;
        h_max = h_max.max(lx);
        h_sum += lx;
    }
    // l₁(hg) reaches elements of length ≤ radius + 3·max l(h)
    if (radius as u64) + 3 * h_max > l.radius as u64 {
        return Err(HeckeError::BallIncomplete {
            requested: radius + 3 * h_max as u32,
            complete: l.radius,
        });
    }
    let l1_of = |g: &GroupElement| -> Result<u64> {
        let mut s = 0;
        for x in &h {
            s += l.get(&x.mul(g)?.mul(&x.inv())?).ok_or_else(incomplete)?;
        }
        Ok(s)
    };
    let mut out = AveragedLength {
        h_order: h.len(),
        h_length_sum: h_sum,
        radius,
        rows: Vec::new(),
        bound_holds: true,
        kernel_contains_h: true,
        l1: HashMap::new(),
        l_prime: HashMap::new(),
    };
    for g in l.ball(radius) {
        let lg = l.get(&g).expect("in ball");
        let l1 = l1_of(&g)?;
        let mut l_prime = u64::MAX;
        for x in &h {
            l_prime = l_prime.min(l1_of(&x.mul(&g)?)?);
        }
        let bound = h.len() as u64 * lg + 2 * h_sum;
        let holds = l1 <= bound;
        out.bound_holds &= holds;
        if ctx.in_h(&g) && l_prime != 0 {
            out.kernel_contains_h = false;
        }
        out.rows.push(AveragedRow { element: g.to_string(), l: lg, l1, l_prime, bound, holds });
        out.l1.insert(g.clone(), l1);
        out.l_prime.insert(g, l_prime);
    }
    Ok(out)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct PseudometricReport {
    pub triples_checked: usize,
    pub skipped: usize,
    pub symmetry_failures: usize,
    pub triangle_failures: usize,
    pub invariance_failures: usize,
}

impl PseudometricReport {
    pub fn holds(&self) -> bool {
        self.symmetry_failures == 0 && self.triangle_failures == 0 && self.invariance_failures == 0
    }
}

/// Samples triples `(x, y, z)` from `points` and a translate `g` from
/// `shifts`, and checks for `d(x, y) = l(x⁻¹y)`: symmetry, the triangle
/// inequality and `d(gx, gy) = d(x, y)`. `length` returns `None` where it is
/// not known; such triples are skipped.
pub fn pseudometric_checks<R: Rng>(
    points: &[GroupElement],
    shifts: &[GroupElement],
    triples: usize,
    rng: &mut R,
    mut length: impl FnMut(&GroupElement) -> Result<Option<Q>>,
) -> Result<PseudometricReport> {
    let mut report = PseudometricReport::default();
    if points.is_empty() {
        return Ok(report);
    }
    let mut dist = |a: &GroupElement, b: &GroupElement| -> Result<Option<Q>> {
        length(&a.inv().mul(b)?)
    };
    for _ in 0..triples {
        let pick = |rng: &mut R| points[rng.gen_range(0..points.len())].clone();
        let (x, y, z) = (pick(rng), pick(rng), pick(rng));
        let g = if shifts.is_empty() {
            x.mul(&x.inv())?
        } else {
            shifts[rng.gen_range(0..shifts.len())].clone()
        };
        let (gx, gy) = (g.mul(&x)?, g.mul(&y)?);
        let vals = (dist(&x, &y)?, dist(&y, &x)?, dist(&y, &z)?, dist(&x, &z)?, dist(&gx, &gy)?);
        let (Some(xy), Some(yx), Some(yz), Some(xz), Some(gxy)) = vals else {
            report.skipped += 1;
            continue;
        };
        report.triples_checked += 1;
        if xy != yx {
            report.symmetry_failures += 1;
        }
        if xz > &xy + &yz {
            report.triangle_failures += 1;
        }
        if gxy != xy {
            report.invariance_failures += 1;
        }
    }
    Ok(report)
}

/// Exact length of `HgH` under `lf`, interning the class if needed.
pub fn class_length(
    store: &mut CosetStore,
    lf: &LengthFunction,
    g: &GroupElement,
    max_orbit: usize,
) -> Result<Option<Q>> {
    let d = store.class_of(g, max_orbit)?;
    Ok(lf.exact_value(d).cloned())
}

#[derive(Clone, Debug, Serialize)]
pub struct DominanceFit {
    pub c1: f64,
    pub c0: f64,
    pub holds: bool,
    pub classes_evaluated: usize,
}

/// Minimax fit of `l₂ ≤ c₁·l₁ + c₀` on the classes where both are defined:
/// `c₀` covers the classes where `l₁` vanishes, `c₁` the worst remaining slope.
pub fn dominance_fit(l1: &LengthFunction, l2: &LengthFunction) -> DominanceFit {
    let pts: Vec<(f64, f64)> = l1
        .values()
        .iter()
        .filter_map(|(d, &a)| l2.value(*d).map(|b| (a, b)))
        .collect();
    let c0 = pts.iter().filter(|(a, _)| *a == 0.0).map(|(_, b)| *b).fold(0.0, f64::max);
    let c1 = pts
        .iter()
        .filter(|(a, _)| *a > 0.0)
        .map(|(a, b)| (b - c0) / a)
        .fold(0.0, f64::max);
    DominanceFit {
        c1,
        c0,
        holds: dominance_holds(l1, l2, c1, c0),
        classes_evaluated: pts.len(),
    }
}

/// Whether `l₂(d) ≤ c₁·l₁(d) + c₀` on every class where both are defined.
pub fn dominance_holds(l1: &LengthFunction, l2: &LengthFunction, c1: f64, c0: f64) -> bool {
    l1.values().iter().all(|(d, &a)| match l2.value(*d) {
        Some(b) => {
            let rhs = c1 * a + c0;
            b <= rhs + 1e-12 * (1.0 + rhs.abs())
        }
        None => true,
    })
}

/// Exact `Σ_{d ∈ classes} R(d)`.
pub fn total_cosets(store: &CosetStore, classes: &[DoubleCosetId]) -> Result<Q> {
    let mut s = Q::zero();
    for &d in classes {
        s += Q::from_integer(BigInt::from(store.double_coset(d)?.r));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coset::{enumerate_ball, Caps};
    use crate::pair::catalog;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn store(label: &str, r: u32) -> CosetStore {
        enumerate_ball(Arc::new(catalog(label).unwrap()), r, Caps::default()).unwrap()
    }

    #[test]
    fn word_length_on_z() {
        let mut s = store("z:1", 6);
        let lf = word_length(&mut s, 10).unwrap();
        for n in -6i64..=6 {
            let d = s.class_of(&GroupElement::zvec(vec![n]), 10).unwrap();
            assert_eq!(lf.exact_value(d), Some(&q(n.abs())));
        }
        let e = s.identity_class().unwrap();
        assert_eq!(lf.value(e), Some(0.0));
    }

    #[test]
    fn word_length_on_psl2() {
        let mut s = store("psl2z1p:2", 4);
        let lf = word_length(&mut s, 100_000).unwrap();
        let g2 = s.context().g_generators[2].clone();
        for k in 0..=4 {
            let d = s.class_of(&g2.pow(k).unwrap(), 100_000).unwrap();
            assert_eq!(lf.exact_value(d), Some(&q(k)));
            assert_eq!(s.double_coset(d).unwrap().r, if k == 0 { 1 } else { 3 << (2 * k - 1) });
        }
        assert_eq!(lf.classes().count(), 5);
        let half = lf.classes_within(2.0);
        let rep = check_length_invariants(&mut s, &lf, &half, 100_000).unwrap();
        assert!(rep.holds(), "{rep:?}");
        assert!(rep.subadditivity_checked > 0);
    }

    #[test]
    fn characteristic_length_values() {
        let mut s = store("s3-h12", 2);
        let classes = s.classify_ball(2, 100).unwrap();
        let lc = characteristic_length(&mut s, &classes, 100, false).unwrap();
        let d = classes[1];
        assert!((lc.value(d).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(lc.value(classes[0]), Some(0.0));
        let rep = check_length_invariants(&mut s, &lc, &classes, 100).unwrap();
        assert!(rep.holds());
        assert!(check_left_count_submultiplicative(&mut s, &classes, 100).unwrap().is_empty());

        let mut z = store("z:2", 3);
        let classes = z.classify_ball(3, 10).unwrap();
        let lc = characteristic_length(&mut z, &classes, 10, false).unwrap();
        assert!(lc.values().values().all(|&v| v == 0.0));
    }

    #[test]
    fn characteristic_refuses_non_unimodular() {
        let mut s = store("bcp:2", 2);
        let classes = s.classify_ball(2, 100).unwrap();
        assert!(matches!(
            characteristic_length(&mut s, &classes, 100, false),
            Err(HeckeError::NotRelativelyUnimodular(_))
        ));
        let lr = characteristic_length(&mut s, &classes, 100, true).unwrap();
        assert_eq!(lr.kind, LengthKind::CharacteristicLr);
        let half: Vec<_> = classes.iter().copied().take(3).collect();
        assert!(check_length_invariants(&mut s, &lr, &half, 100).unwrap().holds());
    }

    #[test]
    fn indicator_values() {
        let mut s = store("dinf", 3);
        s.classify_ball(3, 10).unwrap();
        let li = indicator_length(&mut s).unwrap();
        let e = s.identity_class().unwrap();
        for d in li.classes() {
            assert_eq!(li.value(d), Some(if d == e { 0.0 } else { 1.0 }));
        }
    }

    #[test]
    fn averaged_length_on_dinf() {
        let ctx = catalog("dinf").unwrap();
        let table = element_word_lengths(&ctx, 11).unwrap();
        let avg = averaged_length(&ctx, &table, 8).unwrap();
        assert!(avg.bound_holds);
        assert!(avg.kernel_contains_h);
        assert_eq!(avg.h_order, 2);
        // s = dih -1 0 has length 1
        assert_eq!(avg.h_length_sum, 1);
        for row in &avg.rows {
            assert!(row.l1 <= 2 * row.l + 2);
        }
        // l' is H-bi-invariant
        let s = GroupElement::dihedral(true, 0);
        for g in table.ball(4) {
            let lp = avg.l_prime[&g];
            assert_eq!(avg.l_prime[&s.mul(&g).unwrap()], lp);
            assert_eq!(avg.l_prime[&g.mul(&s).unwrap()], lp);
        }
        assert!(matches!(averaged_length(&ctx, &table, 10), Err(HeckeError::BallIncomplete { .. })));
    }

    #[test]
    fn averaged_length_trivial_h() {
        let ctx = catalog("z:1").unwrap();
        let table = element_word_lengths(&ctx, 5).unwrap();
        let avg = averaged_length(&ctx, &table, 5).unwrap();
        for g in table.ball(5) {
            assert_eq!(avg.l1[&g], table.get(&g).unwrap());
            assert_eq!(avg.l_prime[&g], table.get(&g).unwrap());
        }
        assert_eq!(
            averaged_length(&catalog("psl2z1p:2").unwrap(), &table, 1).unwrap_err(),
            HeckeError::InfiniteH
        );
    }

    #[test]
    fn pseudometric_on_z_and_zero_length() {
        let mut s = store("z:1", 12);
        let lf = word_length(&mut s, 10).unwrap();
        let pts: Vec<_> = (-3..=3).map(|n| GroupElement::zvec(vec![n])).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rep = pseudometric_checks(&pts, &pts, 200, &mut rng, |g| {
            class_length(&mut s, &lf, g, 10)
        })
        .unwrap();
        assert!(rep.holds());
        assert_eq!(rep.triples_checked, 200);
        let x = GroupElement::zvec(vec![-2]);
        let y = GroupElement::zvec(vec![3]);
        assert_eq!(class_length(&mut s, &lf, &x.inv().mul(&y).unwrap(), 10).unwrap(), Some(q(5)));

        let rep =
            pseudometric_checks(&pts, &pts, 50, &mut rng, |_| Ok(Some(Q::zero()))).unwrap();
        assert!(rep.holds());
    }

    #[test]
    fn dominance_fits() {
        let mut s = store("psl2z1p:2", 4);
        let lw = word_length(&mut s, 100_000).unwrap();
        let fit = dominance_fit(&lw, &lw);
        assert_eq!((fit.c1, fit.c0), (1.0, 0.0));
        assert!(fit.holds);
        let li = indicator_length(&mut s).unwrap();
        assert!(dominance_holds(&lw, &li, 1.0, 1.0));
        assert!(dominance_fit(&lw, &li).holds);
        let classes: Vec<_> = lw.classes().collect();
        let lc = characteristic_length(&mut s, &classes, 100_000, false).unwrap();
        let fit = dominance_fit(&lw, &lc);
        assert!(fit.holds);
        // L(d_k) = 3·2^(2k-1), so ln L ≤ 2 ln 2 · k + ln 3/2
        assert!(fit.c1 <= 2.0 * 2f64.ln() + 0.5);
    }
}
