//! The Hecke algebra `H(G,H)`: finitely supported functions on double cosets
//! with exact rational coefficients.
//!
//! Convolution uses the counting measure on `H\G`:
//! `(f∗g)(Hx) = Σ_{Hy} f(Hxy⁻¹) g(Hy)`, so `T_{HeH}` is the unit and
//! `‖T_d‖₂² = R(d)`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::coset::{CosetId, CosetStore, DoubleCosetId};
use crate::error::{HeckeError, Result};
use crate::group::{parse_q, q, render_q, GroupElement, Perm, Q};
use crate::length::LengthFunction;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeckeElement {
    store_id: u64,
    coeffs: BTreeMap<DoubleCosetId, Q>,
}

impl HeckeElement {
    pub fn zero(store: &CosetStore) -> Self {
        HeckeElement { store_id: store.store_id(), coeffs: BTreeMap::new() }
    }

    /// Builds an element from `(class, coefficient)` pairs, summing repeats.
    pub fn from_terms(
        store: &CosetStore,
        terms: impl IntoIterator<Item = (DoubleCosetId, Q)>,
    ) -> Result<Self> {
        let mut f = HeckeElement::zero(store);
        for (d, c) in terms {
            store.double_coset(d)?;
            f.add_term(d, c);
        }
        Ok(f)
    }

    pub fn store_id(&self) -> u64 {
        self.store_id
    }

    fn add_term(&mut self, d: DoubleCosetId, c: Q) {
        if c.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(d).or_insert_with(Q::zero);
        *entry += c;
        if entry.is_zero() {
            self.coeffs.remove(&d);
        }
    }

    pub fn coeff(&self, d: DoubleCosetId) -> Q {
        self.coeffs.get(&d).cloned().unwrap_or_else(Q::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (DoubleCosetId, &Q)> {
        self.coeffs.iter().map(|(d, c)| (*d, c))
    }

    pub fn support(&self) -> Vec<DoubleCosetId> {
        self.coeffs.keys().copied().collect()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn check_same(&self, other: &HeckeElement) -> Result<()> {
        if self.store_id != other.store_id {
            return Err(HeckeError::StoreMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &HeckeElement) -> Result<HeckeElement> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (d, c) in other.terms() {
            out.add_term(d, c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &HeckeElement) -> Result<HeckeElement> {
        self.add(&other.scale(&q(-1)))
    }

    pub fn scale(&self, s: &Q) -> HeckeElement {
        let mut out = HeckeElement { store_id: self.store_id, coeffs: BTreeMap::new() };
        for (d, c) in self.terms() {
            out.add_term(d, c * s);
        }
        out
    }

    /// `dc=<id> coeff=<rational>` lines, ascending by id.
    pub fn to_text(&self) -> String {
        self.coeffs
            .iter()
            .map(|(d, c)| format!("dc={} coeff={}\n", d.0, render_q(c)))
            .collect()
    }

    pub fn from_text(store: &CosetStore, text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut offset = 0;
        for line in text.split_inclusive('\n') {
            let trimmed = line.trim();
            if !trimmed.is_empty() {
                let mut dc = None;
                let mut coeff = None;
                for tok in trimmed.split_whitespace() {
                    let pos = offset + line.find(tok).unwrap_or(0);
                    match tok.split_once('=') {
                        Some(("dc", v)) => {
                            dc = Some(v.parse::<usize>().map_err(|_| HeckeError::Parse {
                                pos,
                                msg: format!("bad class id `{v}`"),
                            })?)
                        }
                        Some(("coeff", v)) => coeff = Some(parse_q(v, pos + 6)?),
                        _ => {
                            return Err(HeckeError::Parse { pos, msg: format!("unexpected `{tok}`") })
                        }
                    }
                }
                match (dc, coeff) {
                    (Some(d), Some(c)) => terms.push((DoubleCosetId(d), c)),
                    _ => {
                        return Err(HeckeError::Parse {
                            pos: offset,
                            msg: "expected `dc=<id> coeff=<rational>`".into(),
                        })
                    }
                }
            }
            offset += line.len();
        }
        HeckeElement::from_terms(store, terms)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.coeffs
                .iter()
                .map(|(d, c)| serde_json::json!({ "dc": d.0, "coeff": render_q(c) }))
                .collect(),
        )
    }
}

impl fmt::Display for HeckeElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> =
            self.coeffs.iter().map(|(d, c)| format!("{}·T{}", render_q(c), d.0)).collect();
        f.write_str(&parts.join(" + "))
    }
}

/// `T_d`.
pub fn basis_element(store: &CosetStore, d: DoubleCosetId) -> Result<HeckeElement> {
    HeckeElement::from_terms(store, [(d, q(1))])
}

/// `T_{HeH}`.
pub fn identity_element(store: &mut CosetStore) -> Result<HeckeElement> {
    let e = store.identity_class()?;
    basis_element(store, e)
}

/// `T_{d₁} ∗ T_{d₂} = Σ_d n_d T_d` with nonnegative integer `n_d`.
///
/// Every product coset `H aᵢ bⱼ` (aᵢ, bⱼ right-coset representatives of d₁, d₂)
/// is interned and counted; the count must be constant on each class it meets.
pub fn structure_constants(
    store: &mut CosetStore,
    d1: DoubleCosetId,
    d2: DoubleCosetId,
    max_orbit: usize,
) -> Result<Vec<(DoubleCosetId, u64)>> {
    if let Some(hit) = store.products.get(&(d1, d2)) {
        return Ok(hit.clone());
    }
    let reps = |store: &CosetStore, d| -> Result<Vec<GroupElement>> {
        Ok(store.double_coset(d)?.members.iter().map(|&c| store.rep(c).clone()).collect())
    };
    let left = reps(store, d1)?;
    let right = reps(store, d2)?;
    let mut counts: HashMap<CosetId, u64> = HashMap::new();
    for a in &left {
        for b in &right {
            let (c, _) = store.intern(&a.mul(b)?)?;
            *counts.entry(c).or_default() += 1;
        }
    }
    let mut hit: Vec<CosetId> = counts.keys().copied().collect();
    hit.sort();
    let mut classes = Vec::new();
    for c in hit {
        let d = store.right_h_orbit(c, max_orbit)?;
        if !classes.contains(&d) {
            classes.push(d);
        }
    }
    classes.sort();
    let mut out = Vec::with_capacity(classes.len());
    for d in classes {
        let members = &store.double_coset(d)?.members;
        let value = counts.get(&members[0]).copied().unwrap_or(0);
        if members.iter().any(|m| counts.get(m).copied().unwrap_or(0) != value) {
            return Err(HeckeError::NonBiInvariantResult(d.0));
        }
        out.push((d, value));
    }
    store.products.insert((d1, d2), out.clone());
    Ok(out)
}

pub fn convolve(
    store: &mut CosetStore,
    f: &HeckeElement,
    g: &HeckeElement,
    max_orbit: usize,
) -> Result<HeckeElement> {
    f.check_same(g)?;
    if f.store_id != store.store_id() {
        return Err(HeckeError::StoreMismatch);
    }
    let mut out = HeckeElement::zero(store);
    for (d1, c1) in f.terms() {
        for (d2, c2) in g.terms() {
            let prod = c1 * c2;
            for (d, n) in structure_constants(store, d1, d2, max_orbit)? {
                out.add_term(d, &prod * Q::from_integer(BigInt::from(n)));
            }
        }
    }
    Ok(out)
}

/// `f*(Hx) = Δ(x⁻¹) f(Hx⁻¹)`; on classes, `c'_{inv(d)} = Δ(d) c_d`.
pub fn involution(
    store: &mut CosetStore,
    f: &HeckeElement,
    max_orbit: usize,
) -> Result<HeckeElement> {
    if f.store_id != store.store_id() {
        return Err(HeckeError::StoreMismatch);
    }
    let mut out = HeckeElement::zero(store);
    for (d, c) in f.terms() {
        let e = store.invert_double_coset(d, max_orbit)?;
        let delta = store.delta(d, max_orbit)?;
        out.add_term(e, delta * c);
    }
    Ok(out)
}

pub fn is_self_adjoint(
    store: &mut CosetStore,
    f: &HeckeElement,
    max_orbit: usize,
) -> Result<bool> {
    Ok(involution(store, f, max_orbit)? == *f)
}

#[derive(Clone, Debug, Serialize)]
pub struct NormReport {
    pub l1: f64,
    pub l2: f64,
    pub l1_exact: String,
    pub l2_sq_exact: String,
    /// `(s, ‖f‖_{s,l})` when a length and exponent were supplied.
    pub weighted: Option<(f64, f64)>,
}

/// `‖f‖₁ = Σ|c_d| R(d)`, `‖f‖₂² = Σ c_d² R(d)`,
/// `‖f‖_{s,l}² = Σ c_d² (1 + l(d))^{2s} R(d)`.
pub fn norms(
    store: &CosetStore,
    f: &HeckeElement,
    l: Option<&LengthFunction>,
    s: Option<f64>,
) -> Result<NormReport> {
    let mut l1 = Q::zero();
    let mut l2 = Q::zero();
    let mut weighted = 0.0;
    for (d, c) in f.terms() {
        let r = Q::from_integer(BigInt::from(store.double_coset(d)?.r));
        l1 += c.abs() * &r;
        l2 += c * c * &r;
        if let (Some(l), Some(s)) = (l, s) {
            let ld = l.value(d).ok_or(HeckeError::LengthUndefinedOnSupport(d.0))?;
            weighted += q_to_f64(&(c * c * &r)) * (1.0 + ld).powf(2.0 * s);
        }
    }
    Ok(NormReport {
        l1: q_to_f64(&l1),
        l2: q_to_f64(&l2).sqrt(),
        l1_exact: render_q(&l1),
        l2_sq_exact: render_q(&l2),
        weighted: s.filter(|_| l.is_some()).map(|s| (s, weighted.sqrt())),
    })
}

/// Exact `‖f‖₁`.
pub fn l1_norm_exact(store: &CosetStore, f: &HeckeElement) -> Result<Q> {
    let mut out = Q::zero();
    for (d, c) in f.terms() {
        out += c.abs() * Q::from_integer(BigInt::from(store.double_coset(d)?.r));
    }
    Ok(out)
}

/// `(u ∗ v)(He) = Σ_d u(inv d) v(d) R(d)`.
pub fn evaluate_product_at_identity(
    store: &mut CosetStore,
    u: &HeckeElement,
    v: &HeckeElement,
    max_orbit: usize,
) -> Result<Q> {
    let mut out = Q::zero();
    for (d, c) in v.terms() {
        let e = store.invert_double_coset(d, max_orbit)?;
        let r = store.double_coset(d)?.r;
        out += u.coeff(e) * c * Q::from_integer(BigInt::from(r));
    }
    Ok(out)
}

/// `a_n = (f^{∗2n})(HeH) = ⟨λ(f)^{2n} δ_{He}, δ_{He}⟩` for `n = 1..=count`,
/// evaluated as `Σ_d F(inv d) F(d) R(d)` with `F = f^{∗n}`.
pub fn convolution_power_moments(
    store: &mut CosetStore,
    f: &HeckeElement,
    count: usize,
    max_orbit: usize,
) -> Result<Vec<Q>> {
    if !is_self_adjoint(store, f, max_orbit)? {
        return Err(HeckeError::NotSelfAdjoint);
    }
    let mut power = f.clone();
    let mut out = Vec::with_capacity(count);
    for n in 1..=count {
        if n > 1 {
            power = convolve(store, &power, f, max_orbit)?;
        }
        out.push(evaluate_product_at_identity(store, &power, &power, max_orbit)?);
    }
    Ok(out)
}

pub fn convolution_power_moment(
    store: &mut CosetStore,
    f: &HeckeElement,
    n: usize,
    max_orbit: usize,
) -> Result<Q> {
    let v = convolution_power_moments(store, f, n, max_orbit)?;
    Ok(v.last().cloned().unwrap_or_else(|| q(1)))
}

/// Float value of an exact rational, finite even when numerator and
/// denominator overflow `f64` separately.
pub fn q_to_f64(x: &Q) -> f64 {
    if let (Some(n), Some(d)) = (x.numer().to_f64(), x.denom().to_f64()) {
        if n.is_finite() && d.is_finite() {
            return n / d;
        }
    }
    let sign = if x.is_negative() { -1.0 } else { 1.0 };
    sign * ln_abs_q(x).exp()
}

/// `ln |x|` for a nonzero rational of any size.
pub fn ln_abs_q(x: &Q) -> f64 {
    fn ln_big(n: &BigInt) -> f64 {
        let bits = n.bits();
        if bits < 1000 {
            return n.abs().to_f64().expect("fits").ln();
        }
        let shift = bits - 64;
        let top: BigInt = n.abs() >> shift;
        top.to_f64().expect("fits").ln() + shift as f64 * std::f64::consts::LN_2
    }
    ln_big(x.numer()) - ln_big(x.denom())
}

/// Exhaustive evaluation of the Hecke pair definitions for a finite
/// permutation group: classes, `L`, `R`, `Δ` and structure constants from the
/// group algebra, independent of the coset engine.
#[derive(Clone, Debug)]
pub struct FiniteOracle {
    /// Double cosets as sorted element lists, ordered by least element.
    pub classes: Vec<Vec<Perm>>,
    pub l: Vec<usize>,
    pub r: Vec<usize>,
    pub delta: Vec<Q>,
    /// `(i, j) → [(k, n)]` with `T_i ∗ T_j = Σ n T_k`.
    structure: BTreeMap<(usize, usize), Vec<(usize, Q)>>,
}

fn perm_mul(x: &Perm, y: &Perm) -> Perm {
    Perm { images: y.images.iter().map(|&i| x.images[i as usize]).collect() }
}

impl FiniteOracle {
    /// Index of the class containing `g`.
    pub fn class_of(&self, g: &Perm) -> Option<usize> {
        self.classes.iter().position(|c| c.binary_search(g).is_ok())
    }

    pub fn structure_constants(&self, i: usize, j: usize) -> &[(usize, Q)] {
        self.structure.get(&(i, j)).map(|v| v.as_slice()).unwrap_or(&[])
    }
}

pub fn finite_group_oracle(group: &[Perm], subgroup: &[Perm]) -> Result<FiniteOracle> {
    if group.len() > 10_000 {
        return Err(HeckeError::Domain(format!("|G| = {} exceeds 10^4", group.len())));
    }
    let mut g_sorted = group.to_vec();
    g_sorted.sort();
    g_sorted.dedup();
    let g_set: HashSet<&Perm> = g_sorted.iter().collect();
    let h: Vec<Perm> = {
        let mut h = subgroup.to_vec();
        h.sort();
        h.dedup();
        h
    };
    let h_set: HashSet<&Perm> = h.iter().collect();
    let degree = g_sorted.first().map_or(0, |p| p.images.len());
    if !h_set.contains(&Perm::identity(degree)) {
        return Err(HeckeError::SubsetNotSubgroup("missing the identity".into()));
    }
    for x in &h {
        if !g_set.contains(x) {
            return Err(HeckeError::SubsetNotSubgroup(format!("{:?} not in G", x.images)));
        }
        for y in &h {
            if !h_set.contains(&perm_mul(x, y)) {
                return Err(HeckeError::SubsetNotSubgroup("not closed under products".into()));
            }
        }
    }

    // double cosets as sorted element lists, in order of their least element
    let mut class_index: HashMap<Perm, usize> = HashMap::new();
    let mut classes: Vec<Vec<Perm>> = Vec::new();
    for g in &g_sorted {
        if class_index.contains_key(g) {
            continue;
        }
        let mut members: Vec<Perm> = h
            .iter()
            .flat_map(|a| h.iter().map(move |b| perm_mul(&perm_mul(a, g), b)))
            .collect();
        members.sort();
        members.dedup();
        for m in &members {
            class_index.insert(m.clone(), classes.len());
        }
        classes.push(members);
    }

    let count_cosets = |members: &[Perm], left: bool| -> usize {
        let mut seen: HashSet<Vec<Perm>> = HashSet::new();
        for x in members {
            let mut coset: Vec<Perm> = h
                .iter()
                .map(|k| if left { perm_mul(x, k) } else { perm_mul(k, x) })
                .collect();
            coset.sort();
            seen.insert(coset);
        }
        seen.len()
    };
    let r: Vec<usize> = classes.iter().map(|c| count_cosets(c, false)).collect();
    let l: Vec<usize> = classes.iter().map(|c| count_cosets(c, true)).collect();
    let delta: Vec<Q> =
        l.iter().zip(&r).map(|(&l, &r)| Q::new(BigInt::from(l), BigInt::from(r))).collect();

    // group algebra: (1_{D_i} ∗ 1_{D_j})(z) = #{(x, y) ∈ D_i × D_j : xy = z};
    // summing over H\G instead of G divides by |H|
    let h_order = Q::from_integer(BigInt::from(h.len()));
    let mut structure = BTreeMap::new();
    for i in 0..classes.len() {
        for j in 0..classes.len() {
            let mut conv: HashMap<Perm, u64> = HashMap::new();
            for x in &classes[i] {
                for y in &classes[j] {
                    *conv.entry(perm_mul(x, y)).or_default() += 1;
                }
            }
            let mut terms = Vec::new();
            for (k, members) in classes.iter().enumerate() {
                let v = conv.get(&members[0]).copied().unwrap_or(0);
                if members.iter().any(|m| conv.get(m).copied().unwrap_or(0) != v) {
                    return Err(HeckeError::NonBiInvariantResult(k));
                }
                if v != 0 {
                    terms.push((k, Q::from_integer(BigInt::from(v)) / &h_order));
                }
            }
            structure.insert((i, j), terms);
        }
    }
    Ok(FiniteOracle { classes, l, r, delta, structure })
}
