//! Hecke pair contexts: a group instance, the subgroup predicate, generator
//! lists and the right-coset fingerprint used by the interning tables.

use std::collections::{BTreeSet, HashSet, VecDeque};

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{HeckeError, Result};
use crate::group::{
    common_denominator, is_integer, parse_element, q, q_frac, q_mod, validate_element,
    GroupElement, GroupKind, Perm, Q,
};

/// How membership in `H` is decided.
#[derive(Clone, Debug)]
pub enum Membership {
    /// `H = SL₂(ℤ)` (or its image in PSL₂): all entries integral.
    IntegralMatrix,
    /// `H = {[[1,n],[0,1]] : n ∈ ℤ}` inside an affine group.
    IntegerTranslation,
    /// `H = {e}`.
    Trivial,
    /// `H = {e, s}` with `s: x ↦ -x` in the infinite dihedral group.
    Reflection,
    /// A finite permutation subgroup, stored as its full (sorted) element list.
    Finite { elements: Vec<Perm>, lookup: HashSet<Perm> },
}

/// Hash-stable invariant of a right coset `Hx`. For every catalog instance it
/// is in fact a canonical form, but the membership test stays the arbiter.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CosetKey {
    /// Hermite form `[[α, β], [0, δ]]` of the row lattice `ℤ²x`.
    Lattice(Q, Q, Q),
    /// `(b mod a, a)` for the affine coset `{(b + n a, a)}`.
    Translation(Q, Q),
    Element(GroupElement),
    /// `±n` for the dihedral coset `{x ↦ x + n, x ↦ -x - n}`.
    Line(i64),
    /// Lexicographically least element of `Hx`.
    Perm(Vec<u32>),
}

#[derive(Clone, Debug)]
pub struct HeckePairContext {
    pub label: String,
    pub kind: GroupKind,
    pub membership: Membership,
    pub g_generators: Vec<GroupElement>,
    pub h_generators: Vec<GroupElement>,
    /// False for pairs whose listed generators are only a sample (full Bost–Connes).
    pub finitely_generated: bool,
    /// The normal kernel `K ⊆ H` supplied for this pair, if any.
    pub reduction_kernel: Option<String>,
    /// Implementer conventions surfaced in reports (generator choices etc).
    pub conventions: Vec<String>,
}

/// Summary of a context for reports.
#[derive(Clone, Debug, Serialize)]
pub struct PairSummary {
    pub label: String,
    pub group: String,
    pub g_generators: Vec<String>,
    pub h_generators: Vec<String>,
    pub finitely_generated: bool,
    pub reduction_kernel: Option<String>,
    pub conventions: Vec<String>,
}

impl HeckePairContext {
    pub fn identity(&self) -> GroupElement {
        GroupElement::identity(&self.kind)
    }

    pub fn in_h(&self, g: &GroupElement) -> bool {
        match (&self.membership, g) {
            (Membership::IntegralMatrix, GroupElement::Matrix2Q(m)) => {
                // the sign choice never affects integrality
                [&m.a, &m.b, &m.c, &m.d].into_iter().all(is_integer)
            }
            (Membership::IntegerTranslation, GroupElement::AffineQ(x)) => {
                x.a.is_one() && is_integer(&x.b)
            }
            (Membership::Trivial, g) => g.is_identity(),
            (Membership::Reflection, GroupElement::Dihedral(d)) => d.shift == 0,
            (Membership::Finite { lookup, .. }, GroupElement::Perm(p)) => lookup.contains(p),
            _ => false,
        }
    }

    /// `Hx = Hy` iff `x y⁻¹ ∈ H`.
    pub fn same_right_coset(&self, x: &GroupElement, y: &GroupElement) -> Result<bool> {
        Ok(self.in_h(&x.mul(&y.inv())?))
    }

    pub fn coset_key(&self, g: &GroupElement) -> CosetKey {
        match (&self.membership, g) {
            (Membership::IntegralMatrix, GroupElement::Matrix2Q(m)) => {
                let (alpha, beta, delta) = row_lattice_hermite(&m.a, &m.b, &m.c, &m.d);
                CosetKey::Lattice(alpha, beta, delta)
            }
            (Membership::IntegerTranslation, GroupElement::AffineQ(x)) => {
                // (n,1)·(b,a) = (b + n·a, a)
                CosetKey::Translation(q_mod(&x.b, &x.a), x.a.clone())
            }
            (Membership::Reflection, GroupElement::Dihedral(d)) => {
                // s·(ε, n) = (-ε, -n)
                CosetKey::Line(if d.flip { -d.shift } else { d.shift })
            }
            (Membership::Finite { elements, .. }, GroupElement::Perm(p)) => {
                let least = elements
                    .iter()
                    .map(|h| p.images.iter().map(|&i| h.images[i as usize]).collect::<Vec<_>>())
                    .min()
                    .expect("H contains the identity");
                CosetKey::Perm(least)
            }
            (_, g) => CosetKey::Element(g.clone()),
        }
    }

    /// `Ŝ \ {e}`: generators followed by their inverses, duplicates and the
    /// identity removed, order fixed.
    pub fn symmetric_generators(&self) -> Vec<GroupElement> {
        symmetrize(&self.g_generators)
    }

    pub fn h_symmetric_generators(&self) -> Vec<GroupElement> {
        symmetrize(&self.h_generators)
    }

    /// All elements of `H` when it is finite.
    pub fn finite_h(&self) -> Result<Vec<GroupElement>> {
        match &self.membership {
            Membership::Trivial => Ok(vec![self.identity()]),
            Membership::Reflection => {
                Ok(vec![self.identity(), GroupElement::dihedral(true, 0)])
            }
            Membership::Finite { elements, .. } => {
                Ok(elements.iter().cloned().map(GroupElement::Perm).collect())
            }
            _ => Err(HeckeError::InfiniteH),
        }
    }

    /// Checks the context invariants: every generator is a well-formed element
    /// and every H-generator lies in H.
    pub fn validate(&self) -> Result<()> {
        for g in self.g_generators.iter().chain(&self.h_generators) {
            validate_element(&self.kind, g)?;
        }
        if let Some(h) = self.h_generators.iter().find(|h| !self.in_h(h)) {
            return Err(HeckeError::Domain(format!("H-generator {h} fails the H predicate")));
        }
        Ok(())
    }

    pub fn summary(&self) -> PairSummary {
        PairSummary {
            label: self.label.clone(),
            group: self.kind.to_string(),
            g_generators: self.g_generators.iter().map(|g| g.to_string()).collect(),
            h_generators: self.h_generators.iter().map(|g| g.to_string()).collect(),
            finitely_generated: self.finitely_generated,
            reduction_kernel: self.reduction_kernel.clone(),
            conventions: self.conventions.clone(),
        }
    }
}

fn symmetrize(gens: &[GroupElement]) -> Vec<GroupElement> {
    let mut out: Vec<GroupElement> = Vec::new();
    for g in gens.iter().cloned().chain(gens.iter().map(|g| g.inv())) {
        if !g.is_identity() && !out.contains(&g) {
            out.push(g);
        }
    }
    out
}

/// Hermite normal form of the lattice spanned by the rows `(a, b)` and
/// `(c, d)` of a nonsingular rational matrix: returns `(α, β, δ)` with
/// `α, δ > 0` and `0 ≤ β < δ` such that the lattice has basis `(α, β), (0, δ)`.
pub fn row_lattice_hermite(a: &Q, b: &Q, c: &Q, d: &Q) -> (Q, Q, Q) {
    let den = common_denominator([a, b, c, d]);
    let ai = (a * Q::from_integer(den.clone())).to_integer();
    let ci = (c * Q::from_integer(den)).to_integer();
    let eg = ai.extended_gcd(&ci);
    let (mut g, mut s, mut t) = (eg.gcd, eg.x, eg.y);
    if g.is_negative() {
        g = -g;
        s = -s;
        t = -t;
    }
    debug_assert!(!g.is_zero(), "singular matrix");
    let s = Q::from_integer(s);
    let t = Q::from_integer(t);
    let alpha = &s * a + &t * c;
    let beta = &s * b + &t * d;
    let u = Q::from_integer(&ci / &g);
    let v = Q::from_integer(&ai / &g);
    let delta = (&u * b - &v * d).abs();
    let beta = q_mod(&beta, &delta);
    (alpha, beta, delta)
}

/// Closure of a set of permutations under composition.
pub fn perm_closure(gens: &[Perm], degree: usize) -> Vec<Perm> {
    let id = Perm::identity(degree);
    let mut seen: BTreeSet<Perm> = BTreeSet::from([id.clone()]);
    let mut queue = VecDeque::from([id]);
    while let Some(x) = queue.pop_front() {
        for g in gens {
            let y = GroupElement::Perm(x.clone())
                .mul(&GroupElement::Perm(g.clone()))
                .expect("same degree");
            let GroupElement::Perm(y) = y else { unreachable!() };
            if seen.insert(y.clone()) {
                queue.push_back(y);
            }
        }
    }
    seen.into_iter().collect()
}

fn finite_membership(h_gens: &[GroupElement], degree: usize) -> Membership {
    let perms: Vec<Perm> = h_gens
        .iter()
        .map(|g| match g {
            GroupElement::Perm(p) => p.clone(),
            _ => unreachable!("finite membership only for permutation pairs"),
        })
        .collect();
    let elements = perm_closure(&perms, degree);
    let lookup = elements.iter().cloned().collect();
    Membership::Finite { elements, lookup }
}

fn transposition(n: usize, i: u32, j: u32) -> GroupElement {
    GroupElement::Perm(Perm::transposition(n, i, j))
}

/// Labels accepted by [`catalog`] (with a sample prime where one is needed).
pub const CATALOG_LABELS: &[&str] = &[
    "sl2z1p:2",
    "psl2z1p:2",
    "bc",
    "bcp:2",
    "bcp:3",
    "bcp:5",
    "z:1",
    "z:2",
    "dinf",
    "s3-h12",
    "s4-h12",
    "s4-h12-34",
];

fn parse_prime(label: &str, arg: &str) -> Result<u64> {
    let p: u64 = arg.parse().map_err(|_| HeckeError::UnknownPair(label.to_string()))?;
    let is_prime = p >= 2 && (2..).take_while(|k| k * k <= p).all(|k| p % k != 0);
    if !is_prime {
        return Err(HeckeError::Domain(format!("{p} is not prime")));
    }
    Ok(p)
}

/// `SL₂(ℤ[1/p])` or `PSL₂(ℤ[1/p])` relative to its integral points.
pub fn modular_pair(p: u64, projective: bool) -> HeckePairContext {
    let m = |a, b, c, d: Q| GroupElement::mat(a, b, c, d, projective);
    let s = m(q(0), q(-1), q(1), q(0));
    let t = m(q(1), q(1), q(0), q(1));
    let gp = m(q(p as i64), q(0), q(0), q_frac(1, p as i64));
    let name = if projective { "psl2z1p" } else { "sl2z1p" };
    HeckePairContext {
        label: format!("{name}:{p}"),
        kind: GroupKind::Matrix2 { projective, prime: Some(p) },
        membership: Membership::IntegralMatrix,
        g_generators: vec![s.clone(), t.clone(), gp],
        h_generators: vec![s, t],
        finitely_generated: true,
        reduction_kernel: Some(if projective {
            "{+I,-I}, realized by the sign rule".into()
        } else {
            "{+I,-I} (not divided out in this instance)".into()
        }),
        conventions: vec![
            format!("S = [[0,-1],[1,0]], T = [[1,1],[0,1]], g_{p} = diag({p}, 1/{p}); H generated by S, T"),
            format!(
                "g_{p}^-k T g_{p}^k = [[1, {p}^-2k],[0,1]] together with SL2(Z) generates the full group"
            ),
        ],
    }
}

pub fn bost_connes_p(p: u64) -> HeckePairContext {
    HeckePairContext {
        label: format!("bcp:{p}"),
        kind: GroupKind::Affine { prime: Some(p) },
        membership: Membership::IntegerTranslation,
        g_generators: vec![GroupElement::aff(q(1), q(1)), GroupElement::aff(q(0), q(p as i64))],
        h_generators: vec![GroupElement::aff(q(1), q(1))],
        finitely_generated: true,
        reduction_kernel: None,
        conventions: vec![format!("G = Z[1/{p}] x| {p}^Z generated by (b=1,a=1) and (b=0,a={p})")],
    }
}

pub fn bost_connes() -> HeckePairContext {
    let mut g = vec![GroupElement::aff(q(1), q(1))];
    g.extend([2, 3, 5, 7].map(|p| GroupElement::aff(q(0), q(p))));
    HeckePairContext {
        label: "bc".into(),
        kind: GroupKind::Affine { prime: None },
        membership: Membership::IntegerTranslation,
        g_generators: g,
        h_generators: vec![GroupElement::aff(q(1), q(1))],
        finitely_generated: false,
        reduction_kernel: None,
        conventions: vec![
            "G = Q x| Q+ is not finitely generated; the listed elements are a sample used for pointwise queries".into(),
        ],
    }
}

pub fn free_abelian(d: usize) -> HeckePairContext {
    let gens = (0..d)
        .map(|i| {
            let mut v = vec![0; d];
            v[i] = 1;
            GroupElement::zvec(v)
        })
        .collect();
    HeckePairContext {
        label: format!("z:{d}"),
        kind: GroupKind::ZVec { dim: d },
        membership: Membership::Trivial,
        g_generators: gens,
        h_generators: vec![],
        finitely_generated: true,
        reduction_kernel: None,
        conventions: vec!["standard basis generators, H = {0}".into()],
    }
}

pub fn infinite_dihedral() -> HeckePairContext {
    let s = GroupElement::dihedral(true, 0);
    HeckePairContext {
        label: "dinf".into(),
        kind: GroupKind::Dihedral,
        membership: Membership::Reflection,
        g_generators: vec![s.clone(), GroupElement::dihedral(false, 1)],
        h_generators: vec![s],
        finitely_generated: true,
        reduction_kernel: None,
        conventions: vec!["s: x -> -x, t: x -> x+1; H = {e, s}".into()],
    }
}

/// A permutation pair `(⟨g_gens⟩, ⟨h_gens⟩)` of the given degree.
pub fn permutation_pair(
    label: &str,
    degree: usize,
    g_gens: Vec<GroupElement>,
    h_gens: Vec<GroupElement>,
) -> HeckePairContext {
    HeckePairContext {
        label: label.into(),
        kind: GroupKind::Perm { degree },
        membership: finite_membership(&h_gens, degree),
        g_generators: g_gens,
        h_generators: h_gens,
        finitely_generated: true,
        reduction_kernel: None,
        conventions: vec![
            "points are 0-indexed; (x*y)[i] = x[y[i]]; G generated by adjacent transpositions".into(),
        ],
    }
}

fn symmetric_group_pair(label: &str, degree: usize, h: Vec<GroupElement>) -> HeckePairContext {
    let g = (0..degree as u32 - 1).map(|i| transposition(degree, i, i + 1)).collect();
    permutation_pair(label, degree, g, h)
}

/// Resolves a catalog label.
pub fn catalog(label: &str) -> Result<HeckePairContext> {
    let unknown = || HeckeError::UnknownPair(label.to_string());
    let (head, arg) = match label.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (label, None),
    };
    let ctx = match (head, arg) {
        ("sl2z1p", Some(a)) => modular_pair(parse_prime(label, a)?, false),
        ("psl2z1p", Some(a)) => modular_pair(parse_prime(label, a)?, true),
        ("bc", None) => bost_connes(),
        ("bcp", Some(a)) => bost_connes_p(parse_prime(label, a)?),
        ("z", Some(a)) => {
            let d: usize = a.parse().map_err(|_| unknown())?;
            if d == 0 {
                return Err(unknown());
            }
            free_abelian(d)
        }
        ("dinf", None) => infinite_dihedral(),
        ("s3-h12", None) => symmetric_group_pair(label, 3, vec![transposition(3, 0, 1)]),
        ("s4-h12", None) => symmetric_group_pair(label, 4, vec![transposition(4, 0, 1)]),
        ("s4-h12-34", None) => symmetric_group_pair(
            label,
            4,
            vec![transposition(4, 0, 1), transposition(4, 2, 3)],
        ),
        _ => return Err(unknown()),
    };
    ctx.validate()?;
    Ok(ctx)
}

/// Builds a pair from a `key=value` description.
///
/// Keys: `label`, `kind` (`psl2z1p:p`, `sl2z1p:p`, `bcp:p`, `zvec:d`, `dinf`,
/// `perm:n`), and repeatable `g` / `h` element lines. For every kind except
/// `perm` the subgroup is the catalog one for that kind and `h` only lists
/// its generators.
pub fn custom_pair(text: &str) -> Result<HeckePairContext> {
    let mut label = None;
    let mut kind_spec = None;
    let mut g_lines = Vec::new();
    let mut h_lines = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| HeckeError::Config(format!("line {}: expected key=value", lineno + 1)))?;
        match k.trim() {
            "label" => label = Some(v.trim().to_string()),
            "kind" => kind_spec = Some(v.trim().to_string()),
            "g" => g_lines.push(v.trim().to_string()),
            "h" => h_lines.push(v.trim().to_string()),
            other => return Err(HeckeError::Config(format!("unknown pair key `{other}`"))),
        }
    }
    let kind_spec = kind_spec.ok_or_else(|| HeckeError::Config("missing `kind`".into()))?;
    let mut ctx = match kind_spec.split_once(':') {
        Some(("perm", n)) => {
            let degree: usize =
                n.parse().map_err(|_| HeckeError::Config(format!("bad degree `{n}`")))?;
            let kind = GroupKind::Perm { degree };
            let parse = |v: &Vec<String>| {
                v.iter().map(|t| parse_element(&kind, t)).collect::<Result<Vec<_>>>()
            };
            permutation_pair("custom", degree, parse(&g_lines)?, parse(&h_lines)?)
        }
        Some(("zvec", d)) => {
            free_abelian(d.parse().map_err(|_| HeckeError::Config(format!("bad dim `{d}`")))?)
        }
        _ => {
            let base = catalog(&kind_spec)?;
            if base.kind == (GroupKind::Affine { prime: None }) {
                return Err(HeckeError::Config("custom pairs must be finitely generated".into()));
            }
            base
        }
    };
    if !matches!(ctx.kind, GroupKind::Perm { .. }) {
        if !g_lines.is_empty() {
            ctx.g_generators =
                g_lines.iter().map(|t| parse_element(&ctx.kind, t)).collect::<Result<_>>()?;
        }
        if !h_lines.is_empty() {
            ctx.h_generators =
                h_lines.iter().map(|t| parse_element(&ctx.kind, t)).collect::<Result<_>>()?;
        }
    }
    ctx.label = label.unwrap_or_else(|| format!("custom:{kind_spec}"));
    ctx.conventions.push("custom pair from configuration".into());
    ctx.validate()?;
    Ok(ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::parse_element;

    #[test]
    fn psl2_membership() {
        let ctx = catalog("psl2z1p:2").unwrap();
        let t = parse_element(&ctx.kind, "mat 1 1 0 1").unwrap();
        let d = parse_element(&ctx.kind, "mat 2 0 0 1/2").unwrap();
        assert!(ctx.in_h(&t));
        assert!(!ctx.in_h(&d));
    }

    #[test]
    fn bc_membership() {
        let ctx = catalog("bc").unwrap();
        assert!(!ctx.in_h(&GroupElement::aff(q_frac(1, 2), q(1))));
        assert!(ctx.in_h(&GroupElement::aff(q(-3), q(1))));
        assert!(!ctx.finitely_generated);
    }

    #[test]
    fn lattice_key_is_constant_on_cosets() {
        let ctx = catalog("psl2z1p:2").unwrap();
        let g = ctx.g_generators[2].clone();
        for h in ctx.h_symmetric_generators() {
            let hg = h.mul(&g).unwrap();
            assert_eq!(ctx.coset_key(&hg), ctx.coset_key(&g));
        }
        assert_ne!(ctx.coset_key(&g), ctx.coset_key(&g.inv()));
        let (a, b, d) = row_lattice_hermite(&q(0), &q(-1), &q(1), &q(0));
        assert_eq!((a, b, d), (q(1), q(0), q(1)));
    }

    #[test]
    fn finite_h_closure() {
        let ctx = catalog("s4-h12-34").unwrap();
        assert_eq!(ctx.finite_h().unwrap().len(), 4);
        assert!(matches!(catalog("psl2z1p:2").unwrap().finite_h(), Err(HeckeError::InfiniteH)));
    }

    #[test]
    fn catalog_labels_resolve() {
        for l in CATALOG_LABELS {
            let ctx = catalog(l).unwrap();
            assert_eq!(&ctx.label, l);
        }
        assert!(catalog("psl2z1p:4").is_err());
        assert!(matches!(catalog("nope"), Err(HeckeError::UnknownPair(_))));
    }

    #[test]
    fn symmetric_generators_are_closed_under_inverse() {
        for l in CATALOG_LABELS {
            let ctx = catalog(l).unwrap();
            let s = ctx.symmetric_generators();
            for g in &s {
                assert!(s.contains(&g.inv()), "{l}: {g}");
            }
        }
    }

    #[test]
    fn custom_permutation_pair() {
        let text = "label = a4\nkind = perm:4\ng = perm 1 2 0 3\ng = perm 0 2 3 1\nh = perm 1 2 0 3\n";
        let ctx = custom_pair(text).unwrap();
        assert_eq!(ctx.label, "a4");
        assert_eq!(ctx.finite_h().unwrap().len(), 3);
        assert!(custom_pair("kind = bc").is_err());
        assert!(custom_pair("kind = perm:3\nh = perm 1 0 0").is_err());
    }
}
