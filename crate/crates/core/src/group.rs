//! Concrete group arithmetic for the catalog instances.
//!
//! Every instance shares the [`GroupElement`] enum so that coset machinery can
//! be written once. Scalars over ℚ are arbitrary-precision rationals; nothing
//! in this module touches floating point.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{HeckeError, Result};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_frac(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Renders `n` or `n/d`.
pub fn render_q(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn parse_q(tok: &str, pos: usize) -> Result<Q> {
    let bad = |msg: &str| HeckeError::Parse { pos, msg: format!("{msg}: `{tok}`") };
    let (n, d) = match tok.split_once('/') {
        Some((n, d)) => (n, d),
        None => (tok, "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad("bad numerator"))?;
    let d: BigInt = d.parse().map_err(|_| bad("bad denominator"))?;
    if d.is_zero() {
        return Err(bad("zero denominator"));
    }
    Ok(Q::new(n, d))
}

/// True when `n` is a (nonnegative) power of `p`.
fn is_power_of(n: &BigInt, p: u64) -> bool {
    let p = BigInt::from(p);
    let mut n = n.abs();
    if n.is_zero() {
        return false;
    }
    while (&n % &p).is_zero() {
        n /= &p;
    }
    n.is_one()
}

/// Membership in ℤ[1/p]: the reduced denominator is a power of `p`.
pub fn in_z_inv_p(x: &Q, p: u64) -> bool {
    is_power_of(x.denom(), p)
}

pub fn is_integer(x: &Q) -> bool {
    x.denom().is_one()
}

/// `x - a * floor(x / a)`, the representative of `x` modulo `aℤ` in `[0, a)`.
pub fn q_mod(x: &Q, a: &Q) -> Q {
    let t = (x / a).floor();
    x - a * t
}

/// Which concrete group an element lives in.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupKind {
    /// SL₂ (or PSL₂ when `projective`) over ℚ, or over ℤ[1/p] when `prime` is set.
    Matrix2 { projective: bool, prime: Option<u64> },
    /// `[[1,b],[0,a]]` with `a > 0`; over ℤ[1/p] ⋊ p^ℤ when `prime` is set, else ℚ ⋊ ℚ₊.
    Affine { prime: Option<u64> },
    Perm { degree: usize },
    ZVec { dim: usize },
    /// Isometries `x ↦ ±x + n` of ℤ.
    Dihedral,
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupKind::Matrix2 { projective, prime } => {
                let name = if *projective { "PSL2" } else { "SL2" };
                match prime {
                    Some(p) => write!(f, "{name}(Z[1/{p}])"),
                    None => write!(f, "{name}(Q)"),
                }
            }
            GroupKind::Affine { prime: Some(p) } => write!(f, "Z[1/{p}] x| {p}^Z"),
            GroupKind::Affine { prime: None } => write!(f, "Q x| Q+"),
            GroupKind::Perm { degree } => write!(f, "Sym({degree})"),
            GroupKind::ZVec { dim } => write!(f, "Z^{dim}"),
            GroupKind::Dihedral => write!(f, "D_inf"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mat2 {
    pub a: Q,
    pub b: Q,
    pub c: Q,
    pub d: Q,
    pub projective: bool,
}

impl Mat2 {
    pub fn new(a: Q, b: Q, c: Q, d: Q, projective: bool) -> Self {
        let mut m = Mat2 { a, b, c, d, projective };
        if projective {
            m.canonicalize();
        }
        m
    }

    pub fn det(&self) -> Q {
        &self.a * &self.d - &self.b * &self.c
    }

    fn entries(&self) -> [&Q; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }

    /// Sign rule for PSL₂: the first nonzero entry is positive.
    fn canonicalize(&mut self) {
        let first = self.entries().into_iter().find(|x| !x.is_zero()).cloned();
        if first.is_some_and(|x| x.is_negative()) {
            self.a = -&self.a;
            self.b = -&self.b;
            self.c = -&self.c;
            self.d = -&self.d;
        }
    }

    fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2::new(
            &self.a * &o.a + &self.b * &o.c,
            &self.a * &o.b + &self.b * &o.d,
            &self.c * &o.a + &self.d * &o.c,
            &self.c * &o.b + &self.d * &o.d,
            self.projective,
        )
    }

    /// Inverse of a determinant-one matrix.
    fn inv(&self) -> Mat2 {
        Mat2::new(self.d.clone(), -&self.b, -&self.c, self.a.clone(), self.projective)
    }
}

/// `[[1,b],[0,a]]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Affine {
    pub b: Q,
    pub a: Q,
}

impl Affine {
    fn mul(&self, o: &Affine) -> Affine {
        // [[1,b],[0,a]]·[[1,b'],[0,a']] = [[1, b' + b·a'], [0, a·a']]
        Affine { b: &o.b + &self.b * &o.a, a: &self.a * &o.a }
    }

    fn inv(&self) -> Affine {
        let ai = self.a.recip();
        Affine { b: -&self.b * &ai, a: ai }
    }
}

/// Permutation of `{0..n-1}`; `(x·y)[i] = x[y[i]]`, i.e. apply `y` first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Perm {
    pub images: Vec<u32>,
}

impl Perm {
    pub fn identity(n: usize) -> Self {
        Perm { images: (0..n as u32).collect() }
    }

    pub fn from_images(images: Vec<u32>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            let i = i as usize;
            if i >= n || seen[i] {
                return Err(HeckeError::Domain(format!("{images:?} is not a permutation")));
            }
            seen[i] = true;
        }
        Ok(Perm { images })
    }

    /// Transposition of `i` and `j` in degree `n`.
    pub fn transposition(n: usize, i: u32, j: u32) -> Self {
        let mut p = Perm::identity(n);
        p.images.swap(i as usize, j as usize);
        p
    }

    fn mul(&self, o: &Perm) -> Perm {
        Perm { images: o.images.iter().map(|&i| self.images[i as usize]).collect() }
    }

    fn inv(&self) -> Perm {
        let mut out = vec![0; self.images.len()];
        for (i, &j) in self.images.iter().enumerate() {
            out[j as usize] = i as u32;
        }
        Perm { images: out }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ZVec {
    pub coords: Vec<i64>,
}

/// The isometry `x ↦ (flip ? -x : x) + shift` of ℤ.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dihedral {
    pub flip: bool,
    pub shift: i64,
}

impl Dihedral {
    fn sign(&self) -> i64 {
        if self.flip {
            -1
        } else {
            1
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupElement {
    Matrix2Q(Mat2),
    AffineQ(Affine),
    Perm(Perm),
    ZVec(ZVec),
    Dihedral(Dihedral),
}

impl GroupElement {
    pub fn identity(kind: &GroupKind) -> GroupElement {
        match kind {
            GroupKind::Matrix2 { projective, .. } => {
                GroupElement::Matrix2Q(Mat2::new(q(1), q(0), q(0), q(1), *projective))
            }
            GroupKind::Affine { .. } => GroupElement::AffineQ(Affine { b: q(0), a: q(1) }),
            GroupKind::Perm { degree } => GroupElement::Perm(Perm::identity(*degree)),
            GroupKind::ZVec { dim } => GroupElement::ZVec(ZVec { coords: vec![0; *dim] }),
            GroupKind::Dihedral => GroupElement::Dihedral(Dihedral { flip: false, shift: 0 }),
        }
    }

    pub fn mat(a: Q, b: Q, c: Q, d: Q, projective: bool) -> GroupElement {
        GroupElement::Matrix2Q(Mat2::new(a, b, c, d, projective))
    }

    pub fn aff(b: Q, a: Q) -> GroupElement {
        GroupElement::AffineQ(Affine { b, a })
    }

    pub fn zvec(coords: Vec<i64>) -> GroupElement {
        GroupElement::ZVec(ZVec { coords })
    }

    pub fn perm(images: Vec<u32>) -> Result<GroupElement> {
        Perm::from_images(images).map(GroupElement::Perm)
    }

    pub fn dihedral(flip: bool, shift: i64) -> GroupElement {
        GroupElement::Dihedral(Dihedral { flip, shift })
    }

    /// Short tag used in error messages and kind checks.
    fn shape(&self) -> String {
        match self {
            GroupElement::Matrix2Q(m) if m.projective => "psl2".into(),
            GroupElement::Matrix2Q(_) => "sl2".into(),
            GroupElement::AffineQ(_) => "aff".into(),
            GroupElement::Perm(p) => format!("perm{}", p.images.len()),
            GroupElement::ZVec(v) => format!("zvec{}", v.coords.len()),
            GroupElement::Dihedral(_) => "dih".into(),
        }
    }

    pub fn mul(&self, other: &GroupElement) -> Result<GroupElement> {
        use GroupElement::*;
        let mixed = || HeckeError::MixedKinds(self.shape(), other.shape());
        Ok(match (self, other) {
            (Matrix2Q(x), Matrix2Q(y)) if x.projective == y.projective => Matrix2Q(x.mul(y)),
            (AffineQ(x), AffineQ(y)) => AffineQ(x.mul(y)),
            (Perm(x), Perm(y)) if x.images.len() == y.images.len() => Perm(x.mul(y)),
            (ZVec(x), ZVec(y)) if x.coords.len() == y.coords.len() => {
                let coords = x
                    .coords
                    .iter()
                    .zip(&y.coords)
                    .map(|(a, b)| a.checked_add(*b).ok_or(HeckeError::ArithmeticOverflow("zvec")))
                    .collect::<Result<Vec<_>>>()?;
                ZVec(self::ZVec { coords })
            }
            (Dihedral(x), Dihedral(y)) => {
                let shift = y
                    .shift
                    .checked_mul(x.sign())
                    .and_then(|s| s.checked_add(x.shift))
                    .ok_or(HeckeError::ArithmeticOverflow("dihedral"))?;
                Dihedral(self::Dihedral { flip: x.flip != y.flip, shift })
            }
            _ => return Err(mixed()),
        })
    }

    pub fn inv(&self) -> GroupElement {
        use GroupElement::*;
        match self {
            Matrix2Q(m) => Matrix2Q(m.inv()),
            AffineQ(x) => AffineQ(x.inv()),
            Perm(p) => Perm(p.inv()),
            ZVec(v) => ZVec(self::ZVec { coords: v.coords.iter().map(|c| -c).collect() }),
            Dihedral(d) => Dihedral(self::Dihedral { flip: d.flip, shift: -d.shift * d.sign() }),
        }
    }

    /// Exact group equality; representatives of P-variants are canonical, so
    /// structural equality suffices.
    pub fn eq_elem(&self, other: &GroupElement) -> Result<bool> {
        if self.shape() != other.shape() {
            return Err(HeckeError::MixedKinds(self.shape(), other.shape()));
        }
        Ok(self == other)
    }

    pub fn is_identity(&self) -> bool {
        use GroupElement::*;
        match self {
            Matrix2Q(m) => m.a.is_one() && m.b.is_zero() && m.c.is_zero() && m.d.is_one(),
            AffineQ(x) => x.b.is_zero() && x.a.is_one(),
            Perm(p) => p.images.iter().enumerate().all(|(i, &j)| i as u32 == j),
            ZVec(v) => v.coords.iter().all(|&c| c == 0),
            Dihedral(d) => !d.flip && d.shift == 0,
        }
    }

    /// `self·other·self⁻¹`.
    pub fn conj(&self, other: &GroupElement) -> Result<GroupElement> {
        self.mul(other)?.mul(&self.inv())
    }

    pub fn pow(&self, n: i64) -> Result<GroupElement> {
        let base = if n < 0 { self.inv() } else { self.clone() };
        let mut acc = match self {
            GroupElement::Matrix2Q(m) => {
                GroupElement::mat(q(1), q(0), q(0), q(1), m.projective)
            }
            GroupElement::AffineQ(_) => GroupElement::aff(q(0), q(1)),
            GroupElement::Perm(p) => GroupElement::Perm(Perm::identity(p.images.len())),
            GroupElement::ZVec(v) => GroupElement::zvec(vec![0; v.coords.len()]),
            GroupElement::Dihedral(_) => GroupElement::dihedral(false, 0),
        };
        for _ in 0..n.unsigned_abs() {
            acc = acc.mul(&base)?;
        }
        Ok(acc)
    }
}

/// Checks that `g` is a well-formed element of `kind`.
pub fn validate_element(kind: &GroupKind, g: &GroupElement) -> Result<()> {
    let mismatch = || HeckeError::MixedKinds(kind.to_string(), g.shape());
    match (kind, g) {
        (GroupKind::Matrix2 { projective, prime }, GroupElement::Matrix2Q(m)) => {
            if m.projective != *projective {
                return Err(mismatch());
            }
            if !m.det().is_one() {
                return Err(HeckeError::Domain(format!("det = {} != 1", render_q(&m.det()))));
            }
            if let Some(p) = prime {
                if let Some(x) = m.entries().into_iter().find(|x| !in_z_inv_p(x, *p)) {
                    return Err(HeckeError::Domain(format!(
                        "entry {} has a denominator that is not a power of {p}",
                        render_q(x)
                    )));
                }
            }
            Ok(())
        }
        (GroupKind::Affine { prime }, GroupElement::AffineQ(x)) => {
            if !x.a.is_positive() {
                return Err(HeckeError::Domain(format!("a = {} must be positive", render_q(&x.a))));
            }
            if let Some(p) = prime {
                if !in_z_inv_p(&x.b, *p) {
                    return Err(HeckeError::Domain(format!(
                        "b = {} not in Z[1/{p}]",
                        render_q(&x.b)
                    )));
                }
                if !is_power_of(x.a.numer(), *p) || !is_power_of(x.a.denom(), *p) {
                    return Err(HeckeError::Domain(format!(
                        "a = {} not a power of {p}",
                        render_q(&x.a)
                    )));
                }
            }
            Ok(())
        }
        (GroupKind::Perm { degree }, GroupElement::Perm(p)) if p.images.len() == *degree => {
            Perm::from_images(p.images.clone()).map(|_| ())
        }
        (GroupKind::ZVec { dim }, GroupElement::ZVec(v)) if v.coords.len() == *dim => Ok(()),
        (GroupKind::Dihedral, GroupElement::Dihedral(_)) => Ok(()),
        _ => Err(mismatch()),
    }
}

/// Parses the whitespace-separated element grammar
/// (`mat a b c d`, `aff b a`, `perm i0 .. ik`, `zvec n1 .. nd`, `dih s n`)
/// and validates the result against `kind`.
pub fn parse_element(kind: &GroupKind, text: &str) -> Result<GroupElement> {
    let toks = tokenize(text);
    let Some(&(head_pos, head)) = toks.first() else {
        return Err(HeckeError::Parse { pos: 0, msg: "empty element".into() });
    };
    let args = &toks[1..];
    let arity = |n: usize| -> Result<()> {
        if args.len() != n {
            let pos = args.get(n).map_or(text.len(), |t| t.0);
            return Err(HeckeError::Parse {
                pos,
                msg: format!("`{head}` takes {n} arguments, got {}", args.len()),
            });
        }
        Ok(())
    };
    let g = match head {
        "mat" => {
            arity(4)?;
            let v = args.iter().map(|&(p, t)| parse_q(t, p)).collect::<Result<Vec<_>>>()?;
            let projective = matches!(kind, GroupKind::Matrix2 { projective: true, .. });
            let [a, b, c, d]: [Q; 4] = v.try_into().expect("arity checked");
            // validate the determinant before the sign rule touches anything
            let raw = Mat2 { a, b, c, d, projective: false };
            if !raw.det().is_one() {
                return Err(HeckeError::Domain(format!("det = {} != 1", render_q(&raw.det()))));
            }
            GroupElement::mat(raw.a, raw.b, raw.c, raw.d, projective)
        }
        "aff" => {
            arity(2)?;
            GroupElement::aff(parse_q(args[0].1, args[0].0)?, parse_q(args[1].1, args[1].0)?)
        }
        "perm" => {
            let images = args
                .iter()
                .map(|&(p, t)| {
                    t.parse::<u32>().map_err(|_| HeckeError::Parse {
                        pos: p,
                        msg: format!("bad permutation image `{t}`"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            GroupElement::perm(images)?
        }
        "zvec" => {
            let coords = args
                .iter()
                .map(|&(p, t)| {
                    t.parse::<i64>()
                        .map_err(|_| HeckeError::Parse { pos: p, msg: format!("bad integer `{t}`") })
                })
                .collect::<Result<Vec<_>>>()?;
            GroupElement::zvec(coords)
        }
        "dih" => {
            arity(2)?;
            let flip = match args[0].1 {
                "1" | "+1" => false,
                "-1" => true,
                t => {
                    return Err(HeckeError::Parse {
                        pos: args[0].0,
                        msg: format!("dihedral sign must be 1 or -1, got `{t}`"),
                    })
                }
            };
            let shift = args[1].1.parse::<i64>().map_err(|_| HeckeError::Parse {
                pos: args[1].0,
                msg: format!("bad integer `{}`", args[1].1),
            })?;
            GroupElement::dihedral(flip, shift)
        }
        other => {
            return Err(HeckeError::Parse { pos: head_pos, msg: format!("unknown element tag `{other}`") })
        }
    };
    validate_element(kind, &g)?;
    Ok(g)
}

fn tokenize(text: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in text.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s, &text[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s, &text[s..]));
    }
    out
}

pub fn render_element(g: &GroupElement) -> String {
    g.to_string()
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupElement::Matrix2Q(m) => write!(
                f,
                "mat {} {} {} {}",
                render_q(&m.a),
                render_q(&m.b),
                render_q(&m.c),
                render_q(&m.d)
            ),
            GroupElement::AffineQ(x) => write!(f, "aff {} {}", render_q(&x.b), render_q(&x.a)),
            GroupElement::Perm(p) => {
                f.write_str("perm")?;
                for i in &p.images {
                    write!(f, " {i}")?;
                }
                Ok(())
            }
            GroupElement::ZVec(v) => {
                f.write_str("zvec")?;
                for c in &v.coords {
                    write!(f, " {c}")?;
                }
                Ok(())
            }
            GroupElement::Dihedral(d) => write!(f, "dih {} {}", d.sign(), d.shift),
        }
    }
}

/// Integer lcm of the denominators of `xs`.
pub(crate) fn common_denominator<'a>(xs: impl IntoIterator<Item = &'a Q>) -> BigInt {
    xs.into_iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn psl() -> GroupKind {
        GroupKind::Matrix2 { projective: true, prime: Some(2) }
    }

    #[test]
    fn s_squared_is_minus_identity_and_canonicalizes() {
        let sl = GroupKind::Matrix2 { projective: false, prime: Some(2) };
        let s = parse_element(&sl, "mat 0 -1 1 0").unwrap();
        let s2 = s.mul(&s).unwrap();
        assert_eq!(s2.to_string(), "mat -1 0 0 -1");
        let ps = parse_element(&psl(), "mat 0 -1 1 0").unwrap();
        let ps2 = ps.mul(&ps).unwrap();
        assert_eq!(ps2, GroupElement::identity(&psl()));
        // sign rule: first nonzero entry positive
        assert_eq!(ps.to_string(), "mat 0 1 -1 0");
    }

    #[test]
    fn affine_product_matches_matrix_product() {
        let x = GroupElement::aff(q(0), q(2));
        let y = GroupElement::aff(q(1), q(1));
        // oracle: the same product as 2x2 matrices [[1,b],[0,a]]
        let as_mat = |b: Q, a: Q| Mat2 { a: q(1), b, c: q(0), d: a, projective: false };
        let m = as_mat(q(0), q(2)).mul(&as_mat(q(1), q(1)));
        assert_eq!((m.a.clone(), m.c.clone()), (q(1), q(0)));
        assert_eq!(x.mul(&y).unwrap(), GroupElement::aff(m.b, m.d));
        assert_eq!(x.mul(&y).unwrap(), GroupElement::aff(q(1), q(2)));
    }

    #[test]
    fn parse_errors_and_domain_errors() {
        assert!(matches!(
            parse_element(&psl(), "mat 1 1/3 0 1"),
            Err(HeckeError::Domain(_))
        ));
        assert!(matches!(parse_element(&psl(), "mat 2 0 0 1"), Err(HeckeError::Domain(_))));
        assert!(matches!(
            parse_element(&GroupKind::Affine { prime: None }, "aff 1 -2"),
            Err(HeckeError::Domain(_))
        ));
        assert!(matches!(
            parse_element(&GroupKind::Affine { prime: Some(2) }, "aff 1/3 2"),
            Err(HeckeError::Domain(_))
        ));
        assert!(matches!(
            parse_element(&GroupKind::Affine { prime: Some(2) }, "aff 1 3"),
            Err(HeckeError::Domain(_))
        ));
        match parse_element(&psl(), "mat 1 x 0 1") {
            Err(HeckeError::Parse { pos, .. }) => assert_eq!(pos, 6),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_element(&psl(), ""), Err(HeckeError::Parse { .. })));
        assert!(matches!(
            parse_element(&GroupKind::Perm { degree: 3 }, "perm 0 0 1"),
            Err(HeckeError::Domain(_))
        ));
        assert!(matches!(
            parse_element(&GroupKind::ZVec { dim: 2 }, "zvec 1"),
            Err(HeckeError::MixedKinds(..))
        ));
    }

    #[test]
    fn render_round_trip() {
        let k = GroupKind::Affine { prime: None };
        let g = parse_element(&k, "aff 3/4 2").unwrap();
        assert_eq!(g, GroupElement::aff(q_frac(3, 4), q(2)));
        assert_eq!(render_element(&g), "aff 3/4 2");
        let g = parse_element(&psl(), "mat -2 0 0 -1/2").unwrap();
        assert_eq!(render_element(&g), "mat 2 0 0 1/2");
    }

    #[test]
    fn mixed_kinds_rejected() {
        let a = GroupElement::zvec(vec![1]);
        let b = GroupElement::aff(q(0), q(1));
        assert!(matches!(a.mul(&b), Err(HeckeError::MixedKinds(..))));
        assert!(matches!(
            GroupElement::zvec(vec![1]).mul(&GroupElement::zvec(vec![1, 2])),
            Err(HeckeError::MixedKinds(..))
        ));
    }

    #[test]
    fn dihedral_law() {
        let s = GroupElement::dihedral(true, 0);
        let t = GroupElement::dihedral(false, 1);
        // s t s = t^-1
        assert_eq!(s.mul(&t).unwrap().mul(&s).unwrap(), t.inv());
        assert!(s.mul(&s).unwrap().is_identity());
    }

    #[test]
    fn q_mod_is_in_range() {
        assert_eq!(q_mod(&q_frac(7, 2), &q(2)), q_frac(3, 2));
        assert_eq!(q_mod(&q(-1), &q(2)), q(1));
        assert_eq!(q_mod(&q(5), &q_frac(1, 2)), q(0));
    }
}
