//! Right-coset interning, Schreier BFS balls and the double-coset partition.
//!
//! A [`CosetStore`] holds right cosets `Hx` of one pair. Cosets are bucketed by
//! [`CosetKey`] and the membership test `x y⁻¹ ∈ H` decides equality. The ball
//! `B_r` around `He` is grown breadth-first over `Ŝ`; double cosets are right
//! `H`-orbits and may reach past the enumerated ball, in which case the extra
//! cosets are interned with an unknown word length until BFS reaches them.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{HeckeError, Result};
use crate::group::{render_q, GroupElement, Q};
use crate::pair::{CosetKey, HeckePairContext};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CosetId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DoubleCosetId(pub usize);

impl fmt::Display for CosetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for DoubleCosetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    pub max_cosets: usize,
    pub max_orbit: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { max_cosets: 2_000_000, max_orbit: 100_000 }
    }
}

#[derive(Clone, Debug)]
struct CosetRecord {
    rep: GroupElement,
    word_length: Option<u32>,
    dc: Option<DoubleCosetId>,
}

#[derive(Clone, Debug)]
pub struct DoubleCosetRecord {
    pub rep: GroupElement,
    /// Right cosets in BFS order of the orbit; `members[0]` holds `rep`.
    pub members: Vec<CosetId>,
    pub r: usize,
    pub l: Option<usize>,
    pub delta: Option<Q>,
    pub inverse: Option<DoubleCosetId>,
}

static NEXT_STORE_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Clone, Debug)]
pub struct CosetStore {
    id: u64,
    ctx: Arc<HeckePairContext>,
    s_hat: Vec<GroupElement>,
    h_hat: Vec<GroupElement>,
    cosets: Vec<CosetRecord>,
    index: HashMap<CosetKey, Vec<CosetId>>,
    adjacency: Vec<Option<Vec<CosetId>>>,
    frontier: Vec<CosetId>,
    radius_complete: u32,
    double_cosets: Vec<DoubleCosetRecord>,
    sealed: bool,
    max_cosets: usize,
    pub(crate) products: HashMap<(DoubleCosetId, DoubleCosetId), Vec<(DoubleCosetId, u64)>>,
}

pub const BASE_COSET: CosetId = CosetId(0);

impl CosetStore {
    /// An unsealed store containing only `He`.
    pub fn new(ctx: Arc<HeckePairContext>, caps: Caps) -> Self {
        let e = ctx.identity();
        let mut store = CosetStore {
            id: NEXT_STORE_ID.fetch_add(1, Ordering::Relaxed),
            s_hat: ctx.symmetric_generators(),
            h_hat: ctx.h_symmetric_generators(),
            ctx,
            cosets: Vec::new(),
            index: HashMap::new(),
            adjacency: Vec::new(),
            frontier: Vec::new(),
            radius_complete: 0,
            double_cosets: Vec::new(),
            sealed: false,
            max_cosets: caps.max_cosets,
            products: HashMap::new(),
        };
        let (he, _) = store.intern(&e).expect("empty store has room for He");
        store.cosets[he.0].word_length = Some(0);
        store.frontier.push(he);
        store
    }

    pub fn store_id(&self) -> u64 {
        self.id
    }

    pub fn context(&self) -> &HeckePairContext {
        &self.ctx
    }

    pub fn context_arc(&self) -> Arc<HeckePairContext> {
        Arc::clone(&self.ctx)
    }

    /// `Ŝ \ {e}` in the order used for the adjacency lists.
    pub fn generators(&self) -> &[GroupElement] {
        &self.s_hat
    }

    pub fn len(&self) -> usize {
        self.cosets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cosets.is_empty()
    }

    pub fn is_sealed(&self) -> bool {
        self.sealed
    }

    pub fn seal(&mut self) {
        self.sealed = true;
    }

    pub fn radius_complete(&self) -> u32 {
        self.radius_complete
    }

    pub fn rep(&self, c: CosetId) -> &GroupElement {
        &self.cosets[c.0].rep
    }

    pub fn word_length(&self, c: CosetId) -> Option<u32> {
        self.cosets[c.0].word_length
    }

    pub fn coset_class(&self, c: CosetId) -> Option<DoubleCosetId> {
        self.cosets[c.0].dc
    }

    pub fn neighbors(&self, c: CosetId) -> Option<&[CosetId]> {
        self.adjacency.get(c.0).and_then(|a| a.as_deref())
    }

    pub fn double_cosets(&self) -> &[DoubleCosetRecord] {
        &self.double_cosets
    }

    pub fn double_coset(&self, d: DoubleCosetId) -> Result<&DoubleCosetRecord> {
        self.double_cosets.get(d.0).ok_or(HeckeError::UnknownDoubleCoset(d.0))
    }

    pub fn num_double_cosets(&self) -> usize {
        self.double_cosets.len()
    }

    /// Class of `He`, i.e. `H` itself.
    pub fn identity_class(&mut self) -> Result<DoubleCosetId> {
        self.right_h_orbit(BASE_COSET, usize::MAX)
    }

    /// Public interning entry point; refuses once the store is sealed.
    pub fn intern_right_coset(&mut self, g: &GroupElement) -> Result<CosetId> {
        if self.sealed {
            return Err(HeckeError::StoreSealed);
        }
        self.intern(g).map(|(c, _)| c)
    }

    /// Interns `Hg`, returning its id and whether it was new. Used by the
    /// build phase and by the extension path (orbits, products) after sealing.
    pub(crate) fn intern(&mut self, g: &GroupElement) -> Result<(CosetId, bool)> {
        if let Some(c) = self.lookup(g)? {
            return Ok((c, false));
        }
        if self.cosets.len() >= self.max_cosets {
            return Err(HeckeError::CapExceeded { max_cosets: self.max_cosets });
        }
        let id = CosetId(self.cosets.len());
        self.cosets.push(CosetRecord { rep: g.clone(), word_length: None, dc: None });
        self.adjacency.push(None);
        self.index.entry(self.ctx.coset_key(g)).or_default().push(id);
        Ok((id, true))
    }

    /// Id of `Hg` if it is already interned.
    pub fn lookup(&self, g: &GroupElement) -> Result<Option<CosetId>> {
        let Some(bucket) = self.index.get(&self.ctx.coset_key(g)) else {
            return Ok(None);
        };
        for &c in bucket {
            if self.ctx.same_right_coset(g, &self.cosets[c.0].rep)? {
                return Ok(Some(c));
            }
        }
        Ok(None)
    }

    /// Continues the breadth-first search until `B_r` is complete. Allowed on
    /// sealed stores: it only assigns word lengths and adjacency.
    pub fn extend_radius(&mut self, r: u32) -> Result<()> {
        while self.radius_complete < r {
            let depth = self.radius_complete + 1;
            let mut next = Vec::new();
            let frontier = std::mem::take(&mut self.frontier);
            for &x in &frontier {
                let rep = self.cosets[x.0].rep.clone();
                let mut adj = Vec::with_capacity(self.s_hat.len());
                for i in 0..self.s_hat.len() {
                    let y = rep.mul(&self.s_hat[i])?;
                    let (c, _) = self.intern(&y)?;
                    if self.cosets[c.0].word_length.is_none() {
                        self.cosets[c.0].word_length = Some(depth);
                        next.push(c);
                    }
                    adj.push(c);
                }
                self.adjacency[x.0] = Some(adj);
            }
            self.frontier = next;
            self.radius_complete = depth;
        }
        Ok(())
    }

    /// Word length of `c`, continuing the BFS as far as needed.
    pub fn word_length_of(&mut self, c: CosetId) -> Result<u32> {
        loop {
            if let Some(w) = self.cosets[c.0].word_length {
                return Ok(w);
            }
            if self.frontier.is_empty() {
                // finite quotient exhausted; every coset should have been reached
                return Err(HeckeError::Domain(format!("coset {c} unreachable from He")));
            }
            let r = self.radius_complete + 1;
            self.extend_radius(r)?;
        }
    }

    /// Largest word length among the members of `d`.
    pub fn class_max_word_length(&mut self, d: DoubleCosetId) -> Result<u32> {
        let members = self.double_coset(d)?.members.clone();
        let mut m = 0;
        for c in members {
            m = m.max(self.word_length_of(c)?);
        }
        Ok(m)
    }

    /// Ids of the ball `B_r`, ascending.
    pub fn ball(&self, r: u32) -> Result<Vec<CosetId>> {
        if r > self.radius_complete {
            return Err(HeckeError::BallIncomplete { requested: r, complete: self.radius_complete });
        }
        Ok((0..self.cosets.len())
            .filter(|&i| self.cosets[i].word_length.is_some_and(|w| w <= r))
            .map(CosetId)
            .collect())
    }

    /// Number of cosets at each BFS depth `0..=radius_complete`.
    pub fn depth_histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.radius_complete as usize + 1];
        for rec in &self.cosets {
            if let Some(w) = rec.word_length {
                if w <= self.radius_complete {
                    h[w as usize] += 1;
                }
            }
        }
        h
    }

    /// The double coset containing `Hc`: the orbit of `Hc` under right
    /// multiplication by `H`, computed breadth-first over the H-generators.
    pub fn right_h_orbit(&mut self, c: CosetId, max_orbit: usize) -> Result<DoubleCosetId> {
        if let Some(d) = self.cosets[c.0].dc {
            return Ok(d);
        }
        let mut members = vec![c];
        let mut seen = HashSet::from([c]);
        let mut queue = VecDeque::from([c]);
        while let Some(x) = queue.pop_front() {
            let rep = self.cosets[x.0].rep.clone();
            for i in 0..self.h_hat.len() {
                let y = rep.mul(&self.h_hat[i])?;
                let (yc, _) = self.intern(&y)?;
                if seen.insert(yc) {
                    if members.len() >= max_orbit {
                        return Err(HeckeError::OrbitCapExceeded { max_orbit });
                    }
                    members.push(yc);
                    queue.push_back(yc);
                }
            }
        }
        let d = DoubleCosetId(self.double_cosets.len());
        for &m in &members {
            debug_assert!(self.cosets[m.0].dc.is_none());
            self.cosets[m.0].dc = Some(d);
        }
        self.double_cosets.push(DoubleCosetRecord {
            rep: self.cosets[c.0].rep.clone(),
            r: members.len(),
            members,
            l: None,
            delta: None,
            inverse: None,
        });
        Ok(d)
    }

    /// Double coset `HgH`, interning `Hg` and its orbit when new.
    pub fn class_of(&mut self, g: &GroupElement, max_orbit: usize) -> Result<DoubleCosetId> {
        let (c, _) = self.intern(g)?;
        self.right_h_orbit(c, max_orbit)
    }

    /// Assigns a double coset to every coset of `B_r`.
    pub fn classify_ball(&mut self, r: u32, max_orbit: usize) -> Result<Vec<DoubleCosetId>> {
        let mut classes = Vec::new();
        for c in self.ball(r)? {
            let d = self.right_h_orbit(c, max_orbit)?;
            if !classes.contains(&d) {
                classes.push(d);
            }
        }
        classes.sort();
        Ok(classes)
    }

    /// `L(d)` via the left-coset count of the class representative, with Δ = L/R.
    pub fn ensure_left_count(&mut self, d: DoubleCosetId, max_orbit: usize) -> Result<usize> {
        let rec = self.double_coset(d)?;
        if let Some(l) = rec.l {
            return Ok(l);
        }
        let l = left_l_count(&self.ctx, &rec.rep, max_orbit)?;
        let rec = &mut self.double_cosets[d.0];
        rec.l = Some(l);
        rec.delta = Some(Q::new(BigInt::from(l), BigInt::from(rec.r)));
        Ok(l)
    }

    /// `Δ(d) = L(d)/R(d)`.
    pub fn delta(&mut self, d: DoubleCosetId, max_orbit: usize) -> Result<Q> {
        self.ensure_left_count(d, max_orbit)?;
        Ok(self.double_cosets[d.0].delta.clone().expect("set with L"))
    }

    /// Computes `L` and `Δ` for every known class.
    pub fn fill_left_counts(&mut self, max_orbit: usize) -> Result<()> {
        for i in 0..self.double_cosets.len() {
            self.ensure_left_count(DoubleCosetId(i), max_orbit)?;
        }
        Ok(())
    }

    /// The class `H rep(d)⁻¹ H`, interned when new.
    pub fn invert_double_coset(
        &mut self,
        d: DoubleCosetId,
        max_orbit: usize,
    ) -> Result<DoubleCosetId> {
        let rec = self.double_coset(d)?;
        if let Some(e) = rec.inverse {
            return Ok(e);
        }
        let inv_rep = rec.rep.inv();
        let e = self.class_of(&inv_rep, max_orbit)?;
        self.double_cosets[d.0].inverse = Some(e);
        self.double_cosets[e.0].inverse = Some(d);
        Ok(e)
    }

    /// Inverse classes for every known class (the list may grow while running).
    pub fn fill_inverses(&mut self, max_orbit: usize) -> Result<()> {
        let mut i = 0;
        while i < self.double_cosets.len() {
            self.invert_double_coset(DoubleCosetId(i), max_orbit)?;
            i += 1;
        }
        Ok(())
    }

    /// Deterministic JSON snapshot ordered by id.
    pub fn snapshot(&self) -> serde_json::Value {
        let cosets: Vec<_> = self
            .cosets
            .iter()
            .enumerate()
            .map(|(i, c)| {
                json!({
                    "id": i,
                    "rep": c.rep.to_string(),
                    "wl": c.word_length,
                    "dc": c.dc.map(|d| d.0),
                })
            })
            .collect();
        let dcs: Vec<_> = self
            .double_cosets
            .iter()
            .enumerate()
            .map(|(i, d)| {
                json!({
                    "id": i,
                    "rep": d.rep.to_string(),
                    "R": d.r,
                    "L": d.l,
                    "delta": d.delta.as_ref().map(render_q),
                    "inv": d.inverse.map(|e| e.0),
                })
            })
            .collect();
        json!({
            "pair": self.ctx.label,
            "radius_complete": self.radius_complete,
            "cosets": cosets,
            "double_cosets": dcs,
        })
    }
}

/// Enumerates `{H s₁⋯s_k : k ≤ r_max, sᵢ ∈ Ŝ}` and seals the store.
pub fn enumerate_ball(ctx: Arc<HeckePairContext>, r_max: u32, caps: Caps) -> Result<CosetStore> {
    if !ctx.finitely_generated {
        return Err(HeckeError::NotFinitelyGenerated(ctx.label.clone()));
    }
    let mut store = CosetStore::new(ctx, caps);
    store.extend_radius(r_max)?;
    store.seal();
    Ok(store)
}

/// `L(g) = [H : H ∩ gHg⁻¹]`: the number of left cosets `hgH`, counted by a
/// BFS over left multiplication (`xH = yH` iff `x⁻¹y ∈ H`).
pub fn left_l_count(ctx: &HeckePairContext, g: &GroupElement, max_orbit: usize) -> Result<usize> {
    let h_hat = ctx.h_symmetric_generators();
    // left coset xH is stored through x⁻¹, whose right coset Hx⁻¹ has a key
    let mut buckets: HashMap<CosetKey, Vec<GroupElement>> = HashMap::new();
    let mut count = 0usize;
    let mut queue = VecDeque::new();
    let mut insert = |x: &GroupElement, count: &mut usize| -> Result<bool> {
        let xi = x.inv();
        let bucket = buckets.entry(ctx.coset_key(&xi)).or_default();
        for y in bucket.iter() {
            // xH = yH  iff  x⁻¹ y ∈ H
            if ctx.in_h(&xi.mul(&y.inv())?) {
                return Ok(false);
            }
        }
        if *count >= max_orbit {
            return Err(HeckeError::OrbitCapExceeded { max_orbit });
        }
        bucket.push(xi);
        *count += 1;
        Ok(true)
    };
    insert(g, &mut count)?;
    queue.push_back(g.clone());
    while let Some(x) = queue.pop_front() {
        for h in &h_hat {
            let y = h.mul(&x)?;
            if insert(&y, &mut count)? {
                queue.push_back(y);
            }
        }
    }
    Ok(count)
}

/// `R(g) = L(g⁻¹)`.
pub fn right_r_count(ctx: &HeckePairContext, g: &GroupElement, max_orbit: usize) -> Result<usize> {
    left_l_count(ctx, &g.inv(), max_orbit)
}

/// `Δ(g) = L(g)/R(g)`.
pub fn relative_modular(ctx: &HeckePairContext, g: &GroupElement, max_orbit: usize) -> Result<Q> {
    let l = left_l_count(ctx, g, max_orbit)?;
    let r = right_r_count(ctx, g, max_orbit)?;
    Ok(Q::new(BigInt::from(l), BigInt::from(r)))
}

#[derive(Clone, Debug, Serialize)]
pub struct UnimodularityReport {
    pub pair: String,
    pub verdict: bool,
    /// `(generator, Δ(generator))` for every listed generator.
    pub witnesses: Vec<(String, String)>,
    #[serde(skip)]
    pub deltas: Vec<(GroupElement, Q)>,
    /// True when the generator list is only a sample (a `true` verdict is then not conclusive).
    pub sampled: bool,
}

impl UnimodularityReport {
    /// First generator with `Δ ≠ 1`.
    pub fn witness(&self) -> Option<&(GroupElement, Q)> {
        self.deltas.iter().find(|(_, d)| *d != crate::group::q(1))
    }
}

/// Δ is a homomorphism trivial on `H`, so checking the generators of `G`
/// decides relative unimodularity.
pub fn unimodularity_check(ctx: &HeckePairContext, max_orbit: usize) -> Result<UnimodularityReport> {
    let mut deltas = Vec::new();
    for s in &ctx.g_generators {
        deltas.push((s.clone(), relative_modular(ctx, s, max_orbit)?));
    }
    let one = crate::group::q(1);
    let verdict = deltas.iter().all(|(_, d)| *d == one);
    Ok(UnimodularityReport {
        pair: ctx.label.clone(),
        verdict,
        witnesses: deltas.iter().map(|(g, d)| (g.to_string(), render_q(d))).collect(),
        deltas,
        sampled: !ctx.finitely_generated,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum HeckeVerdict {
    Hecke,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct HeckeReport {
    pub pair: String,
    pub depth: u32,
    pub verdict: HeckeVerdict,
    pub classes: usize,
    pub max_l: usize,
    pub max_r: usize,
    pub note: Option<String>,
}

/// Computes `L` and `R` for every class meeting the depth ball. A cap hit is
/// reported as `Inconclusive`; finiteness of `L` is only semi-decidable.
pub fn verify_hecke(ctx: Arc<HeckePairContext>, depth: u32, caps: Caps) -> HeckeReport {
    let label = ctx.label.clone();
    let run = || -> Result<(usize, usize, usize)> {
        let mut store = enumerate_ball(ctx, depth, caps)?;
        let classes = store.classify_ball(depth, caps.max_orbit)?;
        let (mut max_l, mut max_r) = (0, 0);
        for &d in &classes {
            max_l = max_l.max(store.ensure_left_count(d, caps.max_orbit)?);
            max_r = max_r.max(store.double_coset(d)?.r);
        }
        Ok((classes.len(), max_l, max_r))
    };
    match run() {
        Ok((classes, max_l, max_r)) => HeckeReport {
            pair: label,
            depth,
            verdict: HeckeVerdict::Hecke,
            classes,
            max_l,
            max_r,
            note: None,
        },
        Err(e) => HeckeReport {
            pair: label,
            depth,
            verdict: HeckeVerdict::Inconclusive,
            classes: 0,
            max_l: 0,
            max_r: 0,
            note: Some(e.to_string()),
        },
    }
}
