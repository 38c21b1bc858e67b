//! Lower bounds for `‖λ(f)‖` on `ℓ²(H\G)`: the compressed operator on a ball,
//! its largest singular value, and moment bounds `a_n^{1/2n}`. On top of
//! these sit the rapid-decay profile and the Kesten diagnostic.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    convolve, evaluate_product_at_identity, involution, is_self_adjoint, l1_norm_exact, ln_abs_q,
    q_to_f64, HeckeElement,
};
use crate::coset::{CosetId, CosetStore, DoubleCosetId, UnimodularityReport};
use crate::error::{HeckeError, Result};
use crate::group::{q, q_frac, render_q, Q};
use crate::growth::linear_fit;
use crate::length::LengthFunction;

/// `P_R λ(f) P_R` on the ball `B_R`, stored by columns.
#[derive(Clone, Debug)]
pub struct TruncatedOperator {
    pub radius: u32,
    /// Ball cosets in ascending id order; `He` is index 0.
    pub cosets: Vec<CosetId>,
    columns: Vec<Vec<(usize, Q)>>,
    float_columns: Vec<Vec<(usize, f64)>>,
}

impl TruncatedOperator {
    pub fn dimension(&self) -> usize {
        self.cosets.len()
    }

    pub fn entry(&self, x: usize, y: usize) -> Q {
        self.columns[y]
            .binary_search_by_key(&x, |(i, _)| *i)
            .map(|k| self.columns[y][k].1.clone())
            .unwrap_or_else(|_| Q::zero())
    }

    pub fn column(&self, y: usize) -> &[(usize, Q)] {
        &self.columns[y]
    }

    pub fn nonzeros(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    pub fn is_symmetric(&self) -> bool {
        self.columns
            .iter()
            .enumerate()
            .all(|(y, col)| col.iter().all(|(x, v)| self.entry(y, *x) == *v))
    }

    pub fn apply_exact(&self, v: &[Q]) -> Vec<Q> {
        let mut out = vec![Q::zero(); v.len()];
        for (y, vy) in v.iter().enumerate() {
            if vy.is_zero() {
                continue;
            }
            for (x, a) in &self.columns[y] {
                out[*x] += a * vy;
            }
        }
        out
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (y, &vy) in v.iter().enumerate() {
            if vy != 0.0 {
                for &(x, a) in &self.float_columns[y] {
                    out[x] += a * vy;
                }
            }
        }
        out
    }

    fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        self.float_columns
            .iter()
            .map(|col| col.iter().map(|&(x, a)| a * v[x]).sum())
            .collect()
    }
}

/// Builds `A[x][y] = f(H rep(x) rep(y)⁻¹)` for `x, y ∈ B_R`. Column `y` holds
/// `f ∗ δ_{Hy}`, whose support is `{H a y}` over the member cosets `Ha` of
/// the support classes; targets outside the ball are dropped. When the
/// support has more member cosets than the ball, the entries are read off
/// pairwise instead: `H x y⁻¹` lies in a support class only if it is
/// already interned and classified.
pub fn operator_matrix(
    store: &CosetStore,
    f: &HeckeElement,
    radius: u32,
) -> Result<TruncatedOperator> {
    if f.store_id() != store.store_id() {
        return Err(HeckeError::StoreMismatch);
    }
    let cosets = store.ball(radius)?;
    let index: HashMap<CosetId, usize> = cosets.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let mut terms = Vec::new();
    for (d, c) in f.terms() {
        for &m in &store.double_coset(d)?.members {
            terms.push((store.rep(m).clone(), c.clone()));
        }
    }
    let columns: Vec<Vec<(usize, Q)>> = if terms.len() <= cosets.len() {
        cosets
            .par_iter()
            .map(|&y| -> Result<Vec<(usize, Q)>> {
                let y_rep = store.rep(y);
                let mut col: BTreeMap<usize, Q> = BTreeMap::new();
                for (a, c) in &terms {
                    if let Some(t) = store.lookup(&a.mul(y_rep)?)? {
                        if let Some(&x) = index.get(&t) {
                            *col.entry(x).or_insert_with(Q::zero) += c;
                        }
                    }
                }
                Ok(col.into_iter().filter(|(_, v)| !v.is_zero()).collect())
            })
            .collect::<Result<_>>()?
    } else {
        let coeffs: HashMap<DoubleCosetId, &Q> = f.terms().collect();
        cosets
            .par_iter()
            .map(|&y| -> Result<Vec<(usize, Q)>> {
                let y_inv = store.rep(y).inv();
                let mut col = Vec::new();
                for (x, &xc) in cosets.iter().enumerate() {
                    let hit = store
                        .lookup(&store.rep(xc).mul(&y_inv)?)?
                        .and_then(|t| store.coset_class(t))
                        .and_then(|d| coeffs.get(&d));
                    if let Some(&c) = hit {
                        col.push((x, c.clone()));
                    }
                }
                Ok(col)
            })
            .collect::<Result<_>>()?
    };
    let float_columns = columns
        .iter()
        .map(|col| col.iter().map(|(x, v)| (*x, q_to_f64(v))).collect())
        .collect();
    Ok(TruncatedOperator { radius, cosets, columns, float_columns })
}

#[derive(Clone, Debug, Serialize)]
pub struct NormEstimate {
    /// `‖A v‖` for the final unit vector `v`: a lower bound for `‖A‖`.
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub warning: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerIteration {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerIteration {
    fn default() -> Self {
        PowerIteration { tol: 1e-8, max_iter: 50_000 }
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Largest singular value by power iteration on `AᵀA` from `δ_{He} + uniform`.
pub fn truncated_norm(op: &TruncatedOperator, cfg: PowerIteration) -> NormEstimate {
    truncated_norm_from(op, cfg, None).0
}

/// Power iteration from `start` (unit length, in `op`'s coset order) or the
/// default vector. Returns the estimate and the unit vector attaining it;
/// the estimate is never below `‖A start‖`.
pub fn truncated_norm_from(
    op: &TruncatedOperator,
    cfg: PowerIteration,
    start: Option<&[f64]>,
) -> (NormEstimate, Vec<f64>) {
    let n = op.dimension();
    let mut v = vec![1.0 / n as f64; n];
    if n == 0 || op.nonzeros() == 0 {
        let est = NormEstimate { value: 0.0, iterations: 0, converged: true, warning: None };
        return (est, v);
    }
    v[0] += 1.0;
    let s = norm2(&v);
    v.iter_mut().for_each(|x| *x /= s);
    let mut sigma = norm2(&op.apply(&v));
    let mut best = v.clone();
    if let Some(w) = start {
        let at_start = norm2(&op.apply(w));
        if at_start > sigma {
            sigma = at_start;
            best = w.to_vec();
        }
        // keep some weight on the default vector so a start orthogonal to
        // the top singular direction cannot trap the iteration
        v = w.iter().zip(&v).map(|(a, b)| a + 1e-3 * b).collect();
        let s = norm2(&v);
        v.iter_mut().for_each(|x| *x /= s);
    }
    let mut last = norm2(&op.apply(&v));
    for it in 1..=cfg.max_iter {
        let u = op.apply_transpose(&op.apply(&v));
        let un = norm2(&u);
        if un == 0.0 {
            return (NormEstimate { value: sigma, iterations: it, converged: true, warning: None }, best);
        }
        v = u.into_iter().map(|x| x / un).collect();
        let next = norm2(&op.apply(&v));
        let done = (next - last).abs() <= cfg.tol * next;
        last = next;
        if next > sigma {
            sigma = next;
            best.clone_from(&v);
        }
        if done {
            return (NormEstimate { value: sigma, iterations: it, converged: true, warning: None }, best);
        }
    }
    let est = NormEstimate {
        value: sigma,
        iterations: cfg.max_iter,
        converged: false,
        warning: Some(format!(
            "power iteration stopped at {} iterations before relative tolerance {:e}",
            cfg.max_iter, cfg.tol
        )),
    };
    (est, best)
}

/// `⟨A^{2n} δ_{He}, δ_{He}⟩` in exact arithmetic.
pub fn moment_by_matrix(op: &TruncatedOperator, n: usize) -> Q {
    let mut v = vec![Q::zero(); op.dimension()];
    v[0] = q(1);
    for _ in 0..2 * n {
        v = op.apply_exact(&v);
    }
    v[0].clone()
}

/// `a_n^{1/2n}`, finite for any size of `a_n`.
pub fn moment_root(a: &Q, n: usize) -> f64 {
    if a.is_zero() {
        0.0
    } else {
        (ln_abs_q(a) / (2 * n) as f64).exp()
    }
}

/// `Σ_{d₁ ∈ supp u, d₂ ∈ supp v} R(d₁) R(d₂)`: right cosets touched by `u ∗ v`.
fn product_cost(store: &CosetStore, u: &HeckeElement, v: &HeckeElement) -> Result<u64> {
    let size = |f: &HeckeElement| -> Result<u64> {
        let mut s = 0u64;
        for (d, _) in f.terms() {
            s += store.double_coset(d)?.r as u64;
        }
        Ok(s)
    };
    Ok(size(u)?.saturating_mul(size(v)?))
}

/// Moments `a_1, a_2, …` of a self-adjoint `f`, stopping at `count` or before
/// the next convolution would touch more than `budget` right cosets.
pub fn moments_within_budget(
    store: &mut CosetStore,
    f: &HeckeElement,
    count: usize,
    budget: u64,
    max_orbit: usize,
) -> Result<Vec<Q>> {
    if !is_self_adjoint(store, f, max_orbit)? {
        return Err(HeckeError::NotSelfAdjoint);
    }
    let mut out = Vec::new();
    let mut power = f.clone();
    for n in 1..=count {
        if n > 1 {
            if product_cost(store, &power, f)? > budget {
                break;
            }
            power = convolve(store, &power, f, max_orbit)?;
        }
        out.push(evaluate_product_at_identity(store, &power, &power, max_orbit)?);
    }
    Ok(out)
}

/// `rho_n = a_n^{1/2n}` for `n = 1..=count`; each is a lower bound for `‖λ(f)‖`.
pub fn spectral_lower_bound(
    store: &mut CosetStore,
    f: &HeckeElement,
    count: usize,
    max_orbit: usize,
) -> Result<Vec<f64>> {
    let a = moments_within_budget(store, f, count, u64::MAX, max_orbit)?;
    Ok(a.iter().enumerate().map(|(i, a)| moment_root(a, i + 1)).collect())
}

/// `(f + f*)/2`.
pub fn symmetrize(store: &mut CosetStore, f: &HeckeElement, max_orbit: usize) -> Result<HeckeElement> {
    let star = involution(store, f, max_orbit)?;
    Ok(f.add(&star)?.scale(&q_frac(1, 2)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Indicator of the classes with `l = r`.
    Shell,
    /// Indicator of the classes with `l ≤ r`.
    Ball,
    /// Seeded nonnegative integer coefficients on `l ≤ r`, symmetrized.
    Random,
    /// Seeded signed coefficients; recorded, never used for the verdict.
    Signed,
}

impl Family {
    pub fn parse(s: &str) -> Option<Family> {
        match s {
            "shell" => Some(Family::Shell),
            "ball" => Some(Family::Ball),
            "random" => Some(Family::Random),
            "signed" => Some(Family::Signed),
            _ => None,
        }
    }

    fn nonnegative(self) -> bool {
        self != Family::Signed
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RdConfig {
    pub r_max: u32,
    /// Extra radius of the ball the operator is compressed to.
    pub padding: u32,
    pub moment_order: usize,
    /// Largest `Σ R(d₁)R(d₂)` one moment convolution may touch.
    pub moment_budget: u64,
    pub families: Vec<Family>,
    pub random_per_radius: usize,
    pub seed: u64,
    /// Largest log-log slope of the best ratio still called polynomial.
    pub poly_slope_max: f64,
    /// Largest tail log-log slope of the weighted ratio counted as stable.
    pub stable_slope: f64,
    pub s_grid: Vec<f64>,
    pub power: PowerIteration,
    pub max_orbit: usize,
}

impl Default for RdConfig {
    fn default() -> Self {
        RdConfig {
            r_max: 6,
            padding: 6,
            moment_order: 6,
            moment_budget: 200_000,
            families: vec![Family::Shell, Family::Ball, Family::Random, Family::Signed],
            random_per_radius: 2,
            seed: 0,
            poly_slope_max: 2.5,
            stable_slope: 0.1,
            s_grid: vec![0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 2.5, 3.0, 4.0],
            power: PowerIteration::default(),
            max_orbit: 100_000,
        }
    }
}

impl RdConfig {
    /// Desk-scale defaults for a catalog label; the ball needed is
    /// `r_max + padding`.
    pub fn for_pair(label: &str) -> RdConfig {
        let base = RdConfig::default();
        match label.split(':').next().unwrap_or("") {
            "z" if label == "z:1" => {
                RdConfig { r_max: 20, padding: 20, moment_order: 8, random_per_radius: 1, ..base }
            }
            "z" => RdConfig { r_max: 8, padding: 8, moment_order: 4, random_per_radius: 1, ..base },
            "dinf" => RdConfig { r_max: 10, padding: 10, moment_order: 8, ..base },
            "psl2z1p" | "sl2z1p" => RdConfig {
                r_max: 5,
                padding: 1,
                moment_order: 3,
                moment_budget: 100_000,
                random_per_radius: 1,
                families: vec![Family::Shell, Family::Ball, Family::Random],
                ..base
            },
            "s3-h12" | "s4-h12" | "s4-h12-34" => {
                RdConfig { r_max: 3, padding: 3, moment_order: 10, ..base }
            }
            _ => base,
        }
    }

    pub fn store_radius(&self) -> u32 {
        self.r_max + self.padding
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RdRecord {
    pub r: u32,
    pub family: Family,
    pub index: usize,
    /// `(dc, coefficient, R(dc))`.
    pub support: Vec<(usize, String, usize)>,
    pub l1: f64,
    pub l2: f64,
    pub truncated_norm: f64,
    pub truncated_radius: u32,
    pub truncated_converged: bool,
    pub moments_used: usize,
    pub rho: Option<f64>,
    /// `max(truncated_norm, rho)`.
    pub lower_bound: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RadiusBest {
    pub r: u32,
    pub best_ratio: f64,
    pub witness: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum RdVerdict {
    ObstructedNonunimodular,
    PolynomialCompatible { s_hat: f64, c_hat: f64 },
    SuperpolynomialRatio,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct RdFits {
    pub poly_slope: f64,
    pub poly_r2: f64,
    pub exp_slope: f64,
    pub exp_r2: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct WeightedFit {
    pub s_hat: f64,
    pub c_hat: f64,
    /// Tail slope of the weighted ratio for each grid value tried.
    pub tried: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RdProfile {
    pub pair: String,
    pub unimodular: bool,
    pub unimodularity_witness: Option<(String, String)>,
    pub records: Vec<RdRecord>,
    pub per_radius: Vec<RadiusBest>,
    pub fits: Option<RdFits>,
    pub weighted: Option<WeightedFit>,
    pub verdict: RdVerdict,
    pub config: RdConfig,
    pub warnings: Vec<String>,
    pub partial: bool,
}

/// Profile of a pair that fails relative unimodularity: nothing is estimated.
pub fn obstructed_profile(report: &UnimodularityReport, cfg: &RdConfig) -> RdProfile {
    RdProfile {
        pair: report.pair.clone(),
        unimodular: false,
        unimodularity_witness: report
            .witness()
            .map(|(g, d)| (g.to_string(), render_q(d))),
        records: Vec::new(),
        per_radius: Vec::new(),
        fits: None,
        weighted: None,
        verdict: RdVerdict::ObstructedNonunimodular,
        config: cfg.clone(),
        warnings: Vec::new(),
        partial: false,
    }
}

fn indicator(store: &CosetStore, classes: &[DoubleCosetId]) -> Result<HeckeElement> {
    HeckeElement::from_terms(store, classes.iter().map(|&d| (d, q(1))))
}

fn random_element(
    store: &CosetStore,
    classes: &[DoubleCosetId],
    rng: &mut ChaCha8Rng,
    signed: bool,
) -> Result<HeckeElement> {
    let mut terms: Vec<(DoubleCosetId, Q)> = classes
        .iter()
        .map(|&d| {
            let c = if signed { rng.gen_range(-3i64..=3) } else { rng.gen_range(0i64..=4) };
            (d, q(c))
        })
        .collect();
    if terms.iter().all(|(_, c)| c.is_zero()) {
        let k = rng.gen_range(0..terms.len());
        terms[k].1 = q(1);
    }
    HeckeElement::from_terms(store, terms)
}

/// Runs the test families on radii `0..=r_max` and records, per function,
/// `N(f) = max(‖P_R λ(f) P_R‖, a_n^{1/2n})` against `‖f‖₂`. Pairs that are
/// not relatively unimodular get [`RdVerdict::ObstructedNonunimodular`]
/// without any estimation.
pub fn rd_profile(
    store: &mut CosetStore,
    l: &LengthFunction,
    unimodularity: &UnimodularityReport,
    cfg: &RdConfig,
) -> Result<RdProfile> {
    if !unimodularity.verdict {
        return Ok(obstructed_profile(unimodularity, cfg));
    }
    if cfg.r_max > l.radius {
        return Err(HeckeError::BallIncomplete { requested: cfg.r_max, complete: l.radius });
    }
    let mut warnings = Vec::new();
    let mut partial = false;
    if unimodularity.sampled {
        warnings.push("unimodularity verdict rests on a generator sample".into());
    }

    // phase 1: build the functions and their moments (needs the mutable store)
    struct Job {
        r: u32,
        family: Family,
        index: usize,
        f: HeckeElement,
        moments: Vec<Q>,
    }
    let mut jobs = Vec::new();
    for r in 0..=cfg.r_max {
        let ball = l.classes_within(r as f64);
        let shell: Vec<DoubleCosetId> =
            ball.iter().copied().filter(|&d| l.value(d) == Some(r as f64)).collect();
        for &family in &cfg.families {
            let mut fs = Vec::new();
            match family {
                Family::Shell if !shell.is_empty() => fs.push(indicator(store, &shell)?),
                Family::Ball => fs.push(indicator(store, &ball)?),
                Family::Random | Family::Signed => {
                    for k in 0..cfg.random_per_radius {
                        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                        let tag = if family == Family::Signed { 1u64 << 40 } else { 0 };
                        rng.set_stream(tag | ((r as u64) << 16) | k as u64);
                        fs.push(random_element(store, &ball, &mut rng, family == Family::Signed)?);
                    }
                }
                Family::Shell => {}
            }
            for (index, f) in fs.into_iter().enumerate() {
                let f = symmetrize(store, &f, cfg.max_orbit)?;
                let moments = match moments_within_budget(
                    store,
                    &f,
                    cfg.moment_order,
                    cfg.moment_budget,
                    cfg.max_orbit,
                ) {
                    Ok(m) => m,
                    Err(e @ (HeckeError::CapExceeded { .. } | HeckeError::OrbitCapExceeded { .. })) => {
                        partial = true;
                        warnings.push(format!("r={r} {family:?}#{index}: moments skipped: {e}"));
                        Vec::new()
                    }
                    Err(e) => return Err(e),
                };
                jobs.push(Job { r, family, index, f, moments });
            }
        }
    }

    // phase 2: compressed operators over the sealed ball
    let store_ref: &CosetStore = store;
    let top = store_ref.radius_complete();
    let records: Vec<RdRecord> = jobs
        .par_iter()
        .map(|job| -> Result<RdRecord> {
            let radius = (job.r + cfg.padding).min(top);
            let op = operator_matrix(store_ref, &job.f, radius)?;
            let est = truncated_norm(&op, cfg.power);
            let l1 = q_to_f64(&l1_norm_exact(store_ref, &job.f)?);
            let mut l2 = Q::zero();
            let mut support = Vec::new();
            for (d, c) in job.f.terms() {
                let rr = store_ref.double_coset(d)?.r;
                l2 += c * c * Q::from_integer(BigInt::from(rr));
                support.push((d.0, render_q(c), rr));
            }
            let l2 = q_to_f64(&l2).sqrt();
            let rho = job.moments.last().map(|a| moment_root(a, job.moments.len()));
            let lower = est.value.max(rho.unwrap_or(0.0));
            Ok(RdRecord {
                r: job.r,
                family: job.family,
                index: job.index,
                support,
                l1,
                l2,
                truncated_norm: est.value,
                truncated_radius: radius,
                truncated_converged: est.converged,
                moments_used: job.moments.len(),
                rho,
                lower_bound: lower,
                ratio: lower / l2,
            })
        })
        .collect::<Result<_>>()?;
    for rec in &records {
        if !rec.truncated_converged {
            warnings.push(format!("r={} {:?}#{}: power iteration hit its cap", rec.r, rec.family, rec.index));
        }
    }

    let mut per_radius: Vec<RadiusBest> = Vec::new();
    for (i, rec) in records.iter().enumerate() {
        if !rec.family.nonnegative() {
            continue;
        }
        match per_radius.iter_mut().find(|b| b.r == rec.r) {
            Some(b) if rec.ratio > b.best_ratio => {
                b.best_ratio = rec.ratio;
                b.witness = i;
            }
            Some(_) => {}
            None => per_radius.push(RadiusBest { r: rec.r, best_ratio: rec.ratio, witness: i }),
        }
    }

    let mut profile = RdProfile {
        pair: store_ref.context().label.clone(),
        unimodular: true,
        unimodularity_witness: None,
        records,
        per_radius,
        fits: None,
        weighted: None,
        verdict: RdVerdict::Inconclusive,
        config: cfg.clone(),
        warnings,
        partial,
    };
    if profile.per_radius.len() < 3 {
        return Ok(profile);
    }
    let xs_log: Vec<f64> = profile.per_radius.iter().map(|b| (1.0 + b.r as f64).ln()).collect();
    let xs_lin: Vec<f64> = profile.per_radius.iter().map(|b| b.r as f64).collect();
    let ys: Vec<f64> = profile.per_radius.iter().map(|b| b.best_ratio.ln()).collect();
    let (poly_slope, _, poly_r2) = linear_fit(&xs_log, &ys);
    let (exp_slope, _, exp_r2) = linear_fit(&xs_lin, &ys);
    profile.fits = Some(RdFits { poly_slope, poly_r2, exp_slope, exp_r2 });
    let weighted = rd_weighted_fit(&profile, l, &cfg.s_grid);
    profile.verdict = match (&weighted, poly_slope > cfg.poly_slope_max) {
        (_, true) | (Err(HeckeError::NoStableFit), _) => RdVerdict::SuperpolynomialRatio,
        (Ok(w), false) => RdVerdict::PolynomialCompatible { s_hat: w.s_hat, c_hat: w.c_hat },
        (Err(e), false) => return Err(e.clone()),
    };
    profile.weighted = weighted.ok();
    Ok(profile)
}

/// Smallest `s` on the grid for which `max_f N(f)/‖f‖_{s,l}` shows no upward
/// trend on the tail radii (log-log slope at most `stable_slope`), with `c`
/// the largest ratio seen at that `s`.
pub fn rd_weighted_fit(
    profile: &RdProfile,
    l: &LengthFunction,
    s_grid: &[f64],
) -> Result<WeightedFit> {
    let mut radii: Vec<u32> = profile.records.iter().map(|r| r.r).collect();
    radii.sort();
    radii.dedup();
    let tail_from = radii.last().map_or(0, |&m| (m + 1) / 2).max(1);
    let mut tried = Vec::new();
    for &s in s_grid {
        let mut best: BTreeMap<u32, f64> = BTreeMap::new();
        for rec in profile.records.iter().filter(|r| r.family.nonnegative()) {
            let mut w = 0.0;
            for (d, c, rr) in &rec.support {
                let ld = l
                    .value(DoubleCosetId(*d))
                    .ok_or(HeckeError::LengthUndefinedOnSupport(*d))?;
                let c = crate::group::parse_q(c, 0).map(|c| q_to_f64(&c.abs()))?;
                w += c * c * (1.0 + ld).powf(2.0 * s) * *rr as f64;
            }
            let ratio = rec.lower_bound / w.sqrt();
            let e = best.entry(rec.r).or_insert(0.0);
            *e = e.max(ratio);
        }
        let tail: Vec<(f64, f64)> = best
            .iter()
            .filter(|(r, _)| **r >= tail_from)
            .map(|(r, v)| ((1.0 + *r as f64).ln(), v.ln()))
            .collect();
        let slope = if tail.len() >= 2 {
            let (xs, ys): (Vec<f64>, Vec<f64>) = tail.into_iter().unzip();
            linear_fit(&xs, &ys).0
        } else {
            0.0
        };
        tried.push((s, slope));
        if slope <= profile.config.stable_slope {
            let c_hat = best.values().copied().fold(0.0, f64::max);
            return Ok(WeightedFit { s_hat: s, c_hat, tried });
        }
    }
    Err(HeckeError::NoStableFit)
}

#[derive(Clone, Debug, Serialize)]
pub struct KestenReport {
    pub pair: String,
    pub f: Vec<(usize, String)>,
    pub moments: Vec<String>,
    pub rho: Vec<f64>,
    pub l1: f64,
    pub truncated_norm: f64,
    pub truncated_radius: u32,
    pub amenability_index: f64,
    /// Set when the pair is not relatively unimodular: the criterion is
    /// stated for the unimodular setting.
    pub flagged: bool,
    pub warnings: Vec<String>,
}

/// `f` supported on the classes meeting `B_1`, symmetrized and scaled to
/// `‖f‖₁ = 1`.
pub fn default_kesten_element(store: &mut CosetStore, max_orbit: usize) -> Result<HeckeElement> {
    let classes = store.classify_ball(1.min(store.radius_complete()), max_orbit)?;
    let f = indicator(store, &classes)?;
    let f = symmetrize(store, &f, max_orbit)?;
    let l1 = l1_norm_exact(store, &f)?;
    Ok(f.scale(&(q(1) / l1)))
}

/// `max(rho_N, ‖P_R λ(f) P_R‖) / ‖f‖₁`, which approaches 1 for amenable
/// pairs and nonnegative `f`.
pub fn kesten_diagnostic(
    store: &mut CosetStore,
    f: Option<HeckeElement>,
    n: usize,
    unimodularity: &UnimodularityReport,
    power: PowerIteration,
    max_orbit: usize,
) -> Result<KestenReport> {
    let f = match f {
        Some(f) => f,
        None => default_kesten_element(store, max_orbit)?,
    };
    let moments = moments_within_budget(store, &f, n, u64::MAX, max_orbit)?;
    let rho: Vec<f64> = moments.iter().enumerate().map(|(i, a)| moment_root(a, i + 1)).collect();
    let radius = store.radius_complete();
    let op = operator_matrix(store, &f, radius)?;
    let est = truncated_norm(&op, power);
    let l1 = q_to_f64(&l1_norm_exact(store, &f)?);
    let best = est.value.max(rho.last().copied().unwrap_or(0.0));
    let mut warnings: Vec<String> = est.warning.into_iter().collect();
    let flagged = !unimodularity.verdict;
    if flagged {
        warnings.push("pair is not relatively unimodular; index is not a Kesten criterion here".into());
    }
    Ok(KestenReport {
        pair: store.context().label.clone(),
        f: f.terms().map(|(d, c)| (d.0, render_q(c))).collect(),
        moments: moments.iter().map(render_q).collect(),
        rho,
        l1,
        truncated_norm: est.value,
        truncated_radius: radius,
        amenability_index: best / l1,
        flagged,
        warnings,
    })
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CoherenceReport {
    pub radii: Vec<u32>,
    pub truncated: Vec<f64>,
    pub rho: Vec<f64>,
    /// Largest member word length over the support.
    pub support_depth: u32,
    pub projection_monotone: bool,
    pub rho_monotone: bool,
    /// `(n, radius, equal)` for each moment checked against the matrix.
    pub moment_exact: Vec<(usize, u32, bool)>,
    /// `(n, radius, holds)` for `rho_n ≤ truncated(R) + 10⁻⁶`, `R ≥ 2n·depth`.
    pub lower_bound_coherent: Vec<(usize, u32, bool)>,
    pub l1: f64,
    pub l1_bound: Option<bool>,
}

impl CoherenceReport {
    pub fn holds(&self) -> bool {
        self.projection_monotone
            && self.rho_monotone
            && self.moment_exact.iter().all(|t| t.2)
            && self.lower_bound_coherent.iter().all(|t| t.2)
            && self.l1_bound != Some(false)
    }
}

/// The estimator invariants for one self-adjoint `f`: truncated norms are
/// non-decreasing in `R`, `rho_n` is non-decreasing in `n`, the matrix moment
/// equals the convolution moment once `R ≥ n·depth`, and for unimodular pairs
/// every truncated norm is at most `‖f‖₁`.
pub fn coherence_checks(
    store: &mut CosetStore,
    f: &HeckeElement,
    radius: u32,
    moments: usize,
    budget: u64,
    unimodular: bool,
    power: PowerIteration,
    max_orbit: usize,
) -> Result<CoherenceReport> {
    // measuring the support depth below may grow the store past `radius`
    if radius > store.radius_complete() {
        return Err(HeckeError::BallIncomplete { requested: radius, complete: store.radius_complete() });
    }
    let top = radius;
    let a = moments_within_budget(store, f, moments, budget, max_orbit)?;
    let rho: Vec<f64> = a.iter().enumerate().map(|(i, a)| moment_root(a, i + 1)).collect();
    let mut depth = 0;
    for d in f.support() {
        depth = depth.max(store.class_max_word_length(d)?);
    }
    let radii: Vec<u32> = (0..=top).collect();
    // each radius starts from the previous optimizer, so the chain of
    // estimates only falls if the compressions are inconsistent
    let mut truncated = Vec::new();
    let mut by_matrix: HashMap<usize, Q> = HashMap::new();
    let mut prev: Option<(Vec<CosetId>, Vec<f64>)> = None;
    for &r in &radii {
        let op = operator_matrix(store, f, r)?;
        let start = prev.as_ref().map(|(cosets, v)| {
            let pos: HashMap<CosetId, usize> = op.cosets.iter().enumerate().map(|(i, c)| (*c, i)).collect();
            let mut w = vec![0.0; op.dimension()];
            for (c, x) in cosets.iter().zip(v) {
                w[pos[c]] = *x;
            }
            w
        });
        let (est, v) = truncated_norm_from(&op, power, start.as_deref());
        truncated.push(est.value);
        for n in 1..=a.len() {
            if n as u32 * depth == r {
                by_matrix.insert(n, moment_by_matrix(&op, n));
            }
        }
        prev = Some((op.cosets, v));
    }
    let l1 = q_to_f64(&l1_norm_exact(store, f)?);
    let mut rep = CoherenceReport {
        projection_monotone: truncated.windows(2).all(|w| w[1] >= w[0] - 1e-9),
        rho_monotone: rho.windows(2).all(|w| w[1] >= w[0] - 1e-12),
        support_depth: depth,
        l1,
        l1_bound: unimodular.then(|| truncated.iter().all(|&t| t <= l1 + 1e-9)),
        ..Default::default()
    };
    for (i, an) in a.iter().enumerate() {
        let n = i + 1;
        let need = n as u32 * depth;
        if need <= top {
            rep.moment_exact.push((n, need, by_matrix[&n] == *an));
        }
        let need2 = 2 * need;
        if need2 <= top {
            let ok = rho[i] <= truncated[need2 as usize] + 1e-6;
            rep.lower_bound_coherent.push((n, need2, ok));
        }
    }
    rep.radii = radii;
    rep.truncated = truncated;
    rep.rho = rho;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{basis_element, identity_element};
    use crate::coset::{enumerate_ball, unimodularity_check, Caps};
    use crate::group::GroupElement;
    use crate::length::word_length;
    use crate::pair::catalog;
    use std::sync::Arc;

    fn store(label: &str, r: u32) -> CosetStore {
        let mut s = enumerate_ball(Arc::new(catalog(label).unwrap()), r, Caps::default()).unwrap();
        s.classify_ball(r, 100_000).unwrap();
        s
    }

    fn z_walk(s: &mut CosetStore) -> HeckeElement {
        let terms: Vec<_> =
            (-1..=1).map(|k| (s.class_of(&GroupElement::zvec(vec![k]), 10).unwrap(), q(1))).collect();
        HeckeElement::from_terms(s, terms).unwrap()
    }

    /// Both column builders against `f(H x y⁻¹ H)` evaluated with a fresh
    /// class computation per pair.
    #[test]
    fn operator_entries_match_class_formula() {
        let mut s = store("psl2z1p:2", 3);
        let l = word_length(&mut s, 100_000).unwrap();
        let small = l.classes_within(1.0);
        let large = l.classes_within(3.0);
        for (classes, radius) in [(small, 3), (large, 2)] {
            let terms: Vec<_> =
                classes.iter().enumerate().map(|(i, &d)| (d, q(i as i64 + 1))).collect();
            let f = HeckeElement::from_terms(&s, terms).unwrap();
            let op = operator_matrix(&s, &f, radius).unwrap();
            let members: usize = f.support().iter().map(|&d| s.double_coset(d).unwrap().r).sum();
            assert_eq!(members > op.dimension(), radius == 2);
            let mut fresh = store("psl2z1p:2", 3);
            let reps: Vec<_> = op.cosets.iter().map(|&c| s.rep(c).clone()).collect();
            for (xi, x) in reps.iter().enumerate() {
                for (yi, y) in reps.iter().enumerate() {
                    let g = x.mul(&y.inv()).unwrap();
                    let d = fresh.class_of(&g, 100_000).unwrap();
                    let rep = fresh.double_coset(d).unwrap().rep.clone();
                    let expected = match s.lookup(&rep).unwrap().and_then(|c| s.coset_class(c)) {
                        Some(e) => f.coeff(e),
                        None => Q::zero(),
                    };
                    assert_eq!(op.entry(xi, yi), expected, "x={x} y={y}");
                }
            }
        }
    }

    #[test]
    fn identity_operator() {
        let mut s = store("psl2z1p:2", 3);
        let id = identity_element(&mut s).unwrap();
        let op = operator_matrix(&s, &id, 3).unwrap();
        for y in 0..op.dimension() {
            assert_eq!(op.column(y), &[(y, q(1))]);
        }
        assert_eq!(truncated_norm(&op, PowerIteration::default()).value, 1.0);
    }

    #[test]
    fn z_tridiagonal() {
        let mut s = store("z:1", 50);
        let f = z_walk(&mut s);
        let op = operator_matrix(&s, &f, 2).unwrap();
        assert_eq!(op.dimension(), 5);
        assert!(op.is_symmetric());
        let pos: Vec<i64> = op
            .cosets
            .iter()
            .map(|&c| match s.rep(c) {
                GroupElement::ZVec(v) => v.coords[0],
                _ => unreachable!(),
            })
            .collect();
        for x in 0..5 {
            for y in 0..5 {
                let want = if (pos[x] - pos[y]).abs() <= 1 { q(1) } else { q(0) };
                assert_eq!(op.entry(x, y), want);
            }
        }
        let big = operator_matrix(&s, &f, 50).unwrap();
        let t50 = truncated_norm(&big, PowerIteration::default()).value;
        let oracle = 1.0 + 2.0 * (std::f64::consts::PI / 102.0).cos();
        assert!((t50 - oracle).abs() < 1e-4, "{t50} vs {oracle}");
        let t10 = truncated_norm(&operator_matrix(&s, &f, 10).unwrap(), PowerIteration::default());
        assert!(t10.value <= t50);
        let a = moments_within_budget(&mut s, &f, 4, u64::MAX, 10).unwrap();
        for n in 1..=4 {
            assert_eq!(moment_by_matrix(&big, n), a[n - 1]);
        }
    }

    #[test]
    fn rho_on_z() {
        let mut s = store("z:1", 2);
        let f = z_walk(&mut s);
        let rho = spectral_lower_bound(&mut s, &f, 20, 10).unwrap();
        assert!((rho[0] - 3f64.sqrt()).abs() < 1e-12);
        assert!(rho[19] > 2.70 && rho[19] < 3.0);
        assert!(rho.windows(2).all(|w| w[1] >= w[0]));
        let id = identity_element(&mut s).unwrap();
        assert!(spectral_lower_bound(&mut s, &id, 5, 10).unwrap().iter().all(|&r| r == 1.0));
    }

    #[test]
    fn s3_operator_rows() {
        let mut s = store("s3-h12", 2);
        let d = s.class_of(&GroupElement::perm(vec![2, 1, 0]).unwrap(), 100).unwrap();
        let op = operator_matrix(&s, &basis_element(&s, d).unwrap(), 2).unwrap();
        assert_eq!(op.dimension(), 3);
        for x in 0..3 {
            let row: Q = (0..3).map(|y| op.entry(x, y)).sum();
            assert_eq!(row, q(2));
            assert_eq!(op.entry(x, x), q(0));
        }
        for y in 0..3 {
            let col: Q = op.column(y).iter().map(|(_, v)| v.clone()).sum();
            assert_eq!(col, q(2));
        }
    }

    #[test]
    fn kesten_on_z_and_s3() {
        let mut s = store("z:1", 30);
        let rep = unimodularity_check(s.context(), 10).unwrap();
        let k = kesten_diagnostic(&mut s, None, 20, &rep, PowerIteration::default(), 10).unwrap();
        assert_eq!(k.f.len(), 3);
        assert!(k.amenability_index >= 0.93 && k.amenability_index <= 1.0 + 1e-12);

        let mut s = store("s3-h12", 2);
        let rep = unimodularity_check(s.context(), 10).unwrap();
        let k = kesten_diagnostic(&mut s, None, 6, &rep, PowerIteration::default(), 10).unwrap();
        assert!((k.amenability_index - 1.0).abs() < 1e-6);
    }

    #[test]
    fn bc2_profile_is_obstructed() {
        let mut s = store("bcp:2", 3);
        let l = word_length(&mut s, 1000).unwrap();
        let rep = unimodularity_check(s.context(), 1000).unwrap();
        let p = rd_profile(&mut s, &l, &rep, &RdConfig::default()).unwrap();
        assert_eq!(p.verdict, RdVerdict::ObstructedNonunimodular);
        assert!(p.records.is_empty());
        assert_eq!(p.unimodularity_witness.as_ref().unwrap().1, "1/2");
    }

    #[test]
    fn z_profile_is_polynomial() {
        let cfg = RdConfig { r_max: 8, padding: 8, moment_order: 4, ..RdConfig::default() };
        let mut s = store("z:1", cfg.store_radius());
        let l = word_length(&mut s, 10).unwrap();
        let rep = unimodularity_check(s.context(), 10).unwrap();
        let p = rd_profile(&mut s, &l, &rep, &cfg).unwrap();
        let RdVerdict::PolynomialCompatible { s_hat, c_hat } = p.verdict else { panic!("{:?}", p.verdict) };
        assert!(s_hat <= 1.5 && c_hat.is_finite());
        for rec in &p.records {
            assert!(rec.truncated_norm <= rec.l1 + 1e-9);
        }
    }

    #[test]
    fn identity_family_fit() {
        let s = store("z:1", 4);
        let l = {
            let mut s2 = s.clone();
            word_length(&mut s2, 10).unwrap()
        };
        let e = DoubleCosetId(0);
        assert_eq!(s.double_coset(e).unwrap().r, 1);
        let records = (0..=4)
            .map(|r| RdRecord {
                r,
                family: Family::Ball,
                index: 0,
                support: vec![(0, "1".into(), 1)],
                l1: 1.0,
                l2: 1.0,
                truncated_norm: 1.0,
                truncated_radius: r,
                truncated_converged: true,
                moments_used: 1,
                rho: Some(1.0),
                lower_bound: 1.0,
                ratio: 1.0,
            })
            .collect();
        let profile = RdProfile {
            pair: "z:1".into(),
            unimodular: true,
            unimodularity_witness: None,
            records,
            per_radius: Vec::new(),
            fits: None,
            weighted: None,
            verdict: RdVerdict::Inconclusive,
            config: RdConfig::default(),
            warnings: Vec::new(),
            partial: false,
        };
        let w = rd_weighted_fit(&profile, &l, &[0.25, 0.5]).unwrap();
        assert_eq!((w.s_hat, w.c_hat), (0.25, 1.0));
    }

    #[test]
    fn coherence_on_psl2() {
        let mut s = store("psl2z1p:2", 5);
        let g2 = s.context().g_generators[2].clone();
        let d = s.class_of(&g2, 1000).unwrap();
        let id = identity_element(&mut s).unwrap();
        let f = id.add(&basis_element(&s, d).unwrap()).unwrap();
        let top = s.radius_complete();
        let rep = coherence_checks(&mut s, &f, top, 3, u64::MAX, true, PowerIteration::default(), 1000)
            .unwrap();
        assert!(rep.holds(), "{rep:?}");
        assert!(!rep.moment_exact.is_empty());
    }
}
