//! Growth series `G_l(r)` = number of right cosets in `B_{r,l}` and an
//! empirical polynomial / exponential classification.

use serde::{Deserialize, Serialize};

use crate::coset::CosetStore;
use crate::error::{HeckeError, Result};
use crate::length::{LengthFunction, LengthKind};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GrowthSeries {
    pub radii: Vec<u32>,
    pub ball_counts: Vec<u64>,
    /// `shell_counts[r]` counts cosets with `r ≤ l < r + 1`.
    pub shell_counts: Vec<u64>,
    pub complete: bool,
}

impl GrowthSeries {
    fn from_shells(shells: Vec<u64>, complete: bool) -> Self {
        let mut acc = 0;
        let ball_counts = shells
            .iter()
            .map(|c| {
                acc += c;
                acc
            })
            .collect();
        GrowthSeries {
            radii: (0..shells.len() as u32).collect(),
            ball_counts,
            shell_counts: shells,
            complete,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,ball,shell\n");
        for i in 0..self.radii.len() {
            out += &format!("{},{},{}\n", self.radii[i], self.ball_counts[i], self.shell_counts[i]);
        }
        out
    }
}

/// `G_l(r) = Σ_{d : l(d) ≤ r} R(d)` for `r = 0..=r_max`.
///
/// A class is counted with all of its `R(d)` right cosets even when most of
/// them lie outside the Schreier ball. The series is complete for the word
/// length up to the radius the length was built at: every class with
/// `l(d) ≤ r` has a member at depth `≤ r`.
pub fn growth_series(store: &CosetStore, l: &LengthFunction, r_max: u32) -> Result<GrowthSeries> {
    if l.store_id() != store.store_id() {
        return Err(HeckeError::StoreMismatch);
    }
    if r_max > l.radius {
        return Err(HeckeError::BallIncomplete { requested: r_max, complete: l.radius });
    }
    let mut shells = vec![0u64; r_max as usize + 1];
    for (&d, &v) in l.values() {
        if v <= r_max as f64 {
            shells[v.floor() as usize] += store.double_coset(d)?.r as u64;
        }
    }
    Ok(GrowthSeries::from_shells(shells, l.kind == LengthKind::WordSchreier))
}

/// Right cosets by Schreier depth, straight from the store's histogram.
/// Agrees with [`growth_series`] for the word length when `H` is trivial.
pub fn coset_depth_series(store: &CosetStore, r_max: u32) -> Result<GrowthSeries> {
    if r_max > store.radius_complete() {
        return Err(HeckeError::BallIncomplete { requested: r_max, complete: store.radius_complete() });
    }
    let hist = store.depth_histogram();
    Ok(GrowthSeries::from_shells(
        hist[..=r_max as usize].iter().map(|&c| c as u64).collect(),
        true,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthConfig {
    /// Exponential when every tail ratio `G(r+1)/G(r)` exceeds `1 + delta`.
    pub delta: f64,
    /// Fraction of the radii (from the top) used as the tail.
    pub tail_fraction: f64,
    /// Minimum R² of the log-log fit for a polynomial verdict.
    pub min_r2: f64,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        GrowthConfig { delta: 0.2, tail_fraction: 0.5, min_r2: 0.98 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum GrowthVerdict {
    Polynomial { alpha: f64 },
    Exponential { beta: f64 },
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthClassification {
    pub verdict: GrowthVerdict,
    /// Slope of `ln G` against `ln r` on the tail, with its R².
    pub alpha: f64,
    pub alpha_r2: f64,
    /// Slope of `ln G` against `r` on the tail.
    pub beta: f64,
    pub min_tail_ratio: f64,
    pub max_tail_ratio: f64,
    /// Smallest `C(r+1)/C(r)` on the tail.
    pub min_tail_shell_ratio: f64,
    pub tail_start: u32,
    pub config: GrowthConfig,
    pub label: &'static str,
}

/// Least-squares slope, intercept and R².
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return (0.0, my, 0.0);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

pub fn classify_growth(series: &GrowthSeries, cfg: &GrowthConfig) -> Result<GrowthClassification> {
    let n = series.radii.len();
    if n < 4 {
        return Err(HeckeError::Config("growth classification needs r_max ≥ 3".into()));
    }
    let r_max = (n - 1) as f64;
    let start = ((r_max * (1.0 - cfg.tail_fraction)).ceil() as usize).clamp(1, n - 3);
    let tail: Vec<usize> = (start..n).collect();
    let g = |i: usize| series.ball_counts[i] as f64;
    let ratios: Vec<f64> = tail.windows(2).map(|w| g(w[1]) / g(w[0])).collect();
    let shell_ratios: Vec<f64> = tail
        .windows(2)
        .filter(|w| series.shell_counts[w[0]] > 0)
        .map(|w| series.shell_counts[w[1]] as f64 / series.shell_counts[w[0]] as f64)
        .collect();
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let xs_log: Vec<f64> = tail.iter().map(|&i| (i as f64).ln()).collect();
    let xs_lin: Vec<f64> = tail.iter().map(|&i| i as f64).collect();
    let ys: Vec<f64> = tail.iter().map(|&i| g(i).ln()).collect();
    let (alpha, _, alpha_r2) = linear_fit(&xs_log, &ys);
    let (beta, _, _) = linear_fit(&xs_lin, &ys);
    let verdict = if min_ratio > 1.0 + cfg.delta {
        GrowthVerdict::Exponential { beta }
    } else if alpha_r2 >= cfg.min_r2 && max_ratio <= 1.0 + cfg.delta {
        GrowthVerdict::Polynomial { alpha }
    } else {
        GrowthVerdict::Inconclusive
    };
    Ok(GrowthClassification {
        verdict,
        alpha,
        alpha_r2,
        beta,
        min_tail_ratio: min_ratio,
        max_tail_ratio: max_ratio,
        min_tail_shell_ratio: shell_ratios.iter().copied().fold(f64::INFINITY, f64::min),
        tail_start: start as u32,
        config: *cfg,
        label: "empirical",
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coset::{enumerate_ball, Caps};
    use crate::length::word_length;
    use crate::pair::catalog;
    use std::sync::Arc;

    fn series(label: &str, r: u32) -> (GrowthSeries, CosetStore) {
        let mut s = enumerate_ball(Arc::new(catalog(label).unwrap()), r, Caps::default()).unwrap();
        let l = word_length(&mut s, 100_000).unwrap();
        (growth_series(&s, &l, r).unwrap(), s)
    }

    #[test]
    fn z_counts_and_verdict() {
        let (g, s) = series("z:1", 40);
        for r in 0..=40u64 {
            assert_eq!(g.ball_counts[r as usize], 2 * r + 1);
        }
        assert_eq!(g, coset_depth_series(&s, 40).unwrap());
        let c = classify_growth(&g, &GrowthConfig::default()).unwrap();
        let GrowthVerdict::Polynomial { alpha } = c.verdict else { panic!("{c:?}") };
        assert!((alpha - 1.0).abs() <= 0.3);
    }

    /// Lattice points with `|x| + |y| ≤ r`, counted directly.
    fn diamond(r: i64) -> u64 {
        let mut n = 0;
        for x in -r..=r {
            for y in -r..=r {
                if x.abs() + y.abs() <= r {
                    n += 1;
                }
            }
        }
        n
    }

    #[test]
    fn z2_counts_and_verdict() {
        let (g, _) = series("z:2", 25);
        for r in 0..=25 {
            assert_eq!(g.ball_counts[r as usize], diamond(r));
            assert_eq!(g.ball_counts[r as usize], (2 * r * r + 2 * r + 1) as u64);
        }
        let c = classify_growth(&g, &GrowthConfig::default()).unwrap();
        let GrowthVerdict::Polynomial { alpha } = c.verdict else { panic!("{c:?}") };
        assert!((alpha - 2.0).abs() <= 0.3);
    }

    #[test]
    fn psl2_small_radius_is_exponential() {
        let (g, s) = series("psl2z1p:2", 5);
        assert_eq!(g.shell_counts, vec![1, 6, 24, 96, 384, 1536]);
        assert_eq!(coset_depth_series(&s, 5).unwrap().ball_counts, vec![1, 3, 7, 16, 36, 80]);
        let c = classify_growth(&g, &GrowthConfig::default()).unwrap();
        assert!(matches!(c.verdict, GrowthVerdict::Exponential { .. }));
        assert_eq!(c.min_tail_shell_ratio, 4.0);
    }

    #[test]
    fn incomplete_radius() {
        let mut s = enumerate_ball(Arc::new(catalog("z:1").unwrap()), 3, Caps::default()).unwrap();
        let l = word_length(&mut s, 10).unwrap();
        assert_eq!(
            growth_series(&s, &l, 4),
            Err(HeckeError::BallIncomplete { requested: 4, complete: 3 })
        );
    }

    #[test]
    fn fit_recovers_line() {
        let xs = [1.0, 2.0, 3.0];
        let (m, b, r2) = linear_fit(&xs, &[3.0, 5.0, 7.0]);
        assert_eq!((m, b, r2), (2.0, 1.0, 1.0));
    }
}
