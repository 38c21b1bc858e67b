//! Acceptance criteria 1 to 11. Runs as a plain binary so every criterion
//! prints its PASS/FAIL line; exits nonzero if any fails.

use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use hecke_cli::commands::{law_radius, length_radius};
use hecke_cli::golden::{self, sample_ball};
use hecke_cli::suites;
use hecke_core::algebra::{
    basis_element, convolution_power_moments, convolve, HeckeElement,
};
use hecke_core::coset::{enumerate_ball, unimodularity_check, Caps, CosetStore};
use hecke_core::group::{parse_q, q, q_frac, GroupElement};
use hecke_core::growth::{classify_growth, growth_series, GrowthConfig, GrowthVerdict};
use hecke_core::length::{averaged_length, element_word_lengths, word_length};
use hecke_core::pair::{catalog, CATALOG_LABELS};
use hecke_core::rd::{
    coherence_checks, default_kesten_element, kesten_diagnostic, moment_root, operator_matrix,
    rd_profile, truncated_norm, PowerIteration, RdConfig, RdProfile, RdVerdict,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

const MAX_ORBIT: usize = 100_000;

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    check(t < limit, format!("took {t:.1?}, limit {limit:?}"))
}

fn ball(label: &str, r: u32) -> Result<CosetStore, String> {
    enumerate_ball(Arc::new(catalog(label).map_err(e2s)?), r, Caps::default()).map_err(e2s)
}

fn finite_oracle() -> Outcome {
    let start = Instant::now();
    let mut lines = Vec::new();
    for label in ["s3-h12", "s4-h12", "s4-h12-34"] {
        let r = suites::finite_oracle_equivalence(Arc::new(catalog(label).map_err(e2s)?), Caps::default())
            .map_err(e2s)?;
        check(r.passed, format!("{label}: {}", r.detail))?;
        lines.push(format!("{label} ({} checks)", r.checked));
    }
    // T_d ∗ T_d = 2 T_e + T_d on S₃
    let mut s = ball("s3-h12", 3)?;
    let e = s.identity_class().map_err(e2s)?;
    let d = s.class_of(&GroupElement::perm(vec![0, 2, 1]).map_err(e2s)?, MAX_ORBIT).map_err(e2s)?;
    let td = basis_element(&s, d).map_err(e2s)?;
    let sq = convolve(&mut s, &td, &td, MAX_ORBIT).map_err(e2s)?;
    let expected = HeckeElement::from_terms(&s, vec![(e, q(2)), (d, q(1))]).map_err(e2s)?;
    check(sq == expected, format!("S3: T_d*T_d = {sq}"))?;
    within(start, Duration::from_secs(5))?;
    Ok(format!("{}; S3 T_d*T_d = 2T_e + T_d", lines.join(", ")))
}

fn algebra_laws() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for label in CATALOG_LABELS {
        let r = law_radius(label);
        let mut store = sample_ball(Arc::new(catalog(label).map_err(e2s)?), r, Caps::default()).map_err(e2s)?;
        let classes = store.classify_ball(r, MAX_ORBIT).map_err(e2s)?;
        let res = suites::algebra_laws(&mut store, &classes, 200, &mut rng, MAX_ORBIT).map_err(e2s)?;
        check(res.passed, format!("{label}: {}", res.detail))?;
    }
    within(start, Duration::from_secs(60))?;
    Ok(format!("200 cases on each of {} pairs", CATALOG_LABELS.len()))
}

fn unimodularity() -> Outcome {
    let start = Instant::now();
    for (label, primes) in [("bc", vec![2, 3, 5]), ("bcp:2", vec![2]), ("bcp:3", vec![3]), ("bcp:5", vec![5])] {
        let rep = unimodularity_check(&catalog(label).map_err(e2s)?, MAX_ORBIT).map_err(e2s)?;
        check(!rep.verdict, format!("{label}: verdict true"))?;
        for p in primes {
            let g = GroupElement::aff(q(0), q(p));
            let delta = rep.deltas.iter().find(|(x, _)| *x == g).map(|(_, d)| d.clone());
            check(delta == Some(q_frac(1, p)), format!("{label}: Δ((0,{p})) = {delta:?}"))?;
        }
        let (w, d) = rep.witness().ok_or(format!("{label}: no witness"))?;
        check(*d != q(1) && rep.deltas.iter().any(|(x, _)| x == w), format!("{label}: bad witness"))?;
    }
    for label in ["z:1", "z:2", "dinf", "psl2z1p:2"] {
        let rep = unimodularity_check(&catalog(label).map_err(e2s)?, MAX_ORBIT).map_err(e2s)?;
        check(rep.verdict, format!("{label}: verdict false"))?;
    }
    within(start, Duration::from_secs(10))?;
    Ok("BC, BC_2, BC_3, BC_5 false with Δ((0,p)) = 1/p; Z, Z^2, D_inf, PSL2 true".into())
}

fn rd_obstruction() -> Outcome {
    let ctx = catalog("bcp:2").map_err(e2s)?;
    let cfg = RdConfig::for_pair("bcp:2");
    let run = || -> Result<(RdVerdict, String), String> {
        let rep = unimodularity_check(&ctx, MAX_ORBIT).map_err(e2s)?;
        let mut store = ball("bcp:2", cfg.store_radius())?;
        let l = word_length(&mut store, MAX_ORBIT).map_err(e2s)?;
        let p = rd_profile(&mut store, &l, &rep, &cfg).map_err(e2s)?;
        Ok((p.verdict.clone(), serde_json::to_string(&p).map_err(e2s)?))
    };
    let (v1, j1) = run()?;
    let (v2, j2) = run()?;
    check(v1 == RdVerdict::ObstructedNonunimodular, format!("verdict {v1:?}"))?;
    check(v1 == v2 && j1 == j2, "two runs differ")?;
    Ok("ObstructedNonunimodular, identical on rerun".into())
}

fn growth() -> Outcome {
    let start = Instant::now();
    let cfg = GrowthConfig::default();
    let series = |label: &str, r: u32| {
        let mut s = ball(label, r)?;
        let l = word_length(&mut s, MAX_ORBIT).map_err(e2s)?;
        growth_series(&s, &l, r).map_err(e2s)
    };
    let z1 = series("z:1", 40)?;
    for r in 0..=40u64 {
        check(z1.ball_counts[r as usize] == 2 * r + 1, format!("Z: G({r}) = {}", z1.ball_counts[r as usize]))?;
    }
    let c1 = classify_growth(&z1, &cfg).map_err(e2s)?;
    let GrowthVerdict::Polynomial { alpha: a1 } = c1.verdict else {
        return Err(format!("Z verdict {:?}", c1.verdict));
    };
    check((a1 - 1.0).abs() <= 0.3, format!("Z alpha {a1}"))?;
    let z2 = series("z:2", 25)?;
    for r in 0..=25u64 {
        let want = 2 * r * r + 2 * r + 1;
        check(z2.ball_counts[r as usize] == want, format!("Z^2: G({r}) = {}", z2.ball_counts[r as usize]))?;
    }
    let c2 = classify_growth(&z2, &cfg).map_err(e2s)?;
    let GrowthVerdict::Polynomial { alpha: a2 } = c2.verdict else {
        return Err(format!("Z^2 verdict {:?}", c2.verdict));
    };
    check((a2 - 2.0).abs() <= 0.3, format!("Z^2 alpha {a2}"))?;
    let p = series("psl2z1p:2", 8)?;
    let cp = classify_growth(&p, &cfg).map_err(e2s)?;
    check(matches!(cp.verdict, GrowthVerdict::Exponential { .. }), format!("PSL2 verdict {:?}", cp.verdict))?;
    check(cp.min_tail_shell_ratio >= 3.0, format!("PSL2 shell ratio {}", cp.min_tail_shell_ratio))?;
    within(start, Duration::from_secs(300))?;
    Ok(format!(
        "alpha(Z) = {a1:.4}, alpha(Z^2) = {a2:.4}, PSL2 radius 8 exponential, min tail shell ratio {}",
        cp.min_tail_shell_ratio
    ))
}

fn tree_class_sizes() -> Outcome {
    let label = "psl2z1p:2";
    let stored: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(
            std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("golden").join(golden::file_name(label)),
        )
        .map_err(e2s)?,
    )
    .map_err(e2s)?;
    let mut s = ball(label, golden::radius(label))?;
    s.classify_ball(golden::radius(label), MAX_ORBIT).map_err(e2s)?;
    s.fill_left_counts(MAX_ORBIT).map_err(e2s)?;
    s.fill_inverses(MAX_ORBIT).map_err(e2s)?;
    let g2 = GroupElement::mat(q(2), q(0), q(0), q_frac(1, 2), true);
    let mut sizes = Vec::new();
    for k in 1..=2 {
        let d = s.class_of(&g2.pow(k).map_err(e2s)?, MAX_ORBIT).map_err(e2s)?;
        let rec = s.double_coset(d).map_err(e2s)?.clone();
        let pinned = stored["double_cosets"][d.0]["R"].as_u64();
        check(pinned == Some(rec.r as u64), format!("g2^{k}: R = {} but snapshot has {pinned:?}", rec.r))?;
        let inv = s.invert_double_coset(d, MAX_ORBIT).map_err(e2s)?;
        let l_inv = s.ensure_left_count(inv, MAX_ORBIT).map_err(e2s)?;
        check(rec.r == l_inv, format!("g2^{k}: R = {} but L(inv) = {l_inv}", rec.r))?;
        let delta = s.delta(d, MAX_ORBIT).map_err(e2s)?;
        check(delta == q(1), format!("g2^{k}: Δ = {delta}"))?;
        sizes.push(rec.r);
    }
    Ok(format!("R(g2) = {}, R(g2^2) = {} (snapshot), R = L(inv), Δ = 1; tree count 6, 24", sizes[0], sizes[1]))
}

fn spectral_on_z() -> Outcome {
    let start = Instant::now();
    let mut s = ball("z:1", 50)?;
    s.classify_ball(50, MAX_ORBIT).map_err(e2s)?;
    let terms: Vec<_> = (-1..=1)
        .map(|k| Ok((s.class_of(&GroupElement::zvec(vec![k]), MAX_ORBIT).map_err(e2s)?, q(1))))
        .collect::<Result<_, String>>()?;
    let f = HeckeElement::from_terms(&s, terms).map_err(e2s)?;
    let a = convolution_power_moments(&mut s, &f, 20, MAX_ORBIT).map_err(e2s)?;
    check(a[0] == q(3) && a[1] == q(19), format!("a_1 = {}, a_2 = {}", a[0], a[1]))?;
    let rho20 = moment_root(&a[19], 20);
    check((2.70..=3.00).contains(&rho20), format!("rho_20 = {rho20}"))?;
    let op = operator_matrix(&s, &f, 50).map_err(e2s)?;
    let norm = truncated_norm(&op, PowerIteration::default()).value;
    let exact = 1.0 + 2.0 * (std::f64::consts::PI / 102.0).cos();
    check((norm - exact).abs() <= 1e-3, format!("truncated norm {norm} vs {exact}"))?;
    let rep = unimodularity_check(s.context(), MAX_ORBIT).map_err(e2s)?;
    let k = kesten_diagnostic(&mut s, Some(f), 20, &rep, PowerIteration::default(), MAX_ORBIT).map_err(e2s)?;
    check(k.amenability_index >= 0.93, format!("Kesten index {}", k.amenability_index))?;
    within(start, Duration::from_secs(60))?;
    Ok(format!(
        "a_1 = 3, a_2 = 19, rho_20 = {rho20:.6}, |norm - 1+2cos(pi/102)| = {:.2e}, Kesten index {:.6}",
        (norm - exact).abs(),
        k.amenability_index
    ))
}

/// The test functions of a profile, rebuilt from their recorded supports.
fn profile_functions(store: &CosetStore, p: &RdProfile) -> Result<Vec<HeckeElement>, String> {
    p.records
        .iter()
        .map(|rec| {
            let terms = rec
                .support
                .iter()
                .map(|(d, c, _)| Ok((hecke_core::coset::DoubleCosetId(*d), parse_q(c, 0).map_err(e2s)?)))
                .collect::<Result<Vec<_>, String>>()?;
            HeckeElement::from_terms(store, terms).map_err(e2s)
        })
        .collect()
}

fn coherence() -> Outcome {
    let mut checked = 0;
    for label in CATALOG_LABELS {
        let ctx = Arc::new(catalog(label).map_err(e2s)?);
        let rep = unimodularity_check(&ctx, MAX_ORBIT).map_err(e2s)?;
        let cfg = RdConfig::for_pair(label);
        let (mut store, fs) = if rep.verdict {
            let mut store = ball(label, cfg.store_radius())?;
            let l = word_length(&mut store, MAX_ORBIT).map_err(e2s)?;
            let p = rd_profile(&mut store, &l, &rep, &cfg).map_err(e2s)?;
            let fs = profile_functions(&store, &p)?;
            (store, fs)
        } else {
            // the profile itself runs no estimator; check them on the random-walk element
            let mut store = sample_ball(ctx.clone(), 4.min(length_radius(label)), Caps::default()).map_err(e2s)?;
            let f = default_kesten_element(&mut store, MAX_ORBIT).map_err(e2s)?;
            (store, vec![f])
        };
        let radius = store.radius_complete();
        for f in fs {
            let c = coherence_checks(
                &mut store,
                &f,
                radius,
                cfg.moment_order,
                cfg.moment_budget,
                rep.verdict,
                cfg.power,
                MAX_ORBIT,
            )
            .map_err(e2s)?;
            check(c.holds(), format!("{label}: {c:?}"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} test functions over {} pairs", CATALOG_LABELS.len()))
}

fn lengths() -> Outcome {
    let mut checked = 0;
    for label in CATALOG_LABELS {
        let mut store =
            sample_ball(Arc::new(catalog(label).map_err(e2s)?), length_radius(label), Caps::default()).map_err(e2s)?;
        for r in suites::length_suite(&mut store, MAX_ORBIT).map_err(e2s)? {
            check(r.passed, format!("{label} {}: {}", r.suite, r.detail))?;
            checked += r.checked;
        }
    }
    let ctx = catalog("dinf").map_err(e2s)?;
    let el = element_word_lengths(&ctx, 11).map_err(e2s)?;
    let avg = averaged_length(&ctx, &el, 8).map_err(e2s)?;
    check(avg.bound_holds, "D_inf: averaged bound fails")?;
    Ok(format!(
        "{checked} exact checks over {} pairs; D_inf l1 <= |H| l + 2 sum l(h) on {} elements",
        CATALOG_LABELS.len(),
        avg.rows.len()
    ))
}

fn rd_shadows() -> Outcome {
    let mut parts = Vec::new();
    for label in ["z:1", "z:2", "psl2z1p:2"] {
        let cfg = RdConfig::for_pair(label);
        let ctx = catalog(label).map_err(e2s)?;
        let rep = unimodularity_check(&ctx, MAX_ORBIT).map_err(e2s)?;
        let mut store = ball(label, cfg.store_radius())?;
        let l = word_length(&mut store, MAX_ORBIT).map_err(e2s)?;
        let p = rd_profile(&mut store, &l, &rep, &cfg).map_err(e2s)?;
        let fits = p.fits.as_ref().ok_or(format!("{label}: no fit"))?;
        if label.starts_with("z:") {
            let RdVerdict::PolynomialCompatible { s_hat, c_hat } = p.verdict else {
                return Err(format!("{label}: verdict {:?}", p.verdict));
            };
            check(c_hat.is_finite(), format!("{label}: c_hat {c_hat}"))?;
            parts.push(format!("{label} s_hat = {s_hat}, c_hat = {c_hat:.4}"));
        } else {
            check(
                fits.poly_slope <= cfg.poly_slope_max,
                format!("{label}: slope {} > {}", fits.poly_slope, cfg.poly_slope_max),
            )?;
            parts.push(format!("{label} slope {:.4} <= {}", fits.poly_slope, cfg.poly_slope_max));
        }
    }
    Ok(parts.join("; "))
}

fn determinism() -> Outcome {
    let exe = env!("CARGO_BIN_EXE_hecke");
    let runs: &[&[&str]] = &[
        &["enumerate", "--pair", "z:2", "--rmax", "4"],
        &["ltable", "--pair", "s4-h12"],
        &["growth", "--pair", "z:2", "--rmax", "25"],
        &["rd-profile", "--pair", "dinf", "--seed", "7"],
        &["rd-profile", "--pair", "bcp:2"],
        &["kesten", "--pair", "z:1"],
        &["verify"],
    ];
    for args in runs {
        let mut outputs = Vec::new();
        for _ in 0..2 {
            let dir = tempfile::tempdir().map_err(e2s)?;
            let status = Command::new(exe)
                .args(*args)
                .arg("--out")
                .arg(dir.path())
                .status()
                .map_err(e2s)?;
            let name = args[0];
            let json = std::fs::read(dir.path().join(format!("{name}.json"))).map_err(e2s)?;
            let csv = std::fs::read(dir.path().join(format!("{name}.csv"))).map_err(e2s)?;
            outputs.push((status.code(), json, csv));
        }
        check(outputs[0] == outputs[1], format!("`hecke {}` differs between runs", args.join(" ")))?;
    }
    Ok(format!("{} commands byte-identical across two runs", runs.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("finite-oracle equivalence", finite_oracle),
        ("algebra laws", algebra_laws),
        ("unimodularity verdicts", unimodularity),
        ("RD obstruction", rd_obstruction),
        ("growth", growth),
        ("tree-side class sizes", tree_class_sizes),
        ("spectral estimators on Z", spectral_on_z),
        ("estimator coherence", coherence),
        ("length-function suite", lengths),
        ("RD-compatibility shadows", rd_shadows),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let t = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS [{t:.1?}] {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL [{t:.1?}] {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
