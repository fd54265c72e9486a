//! Acceptance suite. Prints one PASS/FAIL line per check and exits nonzero
//! when any check fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use occfair::compositor::{
    apply_protocol, derive_seed, fit_affine, is_legal_combination, Affine, Category, Point,
    Protocol, DEFAULT_OPACITY_THRESHOLD, P4_PAIRS,
};
use occfair::fairness::{dispersion, fdr, gini, ir, max_min_ratio, FairnessReport, MetricName};
use occfair::foir::{foir, OcclusionMask, SaliencyMap};
use occfair::io::{write_landmarks, write_pairs, write_png};
use occfair::stats::one_way_anova;
use occfair::synthetic::{
    default_occlusion, demo_assets, demo_face, demo_landmarks, demo_library, generate_pairs,
    SyntheticConfig,
};
use occfair::verification::{group_rates, optimize_threshold, CandidateGrid, Decision, GroupRates};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Beta, Binomial, ContinuousCDF, DiscreteCDF};

type Check = Result<String, String>;

struct Suite {
    failed: usize,
    total: usize,
}

impl Suite {
    fn run(&mut self, name: &str, f: impl FnOnce() -> Check) {
        self.total += 1;
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                self.failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn round_to(v: f64, decimals: i32) -> f64 {
    let s = 10f64.powi(decimals);
    (v * s).round() / s
}

// ---------------------------------------------------------------------------
// Criterion 1 and 2: published per-group summaries.

const GROUPS: [&str; 4] = ["African", "Asian", "Caucasian", "Indian"];

struct BaselineRow {
    model: &'static str,
    accuracy: [f64; 4],
    fmr: [f64; 4],
    fnmr: [f64; 4],
    std: f64,
    ser: f64,
    garbe: f64,
    ir: f64,
    delta_fmr: f64,
    delta_err: f64,
}

const ROWS: [BaselineRow; 4] = [
    BaselineRow {
        model: "B34",
        accuracy: [92.5, 92.7, 95.2, 93.6],
        fmr: [0.08, 0.03, 0.02, 0.06],
        fnmr: [0.07, 0.12, 0.08, 0.06],
        std: 1.07,
        ser: 1.56,
        garbe: 0.29,
        ir: 3.0,
        delta_fmr: 0.06,
        delta_err: 2.7,
    },
    BaselineRow {
        model: "G34",
        accuracy: [93.5, 93.4, 94.6, 94.9],
        fmr: [0.04, 0.04, 2.3e-3, 0.02],
        fnmr: [0.09, 0.09, 0.11, 0.08],
        std: 0.66,
        ser: 1.30,
        garbe: 0.25,
        ir: 4.9,
        delta_fmr: 0.04,
        delta_err: 1.5,
    },
    BaselineRow {
        model: "B50",
        accuracy: [93.5, 93.1, 95.6, 94.6],
        fmr: [0.07, 0.02, 0.01, 0.04],
        fnmr: [0.06, 0.12, 0.07, 0.07],
        std: 0.99,
        ser: 1.59,
        garbe: 0.31,
        ir: 3.3,
        delta_fmr: 0.06,
        delta_err: 2.6,
    },
    BaselineRow {
        model: "G50",
        accuracy: [94.0, 94.4, 95.8, 95.4],
        fmr: [0.05, 0.04, 3.3e-3, 0.02],
        fnmr: [0.07, 0.07, 0.08, 0.07],
        std: 0.72,
        ser: 1.42,
        garbe: 0.23,
        ir: 4.1,
        delta_fmr: 0.05,
        delta_err: 1.8,
    },
];

fn summary_rates(row: &BaselineRow) -> Vec<GroupRates> {
    (0..4)
        .map(|i| {
            GroupRates::from_summary(GROUPS[i], row.accuracy[i] / 100.0, row.fmr[i], row.fnmr[i])
        })
        .collect()
}

fn table_row(row: &BaselineRow) -> Check {
    let report =
        FairnessReport::compute(0.5, &summary_rates(row), 0.5).map_err(|e| e.to_string())?;
    let get = |m: MetricName| {
        report
            .metric(m)
            .ok_or_else(|| format!("{} undefined", m.label()))
    };
    let std = get(MetricName::Std)?;
    let ser = get(MetricName::Ser)?;
    let garbe = get(MetricName::Garbe)?;
    let ir = get(MetricName::Ir)?;
    let d_fmr = get(MetricName::DeltaFmr)?;
    let d_err = get(MetricName::DeltaErr)?;
    let detail = format!(
        "STD {std:.4} SER {ser:.4} GARBE {garbe:.4} IR {ir:.3} dFMR {d_fmr:.4} dErr {d_err:.3}"
    );
    let mut misses = Vec::new();
    let mut within = |name: &str, got: f64, want: f64, tol: f64| {
        if (got - want).abs() > tol {
            misses.push(format!("{name} {got:.4} not within {tol} of {want}"));
        }
    };
    within("STD", std, row.std, 0.01);
    within("SER", ser, row.ser, 0.01);
    within("GARBE", garbe, row.garbe, 0.02);
    within("IR", ir, row.ir, 0.25);
    if round_to(d_fmr, 2) != row.delta_fmr {
        misses.push(format!(
            "dFMR rounds to {:.2}, table {}",
            round_to(d_fmr, 2),
            row.delta_fmr
        ));
    }
    if round_to(d_err, 1) != row.delta_err {
        misses.push(format!(
            "dErr rounds to {:.1}, table {}",
            round_to(d_err, 1),
            row.delta_err
        ));
    }
    if misses.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{}; {detail}", misses.join("; ")))
    }
}

/// FDR by hand for the B34 row: A = 0.08 - 0.02, B = 0.12 - 0.06.
fn fdr_oracle() -> Check {
    let got = fdr(&summary_rates(&ROWS[0]), 0.5).map_err(|e| e.to_string())?;
    let a: f64 = 0.08 - 0.02;
    let b: f64 = 0.12 - 0.06;
    let want = 1.0 - (0.5 * a + 0.5 * b);
    ensure(
        (got - want).abs() <= 1e-12 && (got - 0.94).abs() <= 1e-12,
        || format!("FDR {got} vs oracle {want}"),
    )?;
    Ok(format!("FDR {got:.12} equals the hand oracle"))
}

fn fdr_divergence() -> Check {
    let got = fdr(&summary_rates(&ROWS[0]), 0.5).map_err(|e| e.to_string())?;
    let published = 0.97;
    ensure(round_to(got, 2) != published, || {
        format!("FDR {got} rounds to the published {published}")
    })?;
    Ok(format!(
        "recomputed {got:.2} differs from the published {published}"
    ))
}

// ---------------------------------------------------------------------------
// Criterion 3: ratio identities.

fn random_rates(rng: &mut ChaCha8Rng) -> Vec<GroupRates> {
    GROUPS
        .iter()
        .map(|g| {
            GroupRates::from_summary(
                *g,
                rng.random_range(0.5..0.999),
                rng.random_range(1e-3..0.5),
                rng.random_range(1e-3..0.5),
            )
        })
        .collect()
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn identity_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst: f64 = 0.0;
    for case in 0..1000 {
        let rates = random_rates(&mut rng);
        let err: Vec<f64> = rates.iter().map(GroupRates::error).collect();
        let fmr: Vec<f64> = rates.iter().map(|r| r.fmr).collect();
        let fnmr: Vec<f64> = rates.iter().map(|r| r.fnmr).collect();
        let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);

        let d = dispersion(&rates).map_err(|e| e.to_string())?;
        let ser = occfair::fairness::ser(&rates).map_err(|e| e.to_string())?;
        // Δ_Err is reported in percentage points.
        let ser_id = 1.0 + (d.delta_err / 100.0) / min(&err);
        let a = max_min_ratio(&fmr, "A").map_err(|e| e.to_string())?;
        let a_id = 1.0 + d.delta_fmr / min(&fmr);
        let b = max_min_ratio(&fnmr, "B").map_err(|e| e.to_string())?;
        let b_id = 1.0 + d.delta_fnmr / min(&fnmr);
        let alpha: f64 = rng.random_range(0.0..=1.0);
        let ir_v = ir(&rates, alpha).map_err(|e| e.to_string())?;
        let ir_id = a_id.powf(alpha) * b_id.powf(1.0 - alpha);

        for (name, got, want) in [
            ("SER", ser, ser_id),
            ("A", a, a_id),
            ("B", b, b_id),
            ("IR", ir_v, ir_id),
        ] {
            ensure(rel_close(got, want, 1e-12), || {
                format!("case {case}: {name} {got} vs {want}")
            })?;
            worst = worst.max((got - want).abs());
        }

        let values: Vec<f64> = (0..rng.random_range(2..12))
            .map(|_| rng.random_range(0.0..1.0))
            .collect();
        let c: f64 = rng.random_range(0.01..100.0);
        let scaled: Vec<f64> = values.iter().map(|v| v * c).collect();
        let g = gini(&values).map_err(|e| e.to_string())?;
        let gs = gini(&scaled).map_err(|e| e.to_string())?;
        ensure((g - gs).abs() <= 1e-12, || {
            format!("case {case}: Gini {g} vs scaled {gs}")
        })?;
        worst = worst.max((g - gs).abs());
    }
    Ok(format!("1000 vectors, largest deviation {worst:.2e}"))
}

// ---------------------------------------------------------------------------
// Criterion 4: FOIR against a pixel-counting oracle.

fn naive_foir(map: &[f64], mask: &[bool], decision: Decision, fraction: f64) -> Option<f64> {
    let extreme = match decision {
        Decision::Match => map.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        Decision::NonMatch => map.iter().copied().fold(f64::INFINITY, f64::min),
    };
    let supports = match decision {
        Decision::Match => extreme > 0.0,
        Decision::NonMatch => extreme < 0.0,
    };
    if !supports {
        return None;
    }
    let mut ip = 0u32;
    let mut hit = 0u32;
    for (v, m) in map.iter().zip(mask) {
        let important = match decision {
            Decision::Match => *v >= fraction * extreme,
            Decision::NonMatch => *v <= fraction * extreme,
        };
        if important {
            ip += 1;
            hit += u32::from(*m);
        }
    }
    Some(f64::from(hit) / f64::from(ip))
}

struct Raster {
    w: usize,
    h: usize,
    values: Vec<f64>,
    mask: Vec<bool>,
    decision: Decision,
    fraction: f64,
}

fn random_raster(rng: &mut ChaCha8Rng) -> Raster {
    let w = rng.random_range(1..=32);
    let h = rng.random_range(1..=32);
    // Coarse levels make ties with the threshold common.
    let levels: i32 = rng.random_range(2..9);
    let values = (0..w * h)
        .map(|_| f64::from(rng.random_range(-levels..=levels)) / f64::from(levels))
        .collect();
    let density: f64 = rng.random_range(0.0..1.0);
    let mask = (0..w * h).map(|_| rng.random_bool(density)).collect();
    let decision = if rng.random_bool(0.5) {
        Decision::Match
    } else {
        Decision::NonMatch
    };
    let fraction = [0.25, 0.5, 0.6, 0.75, 1.0][rng.random_range(0..5)];
    Raster {
        w,
        h,
        values,
        mask,
        decision,
        fraction,
    }
}

fn library_foir(r: &Raster, mask: &[bool], fraction: f64) -> Result<Option<f64>, String> {
    let map = SaliencyMap::new(r.w, r.h, r.values.clone()).map_err(|e| e.to_string())?;
    let mask = OcclusionMask::new(r.w, r.h, mask.to_vec()).map_err(|e| e.to_string())?;
    foir(&map, &mask, r.decision, fraction).map_err(|e| e.to_string())
}

fn foir_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut defined = 0;
    for case in 0..500 {
        let r = random_raster(&mut rng);
        let got = library_foir(&r, &r.mask, r.fraction)?;
        let want = naive_foir(&r.values, &r.mask, r.decision, r.fraction);
        ensure(got == want, || {
            format!("case {case} ({}x{}): {got:?} vs {want:?}", r.w, r.h)
        })?;
        defined += usize::from(got.is_some());
    }
    Ok(format!(
        "500 rasters equal the oracle exactly ({defined} defined)"
    ))
}

fn foir_endpoints() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    for case in 0..500 {
        let r = random_raster(&mut rng);
        let none = vec![false; r.w * r.h];
        let Some(empty) = library_foir(&r, &none, r.fraction)? else {
            continue;
        };
        ensure(empty == 0.0, || {
            format!("case {case}: empty mask gives {empty}")
        })?;
        // The important pixels plus random extras.
        let map = SaliencyMap::new(r.w, r.h, r.values.clone()).map_err(|e| e.to_string())?;
        let mut cover = r.mask.clone();
        for i in occfair::foir::important_pixels(&map, r.decision, r.fraction)
            .map_err(|e| e.to_string())?
        {
            cover[i] = true;
        }
        let full = library_foir(&r, &cover, r.fraction)?;
        ensure(full == Some(1.0), || {
            format!("case {case}: IP inside O gives {full:?}")
        })?;
        checked += 1;
    }
    Ok(format!(
        "{checked} rasters: empty mask gives 0, covering mask gives 1"
    ))
}

fn foir_monotonicity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut checked = 0;
    for case in 0..500 {
        let r = random_raster(&mut rng);
        // Nested masks: the larger one adds random pixels.
        let larger: Vec<bool> = r.mask.iter().map(|m| *m || rng.random_bool(0.3)).collect();
        let small = library_foir(&r, &r.mask, r.fraction)?;
        let big = library_foir(&r, &larger, r.fraction)?;
        if let (Some(s), Some(b)) = (small, big) {
            ensure(s <= b, || {
                format!("case {case}: growing the mask lowered FOIR {s} -> {b}")
            })?;
        }
        // Nested important sets: a higher fraction keeps a subset of pixels.
        let map = SaliencyMap::new(r.w, r.h, r.values.clone()).map_err(|e| e.to_string())?;
        let lo = occfair::foir::important_pixels(&map, r.decision, r.fraction)
            .map_err(|e| e.to_string())?;
        let f_hi = (r.fraction + rng.random_range(0.0..=(1.0 - r.fraction))).min(1.0);
        let hi =
            occfair::foir::important_pixels(&map, r.decision, f_hi).map_err(|e| e.to_string())?;
        ensure(hi.iter().all(|i| lo.binary_search(i).is_ok()), || {
            format!(
                "case {case}: fraction {f_hi} keeps pixels outside fraction {}",
                r.fraction
            )
        })?;
        // On a mask containing the high-fraction set, FOIR cannot fall as the fraction rises.
        let mut nested = vec![false; r.w * r.h];
        for &i in &hi {
            nested[i] = true;
        }
        for (i, m) in r.mask.iter().enumerate() {
            nested[i] |= *m;
        }
        let at_lo = library_foir(&r, &nested, r.fraction)?;
        let at_hi = library_foir(&r, &nested, f_hi)?;
        if let (Some(a), Some(b)) = (at_lo, at_hi) {
            ensure(a <= b, || {
                format!("case {case}: {a} at {} above {b} at {f_hi}", r.fraction)
            })?;
        }
        checked += 1;
    }
    Ok(format!("{checked} nested mask and fraction cases"))
}

// ---------------------------------------------------------------------------
// Criterion 5: ANOVA.

fn anova_equal_means() -> Check {
    let res = one_way_anova(&[
        vec![1.0, 2.0, 3.0],
        vec![3.0, 2.0, 1.0],
        vec![0.0, 2.0, 4.0],
    ])
    .map_err(|e| e.to_string())?;
    ensure(res.f_statistic == 0.0 && res.p_value == 1.0, || {
        format!("F {} p {}", res.f_statistic, res.p_value)
    })?;
    Ok("F = 0, p = 1".into())
}

/// F and p for two groups from first principles, with the F tail taken from
/// an independent regularized incomplete beta implementation.
fn anova_two_group_oracle(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (ma, mb) = (mean(a), mean(b));
    let n = (a.len() + b.len()) as f64;
    let grand = (ma * a.len() as f64 + mb * b.len() as f64) / n;
    let ssb = a.len() as f64 * (ma - grand).powi(2) + b.len() as f64 * (mb - grand).powi(2);
    let ssw: f64 = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>()
        + b.iter().map(|x| (x - mb).powi(2)).sum::<f64>();
    let (d1, d2) = (1.0, n - 2.0);
    let f = (ssb / d1) / (ssw / d2);
    // P(F > f) = I_{d2 / (d2 + d1 f)}(d2 / 2, d1 / 2).
    let x = d2 / (d2 + d1 * f);
    let p = Beta::new(d2 / 2.0, d1 / 2.0).unwrap().cdf(x);
    (f, p)
}

const FIXTURE_A: [f64; 4] = [1.0, 2.0, 3.0, 4.0];
const FIXTURE_B: [f64; 4] = [2.0, 3.0, 4.0, 5.0];

fn anova_fixture_oracle() -> Check {
    let res =
        one_way_anova(&[FIXTURE_A.to_vec(), FIXTURE_B.to_vec()]).map_err(|e| e.to_string())?;
    let (f, p) = anova_two_group_oracle(&FIXTURE_A, &FIXTURE_B);
    ensure(
        (res.f_statistic - f).abs() <= 1e-3 && (res.p_value - p).abs() <= 1e-3,
        || {
            format!(
                "F {} p {} vs oracle F {f} p {p}",
                res.f_statistic, res.p_value
            )
        },
    )?;
    Ok(format!(
        "F {:.4} p {:.5} match the oracle",
        res.f_statistic, res.p_value
    ))
}

fn anova_fixture_literal() -> Check {
    let res =
        one_way_anova(&[FIXTURE_A.to_vec(), FIXTURE_B.to_vec()]).map_err(|e| e.to_string())?;
    let (f, p) = (res.f_statistic, res.p_value);
    ensure(
        (f - 1.6667).abs() <= 1e-3 && (p - 0.244).abs() <= 1e-3,
        || format!("F {f:.4} p {p:.5}, expected F 1.6667 p 0.244"),
    )?;
    Ok(format!("F {f:.4} p {p:.5}"))
}

fn anova_t_squared() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut worst: f64 = 0.0;
    for case in 0..200 {
        let na = rng.random_range(2..30);
        let nb = rng.random_range(2..30);
        let shift: f64 = rng.random_range(-2.0..2.0);
        let a: Vec<f64> = (0..na).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..nb)
            .map(|_| shift + rng.random_range(-1.0..1.0))
            .collect();
        let res = one_way_anova(&[a.clone(), b.clone()]).map_err(|e| e.to_string())?;
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (ma, mb) = (mean(&a), mean(&b));
        let ss = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>()
            + b.iter().map(|x| (x - mb).powi(2)).sum::<f64>();
        let sp2 = ss / (na + nb - 2) as f64;
        let t = (ma - mb) / (sp2 * (1.0 / na as f64 + 1.0 / nb as f64)).sqrt();
        let dev = (res.f_statistic - t * t).abs() / (t * t).max(1.0);
        ensure(dev <= 1e-10, || {
            format!("case {case}: F {} vs t² {}", res.f_statistic, t * t)
        })?;
        worst = worst.max(dev);
    }
    Ok(format!("200 cases, largest relative deviation {worst:.2e}"))
}

// ---------------------------------------------------------------------------
// Criterion 6: compositor contracts.

fn affine_exact() -> Check {
    let src = [
        Point::new(0.0, 0.0),
        Point::new(10.0, 0.0),
        Point::new(0.0, 10.0),
        Point::new(7.0, 3.0),
    ];
    let id = fit_affine(&src, &src).map_err(|e| e.to_string())?;
    let scaled: Vec<Point> = src
        .iter()
        .map(|p| Point::new(2.5 * p.x, 2.5 * p.y))
        .collect();
    let sc = fit_affine(&src, &scaled).map_err(|e| e.to_string())?;
    let scale = Affine {
        m: [[2.5, 0.0, 0.0], [0.0, 2.5, 0.0]],
    };
    for r in 0..2 {
        for c in 0..3 {
            ensure(
                (id.m[r][c] - Affine::IDENTITY.m[r][c]).abs() <= 1e-9,
                || format!("identity {:?}", id.m),
            )?;
            ensure((sc.m[r][c] - scale.m[r][c]).abs() <= 1e-9, || {
                format!("scale {:?}", sc.m)
            })?;
        }
    }
    Ok("identity and 2.5x scale recovered to 1e-9".into())
}

fn protocol_audit() -> Check {
    let library = demo_library().map_err(|e| e.to_string())?;
    let face = demo_face(96, 96, 17);
    let landmarks = demo_landmarks(96, 96);
    let runs = 1000u64;
    let mut p1 = [0u64; 4];
    let mut p4 = [0u64; 5];
    let mut artifacts = 0;
    for protocol in [Protocol::P1, Protocol::P4] {
        for i in 0..runs {
            let seed = derive_seed(2025, &format!("audit-{i}"));
            let art = apply_protocol(
                &face,
                &landmarks,
                protocol,
                &library,
                seed,
                DEFAULT_OPACITY_THRESHOLD,
            )
            .map_err(|e| e.to_string())?;
            let cats: Vec<Category> = art
                .provenance
                .occlusions
                .iter()
                .map(|o| o.category)
                .collect();
            ensure(is_legal_combination(protocol, &cats), || {
                format!("{protocol:?} run {i}: {cats:?}")
            })?;
            for y in 0..face.height {
                for x in 0..face.width {
                    ensure(
                        art.mask.get(x, y) || face.pixel(x, y) == art.image.pixel(x, y),
                        || {
                            format!(
                                "{protocol:?} run {i}: pixel ({x}, {y}) changed outside the mask"
                            )
                        },
                    )?;
                }
            }
            artifacts += 1;
            let pos = |c: Category| Category::ALL.iter().position(|k| *k == c).unwrap();
            match protocol {
                Protocol::P1 => p1[pos(cats[0])] += 1,
                Protocol::P4 if cats.len() == 1 => p4[0] += 1,
                Protocol::P4 => {
                    p4[1 + P4_PAIRS.iter().position(|p| p[..] == cats[..]).unwrap()] += 1
                }
            }
        }
    }
    let bounds = |p: f64| {
        let d = Binomial::new(p, runs).unwrap();
        (d.inverse_cdf(0.005), d.inverse_cdf(0.995))
    };
    let (lo, hi) = bounds(0.25);
    ensure(p1.iter().all(|n| (lo..=hi).contains(n)), || {
        format!("P1 counts {p1:?} outside [{lo}, {hi}]")
    })?;
    let (lo4, hi4) = bounds(0.2);
    ensure(p4.iter().all(|n| (lo4..=hi4).contains(n)), || {
        format!("P4 counts {p4:?} outside [{lo4}, {hi4}]")
    })?;
    Ok(format!(
        "{artifacts} artifacts legal and unchanged outside their masks; P1 {p1:?} in [{lo}, {hi}], P4 {p4:?} in [{lo4}, {hi4}]"
    ))
}

// ---------------------------------------------------------------------------
// Criterion 7: directional reproduction on synthetic scores.

const DIRECTIONAL: [MetricName; 6] = [
    MetricName::Std,
    MetricName::Eo,
    MetricName::Dp,
    MetricName::DeltaFmr,
    MetricName::DeltaFnmr,
    MetricName::Fdr,
];

fn directional_trial(trial: u64) -> Result<bool, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(7, &format!("trial-{trial}")));
    let config = SyntheticConfig::four_groups();
    let severity: f64 = rng.random_range(0.8..1.2);
    let effect = default_occlusion().scaled(severity);
    let baseline = generate_pairs(&config, None, rng.random()).map_err(|e| e.to_string())?;
    let occluded =
        generate_pairs(&config, Some(&effect), rng.random()).map_err(|e| e.to_string())?;
    let threshold = optimize_threshold(&baseline, &CandidateGrid::Midpoints)
        .map_err(|e| e.to_string())?
        .threshold;
    let report = |pairs| -> Result<FairnessReport, String> {
        let rates = group_rates(pairs, threshold).map_err(|e| e.to_string())?;
        FairnessReport::compute(threshold, &rates, 0.5).map_err(|e| e.to_string())
    };
    let (b, o) = (report(&baseline)?, report(&occluded)?);
    Ok(DIRECTIONAL
        .iter()
        .all(|&m| match (b.metric(m), o.metric(m)) {
            (Some(b), Some(o)) if m == MetricName::Fdr => o < b,
            (Some(b), Some(o)) => o > b,
            _ => false,
        }))
}

fn directional() -> Check {
    let start = Instant::now();
    let mut hits = 0;
    for trial in 0..100 {
        hits += usize::from(directional_trial(trial)?);
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(hits >= 95 && secs < 60.0, || {
        format!("{hits}/100 trials in {secs:.1}s")
    })?;
    Ok(format!("{hits}/100 trials show the pattern, {secs:.1}s"))
}

// ---------------------------------------------------------------------------
// Criterion 8: determinism through the binary.

fn occfair(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_occfair"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!(
            "occfair {}: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

/// Every file under `root` with its bytes; `manifest.json` loses its
/// `created_at` line.
fn snapshot(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
                continue;
            }
            let mut bytes = std::fs::read(&path).unwrap();
            if path.file_name().is_some_and(|n| n == "manifest.json") {
                let text = String::from_utf8(bytes).unwrap();
                bytes = text
                    .lines()
                    .filter(|l| !l.trim_start().starts_with("\"created_at\""))
                    .collect::<Vec<_>>()
                    .join("\n")
                    .into_bytes();
            }
            files.push((
                path.strip_prefix(root).unwrap().display().to_string(),
                bytes,
            ));
        }
    }
    files.sort();
    files
}

fn determinism_fixture(dir: &Path) -> Result<(), String> {
    let io = |e: occfair::Error| e.to_string();
    let mut rows = Vec::new();
    for i in 0..4 {
        let id = format!("face{i}");
        write_png(
            &dir.join("images").join(format!("{id}.png")),
            &demo_face(96, 96, i),
        )
        .map_err(io)?;
        rows.push((id, demo_landmarks(96, 96)));
    }
    let mut buf = Vec::new();
    write_landmarks(&mut buf, &rows).map_err(io)?;
    std::fs::write(dir.join("landmarks.csv"), buf).map_err(|e| e.to_string())?;
    std::fs::create_dir_all(dir.join("assets")).map_err(|e| e.to_string())?;
    for (sidecar, raster) in demo_assets() {
        let id = sidecar.id.clone().unwrap_or_default();
        write_png(&dir.join("assets").join(format!("{id}.png")), &raster).map_err(io)?;
        std::fs::write(
            dir.join("assets").join(format!("{id}.json")),
            serde_json::to_vec(&sidecar).unwrap(),
        )
        .map_err(|e| e.to_string())?;
    }
    let config = SyntheticConfig::four_groups().with_pairs_per_group(300, 300);
    for (name, effect) in [("base", None), ("occ", Some(default_occlusion()))] {
        let pairs = generate_pairs(&config, effect.as_ref(), 9).map_err(io)?;
        let mut buf = Vec::new();
        write_pairs(&mut buf, &pairs).map_err(io)?;
        std::fs::write(dir.join(format!("{name}.csv")), buf).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    determinism_fixture(dir)?;
    let runs: [(&str, Vec<&str>); 3] = [
        (
            "occlude",
            vec![
                "occlude",
                "--images",
                "images",
                "--landmarks",
                "landmarks.csv",
                "--assets",
                "assets",
                "--protocol",
                "4",
                "--seed",
                "13",
            ],
        ),
        (
            "evaluate-base",
            vec!["evaluate", "--pairs", "base.csv", "--seed", "13"],
        ),
        (
            "evaluate-occ",
            vec![
                "evaluate",
                "--pairs",
                "occ.csv",
                "--baseline-report",
                "evaluate-base/report.json",
            ],
        ),
    ];
    let mut compared = 0;
    for (name, args) in &runs {
        let mut full = args.clone();
        full.extend(["--out", *name]);
        occfair(dir, &full)?;
        let first = snapshot(&dir.join(name));
        occfair(dir, &full)?;
        let second = snapshot(&dir.join(name));
        let names = |s: &[(String, Vec<u8>)]| s.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>();
        ensure(names(&first) == names(&second), || {
            format!("{name}: file lists differ")
        })?;
        for ((n, x), (_, y)) in first.iter().zip(&second) {
            ensure(x == y, || format!("{name}: {n} differs between reruns"))?;
        }
        compared += first.len();
    }
    Ok(format!(
        "{compared} files identical across reruns apart from created_at"
    ))
}

fn main() -> ExitCode {
    let mut suite = Suite {
        failed: 0,
        total: 0,
    };
    for row in &ROWS {
        suite.run(&format!("criterion 1 table metrics {}", row.model), || {
            table_row(row)
        });
    }
    suite.run("criterion 2 FDR hand oracle", fdr_oracle);
    suite.run(
        "criterion 2 FDR divergence from published 0.97",
        fdr_divergence,
    );
    suite.run("criterion 3 SER, IR and Gini identities", identity_suite);
    suite.run("criterion 4 FOIR oracle equivalence", foir_oracle);
    suite.run("criterion 4 FOIR endpoints", foir_endpoints);
    suite.run("criterion 4 FOIR monotonicity", foir_monotonicity);
    suite.run("criterion 5 ANOVA equal means", anova_equal_means);
    suite.run(
        "criterion 5 ANOVA fixture against oracle",
        anova_fixture_oracle,
    );
    suite.run(
        "criterion 5 ANOVA fixture stated values F 1.6667 p 0.244",
        anova_fixture_literal,
    );
    suite.run("criterion 5 ANOVA F equals t squared", anova_t_squared);
    suite.run("criterion 6 affine identity and scale", affine_exact);
    suite.run("criterion 6 protocol audit", protocol_audit);
    suite.run("criterion 7 directional reproduction", directional);
    suite.run("criterion 8 determinism", determinism);
    println!(
        "{} of {} checks passed",
        suite.total - suite.failed,
        suite.total
    );
    if suite.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
