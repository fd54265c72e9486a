#![allow(clippy::needless_range_loop)]

use occfair::compositor::{
    apply_protocol, composite, derive_seed, fit_affine, is_legal_combination, select_occlusions,
    Affine, AssetImage, BitDepth, Category, ColorType, Point, Protocol, Raster,
    DEFAULT_OPACITY_THRESHOLD, P4_PAIRS,
};
use occfair::synthetic::{demo_face, demo_landmarks, demo_library};
use proptest::prelude::*;
use statrs::distribution::{Binomial, DiscreteCDF};

/// Least squares through the 3x3 normal equations `(XᵀX) p = Xᵀu`, solved
/// by Gaussian elimination with partial pivoting, once per output row.
fn normal_equations_fit(src: &[Point], dst: &[Point]) -> [[f64; 3]; 2] {
    let rows: Vec<[f64; 3]> = src.iter().map(|p| [p.x, p.y, 1.0]).collect();
    let mut out = [[0.0; 3]; 2];
    for (k, row_out) in out.iter_mut().enumerate() {
        let mut a = [[0.0; 4]; 3];
        for (r, d) in rows.iter().zip(dst) {
            let u = if k == 0 { d.x } else { d.y };
            for i in 0..3 {
                for j in 0..3 {
                    a[i][j] += r[i] * r[j];
                }
                a[i][3] += r[i] * u;
            }
        }
        for col in 0..3 {
            let piv = (col..3)
                .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
                .unwrap();
            a.swap(col, piv);
            for r in 0..3 {
                if r != col {
                    let f = a[r][col] / a[col][col];
                    for c in col..4 {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
        for i in 0..3 {
            row_out[i] = a[i][3] / a[i][i];
        }
    }
    out
}

fn point() -> impl Strategy<Value = Point> {
    (-200.0f64..200.0, -200.0f64..200.0).prop_map(|(x, y)| Point::new(x, y))
}

fn spread(points: &[Point]) -> bool {
    let (a, b, c) = (points[0], points[1], points[2]);
    let area = ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)).abs();
    area > 50.0
}

/// Straight-alpha bilinear sampler with transparent borders, written
/// independently of the library.
fn oracle_sample(asset: &AssetImage, x: f64, y: f64) -> [f64; 4] {
    let tap = |ix: i64, iy: i64| -> [f64; 4] {
        if ix < 0 || iy < 0 || ix >= asset.width as i64 || iy >= asset.height as i64 {
            return [0.0; 4];
        }
        let p = asset.pixels[iy as usize * asset.width + ix as usize];
        let a = p[3] as f64;
        [p[0] as f64 * a, p[1] as f64 * a, p[2] as f64 * a, a]
    };
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (ix, iy) = (x0 as i64, y0 as i64);
    let mut out = [0.0; 4];
    for (dx, dy, w) in [
        (0, 0, (1.0 - fx) * (1.0 - fy)),
        (1, 0, fx * (1.0 - fy)),
        (0, 1, (1.0 - fx) * fy),
        (1, 1, fx * fy),
    ] {
        let s = tap(ix + dx, iy + dy);
        for c in 0..4 {
            out[c] += w * s[c];
        }
    }
    out
}

fn asset_strategy() -> impl Strategy<Value = AssetImage> {
    (2usize..10, 2usize..10).prop_flat_map(|(w, h)| {
        prop::collection::vec(
            (0u8..=4, 0u8..=4, 0u8..=4, 0u8..=4).prop_map(|(r, g, b, a)| {
                [
                    r as f32 / 4.0,
                    g as f32 / 4.0,
                    b as f32 / 4.0,
                    a as f32 / 4.0,
                ]
            }),
            w * h,
        )
        .prop_map(move |px| AssetImage::new(w, h, px).unwrap())
    })
}

fn transform_strategy() -> impl Strategy<Value = Affine> {
    (
        0.5f64..3.0,
        -0.6f64..0.6,
        -0.4f64..0.4,
        0.5f64..3.0,
        -4.0f64..20.0,
        -4.0f64..20.0,
    )
        .prop_map(|(a, b, d, e, c, f)| Affine {
            m: [[a, b, c], [d, e, f]],
        })
}

fn image_strategy() -> impl Strategy<Value = Raster> {
    (
        prop_oneof![
            Just(ColorType::Gray),
            Just(ColorType::GrayAlpha),
            Just(ColorType::Rgb),
            Just(ColorType::Rgba)
        ],
        prop_oneof![Just(BitDepth::Eight), Just(BitDepth::Sixteen)],
        any::<u64>(),
    )
        .prop_map(|(color, depth, seed)| {
            let (w, h) = (24, 20);
            let max = depth.max_value() as u64;
            let mut s = seed;
            let data = (0..w * h * color.channels())
                .map(|_| {
                    s = s
                        .wrapping_mul(6364136223846793005)
                        .wrapping_add(1442695040888963407);
                    ((s >> 33) % (max + 1)) as u16
                })
                .collect();
            Raster::new(w, h, color, depth, data).unwrap()
        })
}

proptest! {
    #[test]
    fn affine_fit_matches_normal_equations(
        src in prop::collection::vec(point(), 3..7),
        targets in prop::collection::vec(point(), 7),
    ) {
        prop_assume!(spread(&src));
        let dst = &targets[..src.len()];
        let fit = fit_affine(&src, dst).unwrap();
        let oracle = normal_equations_fit(&src, dst);
        for r in 0..2 {
            for c in 0..3 {
                prop_assert!((fit.m[r][c] - oracle[r][c]).abs() <= 1e-6 * (1.0 + oracle[r][c].abs()));
            }
        }
    }

    #[test]
    fn three_point_fit_is_exact(src in prop::collection::vec(point(), 3), dst in prop::collection::vec(point(), 3)) {
        prop_assume!(spread(&src));
        let fit = fit_affine(&src, &dst).unwrap();
        for (s, d) in src.iter().zip(&dst) {
            prop_assert!(fit.apply(*s).distance(*d) <= 1e-9);
        }
    }

    #[test]
    fn composite_matches_per_pixel_oracle(image in image_strategy(), asset in asset_strategy(), t in transform_strategy()) {
        let out = composite(&image, &asset, &t, DEFAULT_OPACITY_THRESHOLD).unwrap();
        let inv = t.inverse().unwrap();
        let max = image.depth.max_value() as f64;
        for y in 0..image.height {
            for x in 0..image.width {
                let src = image.pixel(x, y);
                let got = out.image.pixel(x, y);
                let q = inv.apply(Point::new(x as f64, y as f64));
                let [r, g, b, a] = oracle_sample(&asset, q.x, q.y);
                let near_cut = (a - DEFAULT_OPACITY_THRESHOLD).abs() < 1e-9;
                if !near_cut {
                    prop_assert_eq!(out.mask.get(x, y), a > DEFAULT_OPACITY_THRESHOLD);
                }
                if !out.mask.get(x, y) {
                    prop_assert_eq!(src, got);
                    continue;
                }
                let blend = |d: u16, s: f64| ((d as f64 / max) * (1.0 - a) + s).clamp(0.0, 1.0) * max;
                let lum = 0.299 * r + 0.587 * g + 0.114 * b;
                let mut expected: Vec<f64> = match image.color {
                    ColorType::Gray | ColorType::GrayAlpha => vec![blend(src[0], lum)],
                    ColorType::Rgb | ColorType::Rgba => {
                        vec![blend(src[0], r), blend(src[1], g), blend(src[2], b)]
                    }
                };
                if image.color.has_alpha() {
                    expected.push(blend(src[src.len() - 1], a));
                }
                for (e, v) in expected.iter().zip(got) {
                    prop_assert!((e - *v as f64).abs() <= 0.5 + 1e-6, "{} vs {}", e, v);
                }
            }
        }
    }
}

#[test]
fn identity_and_scale_fits_are_exact() {
    let src = [
        Point::new(0.0, 0.0),
        Point::new(10.0, 0.0),
        Point::new(0.0, 10.0),
        Point::new(7.0, 3.0),
    ];
    let id = fit_affine(&src, &src).unwrap();
    let scaled: Vec<Point> = src
        .iter()
        .map(|p| Point::new(2.5 * p.x, 2.5 * p.y))
        .collect();
    let sc = fit_affine(&src, &scaled).unwrap();
    for r in 0..2 {
        for c in 0..3 {
            assert!((id.m[r][c] - Affine::IDENTITY.m[r][c]).abs() <= 1e-9);
            let want = if c == r { 2.5 } else { 0.0 };
            assert!((sc.m[r][c] - want).abs() <= 1e-9);
        }
    }
}

#[test]
fn protocol_runs_are_legal_and_keep_unmasked_pixels() {
    let library = demo_library().unwrap();
    let face = demo_face(112, 112, 3);
    let lm = demo_landmarks(112, 112);
    for protocol in [Protocol::P1, Protocol::P4] {
        for i in 0..60 {
            let seed = derive_seed(11, &format!("img{i}"));
            let art = apply_protocol(
                &face,
                &lm,
                protocol,
                &library,
                seed,
                DEFAULT_OPACITY_THRESHOLD,
            )
            .unwrap();
            let cats: Vec<Category> = art
                .provenance
                .occlusions
                .iter()
                .map(|o| o.category)
                .collect();
            assert!(is_legal_combination(protocol, &cats), "{cats:?}");
            assert!(!art.mask.is_empty());
            for y in 0..face.height {
                for x in 0..face.width {
                    if !art.mask.get(x, y) {
                        assert_eq!(face.pixel(x, y), art.image.pixel(x, y));
                    }
                }
            }
        }
    }
}

/// Two-sided 99% acceptance interval for a Binomial(n, p) count.
fn binomial_bounds(n: u64, p: f64) -> (u64, u64) {
    let dist = Binomial::new(p, n).unwrap();
    (dist.inverse_cdf(0.005), dist.inverse_cdf(0.995))
}

#[test]
fn category_draws_are_uniform() {
    let library = demo_library().unwrap();
    let runs = 1000u64;

    let mut p1 = [0u64; 4];
    let mut p4_options = [0u64; 5];
    for i in 0..runs {
        let seed = derive_seed(2024, &format!("img{i}"));
        let one = select_occlusions(Protocol::P1, &library, seed).unwrap();
        assert_eq!(one.len(), 1);
        p1[Category::ALL
            .iter()
            .position(|c| *c == one[0].category)
            .unwrap()] += 1;

        let four: Vec<Category> = select_occlusions(Protocol::P4, &library, seed)
            .unwrap()
            .iter()
            .map(|a| a.category)
            .collect();
        assert!(is_legal_combination(Protocol::P4, &four));
        let option = if four.len() == 1 {
            0
        } else {
            1 + P4_PAIRS.iter().position(|p| p[..] == four[..]).unwrap()
        };
        p4_options[option] += 1;
    }

    let (lo, hi) = binomial_bounds(runs, 0.25);
    for (c, n) in Category::ALL.iter().zip(p1) {
        assert!((lo..=hi).contains(&n), "{c:?}: {n} outside [{lo}, {hi}]");
    }
    let (lo, hi) = binomial_bounds(runs, 0.2);
    for (i, n) in p4_options.iter().enumerate() {
        assert!(
            (lo..=hi).contains(n),
            "option {i}: {n} outside [{lo}, {hi}]"
        );
    }
}

#[test]
fn thin_triangle_is_interpolated_exactly() {
    let src = [
        Point::new(-126.27813058092444, 73.87393131728598),
        Point::new(184.2748598734647, -176.5896530129913),
        Point::new(-40.06565121027551, 3.4536425776057333),
    ];
    let dst = [
        Point::new(0.0, 0.0),
        Point::new(-156.75858949968276, 0.0),
        Point::new(-24.94926984491575, 0.0),
    ];
    let fit = fit_affine(&src, &dst).unwrap();
    for (s, d) in src.iter().zip(&dst) {
        assert!(fit.apply(*s).distance(*d) <= 1e-9);
    }
}
