//! Classical one-way ANOVA and the special functions behind its p-value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SIGNIFICANCE: f64 = 0.05;

const BETA_CF_TOLERANCE: f64 = 1e-12;
const BETA_CF_MAX_ITER: usize = 10_000;
const TINY: f64 = 1e-300;

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Standard deviation dividing by `n`. Zero for an empty or single-element
/// slice.
pub fn population_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / values.len() as f64).sqrt()
}

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection keeps the series in its accurate range.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=BETA_CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < BETA_CF_TOLERANCE {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0, "beta parameters must be positive");
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b
    }
}

/// Upper tail `P(F > f)` of the F distribution with `(d1, d2)` degrees of
/// freedom.
pub fn f_upper_tail(f: f64, d1: f64, d2: f64) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    regularized_incomplete_beta(d2 / (d2 + d1 * f), d2 / 2.0, d1 / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    pub f_statistic: f64,
    pub p_value: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub significant_at_05: bool,
}

pub fn one_way_anova(samples: &[Vec<f64>]) -> Result<AnovaResult> {
    one_way_anova_at(samples, DEFAULT_SIGNIFICANCE)
}

/// One-way ANOVA with an explicit significance level. The result's
/// `significant_at_05` flag reflects `significance`, which defaults to 0.05.
pub fn one_way_anova_at(samples: &[Vec<f64>], significance: f64) -> Result<AnovaResult> {
    if !(significance > 0.0 && significance < 1.0) {
        return Err(Error::param("significance", "must lie in (0, 1)"));
    }
    let k = samples.len();
    if k < 2 {
        return Err(Error::InsufficientGroups { needed: 2, got: k });
    }
    for (i, group) in samples.iter().enumerate() {
        if group.len() < 2 {
            return Err(Error::InsufficientData {
                group: i,
                got: group.len(),
            });
        }
        if group.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "group {i} contains a non-finite sample"
            )));
        }
    }
    let n: usize = samples.iter().map(Vec::len).sum();
    let grand_mean = samples.iter().flatten().sum::<f64>() / n as f64;

    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for group in samples {
        let m = mean(group);
        ss_between += group.len() as f64 * (m - grand_mean) * (m - grand_mean);
        ss_within += group.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
    }

    let df_between = k - 1;
    let df_within = n - k;
    // Relative test so that rescaled data behaves the same as the original.
    let scale: f64 = samples
        .iter()
        .flatten()
        .map(|v| (v - grand_mean) * (v - grand_mean))
        .sum();
    if ss_within <= scale * 1e-24 {
        return Err(Error::DegenerateVariance);
    }

    let f_statistic = (ss_between / df_between as f64) / (ss_within / df_within as f64);
    let p_value = f_upper_tail(f_statistic, df_between as f64, df_within as f64).clamp(0.0, 1.0);
    Ok(AnovaResult {
        f_statistic,
        p_value,
        df_between,
        df_within,
        significant_at_05: p_value < significance,
    })
}
