//! Fitness formulas of the built-in niching test functions (maximization form).

use std::f64::consts::{LN_2, PI};

/// Five-uneven-peak trap on `[0, 30]`.
pub fn five_uneven_peak_trap(x: &[f64]) -> f64 {
    let x = x[0];
    if x < 2.5 {
        80.0 * (2.5 - x)
    } else if x < 5.0 {
        64.0 * (x - 2.5)
    } else if x < 7.5 {
        64.0 * (7.5 - x)
    } else if x < 12.5 {
        28.0 * (x - 7.5)
    } else if x < 17.5 {
        28.0 * (17.5 - x)
    } else if x < 22.5 {
        32.0 * (x - 17.5)
    } else if x < 27.5 {
        32.0 * (27.5 - x)
    } else {
        80.0 * (x - 27.5)
    }
}

pub fn equal_maxima(x: &[f64]) -> f64 {
    (5.0 * PI * x[0]).sin().powi(6)
}

pub fn uneven_decreasing_maxima(x: &[f64]) -> f64 {
    let x = x[0];
    let envelope = (-2.0 * LN_2 * ((x - 0.08) / 0.854).powi(2)).exp();
    envelope * (5.0 * PI * (x.powf(0.75) - 0.05)).sin().powi(6)
}

pub fn himmelblau(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    200.0 - (a * a + b - 11.0).powi(2) - (a + b * b - 7.0).powi(2)
}

pub fn six_hump_camel_back(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    let a2 = a * a;
    let b2 = b * b;
    -4.0 * ((4.0 - 2.1 * a2 + a2 * a2 / 3.0) * a2 + a * b + (4.0 * b2 - 4.0) * b2)
}

/// One-dimensional Shubert factor `sum_j j cos((j+1) x + j)`.
pub fn shubert_factor(x: f64) -> f64 {
    (1..=5)
        .map(|j| {
            let j = j as f64;
            j * ((j + 1.0) * x + j).cos()
        })
        .sum()
}

pub fn shubert(x: &[f64]) -> f64 {
    -x.iter().map(|&xi| shubert_factor(xi)).product::<f64>()
}

pub fn vincent(x: &[f64]) -> f64 {
    x.iter().map(|&xi| (10.0 * xi.ln()).sin()).sum::<f64>() / x.len() as f64
}

/// Frequencies of the two-dimensional modified Rastrigin.
pub const RASTRIGIN_FREQUENCIES: [f64; 2] = [3.0, 4.0];

pub fn modified_rastrigin(x: &[f64]) -> f64 {
    -x.iter()
        .zip(RASTRIGIN_FREQUENCIES)
        .map(|(&xi, k)| 10.0 + 9.0 * (2.0 * PI * k * xi).cos())
        .sum::<f64>()
}
