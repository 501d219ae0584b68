//! Known global optima of the built-in functions and peak counting.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::functions::{self, RASTRIGIN_FREQUENCIES};
use super::{builtin, FunctionId, Solution};
use crate::error::{Error, Result};

/// Ground-truth global optima of an objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakRegistry {
    peaks: Vec<Solution>,
    niche_radius: f64,
}

impl PeakRegistry {
    /// Builds a registry whose niche radius is half the smallest inter-peak
    /// distance. A single peak gets the length of the domain diagonal.
    pub fn from_peaks(peaks: Vec<Solution>, lower: &[f64], upper: &[f64]) -> Result<Self> {
        if peaks.is_empty() {
            return Err(Error::config("a peak registry needs at least one peak"));
        }
        let best = peaks.iter().map(|p| p.fitness).fold(f64::NEG_INFINITY, f64::max);
        if peaks.iter().any(|p| (p.fitness - best).abs() > 1e-6) {
            return Err(Error::config("registry peaks must share the global optimum value"));
        }
        let mut min_dist = f64::INFINITY;
        for (i, a) in peaks.iter().enumerate() {
            for b in &peaks[i + 1..] {
                min_dist = min_dist.min(distance(&a.position, &b.position));
            }
        }
        let niche_radius = if peaks.len() == 1 {
            distance(lower, upper)
        } else {
            min_dist / 2.0
        };
        if !(niche_radius > 0.0) {
            return Err(Error::config("registry peaks must be distinct"));
        }
        Ok(Self { peaks, niche_radius })
    }

    pub fn peaks(&self) -> &[Solution] {
        &self.peaks
    }

    pub fn niche_radius(&self) -> f64 {
        self.niche_radius
    }

    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }

    /// Index of the peak nearest to `x` together with its distance.
    pub fn nearest(&self, x: &[f64]) -> (usize, f64) {
        self.peaks
            .iter()
            .enumerate()
            .map(|(i, p)| (i, distance(&p.position, x)))
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
    }

    /// Peak matched by a candidate at the given accuracy, if any.
    pub fn matched_peak(&self, candidate: &Solution, accuracy: f64) -> Option<usize> {
        let (idx, dist) = self.nearest(&candidate.position);
        let peak = &self.peaks[idx];
        (dist <= self.niche_radius && candidate.fitness >= peak.fitness - accuracy).then_some(idx)
    }
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Number of registry peaks found by `candidates` at the given accuracy.
///
/// A candidate is credited to its nearest peak only, and each peak counts once.
pub fn count_peaks_found(candidates: &[Solution], registry: &PeakRegistry, accuracy: f64) -> usize {
    let mut found = vec![false; registry.len()];
    for c in candidates {
        if let Some(idx) = registry.matched_peak(c, accuracy) {
            found[idx] = true;
        }
    }
    found.into_iter().filter(|&f| f).count()
}

/// Ground-truth global optima of a built-in function.
pub fn peak_registry(id: FunctionId) -> PeakRegistry {
    let spec = builtin(id);
    let positions: Vec<Vec<f64>> = match id {
        FunctionId::F1 => vec![vec![0.0], vec![30.0]],
        FunctionId::F2 => (0..5).map(|i| vec![0.1 + 0.2 * i as f64]).collect(),
        FunctionId::F3 => vec![vec![refine_1d_max(
            |x| functions::uneven_decreasing_maxima(&[x]),
            0.02,
            0.15,
        )]],
        FunctionId::F4 => [(3.0, 2.0), (-2.805, 3.131), (-3.779, -3.283), (3.584, -1.848)]
            .iter()
            .map(|&(a, b)| himmelblau_root(a, b))
            .collect(),
        FunctionId::F5 => [(0.0898, -0.7126), (-0.0898, 0.7126)]
            .iter()
            .map(|&(a, b)| camel_stationary_point(a, b))
            .collect(),
        FunctionId::F6 => shubert_optima(2),
        FunctionId::F7 => shubert_optima(3),
        FunctionId::F8 => vincent_optima(2),
        FunctionId::F9 => vincent_optima(3),
        FunctionId::F10 => {
            let xs: Vec<f64> = (0..3)
                .map(|j| (2 * j + 1) as f64 / (2.0 * RASTRIGIN_FREQUENCIES[0]))
                .collect();
            let ys: Vec<f64> = (0..4)
                .map(|j| (2 * j + 1) as f64 / (2.0 * RASTRIGIN_FREQUENCIES[1]))
                .collect();
            xs.iter().flat_map(|&x| ys.iter().map(move |&y| vec![x, y])).collect()
        }
    };
    let peaks = positions
        .into_iter()
        .map(|p| {
            let f = spec.fitness_unbudgeted(&p);
            Solution::new(p, f)
        })
        .collect();
    PeakRegistry::from_peaks(peaks, spec.lower(), spec.upper()).expect("built-in registry is valid")
}

/// Maximizer of a smooth unimodal 1-D function on `[a, b]` by bisection on
/// the sign of a central-difference derivative.
fn refine_1d_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let h = 1e-7;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if f(mid + h) > f(mid - h) {
            a = mid;
        } else {
            b = mid;
        }
        if b - a < 1e-13 {
            break;
        }
    }
    0.5 * (a + b)
}

fn himmelblau_root(mut a: f64, mut b: f64) -> Vec<f64> {
    // Newton on (a^2 + b - 11, a + b^2 - 7) = 0; both terms vanish at every optimum.
    for _ in 0..50 {
        let g1 = a * a + b - 11.0;
        let g2 = a + b * b - 7.0;
        let (j11, j12, j21, j22) = (2.0 * a, 1.0, 1.0, 2.0 * b);
        let det = j11 * j22 - j12 * j21;
        let da = (g1 * j22 - g2 * j12) / det;
        let db = (j11 * g2 - j21 * g1) / det;
        a -= da;
        b -= db;
        if da.abs() + db.abs() < 1e-15 {
            break;
        }
    }
    vec![a, b]
}

fn camel_stationary_point(mut a: f64, mut b: f64) -> Vec<f64> {
    // Newton on the gradient of (4 - 2.1a^2 + a^4/3)a^2 + ab + (4b^2 - 4)b^2.
    for _ in 0..50 {
        let ga = 8.0 * a - 8.4 * a.powi(3) + 2.0 * a.powi(5) + b;
        let gb = a + 16.0 * b.powi(3) - 8.0 * b;
        let haa = 8.0 - 25.2 * a * a + 10.0 * a.powi(4);
        let hab = 1.0;
        let hbb = 48.0 * b * b - 8.0;
        let det = haa * hbb - hab * hab;
        let da = (ga * hbb - gb * hab) / det;
        let db = (haa * gb - hab * ga) / det;
        a -= da;
        b -= db;
        if da.abs() + db.abs() < 1e-15 {
            break;
        }
    }
    vec![a, b]
}

fn shubert_factor_derivative(x: f64) -> f64 {
    -(1..=5)
        .map(|j| {
            let j = j as f64;
            j * (j + 1.0) * ((j + 1.0) * x + j).sin()
        })
        .sum::<f64>()
}

/// Global maximizers and minimizers of the 1-D Shubert factor on [-10, 10].
fn shubert_factor_extremes() -> (Vec<f64>, Vec<f64>) {
    let (lo, hi) = (-10.0, 10.0);
    let n = 40_000;
    let step = (hi - lo) / n as f64;
    let grid: Vec<f64> = (0..=n).map(|i| lo + step * i as f64).collect();
    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    for w in grid.windows(3) {
        let (a, m, b) = (w[0], w[1], w[2]);
        let (fa, fm, fb) = (
            functions::shubert_factor(a),
            functions::shubert_factor(m),
            functions::shubert_factor(b),
        );
        if fm >= fa && fm > fb {
            maxima.push(bisect_root(shubert_factor_derivative, a, b));
        } else if fm <= fa && fm < fb {
            minima.push(bisect_root(shubert_factor_derivative, a, b));
        }
    }
    let top = maxima
        .iter()
        .map(|&x| functions::shubert_factor(x))
        .fold(f64::NEG_INFINITY, f64::max);
    let bottom = minima
        .iter()
        .map(|&x| functions::shubert_factor(x))
        .fold(f64::INFINITY, f64::min);
    maxima.retain(|&x| functions::shubert_factor(x) > top - 1e-6);
    minima.retain(|&x| functions::shubert_factor(x) < bottom + 1e-6);
    (maxima, minima)
}

fn bisect_root(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut ga = g(a);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if (gm > 0.0) == (ga > 0.0) {
            a = mid;
            ga = gm;
        } else {
            b = mid;
        }
        if b - a < 1e-14 {
            break;
        }
    }
    0.5 * (a + b)
}

/// Global optima of the negated Shubert product: exactly one coordinate sits
/// at a factor minimizer and the rest at factor maximizers.
fn shubert_optima(dim: usize) -> Vec<Vec<f64>> {
    let (maxima, minima) = shubert_factor_extremes();
    let mut out = Vec::new();
    for neg in 0..dim {
        let choices: Vec<&Vec<f64>> = (0..dim).map(|d| if d == neg { &minima } else { &maxima }).collect();
        out.extend(cartesian(&choices));
    }
    out.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    out
}

fn vincent_optima(dim: usize) -> Vec<Vec<f64>> {
    let xs: Vec<f64> = (-10..10)
        .map(|j| ((PI / 2.0 + 2.0 * PI * j as f64) / 10.0).exp())
        .filter(|x| (0.25..=10.0).contains(x))
        .collect();
    let choices: Vec<&Vec<f64>> = (0..dim).map(|_| &xs).collect();
    cartesian(&choices)
}

fn cartesian(choices: &[&Vec<f64>]) -> Vec<Vec<f64>> {
    choices.iter().fold(vec![Vec::new()], |acc, options| {
        acc.iter()
            .flat_map(|prefix| {
                options.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_sizes_match_table() {
        for id in FunctionId::ALL {
            let reg = peak_registry(id);
            assert_eq!(Some(reg.len()), builtin(id).peak_count(), "{id}");
        }
    }

    #[test]
    fn equal_maxima_registry() {
        let reg = peak_registry(FunctionId::F2);
        let xs: Vec<f64> = reg.peaks().iter().map(|p| p.position[0]).collect();
        for (x, want) in xs.iter().zip([0.1, 0.3, 0.5, 0.7, 0.9]) {
            assert!((x - want).abs() < 1e-12);
        }
        assert!(reg.peaks().iter().all(|p| (p.fitness - 1.0).abs() < 1e-12));
        assert!((reg.niche_radius() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn himmelblau_registry() {
        let reg = peak_registry(FunctionId::F4);
        assert!(reg.peaks().iter().all(|p| (p.fitness - 200.0).abs() < 1e-9));
        assert!(reg.peaks().iter().any(|p| p.position == vec![3.0, 2.0]));
        assert!(reg
            .peaks()
            .iter()
            .any(|p| (p.position[0] + 2.805118).abs() < 1e-6 && (p.position[1] - 3.131312).abs() < 1e-6));
    }

    #[test]
    fn trap_registry() {
        let reg = peak_registry(FunctionId::F1);
        assert_eq!(reg.peaks()[0].position, vec![0.0]);
        assert_eq!(reg.peaks()[1].position, vec![30.0]);
        assert!(reg.peaks().iter().all(|p| p.fitness == 200.0));
        assert_eq!(reg.niche_radius(), 15.0);
    }

    #[test]
    fn shubert_and_camel_optimum_values() {
        let f6 = peak_registry(FunctionId::F6);
        assert!((f6.peaks()[0].fitness - 186.7309).abs() < 1e-3);
        let f7 = peak_registry(FunctionId::F7);
        assert!((f7.peaks()[0].fitness - 2709.0935).abs() < 1e-3);
        let f5 = peak_registry(FunctionId::F5);
        assert!((f5.peaks()[0].fitness - 4.126513).abs() < 1e-5);
    }

    #[test]
    fn peak_counting_rules() {
        let reg = peak_registry(FunctionId::F2);
        let f = |x: f64| functions::equal_maxima(&[x]);
        let exact: Vec<Solution> = reg.peaks().to_vec();
        for acc in [1e-1, 1e-2, 1e-3, 1e-4, 1e-5] {
            assert_eq!(count_peaks_found(&exact, &reg, acc), 5);
        }
        let dup = vec![Solution::new(vec![0.1], f(0.1)), Solution::new(vec![0.1001], f(0.1001))];
        assert_eq!(count_peaks_found(&dup, &reg, 1e-1), 1);
        let mixed: Vec<Solution> = [0.1, 0.3, 0.2].iter().map(|&x| Solution::new(vec![x], f(x))).collect();
        assert_eq!(count_peaks_found(&mixed, &reg, 1e-3), 2);
        assert_eq!(count_peaks_found(&[], &reg, 1e-1), 0);
    }

    #[test]
    fn duplicate_peaks_are_rejected() {
        let p = Solution::new(vec![0.5], 1.0);
        assert!(PeakRegistry::from_peaks(vec![p.clone(), p], &[0.0], &[1.0]).is_err());
        let a = Solution::new(vec![0.2], 1.0);
        let b = Solution::new(vec![0.6], 0.5);
        assert!(PeakRegistry::from_peaks(vec![a, b], &[0.0], &[1.0]).is_err());
    }
}
