//! Bounded maximization problems, budgeted evaluation and the built-in
//! niching test suite.

pub mod functions;
mod registry;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, EvalError, Result};

pub use registry::{count_peaks_found, distance, peak_registry, PeakRegistry};

/// Fitness callback under the maximization convention.
pub type FitnessFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A position together with its fitness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub position: Vec<f64>,
    pub fitness: f64,
}

impl Solution {
    pub fn new(position: Vec<f64>, fitness: f64) -> Self {
        Self { position, fitness }
    }
}

/// Identifier of a built-in test function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FunctionId {
    F1,
    F2,
    F3,
    F4,
    F5,
    F6,
    F7,
    F8,
    F9,
    F10,
}

impl FunctionId {
    pub const ALL: [FunctionId; 10] = [
        FunctionId::F1,
        FunctionId::F2,
        FunctionId::F3,
        FunctionId::F4,
        FunctionId::F5,
        FunctionId::F6,
        FunctionId::F7,
        FunctionId::F8,
        FunctionId::F9,
        FunctionId::F10,
    ];

    pub fn index(self) -> usize {
        self as usize + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            FunctionId::F1 => "Five-Uneven-Peak Trap",
            FunctionId::F2 => "Equal Maxima",
            FunctionId::F3 => "Uneven Decreasing Maxima",
            FunctionId::F4 => "Himmelblau",
            FunctionId::F5 => "Six-Hump Camel Back",
            FunctionId::F6 => "Shubert 2D",
            FunctionId::F7 => "Shubert 3D",
            FunctionId::F8 => "Vincent 2D",
            FunctionId::F9 => "Vincent 3D",
            FunctionId::F10 => "Modified Rastrigin 2D",
        }
    }
}

impl fmt::Display for FunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.index())
    }
}

impl FromStr for FunctionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let index: usize = lower
            .strip_prefix('f')
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| Error::config(format!("unknown function '{s}'")))?;
        FunctionId::ALL
            .get(index.wrapping_sub(1))
            .copied()
            .ok_or_else(|| Error::config(format!("unknown function '{s}' (expected f1..f10)")))
    }
}

/// A bounded maximization problem.
#[derive(Clone)]
pub struct ObjectiveSpec {
    id: String,
    lower: Vec<f64>,
    upper: Vec<f64>,
    fitness: FitnessFn,
    peak_count: Option<usize>,
}

impl fmt::Debug for ObjectiveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObjectiveSpec")
            .field("id", &self.id)
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("peak_count", &self.peak_count)
            .finish()
    }
}

impl ObjectiveSpec {
    /// Registers an external objective. `peak_count` is the number of known
    /// global optima, if any.
    pub fn new(
        id: impl Into<String>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        fitness: FitnessFn,
        peak_count: Option<usize>,
    ) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::config("bounds must be non-empty and of equal length"));
        }
        if lower.iter().zip(&upper).any(|(lo, hi)| !(lo < hi)) {
            return Err(Error::config("lower bound must be strictly below upper bound"));
        }
        if peak_count == Some(0) {
            return Err(Error::config("peak count must be positive"));
        }
        Ok(Self {
            id: id.into(),
            lower,
            upper,
            fitness,
            peak_count,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn peak_count(&self) -> Option<usize> {
        self.peak_count
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(lo, hi)| hi - lo).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dimension()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| v >= lo && v <= hi)
    }

    /// Clamps `x` componentwise into the bounds.
    pub fn clamp(&self, x: &mut [f64]) {
        for (v, (lo, hi)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*lo, *hi);
        }
    }

    /// Raw fitness without budget accounting. Used for ground-truth work only.
    pub fn fitness_unbudgeted(&self, x: &[f64]) -> f64 {
        (self.fitness)(x)
    }
}

/// Counts objective calls against a fixed budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounter {
    used: u64,
    budget: u64,
}

impl EvalCounter {
    pub fn new(budget: u64) -> Self {
        Self { used: 0, budget }
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn remaining(&self) -> u64 {
        self.budget - self.used
    }

    pub fn is_exhausted(&self) -> bool {
        self.used >= self.budget
    }
}

/// Budgeted fitness call.
pub fn evaluate(spec: &ObjectiveSpec, x: &[f64], counter: &mut EvalCounter) -> Result<f64, EvalError> {
    if x.len() != spec.dimension() {
        return Err(EvalError::DimensionMismatch {
            expected: spec.dimension(),
            got: x.len(),
        });
    }
    if !spec.contains(x) {
        return Err(EvalError::OutOfBounds);
    }
    if counter.is_exhausted() {
        return Err(EvalError::BudgetExhausted);
    }
    counter.used += 1;
    Ok((spec.fitness)(x))
}

/// Built-in test function with its search range and number of global optima.
pub fn builtin(id: FunctionId) -> ObjectiveSpec {
    use functions::*;
    let (lower, upper, fitness, peaks): (Vec<f64>, Vec<f64>, FitnessFn, usize) = match id {
        FunctionId::F1 => (vec![0.0], vec![30.0], Arc::new(five_uneven_peak_trap), 2),
        FunctionId::F2 => (vec![0.0], vec![1.0], Arc::new(equal_maxima), 5),
        FunctionId::F3 => (vec![0.0], vec![1.0], Arc::new(uneven_decreasing_maxima), 1),
        FunctionId::F4 => (vec![-6.0; 2], vec![6.0; 2], Arc::new(himmelblau), 4),
        FunctionId::F5 => (vec![-1.9, -1.1], vec![1.9, 1.1], Arc::new(six_hump_camel_back), 2),
        FunctionId::F6 => (vec![-10.0; 2], vec![10.0; 2], Arc::new(shubert), 18),
        FunctionId::F7 => (vec![-10.0; 3], vec![10.0; 3], Arc::new(shubert), 81),
        FunctionId::F8 => (vec![0.25; 2], vec![10.0; 2], Arc::new(vincent), 36),
        FunctionId::F9 => (vec![0.25; 3], vec![10.0; 3], Arc::new(vincent), 216),
        FunctionId::F10 => (vec![0.0; 2], vec![1.0; 2], Arc::new(modified_rastrigin), 12),
    };
    ObjectiveSpec::new(id.to_string(), lower, upper, fitness, Some(peaks)).expect("built-in bounds are valid")
}

/// An objective together with its optional ground-truth registry.
#[derive(Debug, Clone)]
pub struct Problem {
    pub spec: ObjectiveSpec,
    pub registry: Option<PeakRegistry>,
}

impl Problem {
    pub fn builtin(id: FunctionId) -> Self {
        Self {
            spec: builtin(id),
            registry: Some(peak_registry(id)),
        }
    }

    pub fn custom(spec: ObjectiveSpec, registry: Option<PeakRegistry>) -> Self {
        Self { spec, registry }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn example_fitness_values() {
        let mut c = EvalCounter::new(10);
        assert_eq!(evaluate(&builtin(FunctionId::F4), &[3.0, 2.0], &mut c).unwrap(), 200.0);
        let f2 = evaluate(&builtin(FunctionId::F2), &[0.1], &mut c).unwrap();
        assert!((f2 - 1.0).abs() < 1e-12);
        let x = (PI / 20.0).exp();
        let f8 = evaluate(&builtin(FunctionId::F8), &[x, x], &mut c).unwrap();
        assert!((f8 - 1.0).abs() < 1e-12);
        assert_eq!(c.used(), 3);
    }

    #[test]
    fn budget_is_enforced() {
        let spec = builtin(FunctionId::F2);
        let mut c = EvalCounter::new(2);
        evaluate(&spec, &[0.5], &mut c).unwrap();
        evaluate(&spec, &[0.5], &mut c).unwrap();
        assert_eq!(evaluate(&spec, &[0.5], &mut c), Err(EvalError::BudgetExhausted));
        assert_eq!(c.used(), 2);
    }

    #[test]
    fn out_of_bounds_is_rejected_without_charge() {
        let spec = builtin(FunctionId::F2);
        let mut c = EvalCounter::new(2);
        assert_eq!(evaluate(&spec, &[1.5], &mut c), Err(EvalError::OutOfBounds));
        assert!(matches!(
            evaluate(&spec, &[0.5, 0.5], &mut c),
            Err(EvalError::DimensionMismatch { .. })
        ));
        assert_eq!(c.used(), 0);
    }

    #[test]
    fn builtin_table() {
        let f6 = builtin(FunctionId::F6);
        assert_eq!(f6.dimension(), 2);
        assert_eq!(f6.lower(), &[-10.0, -10.0]);
        assert_eq!(f6.upper(), &[10.0, 10.0]);
        assert_eq!(f6.peak_count(), Some(18));
        let f9 = builtin(FunctionId::F9);
        assert_eq!((f9.dimension(), f9.peak_count()), (3, Some(216)));
        let f1 = builtin(FunctionId::F1);
        assert_eq!(
            (f1.lower(), f1.upper(), f1.peak_count()),
            (&[0.0][..], &[30.0][..], Some(2))
        );
        let counts: Vec<_> = FunctionId::ALL
            .iter()
            .map(|&id| builtin(id).peak_count().unwrap())
            .collect();
        assert_eq!(counts, vec![2, 5, 1, 4, 2, 18, 81, 36, 216, 12]);
    }

    #[test]
    fn function_ids_parse() {
        assert_eq!("f10".parse::<FunctionId>().unwrap(), FunctionId::F10);
        assert_eq!("F3".parse::<FunctionId>().unwrap(), FunctionId::F3);
        assert!("f99".parse::<FunctionId>().is_err());
        assert!("f0".parse::<FunctionId>().is_err());
        assert!("x1".parse::<FunctionId>().is_err());
    }

    #[test]
    fn evaluation_is_pure() {
        let spec = builtin(FunctionId::F6);
        let mut a = EvalCounter::new(5);
        let mut b = EvalCounter::new(5);
        let x = [1.234, -5.678];
        assert_eq!(
            evaluate(&spec, &x, &mut a).unwrap().to_bits(),
            evaluate(&spec, &x, &mut b).unwrap().to_bits()
        );
    }

    #[test]
    fn invalid_custom_bounds() {
        let f: FitnessFn = Arc::new(|x: &[f64]| -x[0] * x[0]);
        assert!(ObjectiveSpec::new("q", vec![1.0], vec![1.0], f.clone(), None).is_err());
        assert!(ObjectiveSpec::new("q", vec![0.0, 0.0], vec![1.0], f.clone(), None).is_err());
        assert!(ObjectiveSpec::new("q", vec![-1.0], vec![1.0], f, None).is_ok());
    }
}
