//! Bounded coordinate pattern search (compass search).

use serde::{Deserialize, Serialize};

use crate::error::{Error, EvalError, Result};
use crate::objective::{evaluate, EvalCounter, ObjectiveSpec, Solution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternSearchConfig {
    /// Initial poll step as a fraction of each dimension's width.
    pub initial_step: f64,
    pub contraction: f64,
    /// Termination step as a fraction of each dimension's width.
    pub min_step: f64,
    pub max_evals: u64,
}

impl PatternSearchConfig {
    pub fn with_max_evals(max_evals: u64) -> Self {
        Self {
            max_evals,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.initial_step > 0.0) || !(self.min_step > 0.0) || self.min_step >= self.initial_step {
            return Err(Error::config("pattern search needs 0 < min_step < initial_step"));
        }
        if !(self.contraction > 0.0 && self.contraction < 1.0) {
            return Err(Error::config("pattern search contraction must lie in (0, 1)"));
        }
        Ok(())
    }
}

impl Default for PatternSearchConfig {
    fn default() -> Self {
        Self {
            initial_step: 0.05,
            contraction: 0.5,
            min_step: 1e-9,
            max_evals: 1000,
        }
    }
}

/// Maximizes from `start` (whose fitness is already known) by polling
/// `x ± step·e_d` on every axis and moving to the best improving probe.
/// The step contracts after a poll without improvement.
///
/// Stops at `min_step`, after `cfg.max_evals` evaluations, or when the
/// counter runs dry; the best point seen is returned in every case.
pub fn pattern_search(
    spec: &ObjectiveSpec,
    start: &Solution,
    cfg: &PatternSearchConfig,
    counter: &mut EvalCounter,
) -> Result<Solution> {
    cfg.validate()?;
    if !spec.contains(&start.position) {
        return Err(Error::Eval(EvalError::OutOfBounds));
    }
    let widths = spec.widths();
    let mut best = start.clone();
    let mut scale = cfg.initial_step;
    let mut spent = 0u64;
    'outer: while scale >= cfg.min_step {
        let mut poll_best: Option<Solution> = None;
        for d in 0..spec.dimension() {
            for sign in [1.0, -1.0] {
                let mut probe = best.position.clone();
                probe[d] += sign * scale * widths[d];
                spec.clamp(&mut probe);
                if probe[d] == best.position[d] {
                    continue;
                }
                if spent >= cfg.max_evals {
                    break 'outer;
                }
                let f = match evaluate(spec, &probe, counter) {
                    Ok(f) => f,
                    Err(EvalError::BudgetExhausted) => break 'outer,
                    Err(e) => return Err(e.into()),
                };
                spent += 1;
                if f > poll_best.as_ref().map_or(best.fitness, |p| p.fitness) {
                    poll_best = Some(Solution::new(probe, f));
                }
            }
        }
        match poll_best {
            Some(p) => best = p,
            None => scale *= cfg.contraction,
        }
    }
    Ok(best)
}
