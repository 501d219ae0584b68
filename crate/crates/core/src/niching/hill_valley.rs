//! Hill-valley test: do two points share a basin of attraction?

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{evaluate, EvalCounter, ObjectiveSpec, Solution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HillValleyParams {
    /// Interior sample fractions along the segment, strictly increasing in (0, 1).
    pub lambdas: Vec<f64>,
}

impl Default for HillValleyParams {
    fn default() -> Self {
        Self {
            lambdas: vec![0.02, 0.25, 0.5, 0.75, 0.98],
        }
    }
}

impl HillValleyParams {
    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() {
            return Err(Error::config("hill-valley needs at least one interior sample"));
        }
        if self.lambdas.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
            return Err(Error::config("hill-valley fractions must lie in (0, 1)"));
        }
        if self.lambdas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("hill-valley fractions must be strictly increasing"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasinRelation {
    SameBasin,
    DifferentBasins,
}

/// Samples the segment between `a` and `b`; a sample strictly below the
/// lower endpoint fitness reveals a valley. Stops at the first valley.
///
/// Budget exhaustion aborts the test with an error rather than guessing.
pub fn hill_valley(
    a: &Solution,
    b: &Solution,
    spec: &ObjectiveSpec,
    params: &HillValleyParams,
    counter: &mut EvalCounter,
) -> Result<BasinRelation> {
    if a.position == b.position {
        return Err(Error::config("hill-valley needs two distinct points"));
    }
    let floor = a.fitness.min(b.fitness);
    for &lambda in &params.lambdas {
        let mut z: Vec<f64> = a
            .position
            .iter()
            .zip(&b.position)
            .map(|(x1, x2)| x1 + lambda * (x2 - x1))
            .collect();
        // Rounding can push a convex combination a hair outside the box.
        spec.clamp(&mut z);
        if evaluate(spec, &z, counter)? < floor {
            return Ok(BasinRelation::DifferentBasins);
        }
    }
    Ok(BasinRelation::SameBasin)
}
