//! Particle kinematics: velocity policies, inertia schedules, bounding,
//! stall detection, pervasive-cognitive scouting and the GCPSO best-particle
//! step.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, EvalError, Result};
use crate::lds::HaltonState;
use crate::objective::{evaluate, EvalCounter, ObjectiveSpec, Solution};

const HISTORY_CAP: usize = 32;

/// Inertia weight schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InertiaSchedule {
    Constant(f64),
    /// Linear decay from `max` at iteration 0 to `min` at the last iteration.
    Linear {
        max: f64,
        min: f64,
    },
}

impl InertiaSchedule {
    pub const PRELIMINARY: InertiaSchedule = InertiaSchedule::Constant(0.7290);
    pub const FINE: InertiaSchedule = InertiaSchedule::Linear { max: 0.9, min: 0.4 };

    pub fn validate(&self) -> Result<()> {
        match *self {
            InertiaSchedule::Linear { max, min } if max < min => {
                Err(Error::config("linear inertia requires w_max >= w_min"))
            }
            _ => Ok(()),
        }
    }
}

/// Inertia weight at iteration `k` of `max_iter`.
pub fn inertia_at(schedule: InertiaSchedule, k: usize, max_iter: usize) -> Result<f64> {
    match schedule {
        InertiaSchedule::Constant(w) => Ok(w),
        InertiaSchedule::Linear { max, min } => {
            if max_iter == 0 {
                return Err(Error::config("linear inertia needs max_iter > 0"));
            }
            let k = k.min(max_iter) as f64;
            Ok(max - (max - min) * k / max_iter as f64)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityParams {
    pub c1: f64,
    pub c2: f64,
    pub inertia: InertiaSchedule,
    pub v_max: Vec<f64>,
}

impl VelocityParams {
    /// `c1 = c2 = 2` and `v_max` at half the domain width.
    pub fn standard(spec: &ObjectiveSpec, inertia: InertiaSchedule) -> Self {
        Self {
            c1: 2.0,
            c2: 2.0,
            inertia,
            v_max: spec.widths().iter().map(|w| 0.5 * w).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.c1 < 0.0 || self.c2 < 0.0 {
            return Err(Error::config("acceleration coefficients must be non-negative"));
        }
        if self.v_max.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::config("v_max must be positive"));
        }
        self.inertia.validate()
    }
}

/// Parameters of the scout-then-cognitive policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PervasiveCognitiveParams {
    pub gamma: f64,
    /// Switch threshold on pbest change over `window` iterations.
    pub eps_g: f64,
    pub window: usize,
    pub scout_radius: f64,
}

impl PervasiveCognitiveParams {
    pub fn new(spec: &ObjectiveSpec, population: usize, gamma: f64, eps_g: f64, window: usize) -> Result<Self> {
        if !(eps_g > 0.0) || window == 0 {
            return Err(Error::config("scout switch needs eps_g > 0 and window >= 1"));
        }
        Ok(Self {
            gamma,
            eps_g,
            window,
            scout_radius: scout_radius(spec.lower(), spec.upper(), population, gamma)?,
        })
    }
}

/// Radius of the scouting hypercube: `gamma * sqrt(2)/2 * (volume / N)^(1/n)`.
pub fn scout_radius(lower: &[f64], upper: &[f64], population: usize, gamma: f64) -> Result<f64> {
    if population == 0 {
        return Err(Error::config("population must be >= 1"));
    }
    let volume: f64 = lower.iter().zip(upper).map(|(lo, hi)| hi - lo).product();
    if !(volume > 0.0) || lower.is_empty() {
        return Err(Error::config("scout radius needs bounds with positive volume"));
    }
    let n = lower.len() as f64;
    let r = gamma * std::f64::consts::FRAC_1_SQRT_2 * (volume / population as f64).powf(1.0 / n);
    if !(r > 0.0) {
        return Err(Error::config("scout radius must be positive (gamma > 0)"));
    }
    Ok(r)
}

/// Fitness-change window test (`|f_k - f_{k-m}| < eps`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StallCriterion {
    pub window: usize,
    pub eps: f64,
}

impl Default for StallCriterion {
    fn default() -> Self {
        Self { window: 3, eps: 1e-4 }
    }
}

impl StallCriterion {
    /// True when the last `window + 1` entries of `history` changed by less than `eps`.
    pub fn holds(&self, history: &VecDeque<f64>) -> bool {
        let m = self.window.max(1);
        if history.len() < m + 1 {
            return false;
        }
        let now = history[history.len() - 1];
        let then = history[history.len() - 1 - m];
        (now - then).abs() < self.eps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScoutState {
    Scouting,
    Cognitive,
}

#[derive(Debug, Clone)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub fitness: f64,
    pub pbest_position: Vec<f64>,
    pub pbest_fitness: f64,
    /// Center of the scouting hypercube.
    pub anchor: Vec<f64>,
    pub scout_state: ScoutState,
    pub stall_count: usize,
    pub fitness_history: VecDeque<f64>,
    scout_sequence: Option<HaltonState>,
}

impl Particle {
    /// A particle at an already evaluated position.
    pub fn new(position: Vec<f64>, velocity: Vec<f64>, fitness: f64) -> Self {
        let mut history = VecDeque::with_capacity(HISTORY_CAP);
        history.push_back(fitness);
        Self {
            pbest_position: position.clone(),
            anchor: position.clone(),
            position,
            velocity,
            fitness,
            pbest_fitness: fitness,
            scout_state: ScoutState::Cognitive,
            stall_count: 0,
            fitness_history: history,
            scout_sequence: None,
        }
    }

    /// Starts scouting around the current position with its own Halton stream.
    pub fn start_scouting(&mut self, sequence: HaltonState) {
        self.anchor = self.position.clone();
        self.scout_state = ScoutState::Scouting;
        self.scout_sequence = Some(sequence);
        self.reset_history();
    }

    pub fn pbest(&self) -> Solution {
        Solution::new(self.pbest_position.clone(), self.pbest_fitness)
    }

    pub fn reset_history(&mut self) {
        self.fitness_history.clear();
        self.fitness_history.push_back(self.pbest_fitness);
        self.stall_count = 0;
    }

    /// Moves the particle to a freshly evaluated point and makes it its pbest.
    pub fn relocate(&mut self, position: Vec<f64>, fitness: f64) {
        self.position = position.clone();
        self.fitness = fitness;
        self.pbest_position = position.clone();
        self.pbest_fitness = fitness;
        self.anchor = position;
        self.velocity.iter_mut().for_each(|v| *v = 0.0);
        self.reset_history();
    }

    fn push_history(&mut self) {
        if self.fitness_history.len() == HISTORY_CAP {
            self.fitness_history.pop_front();
        }
        self.fitness_history.push_back(self.pbest_fitness);
    }
}

/// Velocity update rule.
#[derive(Debug)]
pub enum VelocityPolicy<'a> {
    Cognitive,
    /// Social attraction towards `best` (swarm or niche gBest).
    GBest(&'a [f64]),
    /// Social attraction towards the best pbest among the given neighbours.
    EuclideanLBest(&'a [&'a Particle]),
    PervasiveCognitive(&'a PervasiveCognitiveParams),
}

/// Computes the next velocity of `particle` and clamps it to `±v_max`.
///
/// For the pervasive-cognitive policy this also performs the one-way switch
/// from scouting to cognitive motion once the pbest stops improving.
pub fn step_velocity<R: Rng + ?Sized>(
    particle: &mut Particle,
    policy: VelocityPolicy<'_>,
    vp: &VelocityParams,
    rng: &mut R,
    k: usize,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let w = inertia_at(vp.inertia, k, max_iter)?;
    let mut v = match policy {
        VelocityPolicy::Cognitive => cognitive(particle, vp, w, rng),
        VelocityPolicy::GBest(g) => social(particle, g, vp, w, rng),
        VelocityPolicy::EuclideanLBest(neighbors) => {
            let best = neighbors
                .iter()
                .max_by(|a, b| a.pbest_fitness.total_cmp(&b.pbest_fitness))
                .ok_or_else(|| Error::config("euclidean lbest needs at least one neighbour"))?;
            let g = best.pbest_position.clone();
            social(particle, &g, vp, w, rng)
        }
        VelocityPolicy::PervasiveCognitive(params) => {
            if particle.scout_state == ScoutState::Scouting {
                let switch = StallCriterion {
                    window: params.window,
                    eps: params.eps_g,
                };
                if switch.holds(&particle.fitness_history) {
                    particle.scout_state = ScoutState::Cognitive;
                    particle.scout_sequence = None;
                    particle.reset_history();
                }
            }
            match (particle.scout_state, particle.scout_sequence.as_mut()) {
                (ScoutState::Scouting, Some(seq)) => {
                    let e = seq.next_unit();
                    scout_velocity(&particle.anchor, &particle.position, params.scout_radius, &e)
                }
                _ => cognitive(particle, vp, w, rng),
            }
        }
    };
    clamp_velocity(&mut v, &vp.v_max);
    Ok(v)
}

/// Scout displacement `x0 - x - r + 2 r e` towards a point of the hypercube around `x0`.
pub fn scout_velocity(anchor: &[f64], position: &[f64], radius: f64, e: &[f64]) -> Vec<f64> {
    anchor
        .iter()
        .zip(position)
        .zip(e)
        .map(|((x0, x), e)| x0 - x - radius + 2.0 * radius * e)
        .collect()
}

fn cognitive<R: Rng + ?Sized>(p: &Particle, vp: &VelocityParams, w: f64, rng: &mut R) -> Vec<f64> {
    (0..p.position.len())
        .map(|d| {
            let r1: f64 = rng.gen();
            w * p.velocity[d] + vp.c1 * r1 * (p.pbest_position[d] - p.position[d])
        })
        .collect()
}

fn social<R: Rng + ?Sized>(p: &Particle, g: &[f64], vp: &VelocityParams, w: f64, rng: &mut R) -> Vec<f64> {
    (0..p.position.len())
        .map(|d| {
            let r1: f64 = rng.gen();
            let r2: f64 = rng.gen();
            w * p.velocity[d] + vp.c1 * r1 * (p.pbest_position[d] - p.position[d]) + vp.c2 * r2 * (g[d] - p.position[d])
        })
        .collect()
}

fn clamp_velocity(v: &mut [f64], v_max: &[f64]) {
    for (vi, m) in v.iter_mut().zip(v_max) {
        *vi = vi.clamp(-m, *m);
    }
}

/// Moves the particle by `velocity`, clamps it into the bounds (zeroing the
/// velocity components that hit a wall), evaluates it and updates its pbest.
///
/// On budget exhaustion the particle is left untouched.
pub fn apply_step(
    particle: &mut Particle,
    velocity: Vec<f64>,
    spec: &ObjectiveSpec,
    counter: &mut EvalCounter,
) -> Result<(), EvalError> {
    if counter.is_exhausted() {
        return Err(EvalError::BudgetExhausted);
    }
    let mut velocity = velocity;
    let mut position: Vec<f64> = particle.position.iter().zip(&velocity).map(|(x, v)| x + v).collect();
    for d in 0..position.len() {
        let (lo, hi) = (spec.lower()[d], spec.upper()[d]);
        if position[d] < lo || position[d] > hi {
            position[d] = position[d].clamp(lo, hi);
            velocity[d] = 0.0;
        }
    }
    let fitness = evaluate(spec, &position, counter)?;
    particle.position = position;
    particle.velocity = velocity;
    particle.fitness = fitness;
    if fitness > particle.pbest_fitness {
        particle.pbest_fitness = fitness;
        particle.pbest_position = particle.position.clone();
        particle.stall_count = 0;
    } else {
        particle.stall_count += 1;
    }
    particle.push_history();
    Ok(())
}

pub fn is_stalled(particle: &Particle, crit: &StallCriterion) -> bool {
    crit.holds(&particle.fitness_history)
}

/// Adaptive sampling radius of the GCPSO best particle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoState {
    pub rho: f64,
    pub successes: usize,
    pub failures: usize,
    pub success_threshold: usize,
    pub failure_threshold: usize,
}

impl Default for RhoState {
    fn default() -> Self {
        Self {
            rho: 1.0,
            successes: 0,
            failures: 0,
            success_threshold: 15,
            failure_threshold: 5,
        }
    }
}

impl RhoState {
    /// Records whether the sub-swarm best improved in the last step.
    pub fn record(&mut self, improved: bool) {
        if improved {
            self.successes += 1;
            self.failures = 0;
            if self.successes >= self.success_threshold {
                self.rho *= 2.0;
                self.successes = 0;
            }
        } else {
            self.failures += 1;
            self.successes = 0;
            if self.failures >= self.failure_threshold {
                self.rho *= 0.5;
                self.failures = 0;
            }
        }
    }
}

/// Velocity that resamples the best particle at `g + w v + rho (1 - 2 r)`.
pub fn gcpso_best_velocity<R: Rng + ?Sized>(
    best: &Particle,
    g: &[f64],
    w: f64,
    rho: &RhoState,
    v_max: &[f64],
    rng: &mut R,
) -> Vec<f64> {
    let mut v: Vec<f64> = (0..best.position.len())
        .map(|d| {
            let r: f64 = rng.gen();
            g[d] + w * best.velocity[d] + rho.rho * (1.0 - 2.0 * r) - best.position[d]
        })
        .collect();
    clamp_velocity(&mut v, v_max);
    v
}

/// One GCPSO step of a sub-swarm's best particle; updates `rho` from whether
/// the particle improved on `g`.
#[allow(clippy::too_many_arguments)]
pub fn gcpso_best_step<R: Rng + ?Sized>(
    best: &mut Particle,
    g: &Solution,
    w: f64,
    rho: &mut RhoState,
    v_max: &[f64],
    spec: &ObjectiveSpec,
    counter: &mut EvalCounter,
    rng: &mut R,
) -> Result<(), EvalError> {
    let v = gcpso_best_velocity(best, &g.position, w, rho, v_max, rng);
    apply_step(best, v, spec, counter)?;
    rho.record(best.pbest_fitness > g.fitness);
    Ok(())
}

/// Evaluates `position` and builds a particle with a random initial velocity.
pub fn spawn_particle<R: Rng + ?Sized>(
    position: Vec<f64>,
    v_max: &[f64],
    spec: &ObjectiveSpec,
    counter: &mut EvalCounter,
    rng: &mut R,
) -> Result<Particle, EvalError> {
    let fitness = evaluate(spec, &position, counter)?;
    let velocity = v_max.iter().map(|m| rng.gen_range(-*m..=*m)).collect();
    Ok(Particle::new(position, velocity, fitness))
}
