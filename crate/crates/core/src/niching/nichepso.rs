//! NichePSO: a cognitive main swarm that spawns GCPSO sub-swarms from stalled
//! particles and their closest free neighbour.

use rand::Rng;

use super::common::{completed, init_swarm, velocity_params};
use super::{AlgoConfig, PhaseTelemetry, RunOutcome};
use crate::error::{EvalError, Result};
use crate::objective::{distance, EvalCounter, ObjectiveSpec, Solution};
use crate::swarm::{
    apply_step, gcpso_best_step, is_stalled, step_velocity, InertiaSchedule, Particle, RhoState, VelocityPolicy,
};

struct SubSwarm {
    members: Vec<usize>,
    rho: RhoState,
    radius: f64,
}

impl SubSwarm {
    fn head(&self, particles: &[Particle]) -> usize {
        *self
            .members
            .iter()
            .max_by(|&&a, &&b| particles[a].pbest_fitness.total_cmp(&particles[b].pbest_fitness))
            .expect("non-empty sub-swarm")
    }

    fn update_radius(&mut self, particles: &[Particle]) {
        let g = &particles[self.head(particles)].pbest_position;
        self.radius = self
            .members
            .iter()
            .map(|&i| distance(g, &particles[i].position))
            .fold(0.0, f64::max);
    }
}

pub(super) fn run<R: Rng + ?Sized>(spec: &ObjectiveSpec, cfg: &AlgoConfig, rng: &mut R) -> Result<RunOutcome> {
    let mut counter = EvalCounter::new(cfg.budget);
    let mut telemetry = PhaseTelemetry::default();
    let mut particles = init_swarm(spec, cfg, false, &mut counter, rng)?;
    let vp = velocity_params(spec, cfg, InertiaSchedule::Constant(cfg.nichepso_inertia));
    let mut swarms: Vec<SubSwarm> = Vec::new();
    let mut free: Vec<bool> = vec![true; particles.len()];
    let mut k = 0;

    'outer: while !counter.is_exhausted() {
        for i in 0..particles.len() {
            if !free[i] {
                continue;
            }
            let v = step_velocity(&mut particles[i], VelocityPolicy::Cognitive, &vp, rng, k, 1)?;
            if let Err(e) = apply_step(&mut particles[i], v, spec, &mut counter) {
                match e {
                    EvalError::BudgetExhausted => break 'outer,
                    e => return Err(e.into()),
                }
            }
        }

        for s in swarms.iter_mut() {
            let h = s.head(&particles);
            let g = particles[h].pbest();
            if let Err(e) = gcpso_best_step(
                &mut particles[h],
                &g,
                cfg.nichepso_inertia,
                &mut s.rho,
                &vp.v_max,
                spec,
                &mut counter,
                rng,
            ) {
                match e {
                    EvalError::BudgetExhausted => break 'outer,
                    e => return Err(e.into()),
                }
            }
            for &i in &s.members {
                if i == h {
                    continue;
                }
                let g = particles[s.head(&particles)].pbest_position.clone();
                let v = step_velocity(&mut particles[i], VelocityPolicy::GBest(&g), &vp, rng, k, 1)?;
                if let Err(e) = apply_step(&mut particles[i], v, spec, &mut counter) {
                    match e {
                        EvalError::BudgetExhausted => break 'outer,
                        e => return Err(e.into()),
                    }
                }
            }
            s.update_radius(&particles);
        }

        if cfg.nichepso_merge {
            merge_intersecting(&mut swarms, &particles);
        }

        // Absorption of free particles that entered a sub-swarm (boundary included).
        for i in 0..particles.len() {
            if !free[i] {
                continue;
            }
            let host = swarms.iter().position(|s| {
                let g = &particles[s.head(&particles)].pbest_position;
                distance(&particles[i].position, g) <= s.radius
            });
            if let Some(j) = host {
                swarms[j].members.push(i);
                free[i] = false;
            }
        }

        // Partition: a stalled free particle founds a sub-swarm with its closest free neighbour.
        for i in 0..particles.len() {
            if !free[i] || !is_stalled(&particles[i], &cfg.stall) {
                continue;
            }
            free[i] = false;
            let mut members = vec![i];
            let neighbour = (0..particles.len()).filter(|&j| free[j]).min_by(|&a, &b| {
                distance(&particles[i].position, &particles[a].position)
                    .total_cmp(&distance(&particles[i].position, &particles[b].position))
            });
            if let Some(j) = neighbour {
                free[j] = false;
                members.push(j);
            }
            let mut s = SubSwarm {
                members,
                rho: RhoState::default(),
                radius: 0.0,
            };
            s.update_radius(&particles);
            swarms.push(s);
            telemetry.reorganizations += 1;
        }
        k += 1;
    }
    telemetry.fine_iterations = k;
    telemetry.fine_evaluations = counter.used();
    telemetry.niches = swarms.len();

    let heads: Vec<Solution> = if swarms.is_empty() {
        particles.iter().map(Particle::pbest).collect()
    } else {
        swarms.iter().map(|s| particles[s.head(&particles)].pbest()).collect()
    };
    let mut out = completed(heads, &counter, telemetry);
    out.iterations = k;
    Ok(out)
}

/// Merges sub-swarms whose heads are closer than the sum of their radii.
fn merge_intersecting(swarms: &mut Vec<SubSwarm>, particles: &[Particle]) {
    let mut i = 0;
    while i < swarms.len() {
        let mut j = i + 1;
        while j < swarms.len() {
            let gi = &particles[swarms[i].head(particles)].pbest_position;
            let gj = &particles[swarms[j].head(particles)].pbest_position;
            if distance(gi, gj) < swarms[i].radius + swarms[j].radius {
                let absorbed = swarms.remove(j);
                swarms[i].members.extend(absorbed.members);
                swarms[i].update_radius(particles);
            } else {
                j += 1;
            }
        }
        i += 1;
    }
}
