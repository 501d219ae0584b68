//! kPSO: free particles scout then move cognitively; every `c` iterations all
//! pbests are re-clustered into gBest niches and crowded niches shed their
//! worst members, which restart at random points as cognitive particles.

use rand::Rng;

use super::common::{cluster_pbests, completed, pervasive_params, uniform_point, velocity_params};
use super::{AlgoConfig, PhaseTelemetry, RunOutcome};
use crate::error::{EvalError, Result};
use crate::objective::{evaluate, EvalCounter, ObjectiveSpec, Solution};
use crate::swarm::{apply_step, step_velocity, InertiaSchedule, Particle, ScoutState, VelocityPolicy};

pub(super) fn run<R: Rng + ?Sized>(spec: &ObjectiveSpec, cfg: &AlgoConfig, rng: &mut R) -> Result<RunOutcome> {
    let mut counter = EvalCounter::new(cfg.budget);
    let mut telemetry = PhaseTelemetry::default();
    let dim = spec.dimension();
    let mut particles = super::common::init_swarm(spec, cfg, true, &mut counter, rng)?;
    super::common::start_scouting(&mut particles, dim, 0)?;

    let free_vp = velocity_params(spec, cfg, InertiaSchedule::Constant(cfg.prelim_inertia));
    let niche_vp = velocity_params(spec, cfg, cfg.fine_inertia());
    let pc = pervasive_params(spec, cfg)?;
    let max_iter = ((cfg.budget / particles.len() as u64) as usize).max(1);

    // `niches[j]` lists particle indices; `niche_of[i]` is `None` for free particles.
    let mut niches: Vec<Vec<usize>> = Vec::new();
    let mut niche_of: Vec<Option<usize>> = vec![None; particles.len()];
    let mut k = 0;
    'outer: while !counter.is_exhausted() {
        if k > 0 && k % cfg.kpso_interval == 0 {
            if telemetry.reorganizations == 0 {
                telemetry.prelim_iterations = k;
                telemetry.prelim_evaluations = counter.used();
            }
            telemetry.reorganizations += 1;
            niches = cluster_pbests(&particles, cfg, rng)?;
            telemetry.clusters = niches.len();
            let avg = (particles.len() / niches.len()).max(1);
            niche_of.iter_mut().for_each(|n| *n = None);
            let mut shed = Vec::new();
            for (j, members) in niches.iter_mut().enumerate() {
                members.sort_by(|&a, &b| particles[b].pbest_fitness.total_cmp(&particles[a].pbest_fitness));
                if members.len() > avg {
                    shed.extend(members.drain(avg..));
                }
                for &i in members.iter() {
                    niche_of[i] = Some(j);
                }
            }
            shed.sort_unstable();
            for i in shed {
                let x = uniform_point(spec, rng);
                let f = match evaluate(spec, &x, &mut counter) {
                    Ok(f) => f,
                    Err(EvalError::BudgetExhausted) => break 'outer,
                    Err(e) => return Err(e.into()),
                };
                let p = &mut particles[i];
                p.relocate(x, f);
                p.velocity = free_vp.v_max.iter().map(|m| rng.gen_range(-*m..=*m)).collect();
                p.scout_state = ScoutState::Cognitive;
            }
            telemetry.niches = niches.len();
        }

        for i in 0..particles.len() {
            let v = match niche_of[i] {
                Some(j) => {
                    let head = best_of(&particles, &niches[j]);
                    let g = particles[head].pbest_position.clone();
                    step_velocity(
                        &mut particles[i],
                        VelocityPolicy::GBest(&g),
                        &niche_vp,
                        rng,
                        k,
                        max_iter,
                    )?
                }
                None => step_velocity(
                    &mut particles[i],
                    VelocityPolicy::PervasiveCognitive(&pc),
                    &free_vp,
                    rng,
                    k,
                    max_iter,
                )?,
            };
            match apply_step(&mut particles[i], v, spec, &mut counter) {
                Ok(()) => {}
                Err(EvalError::BudgetExhausted) => break 'outer,
                Err(e) => return Err(e.into()),
            }
        }
        k += 1;
    }
    if telemetry.reorganizations == 0 {
        telemetry.prelim_iterations = k;
        telemetry.prelim_evaluations = counter.used();
    } else {
        telemetry.fine_iterations = k - telemetry.prelim_iterations;
        telemetry.fine_evaluations = counter.used() - telemetry.prelim_evaluations;
    }

    let heads: Vec<Solution> = if niches.is_empty() {
        particles.iter().map(Particle::pbest).collect()
    } else {
        niches
            .iter()
            .map(|m| particles[best_of(&particles, m)].pbest())
            .collect()
    };
    Ok(completed(heads, &counter, telemetry))
}

fn best_of(particles: &[Particle], members: &[usize]) -> usize {
    *members
        .iter()
        .max_by(|&&a, &&b| particles[a].pbest_fitness.total_cmp(&particles[b].pbest_fitness))
        .expect("niches keep at least one member")
}
