//! Phases shared by the clustering-based drivers.

use rand::Rng;

use super::{AlgoConfig, Niche, PhaseTelemetry, PrelimTopology, RunOutcome, RunStatus};
use crate::clustering::select_k;
use crate::error::{Error, EvalError, Result};
use crate::lds::HaltonState;
use crate::objective::{distance, EvalCounter, ObjectiveSpec, Solution};
use crate::swarm::{
    apply_step, is_stalled, spawn_particle, step_velocity, InertiaSchedule, Particle, PervasiveCognitiveParams,
    ScoutState, VelocityParams, VelocityPolicy,
};

pub(super) fn velocity_params(spec: &ObjectiveSpec, cfg: &AlgoConfig, inertia: InertiaSchedule) -> VelocityParams {
    VelocityParams {
        c1: cfg.c1,
        c2: cfg.c2,
        ..VelocityParams::standard(spec, inertia)
    }
}

pub(super) fn pervasive_params(spec: &ObjectiveSpec, cfg: &AlgoConfig) -> Result<PervasiveCognitiveParams> {
    PervasiveCognitiveParams::new(spec, cfg.population, cfg.gamma, cfg.switch_eps, cfg.switch_window)
}

/// Uniformly random point of the search box.
pub(super) fn uniform_point<R: Rng + ?Sized>(spec: &ObjectiveSpec, rng: &mut R) -> Vec<f64> {
    spec.lower()
        .iter()
        .zip(spec.upper())
        .map(|(lo, hi)| rng.gen_range(*lo..=*hi))
        .collect()
}

/// Evaluates `population` particles placed on the Halton sequence or uniformly at random.
pub(super) fn init_swarm<R: Rng + ?Sized>(
    spec: &ObjectiveSpec,
    cfg: &AlgoConfig,
    halton: bool,
    counter: &mut EvalCounter,
    rng: &mut R,
) -> Result<Vec<Particle>> {
    let v_max: Vec<f64> = spec.widths().iter().map(|w| 0.5 * w).collect();
    let mut seq = HaltonState::new(spec.dimension())?;
    let mut particles = Vec::with_capacity(cfg.population);
    for _ in 0..cfg.population {
        let x = if halton {
            seq.next_point(spec.lower(), spec.upper())?
        } else {
            uniform_point(spec, rng)
        };
        particles.push(spawn_particle(x, &v_max, spec, counter, rng)?);
    }
    Ok(particles)
}

/// Gives every particle its own scouting stream.
pub(super) fn start_scouting(particles: &mut [Particle], dimension: usize, first_offset: u64) -> Result<()> {
    for (i, p) in particles.iter_mut().enumerate() {
        p.start_scouting(HaltonState::with_offset(dimension, first_offset + i as u64)?);
    }
    Ok(())
}

pub(super) fn prelim_stalled(p: &Particle, topology: PrelimTopology, cfg: &AlgoConfig) -> bool {
    let settled = topology != PrelimTopology::PervasiveCognitive || p.scout_state == ScoutState::Cognitive;
    settled && is_stalled(p, &cfg.stall)
}

/// Moves the non-stalled particles until all have stalled or the preliminary
/// share of the budget is spent. Returns `true` if the whole budget ran out.
pub(super) fn preliminary<R: Rng + ?Sized>(
    particles: &mut [Particle],
    topology: PrelimTopology,
    spec: &ObjectiveSpec,
    cfg: &AlgoConfig,
    counter: &mut EvalCounter,
    rng: &mut R,
    telemetry: &mut PhaseTelemetry,
) -> Result<bool> {
    let start = counter.used();
    let cap = ((cfg.budget as f64 * cfg.prelim_budget_fraction).floor() as u64).min(cfg.budget);
    let vp = velocity_params(spec, cfg, InertiaSchedule::Constant(cfg.prelim_inertia));
    let pc = pervasive_params(spec, cfg)?;
    if topology == PrelimTopology::PervasiveCognitive {
        start_scouting(particles, spec.dimension(), 0)?;
    }
    let mut exhausted = false;
    'outer: loop {
        if counter.used() >= cap || particles.iter().all(|p| prelim_stalled(p, topology, cfg)) {
            break;
        }
        let snapshot: Vec<Particle> = match topology {
            PrelimTopology::EuclideanLBest => particles.to_vec(),
            _ => Vec::new(),
        };
        for i in 0..particles.len() {
            if prelim_stalled(&particles[i], topology, cfg) {
                continue;
            }
            if counter.used() >= cap {
                break;
            }
            let v = match topology {
                PrelimTopology::PervasiveCognitive => step_velocity(
                    &mut particles[i],
                    VelocityPolicy::PervasiveCognitive(&pc),
                    &vp,
                    rng,
                    telemetry.prelim_iterations,
                    1,
                )?,
                PrelimTopology::Cognitive => {
                    step_velocity(&mut particles[i], VelocityPolicy::Cognitive, &vp, rng, 0, 1)?
                }
                PrelimTopology::EuclideanLBest => {
                    let j = nearest_other(&snapshot, i);
                    let hood = [&snapshot[i], &snapshot[j]];
                    step_velocity(&mut particles[i], VelocityPolicy::EuclideanLBest(&hood), &vp, rng, 0, 1)?
                }
            };
            match apply_step(&mut particles[i], v, spec, counter) {
                Ok(()) => {}
                Err(EvalError::BudgetExhausted) => {
                    exhausted = true;
                    break 'outer;
                }
                Err(e) => return Err(e.into()),
            }
        }
        telemetry.prelim_iterations += 1;
    }
    telemetry.prelim_evaluations = counter.used() - start;
    Ok(exhausted || counter.is_exhausted())
}

fn nearest_other(particles: &[Particle], i: usize) -> usize {
    (0..particles.len())
        .filter(|&j| j != i)
        .min_by(|&a, &b| {
            distance(&particles[i].position, &particles[a].position)
                .total_cmp(&distance(&particles[i].position, &particles[b].position))
        })
        .expect("population >= 2")
}

/// Groups particles by k-means over their pbests with the silhouette-optimal
/// `k`; a population without a feasible `k` stays one group.
pub(super) fn cluster_pbests<R: Rng + ?Sized>(
    particles: &[Particle],
    cfg: &AlgoConfig,
    rng: &mut R,
) -> Result<Vec<Vec<usize>>> {
    let points: Vec<Vec<f64>> = particles.iter().map(|p| p.pbest_position.clone()).collect();
    match select_k(&points, 2, None, cfg.kmeans_restarts, rng) {
        Ok(model) => Ok(model.members().into_iter().filter(|m| !m.is_empty()).collect()),
        Err(Error::Config(_)) => Ok(vec![(0..particles.len()).collect()]),
        Err(e) => Err(e),
    }
}

/// Moves the particles into the given groups, preserving group order.
pub(super) fn split_into_groups(particles: Vec<Particle>, groups: &[Vec<usize>]) -> Vec<Vec<Particle>> {
    let mut slots: Vec<Option<Particle>> = particles.into_iter().map(Some).collect();
    groups
        .iter()
        .map(|g| g.iter().map(|&i| slots[i].take().expect("disjoint groups")).collect())
        .collect()
}

pub(super) fn niche_from(members: Vec<Particle>) -> Niche {
    let mut niche = Niche::new(members, 0.0);
    niche.radius = niche.spread();
    niche
}

/// gBest search inside every niche with linearly decreasing inertia. Ends
/// when the budget runs out or all niche heads stall together.
pub(super) fn fine_phase<R: Rng + ?Sized>(
    niches: &mut [Niche],
    spec: &ObjectiveSpec,
    cfg: &AlgoConfig,
    counter: &mut EvalCounter,
    rng: &mut R,
    telemetry: &mut PhaseTelemetry,
) -> Result<()> {
    let start = counter.used();
    let size: usize = niches.iter().map(|n| n.members.len()).sum();
    if size == 0 {
        return Ok(());
    }
    let max_iter = ((counter.remaining() / size as u64) as usize).max(1);
    let vp = velocity_params(spec, cfg, cfg.fine_inertia());
    let mut k = 0;
    'outer: while !counter.is_exhausted() {
        for niche in niches.iter_mut() {
            for i in 0..niche.members.len() {
                let g = niche.members[niche.head_index()].pbest_position.clone();
                let v = step_velocity(&mut niche.members[i], VelocityPolicy::GBest(&g), &vp, rng, k, max_iter)?;
                match apply_step(&mut niche.members[i], v, spec, counter) {
                    Ok(()) => {}
                    Err(EvalError::BudgetExhausted) => break 'outer,
                    Err(e) => return Err(e.into()),
                }
            }
        }
        k += 1;
        niches.iter_mut().for_each(Niche::record_head);
        if niches.iter().all(|n| cfg.head_stall.holds(&n.head_history)) {
            break;
        }
    }
    telemetry.fine_iterations = k;
    telemetry.fine_evaluations = counter.used() - start;
    Ok(())
}

pub(super) fn incomplete(particles: &[Particle], counter: &EvalCounter, telemetry: PhaseTelemetry) -> RunOutcome {
    RunOutcome {
        heads: particles.iter().map(Particle::pbest).collect(),
        evaluations: counter.used(),
        iterations: telemetry.prelim_iterations,
        telemetry,
        status: RunStatus::PreliminaryIncomplete,
    }
}

pub(super) fn completed(heads: Vec<Solution>, counter: &EvalCounter, telemetry: PhaseTelemetry) -> RunOutcome {
    RunOutcome {
        heads,
        evaluations: counter.used(),
        iterations: telemetry.prelim_iterations + telemetry.fine_iterations,
        telemetry,
        status: RunStatus::Completed,
    }
}

/// Preliminary search, one k-means pass and gBest niches (EDHC-PSO and the
/// preliminary-topology variants).
pub(super) fn run_clustered<R: Rng + ?Sized>(
    spec: &ObjectiveSpec,
    cfg: &AlgoConfig,
    topology: PrelimTopology,
    rng: &mut R,
) -> Result<RunOutcome> {
    let mut counter = EvalCounter::new(cfg.budget);
    let mut telemetry = PhaseTelemetry::default();
    let halton = topology == PrelimTopology::PervasiveCognitive;
    let mut particles = init_swarm(spec, cfg, halton, &mut counter, rng)?;
    if preliminary(&mut particles, topology, spec, cfg, &mut counter, rng, &mut telemetry)? {
        return Ok(incomplete(&particles, &counter, telemetry));
    }
    let groups = cluster_pbests(&particles, cfg, rng)?;
    telemetry.clusters = groups.len();
    let mut niches: Vec<Niche> = split_into_groups(particles, &groups)
        .into_iter()
        .map(niche_from)
        .collect();
    telemetry.niches = niches.len();
    fine_phase(&mut niches, spec, cfg, &mut counter, rng, &mut telemetry)?;
    Ok(completed(niches.iter().map(Niche::head).collect(), &counter, telemetry))
}
