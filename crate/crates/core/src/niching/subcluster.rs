//! Elitist sub-clustering of one proximity cluster into basin-consistent niches.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::hill_valley::{hill_valley, BasinRelation, HillValleyParams};
use super::Niche;
use crate::error::{EvalError, Result};
use crate::localsearch::{pattern_search, PatternSearchConfig};
use crate::objective::{distance, evaluate, EvalCounter, ObjectiveSpec};
use crate::swarm::Particle;

#[derive(Debug, Clone, PartialEq)]
pub struct SubClusterParams {
    /// Pre-selection threshold below the cluster-best fitness.
    pub eps: f64,
    pub hill_valley: HillValleyParams,
    /// Refinement applied to every particle's pbest before pre-selection.
    pub local_search: Option<PatternSearchConfig>,
}

#[derive(Debug, Clone)]
pub struct SubClusterOutcome {
    pub niches: Vec<Niche>,
    /// Set when the budget ran out part-way; niches are then whatever had been formed.
    pub exhausted: bool,
}

/// Splits `particles` into niches whose heads lie in distinct basins, then
/// redistributes the particles equitably around the heads.
pub fn sub_cluster<R: Rng + ?Sized>(
    mut particles: Vec<Particle>,
    spec: &ObjectiveSpec,
    params: &SubClusterParams,
    counter: &mut EvalCounter,
    rng: &mut R,
) -> Result<SubClusterOutcome> {
    assert!(!particles.is_empty(), "sub-clustering needs a non-empty cluster");
    let mut exhausted = false;

    if let Some(cfg) = &params.local_search {
        for p in particles.iter_mut() {
            let refined = pattern_search(spec, &p.pbest(), cfg, counter)?;
            if refined.fitness > p.pbest_fitness {
                p.pbest_position = refined.position.clone();
                p.pbest_fitness = refined.fitness;
                p.position = refined.position;
                p.fitness = refined.fitness;
                p.reset_history();
            }
            if counter.is_exhausted() {
                exhausted = true;
                break;
            }
        }
    }

    // Pre-selection: the elite within `eps` of the cluster best, fittest first.
    let mut order: Vec<usize> = (0..particles.len()).collect();
    order.sort_by(|&a, &b| particles[b].pbest_fitness.total_cmp(&particles[a].pbest_fitness));
    let best = particles[order[0]].pbest_fitness;
    let elite: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| i == order[0] || best - particles[i].pbest_fitness < params.eps)
        .collect();

    // Merge from the least fit head upwards into the first fitter head sharing its basin.
    // `owner[e]` is the elite slot that elite `e` ended up in.
    let mut owner: Vec<usize> = (0..elite.len()).collect();
    if !exhausted && particles.len() > 1 {
        for i in (1..elite.len()).rev() {
            let gi = particles[elite[i]].pbest();
            for j in 0..i {
                if owner[j] != j {
                    continue;
                }
                let gj = particles[elite[j]].pbest();
                let relation = if gi.position == gj.position {
                    BasinRelation::SameBasin
                } else {
                    match hill_valley(&gi, &gj, spec, &params.hill_valley, counter) {
                        Ok(r) => r,
                        Err(e) if e.is_budget_exhausted() => {
                            exhausted = true;
                            break;
                        }
                        Err(e) => return Err(e),
                    }
                };
                if relation == BasinRelation::SameBasin {
                    owner[i] = j;
                    break;
                }
            }
            if exhausted {
                break;
            }
        }
    }
    let heads: Vec<usize> = (0..elite.len()).filter(|&e| owner[e] == e).collect();
    let m = heads.len();

    let radius = if m == 1 {
        f64::INFINITY
    } else {
        let mut min_d = f64::INFINITY;
        for (a, &ha) in heads.iter().enumerate() {
            for &hb in &heads[a + 1..] {
                min_d = min_d.min(distance(
                    &particles[elite[ha]].pbest_position,
                    &particles[elite[hb]].pbest_position,
                ));
            }
        }
        min_d / 2.0
    };

    // Initial membership: merged elites follow their head, the rest go to the nearest head.
    let mut slot_of_particle = vec![usize::MAX; particles.len()];
    for (e, &pi) in elite.iter().enumerate() {
        let mut root = e;
        while owner[root] != root {
            root = owner[root];
        }
        slot_of_particle[pi] = heads.iter().position(|&h| h == root).expect("root is a head");
    }
    for (pi, p) in particles.iter().enumerate() {
        if slot_of_particle[pi] == usize::MAX {
            slot_of_particle[pi] = (0..m)
                .min_by(|&a, &b| {
                    distance(&p.pbest_position, &particles[elite[heads[a]]].pbest_position)
                        .total_cmp(&distance(&p.pbest_position, &particles[elite[heads[b]]].pbest_position))
                })
                .expect("m >= 1");
        }
    }
    let head_particles: Vec<usize> = heads.iter().map(|&h| elite[h]).collect();
    let head_positions: Vec<Vec<f64>> = head_particles
        .iter()
        .map(|&pi| particles[pi].pbest_position.clone())
        .collect();

    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (pi, &s) in slot_of_particle.iter().enumerate() {
        groups[s].push(pi);
    }

    // Equitable allocation: q/m per niche, the remainder going to the fittest niches.
    let mut to_relocate: Vec<(usize, usize)> = Vec::new();
    if !exhausted && m > 1 {
        let q = particles.len();
        let quota: Vec<usize> = (0..m).map(|j| q / m + usize::from(j < q % m)).collect();
        let mut pool = Vec::new();
        for (j, group) in groups.iter_mut().enumerate() {
            if group.len() > quota[j] {
                group.sort_by(|&a, &b| particles[b].pbest_fitness.total_cmp(&particles[a].pbest_fitness));
                pool.extend(group.drain(quota[j]..));
            }
        }
        pool.sort_by(|&a, &b| particles[b].pbest_fitness.total_cmp(&particles[a].pbest_fitness));
        for (j, group) in groups.iter_mut().enumerate() {
            while group.len() < quota[j] {
                let pi = pool.pop().expect("quotas sum to q");
                group.push(pi);
                to_relocate.push((pi, j));
            }
        }
        debug_assert!(pool.is_empty());
        // Members whose memory lies outside the peak radius are placed inside it as well.
        for (j, group) in groups.iter().enumerate() {
            for &pi in group {
                let outside = distance(&particles[pi].pbest_position, &head_positions[j]) > radius;
                if outside && !to_relocate.iter().any(|&(p, _)| p == pi) {
                    to_relocate.push((pi, j));
                }
            }
        }
    }
    for (pi, j) in to_relocate {
        let mut z = sample_ball(&head_positions[j], radius, rng);
        spec.clamp(&mut z);
        match evaluate(spec, &z, counter) {
            Ok(f) => particles[pi].relocate(z, f),
            Err(EvalError::BudgetExhausted) => {
                exhausted = true;
                break;
            }
            Err(e) => return Err(e.into()),
        }
    }

    let mut slots: Vec<Option<Particle>> = particles.into_iter().map(Some).collect();
    let niches = groups
        .into_iter()
        .map(|group| {
            let members = group
                .into_iter()
                .map(|pi| slots[pi].take().expect("each particle is placed once"))
                .collect();
            Niche::new(members, radius)
        })
        .collect();
    Ok(SubClusterOutcome { niches, exhausted })
}

/// Uniform sample from the euclidean ball of the given radius around `center`.
fn sample_ball<R: Rng + ?Sized>(center: &[f64], radius: f64, rng: &mut R) -> Vec<f64> {
    let n = center.len();
    let dir: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let u: f64 = rng.gen();
    let scale = radius * u.powf(1.0 / n as f64) / norm;
    center.iter().zip(&dir).map(|(c, d)| c + d * scale).collect()
}
