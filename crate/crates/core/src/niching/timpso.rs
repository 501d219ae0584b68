//! TImPSO: scouting preliminary phase, silhouette k-means, hill-valley
//! sub-clustering of every cluster, then gBest niches.

use rand::Rng;

use super::common::{
    cluster_pbests, completed, fine_phase, incomplete, init_swarm, niche_from, preliminary, split_into_groups,
};
use super::subcluster::{sub_cluster, SubClusterParams};
use super::{AlgoConfig, Niche, PhaseTelemetry, PrelimTopology, RunOutcome};
use crate::error::Result;
use crate::localsearch::PatternSearchConfig;
use crate::objective::{EvalCounter, ObjectiveSpec};

pub(super) fn run<R: Rng + ?Sized>(spec: &ObjectiveSpec, cfg: &AlgoConfig, rng: &mut R) -> Result<RunOutcome> {
    let mut counter = EvalCounter::new(cfg.budget);
    let mut telemetry = PhaseTelemetry::default();
    let mut particles = init_swarm(spec, cfg, true, &mut counter, rng)?;
    let topology = PrelimTopology::PervasiveCognitive;
    if preliminary(&mut particles, topology, spec, cfg, &mut counter, rng, &mut telemetry)? {
        return Ok(incomplete(&particles, &counter, telemetry));
    }

    let groups = cluster_pbests(&particles, cfg, rng)?;
    telemetry.clusters = groups.len();
    let params = SubClusterParams {
        eps: cfg.subcluster_eps,
        hill_valley: cfg.hill_valley.clone(),
        local_search: cfg
            .local_search
            .then(|| PatternSearchConfig::with_max_evals(cfg.local_search_evals_per_dim * spec.dimension() as u64)),
    };
    let niching_start = counter.used();
    let mut niches: Vec<Niche> = Vec::new();
    let mut exhausted = false;
    for members in split_into_groups(particles, &groups) {
        if exhausted {
            niches.push(niche_from(members));
            continue;
        }
        let out = sub_cluster(members, spec, &params, &mut counter, rng)?;
        exhausted = out.exhausted;
        niches.extend(out.niches);
    }
    telemetry.niching_evaluations = counter.used() - niching_start;
    telemetry.niches = niches.len();

    fine_phase(&mut niches, spec, cfg, &mut counter, rng, &mut telemetry)?;
    Ok(completed(niches.iter().map(Niche::head).collect(), &counter, telemetry))
}
