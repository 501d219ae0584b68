//! Niche formation and the algorithm drivers: TImPSO, kPSO, EDHC-PSO,
//! NichePSO and the preliminary-topology variants.

mod common;
pub mod hill_valley;
mod kpso;
mod nichepso;
pub mod subcluster;
mod timpso;

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{distance, ObjectiveSpec, Solution};
use crate::swarm::{InertiaSchedule, Particle, StallCriterion};

pub use hill_valley::{hill_valley, BasinRelation, HillValleyParams};
pub use subcluster::{sub_cluster, SubClusterOutcome, SubClusterParams};

/// A group of particles exploiting one basin.
#[derive(Debug, Clone)]
pub struct Niche {
    pub members: Vec<Particle>,
    pub radius: f64,
    pub(crate) head_history: VecDeque<f64>,
}

impl Niche {
    pub fn new(members: Vec<Particle>, radius: f64) -> Self {
        assert!(!members.is_empty(), "a niche needs at least one member");
        let mut niche = Self {
            members,
            radius,
            head_history: VecDeque::new(),
        };
        niche.head_history.push_back(niche.head().fitness);
        niche
    }

    /// Index of the member with the best pbest.
    pub fn head_index(&self) -> usize {
        self.members
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.pbest_fitness.total_cmp(&b.1.pbest_fitness))
            .map(|(i, _)| i)
            .expect("non-empty niche")
    }

    pub fn head(&self) -> Solution {
        self.members[self.head_index()].pbest()
    }

    /// Largest distance from the head to a member pbest.
    pub fn spread(&self) -> f64 {
        let head = &self.members[self.head_index()].pbest_position;
        self.members
            .iter()
            .map(|p| distance(head, &p.pbest_position))
            .fold(0.0, f64::max)
    }

    pub(crate) fn record_head(&mut self) {
        if self.head_history.len() == 32 {
            self.head_history.pop_front();
        }
        let f = self.head().fitness;
        self.head_history.push_back(f);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    TImPso,
    KPso,
    EdhcPso,
    NichePso,
    /// Scout-then-cognitive preliminary phase, k-means niches, gBest fine search.
    NpsoHc,
    /// Euclidean lBest preliminary phase.
    NpsoE,
    /// Cognitive preliminary phase.
    NpsoC,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::TImPso,
        Algorithm::KPso,
        Algorithm::EdhcPso,
        Algorithm::NichePso,
        Algorithm::NpsoHc,
        Algorithm::NpsoE,
        Algorithm::NpsoC,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Algorithm::TImPso => "timpso",
            Algorithm::KPso => "kpso",
            Algorithm::EdhcPso => "edhcpso",
            Algorithm::NichePso => "nichepso",
            Algorithm::NpsoHc => "npsohc",
            Algorithm::NpsoE => "npsoe",
            Algorithm::NpsoC => "npsoc",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .trim()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Algorithm::ALL
            .iter()
            .copied()
            .find(|a| a.key() == key)
            .ok_or_else(|| Error::config(format!("unknown algorithm '{s}'")))
    }
}

/// Movement model of the preliminary phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrelimTopology {
    PervasiveCognitive,
    Cognitive,
    /// lBest over the nearest other particle.
    EuclideanLBest,
}

/// Solver parameters shared by all drivers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgoConfig {
    pub population: usize,
    pub budget: u64,
    pub seed: u64,
    pub c1: f64,
    pub c2: f64,
    pub prelim_inertia: f64,
    pub fine_inertia_max: f64,
    pub fine_inertia_min: f64,
    /// Scale of the scouting hypercube.
    pub gamma: f64,
    /// Scout-to-cognitive switch threshold and window.
    pub switch_eps: f64,
    pub switch_window: usize,
    /// Particle stall test of the preliminary phase and NichePSO.
    pub stall: StallCriterion,
    /// Niche-head stall test ending the fine phase early; `eps = 0` never fires.
    pub head_stall: StallCriterion,
    /// Share of the budget after which the preliminary phase ends regardless of stall.
    pub prelim_budget_fraction: f64,
    pub hill_valley: HillValleyParams,
    pub subcluster_eps: f64,
    pub local_search: bool,
    pub local_search_evals_per_dim: u64,
    pub kmeans_restarts: usize,
    /// kPSO re-clustering period in iterations.
    pub kpso_interval: usize,
    pub nichepso_inertia: f64,
    pub nichepso_merge: bool,
}

impl Default for AlgoConfig {
    fn default() -> Self {
        Self {
            population: 30,
            budget: 30_000,
            seed: 0,
            c1: 2.0,
            c2: 2.0,
            prelim_inertia: 0.729,
            fine_inertia_max: 0.9,
            fine_inertia_min: 0.4,
            gamma: 1.0,
            switch_eps: 1e-4,
            switch_window: 3,
            stall: StallCriterion::default(),
            head_stall: StallCriterion { window: 3, eps: 0.0 },
            prelim_budget_fraction: 0.3,
            hill_valley: HillValleyParams::default(),
            subcluster_eps: 0.1,
            local_search: true,
            local_search_evals_per_dim: 100,
            kmeans_restarts: 10,
            kpso_interval: 50,
            nichepso_inertia: 0.729,
            nichepso_merge: false,
        }
    }
}

impl AlgoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::config("population must be at least 2"));
        }
        if self.budget < self.population as u64 {
            return Err(Error::config("budget must be at least the population size"));
        }
        if self.c1 < 0.0 || self.c2 < 0.0 {
            return Err(Error::config("acceleration coefficients must be non-negative"));
        }
        if self.fine_inertia_max < self.fine_inertia_min {
            return Err(Error::config("fine inertia requires w_max >= w_min"));
        }
        if !(self.gamma > 0.0) || !(self.switch_eps > 0.0) || self.switch_window == 0 {
            return Err(Error::config(
                "scouting needs gamma > 0, switch_eps > 0 and switch_window >= 1",
            ));
        }
        for crit in [&self.stall, &self.head_stall] {
            if crit.window == 0 || crit.eps < 0.0 {
                return Err(Error::config("stall criterion needs window >= 1 and eps >= 0"));
            }
        }
        if !(self.prelim_budget_fraction > 0.0 && self.prelim_budget_fraction <= 1.0) {
            return Err(Error::config("preliminary budget fraction must lie in (0, 1]"));
        }
        if self.subcluster_eps < 0.0 {
            return Err(Error::config("sub-clustering threshold must be non-negative"));
        }
        if self.kmeans_restarts == 0 || self.kpso_interval == 0 {
            return Err(Error::config("k-means restarts and the kPSO interval must be positive"));
        }
        self.hill_valley.validate()
    }

    pub(crate) fn fine_inertia(&self) -> InertiaSchedule {
        InertiaSchedule::Linear {
            max: self.fine_inertia_max,
            min: self.fine_inertia_min,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    Completed,
    /// The budget ran out before niches could be formed; heads are raw pbests.
    PreliminaryIncomplete,
}

/// Per-phase counters of one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTelemetry {
    pub prelim_iterations: usize,
    pub prelim_evaluations: u64,
    pub clusters: usize,
    pub niches: usize,
    pub niching_evaluations: u64,
    pub fine_iterations: usize,
    pub fine_evaluations: u64,
    /// kPSO re-clustering passes or NichePSO sub-swarm creations.
    pub reorganizations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub heads: Vec<Solution>,
    pub evaluations: u64,
    pub iterations: usize,
    pub telemetry: PhaseTelemetry,
    pub status: RunStatus,
}

/// Runs `algorithm` on `spec`. Deterministic in `(config, spec)`.
pub fn run(algorithm: Algorithm, spec: &ObjectiveSpec, config: &AlgoConfig) -> Result<RunOutcome> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    match algorithm {
        Algorithm::TImPso => timpso::run(spec, config, &mut rng),
        Algorithm::EdhcPso | Algorithm::NpsoHc => {
            common::run_clustered(spec, config, PrelimTopology::PervasiveCognitive, &mut rng)
        }
        Algorithm::NpsoC => common::run_clustered(spec, config, PrelimTopology::Cognitive, &mut rng),
        Algorithm::NpsoE => common::run_clustered(spec, config, PrelimTopology::EuclideanLBest, &mut rng),
        Algorithm::KPso => kpso::run(spec, config, &mut rng),
        Algorithm::NichePso => nichepso::run(spec, config, &mut rng),
    }
}
