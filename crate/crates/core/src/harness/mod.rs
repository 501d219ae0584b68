//! Multi-run experiments: seeded runs on a worker pool, peak-ratio scoring
//! over accuracy levels and signed-rank comparison against a reference
//! algorithm.

pub mod report;
pub mod stats;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::localsearch::{pattern_search, PatternSearchConfig};
use crate::niching::{run, AlgoConfig, Algorithm};
use crate::objective::{EvalCounter, FunctionId, Problem, Solution};

pub use stats::{mean_std, peak_ratio, score_run, wilcoxon_signed_rank, RunScore, Verdict, WilcoxonOutcome};

pub const DEFAULT_ACCURACY_LEVELS: [f64; 5] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub algorithms: Vec<Algorithm>,
    pub functions: Vec<FunctionId>,
    pub runs: usize,
    pub accuracy_levels: Vec<f64>,
    pub post_optimize: bool,
    /// Pattern-search evaluations per dimension spent on each head when post-optimizing.
    pub post_optimize_evals_per_dim: u64,
    /// Run `i` of every algorithm uses seed `base_seed + i`.
    pub base_seed: u64,
    /// Worker threads; `None` uses all cores.
    pub jobs: Option<usize>,
    pub reference: Algorithm,
    pub alpha: f64,
    /// Solver parameters; `seed` is overwritten per run.
    pub solver: AlgoConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            algorithms: vec![
                Algorithm::TImPso,
                Algorithm::KPso,
                Algorithm::EdhcPso,
                Algorithm::NichePso,
            ],
            functions: FunctionId::ALL.to_vec(),
            runs: 30,
            accuracy_levels: DEFAULT_ACCURACY_LEVELS.to_vec(),
            post_optimize: false,
            post_optimize_evals_per_dim: 100,
            base_seed: 0,
            jobs: None,
            reference: Algorithm::TImPso,
            alpha: 0.05,
            solver: AlgoConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::config("an experiment needs at least one run"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::config("an experiment needs at least one algorithm"));
        }
        if self.accuracy_levels.is_empty() || self.accuracy_levels.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::config("accuracy levels must be positive"));
        }
        if self.accuracy_levels.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::config("accuracy levels must be strictly decreasing"));
        }
        if self.jobs == Some(0) {
            return Err(Error::config("jobs must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config("significance level must lie in (0, 1)"));
        }
        self.solver.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCount {
    pub accuracy: f64,
    pub found: usize,
}

/// Outcome of one seeded run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    pub function: String,
    pub seed: u64,
    pub evaluations_used: u64,
    pub niche_heads: Vec<Solution>,
    /// Empty when the problem has no registry or the run failed.
    pub peaks_found: Vec<LevelCount>,
    pub peak_ratio: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub algorithm: Algorithm,
    pub function: String,
    pub pr_mean: Option<f64>,
    pub pr_std: Option<f64>,
    pub pr_at: Vec<Option<f64>>,
    /// `reference` on the reference algorithm's own rows.
    pub wilcoxon_mark: String,
    pub evals_mean: f64,
    pub failed_runs: usize,
}

/// Runs records and report rows of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub records: Vec<RunRecord>,
    pub rows: Vec<ReportRow>,
}

/// Runs every algorithm on the configured built-in functions.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Experiment> {
    let problems: Vec<Problem> = cfg.functions.iter().map(|&id| Problem::builtin(id)).collect();
    run_experiment_on(cfg, &problems)
}

/// Runs every algorithm on the given problems. Results do not depend on `jobs`.
pub fn run_experiment_on(cfg: &ExperimentConfig, problems: &[Problem]) -> Result<Experiment> {
    cfg.validate()?;
    let mut tasks = Vec::new();
    for &algorithm in &cfg.algorithms {
        for (pi, _) in problems.iter().enumerate() {
            for run_index in 0..cfg.runs {
                tasks.push((algorithm, pi, run_index));
            }
        }
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cfg.jobs {
        builder = builder.num_threads(jobs);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
    let records: Vec<RunRecord> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(algorithm, pi, run_index)| execute(cfg, algorithm, &problems[pi], cfg.base_seed + run_index as u64))
            .collect()
    });

    let mut rows = Vec::new();
    for &algorithm in &cfg.algorithms {
        for problem in problems {
            rows.push(aggregate(cfg, algorithm, problem, &records));
        }
    }
    Ok(Experiment { records, rows })
}

fn execute(cfg: &ExperimentConfig, algorithm: Algorithm, problem: &Problem, seed: u64) -> RunRecord {
    let solver = AlgoConfig {
        seed,
        ..cfg.solver.clone()
    };
    let mut record = RunRecord {
        algorithm,
        function: problem.spec.id().to_string(),
        seed,
        evaluations_used: 0,
        niche_heads: Vec::new(),
        peaks_found: Vec::new(),
        peak_ratio: None,
        error: None,
    };
    let outcome = match run(algorithm, &problem.spec, &solver) {
        Ok(o) => o,
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    record.evaluations_used = outcome.evaluations;
    let mut heads = outcome.heads;
    if cfg.post_optimize {
        match post_optimize(cfg, problem, &heads) {
            Ok(refined) => heads = refined,
            Err(e) => {
                record.error = Some(e.to_string());
                return record;
            }
        }
    }
    if let Some(registry) = &problem.registry {
        let score = score_run(&heads, registry, &cfg.accuracy_levels);
        record.peaks_found = cfg
            .accuracy_levels
            .iter()
            .zip(&score.found)
            .map(|(&accuracy, &found)| LevelCount { accuracy, found })
            .collect();
        record.peak_ratio = Some(score.peak_ratio);
    }
    record.niche_heads = heads;
    record
}

/// Refines every head with its own pattern-search budget, outside the run's budget.
fn post_optimize(cfg: &ExperimentConfig, problem: &Problem, heads: &[Solution]) -> Result<Vec<Solution>> {
    let spec = &problem.spec;
    let evals = cfg.post_optimize_evals_per_dim * spec.dimension() as u64;
    let ps = PatternSearchConfig {
        initial_step: 1e-3,
        ..PatternSearchConfig::with_max_evals(evals)
    };
    heads
        .iter()
        .map(|h| {
            let mut counter = EvalCounter::new(evals);
            pattern_search(spec, h, &ps, &mut counter)
        })
        .collect()
}

fn aggregate(cfg: &ExperimentConfig, algorithm: Algorithm, problem: &Problem, records: &[RunRecord]) -> ReportRow {
    let function = problem.spec.id().to_string();
    let mine: Vec<&RunRecord> = records
        .iter()
        .filter(|r| r.algorithm == algorithm && r.function == function)
        .collect();
    let ok: Vec<&RunRecord> = mine.iter().copied().filter(|r| r.error.is_none()).collect();
    let failed_runs = mine.len() - ok.len();
    let evals_mean = if ok.is_empty() {
        0.0
    } else {
        ok.iter().map(|r| r.evaluations_used as f64).sum::<f64>() / ok.len() as f64
    };

    let mut row = ReportRow {
        algorithm,
        function: function.clone(),
        pr_mean: None,
        pr_std: None,
        pr_at: vec![None; cfg.accuracy_levels.len()],
        wilcoxon_mark: String::new(),
        evals_mean,
        failed_runs,
    };
    let Some(registry) = &problem.registry else {
        return row;
    };
    if ok.is_empty() {
        return row;
    }
    let prs: Vec<f64> = ok.iter().filter_map(|r| r.peak_ratio).collect();
    let (mean, std) = mean_std(&prs);
    row.pr_mean = Some(mean);
    row.pr_std = Some(std);
    for (level, slot) in row.pr_at.iter_mut().enumerate() {
        let found: Vec<usize> = ok.iter().map(|r| r.peaks_found[level].found).collect();
        *slot = peak_ratio(&found, registry.len()).ok();
    }

    row.wilcoxon_mark = if algorithm == cfg.reference {
        "reference".to_string()
    } else if !cfg.algorithms.contains(&cfg.reference) || failed_runs > 0 {
        String::new()
    } else {
        let reference: Vec<&RunRecord> = records
            .iter()
            .filter(|r| r.algorithm == cfg.reference && r.function == function)
            .collect();
        if reference.iter().any(|r| r.error.is_some()) {
            String::new()
        } else {
            let a: Vec<f64> = mine.iter().map(|r| r.peak_ratio.unwrap_or(0.0)).collect();
            let b: Vec<f64> = reference.iter().map(|r| r.peak_ratio.unwrap_or(0.0)).collect();
            match wilcoxon_signed_rank(&a, &b, cfg.alpha) {
                Ok(w) => verdict_mark(w.verdict).to_string(),
                Err(_) => String::new(),
            }
        }
    };
    row
}

pub fn verdict_mark(v: Verdict) -> &'static str {
    match v {
        Verdict::Better => "better",
        Verdict::Worse => "worse",
        Verdict::Similar => "similar",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(algorithms: Vec<Algorithm>, functions: Vec<FunctionId>, runs: usize) -> ExperimentConfig {
        ExperimentConfig {
            algorithms,
            functions,
            runs,
            jobs: Some(2),
            solver: AlgoConfig {
                budget: 2_000,
                ..AlgoConfig::default()
            },
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn minimal_experiment() {
        let cfg = small(vec![Algorithm::TImPso], vec![FunctionId::F3], 2);
        let exp = run_experiment(&cfg).unwrap();
        assert_eq!(exp.rows.len(), 1);
        assert_eq!(exp.records.len(), 2);
        let pr = exp.rows[0].pr_mean.unwrap();
        assert!((0.0..=1.0).contains(&pr));
        assert_eq!(exp.rows[0].wilcoxon_mark, "reference");
    }

    #[test]
    fn results_do_not_depend_on_worker_count() {
        let mut cfg = small(vec![Algorithm::TImPso, Algorithm::KPso], vec![FunctionId::F2], 3);
        let a = run_experiment(&cfg).unwrap();
        cfg.jobs = Some(1);
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(!a.rows[1].wilcoxon_mark.is_empty());
    }

    #[test]
    fn level_ratios_do_not_increase_with_accuracy() {
        let cfg = small(vec![Algorithm::EdhcPso], vec![FunctionId::F4], 3);
        let exp = run_experiment(&cfg).unwrap();
        let prs: Vec<f64> = exp.rows[0].pr_at.iter().map(|p| p.unwrap()).collect();
        assert!(prs.windows(2).all(|w| w[0] >= w[1]), "{prs:?}");
    }

    #[test]
    fn config_validation() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.accuracy_levels = vec![1e-2, 1e-1];
        assert!(cfg.validate().is_err());
        cfg = ExperimentConfig {
            runs: 0,
            ..ExperimentConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
