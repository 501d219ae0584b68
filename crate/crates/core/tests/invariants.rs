use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use timpso::clustering::{kmeans_traced, silhouette};
use timpso::harness::{score_run, wilcoxon_signed_rank, Verdict, DEFAULT_ACCURACY_LEVELS};
use timpso::localsearch::{pattern_search, PatternSearchConfig};
use timpso::niching::{run, sub_cluster, AlgoConfig, Algorithm, SubClusterParams};
use timpso::objective::{builtin, count_peaks_found, peak_registry, EvalCounter, FunctionId, Solution};
use timpso::swarm::Particle;

fn function() -> impl Strategy<Value = FunctionId> {
    (0usize..10).prop_map(|i| FunctionId::ALL[i])
}

fn unit_points(max: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-5.0..5.0f64, 2), 4..max)
}

fn point_in(id: FunctionId, u: &[f64]) -> Vec<f64> {
    let spec = builtin(id);
    (0..spec.dimension())
        .map(|d| spec.lower()[d] + u[d % u.len()] * (spec.upper()[d] - spec.lower()[d]))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kmeans_keeps_the_best_restart(points in unit_points(24), k in 2usize..4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (model, traces) = kmeans_traced(&points, k, 5, &mut rng).unwrap();
        for t in &traces {
            prop_assert!(t.windows(2).all(|w| w[1] <= w[0] + 1e-9));
            prop_assert!(model.wcss <= t.last().copied().unwrap() + 1e-9);
        }
        let s = silhouette(&points, &model.labels).unwrap();
        prop_assert!((-1.0..=1.0).contains(&s));
    }

    #[test]
    fn peak_counts_grow_with_looser_accuracy_and_more_candidates(
        id in function(),
        us in prop::collection::vec(prop::collection::vec(0.0..1.0f64, 3), 1..12),
        extra in prop::collection::vec(0.0..1.0f64, 3),
    ) {
        let spec = builtin(id);
        let registry = peak_registry(id);
        let mut cands: Vec<Solution> = us.iter().map(|u| {
            let x = point_in(id, u);
            let f = spec.fitness_unbudgeted(&x);
            Solution::new(x, f)
        }).collect();
        // Mix in the true peaks, nudged, so counts are not all zero.
        for p in registry.peaks().iter().take(us.len()) {
            let x: Vec<f64> = p.position.iter().map(|v| v + 1e-4 * extra[0]).collect();
            let mut x = x;
            spec.clamp(&mut x);
            let f = spec.fitness_unbudgeted(&x);
            cands.push(Solution::new(x, f));
        }
        let counts: Vec<usize> = DEFAULT_ACCURACY_LEVELS.iter().map(|&a| count_peaks_found(&cands, &registry, a)).collect();
        prop_assert!(counts.windows(2).all(|w| w[0] >= w[1]));
        let x = point_in(id, &extra);
        let f = spec.fitness_unbudgeted(&x);
        let mut more = cands.clone();
        more.push(Solution::new(x, f));
        for &a in &DEFAULT_ACCURACY_LEVELS {
            prop_assert!(count_peaks_found(&more, &registry, a) >= count_peaks_found(&cands, &registry, a));
        }
        let score = score_run(&cands, &registry, &DEFAULT_ACCURACY_LEVELS);
        prop_assert!((0.0..=1.0).contains(&score.peak_ratio));
    }

    #[test]
    fn wilcoxon_is_antisymmetric(
        a in prop::collection::vec(0.0..1.0f64, 5..40),
        shift in -0.5..0.5f64,
        noise in prop::collection::vec(-0.2..0.2f64, 40),
    ) {
        let b: Vec<f64> = a.iter().zip(&noise).map(|(x, e)| x + shift + e).collect();
        let ab = wilcoxon_signed_rank(&a, &b, 0.05);
        let ba = wilcoxon_signed_rank(&b, &a, 0.05);
        match (ab, ba) {
            (Ok(ab), Ok(ba)) => {
                let flipped = match ab.verdict {
                    Verdict::Better => Verdict::Worse,
                    Verdict::Worse => Verdict::Better,
                    Verdict::Similar => Verdict::Similar,
                };
                prop_assert_eq!(ba.verdict, flipped);
                prop_assert!((ab.p_value - ba.p_value).abs() < 1e-12);
                prop_assert_eq!(ab.w, -ba.w);
            }
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "one direction failed"),
        }
    }

    #[test]
    fn pattern_search_never_worsens_and_stays_feasible(
        id in function(),
        u in prop::collection::vec(0.0..1.0f64, 3),
        cap in 1u64..300,
        budget in 0u64..300,
    ) {
        let spec = builtin(id);
        let x = point_in(id, &u);
        let start = Solution::new(x.clone(), spec.fitness_unbudgeted(&x));
        let mut counter = EvalCounter::new(budget);
        let out = pattern_search(&spec, &start, &PatternSearchConfig::with_max_evals(cap), &mut counter).unwrap();
        prop_assert!(out.fitness >= start.fitness);
        prop_assert!(spec.contains(&out.position));
        prop_assert!(counter.used() <= cap.min(budget));
        prop_assert_eq!(out.fitness, spec.fitness_unbudgeted(&out.position));
    }

    #[test]
    fn sub_clustering_conserves_particles(
        id in prop::sample::select(vec![FunctionId::F2, FunctionId::F4, FunctionId::F6, FunctionId::F10]),
        us in prop::collection::vec(prop::collection::vec(0.0..1.0f64, 2), 1..16),
        eps in 0.0..5.0f64,
        seed in any::<u64>(),
    ) {
        let spec = builtin(id);
        let particles: Vec<Particle> = us.iter().map(|u| {
            let x = point_in(id, u);
            let f = spec.fitness_unbudgeted(&x);
            Particle::new(x, vec![0.0; spec.dimension()], f)
        }).collect();
        let n = particles.len();
        let params = SubClusterParams { eps, hill_valley: Default::default(), local_search: None };
        let mut counter = EvalCounter::new(100_000);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let out = sub_cluster(particles, &spec, &params, &mut counter, &mut rng).unwrap();
        prop_assert!(!out.niches.is_empty() && out.niches.len() <= n);
        prop_assert_eq!(out.niches.iter().map(|c| c.members.len()).sum::<usize>(), n);
        for niche in &out.niches {
            for m in &niche.members {
                prop_assert!(spec.contains(&m.position));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn drivers_are_deterministic(
        algo in (0usize..Algorithm::ALL.len()).prop_map(|i| Algorithm::ALL[i]),
        id in function(),
        seed in any::<u64>(),
        population in 2usize..30,
        budget in 30u64..3000,
    ) {
        let spec = builtin(id);
        let cfg = AlgoConfig { population, budget: budget.max(population as u64), seed, ..AlgoConfig::default() };
        let a = run(algo, &spec, &cfg).unwrap();
        let b = run(algo, &spec, &cfg).unwrap();
        prop_assert!(a.evaluations <= cfg.budget);
        prop_assert_eq!(a.heads, b.heads);
        prop_assert_eq!(a.evaluations, b.evaluations);
        prop_assert_eq!(a.iterations, b.iterations);
    }
}

#[test]
fn one_basin_input_gives_one_niche() {
    let spec = builtin(FunctionId::F4);
    // All points sit on the upper-right Himmelblau hill around (3, 2).
    let pts = [[3.0, 2.0], [3.1, 2.1], [2.9, 1.8], [3.2, 1.9], [2.8, 2.2]];
    let particles: Vec<Particle> = pts
        .iter()
        .map(|p| Particle::new(p.to_vec(), vec![0.0, 0.0], spec.fitness_unbudgeted(p)))
        .collect();
    let params = SubClusterParams {
        eps: 1e9,
        hill_valley: Default::default(),
        local_search: None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let out = sub_cluster(particles, &spec, &params, &mut EvalCounter::new(10_000), &mut rng).unwrap();
    assert_eq!(out.niches.len(), 1);
}
