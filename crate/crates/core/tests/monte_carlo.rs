use covsteer::instances::{random_instance_with_policy, RandomSpec};
use covsteer::scenarios::{example1, uav};
use covsteer::{
    expected_cost, propagate_statistics, simulate_batch, solve_exact_cs, solve_relaxed_cs, summarize,
    validate_terminal, AffinePolicy, NoiseFamily, ProblemInstance, RandomizedAffinePolicy, SimulationConfig,
    SteeringMode, SteeringSettings, ValidationSettings,
};
use nalgebra::DMatrix;

fn small(seed: u64, mode: SteeringMode, n: usize, m: usize, horizon: usize, channels: usize) -> (ProblemInstance, RandomizedAffinePolicy) {
    let spec = RandomSpec {
        n,
        m,
        horizon,
        channels,
        mode,
        no_input_noise: false,
    };
    let (inst, base) = random_instance_with_policy(&spec, seed);
    (inst, RandomizedAffinePolicy::deterministic(base))
}

fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn example1_randomized_policy_hits_target() {
    let inst = example1().unwrap();
    let sol = solve_exact_cs(&inst, &SteeringSettings::default()).unwrap();
    let cfg = SimulationConfig::new(1_000_000, 2024, NoiseFamily::GaussianUnit);
    let sum = summarize(&inst, &sol.policy, &cfg).unwrap();
    let err = (&sum.statistics.covariance[1] - inst.boundary().sigmad()).norm();
    assert!(err <= 2e-2, "{err}");
}

#[test]
fn random_instance_covariance_and_cost_match_moments() {
    for seed in 0..3 {
        let (inst, pol) = small(seed, SteeringMode::Relaxed, 2, 1, 3, 2);
        let stats = propagate_statistics(&inst, &pol).unwrap();
        let sum = summarize(&inst, &pol, &SimulationConfig::new(1_000_000, seed, NoiseFamily::GaussianUnit)).unwrap();
        for k in 1..=3 {
            let r = rel(&sum.statistics.covariance[k], &stats.sigma[k]);
            assert!(r <= 0.01, "seed {seed} k {k}: {r}");
        }
        let cost = expected_cost(&inst, &stats, &pol).unwrap();
        assert!((sum.cost.mean - cost).abs() <= 0.01 * cost);
        assert!((sum.cost.mean - cost).abs() <= 3.0 * sum.cost.standard_error, "seed {seed}");
    }
}

#[test]
fn additive_only_statistics_converge() {
    let (inst, pol) = small(7, SteeringMode::Relaxed, 3, 2, 4, 0);
    let stats = propagate_statistics(&inst, &pol).unwrap();
    let sum = summarize(&inst, &pol, &SimulationConfig::new(1_000_000, 7, NoiseFamily::GaussianUnit)).unwrap();
    for k in 0..=4 {
        assert!(rel(&sum.statistics.covariance[k], &stats.sigma[k]) <= 5e-3, "k {k}");
    }
}

#[test]
fn sampling_error_shrinks_like_inverse_root() {
    let (inst, pol) = small(3, SteeringMode::Relaxed, 2, 1, 3, 2);
    let stats = propagate_statistics(&inst, &pol).unwrap();
    let err = |s: usize, seed: u64| {
        let sum = summarize(&inst, &pol, &SimulationConfig::new(s, seed, NoiseFamily::GaussianUnit)).unwrap();
        (&sum.statistics.covariance[3] - &stats.sigma[3]).norm()
    };
    // Root-mean-square error over independent repetitions, so the ratio is
    // not at the mercy of a single draw.
    let rms = |s: usize, reps: u64| ((0..reps).map(|r| err(s, 100 + r).powi(2)).sum::<f64>() / reps as f64).sqrt();
    let ratio = rms(10_000, 40) / rms(1_000_000, 4);
    assert!((5.0..=20.0).contains(&ratio), "{ratio}");
}

#[test]
fn moments_do_not_depend_on_noise_family() {
    let (inst, pol) = small(11, SteeringMode::Relaxed, 2, 2, 4, 2);
    let stats = propagate_statistics(&inst, &pol).unwrap();
    let s = 100_000;
    for family in NoiseFamily::UNIT_VARIANCE {
        let mut cfg = SimulationConfig::new(s, 5, family);
        cfg.additive = family;
        cfg.initial = family;
        let sum = summarize(&inst, &pol, &cfg).unwrap();
        for k in 0..=4 {
            let err = (&sum.statistics.covariance[k] - &stats.sigma[k]).norm();
            let budget = 5.0 * stats.sigma[k].norm() / (s as f64).sqrt();
            assert!(err <= budget, "{family} k {k}: {err} > {budget}");
        }
    }
}

#[test]
fn randomization_is_uncorrelated_with_past_states() {
    let (inst, base) = small(2, SteeringMode::Relaxed, 2, 2, 3, 1);
    let p = vec![DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.3]); 3];
    let pol = RandomizedAffinePolicy::new(base.base().clone(), p).unwrap();
    let s = 50_000;
    let batch = simulate_batch(&inst, &pol, &SimulationConfig::new(s, 9, NoiseFamily::ThreePoint));
    let sf = s as f64;
    let bound = 5.0 / sf.sqrt();
    for k in 0..3 {
        for l in 0..=k {
            for a in 0..2 {
                for b in 0..2 {
                    let v: Vec<f64> = batch.trajectories.iter().map(|t| t.randomization[k][a]).collect();
                    let x: Vec<f64> = batch.trajectories.iter().map(|t| t.states[l][b]).collect();
                    let (mv, mx) = (v.iter().sum::<f64>() / sf, x.iter().sum::<f64>() / sf);
                    let cov: f64 = v.iter().zip(&x).map(|(v, x)| (v - mv) * (x - mx)).sum::<f64>() / sf;
                    let sv = (v.iter().map(|v| (v - mv).powi(2)).sum::<f64>() / sf).sqrt();
                    let sx = (x.iter().map(|x| (x - mx).powi(2)).sum::<f64>() / sf).sqrt();
                    let corr = cov / (sv * sx);
                    assert!(corr.abs() <= bound, "v[{k}][{a}] x[{l}][{b}]: {corr}");
                }
            }
        }
    }
}

#[test]
fn batches_do_not_depend_on_thread_count() {
    let (inst, pol) = small(4, SteeringMode::Relaxed, 3, 1, 5, 2);
    let cfg = SimulationConfig::new(5000, 77, NoiseFamily::UniformSqrt3);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| (simulate_batch(&inst, &pol, &cfg), summarize(&inst, &pol, &cfg).unwrap()))
    };
    let (b1, s1) = run(1);
    let (b4, s4) = run(4);
    assert_eq!(b1, b4);
    assert_eq!(s1, s4);
}

#[test]
fn uav_exact_policy_matches_target_for_every_family() {
    let inst = uav(SteeringMode::Exact).unwrap();
    let sol = solve_exact_cs(&inst, &SteeringSettings::default()).unwrap();
    for family in NoiseFamily::UNIT_VARIANCE {
        let batch = simulate_batch(&inst, &sol.policy, &SimulationConfig::new(10_000, 31, family));
        let sd = inst.boundary().sigmad();
        let sum = covsteer::estimate_statistics(&batch).unwrap();
        let r = rel(&sum.covariance[inst.horizon()], sd);
        assert!(r <= 0.05, "{family}: {r}");
        let report = validate_terminal(&batch, inst.boundary(), SteeringMode::Exact, &ValidationSettings::default()).unwrap();
        assert!(report.pass, "{family}: {report:?}");
    }
}

#[test]
fn uav_relaxed_policy_validates_and_unsteered_fails() {
    let inst = uav(SteeringMode::Relaxed).unwrap();
    let out = solve_relaxed_cs(&inst, &SteeringSettings::default()).unwrap();
    let cfg = SimulationConfig::new(10_000, 5, NoiseFamily::GaussianUnit);
    let settings = ValidationSettings::default();
    let batch = simulate_batch(&inst, &out.policy, &cfg);
    assert!(validate_terminal(&batch, inst.boundary(), SteeringMode::Relaxed, &settings).unwrap().pass);

    let zero = RandomizedAffinePolicy::deterministic(AffinePolicy::zero(4, 2, inst.horizon()));
    let batch = simulate_batch(&inst, &zero, &cfg);
    assert!(!validate_terminal(&batch, inst.boundary(), SteeringMode::Relaxed, &settings).unwrap().pass);
}
