use npef_core::expfam::StatisticSet;
use npef_core::kde::empirical_augmented_means;
use npef_core::kernel::KernelSpec;
use npef_core::npexp::*;
use npef_core::quadrature::Support;
use npef_core::sample::SampleSet;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mixture(n: usize, seed: u64) -> Vec<f64> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u: f64 = r.random::<f64>().max(1e-300);
            let v: f64 = r.random();
            let z = (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos();
            if r.random::<bool>() {
                z + 3.0
            } else {
                z - 3.0
            }
        })
        .collect()
}

fn small_model(lambda: Vec<f64>, lambda_a: Vec<f64>) -> (NpExpModel, SampleSet) {
    let sample = SampleSet::from_1d(&[-1.0, 1.0]).unwrap();
    let m = NpExpModel::new(
        StatisticSet::gaussian(1),
        Support::new(vec![-4.0], vec![4.0], 801).unwrap(),
        sample.clone(),
        KernelSpec::gaussian(0.8),
        lambda,
        lambda_a,
        vec![0.05, 0.05],
    )
    .unwrap();
    (m, sample)
}

#[test]
fn objective_matches_direct_recomputation() {
    let mut r = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let lambda = vec![r.random_range(-1.0..1.0), r.random_range(-1.0..-0.1)];
        let lambda_a = vec![r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)];
        let (m, sample) = small_model(lambda.clone(), lambda_a.clone());
        // Straight-line recomputation: composite Simpson over [-4, 4] with 801 nodes.
        let h = 8.0 / 800.0;
        let k =
            |c: f64, x: f64| (-(x - c) * (x - c) / (2.0 * 0.64)).exp() / (0.8 * (2.0 * std::f64::consts::PI).sqrt());
        let energy = |x: f64| lambda[0] * x + lambda[1] * x * x + lambda_a[0] * k(-1.0, x) + lambda_a[1] * k(1.0, x);
        let mut z = 0.0;
        for g in 0..=800 {
            let x = -4.0 + g as f64 * h;
            let w = if g == 0 || g == 800 {
                1.0
            } else if g % 2 == 1 {
                4.0
            } else {
                2.0
            };
            z += w * h / 3.0 * energy(x).exp();
        }
        let xs = [-1.0, 1.0];
        let mean_x = 0.0;
        let mean_x2 = 1.0;
        let ca: Vec<f64> = [-1.0, 1.0].iter().map(|c| xs.iter().map(|x| k(*c, *x)).sum::<f64>() / 2.0).collect();
        let direct = lambda[0] * mean_x + lambda[1] * mean_x2 + lambda_a[0] * ca[0] + lambda_a[1] * ca[1]
            - z.ln()
            - 0.05 * (lambda_a[0].abs() + lambda_a[1].abs());
        let got = penalized_loglik(&m, &sample).unwrap();
        assert!((got - direct).abs() <= 1e-10, "{got} vs {direct}");
    }
}

#[test]
fn zero_augmentation_matches_base_loglik() {
    let (m, sample) = small_model(vec![0.2, -0.7], vec![0.0, 0.0]);
    assert_eq!(penalized_loglik(&m, &sample).unwrap(), m.base.log_likelihood(&sample).unwrap());
    assert_eq!(nonzero_count(&m), 0);
}

#[test]
fn smooth_gradient_matches_finite_differences() {
    let pts = [-2.2, -1.4, -0.9, -0.3, 0.1, 0.4, 0.8, 1.5, 1.9, 2.6];
    let sample = SampleSet::from_1d(&pts).unwrap();
    let support = Support::new(vec![-5.0], vec![5.0], 1001).unwrap();
    let kernel = KernelSpec::gaussian(0.6);
    let mut r = ChaCha8Rng::seed_from_u64(3);
    let smooth = |l: &[f64], la: &[f64]| {
        let m = NpExpModel::new(
            StatisticSet::gaussian(1),
            support.clone(),
            sample.clone(),
            kernel,
            l.to_vec(),
            la.to_vec(),
            vec![0.0; 10],
        )
        .unwrap();
        penalized_loglik(&m, &sample).unwrap()
    };
    for _ in 0..5 {
        let l = vec![r.random_range(-0.5..0.5), r.random_range(-0.8..-0.1)];
        let la: Vec<f64> = (0..10).map(|_| r.random_range(-1.0..1.0)).collect();
        let m = NpExpModel::new(
            StatisticSet::gaussian(1),
            support.clone(),
            sample.clone(),
            kernel,
            l.clone(),
            la.clone(),
            vec![0.0; 10],
        )
        .unwrap();
        let (g, ga) = m.smooth_gradient(&sample).unwrap();
        let eps = 1e-5;
        for j in 0..12 {
            let (mut lp, mut lm, mut lap, mut lam) = (l.clone(), l.clone(), la.clone(), la.clone());
            if j < 2 {
                lp[j] += eps;
                lm[j] -= eps;
            } else {
                lap[j - 2] += eps;
                lam[j - 2] -= eps;
            }
            let fd = (smooth(&lp, &lap) - smooth(&lm, &lam)) / (2.0 * eps);
            let an = if j < 2 { g[j] } else { ga[j - 2] };
            assert!((fd - an).abs() <= 1e-5 * an.abs().max(1e-2), "coord {j}: {fd} vs {an}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]
    #[test]
    fn objective_is_midpoint_concave(
        l1 in prop::array::uniform4(-1.0f64..1.0),
        l2 in prop::array::uniform4(-1.0f64..1.0),
    ) {
        let theta = |v: [f64; 4]| (vec![v[0] * 0.5, -0.2 - v[1].abs()], vec![v[2] * 2.0, v[3] * 2.0]);
        let (a, b) = (theta(l1), theta(l2));
        let mid = (
            a.0.iter().zip(&b.0).map(|(x, y)| 0.5 * (x + y)).collect::<Vec<_>>(),
            a.1.iter().zip(&b.1).map(|(x, y)| 0.5 * (x + y)).collect::<Vec<_>>(),
        );
        let f = |t: &(Vec<f64>, Vec<f64>)| {
            let (m, s) = small_model(t.0.clone(), t.1.clone());
            penalized_loglik(&m, &s).unwrap()
        };
        prop_assert!(f(&mid) >= 0.5 * (f(&a) + f(&b)) - 1e-12);
    }
}

#[test]
fn target_moments_bind_to_target() {
    let sample = SampleSet::from_1d(&mixture(50, 11)).unwrap();
    let support = default_support(&sample, 3.0, 2001).unwrap();
    let stats = StatisticSet::gaussian(1);
    let tol = 1e-7;
    let problem = NpExpProblem::new(stats.clone(), support, KernelSpec::gaussian(1.0), BetaSchedule::inv_sqrt(0.5))
        .with_target(vec![0.0, 10.0]);
    let (m, _) = problem.fit(&sample, NpExpOptions::with_tol(tol)).unwrap();
    let (et, _) = m.expected_statistics().unwrap();
    assert!(et[0].abs() <= tol);
    assert!((et[1] - 10.0).abs() <= tol);
    let emp = stats.empirical_mean(&sample).unwrap();
    assert!((emp[1] - 10.0).abs() > 0.1, "empirical second moment should differ from the target");
}

#[test]
fn empirical_target_reproduces_plain_fit() {
    let sample = SampleSet::from_1d(&mixture(40, 5)).unwrap();
    let support = default_support(&sample, 3.0, 2001).unwrap();
    let stats = StatisticSet::gaussian(1);
    let kernel = KernelSpec::gaussian(1.0);
    let tol = 1e-8;
    let plain = fit(&sample, &stats, &support, &kernel, BetaSchedule::default(), tol).unwrap();
    let emp = stats.empirical_mean(&sample).unwrap();
    let targeted =
        fit_with_target_moments(&sample, &stats, &support, &kernel, BetaSchedule::default(), &emp, tol).unwrap();
    for x in [-4.0, -3.0, -1.0, 0.0, 2.0, 3.5] {
        let a = plain.log_density(&[x]).unwrap();
        let b = targeted.log_density(&[x]).unwrap();
        assert!((a - b).abs() < 1e-5, "{x}: {a} vs {b}");
    }
}

#[test]
fn fitted_models_satisfy_kkt_on_mixtures() {
    let tol = 1e-6;
    for seed in 0..5 {
        let sample = SampleSet::from_1d(&mixture(60, seed)).unwrap();
        let problem = NpExpProblem::new(
            StatisticSet::gaussian(1),
            default_support(&sample, 3.0, 2001).unwrap(),
            KernelSpec::gaussian(0.75),
            BetaSchedule::default(),
        );
        let (m, report) = problem.fit(&sample, NpExpOptions::with_tol(tol)).unwrap();
        for w in report.objective.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
        let (_, ea) = m.expected_statistics().unwrap();
        let c = empirical_augmented_means(&sample, &m.kernel).unwrap();
        for i in 0..sample.len() {
            assert!(kkt_violation(m.lambda_a[i], c[i] - ea[i], m.beta[i]) <= tol);
        }
    }
}

#[test]
fn huge_penalty_gives_no_augmentation() {
    let sample = SampleSet::from_1d(&mixture(30, 2)).unwrap();
    let problem = NpExpProblem::new(
        StatisticSet::gaussian(1),
        default_support(&sample, 3.0, 2001).unwrap(),
        KernelSpec::gaussian(0.5),
        BetaSchedule::constant(1e6),
    );
    let (m, _) = problem.fit(&sample, NpExpOptions::default()).unwrap();
    assert_eq!(nonzero_count(&m), 0);
}
