use npef_core::ergm::*;
use npef_core::graph::*;
use npef_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stats of every labeled graph on `n` nodes, recounted from scratch.
fn naive_stats(n: usize) -> Vec<(f64, f64)> {
    let dyads = dyad_list(n);
    (0u64..(1 << dyads.len()))
        .map(|mask| {
            let on = |a: usize, b: usize| {
                let k = dyads.iter().position(|&d| d == (a.min(b), a.max(b))).unwrap();
                mask >> k & 1 == 1
            };
            let mut t = 0;
            for a in 0..n {
                for b in a + 1..n {
                    for c in b + 1..n {
                        if on(a, b) && on(a, c) && on(b, c) {
                            t += 1;
                        }
                    }
                }
            }
            (mask.count_ones() as f64, t as f64)
        })
        .collect()
}

fn tv(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[test]
fn log_partition_matches_naive_sum() {
    let h5 = enumerate_feature_histogram(5).unwrap();
    let m = ErgmModel::ergm(5, [0.1, -0.2], [1.0, 1.0]);
    let naive: f64 = naive_stats(5).iter().map(|(e, t)| (0.1 * e - 0.2 * t).exp()).sum::<f64>().ln();
    assert!((exact_log_partition(&m, &h5).unwrap() - naive).abs() < 1e-12);
}

#[test]
fn ergm_fit_matches_naive_newton() {
    let h5 = enumerate_feature_histogram(5).unwrap();
    let obs = GraphStats::new(5, 2);
    let fit = exact_fit_ergm(obs, &h5, 1e-12).unwrap();
    let scale = [1.0 / 5.0, 1.0 / 2.0];
    let all: Vec<(f64, f64)> = naive_stats(5).iter().map(|(e, t)| (e * scale[0], t * scale[1])).collect();
    let mut th = [0.0f64; 2];
    for _ in 0..100 {
        let w: Vec<f64> = all.iter().map(|(a, b)| (th[0] * a + th[1] * b).exp()).collect();
        let z: f64 = w.iter().sum();
        let m0 = all.iter().zip(&w).map(|((a, _), w)| a * w).sum::<f64>() / z;
        let m1 = all.iter().zip(&w).map(|((_, b), w)| b * w).sum::<f64>() / z;
        let c00 = all.iter().zip(&w).map(|((a, _), w)| (a - m0) * (a - m0) * w).sum::<f64>() / z;
        let c01 = all.iter().zip(&w).map(|((a, b), w)| (a - m0) * (b - m1) * w).sum::<f64>() / z;
        let c11 = all.iter().zip(&w).map(|((_, b), w)| (b - m1) * (b - m1) * w).sum::<f64>() / z;
        let (g0, g1) = (1.0 - m0, 1.0 - m1);
        let det = c00 * c11 - c01 * c01;
        th[0] += (c11 * g0 - c01 * g1) / det;
        th[1] += (c00 * g1 - c01 * g0) / det;
    }
    assert!((fit.lambda[0] - th[0]).abs() < 1e-6 && (fit.lambda[1] - th[1]).abs() < 1e-6, "{:?} {th:?}", fit.lambda);
}

#[test]
fn masses_sum_to_one() {
    let h6 = enumerate_feature_histogram(6).unwrap();
    let mut m = ErgmModel::nergm(6, GraphStats::new(8, 3), 2.0, 0.1).unwrap();
    m.lambda = [-3.0, 2.5];
    m.augmented.as_mut().unwrap().lambda_a = 1.7;
    assert!((exact_mass(&m, &h6).unwrap().total() - 1.0).abs() < 1e-12);
    let e = ErgmModel::ergm(6, [40.0, -90.0], [1.0, 1.0]);
    assert!((exact_mass(&e, &h6).unwrap().total() - 1.0).abs() < 1e-12);
}

#[test]
fn nergm_kkt_on_small_graphs() {
    let h6 = enumerate_feature_histogram(6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut fitted = 0;
    while fitted < 5 {
        let g = Graph::random(6, 0.5, &mut rng);
        let s = stats(&g);
        if check_interior(&h6, s.as_f64()).is_err() {
            continue;
        }
        for beta in [0.0, 0.05, 0.3] {
            let m = match exact_fit_nergm(&g, &h6, 2.0, beta, 1e-10) {
                Ok(m) => m,
                Err(Error::BoundaryStatistics(_)) if beta == 0.0 => continue,
                Err(e) => panic!("{e}"),
            };
            let mass = exact_mass(&m, &h6).unwrap();
            let aug = m.augmented.unwrap();
            let f_obs = m.features(s);
            let mut mean = [0.0; 3];
            for (c, p) in &mass.cells {
                let f = m.features(*c);
                for k in 0..3 {
                    mean[k] += p * f[k];
                }
            }
            assert!((mean[0] - f_obs[0]).abs() < 1e-8 && (mean[1] - f_obs[1]).abs() < 1e-8);
            let gap = f_obs[2] - mean[2];
            if aug.lambda_a == 0.0 {
                assert!(gap.abs() <= beta + 1e-8);
            } else {
                assert!((gap - beta * aug.lambda_a.signum()).abs() < 1e-8);
            }
        }
        fitted += 1;
    }
}

#[test]
fn gibbs_matches_exact_cell_mass() {
    let h5 = enumerate_feature_histogram(5).unwrap();
    let mut m = ErgmModel::nergm(5, GraphStats::new(6, 2), 2.0, 0.1).unwrap();
    m.lambda = [-0.5, 0.4];
    m.augmented.as_mut().unwrap().lambda_a = 1.2;
    let exact = exact_mass(&m, &h5).unwrap();
    let cfg = ChainConfig { init: ChainInit::Empty, thinning: 10, num_samples: 50_000, seed: 9, ..Default::default() };
    let (draws, diag) = gibbs_sample(&m, None, &cfg).unwrap();
    assert!(diag.unique_graphs >= diag.unique_feature_tuples && diag.max_hops <= 10);
    let emp: Vec<f64> = exact
        .cells
        .iter()
        .map(|(s, _)| draws.iter().filter(|g| stats(g) == *s).count() as f64 / draws.len() as f64)
        .collect();
    let p: Vec<f64> = exact.cells.iter().map(|c| c.1).collect();
    assert!(tv(&emp, &p) <= 0.03, "{}", tv(&emp, &p));
}

#[test]
fn gibbs_stationary_over_all_graphs() {
    let h4 = enumerate_feature_histogram(4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let m = ErgmModel::ergm(4, [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)], [1.0, 1.0]);
    let lz = exact_log_partition(&m, &h4).unwrap();
    let dyads = dyad_list(4);
    let mut exact = vec![0.0; 64];
    for (mask, p) in exact.iter_mut().enumerate() {
        let edges: Vec<_> = dyads.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, d)| *d).collect();
        *p = (m.log_weight(stats(&Graph::from_edges(4, &edges).unwrap())) - lz).exp();
    }
    let mut chain = GibbsChain::new(&m, Graph::new(4)).unwrap();
    let mut counts = vec![0.0; 64];
    let steps = 1_000_000;
    for _ in 0..steps {
        chain.step(&mut rng);
        let g = chain.graph();
        let mask: usize = dyads.iter().enumerate().map(|(k, &(i, j))| (g.has_edge(i, j) as usize) << k).sum();
        counts[mask] += 1.0 / steps as f64;
    }
    assert!(tv(&counts, &exact) <= 0.02, "{}", tv(&counts, &exact));
}

#[test]
fn gof_coverage_calibration() {
    let mut covered = 0usize;
    let mut total = 0usize;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples: Vec<Graph> = (0..100).map(|_| Graph::random(6, 0.5, &mut rng)).collect();
        let rows = gof_compare(&samples[0], &samples).unwrap();
        covered += rows.iter().filter(|r| r.covered).count();
        total += rows.len();
    }
    assert!(covered as f64 >= 0.8 * total as f64, "{covered}/{total}");
}

#[test]
fn mcmcmle_stays_near_exact_ergm_on_small_graph() {
    let h6 = enumerate_feature_histogram(6).unwrap();
    let g = Graph::from_edges(6, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3), (3, 4), (4, 5), (5, 0)]).unwrap();
    let exact = exact_fit_ergm(stats(&g), &h6, 1e-10).unwrap();
    let tmpl = ErgmModel::ergm(6, [0.0; 2], observed_scale(stats(&g)));
    let cfg = ChainConfig { num_samples: 10_000, thinning: 20, seed: 2, ..Default::default() };
    let opts = MleOptions { steps: 1000, step_size: 2.0, average_tail: 0.5 };
    let (m, rep) = mcmcmle_fit(&g, &tmpl, &cfg, &opts).unwrap();
    assert!(rep.resamples >= 1);
    for k in 0..2 {
        assert!((m.lambda[k] - exact.lambda[k]).abs() < 0.25, "{:?} vs {:?}", m.lambda, exact.lambda);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn nergm_objective_is_midpoint_concave(
        a in prop::array::uniform3(-5.0f64..5.0),
        b in prop::array::uniform3(-5.0f64..5.0),
    ) {
        let h6 = enumerate_feature_histogram(6).unwrap();
        let obs = GraphStats::new(8, 3);
        let at = |th: [f64; 3]| {
            let mut m = ErgmModel::nergm(6, obs, 3.0, 0.2).unwrap();
            m.lambda = [th[0], th[1]];
            m.augmented.as_mut().unwrap().lambda_a = th[2];
            exact_log_likelihood(&m, obs, &h6).unwrap()
        };
        let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0, (a[2] + b[2]) / 2.0];
        prop_assert!(at(mid) >= 0.5 * (at(a) + at(b)) - 1e-9);
    }

    #[test]
    fn diagnostics_sanity(seed in any::<u64>(), n in 2usize..9, le in -2.0f64..2.0, lt in -1.0f64..1.0) {
        let m = ErgmModel::ergm(n, [le, lt], [1.0, 1.0]);
        let cfg = ChainConfig { init: ChainInit::Random(0.3), thinning: 5, num_samples: 30, seed, ..Default::default() };
        let (draws, d) = gibbs_sample(&m, None, &cfg).unwrap();
        prop_assert_eq!(draws.len(), 30);
        prop_assert!(d.unique_graphs >= d.unique_feature_tuples && d.unique_feature_tuples >= 1);
        prop_assert!(d.max_hops <= n * (n - 1) / 2);
    }
}

#[test]
fn mcmcmle_divergence_is_reported() {
    let g = Graph::from_edges(6, &[(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5), (1, 4), (0, 5)]).unwrap();
    let tmpl = ErgmModel::ergm(6, [0.0; 2], [1.0, 1.0]);
    let cfg = ChainConfig { num_samples: 200, thinning: 5, ..Default::default() };
    let opts = MleOptions { steps: 2000, step_size: 50.0, average_tail: 0.0 };
    assert!(mcmcmle_fit(&g, &tmpl, &cfg, &opts).is_err());
}
