// The oracles index explicitly, like the textbook sums.
#![allow(clippy::needless_range_loop)]

use std::f64::consts::PI;

use cepstra_core::gmm::{
    e_step, gaussian_logpdf, gmm_logpdf, kmeans_init, train_em, variance_floor, EmConfig, GmmModel,
};
use cepstra_core::seed;
use cepstra_core::synth::gaussian;
use cepstra_core::Matrix;
use proptest::prelude::*;
use rand::Rng;

/// Two spherical 2-d clusters, 5σ apart, with proportions 0.3 / 0.7.
fn two_clusters(n: usize, s: u64) -> (Matrix, Vec<usize>) {
    let mut rng = seed::rng(s);
    let mut labels = Vec::with_capacity(n);
    let rows: Vec<[f64; 2]> = (0..n)
        .map(|_| {
            let c = usize::from(rng.gen::<f64>() >= 0.3);
            labels.push(c);
            let centre = if c == 0 { [0.0, 0.0] } else { [5.0, 0.0] };
            [centre[0] + gaussian(&mut rng), centre[1] + gaussian(&mut rng)]
        })
        .collect();
    (Matrix::from_rows(2, rows).unwrap(), labels)
}

fn random_model(k: usize, d: usize, s: u64) -> GmmModel {
    let mut rng = seed::rng(s);
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let means = Matrix::from_vec(k, d, (0..k * d).map(|_| rng.gen_range(-3.0..3.0)).collect()).unwrap();
    let vars = Matrix::from_vec(k, d, (0..k * d).map(|_| rng.gen_range(0.2..3.0)).collect()).unwrap();
    GmmModel::new(raw.iter().map(|w| w / total).collect(), means, vars).unwrap()
}

#[test]
fn gaussian_logpdf_matches_direct_formula() {
    let mut rng = seed::rng(11);
    for _ in 0..500 {
        let d = rng.gen_range(1..8);
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let mu: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let var: Vec<f64> = (0..d).map(|_| rng.gen_range(0.3..3.0)).collect();
        let det: f64 = var.iter().product();
        let quad: f64 = (0..d).map(|i| (x[i] - mu[i]).powi(2) / var[i]).sum();
        let direct = (-0.5 * quad).exp() / ((2.0 * PI).powf(d as f64 / 2.0) * det.sqrt());
        let got = gaussian_logpdf(&x, &mu, &var).unwrap().exp();
        assert!((got - direct).abs() <= 1e-12 * direct);
    }
}

#[test]
fn mixture_matches_linear_domain_sum() {
    let mut rng = seed::rng(12);
    for s in 0..50 {
        let m = random_model(4, 3, s);
        let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let linear: f64 = (0..4)
            .map(|k| m.weights()[k] * gaussian_logpdf(&x, m.means().row(k), m.variances().row(k)).unwrap().exp())
            .sum();
        let got = gmm_logpdf(&m, &x).unwrap().exp();
        assert!((got - linear).abs() <= 1e-10 * linear);
    }
}

#[test]
fn two_cluster_recovery() {
    let (data, _) = two_clusters(2000, 1);
    let cfg = EmConfig { components: 2, seed: 3, ..EmConfig::default() };
    let (m, report) = train_em(&data, &cfg).unwrap();
    assert!(report.converged);
    let order: Vec<usize> = if m.means().get(0, 0) < m.means().get(1, 0) { vec![0, 1] } else { vec![1, 0] };
    let truth = [([0.0, 0.0], 0.3), ([5.0, 0.0], 0.7)];
    for (k, (centre, weight)) in order.iter().zip(truth) {
        for j in 0..2 {
            assert!((m.means().get(*k, j) - centre[j]).abs() < 0.1, "{:?}", m.means());
        }
        assert!((m.weights()[*k] - weight).abs() < 0.05);
    }
}

#[test]
fn kmeans_assignment_accuracy() {
    let (data, labels) = two_clusters(1000, 2);
    let floor = variance_floor(&data, 1e-4);
    let m = kmeans_init(&data, 2, 5, &floor).unwrap();
    let left = usize::from(m.means().get(0, 0) > m.means().get(1, 0));
    let correct = data
        .iter_rows()
        .zip(&labels)
        .filter(|(x, &l)| {
            let d: Vec<f64> = (0..2).map(|k| (0..2).map(|j| (x[j] - m.means().get(k, j)).powi(2)).sum()).collect();
            let nearest = usize::from(d[1] < d[0]);
            (nearest == left) == (l == 0)
        })
        .count();
    assert!(correct as f64 / 1000.0 >= 0.95, "{correct}");
}

#[test]
fn own_data_scores_higher() {
    let (a, _) = two_clusters(400, 7);
    let mut b = a.clone();
    b.map_inplace(|v| -2.0 * v + 1.0);
    let cfg = EmConfig { components: 4, seed: 1, ..EmConfig::default() };
    let (ma, _) = train_em(&a, &cfg).unwrap();
    let (mb, _) = train_em(&b, &cfg).unwrap();
    use cepstra_core::gmm::score_utterance;
    assert!(score_utterance(&ma, &a).unwrap() > score_utterance(&ma, &b).unwrap());
    assert!(score_utterance(&mb, &b).unwrap() > score_utterance(&mb, &a).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn em_is_monotone_and_normalized(d in 1usize..=8, k in 1usize..=8, s in any::<u64>()) {
        let mut rng = seed::rng(s);
        let n = 10 * k + rng.gen_range(0..200);
        let centres: Vec<f64> = (0..3 * d).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let data = Matrix::from_vec(n, d, (0..n * d).map(|i| {
            let c = (i / d) % 3;
            centres[c * d + i % d] + gaussian(&mut rng)
        }).collect()).unwrap();
        let cfg = EmConfig { components: k, seed: s, ..EmConfig::default() };
        let (m, report) = train_em(&data, &cfg).unwrap();
        for w in report.log_likelihood.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-8, "{:?}", report.log_likelihood);
        }
        prop_assert!((m.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let floor = variance_floor(&data, cfg.var_floor);
        for row in m.variances().iter_rows() {
            for (v, f) in row.iter().zip(&floor) {
                prop_assert!(v >= f);
            }
        }
        let resp = e_step(&m, &data).unwrap();
        for g in resp.gamma.iter_rows() {
            prop_assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
