mod common;

use common::{random_instance, random_labeling, random_simplex, random_weights, rel_close, rng};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use volbias_core::energy::*;
use volbias_core::model::{Datum, GaussianModel, Model};
use volbias_core::optimize::Problem;

struct Sample {
    s: Labeling,
    models: Vec<Model>,
    data: Vec<Datum>,
    w: TargetWeights,
    outlier_cost: f64,
}

fn sample(r: &mut ChaCha8Rng) -> Sample {
    let n = r.random_range(1..60);
    let k = r.random_range(1..6);
    let models = (0..k).map(|_| Model::Gaussian(GaussianModel { mu: r.random_range(0.0..1.0), sigma: r.random_range(0.02..0.3) })).collect();
    let data = (0..n).map(|_| Datum::Gray(r.random_range(0.0..1.0))).collect();
    let outliers = r.random_bool(0.3);
    let mut s = random_labeling(r, n, k, outliers);
    if s.inlier_count() == 0 {
        s.set(0, 0);
    }
    Sample { s, models, data, w: random_weights(r, k), outlier_cost: r.random_range(0.0..3.0) }
}

/// Independent `-Σ v ln w`.
fn cross_entropy_oracle(v: &[f64], w: &[f64]) -> f64 {
    v.iter().zip(w).filter(|(p, _)| **p > 0.0).map(|(p, q)| -p * q.ln()).sum()
}

fn entropy_oracle(v: &[f64]) -> f64 {
    v.iter().filter(|p| **p > 0.0).map(|p| -p * p.ln()).sum()
}

#[test]
fn weighted_term_identity() {
    let mut r = rng(1);
    for _ in 0..100 {
        let t = sample(&mut r);
        let d = data_term(&t.s, &t.models, &t.data, t.outlier_cost).unwrap();
        let dw = weighted_data_term(&t.s, &t.models, &t.data, &t.w, t.outlier_cost).unwrap();
        let v = volume_distribution(&t.s).unwrap();
        let n_in = t.s.inlier_count() as f64;
        let oracle = n_in * cross_entropy_oracle(v.as_slice(), t.w.as_slice());
        assert!(rel_close(dw - d, oracle, 1e-9), "{} vs {}", dw - d, oracle);
        assert!(rel_close(n_in * cross_entropy(&v, &t.w), oracle, 1e-9));
    }
}

#[test]
fn unbiased_term_identity() {
    let mut r = rng(2);
    for _ in 0..100 {
        let t = sample(&mut r);
        let d = data_term(&t.s, &t.models, &t.data, t.outlier_cost).unwrap();
        let u = unbiased_data_term(&t.s, &t.models, &t.data, t.outlier_cost).unwrap();
        let v = volume_distribution(&t.s).unwrap();
        let n_in = t.s.inlier_count() as f64;
        assert!(rel_close(u, d + n_in * entropy_oracle(v.as_slice()), 1e-9));
        // W = V_S with empty segments given a vanishing weight they never use.
        let floor = 1e-300;
        let vs: Vec<f64> = v.as_slice().iter().map(|&x| x.max(floor)).collect();
        let total: f64 = vs.iter().sum();
        let w = TargetWeights::new(vs.iter().map(|x| x / total).collect()).unwrap();
        let dw = weighted_data_term(&t.s, &t.models, &t.data, &w, t.outlier_cost).unwrap();
        assert!(rel_close(u, dw, 1e-9));
    }
}

#[test]
fn unbiased_is_below_every_sampled_weighting() {
    let mut r = rng(3);
    for _ in 0..50 {
        let t = sample(&mut r);
        let u = unbiased_data_term(&t.s, &t.models, &t.data, t.outlier_cost).unwrap();
        for _ in 0..50 {
            let w = random_weights(&mut r, t.models.len());
            let dw = weighted_data_term(&t.s, &t.models, &t.data, &w, t.outlier_cost).unwrap();
            assert!(u <= dw + 1e-9 * dw.abs().max(1.0));
        }
    }
}

#[test]
fn gibbs_inequality_and_kl_to_uniform() {
    let mut r = rng(4);
    for _ in 0..100 {
        let k = r.random_range(1..8);
        let v = VolumeDistribution::new(random_simplex(&mut r, k)).unwrap();
        let w = random_weights(&mut r, k);
        let h = entropy(&v);
        assert!(cross_entropy(&v, &w) >= h - 1e-12);
        assert!(kl_to_target(&v, &w) >= -1e-15);
        assert!((cross_entropy(&v, &w) - h - kl_to_target(&v, &w)).abs() <= 1e-12);
        let u = TargetWeights::uniform(k);
        assert!((kl_to_target(&v, &u) - ((k as f64).ln() - h)).abs() <= 1e-12);
        let same = TargetWeights::new(v.as_slice().to_vec()).unwrap();
        assert!((cross_entropy(&v, &same) - h).abs() <= 1e-12);
        assert!(kl_to_target(&v, &same).abs() <= 1e-12);
    }
}

#[test]
fn problem_energy_matches_total_energy() {
    let mut r = rng(5);
    for _ in 0..100 {
        let n = r.random_range(1..15);
        let k = r.random_range(1..5);
        let outliers = r.random_bool(0.5);
        let inst = random_instance(&mut r, n, k, outliers);
        let s = random_labeling(&mut r, n, k, outliers);
        let p = Problem::new(&inst.costs, &inst.graph, &inst.cfg, 16).unwrap();
        let a = p.energy(&s).unwrap().total;
        let b = total_energy_costs(&s, &inst.costs, &inst.graph, &inst.cfg).unwrap().total;
        assert!(rel_close(a, b, 1e-12));
        assert!(rel_close(a, common::exact_energy(&inst, &s), 1e-9));
    }
}

#[test]
fn terms_are_additive_over_disjoint_parts() {
    let mut r = rng(6);
    for _ in 0..50 {
        let t = sample(&mut r);
        let n = t.data.len();
        if n < 2 {
            continue;
        }
        let cut = r.random_range(1..n);
        let part = |lo: usize, hi: usize| {
            let s = Labeling::new(t.s.labels()[lo..hi].to_vec(), t.models.len()).unwrap();
            data_term(&s, &t.models, &t.data[lo..hi], t.outlier_cost).unwrap()
        };
        let whole = data_term(&t.s, &t.models, &t.data, t.outlier_cost).unwrap();
        assert!(rel_close(whole, part(0, cut) + part(cut, n), 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn terms_are_permutation_invariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let t = sample(&mut r);
        let n = t.data.len();
        let mut perm: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut r);
        let s2 = Labeling::new(perm.iter().map(|&i| t.s.get(i)).collect(), t.models.len()).unwrap();
        let d2: Vec<Datum> = perm.iter().map(|&i| t.data[i]).collect();
        let a = unbiased_data_term(&t.s, &t.models, &t.data, t.outlier_cost).unwrap();
        let b = unbiased_data_term(&s2, &t.models, &d2, t.outlier_cost).unwrap();
        prop_assert!(rel_close(a, b, 1e-12));
        let a = weighted_data_term(&t.s, &t.models, &t.data, &t.w, t.outlier_cost).unwrap();
        let b = weighted_data_term(&s2, &t.models, &d2, &t.w, t.outlier_cost).unwrap();
        prop_assert!(rel_close(a, b, 1e-12));
    }

    #[test]
    fn uniform_mode_equals_fixed_uniform(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..12);
        let k = r.random_range(1..4);
        let inst = random_instance(&mut r, n, k, false);
        let s = random_labeling(&mut r, n, k, false);
        let uni = EnergyConfig { weight_mode: WeightMode::Uniform, ..inst.cfg.clone() };
        let fixed = EnergyConfig { weight_mode: WeightMode::Fixed(TargetWeights::uniform(k)), outliers_in_volume: false, ..inst.cfg.clone() };
        let a = total_energy_costs(&s, &inst.costs, &inst.graph, &uni).unwrap().total;
        let b = total_energy_costs(&s, &inst.costs, &inst.graph, &fixed).unwrap().total;
        prop_assert!(rel_close(a, b, 1e-12));
    }
}
