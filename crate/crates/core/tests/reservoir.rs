mod common;

use common::eigen_oracle_radius;
use esnrl::reservoir::{
    band_mask, build_dense_recurrent, build_input_matrix, build_local_recurrent, esn_step,
    input_candidate_rows, scale_spectral_radius, spectral_radius, EsnConfig, ReservoirState,
    ReservoirWeights,
};
use esnrl::rng::rng_from_seed;
use esnrl::Matrix;
use proptest::prelude::*;
use rand::Rng;

/// `|count - n p| <= 3 sqrt(n p (1 - p))`
fn within_3_sigma(count: usize, n: usize, p: f64) -> bool {
    let mean = n as f64 * p;
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    (count as f64 - mean).abs() <= 3.0 * sd
}

#[test]
fn radius_matches_oracle_on_random_matrices() {
    let mut worst = 0.0f64;
    for seed in 0..200u64 {
        let mut rng = rng_from_seed(seed);
        let n = 64;
        let w = Matrix::from_fn(n, n, |_, _| if rng.gen_bool(0.4) { rng.gen_range(-1.0..1.0) } else { 0.0 });
        let scaled = scale_spectral_radius(&w, 1.0).unwrap();
        let d = (eigen_oracle_radius(&scaled) - 1.0).abs();
        worst = worst.max(d);
        assert!(d < 1e-6, "seed {seed}: |rho - 1| = {d:e}");
        let direct = (spectral_radius(&w).unwrap() - eigen_oracle_radius(&w)).abs();
        assert!(direct < 1e-6, "seed {seed}: direct {direct:e}");
    }
    eprintln!("worst deviation {worst:e}");
}

#[test]
fn local_radius_matches_oracle() {
    let cfg = EsnConfig::local();
    for seed in 0..50u64 {
        let w = build_local_recurrent(&cfg, cfg.reservoir_size(5), &mut rng_from_seed(seed)).unwrap();
        let d = (eigen_oracle_radius(&w) - 1.0).abs();
        assert!(d < 1e-6, "seed {seed}: {d:e}");
    }
}

#[test]
fn band_count_matches_closed_form() {
    let m = band_mask(64, 10);
    let expected: usize = (0..64usize).map(|i| (i + 10).min(63) - i.saturating_sub(10) + 1).sum();
    assert_eq!(m.count_nonzero(), expected);
}

#[test]
fn local_structure_statistics() {
    // pool several reservoirs so the binomial bounds are meaningful
    let cfg = EsnConfig::local();
    let n = cfg.reservoir_size(5);
    let band = band_mask(n, cfg.radius);
    let (mut in_band, mut in_band_nz, mut out_band, mut out_band_nz) = (0, 0, 0, 0);
    for seed in 0..10u64 {
        let w = build_local_recurrent(&cfg, n, &mut rng_from_seed(seed)).unwrap();
        for i in 0..n {
            for j in 0..n {
                let nz = w.get(i, j) != 0.0;
                if band.get(i, j) != 0.0 {
                    in_band += 1;
                    in_band_nz += usize::from(nz);
                } else {
                    out_band += 1;
                    out_band_nz += usize::from(nz);
                }
            }
        }
    }
    let p_in = 0.5 + 0.5 * 0.01;
    assert!(within_3_sigma(in_band_nz, in_band, p_in), "{in_band_nz}/{in_band}");
    assert!(within_3_sigma(out_band_nz, out_band, 0.01), "{out_band_nz}/{out_band}");
}

#[test]
fn local_without_global_stays_in_band() {
    let cfg = EsnConfig { p_global: 0.0, ..EsnConfig::local() };
    let n = cfg.reservoir_size(4);
    for seed in 0..5u64 {
        let w = build_local_recurrent(&cfg, n, &mut rng_from_seed(seed)).unwrap();
        for i in 0..n {
            for j in 0..n {
                if w.get(i, j) != 0.0 {
                    assert!(i.abs_diff(j) <= cfg.radius);
                }
            }
        }
    }
}

#[test]
fn dense_density_near_p_global() {
    let cfg = EsnConfig::dense();
    let mut nz = 0;
    for seed in 0..10u64 {
        nz += build_dense_recurrent(&cfg, &mut rng_from_seed(seed)).unwrap().count_nonzero();
    }
    assert!(within_3_sigma(nz, 10 * 64 * 64, 0.4), "{nz}");
}

#[test]
fn input_nonzeros_stay_in_candidate_rows() {
    let cfg = EsnConfig::local();
    for n_inputs in 1..=6 {
        let m = build_input_matrix(&cfg, n_inputs, &mut rng_from_seed(n_inputs as u64)).unwrap();
        let mut per_input = 0;
        for i in 0..n_inputs {
            let rows = input_candidate_rows(&cfg, n_inputs, i);
            if n_inputs > 1 {
                assert_eq!(rows.len(), cfg.n_unique + cfg.n_shared);
            }
            for r in 0..m.rows() {
                if m.get(r, i) != 0.0 {
                    assert!(rows.contains(&r), "input {i} row {r}");
                    per_input += 1;
                }
            }
        }
        let candidates = n_inputs * input_candidate_rows(&cfg, n_inputs, 0).len();
        assert!(within_3_sigma(per_input, candidates, cfg.p_input), "{per_input}/{candidates}");
    }
}

#[test]
fn every_local_row_is_an_input_candidate() {
    let cfg = EsnConfig::local();
    for n_inputs in 1..=6 {
        let n = cfg.reservoir_size(n_inputs);
        let mut hit = vec![false; n];
        for i in 0..n_inputs {
            for r in input_candidate_rows(&cfg, n_inputs, i) {
                hit[r] = true;
            }
        }
        assert!(hit.iter().all(|&h| h), "n_inputs {n_inputs}");
    }
}

#[test]
fn three_node_step_by_hand() {
    let w = Matrix::from_vec(3, 3, vec![0.0, 0.5, 0.0, 0.0, 0.0, 0.5, 0.5, 0.0, 0.0]).unwrap();
    let u = Matrix::from_vec(3, 1, vec![1.0, -0.5, 0.25]).unwrap();
    let weights = ReservoirWeights::from_matrices(w, u).unwrap();
    let h = ReservoirState { activations: vec![0.2, -0.4, 0.6] };
    let next = esn_step(&weights, &h, &[0.8]).unwrap();
    let expected = [
        (0.5f64 * -0.4 + 0.8).tanh(),
        (0.5f64 * 0.6 - 0.4).tanh(),
        (0.5f64 * 0.2 + 0.2).tanh(),
    ];
    for (a, b) in next.activations.iter().zip(expected) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn activity_after_single_pulse() {
    // one random input then 50 silent steps: no blow-up, no collapse to zero
    for (cfg, n_inputs) in [(EsnConfig::dense(), 5), (EsnConfig::local(), 5)] {
        for seed in 0..10u64 {
            let w = ReservoirWeights::build(&cfg, n_inputs, seed).unwrap();
            let mut rng = rng_from_seed(seed + 100);
            let pulse: Vec<f64> = (0..n_inputs).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut h = esn_step(&w, &ReservoirState::zeros(w.n_hidden()), &pulse).unwrap();
            let zeros = vec![0.0; n_inputs];
            for step in 0..50 {
                h = esn_step(&w, &h, &zeros).unwrap();
                let sup = h.activations.iter().fold(0.0f64, |m, a| m.max(a.abs()));
                assert!(sup < 1.0, "seed {seed} step {step}: sup {sup}");
                assert!(sup > 0.0, "seed {seed} step {step}: activity died");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn activations_stay_inside_open_interval(
        seed in 0u64..1000,
        inputs in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 1..40),
    ) {
        let w = ReservoirWeights::build(&EsnConfig::local(), 3, seed).unwrap();
        let mut h = ReservoirState::zeros(w.n_hidden());
        for x in &inputs {
            h = esn_step(&w, &h, x).unwrap();
            prop_assert!(h.activations.iter().all(|a| a.abs() < 1.0));
        }
    }

    #[test]
    fn same_seed_same_weights(seed in any::<u64>()) {
        let a = ReservoirWeights::build(&EsnConfig::dense(), 4, seed).unwrap();
        let b = ReservoirWeights::build(&EsnConfig::dense(), 4, seed).unwrap();
        prop_assert_eq!(a.recurrent(), b.recurrent());
        prop_assert_eq!(a.input(), b.input());
    }
}
