//! Monte-Carlo checks of the moment and classification facts the recovery
//! algorithms rely on.

mod common;

use common::{binomial_tail, signed_signal};
use randcs_core::numerics::squared_norm;
use randcs_core::recovery::{back_project, estimate_noise_floor, recover_basic};
use randcs_core::sensing::{
    build_ensemble, generate_binary_signal, measure, measure_round, MeasurementEnsemble, NoiseMode,
    RecoveryConfig, SensingEnsemble, Signal,
};
use randcs_core::Execution;

fn single_round_config(n: usize, s: usize, k: usize, sigma_w: f64, seed: u64) -> RecoveryConfig {
    RecoveryConfig::new(n, s)
        .with_k(k)
        .with_r0(1)
        .with_noise(sigma_w, NoiseMode::Theory)
        .with_seed(seed)
}

#[test]
fn measurement_energy_mean_and_variance() {
    let (n, s, k, sigma_w, draws) = (50, 5, 100, 0.1, 100_000);
    let z = signed_signal(11, n, s, 1.0);
    let mean_model = squared_norm(z.values()) + k as f64 * sigma_w * sigma_w;
    let var_model = 2.0 / k as f64 * mean_model * mean_model;

    let energies: Vec<f64> = (0..draws)
        .map(|d| {
            let cfg = single_round_config(n, s, k, sigma_w, 500_000 + d);
            let ens = SensingEnsemble::on_demand(&cfg).unwrap();
            let b = measure_round(&ens, 0, &z, sigma_w, NoiseMode::Theory, cfg.master_seed).unwrap();
            squared_norm(&b)
        })
        .collect();
    let nf = draws as f64;
    let mean = energies.iter().sum::<f64>() / nf;
    let var = energies.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (nf - 1.0);

    assert!((mean - mean_model).abs() < 4.0 * (var_model / nf).sqrt(), "mean {mean} vs {mean_model}");
    assert!((var / var_model - 1.0).abs() < 0.10, "variance {var} vs {var_model}");
}

/// Two support coordinates share the product terms `a_pi·a_pj·z_i·z_j`, so
/// their back-projections covary by `z_i·z_j/k`; every other pair is
/// uncorrelated.
#[test]
fn back_projection_covariance() {
    let (n, k, sigma_w, draws) = (12, 40, 0.1, 100_000);
    let mut values = vec![0.0; n];
    values[2] = 1.0;
    values[5] = -2.0;
    values[9] = 1.5;
    let z = Signal::new(values);

    let mut sum = vec![0.0; n];
    let mut cross = vec![vec![0.0; n]; n];
    let mut cross_sq = vec![vec![0.0; n]; n];
    for d in 0..draws {
        let cfg = single_round_config(n, 3, k, sigma_w, 700_000 + d);
        let ens = build_ensemble(&cfg, Execution::Sequential).unwrap();
        let b = measure_round(&ens, 0, &z, sigma_w, NoiseMode::Theory, cfg.master_seed).unwrap();
        let meas = MeasurementEnsemble::from_vectors(vec![b.clone(), b], sigma_w, NoiseMode::Theory).unwrap();
        let v = back_project(&ens, &meas, 0..1, Execution::Sequential).unwrap();
        let dev: Vec<f64> = v.per_round[0].iter().zip(z.values().iter()).map(|(v, z)| v - z).collect();
        for i in 0..n {
            sum[i] += dev[i];
            for j in i + 1..n {
                let x = dev[i] * dev[j];
                cross[i][j] += x;
                cross_sq[i][j] += x * x;
            }
        }
    }

    let nf = draws as f64;
    for i in 0..n {
        for j in i + 1..n {
            let cov = cross[i][j] / nf - (sum[i] / nf) * (sum[j] / nf);
            let se = ((cross_sq[i][j] / nf - (cross[i][j] / nf).powi(2)) / nf).sqrt();
            let model = z.values()[i] * z.values()[j] / k as f64;
            assert!((cov - model).abs() < 4.5 * se, "({i},{j}): cov {cov:.3e}, model {model:.3e}, se {se:.1e}");
            if model != 0.0 {
                assert!(cov.abs() > 4.0 * se, "({i},{j}) support pair indistinguishable from zero");
            }
        }
    }
}

/// Misclassification at the `2σ/√k` bar with `min |z_i| ≥ 6σ/√k`, `k ≥ 54`.
///
/// A coordinate outside the support is misread only if at least `⌈r0/2⌉`
/// rounds clear the bar, so with `p = P[|v_i| ≥ 2σ/√k]` for a single round
/// the rate stays under a binomial tail (plus binomial noise). The stated
/// probability bound `2e^{−r0/540}` per coordinate is far looser and is
/// checked as well.
#[test]
fn classification_at_noise_floor() {
    let (n, s, k, sigma_w, trials) = (60, 2, 200, 0.1, 2000u64);
    for r0 in [3usize, 5] {
        let mut off_errors = 0usize;
        let mut on_errors = 0usize;
        let mut sigma_true = 0.0;
        for t in 0..trials {
            let z = generate_binary_signal(t, n, s).unwrap();
            let energy = squared_norm(z.values()) + k as f64 * sigma_w * sigma_w;
            sigma_true = energy.sqrt();
            let min_z = 1.0;
            assert!(min_z >= 6.0 * sigma_true / (k as f64).sqrt());

            let cfg = RecoveryConfig::new(n, s)
                .with_k(k)
                .with_r0(r0)
                .with_noise(sigma_w, NoiseMode::Theory)
                .with_seed(10_000 + t);
            let ens = build_ensemble(&cfg, Execution::Sequential).unwrap();
            let meas = measure(&ens, &z, sigma_w, NoiseMode::Theory, cfg.master_seed, Execution::Sequential).unwrap();
            let basic = recover_basic(&ens, &meas, r0, Execution::Sequential).unwrap();
            let floor = estimate_noise_floor(&meas, r0..2 * r0, k).unwrap();
            for i in 0..n {
                let above = basic.values[i].abs() >= floor.threshold;
                if z.support().contains(&i) {
                    on_errors += usize::from(!above);
                } else {
                    off_errors += usize::from(above);
                }
            }
        }
        // Off-support v_i ~ N(0, ‖z‖²/k + σ_w²).
        let theta = (s as f64 / k as f64 + sigma_w * sigma_w).sqrt();
        let bar = 2.0 * sigma_true / (k as f64).sqrt();
        let p = libm::erfc(bar / theta / std::f64::consts::SQRT_2);
        let envelope = binomial_tail(r0, p, r0.div_ceil(2));
        let samples = (trials as usize * (n - s)) as f64;
        let rate = off_errors as f64 / samples;
        let noise = 4.0 * (envelope * (1.0 - envelope) / samples).sqrt();
        assert!(rate <= envelope + noise, "r0={r0}: rate {rate:.5} vs envelope {envelope:.5}");
        assert!(rate <= 2.0 * (-(r0 as f64) / 540.0).exp());
        assert_eq!(on_errors, 0, "r0={r0}");
    }
}
