use nbundle_core::hilbert::{DensityState, FockTruncation, PureState, Qubit};
use nbundle_core::lindblad::{evolve_master, ChannelKind, DissipatorSet};
use nbundle_core::model::{PulseSchedule, SystemConfig};
use nbundle_core::observables::PopulationColumns;
use nbundle_core::ode::{uniform_grid, IntegratorSettings};
use nbundle_core::trajectories::{run_ensemble, run_ensemble_records, run_trajectory};
use proptest::prelude::*;

/// Short pulses and fast decay so that a few hundred trajectories stay cheap.
fn fast_cfg(kappa: f64, gamma: f64) -> SystemConfig {
    let p = PulseSchedule {
        amp: 0.12,
        sigma: 40.0,
        t1: 250.0,
        t2: 190.0,
        period: 1000.0,
        count: 1,
    };
    let lambda = nbundle_core::model::lambda_n(2, 1e-12).unwrap();
    SystemConfig::new(lambda, kappa, gamma, p, FockTruncation::new(6).unwrap(), 2).unwrap()
}

fn decay_cfg(kappa: f64, n_max: usize) -> SystemConfig {
    let p = PulseSchedule {
        amp: 0.0,
        sigma: 10.0,
        t1: 0.0,
        t2: 0.0,
        period: 100.0,
        count: 1,
    };
    SystemConfig::new(0.0, kappa, 0.0, p, FockTruncation::new(n_max).unwrap(), 1).unwrap()
}

#[test]
fn same_seed_same_ensemble() {
    let c = fast_cfg(0.01, 0.01);
    let d = DissipatorSet::zero_temperature(&c);
    let psi = PureState::basis(&c.trunc, Qubit::Ground, 0);
    let s = IntegratorSettings::for_pulse_width(40.0, uniform_grid(0.0, 600.0, 20.0)).unwrap();
    let cols = PopulationColumns::new(c.trunc, 2);
    let a = run_ensemble(&psi, (0.0, 600.0), &c, &d, &s, &cols, 12, 99).unwrap();
    let b = run_ensemble(&psi, (0.0, 600.0), &c, &d, &s, &cols, 12, 99).unwrap();
    assert_eq!(a, b);
    let other = run_ensemble(&psi, (0.0, 600.0), &c, &d, &s, &cols, 12, 100).unwrap();
    assert_ne!(a.jump_counts, other.jump_counts);
}

#[test]
fn thread_count_does_not_matter() {
    let c = fast_cfg(0.01, 0.01);
    let d = DissipatorSet::zero_temperature(&c);
    let psi = PureState::basis(&c.trunc, Qubit::Ground, 0);
    let s = IntegratorSettings::for_pulse_width(40.0, uniform_grid(0.0, 600.0, 20.0)).unwrap();
    let cols = PopulationColumns::new(c.trunc, 2);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_ensemble_records(&psi, (0.0, 600.0), &c, &d, &s, &cols, 10, 5).unwrap())
    };
    assert_eq!(run(1), run(3));
}

/// Starting from |g,n⟩ with no drive, the last emission is the maximum of n
/// independent exponential lifetimes: P(T ≤ t) = (1 − e^{−κt})^n.
#[test]
fn cascade_last_jump_follows_max_of_exponentials() {
    let kappa = 0.05;
    let n = 2;
    let c = decay_cfg(kappa, 4);
    let d = DissipatorSet::zero_temperature(&c);
    let psi = PureState::basis(&c.trunc, Qubit::Ground, n);
    let span = (0.0, 400.0);
    let s = IntegratorSettings::new(1e-10, 1e-12, 10.0, vec![]).unwrap();
    let cols = PopulationColumns::new(c.trunc, n);
    let recs = run_ensemble_records(&psi, span, &c, &d, &s, &cols, 2000, 11).unwrap();
    let photon = d.channel_of(ChannelKind::PhotonEmission).unwrap();
    let mut last: Vec<f64> = recs
        .iter()
        .map(|r| {
            assert_eq!(r.jumps.len(), n, "seed {}", r.seed);
            assert!(r.jumps.iter().all(|j| j.channel == photon));
            r.jumps.last().unwrap().time
        })
        .collect();
    last.sort_by(f64::total_cmp);
    let m = last.len() as f64;
    let cdf = |t: f64| (1.0 - (-kappa * t).exp()).powi(n as i32);
    let ks = last
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let f = cdf(t);
            (f - i as f64 / m).abs().max(((i + 1) as f64 / m - f).abs())
        })
        .fold(0.0, f64::max);
    // 0.1% critical value of the one-sample statistic.
    assert!(ks < 1.95 / m.sqrt(), "KS distance {ks}");
}

#[test]
fn ensemble_tracks_master_equation() {
    const N_TRAJ: usize = 400;
    let c = fast_cfg(0.01, 0.01);
    let d = DissipatorSet::zero_temperature(&c);
    let psi = PureState::basis(&c.trunc, Qubit::Ground, 0);
    let grid = uniform_grid(0.0, 600.0, 10.0);
    let s = IntegratorSettings::for_pulse_width(40.0, grid.clone()).unwrap();
    let cols = PopulationColumns::new(c.trunc, 2);
    let ens = run_ensemble(&psi, (0.0, 600.0), &c, &d, &s, &cols, N_TRAJ, 3).unwrap();
    let states = evolve_master(&DensityState::basis(&c.trunc, Qubit::Ground, 0), (0.0, 600.0), &c, &d, &s).unwrap();
    let mut total = 0;
    let mut inside = 0;
    for name in ["P_g0", "P_g1", "P_g2"] {
        let mean = ens.mean.column(name).unwrap();
        let se = ens.std_err.column(name).unwrap();
        for (i, st) in states.iter().enumerate() {
            let exact = cols.evaluate(st).unwrap()[cols.names().iter().position(|n| n == name).unwrap()];
            total += 1;
            // Before any trajectory has jumped the sample spread is zero, so
            // the ensemble cannot resolve probabilities below 1/N_TRAJ.
            if (mean[i] - exact).abs() <= 3.0 * se[i] + 1.0 / N_TRAJ as f64 {
                inside += 1;
            }
        }
    }
    assert!(inside as f64 >= 0.95 * total as f64, "{inside}/{total}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn jump_records_are_well_formed(seed in any::<u64>(), n0 in 0usize..4) {
        let c = fast_cfg(0.02, 0.01);
        let d = DissipatorSet::zero_temperature(&c);
        let psi = PureState::basis(&c.trunc, Qubit::Ground, n0);
        let s = IntegratorSettings::for_pulse_width(40.0, uniform_grid(0.0, 500.0, 25.0)).unwrap();
        let cols = PopulationColumns::new(c.trunc, 2);
        let r = run_trajectory(&psi, (0.0, 500.0), &c, &d, &s, &cols, seed).unwrap();
        prop_assert!(r.jumps.windows(2).all(|w| w[0].time < w[1].time));
        prop_assert!(r.jumps.iter().all(|j| j.time > 0.0 && j.time <= 500.0));
        prop_assert!(r.jumps.iter().all(|j| j.channel < d.channels.len()));
        prop_assert_eq!(r.observables.len(), 21);
        prop_assert!((r.final_state.amplitudes().norm() - 1.0).abs() < 1e-10);
    }
}
