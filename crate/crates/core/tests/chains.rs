use pom_core::analysis::*;
use pom_core::constrained::gibbs_means_n2;
use pom_core::sampler::*;
use pom_core::spin::hamiltonian;
use pom_core::{Angle, Couplings, SpinConfig, TorusLattice};

fn spec(kind: SamplerKind, sweeps: u64, seed: u64) -> SamplerSpec {
    SamplerSpec {
        kind,
        sweeps,
        thermalization: 500,
        measure_every: 1,
        seed,
        ..SamplerSpec::default()
    }
}

#[test]
fn metropolis_is_stationary_for_the_gibbs_measure() {
    let lat = TorusLattice::new(2).unwrap();
    let c = Couplings::symmetric(1.0, 1.0).unwrap();
    let exact = gibbs_means_n2(&c, 16).unwrap();
    for kind in [SamplerKind::Metropolis, SamplerKind::Enhanced] {
        let recs: Vec<_> = run_chain(
            &lat,
            &c,
            &spec(kind, 200_000, 3),
            SpinConfig::uniform(4, Angle::ZERO),
            0,
        )
        .unwrap()
        .collect();
        for (series, want) in [
            (recs.iter().map(|r| r.energy).collect::<Vec<_>>(), exact.energy),
            (recs.iter().map(|r| r.q_x).collect(), exact.q_x),
            (recs.iter().map(|r| r.e_mixed).collect(), exact.e_mixed),
        ] {
            let b = blocking_error(&series).unwrap();
            assert!((b.mean - want).abs() < 4.0 * b.std_error, "{kind:?}: {b:?} vs {want}");
        }
    }
}

#[test]
fn identical_seeds_give_identical_streams() {
    let lat = TorusLattice::new(6).unwrap();
    let c = Couplings::symmetric(1.0, 5.0).unwrap();
    let s = spec(SamplerKind::Enhanced, 300, 42);
    let a: Vec<_> = run_chain(&lat, &c, &s, SpinConfig::uniform(36, Angle::ZERO), 1)
        .unwrap()
        .collect();
    let b: Vec<_> = run_chain(&lat, &c, &s, SpinConfig::uniform(36, Angle::ZERO), 1)
        .unwrap()
        .collect();
    assert_eq!(a, b);
    let other: Vec<_> = run_chain(&lat, &c, &s, SpinConfig::uniform(36, Angle::ZERO), 2)
        .unwrap()
        .collect();
    assert_ne!(a, other);
}

#[test]
fn flips_never_change_the_energy() {
    let lat = TorusLattice::new(8).unwrap();
    let c = Couplings::new(1.5, 1.0, 3.0).unwrap();
    let s = spec(SamplerKind::Enhanced, 0, 1);
    let mut st = ChainState::new(&lat, &c, &s, SpinConfig::uniform(64, Angle::from_radians(0.3)), 0).unwrap();
    for _ in 0..20 {
        metropolis_sweep(&mut st, &lat, &c);
        let before = hamiltonian(&lat, &st.config, &c).unwrap();
        plaquette_flip_move(&mut st, &lat, &c);
        assert_eq!(hamiltonian(&lat, &st.config, &c).unwrap(), before);
    }
}

#[test]
fn infinite_temperature_accepts_every_move() {
    let lat = TorusLattice::new(4).unwrap();
    let c = Couplings::symmetric(1.0, 0.0).unwrap();
    let s = SamplerSpec {
        tune_width: false,
        ..spec(SamplerKind::Metropolis, 0, 0)
    };
    let mut st = ChainState::new(&lat, &c, &s, SpinConfig::uniform(16, Angle::ZERO), 0).unwrap();
    for _ in 0..10 {
        metropolis_sweep(&mut st, &lat, &c);
    }
    assert_eq!(st.stats.single_rate(), 1.0);
}

#[test]
fn enhanced_orientations_are_binomial() {
    let lat = TorusLattice::new(10).unwrap();
    let c = Couplings::symmetric(1.0, 20.0).unwrap();
    let s = SamplerSpec {
        measure_every: 5,
        ..spec(SamplerKind::Enhanced, 10_000, 8)
    };
    let n_up: Vec<u32> = run_chain(&lat, &c, &s, SpinConfig::uniform(100, Angle::QUARTER), 0)
        .unwrap()
        .map(|r| r.n_up)
        .collect();
    let tau = autocorrelation_time(&n_up.iter().map(|&v| v as f64).collect::<Vec<_>>()).unwrap();
    assert!(tau.tau_int < 2.0, "{tau:?}");
    let chi = binomial_chi_square(&n_up, 25);
    assert!(!chi.inconclusive);
    // 99.9% quantile of chi-squared with up to 20 degrees of freedom is below 46
    assert!(chi.statistic < 46.0, "{chi:?}");
}

#[test]
fn metropolis_alone_keeps_orientations_frozen_when_cold() {
    let lat = TorusLattice::new(10).unwrap();
    let c = Couplings::symmetric(1.0, 40.0).unwrap();
    let s = SamplerSpec {
        measure_every: 5,
        ..spec(SamplerKind::Metropolis, 5_000, 8)
    };
    let n_up: Vec<f64> = run_chain(&lat, &c, &s, SpinConfig::uniform(100, Angle::QUARTER), 0)
        .unwrap()
        .map(|r| r.n_up as f64)
        .collect();
    let tau = autocorrelation_time(&n_up).unwrap();
    assert!(
        tau.is_lower_bound() || tau.tau_int > n_up.len() as f64 / 10.0,
        "{tau:?}"
    );
}
