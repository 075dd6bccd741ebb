use num_complex::Complex64;

use onebit_mimo::channel::Scenario;
use onebit_mimo::expectation::{omega, write_expectations_csv};
use onebit_mimo::harness::{
    run_scatter, run_ser, validate, validate_with_kernel, ExperimentConfig, ScatterMode,
};
use onebit_mimo::Result;

fn three_ue() -> ExperimentConfig {
    ExperimentConfig {
        antennas: 8,
        users: 3,
        tau: 5,
        scenario: Scenario::ThreeUe,
        trials: 4000,
        seed: 77,
        ..Default::default()
    }
}

#[test]
fn three_ue_fixed_interferer_means_match_expectations() {
    let cfg = three_ue();
    let r = run_scatter(&cfg, 0, &ScatterMode::FixedInterferers(vec![3, 2]), 1.0).unwrap();
    assert_eq!(r.sample_means.len(), 16);
    for (l, (m, (_, e))) in r.sample_means.iter().zip(&r.expected).enumerate() {
        let gap = (m.mean - e).norm();
        assert!(
            gap <= 3.0 * m.std_error,
            "l={l}: gap {gap} vs 3 SE {}",
            3.0 * m.std_error
        );
    }
}

#[test]
fn all_combinations_at_desk_scale_has_256_rows() {
    let cfg = ExperimentConfig::default();
    let r = run_scatter(&cfg, 0, &ScatterMode::AllCombinations, 1.0).unwrap();
    let mut buf = Vec::new();
    write_expectations_csv(r.table.as_ref().unwrap(), &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 257);
}

#[test]
fn default_validate_passes() {
    let r = validate(&ExperimentConfig::default());
    assert!(r.passed(), "{r}");
    assert!(r.checks.len() >= 8);
}

#[test]
fn single_ue_uncorrelated_validate_passes() {
    let cfg = ExperimentConfig {
        users: 1,
        scenario: Scenario::Uncorrelated,
        ..Default::default()
    };
    let r = validate(&cfg);
    assert!(r.passed(), "{r}");
}

/// Arcsine law without the `2/pi` factor.
fn tampered(x: f64) -> Result<f64> {
    Ok(omega(x)? * std::f64::consts::FRAC_PI_2)
}

#[test]
fn tampered_kernel_trips_the_crp_check() {
    let r = validate_with_kernel(&ExperimentConfig::default(), tampered);
    let check = r.get("C_rp vs Monte-Carlo").unwrap();
    assert!(!check.passed, "{r}");
    assert!(!r.passed());
    // the structural diagonal is kernel-independent
    assert!(r.get("C_rp diagonal").unwrap().passed);
}

fn small_ser() -> ExperimentConfig {
    ExperimentConfig {
        antennas: 8,
        tau: 5,
        snr_db: vec![0.0, 20.0],
        trials: 400,
        seed: 5,
        ..Default::default()
    }
}

#[test]
fn ser_is_independent_of_worker_count() {
    let cfg = small_ser();
    let a = run_ser(&cfg).unwrap();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let b = pool.install(|| run_ser(&cfg)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn cached_estimator_reproduces_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        cache_dir: Some(dir.path().to_path_buf()),
        ..small_ser()
    };
    let fresh = run_ser(&small_ser()).unwrap();
    let first = run_ser(&cfg).unwrap();
    let entries = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(entries, 2, "one state per SNR point");
    let second = run_ser(&cfg).unwrap();
    assert_eq!(fresh, first);
    assert_eq!(first, second);
}

#[test]
fn scatter_is_reproducible() {
    let cfg = ExperimentConfig {
        trials: 3,
        ..three_ue()
    };
    let a = run_scatter(&cfg, 1, &ScatterMode::FixedInterferers(vec![0, 5]), 1.0).unwrap();
    let b = run_scatter(&cfg, 1, &ScatterMode::FixedInterferers(vec![0, 5]), 1.0).unwrap();
    assert_eq!(a.rows, b.rows);
    assert!(a.rows.iter().all(|r| r.xhat != Complex64::new(0.0, 0.0)));
}
