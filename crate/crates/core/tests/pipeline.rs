use esprit_precoder_core::channel::{covariance_of, draw_gains, simulate};
use esprit_precoder_core::codebook::build_baseline;
use esprit_precoder_core::evaluation::{build_strategies, run_benchmark, SUM_DIFF_ESPRIT};
use esprit_precoder_core::{
    ArrayConfig, BeamspaceEsprit, BenchmarkSettings, CodebookSpec, DesignConfig, PathSpec, Scenario, TrialSeed,
    UncertaintyInterval,
};

fn two_path() -> Scenario {
    Scenario::new(
        vec![
            PathSpec {
                theta_deg: 20.0,
                snr_db: 30.0,
                uncertainty: UncertaintyInterval::around(0, 20.0, 3.0).unwrap(),
            },
            PathSpec {
                theta_deg: 70.0,
                snr_db: 10.0,
                uncertainty: UncertaintyInterval::around(1, 70.0, 3.0).unwrap(),
            },
        ],
        50,
    )
    .unwrap()
}

#[test]
fn designed_precoder_estimates_both_paths() {
    let arr = ArrayConfig::half_wavelength(32).unwrap();
    let sc = two_path();
    let spec = CodebookSpec::new(sc.intervals(), 0.01, true);
    let base = build_baseline(&arr, &spec).unwrap();
    let out = esprit_precoder_core::design::design(&arr, &base, &DesignConfig::default(), &arr.default_grid()).unwrap();
    assert!(out.trace.is_non_increasing(0.0));
    let est = BeamspaceEsprit::new(&out.sip_solution().unwrap(), 2).unwrap();
    let seed = TrialSeed::new(1, 0);
    let gains = draw_gains(&sc, &seed);
    let batch = simulate(&arr, &sc, &out.precoder, &gains, &seed, 0).unwrap();
    let angles = est
        .estimate(&covariance_of(&batch.observations), &arr)
        .unwrap()
        .angles_deg;
    assert!(
        (angles[0] - 20.0).abs() < 0.5 && (angles[1] - 70.0).abs() < 0.5,
        "{angles:?}"
    );
}

#[test]
fn two_path_report_is_joint() {
    let arr = ArrayConfig::half_wavelength(32).unwrap();
    let sc = two_path();
    let spec = CodebookSpec::new(sc.intervals(), 0.01, true);
    let entries = build_strategies(&arr, &spec, &DesignConfig::default(), &arr.default_grid()).unwrap();
    let settings = BenchmarkSettings {
        trials: 10,
        seed: 4,
        bootstrap_resamples: 100,
        ..Default::default()
    };
    let report = run_benchmark(&arr, &sc, &entries, settings).unwrap();
    let s = report.get(SUM_DIFF_ESPRIT).unwrap();
    assert_eq!(s.crb_deg.len(), 2);
    let joint = s.crb_total_deg.unwrap();
    let per: f64 = s.crb_deg.iter().map(|c| c * c).sum::<f64>().sqrt();
    assert!((joint - per).abs() < 1e-12 * joint);
    assert!(s.rmse_deg.unwrap() > 0.0);
}
