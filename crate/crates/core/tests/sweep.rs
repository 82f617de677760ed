use optoradar::config::AxisSection;
use optoradar::presets::{self, PRESETS};
use optoradar::sweep::{run_sweep, Stage, Status, SweepVar};

#[test]
fn decoupled_single_point_is_the_separable_boundary() {
    let mut c = presets::base(0.0, 0.0, 20.0);
    c.couplings.g_oc = 0.0;
    c.sweep.primary = AxisSection::values(SweepVar::DeltaEg, &[3.0]);
    let e = c.experiment().unwrap();
    let rows = run_sweep(&e.spec, Some(1)).unwrap();
    assert_eq!(rows.len(), 1);
    let two_eta = rows[0].two_eta(Stage::CW).unwrap();
    assert!((two_eta - 1.0).abs() <= 1e-9, "{two_eta}");
}

#[test]
fn preset_rows_follow_the_grid_and_keep_invariants() {
    for p in &PRESETS {
        let e = p.config().experiment().unwrap();
        let rows = run_sweep(&e.spec, None).unwrap();
        let points = e.spec.points();
        assert_eq!(rows.len(), points.len(), "{}", p.name);
        let n_vars = 1 + e.spec.secondary.is_some() as usize;
        assert_eq!(e.spec.column_names().len(), n_vars + 2 + 2 + 8);
        for (row, &(x, y)) in rows.iter().zip(&points) {
            assert_eq!((row.primary, row.secondary), (x, y));
            assert!(
                !row.status.is_failure(),
                "{} at {x}: {:?}",
                p.name,
                row.status
            );
            if row.stable != Some(true) {
                assert!(row.verdicts.iter().all(Option::is_none));
                continue;
            }
            let en: Vec<f64> = Stage::ALL
                .iter()
                .map(|&s| row.log_negativity(s).unwrap())
                .collect();
            assert!(en.windows(2).all(|w| w[0] + 1e-12 >= w[1]), "{en:?}");
            assert!(matches!(row.status, Status::Picard | Status::Reduced));
        }
    }
}

#[test]
fn thread_count_does_not_change_rows() {
    let e = presets::find("fig4")
        .unwrap()
        .config()
        .experiment()
        .unwrap();
    let one = run_sweep(&e.spec, Some(1)).unwrap();
    let four = run_sweep(&e.spec, Some(4)).unwrap();
    assert_eq!(one, four);
}

#[test]
fn degenerate_detuning_is_a_failed_row() {
    let mut c = presets::base(2e-4, 1.0, 20.0);
    c.sweep.primary = AxisSection::values(SweepVar::DeltaEg, &[0.0, 1.0]);
    let rows = run_sweep(&c.experiment().unwrap().spec, Some(1)).unwrap();
    assert_eq!(rows[0].status, Status::Degenerate);
    assert!(rows[0].status.is_failure());
    assert!(rows[0].verdicts.iter().all(Option::is_none));
    assert!(!rows[1].status.is_failure());
}
