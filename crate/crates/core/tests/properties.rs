use proptest::prelude::*;
use roadheat_core::controller::{
    plan_step, rollout, run_closed_loop, FlowCache, RunOptions, SearchMode,
};
use roadheat_core::oracle::suite::reduced_scenario;
use roadheat_core::thermal::{step_soil_column, ColumnBoundary, ColumnScratch};
use roadheat_core::{ControlWord, PlantState, ShootingOptions};

proptest! {
    // Backward Euler with Robin ends never leaves the range spanned by the
    // initial column and the two baths, whatever the step size.
    #[test]
    fn soil_column_obeys_maximum_principle(
        column in prop::collection::vec(-20.0..20.0f64, 3..40),
        top_bath in -20.0..20.0f64,
        bottom_bath in -20.0..20.0f64,
        top_coeff in 0.0..1e3f64,
        bottom_coeff in 0.0..1e3f64,
        dt_s in 1e-3..1e6f64,
        steps in 1usize..20,
    ) {
        let lo = column.iter().copied().fold(top_bath.min(bottom_bath), f64::min);
        let hi = column.iter().copied().fold(top_bath.max(bottom_bath), f64::max);
        let mut col = column.clone();
        let mut scratch = ColumnScratch::new(col.len());
        for _ in 0..steps {
            step_soil_column(
                &mut col,
                ColumnBoundary::Robin { coeff: top_coeff, bath: top_bath },
                ColumnBoundary::Robin { coeff: bottom_coeff, bath: bottom_bath },
                0.008,
                0.5,
                0.005,
                dt_s,
                &mut scratch,
            );
        }
        for v in col {
            prop_assert!(v.is_finite());
            prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9, "{v} outside [{lo}, {hi}]");
        }
    }
}

#[test]
fn huge_steps_relax_to_the_bath() {
    let mut col = vec![5.0; 21];
    let mut scratch = ColumnScratch::new(21);
    for _ in 0..50 {
        step_soil_column(
            &mut col,
            ColumnBoundary::Robin {
                coeff: 88.0,
                bath: -1.0,
            },
            ColumnBoundary::Robin {
                coeff: 300.0,
                bath: -1.0,
            },
            0.008,
            0.5,
            0.005,
            1e7,
            &mut scratch,
        );
    }
    assert!(col.iter().all(|v| (v + 1.0).abs() < 1e-9), "{col:?}");
}

#[test]
fn rollouts_leave_the_plant_untouched() {
    let sc = reduced_scenario();
    let opts = ShootingOptions::default();
    let plant = PlantState::initial(&sc);
    let before = plant.clone();
    let exo = sc.series.at(0.0, &sc.thermal);
    let cache = FlowCache::build(&sc, &exo, &opts).unwrap();
    let words = [ControlWord::all()[3], ControlWord::OFF];
    let a = rollout(&plant, &words, &sc, &exo, &cache).unwrap();
    let b = rollout(&plant, &words, &sc, &exo, &cache).unwrap();
    assert_eq!(plant, before);
    assert_eq!(a, b);
    plan_step(0, &plant, &sc, SearchMode::Joint, &opts).unwrap();
    assert_eq!(plant, before);
}

#[test]
fn closed_loop_is_deterministic() {
    let sc = reduced_scenario();
    let opts = ShootingOptions::default();
    let run = RunOptions {
        keep_candidates: true,
        ..RunOptions::default()
    };
    let a = run_closed_loop(&sc, 30.0, run, &opts).unwrap();
    let b = run_closed_loop(&sc, 30.0, run, &opts).unwrap();
    assert_eq!(a.records, b.records);
    assert_eq!(a.last, b.last);
    assert_eq!(a.candidates.len(), b.candidates.len());
    assert!(a
        .candidates
        .iter()
        .zip(&b.candidates)
        .all(|(x, y)| x.score.to_bits() == y.score.to_bits()));
}

#[test]
fn joint_search_scores_more_patterns_than_cascade() {
    let sc = reduced_scenario();
    let opts = ShootingOptions::default();
    let plant = PlantState::initial(&sc);
    let cascade = plan_step(0, &plant, &sc, SearchMode::Cascade, &opts).unwrap();
    let joint = plan_step(0, &plant, &sc, SearchMode::Joint, &opts).unwrap();
    assert!(joint.rollouts > cascade.rollouts);
}
