use liftile::job::{run_pipeline, CellSpec, JobSpec, ScalingSpec, Stage, StageStatus};
use proptest::prelude::*;

fn hexagon(seed: u64, weights: Option<Vec<f64>>) -> JobSpec {
    JobSpec {
        dimension: 2,
        lattice: vec![1.0, 0.5, 0.0, 3f64.sqrt() / 2.0],
        cell: CellSpec::Named("dirichlet".into()),
        radius: 2,
        scaling: weights.map_or(ScalingSpec::Named("solve".into()), |w| ScalingSpec::Explicit { weights: w }),
        base: None,
        seed,
        chains_per_cell: 3,
        samples: 50,
        report_timing: false,
        outputs: Default::default(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn reports_are_byte_identical(seed in any::<u64>()) {
        let spec = hexagon(seed, None);
        let text = spec.to_json();
        let again = JobSpec::from_json(&text).unwrap();
        prop_assert_eq!(run_pipeline(&spec).report.to_json(), run_pipeline(&again).report.to_json());
    }

    #[test]
    fn exit_code_is_zero_iff_hard_stages_pass(seed in any::<u64>(), w in prop::collection::vec(0.5f64..2.0, 3)) {
        let report = run_pipeline(&hexagon(seed, Some(w))).report;
        let hard_failure = report.stages.iter().any(|r| r.status == StageStatus::Fail && !r.stage.is_soft());
        prop_assert_eq!(report.exit_code == 0, !hard_failure);
        prop_assert_eq!(report.passed, !hard_failure);
        if let Some(stage) = report.failed_stage {
            prop_assert_eq!(report.exit_code, stage.exit_code());
            let rec = report.stage(stage).unwrap();
            prop_assert!(rec.entity.is_some());
        } else {
            prop_assert!(report.stage(Stage::Verify).is_some());
        }
    }
}
