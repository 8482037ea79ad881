use cohort::metrics::MetricsReport;
use cohort::sensitivity::{run_sobol_study, StudyConfig};
use cohort::SimParams;

#[test]
fn small_study_runs_end_to_end() {
    let mut base = SimParams::default();
    base.n_agents = 4;
    base.steps = 10;
    base.r_init = 40.0;
    let study = StudyConfig {
        bootstrap: 20,
        ..StudyConfig::new(base, 8, false, 1)
    };
    let report = run_sobol_study(&study).unwrap();
    let k = study.space.dim();
    assert_eq!(report.evaluations, 8 * (k + 2));
    assert_eq!(report.indices.len(), k * MetricsReport::NAMES.len());
    for e in &report.indices {
        if !e.degenerate {
            assert!(e.s1.is_finite() && e.st.is_finite());
            assert!(e.s1_ci[0] <= e.s1 && e.s1 <= e.s1_ci[1]);
        }
    }
    let again = run_sobol_study(&study).unwrap();
    assert_eq!(
        serde_json::to_string(&report).unwrap(),
        serde_json::to_string(&again).unwrap()
    );
}
