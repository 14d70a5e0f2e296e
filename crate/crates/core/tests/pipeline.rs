mod common;

use std::fs;

use common::check_dot;
use ecd_core::dataset::{load_csv, summarize, write_csv, MissingPolicy, Predicate};
use ecd_core::gp::{write_history_csv, ModelDocument};
use ecd_core::ris::{counterfactual, quartile_impact_table, simplify_by_impact, BaselineSpec, PerturbationMode, PerturbationSpec};
use ecd_core::synth::{self, SynthConfig};
use ecd_core::{evolve, Error, GpConfig, RoleConfig};

fn small_gp(seed: u64) -> GpConfig {
    GpConfig { population_size: 300, generations: 10, seed, ..Default::default() }
}

#[test]
fn csv_round_trip_filter_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ehr.csv");
    fs::write(
        &path,
        "BMI,GeneralHealth,SmokerStatus,Sex\n\
         27.5,2,1,0\n\
         31.0,4,3,1\n\
         NA,3,2,1\n\
         24.0,1,4,0\n\
         29.0,3,,1\n",
    )
    .unwrap();
    let roles = RoleConfig::new("BMI", ["GeneralHealth", "SmokerStatus"]);
    let data = load_csv(&path, &roles, MissingPolicy::DropRow).unwrap();
    assert_eq!(data.n_rows(), 3);
    assert_eq!(data.names().collect::<Vec<_>>(), ["BMI", "GeneralHealth", "SmokerStatus"]);
    assert!(matches!(load_csv(&path, &roles, MissingPolicy::Fail), Err(Error::ParseError { row: 3, .. })));

    let keep: Predicate = "GeneralHealth in [2,4] and SmokerStatus < 4".parse().unwrap();
    let kept = keep.filter_rows(&data).unwrap();
    assert_eq!(kept.column("BMI").unwrap(), [27.5, 31.0]);

    let s = summarize(&data, &["BMI".to_string()]).unwrap().remove(0);
    assert_eq!((s.min, s.q2, s.max), (24.0, 27.5, 31.0));

    let out = dir.path().join("copy.csv");
    write_csv(&data, &out).unwrap();
    let again = load_csv(&out, &roles, MissingPolicy::Fail).unwrap();
    assert_eq!(again, data);
}

#[test]
fn fit_analyze_simplify() {
    let (data, truth) = synth::generate(&SynthConfig { n: 200, seed: 3, noise_percent: 0.0 }).unwrap();
    let fit = evolve(&data, "Z", &small_gp(3)).unwrap();
    assert!(!fit.history.is_empty());
    assert!(fit.best.fitness.is_finite());

    let preds: Vec<String> = synth::PREDICTORS.iter().map(|p| p.to_string()).collect();
    let table = quartile_impact_table(&fit.best.tree, &data, &preds, PerturbationMode::Relative, 0.05).unwrap();
    assert_eq!(table.rows.len(), 4);
    for (_, _, cell) in table.iter_cells() {
        let dot = fit.best.tree.to_dot(Some(&cell.annotations())).unwrap();
        check_dot(&fit.best.tree, &dot).unwrap();
    }
    // Predictors absent from the tree have an all-zero row.
    let used = fit.best.tree.dependency_set();
    for row in &table.rows {
        if !used.contains(&row.variable) {
            assert_eq!(row.impacts, [0.0; 3]);
        }
    }

    let s = simplify_by_impact(&fit.best.tree, &data, &preds, 0.05, 0.0).unwrap();
    assert!(s.tree.size() <= fit.best.tree.size());

    let score = synth::structure_score(&fit.best.tree, &truth, &synth::holdout(200, 3).unwrap()).unwrap();
    assert!(score.support_jaccard > 0.0);
}

#[test]
fn counterfactual_on_known_tree() {
    let tree = "B + C / D".parse().unwrap();
    let scenario = BaselineSpec::new("scenario", [("B", 2.0), ("C", 3.0), ("D", 5.0)].into_iter().collect());
    let r = counterfactual(&tree, &scenario, &PerturbationSpec::set_to("D", 6.0)).unwrap();
    assert_eq!(r.impact, 2.5 - 2.6);
    let missing = BaselineSpec::new("s", [("B", 2.0)].into_iter().collect());
    assert_eq!(
        counterfactual(&tree, &missing, &PerturbationSpec::set_to("D", 6.0)).unwrap_err(),
        Error::MissingVariable("C".into())
    );
}

#[test]
fn artifacts_are_reproducible() {
    let (data, _) = synth::generate(&SynthConfig { n: 150, seed: 0, noise_percent: 0.02 }).unwrap();
    let render = || {
        let cfg = small_gp(0);
        let fit = evolve(&data, "Z", &cfg).unwrap();
        let mut hist = Vec::new();
        write_history_csv(&fit.history, &mut hist).unwrap();
        (ModelDocument::from_fit(&fit, &cfg).to_json(), hist)
    };
    let (a, b) = (render(), render());
    assert_eq!(a, b);
    let doc = ModelDocument::from_json(&a.0).unwrap();
    assert_eq!(doc.expression, doc.tree.to_infix());
}

#[test]
fn different_seeds_give_different_runs() {
    let (data, _) = synth::generate(&SynthConfig { n: 150, seed: 0, noise_percent: 0.05 }).unwrap();
    let a = evolve(&data, "Z", &small_gp(1)).unwrap();
    let b = evolve(&data, "Z", &small_gp(2)).unwrap();
    assert_ne!(a.history, b.history);
}
