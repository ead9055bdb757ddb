mod common;

use std::fs;
use std::path::Path;

use fedtree::cli::{main_with_args, ModelBundle};
use fedtree::dtree::Node;

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut argv = vec!["fedtree"];
    argv.extend_from_slice(args);
    let code = main_with_args(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn car_manifest() -> String {
    common::data_dir().join("car.json").to_string_lossy().into_owned()
}

#[test]
fn run_writes_report_table_and_model() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &format!(r#"{{"dataset":"{}","tree_kind":"id3","clients":3,"distribution":"iid","folds":4}}"#, car_manifest()),
    );
    let out = dir.path().join("r.json");
    let model = dir.path().join("m.json");
    let (code, stdout, stderr) =
        run(&["run", "--config", &cfg, "--out", out.to_str().unwrap(), "--model-out", model.to_str().unwrap()]);
    assert_eq!(code, 0, "{stderr}");
    let header = stdout.lines().next().unwrap();
    assert!(header.starts_with("variant") && header.contains("Acc") && header.contains("F1"));
    for v in ["Baseline (ID3)", "Global (ID3)", "Federated-ID3"] {
        assert!(stdout.contains(v), "{stdout}");
    }
    assert!(dir.path().join("r.timing.json").is_file());
    let first = fs::read(&out).unwrap();

    let (code, _, _) = run(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(fs::read(&out).unwrap(), first, "same seed must give the same bytes");

    // Explain a raw instance with the saved model.
    let inst = dir.path().join("i.csv");
    fs::write(&inst, "buying,maint,doors,persons,lug_boot,safety\nlow,low,4,4,big,high\n").unwrap();
    let (code, stdout, stderr) = run(&["explain", "--model", model.to_str().unwrap(), "--instance", inst.to_str().unwrap()]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.starts_with("class ") && stdout.contains(" with {"), "{stdout}");

    // The printed path replays to the printed class.
    let bundle = ModelBundle::load(&model).unwrap();
    let instance = fedtree::cli::read_instance(&inst).unwrap();
    let (class, path) = bundle.explain(&instance).unwrap();
    assert_eq!(stdout.trim(), format!("class {class} with {path}"));
}

#[test]
fn invalid_tree_kind_exits_2_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"dataset":"car","tree_kind":"c45","clients":2,"distribution":"iid"}"#);
    let out = dir.path().join("r.json");
    let (code, _, stderr) = run(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(stderr.contains("tree_kind"), "{stderr}");
    assert!(!out.exists());
}

#[test]
fn missing_dataset_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"dataset":"nope","tree_kind":"id3","clients":2,"distribution":"iid"}"#);
    let (code, _, stderr) = run(&["run", "--config", &cfg, "--out", dir.path().join("r.json").to_str().unwrap()]);
    assert_eq!(code, 2, "{stderr}");
    assert!(stderr.contains("dataset"));
}

#[test]
fn sweep_writes_one_report_per_combination() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.json",
        &format!(r#"{{"dataset":"{}","tree_kind":"cart","clients":[2,5],"distribution":["iid"],"folds":3}}"#, car_manifest()),
    );
    let out = dir.path().join("sweep");
    let (code, stdout, stderr) = run(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--jobs", "2"]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("car_cart_n2_iid") && stdout.contains("car_cart_n5_iid"));
    let reports = fs::read_dir(&out)
        .unwrap()
        .filter(|e| {
            let name = e.as_ref().unwrap().file_name().to_string_lossy().into_owned();
            name.ends_with(".json") && !name.ends_with(".timing.json")
        })
        .count();
    assert_eq!(reports, 2);
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next().unwrap(), "dataset,clients,distribution,tree_kind,variant,accuracy,macro_f1,status");
    // Two combinations, three variants each.
    assert_eq!(lines.count(), 6);
}

#[test]
fn sweep_records_failures_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.json",
        &format!(r#"{{"dataset":"{}","tree_kind":"id3","clients":[2,2000],"distribution":"iid","folds":3}}"#, car_manifest()),
    );
    let out = dir.path().join("sweep");
    let (code, _, _) = run(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 1);
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.lines().any(|l| l.contains(",2000,") && l.contains("failed")));
    assert_eq!(summary.lines().filter(|l| l.contains(",2,") && l.ends_with(",ok")).count(), 3);
}

#[test]
fn single_leaf_model_explains_as_empty_braces() {
    let dir = tempfile::tempdir().unwrap();
    let schema = common::car().schema().clone();
    let bundle = ModelBundle {
        dataset: "car".into(),
        inputs: schema
            .features
            .iter()
            .map(|f| (f.name.clone(), fedtree::data::FeatureEncoding::Symbols { symbols: f.symbols.clone() }))
            .collect(),
        schema,
        tree: fedtree::DecisionTree { kind: fedtree::TreeKind::Id3, max_depth: 3, node: Node::leaf(vec![1.0, 5.0, 0.0, 0.0]) },
    };
    let model = dir.path().join("m.json");
    bundle.save(&model).unwrap();
    let inst = dir.path().join("i.csv");
    fs::write(&inst, "buying,maint,doors,persons,lug_boot,safety,class\nvhigh,low,2,2,small,low,unacc\n").unwrap();
    let (code, stdout, _) = run(&["explain", "--model", model.to_str().unwrap(), "--instance", inst.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(stdout.trim(), "class acc with {}");
}

#[test]
fn explain_rejects_instances_missing_columns() {
    let dir = tempfile::tempdir().unwrap();
    let schema = common::car().schema().clone();
    let bundle = ModelBundle {
        dataset: "car".into(),
        inputs: schema
            .features
            .iter()
            .map(|f| (f.name.clone(), fedtree::data::FeatureEncoding::Symbols { symbols: f.symbols.clone() }))
            .collect(),
        schema,
        tree: fedtree::DecisionTree { kind: fedtree::TreeKind::Id3, max_depth: 3, node: Node::leaf(vec![1.0, 0.0, 0.0, 0.0]) },
    };
    let model = dir.path().join("m.json");
    bundle.save(&model).unwrap();
    let inst = dir.path().join("i.csv");
    fs::write(&inst, "buying,maint\nvhigh,low\n").unwrap();
    let (code, _, stderr) = run(&["explain", "--model", model.to_str().unwrap(), "--instance", inst.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(stderr.contains("doors"), "{stderr}");
}
