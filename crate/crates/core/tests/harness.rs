use std::path::PathBuf;

use ndarray::Array2;

use oti::harness::{
    emit_report, flat_table, load_csv, make_split, read_report, run_experiment, run_single, table_path_for, Dataset,
    ExperimentConfig, FORMAT_VERSION,
};
use oti::Error;

fn data_path(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(file)
}

fn three_clusters() -> Dataset {
    let centers = [(0.0, 0.0), (6.0, 0.0), (0.0, 6.0)];
    let mut features = Array2::zeros((60, 2));
    let mut labels = Vec::new();
    for i in 0..60 {
        let c = i % 3;
        let jitter = ((i * 37 % 11) as f64 - 5.0) / 10.0;
        features[[i, 0]] = centers[c].0 + jitter;
        features[[i, 1]] = centers[c].1 - jitter * 0.5;
        labels.push(c);
    }
    Dataset::new("clusters", features, labels, vec!["a".into(), "b".into(), "c".into()]).unwrap()
}

#[test]
fn bundled_datasets_load() {
    let iris = load_csv(data_path("iris.csv"), "species").unwrap();
    assert_eq!((iris.len(), iris.num_features(), iris.num_classes()), (150, 4, 3));
    assert_eq!(iris.name, "iris");
    let digits = load_csv(data_path("digits.csv"), "digit").unwrap();
    assert_eq!((digits.len(), digits.num_features(), digits.num_classes()), (1797, 64, 10));
}

#[test]
fn report_round_trips_exactly() {
    let config = ExperimentConfig { zetas: vec![0.15], repetitions: 2, seed: 3, ..Default::default() };
    let reports = run_experiment(&three_clusters(), &config);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let table = emit_report(&reports, &path).unwrap();
    assert_eq!(table, dir.path().join("out.csv"));

    let doc = read_report(&path).unwrap();
    assert_eq!(doc.format_version, FORMAT_VERSION);
    assert_eq!(doc.reports, reports);
    assert_eq!(std::fs::read_to_string(table).unwrap(), flat_table(&reports).unwrap());
}

#[test]
fn table_one_shape_gives_ten_rows_per_method() {
    let config =
        ExperimentConfig { zetas: vec![0.05, 0.1, 0.15, 0.2, 0.25], repetitions: 1, ..Default::default() };
    let reports = run_experiment(&three_clusters(), &config);
    let table = flat_table(&reports).unwrap();
    let mut reader = csv::Reader::from_reader(table.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let method = headers.iter().position(|h| h == "method").unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 20);
    for name in ["oti", "transductive"] {
        assert_eq!(rows.iter().filter(|r| &r[method] == name).count(), 10);
    }
}

#[test]
fn empty_report_list_is_an_output_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(emit_report(&[], &dir.path().join("x.json")), Err(Error::Output(_))));
}

#[test]
fn unwritable_path_is_an_output_error() {
    let config = ExperimentConfig { zetas: vec![0.25], repetitions: 1, ..Default::default() };
    let reports = run_experiment(&three_clusters(), &config);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("x.json");
    assert!(matches!(emit_report(&reports, &path), Err(Error::Output(_))));
}

#[test]
fn table_path_never_collides_with_document() {
    assert_eq!(table_path_for("r.json".as_ref()), PathBuf::from("r.csv"));
    assert_eq!(table_path_for("r.csv".as_ref()), PathBuf::from("r.table.csv"));
    assert_eq!(table_path_for("r".as_ref()), PathBuf::from("r.csv"));
}

#[test]
fn experiments_are_deterministic() {
    let config = ExperimentConfig { zetas: vec![0.1, 0.25], repetitions: 2, seed: 11, ..Default::default() };
    let data = three_clusters();
    assert_eq!(run_experiment(&data, &config), run_experiment(&data, &config));
}

#[test]
fn runs_share_splits_across_methods() {
    let data = three_clusters();
    let config = ExperimentConfig { seed: 5, ..Default::default() };
    let split = make_split(&data, 0.25, config.run_seed(2)).unwrap();
    let record = run_single(&data, &split, &config, 2).unwrap();
    assert_eq!(record.seed, 7);
    assert_eq!((record.labeled, record.unlabeled, record.new), (15, 18, 27));
    let report = &run_experiment(&data, &ExperimentConfig { zetas: vec![0.25], repetitions: 3, ..config })[0];
    assert_eq!(report.runs[2], record);
}

#[test]
fn evaluation_never_sees_new_labels() {
    // Overwriting the labels of X_new moves the scores but nothing upstream.
    let data = three_clusters();
    let config = ExperimentConfig::default();
    let split = make_split(&data, 0.25, 1).unwrap();
    let mut scrambled = data.clone();
    for &i in &split.new {
        scrambled.labels[i] = 0;
    }
    let honest = run_single(&data, &split, &config, 0).unwrap();
    let tampered = run_single(&scrambled, &split, &config, 0).unwrap();
    assert_eq!(honest.propagation_rounds, tampered.propagation_rounds);
    assert_eq!(honest.all_plans_converged, tampered.all_plans_converged);
    assert_ne!(honest.inductive, tampered.inductive);
    assert_eq!(honest.singleton_agreement, tampered.singleton_agreement);
}

#[test]
fn infeasible_zeta_is_recorded_not_fatal() {
    let config = ExperimentConfig { zetas: vec![0.02], repetitions: 2, ..Default::default() };
    let report = &run_experiment(&three_clusters(), &config)[0];
    assert!(!report.complete);
    assert_eq!(report.failures.len(), 2);
    assert!(report.inductive.is_none());
    let table = flat_table(std::slice::from_ref(report)).unwrap();
    assert_eq!(table.lines().count(), 5);
}
