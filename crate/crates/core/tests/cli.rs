use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn oti(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oti")).args(args).output().unwrap()
}

fn iris() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/iris.csv")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn run_writes_document_and_identical_tables() {
    let dir = tempfile::tempdir().unwrap();
    let mut tables = Vec::new();
    for tag in ["a", "b"] {
        let out = dir.path().join(format!("{tag}.json"));
        let result = oti(&[
            "run", "--data", s(&iris()), "--label-col", "species", "--zeta", "0.1,0.2", "--reps", "2", "--seed", "9",
            "--epsilon", "auto:0.05", "--alpha", "0.9", "--out", s(&out),
        ]);
        assert!(result.status.success(), "{}", stderr(&result));
        let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(doc["format_version"], 1);
        assert_eq!(doc["reports"].as_array().unwrap().len(), 2);
        assert_eq!(doc["reports"][0]["runs"].as_array().unwrap().len(), 2);
        tables.push(fs::read_to_string(dir.path().join(format!("{tag}.csv"))).unwrap());
    }
    assert_eq!(tables[0], tables[1]);
    assert_eq!(tables[0].lines().count(), 1 + 2 * 2 * 2);
    assert!(tables[0].lines().nth(1).unwrap().contains("auto:0.05"));
}

#[test]
fn predict_then_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(iris()).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    let (mut train, mut test) = (format!("{header}\n"), format!("{header}\n"));
    for (i, line) in lines.enumerate() {
        if i % 2 == 1 {
            test.push_str(line);
            test.push('\n');
        } else if i % 10 == 0 {
            train.push_str(line);
            train.push('\n');
        } else {
            let (features, _) = line.rsplit_once(',').unwrap();
            train.push_str(features);
            train.push_str(",\n");
        }
    }
    let (train_path, test_path) = (dir.path().join("train.csv"), dir.path().join("test.csv"));
    fs::write(&train_path, train).unwrap();
    fs::write(&test_path, test).unwrap();
    let labels = dir.path().join("labels.csv");

    let result = oti(&[
        "predict", "--train", s(&train_path), "--label-col", "species", "--input", s(&test_path), "--out", s(&labels),
    ]);
    assert!(result.status.success(), "{}", stderr(&result));
    let predicted = fs::read_to_string(&labels).unwrap();
    assert_eq!(predicted.lines().next(), Some("label"));
    assert_eq!(predicted.lines().count(), 76);
    assert!(predicted.lines().skip(1).all(|l| ["setosa", "versicolor", "virginica"].contains(&l)));

    let scored = oti(&["metrics", "--truth", s(&test_path), "--truth-col", "species", "--pred", s(&labels)]);
    assert!(scored.status.success(), "{}", stderr(&scored));
    let out = String::from_utf8(scored.stdout).unwrap();
    let value = |key: &str| -> f64 {
        out.lines().find_map(|l| l.strip_prefix(key)).unwrap().parse().unwrap()
    };
    assert!((-1.0..=1.0).contains(&value("ari=")));
    assert!((0.0..=1.0).contains(&value("nmi=")));

    let same = oti(&["metrics", "--truth", s(&labels), "--pred", s(&labels)]);
    assert_eq!(String::from_utf8(same.stdout).unwrap(), "ari=1\nnmi=1\n");
}

#[test]
fn errors_exit_nonzero_with_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let out = dir.path().join("r.json");
    let data = iris();
    let cases: Vec<Vec<&str>> = vec![
        vec!["run", "--data", s(&missing), "--label-col", "y", "--out", s(&out)],
        vec!["run", "--data", s(&data), "--label-col", "nope", "--out", s(&out)],
        vec!["run", "--data", s(&data), "--label-col", "species", "--epsilon=-1", "--out", s(&out)],
        vec!["run", "--data", s(&data), "--label-col", "species", "--alpha", "1.5", "--out", s(&out)],
        vec!["metrics", "--truth", s(&missing), "--pred", s(&missing)],
    ];
    for args in cases {
        let result = oti(&args);
        assert!(!result.status.success(), "{args:?} succeeded");
        assert!(!stderr(&result).trim().is_empty(), "{args:?} printed nothing");
    }
    assert!(!out.exists());
}

#[test]
fn mismatched_feature_columns_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.csv");
    let input = dir.path().join("input.csv");
    fs::write(&train, "x,y,label\n0,0,a\n1,1,b\n5,5,\n").unwrap();
    fs::write(&input, "x,z\n0,1\n").unwrap();
    let result = oti(&["predict", "--train", s(&train), "--label-col", "label", "--input", s(&input)]);
    assert!(!result.status.success());
    assert!(stderr(&result).contains("do not match"));
}

#[test]
fn bad_cell_reports_row_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    fs::write(&data, "x,y,label\n0,0,a\n1,oops,b\n").unwrap();
    let result = oti(&["run", "--data", s(&data), "--label-col", "label", "--out", s(&dir.path().join("r.json"))]);
    assert!(!result.status.success());
    let message = stderr(&result);
    assert!(message.contains("row 2") && message.contains("`y`"), "{message}");
}
