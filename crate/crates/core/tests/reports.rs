use std::fs;

use cutoff_lab::harness::{
    emit_report, emit_reports_by_group, sweep, OffsetRule, ReportFormat, SweepRow, SweepSpec, CSV_HEADER,
};
use cutoff_lab::ParametricFamily;

fn lemma_rows(rule: OffsetRule) -> Vec<SweepRow> {
    let family: ParametricFamily = "lemma31/one".parse().unwrap();
    let spec = SweepSpec::new(family, vec![100, 1000], vec![-1.0, 1.0], rule).unwrap();
    sweep(&spec).unwrap()
}

#[test]
fn csv_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.csv");
    let rows = lemma_rows(OffsetRule::Right);
    emit_report(&rows, ReportFormat::Csv, &path).unwrap();

    let mut reader = csv::Reader::from_path(&path).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, CSV_HEADER);
    let records: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(records.len(), rows.len());
    for (rec, row) in records.iter().zip(&rows) {
        assert_eq!(&rec[1], row.n.to_string());
        // interval evaluations keep both endpoints
        assert_ne!(&rec[5], &rec[6]);
        let lo: f64 = rec[5].parse().unwrap();
        assert_eq!(lo, row.log_d_lo);
    }
}

#[test]
fn identical_inputs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    emit_report(&lemma_rows(OffsetRule::Left), ReportFormat::Json, &a).unwrap();
    emit_report(&lemma_rows(OffsetRule::Left), ReportFormat::Json, &b).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let parsed: serde_json::Value = serde_json::from_slice(&fs::read(&a).unwrap()).unwrap();
    let first = &parsed[0];
    assert_eq!(first["assertion"], "ge");
    assert_eq!(first["offset_rule"], "left");
    assert_eq!(first["pass"], true);
}

#[test]
fn one_file_per_family_and_rule() {
    let dir = tempfile::tempdir().unwrap();
    let mut rows = lemma_rows(OffsetRule::Left);
    rows.extend(lemma_rows(OffsetRule::Right));
    let single: ParametricFamily = "single-ou".parse().unwrap();
    rows.extend(sweep(&SweepSpec::new(single, vec![10], vec![-1.0], OffsetRule::Left).unwrap()).unwrap());

    let paths = emit_reports_by_group(&rows, ReportFormat::Csv, dir.path()).unwrap();
    let names: Vec<String> = paths
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(
        names,
        [
            "lemma31_const_1__left.csv",
            "lemma31_const_1__right.csv",
            "single_ou__left.csv"
        ]
    );
    let body = fs::read_to_string(&paths[2]).unwrap();
    assert_eq!(body.lines().count(), 2);
}

#[test]
fn emit_to_missing_directory_fails() {
    let rows = lemma_rows(OffsetRule::Left);
    let err = emit_report(&rows, ReportFormat::Csv, "/nonexistent/dir/rows.csv").unwrap_err();
    assert!(matches!(err, cutoff_lab::Error::IoFailure(_)));
}
