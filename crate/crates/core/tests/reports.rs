use boolrg::counting::{margin_sweep, write_sweep_csv};
use boolrg::detector::{derivative_sieve_sampled, BoundParams, DecompositionReport};
use boolrg::families;
use boolrg::flow::{classify, ClassificationReport, ClassifyConfig, PhaseLabel, Subject};
use boolrg::rg::OrderSampling;
use boolrg::truth_table::{read_table, write_table};
use boolrg::SymmetricFunction;

#[test]
fn classification_reports_round_trip() {
    let config = ClassifyConfig::default();
    let poly = families::random_polynomial_exact_degree(10, 2, 0.5, 4).unwrap().to_table();
    let random = families::random_table(14, 0.5, 4).unwrap();
    let wide = SymmetricFunction::mod_p(600, 5).unwrap();
    for (subject, label) in [
        (Subject::Table(&poly), PhaseLabel::Annihilated),
        (Subject::Table(&random), PhaseLabel::Generic),
        (Subject::Symmetric(&wide), PhaseLabel::CompositeSuspect),
    ] {
        let r = classify(subject, &config).unwrap();
        assert_eq!(r.label, label);
        assert_eq!(ClassificationReport::from_json(&r.to_json().unwrap()).unwrap(), r);
    }
}

#[test]
fn sieve_report_round_trip() {
    let t = families::random_table(10, 0.5, 1).unwrap();
    let r = derivative_sieve_sampled(&t, 2, &OrderSampling::default(), BoundParams::default()).unwrap();
    assert!(r.sieve.is_some());
    assert_eq!(DecompositionReport::from_json(&r.to_json().unwrap()).unwrap(), r);
}

#[test]
fn table_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("maj.bfrg");
    let t = families::majority(11).unwrap();
    write_table(&t, &path).unwrap();
    assert_eq!(read_table(&path).unwrap(), t);
    assert!(read_table(dir.path().join("missing.bfrg")).is_err());
}

#[test]
fn sweep_csv_parses_back() {
    let rows = margin_sweep(&[(64, 8), (256, 16), (1024, 32)], 1.0, 1.0).unwrap();
    let mut buf = Vec::new();
    write_sweep_csv(&rows, &mut buf).unwrap();
    let mut reader = csv::Reader::from_reader(&buf[..]);
    let margins: Vec<f64> = reader.records().map(|r| r.unwrap()[6].parse().unwrap()).collect();
    assert_eq!(margins.len(), 3);
    assert!(margins[0] < 0.0 && margins[1] < margins[0] && margins[2] < margins[1]);
}
