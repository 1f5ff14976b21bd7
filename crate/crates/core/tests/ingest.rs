use std::fs;

use cutoff_lab::cutoff::{analyze, CertificateEntry, CutoffParams};
use cutoff_lab::spectral::{chi_square_mixture, matrix_exponential_oracle, Generator};
use cutoff_lab::{Error, ExpMixture};

#[test]
fn mixture_file_to_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    fs::write(&path, r#"{"terms": [{"log_a": 100, "rho": 1}]}"#).unwrap();
    let m = ExpMixture::read_json(&path).unwrap();
    let p = CutoffParams::from_mixture(&m).unwrap();
    assert_eq!(p.t, 100.0);
    assert_eq!(p.w, 1.0);
    assert!((p.r - 3.077_99).abs() < 1e-5);

    let report = analyze(&m, 0.5, &[-1.0, 1.0]);
    assert!(matches!(report.certificates[0], CertificateEntry::Lower(_)));
    assert!(matches!(report.certificates[1], CertificateEntry::Upper(_)));
    let json = serde_json::to_value(&report).unwrap();
    assert_eq!(json["certificates"][1]["side"], "upper");
    assert_eq!(json["certificates"][1]["C"], 0.0);
}

#[test]
fn chain_file_to_chi_square() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chain.json");
    fs::write(
        &path,
        r#"{"states": 3, "Q": [[-1, 1, 0], [0.5, -1, 0.5], [0, 1, -1]]}"#,
    )
    .unwrap();
    let g = Generator::read_json(&path).unwrap();
    for x in 0..3 {
        let m = chi_square_mixture(&g, x).unwrap();
        for t in [0.0, 0.3, 1.0, 3.0] {
            let want = matrix_exponential_oracle(&g, x, t).unwrap();
            let got = m.evaluate(t).exp();
            assert!((got - want).abs() <= 1e-10 * want, "x={x} t={t}: {got} vs {want}");
        }
    }
}

#[test]
fn malformed_inputs() {
    assert!(matches!(
        ExpMixture::from_json_str(r#"{"terms": [{"a": 1, "log_a": 0, "rho": 1}]}"#),
        Err(Error::Parse(_))
    ));
    assert!(matches!(ExpMixture::from_json_str("{"), Err(Error::Parse(_))));
    assert!(matches!(
        Generator::from_json_str(r#"{"states": 2, "Q": [[-1, 1], [0, 0]]}"#),
        Err(Error::NotIrreducible)
    ));
    assert!(matches!(
        ExpMixture::read_json("/definitely/missing.json"),
        Err(Error::IoFailure(_))
    ));
}
