//! File formats: round trips and ingestion errors.

use std::fs;
use std::path::{Path, PathBuf};

use rainfall_copula::copula::joint_forecast_all;
use rainfall_copula::estimation::ProfilePoint;
use rainfall_copula::io::*;
use rainfall_copula::marginals::{JglmCoefficients, MarginalModel, Transform};
use rainfall_copula::numerics::DenseMatrix;
use rainfall_copula::spatial::{build_covariance, MaternParams};
use rainfall_copula::synth::{simulate_dataset, MarginalGenerator, SynthSpec};
use rainfall_copula::Error;

fn small() -> rainfall_copula::synth::SyntheticDataset {
    let coeffs = JglmCoefficients::new(0.1, vec![0.4, -0.2], 0.8, vec![0.1, 0.3], -0.5, vec![0.0, 0.2]).unwrap();
    simulate_dataset(&SynthSpec {
        n_locations: 4,
        n_days: 6,
        marginals: MarginalGenerator::Jglm(coeffs),
        seed: 3,
        ..SynthSpec::default()
    })
    .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn ingest_parts(err: Error) -> (String, usize, String, String) {
    match err {
        Error::Ingest {
            file,
            row,
            column,
            message,
        } => (file, row, column, message),
        other => panic!("expected an ingestion error, got {other:?}"),
    }
}

const LOCS: &str = "id,lat,lon,elev\nA,51.5,-0.1,20\nB,53.4,-2.2,80\n";

#[test]
fn dataset_round_trips_exactly() {
    let data = small();
    let dir = tempfile::tempdir().unwrap();
    let (lp, rp, fp, mp) = (
        dir.path().join("locations.csv"),
        dir.path().join("rain.csv"),
        dir.path().join("features.csv"),
        dir.path().join("marginals.csv"),
    );
    write_locations(&lp, &data.locations).unwrap();
    write_rainfall(&rp, &data.panel).unwrap();
    write_features(&fp, &data.panel, data.features.as_ref().unwrap()).unwrap();
    write_field(&mp, &data.panel, &data.field).unwrap();

    let locations = read_locations(&lp).unwrap();
    assert_eq!(locations, data.locations);
    let panel = read_rainfall(&rp, &locations).unwrap();
    assert_eq!(panel, data.panel);
    assert_eq!(&read_features(&fp, &panel).unwrap(), data.features.as_ref().unwrap());
    assert_eq!(read_field_for(&mp, &panel).unwrap(), data.field);
    assert_eq!(read_field(&mp, panel.location_ids()).unwrap().0, panel.day_labels());
    let text = fs::read_to_string(&rp).unwrap();
    assert!(text.starts_with("date,S001,S002,S003,S004\n2000-01-01,"));
}

#[test]
fn model_document_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let coeffs = JglmCoefficients::new(0.1, vec![0.4, -0.2], 0.8, vec![0.1, 0.3], -0.5, vec![0.0, 0.2]).unwrap();
    for transform in [
        Transform::identity(2),
        Transform::from_parts(vec![1.5, -0.25], vec![2.0, 0.1 + 0.2]).unwrap(),
    ] {
        let model = MarginalModel::new(transform, coeffs.clone()).unwrap();
        let p = dir.path().join("model.txt");
        write_model(&p, &model).unwrap();
        assert_eq!(read_model(&p).unwrap(), model);
    }
    let text = fs::read_to_string(dir.path().join("model.txt")).unwrap();
    assert!(text.contains("feature_dim=2\n") && text.contains("alpha.1=0.4\n") && text.contains("scale.2="));
}

#[test]
fn ensemble_round_trips_with_exact_zeros() {
    let data = small();
    let cov = build_covariance(&data.distances, &MaternParams::with_theta(450.0).unwrap()).unwrap();
    let blocks = joint_forecast_all(&cov, &data.field, 3, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("ensemble.csv");
    let ids = data.locations.ids();
    write_ensemble(&p, data.panel.day_labels(), &ids, &blocks).unwrap();
    assert_eq!(read_ensemble(&p, data.panel.day_labels(), &ids).unwrap(), blocks);
    let text = fs::read_to_string(&p).unwrap();
    assert!(text.starts_with("day,replicate,loc_S001,loc_S002,loc_S003,loc_S004\n2000-01-01,0,"));
    assert!(text.lines().skip(1).flat_map(|l| l.split(',')).any(|c| c == "0"), "expected dry cells");
    assert!(text.lines().skip(1).flat_map(|l| l.split(',').skip(2)).all(|c| c != "-0" && c != "0.0"));
}

#[test]
fn profile_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("profile.csv");
    let points = [
        ProfilePoint {
            theta: 200.0,
            score: 12.5,
            mc_stderr: 0.25,
        },
        ProfilePoint {
            theta: 250.0,
            score: 11.0,
            mc_stderr: 0.5,
        },
    ];
    write_profile(&p, &points).unwrap();
    assert_eq!(fs::read_to_string(&p).unwrap(), "theta,score,mc_stderr\n200,12.5,0.25\n250,11,0.5\n");
}

#[test]
fn rainfall_errors_name_file_row_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let locs = read_locations(&write(dir.path(), "l.csv", LOCS)).unwrap();
    let cases = [
        ("date,A,B\n2001-01-01,0,1\n2001-01-02,NaN,1\n", 3, "A"),
        ("date,A,B\n2001-01-01,0,-2\n", 2, "B"),
        ("date,B,A\n2001-01-01,0,1\n", 1, "B"),
        ("date,A\n2001-01-01,0\n", 1, "B"),
        ("date,A,B,C\n2001-01-01,0,1,2\n", 1, "C"),
        ("date,A,B\n01/02/2001,0,1\n", 2, "date"),
        ("date,A,B\n2001-01-01,0,1\n2001-01-01,0,1\n", 3, "date"),
        ("date,A,B\n2001-01-01,0,abc\n", 2, "B"),
    ];
    for (text, row, column) in cases {
        let path = write(dir.path(), "rain.csv", text);
        let err = read_rainfall(&path, &locs).unwrap_err();
        let msg = err.to_string();
        let (file, r, c, _) = ingest_parts(err);
        assert!(file.ends_with("rain.csv"), "{msg}");
        assert_eq!((r, c.as_str()), (row, column), "{msg}");
        assert!(msg.contains("rain.csv") && msg.contains(&format!("row {row}")) && msg.contains(column), "{msg}");
    }
}

#[test]
fn location_errors_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("id,lat,lon,elev\nA,91,0,0\n", 2, "lat"),
        ("id,lat,lon,elev\nA,50,0,0\nA,51,0,0\n", 3, "id"),
        ("id,lat,lon,elev\nA,50,0,inf\n", 2, "elev"),
        ("id,lon,lat,elev\nA,50,0,0\n", 1, "#2"),
        ("id,lat,lon,elev\nA,50,0\n", 2, "-"),
    ];
    for (text, row, column) in cases {
        let err = read_locations(&write(dir.path(), "locs.csv", text)).unwrap_err();
        let (_, r, c, m) = ingest_parts(err);
        assert_eq!((r, c.as_str()), (row, column), "{m}");
    }
}

#[test]
fn misaligned_features_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let locs = read_locations(&write(dir.path(), "l.csv", LOCS)).unwrap();
    let panel = read_rainfall(&write(dir.path(), "r.csv", "date,A,B\n2001-01-01,0,1\n2001-01-02,2,0\n"), &locs).unwrap();
    let good = "date,loc,x\n2001-01-02,B,4\n2001-01-01,A,1\n2001-01-01,B,2\n2001-01-02,A,3\n";
    let f = read_features(&write(dir.path(), "f.csv", good), &panel).unwrap();
    assert_eq!(f, DenseMatrix::from_row_major(4, 1, vec![1.0, 3.0, 2.0, 4.0]).unwrap());
    let cases = [
        ("date,loc,x\n2001-01-01,A,1\n2001-01-01,B,2\n2001-01-02,A,3\n", "loc"),
        ("date,loc,x\n2001-01-01,A,1\n2001-01-01,C,2\n2001-01-02,A,3\n2001-01-02,B,3\n", "loc"),
        ("date,loc,x\n2001-01-01,A,1\n2001-01-01,A,2\n2001-01-02,A,3\n2001-01-02,B,3\n", "loc"),
        ("date,loc,x\n2001-01-03,A,1\n", "date"),
        ("date,loc,x\n2001-01-01,A,1\n2001-01-01,B,x\n2001-01-02,A,3\n2001-01-02,B,3\n", "x"),
    ];
    for (text, column) in cases {
        let err = read_features(&write(dir.path(), "f.csv", text), &panel).unwrap_err();
        let (_, _, c, m) = ingest_parts(err);
        assert_eq!(c, column, "{m}");
    }
}

#[test]
fn missing_file_is_an_io_error_naming_the_path() {
    let err = read_locations(Path::new("/nonexistent/locations.csv")).unwrap_err();
    assert!(err.is_ingestion());
    assert!(err.to_string().contains("/nonexistent/locations.csv"));
}

#[test]
fn invalid_marginal_cells_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let locs = read_locations(&write(dir.path(), "l.csv", LOCS)).unwrap();
    let panel = read_rainfall(&write(dir.path(), "r.csv", "date,A,B\n2001-01-01,0,1\n"), &locs).unwrap();
    let text = "date,loc,p,mu,phi\n2001-01-01,A,0.5,2,1\n2001-01-01,B,1.5,2,1\n";
    let (_, r, c, _) = ingest_parts(read_field_for(&write(dir.path(), "m.csv", text), &panel).unwrap_err());
    assert_eq!((r, c.as_str()), (3, "p"));
}

#[test]
fn marginals_must_cover_the_rainfall_days() {
    let dir = tempfile::tempdir().unwrap();
    let locs = read_locations(&write(dir.path(), "l.csv", LOCS)).unwrap();
    let panel = read_rainfall(&write(dir.path(), "r.csv", "date,A,B\n2001-01-01,0,1\n2001-01-02,0,1\n"), &locs).unwrap();
    let text = "date,loc,p,mu,phi\n2001-01-01,A,0.5,2,1\n2001-01-01,B,0.5,2,1\n";
    let (_, _, c, m) = ingest_parts(read_field_for(&write(dir.path(), "m.csv", text), &panel).unwrap_err());
    assert_eq!(c, "date");
    assert!(m.contains("2001-01-02"), "{m}");
}
