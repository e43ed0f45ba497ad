use nested_eg::harness::{
    read_dataset, read_log, read_sidecar, report, run, verify_bounds, write_dataset, write_log, write_series,
    write_sidecar, Dataset, ForecasterKind, RunConfig, SeriesSidecar,
};
use nested_eg::processes::ProcessSpec;
use nested_eg::{LossSpec, MetaConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfg(forecaster: ForecasterKind, loss: LossSpec) -> RunConfig {
    RunConfig { forecaster, meta: MetaConfig::new(loss) }
}

#[test]
fn uniform_tree_stays_small() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let xs: Vec<Vec<f64>> = (0..1000).map(|_| vec![rng.random::<f64>()]).collect();
    let ys: Vec<f64> = xs.iter().map(|x| (x[0] - 0.3).abs()).collect();
    let data = Dataset::with_covariates(1, xs, ys).unwrap();
    let log = run(&cfg(ForecasterKind::Tree, LossSpec::Square), &data, None).unwrap();
    assert!(log.summary.nodes <= 81, "N_T = {}", log.summary.nodes);
    let v = verify_bounds(&log, &data, &[0.5, 1.0, 5.0]).unwrap();
    assert!(v.passed, "{:#?}", v.checks);
}

#[test]
fn synthetic_series_round_trips_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let spec: ProcessSpec =
        serde_json::from_str(r#"{"kind":"iid","support":[0.1,0.5,0.9],"probs":[0.2,0.5,0.3]}"#).unwrap();
    let g = spec.generate(3000, Some(21)).unwrap();
    let path = dir.path().join("iid.csv");
    write_series(&path, &g.values).unwrap();
    write_sidecar(&path, &SeriesSidecar::new(spec.clone(), 21, 3000, g.clipped)).unwrap();

    let data = read_dataset(&path).unwrap();
    assert_eq!(data.ys, g.values);
    let sidecar = read_sidecar(&path).unwrap().unwrap();
    assert_eq!(sidecar.seed, 21);

    let mut runs = Vec::new();
    for loss in [LossSpec::Absolute, LossSpec::Pinball { alpha: 0.8 }] {
        let log = run(&cfg(ForecasterKind::Meta, loss), &data, Some(&sidecar)).unwrap();
        assert_eq!(log.summary.l_star, Some(spec.l_star(&loss).unwrap()));
        let out = dir.path().join(format!("log-{}", runs.len()));
        write_log(&out, &log).unwrap();
        let back = read_log(&out).unwrap();
        assert_eq!(back.steps, log.steps);
        assert_eq!(back.summary, log.summary);
        let v = verify_bounds(&back, &data, &[1.0]).unwrap();
        assert!(v.passed, "{:#?}", v.checks);
        runs.push((back, Some(v)));
    }
    let r = report(&runs);
    assert_eq!(r.rows.len(), 2);
    r.write(&dir.path().join("report")).unwrap();
}

#[test]
fn covariate_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let xs = vec![vec![0.0, 1.0], vec![0.25, 1.0 / 3.0], vec![0.1, 0.7]];
    let data = Dataset::with_covariates(2, xs, vec![0.2, 1.0, 0.0]).unwrap();
    let path = dir.path().join("cov.csv");
    write_dataset(&path, &data).unwrap();
    let back = read_dataset(&path).unwrap();
    assert_eq!(back, data);
    assert_eq!(back.digest(), data.digest());
}
