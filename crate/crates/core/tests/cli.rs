use std::path::{Path, PathBuf};

use plap_bounds::cli::{self, EXIT_CONFIG, EXIT_NONCONVERGED, EXIT_OK, EXIT_VERDICT};
use plap_bounds::experiments::ExperimentResult;
use plap_bounds::geometry::RasterMask;
use plap_bounds::scenario::{self, Scenario};

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["plap"];
    full.extend_from_slice(args);
    let code = cli::run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn schema_lists_every_weight_kind() {
    let (code, out, _) = run(&["schema"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.trim(), scenario::schema_json().trim());
    for kind in ["constant", "radial-power", "dist-power", "spike-radial", "grid-sampled"] {
        assert!(out.contains(&format!("\"{kind}\"")), "missing {kind}");
    }
    for kind in ["box", "ball", "annulus", "grid-file"] {
        assert!(out.contains(&format!("\"{kind}\"")), "missing {kind}");
    }
}

#[test]
fn shipped_scenarios_validate() {
    let mut seen = 0;
    for entry in std::fs::read_dir(scenarios()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let (sc, base) = Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        if sc.experiment.is_none() {
            sc.resolve(&base).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        }
        seen += 1;
    }
    assert!(seen >= 10);
}

#[test]
fn unknown_fields_are_named() {
    let e =
        Scenario::from_json(r#"{"domain": {"kind": "ball", "center": [0], "radius": 1}, "wieght": 1}"#).unwrap_err();
    assert!(e.to_string().contains("wieght"), "{e}");
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", r#"{"params": {"p": 3, "q": 1}}"#);
    let (code, _, err) = run(&["bound", "--config", &cfg]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(err.contains('q'), "{err}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ball = scenarios().join("ball_p3.json");
    let (code, out, _) = run(&["bound", "--config", ball.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(out.lines().count() > 3);

    let (code, _, _) = run(&["bound", "--config", "/nonexistent/config.json"]);
    assert_eq!(code, EXIT_CONFIG);
    let (code, _, _) = run(&["frobnicate"]);
    assert_eq!(code, EXIT_CONFIG);
    let (code, _, _) = run(&["solve", "--config", ball.to_str().unwrap(), "--mode", "bogus"]);
    assert_eq!(code, EXIT_CONFIG);
    let neg = write(
        dir.path(),
        "neg.json",
        r#"{"domain": {"kind": "ball", "center": [0, 0], "radius": -1}}"#,
    );
    assert_eq!(run(&["bound", "--config", &neg]).0, EXIT_CONFIG);

    let starved = write(
        dir.path(),
        "starved.json",
        r#"{"domain": {"kind": "box", "lengths": [1, 1]}, "weight": {"kind": "constant", "value": 1}, "h": 0.05,
            "solve": {"enabled": true, "max_iter": 1, "method": "grid"}}"#,
    );
    let (code, out, _) = run(&["solve", "--config", &starved]);
    assert_eq!(code, EXIT_NONCONVERGED);
    assert!(
        out.contains("\"converged\": false") || out.contains("\"converged\":false"),
        "{out}"
    );

    let exp = scenarios().join("exp_optimality.json");
    let (code, _, err) = run(&["exp", "optimality", "--config", exp.to_str().unwrap()]);
    assert_eq!(code, EXIT_VERDICT);
    assert!(err.contains("FAIL lambda_w1-slope"), "{err}");
    assert!(err.contains("PASS test-function-bound"), "{err}");

    let (code, _, _) = run(&["exp", "thin-rect", "--config", exp.to_str().unwrap()]);
    assert_eq!(code, EXIT_CONFIG);
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn experiment_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "dc.json",
        r#"{"experiment": {"kind": "dist-coeff", "gammas": [-0.5, 0.3], "radii": [0.5, 1, 2], "nodes": 300}}"#,
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let ra = run(&[
        "exp",
        "dist-coeff",
        "--config",
        &cfg,
        "--seed",
        "7",
        "--out",
        a.to_str().unwrap(),
    ]);
    let rb = run(&[
        "exp",
        "dist-coeff",
        "--config",
        &cfg,
        "--seed",
        "7",
        "--out",
        b.to_str().unwrap(),
    ]);
    assert_eq!(ra.0, EXIT_OK, "{}", ra.2);
    assert_eq!(ra, rb);
    let fa = read_all(&a);
    assert_eq!(fa, read_all(&b));
    let names: Vec<&str> = fa.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["dist-coeff.csv", "dist-coeff.dat", "dist-coeff.json"]);

    let header = ra.1.lines().next().unwrap();
    assert!(header.ends_with("status,scenario_hash,seed,h"), "{header}");
    assert!(ra.1.lines().skip(1).all(|l| l.contains(",ok,") && l.contains(",7,")));

    let json = String::from_utf8(fa[2].1.clone()).unwrap();
    let res: ExperimentResult = serde_json::from_str(&json).unwrap();
    let (fits, verdicts) = res.recompute_verdicts().unwrap();
    assert_eq!(fits, res.fits);
    assert_eq!(verdicts, res.verdicts);
}

#[test]
fn bound_and_solve_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let sq = scenarios().join("l_shape.json");
    let out = dir.path().join("o");
    let (code, csv, err) = run(&[
        "bound",
        "--config",
        sq.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(err.contains("numeric lambda"), "{err}");
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("bounds.json")).unwrap()).unwrap();
    let lambda = json["lambda_numeric"]["lambda"].as_f64().unwrap();
    assert!(lambda > 0.0);
    assert_eq!(std::fs::read_to_string(out.join("bounds.csv")).unwrap(), csv);
    for r in json["comparison"]["reports"].as_array().unwrap() {
        if r["certified"].as_bool() == Some(true) {
            if let Some(v) = r["value"].as_f64() {
                assert!(v <= lambda * 1.001, "{} = {v} above {lambda}", r["name"]);
            }
        }
    }

    let ball = scenarios().join("ball_p3.json");
    let (code, side, _) = run(&[
        "solve",
        "--config",
        ball.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let meta: serde_json::Value = serde_json::from_str(&side).unwrap();
    assert!((meta["lambda"].as_f64().unwrap() - 9.8315).abs() < 1e-3, "{meta}");
    let grid = std::fs::read_to_string(out.join("field.grid")).unwrap();
    let (mask, values) = RasterMask::from_grid_str(&grid).unwrap();
    assert_eq!(values.unwrap().len(), mask.len());
}
