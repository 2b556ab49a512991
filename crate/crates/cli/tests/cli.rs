use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nilmag::closedform::{self, InitialCondition};
use nilmag::lorentz::LorentzForce;
use nilmag::nilalgebra::MetricNilAlgebra;
use nilmag_cli::Scenario;
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_nilmag"));
    c.env("NILMAG_LOG", "error");
    c
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn write_scenario(dir: &TempDir, name: &str, body: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn trajectory_in(file: &str, extra: &[&str]) -> (Output, TempDir) {
    let out = TempDir::new().unwrap();
    let path = scenarios().join(file);
    let mut args = vec!["trajectory", "--scenario", path.to_str().unwrap(), "--out", out.path().to_str().unwrap()];
    args.extend_from_slice(extra);
    (run(&args), out)
}

fn metadata(out: &TempDir) -> Value {
    serde_json::from_str(&fs::read_to_string(out.path().join("metadata.json")).unwrap()).unwrap()
}

#[test]
fn exact_force_takes_the_closed_form() {
    let (o, out) = trajectory_in("h3_exact.json", &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = metadata(&out);
    assert_eq!(m["exact"], true);
    assert_eq!(m["solver"], "closedform");
    assert_eq!(m["closed_form"], true);
    assert!(m["oracle"]["max_deviation"].as_f64().unwrap() < 1e-6);
}

#[test]
fn type2_unit_speed_is_cn_with_period() {
    let (o, out) = trajectory_in("h3_type2_cn.json", &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = metadata(&out);
    assert_eq!(m["branch"], "Cn");
    assert_eq!(m["solver"], "h3_type2");
    let w = m["period"].as_f64().expect("period present");
    let lib = nilmag::h3_type2::solve_type2(&[0.0, 1.0, 0.0], 1.0, &[1.0, 0.0, 0.0]).unwrap().period().unwrap();
    assert_eq!(w, lib);
    let csv = fs::read_to_string(out.path().join("trajectory.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[5], "Cn");
    assert_eq!(row[6].parse::<f64>().unwrap(), w);
}

#[test]
fn mixed_force_falls_back_to_the_oracle() {
    let (o, out) = trajectory_in("h5xr_mixed.json", &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = metadata(&out);
    assert_eq!(m["closed_form"], false);
    assert_eq!(m["solver"], "oracle");
    assert_eq!(m["force_type"], "Mixed");
}

#[test]
fn csv_floats_carry_17_significant_digits() {
    let (o, out) = trajectory_in("h3_exact.json", &[]);
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(out.path().join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,x,y,z,speed,branch,period");
    for line in lines {
        for field in line.split(',').take(5) {
            let mantissa = field.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{field}");
            let x: f64 = field.parse().unwrap();
            assert_eq!(format!("{x:.16e}"), field);
        }
    }
}

#[test]
fn emitted_scenario_round_trips() {
    for file in ["h3_exact.json", "h3_type2_cn.json", "h5xr_mixed.json"] {
        let (o, out) = trajectory_in(file, &[]);
        assert_eq!(code(&o), 0);
        let text = fs::read_to_string(out.path().join("scenario.json")).unwrap();
        let emitted = Scenario::from_json(&text).unwrap();
        let original = Scenario::load(&scenarios().join(file)).unwrap();
        assert_eq!(emitted, original);
        assert_eq!(emitted.to_json(), text);
    }
}

#[test]
fn inline_algebra_round_trips() {
    let text = r#"{"algebra": {"dim": 3, "brackets": [[1, 2, 3, 1.0]]}, "charge": 0.1,
        "initial": {"velocity": [0.1, 0.2, 0.30000000000000004]}, "start": [1e-300, 2.5, -7]}"#;
    let s = Scenario::from_json(text).unwrap();
    let back = Scenario::from_json(&s.to_json()).unwrap();
    assert_eq!(s, back);
}

#[test]
fn start_point_left_translates() {
    let dir = TempDir::new().unwrap();
    let p = write_scenario(
        &dir,
        "s.json",
        r#"{"algebra": "heisenberg(1)", "force": {"exact": {"Z": [0, 0, 1]}},
            "initial": {"velocity": [1, 0, 0.5]}, "start": [1, 2, 3], "time": {"t_max": 1, "samples": 3}}"#,
    );
    let o = run(&["trajectory", "--scenario", &p, "--format", "json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc = stdout_json(&o);
    let first = &doc["samples"][0]["xi"];
    assert_eq!(first, &serde_json::json!([1.0, 2.0, 3.0]));
    let alg = MetricNilAlgebra::heisenberg(1).unwrap();
    let f = LorentzForce::exact(&alg, &[0.0, 0.0, 1.0]).unwrap();
    let ic = InitialCondition::new(&alg, vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 0.5], 1.0).unwrap();
    let plain = closedform::solve_type1(&alg, &f, &ic).unwrap();
    let (g, _) = plain.eval(1.0);
    let last: Vec<f64> = doc["samples"][2]["xi"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    // (1, 2, 3) * g in H3
    let expect = [1.0 + g.xi[0], 2.0 + g.xi[1], 3.0 + g.xi[2] + 0.5 * (g.xi[1] - 2.0 * g.xi[0])];
    for k in 0..3 {
        assert!((last[k] - expect[k]).abs() < 1e-14);
    }
}

#[test]
fn classify_presets() {
    let o = run(&["classify", "--algebra", "heisenberg(1)"]);
    assert_eq!(code(&o), 0);
    let r = stdout_json(&o);
    assert_eq!(r["algebra"]["nonsingular"], true);
    assert_eq!(r["algebra"]["h_type"], true);
    assert_eq!(r["force"]["closed"], true);
    assert_eq!(r["force"]["exact"], true);
    assert_eq!(r["force"]["Z"], serde_json::json!([0.0, 0.0, 0.0]));

    let o = run(&["classify", "--algebra", "quaternionic(1)"]);
    assert_eq!(code(&o), 0);
    let r = stdout_json(&o);
    assert_eq!(r["algebra"]["dim"], 7);
    assert_eq!(r["algebra"]["h_type"], true);

    let o = run(&["classify", "--algebra", "heisenberg(1)+abelian(1)"]);
    let r = stdout_json(&o);
    assert_eq!(r["algebra"]["nonsingular"], false);
}

#[test]
fn classify_reports_unclosed_forces() {
    let dir = TempDir::new().unwrap();
    // omega = xi^1 ^ xi^5 on H5
    let p = write_scenario(
        &dir,
        "f.json",
        r#"{"algebra": "heisenberg(2)", "force": {"matrix": [
            [0, 0, 0, 0, -1], [0, 0, 0, 0, 0], [0, 0, 0, 0, 0], [0, 0, 0, 0, 0], [1, 0, 0, 0, 0]]}}"#,
    );
    let o = run(&["classify", "--scenario", &p]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = stdout_json(&o);
    assert_eq!(r["force"]["closed"], false);
    assert!(r["force"]["closed_residual"].as_f64().unwrap() > 0.5);
    assert!(r["force"]["worst_triple"].is_array());
    assert!(r["force"]["force_type"].is_null());
}

fn periodicity(path: &str, extra: &[&str]) -> (Output, Value) {
    let mut args = vec!["periodicity", "--scenario", path];
    args.extend_from_slice(extra);
    let o = run(&args);
    let v = if code(&o) == 0 { stdout_json(&o) } else { Value::Null };
    (o, v)
}

#[test]
fn linear_case_is_lambda_periodic() {
    let path = scenarios().join("h3_type2_linear.json");
    let (o, r) = periodicity(path.to_str().unwrap(), &[]);
    assert_eq!(code(&o), 0);
    assert_eq!(r["branch"], "Linear");
    assert_eq!(r["report"]["verdict"], "LambdaPeriodic");
    assert_eq!(r["report"]["lambda"], serde_json::json!([0.0, -1.0, 2.0]));
}

#[test]
fn lambda_is_conjugated_by_the_start_point() {
    let dir = TempDir::new().unwrap();
    let p = write_scenario(
        &dir,
        "s.json",
        r#"{"algebra": "heisenberg(1)", "force": {"type2_U": [0, 1, 0]},
            "initial": {"velocity": [0, -1, 2]}, "start": [1, 0, 0]}"#,
    );
    let (o, r) = periodicity(&p, &[]);
    assert_eq!(code(&o), 0);
    // p lambda p^-1 = lambda + [p, lambda] = (0, -1, 2 - 1)
    assert_eq!(r["report"]["lambda"], serde_json::json!([0.0, -1.0, 1.0]));
}

#[test]
fn separatrix_is_not_periodic() {
    let dir = TempDir::new().unwrap();
    let p = write_scenario(
        &dir,
        "b.json",
        r#"{"algebra": "heisenberg(1)", "force": {"type2_U": [0, 1, 0]}, "initial": {"velocity": [0, 0, 2]}}"#,
    );
    let (o, r) = periodicity(&p, &[]);
    assert_eq!(code(&o), 0);
    assert_eq!(r["report"]["verdict"], "NonPeriodic");
    assert_eq!(r["boundary_margin"], 0.0);
}

#[test]
fn h5_scenario_periodicity() {
    let path = scenarios().join("h5_periodic.json");
    let (o, r) = periodicity(path.to_str().unwrap(), &[]);
    assert_eq!(code(&o), 0);
    assert_eq!(r["target"], "h5_type_i");
    assert_eq!(r["verdict"], "Periodic");
    let t = r["period"].as_f64().unwrap();
    assert!((t - 4.0 * std::f64::consts::PI).abs() < 1e-12);
    assert!(r["residual"].as_f64().unwrap() < 1e-10);
}

#[test]
fn h5_certificate() {
    let o = run(&["h5-periodic", "--mu1", "-1", "--mu2", "2", "--energy", "10"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let c = stdout_json(&o);
    let v0: Vec<f64> = c["V0"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    let z0 = c["z0"].as_f64().unwrap();
    let e = 0.5 * (v0.iter().map(|x| x * x).sum::<f64>() + z0 * z0);
    assert!((e - 10.0).abs() < 1e-12);
    assert!(c["drift"].as_f64().unwrap().abs() < 1e-12);
    assert!(c["residual"].as_f64().unwrap() < 1e-10);
    assert!(c["T"].as_f64().unwrap() > 0.0);
}

#[test]
fn selftest_passes() {
    let out = TempDir::new().unwrap();
    let o = run(&["selftest", "--seed", "7", "--trials", "5", "--out", out.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_str(&fs::read_to_string(out.path().join("selftest.json")).unwrap()).unwrap();
    assert_eq!(r["seed"], 7);
}

#[test]
fn input_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("missing.json", None),
        ("garbage.json", Some("{ not json")),
        ("preset.json", Some(r#"{"algebra": "heisenberg(zero)", "initial": {"velocity": [1, 0, 0]}}"#)),
        ("dims.json", Some(r#"{"algebra": "heisenberg(1)", "initial": {"velocity": [1, 0]}}"#)),
        ("field.json", Some(r#"{"algebra": "heisenberg(1)", "initial": {"velocity": [1, 0, 0]}, "colour": 1}"#)),
        (
            "time.json",
            Some(
                r#"{"algebra": "heisenberg(1)", "initial": {"velocity": [1, 0, 0]}, "time": {"t_max": -1, "samples": 3}}"#,
            ),
        ),
        (
            "open.json",
            Some(
                r#"{"algebra": "heisenberg(2)", "force": {"matrix": [
                [0, 0, 0, 0, -1], [0, 0, 0, 0, 0], [0, 0, 0, 0, 0], [0, 0, 0, 0, 0], [1, 0, 0, 0, 0]]},
                "initial": {"velocity": [1, 0, 0, 0, 0]}}"#,
            ),
        ),
        (
            "skew.json",
            Some(
                r#"{"algebra": "heisenberg(1)", "force": {"matrix": [[1, 0, 0], [0, 0, 0], [0, 0, 0]]}, "initial": {"velocity": [1, 0, 0]}}"#,
            ),
        ),
    ];
    for (name, body) in cases {
        let p = match body {
            Some(b) => write_scenario(&dir, name, b),
            None => dir.path().join(name).to_string_lossy().into_owned(),
        };
        let o = run(&["trajectory", "--scenario", &p]);
        assert_eq!(code(&o), 2, "{name}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
    assert_eq!(code(&run(&["trajectory"])), 2);
    assert_eq!(code(&run(&["h5-periodic", "--mu1", "-1", "--mu2", "2", "--energy", "-1"])), 2);
}

#[test]
fn unsupported_dispatch_exits_3() {
    let dir = TempDir::new().unwrap();
    let p = write_scenario(
        &dir,
        "s.json",
        r#"{"algebra": "heisenberg(1)", "force": {"type2_U": [0, 1, 0]},
            "initial": {"velocity": [1, 0, 0]}, "solver": "closedform"}"#,
    );
    assert_eq!(code(&run(&["trajectory", "--scenario", &p])), 3);
    let p = write_scenario(
        &dir,
        "t.json",
        r#"{"algebra": "heisenberg(1)", "force": {"exact": {"Z": [0, 0, 1]}},
            "initial": {"velocity": [1, 0, 0]}, "solver": "h3_type2"}"#,
    );
    assert_eq!(code(&run(&["trajectory", "--scenario", &p])), 3);
    // type I on H3 has no periodicity verdict
    let (o, _) = periodicity(&p, &[]);
    assert_eq!(code(&o), 3);
    assert_eq!(code(&run(&["h5-periodic", "--mu1", "1", "--mu2", "1", "--energy", "10"])), 3);
}

#[test]
fn oracle_disagreement_exits_4_after_writing() {
    let path = scenarios().join("h3_type2_cn.json");
    let out = TempDir::new().unwrap();
    let o = run(&[
        "trajectory",
        "--scenario",
        path.to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
        "--oracle",
        "--tol",
        "1e-300",
    ]);
    assert_eq!(code(&o), 4);
    let m = metadata(&out);
    assert_eq!(m["oracle"]["passed"], false);
    assert!(out.path().join("trajectory.csv").exists());
}

#[test]
fn explicit_oracle_solver() {
    let dir = TempDir::new().unwrap();
    let p = write_scenario(
        &dir,
        "s.json",
        r#"{"algebra": "heisenberg(1)", "force": {"exact": {"Z": [0, 0, 1]}},
            "initial": {"velocity": [1, 0, 0.5]}, "solver": "oracle", "time": {"t_max": 2, "samples": 5}}"#,
    );
    let o = run(&["trajectory", "--scenario", &p, "--format", "json"]);
    assert_eq!(code(&o), 0);
    let doc = stdout_json(&o);
    assert_eq!(doc["metadata"]["closed_form"], false);
    assert_eq!(doc["samples"].as_array().unwrap().len(), 5);
}
