use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparse-noma")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn validator() -> jsonschema::Validator {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../schema/v1.schema.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

struct CsvRow {
    scheme: String,
    beta: f64,
    rate: f64,
    route: String,
}

fn csv_rows(text: &str) -> Vec<CsvRow> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(lines.next().unwrap(), "scheme,d,beta_d,beta,ebn0_db,snr,rate,route,stderr");
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f.len(), 9, "{l}");
            CsvRow { scheme: f[0].into(), beta: f[3].parse().unwrap(), rate: f[6].parse().unwrap(), route: f[7].into() }
        })
        .collect()
}

#[test]
fn params_values_and_bad_degree() {
    let v = json(&["params", "--d", "3", "--beta-d", "2"]);
    let p = &v["params"];
    assert_eq!(v["schema"], "v1");
    assert!((p["beta"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-15);
    assert!((p["point_mass_at_zero"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    let lp = (2f64.sqrt() + 1.0).powi(2) / 3.0;
    assert!((p["lambda_plus"].as_f64().unwrap() - lp).abs() < 1e-14);

    let out = run(&["params", "--d", "1", "--beta-d", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert_eq!(run(&["params", "--d", "2", "--beta-d", "2", "--format", "svg"]).status.code(), Some(2));
    assert_eq!(run(&["params", "--d", "2"]).status.code(), Some(2));
}

#[test]
fn density_csv_layout() {
    let out = run(&["density", "--d", "3", "--beta-d", "2", "--points", "50"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# schema=v1"));
    assert!(lines.next().unwrap().starts_with("# point_mass_at_zero=0.333"));
    assert_eq!(lines.next(), Some("lambda,rho"));
    let samples: Vec<(f64, f64)> = lines
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert_eq!(samples.len(), 50);
    assert!(samples.windows(2).all(|w| w[1].0 > w[0].0));
    assert!(samples.iter().all(|s| s.1 > 0.0));
    // the continuous part carries mass 1 - 1/3
    let h = samples[1].0 - samples[0].0;
    let mass: f64 = samples.iter().map(|s| s.1).sum::<f64>() * h;
    assert!((mass - 2.0 / 3.0).abs() < 0.05, "{mass}");
}

#[test]
fn capacity_at_the_arcsine_point() {
    let out = run(&["capacity", "--d", "2", "--beta-d", "2", "--snr-db", "10"]);
    assert!(out.status.success());
    let rows = csv_rows(&stdout(&out));
    let rate = |s: &str| rows.iter().find(|r| r.scheme == s).unwrap().rate;
    assert!((rate("sparse_opt") - 2.9619).abs() < 1e-4);
    assert!((rate("sparse_lmmse") - 2.1962).abs() < 1e-4);
    assert!((rate("cover_wyner") - 11f64.log2()).abs() < 1e-12);
    assert!((rate("orthogonal") - 11f64.log2()).abs() < 1e-12);
    assert!(rate("rs_cdma_opt") < rate("sparse_opt"));
    assert!(rows.iter().all(|r| r.route == "closed_form" && r.beta == 1.0));

    let out = run(&["capacity", "--d", "2", "--beta-d", "3", "--snr-db", "0"]);
    let rows = csv_rows(&stdout(&out));
    assert!(rows.iter().all(|r| r.scheme != "orthogonal"));
    assert_eq!(rows.len(), 5);
}

#[test]
fn sweep_round_trip_and_envelope_concavity() {
    let out = run(&["sweep", "--d", "3", "--ebn0-db", "10", "--beta-min", "0.5", "--beta-max", "3", "--beta-step", "0.25"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.starts_with("# schema=v1\n"));
    let rows = csv_rows(&text);

    let lattice: Vec<&CsvRow> = rows.iter().filter(|r| r.scheme == "sparse_opt").collect();
    assert_eq!(lattice.len(), 8); // βd = 2..=9
    assert!(lattice.iter().all(|r| r.route == "lattice"));
    assert_eq!(rows.iter().filter(|r| r.scheme == "cover_wyner").count(), 11);

    for route in ["envelope_sparse_opt", "envelope_sparse_lmmse"] {
        let env: Vec<(f64, f64)> =
            rows.iter().filter(|r| r.route == route).map(|r| (r.beta, r.rate)).collect();
        assert!(env.len() >= 8);
        for w in env.windows(3) {
            let s1 = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            let s2 = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
            assert!(s2 <= s1 + 1e-9, "{route}: {w:?}");
        }
    }
    // every lattice point lies on or under its envelope
    for p in &lattice {
        let e = rows.iter().find(|r| r.route == "envelope_sparse_opt" && (r.beta - p.beta).abs() < 1e-12).unwrap();
        assert!(e.rate >= p.rate - 1e-12);
    }

    assert_eq!(run(&["sweep", "--d", "3", "--ebn0-db", "10", "--beta-min", "2", "--beta-max", "1"]).status.code(), Some(2));
    let svg = stdout(&run(&["sweep", "--d", "2", "--ebn0-db", "6", "--beta-min", "0.5", "--beta-max", "2", "--format", "svg"]));
    assert!(svg.starts_with("<svg") && svg.contains("polyline"));
}

#[test]
fn small_montecarlo_run() {
    let args = ["montecarlo", "--d", "2", "--beta-d", "2", "--snr-db", "10", "--n", "400", "--trials", "3", "--seed", "7"];
    let out = run(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("# check=ks_distance passed=true"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 4);
    let mc = rows.iter().find(|r| r.scheme == "sparse_opt" && r.route == "monte_carlo").unwrap();
    assert!((mc.rate / 2.9619 - 1.0).abs() < 0.01);
    assert_eq!(stdout(&run(&args)), text);

    assert_eq!(run(&["montecarlo", "--d", "2", "--beta-d", "2", "--snr-db", "10", "--phase", "qpsk"]).status.code(), Some(2));
}

#[test]
fn validate_quick_and_fault_injection() {
    let out = run(&["validate", "--quick"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).starts_with("# schema=v1\ncheck,passed,seconds,detail\n"));

    let out = run(&["validate", "--quick", "--inject-fault", "wrong-branch"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).lines().any(|l| l.starts_with("stieltjes_branch,false,")));

    let out = run(&["validate", "--quick", "--inject-fault", "drop-point-mass"]);
    assert_eq!(out.status.code(), Some(1));

    assert_eq!(run(&["validate", "--inject-fault", "nonsense"]).status.code(), Some(2));
}

#[test]
fn json_outputs_match_the_schema() {
    let v = validator();
    let docs = [
        json(&["params", "--d", "4", "--beta-d", "3"]),
        json(&["density", "--d", "4", "--beta-d", "3", "--points", "20", "--format", "json"]),
        json(&["capacity", "--d", "3", "--beta-d", "6", "--snr-db", "-3", "--format", "json"]),
        json(&["sweep", "--d", "2", "--ebn0-db", "3", "--beta-min", "0.5", "--beta-max", "2.5", "--format", "json"]),
        json(&["montecarlo", "--d", "3", "--beta-d", "2", "--snr-db", "0", "--n", "150", "--trials", "2", "--format", "json"]),
        json(&["validate", "--quick", "--format", "json"]),
    ];
    for doc in &docs {
        let errors: Vec<String> = v.iter_errors(doc).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{}: {errors:?}", doc["command"]);
    }
    let mut broken = docs[2].clone();
    broken["rows"][0]["route"] = "guessed".into();
    assert!(!v.is_valid(&broken));
}

#[test]
fn out_flag_writes_a_file() {
    let path = std::env::temp_dir().join(format!("sparse-noma-cli-{}.csv", std::process::id()));
    let out = run(&["capacity", "--d", "2", "--beta-d", "2", "--snr-db", "10", "--out", path.to_str().unwrap()]);
    assert!(out.status.success() && out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert_eq!(csv_rows(&text).len(), 6);
}
