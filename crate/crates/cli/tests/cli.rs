use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qlandauer::channel::ChoiMap;
use qlandauer::io::{write_json, ChannelDoc, MatrixDoc};
use qlandauer::landauer::WorkBoundReport;
use qlandauer::qmat::DensityOperator;
use qlandauer::sdp::CertificateDump;
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qlandauer"));
    cmd.env_remove("TOL_SUPPORT");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json_of(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("valid JSON on stdout")
}

struct Fixtures {
    dir: TempDir,
}

impl Fixtures {
    fn new() -> Self {
        Fixtures {
            dir: TempDir::new().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn state(&self, name: &str, rho: &DensityOperator) -> String {
        let p = self.path(name);
        write_json(&p, &MatrixDoc::from_state(rho)).unwrap();
        p.display().to_string()
    }

    fn channel(&self, name: &str, ch: &ChoiMap) -> String {
        let p = self.path(name);
        write_json(&p, &ChannelDoc::from_channel(ch)).unwrap();
        p.display().to_string()
    }

    fn raw(&self, name: &str, text: &str) -> String {
        let p = self.path(name);
        std::fs::write(&p, text).unwrap();
        p.display().to_string()
    }
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn demo_wstate_prints_log_three_halves() {
    let o = run(&["demo", "wstate"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "H₀(S|M) = 0.584963 bits");
    let j = json_of(&run(&["--json", "demo", "wstate"]));
    let bits = j["h_zero_cond_bits"].as_f64().unwrap();
    assert!((bits - 1.5f64.log2()).abs() < 1e-9);
}

#[test]
fn majorize_inline_spectra() {
    let o = run(&["majorize", "[1,0]", "[0.5,0.5]"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("majorizes: true"));
    let o = run(&["majorize", "[0.5,0.5]", "[1,0]"]);
    assert!(stdout(&o).contains("majorizes: false"));
    let j = json_of(&run(&["--json", "majorize", "[0.5,0.5]", "[1,0]", "--lambda", "-1"]));
    assert_eq!(j["lambda_majorizes"], Value::Bool(true));
    assert!((j["absorbed_randomness"].as_f64().unwrap() + 1.0).abs() < 1e-9);
    let j = json_of(&run(&["--json", "majorize", "[0.5,0.5]", "[1,0]", "--lambda", "-0.9"]));
    assert_eq!(j["lambda_majorizes"], Value::Bool(false));
}

#[test]
fn majorize_reads_spectrum_files() {
    let f = Fixtures::new();
    let a = f.raw("a.json", r#"{"spectrum": [0.7, 0.3]}"#);
    let b = f.raw("b.json", "[0.5, 0.25, 0.25]");
    let o = run(&["majorize", &a, &b]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("majorizes: true"));
}

#[test]
fn workbound_identity_is_free_and_erasure_costs_one_bit() {
    let f = Fixtures::new();
    let sigma = f.state("sigma.json", &DensityOperator::diagonal(&[0.6, 0.4]).unwrap());
    let id = f.channel("id.json", &ChoiMap::identity(2));
    let erase = f.channel("erase.json", &ChoiMap::erasure(2));

    let o = run(&["workbound", &sigma, &id]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("λ_opt = 0.000000 bits"), "{}", stdout(&o));

    let o = run(&["--json", "workbound", &sigma, &erase, "--sdp-check", "--temp", "300"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let j = json_of(&o);
    assert!((j["lambda_opt"].as_f64().unwrap() + 1.0).abs() < 1e-9);
    assert!((j["sdp_check"]["alpha"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    let expected = 1.380649e-23 * 300.0 * std::f64::consts::LN_2;
    assert!((j["joules"].as_f64().unwrap() - expected).abs() < 1e-30);
}

#[test]
fn workbound_json_round_trips_through_the_report_type() {
    let f = Fixtures::new();
    let sigma = f.state("sigma.json", &DensityOperator::diagonal(&[0.5, 0.3, 0.2]).unwrap());
    let erase = f.channel("erase.json", &ChoiMap::erasure(3));
    let o = run(&["--json", "workbound", &sigma, &erase]);
    let report: WorkBoundReport = serde_json::from_slice(&o.stdout).expect("schema matches");
    assert!((report.work_min_kt_ln2 - 3f64.log2()).abs() < 1e-9);
    assert!(report.residuals.passed);
}

#[test]
fn certify_accepts_dumps_and_rejects_tampered_ones() {
    let f = Fixtures::new();
    let sigma = f.state("sigma.json", &DensityOperator::diagonal(&[0.6, 0.4]).unwrap());
    let erase = f.channel("erase.json", &ChoiMap::erasure(2));
    for (name, extra) in [("closed.json", None), ("sdp.json", Some("--sdp-check"))] {
        let dump = f.path(name);
        let mut args = vec!["workbound", &sigma, &erase, "--dump", path_str(&dump)];
        args.extend(extra);
        assert!(run(&args).status.success());

        let o = run(&["certify", path_str(&dump)]);
        assert!(o.status.success(), "{}", stdout(&o));
        assert!(stdout(&o).contains("certificate: passed"));

        let mut doc: CertificateDump = serde_json::from_str(&std::fs::read_to_string(&dump).unwrap()).unwrap();
        doc.alpha = 1.5;
        let bad = f.path(&format!("bad_{name}"));
        write_json(&bad, &doc).unwrap();
        let o = run(&["certify", path_str(&bad)]);
        assert_eq!(o.status.code(), Some(1));
        assert!(stdout(&o).contains("FAILED"));
    }
}

#[test]
fn entropy_measures_on_a_bell_state() {
    let f = Fixtures::new();
    let bell = f.raw(
        "bell.json",
        r#"{"dims": [2, 2], "entries": [[0.5,0],[0,0],[0,0],[0.5,0],[0,0],[0,0],[0,0],[0,0],
            [0,0],[0,0],[0,0],[0,0],[0.5,0],[0,0],[0,0],[0.5,0]]}"#,
    );
    for m in ["h0", "hmin", "hmax", "vn"] {
        let j = json_of(&run(&["--json", "entropy", &bell, "--measure", m, "--cond", "1"]));
        assert!((j["bits"].as_f64().unwrap() + 1.0).abs() < 1e-6, "{m}: {j}");
        let j = json_of(&run(&["--json", "entropy", &bell, "--measure", m]));
        assert!(j["bits"].as_f64().unwrap().abs() < 1e-6, "{m}: {j}");
    }
}

#[test]
fn smoothing_flag() {
    let f = Fixtures::new();
    let s = f.state("s.json", &DensityOperator::diagonal(&[0.5, 0.3, 0.2]).unwrap());
    let j = json_of(&run(&["--json", "entropy", &s, "--measure", "h0", "--eps", "0.25"]));
    assert!((j["bits"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let j = json_of(&run(&["--json", "entropy", &s, "--measure", "hmin", "--eps", "0.1"]));
    assert!((j["bits"].as_f64().unwrap() + 0.4f64.log2()).abs() < 1e-12);
    let o = run(&["entropy", &s, "--measure", "vn", "--eps", "0.1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn support_tolerance_override() {
    let f = Fixtures::new();
    let s = f.state("s.json", &DensityOperator::diagonal(&[1.0 - 1e-8, 1e-8]).unwrap());
    let j = json_of(&run(&["--json", "entropy", &s, "--measure", "h0"]));
    assert!((j["bits"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let o = bin()
        .args(["--json", "entropy", &s, "--measure", "h0"])
        .env("TOL_SUPPORT", "1e-6")
        .output()
        .unwrap();
    assert!(json_of(&o)["bits"].as_f64().unwrap().abs() < 1e-12);
    let o = bin()
        .args(["entropy", &s, "--measure", "h0"])
        .env("TOL_SUPPORT", "-3")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("TOL_SUPPORT"));
}

#[test]
fn parse_errors_exit_two_and_name_the_field() {
    let f = Fixtures::new();
    let short = f.raw("short.json", r#"{"dims": [2], "entries": [[1, 0]]}"#);
    let o = run(&["entropy", &short, "--measure", "h0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("entries"));

    let missing = f.raw("missing.json", r#"{"entries": [[1, 0]]}"#);
    let o = run(&["entropy", &missing, "--measure", "h0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dims"));

    let not_psd = f.raw("neg.json", r#"{"dims": [2], "entries": [[1.5,0],[0,0],[0,0],[-0.5,0]]}"#);
    let o = run(&["entropy", &not_psd, "--measure", "h0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("entries"));

    let sigma = f.state("sigma.json", &DensityOperator::diagonal(&[0.5, 0.5]).unwrap());
    let bad_choi = f.raw(
        "ch.json",
        r#"{"dim_in": 2, "dim_out": 2, "choi": [[1,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],
            [0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[-1,0]]}"#,
    );
    let o = run(&["workbound", &sigma, &bad_choi]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("choi"));

    let o = run(&["entropy", path_str(&f.path("absent.json")), "--measure", "h0"]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["majorize", "[1, 0", "[1]"]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["entropy"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn domain_errors_exit_one() {
    let f = Fixtures::new();
    let s = f.state("s.json", &DensityOperator::diagonal(&[0.5, 0.5]).unwrap());
    let o = run(&["entropy", &s, "--measure", "h0", "--cond", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["demo", "fig1", "--n", "40"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["majorize", "[0.5, 0.6]", "[1]"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn seeded_demos_are_deterministic() {
    for args in [["demo", "random", "--seed", "5"], ["demo", "decouple", "--seed", "5"]] {
        let a = run(&args);
        let b = run(&args);
        assert!(a.status.success(), "{}", stderr(&a));
        assert_eq!(a.stdout, b.stdout);
    }
    let j = json_of(&run(&["--json", "demo", "random", "--seed", "5"]));
    let alpha = j["alpha_primal"].as_f64().unwrap();
    assert!((j["sdp_alpha"].as_f64().unwrap() - alpha).abs() < 1e-5);
    assert!((j["dual_value"].as_f64().unwrap() - alpha).abs() < 1e-7);
}

#[test]
fn gap_and_iid_tables() {
    let j = json_of(&run(&["--json", "demo", "fig1", "--n", "10"]));
    let rows = j["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 10);
    let last = &rows[9];
    assert!((last["replacement_bound"].as_f64().unwrap() - (1025f64.log2() - 1.0)).abs() < 1e-9);
    assert_eq!(last["identity_bound"].as_f64().unwrap(), 0.0);

    let j = json_of(&run(&["--json", "demo", "iid", "--n", "200"]));
    let rows = j["rows"].as_array().unwrap();
    let rate = rows.last().unwrap()["rate"].as_f64().unwrap();
    assert!((rate - j["shannon"].as_f64().unwrap()).abs() <= 0.1);
}
