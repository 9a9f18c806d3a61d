use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rinorm"))
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(cmd: &str, config: &Path, extra: &[&str]) -> Output {
    bin().arg(cmd).arg("--config").arg(config).args(extra).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn norm_examples() {
    let out = run("norm", &configs().join("norm.toml"), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let items = v["items"].as_array().unwrap();
    let value = |name: &str| {
        items.iter().find(|i| i["name"] == name).unwrap()["value"].as_f64().unwrap()
    };
    assert_eq!(value("lebesgue_indicator"), 2.0);
    assert_eq!(value("orlicz_square"), 2.0);
    assert!((value("gamma_indicator") - 1.0).abs() < 1e-12);
    assert_eq!(v["command"], "norm");
    assert_eq!(v["config_digest"].as_str().unwrap().len(), 64);
}

#[test]
fn failing_verdict_exits_one() {
    let out = run("check", &configs().join("check.toml"), &[]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    let item = v["items"].as_array().unwrap().iter().find(|i| i["name"] == "log_critical_equivalence").unwrap();
    assert_eq!(item["verdict"], "fails");
    assert!(item["growth_slope"].as_f64().is_some());
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.toml",
        "[[norm]]\nspec = { kind = \"lebesgue\", p = 2.0 }\ninput = { step = [[0.0, 1.0], [1.0, 0.0]] }\ncolour = 1\n",
    );
    assert_eq!(run("norm", &cfg, &[]).status.code(), Some(2));
    assert_eq!(bin().arg("norm").output().unwrap().status.code(), Some(2));
}

#[test]
fn random_family_needs_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "fam.toml",
        "[[fourier]]\nkind = \"square_integral\"\nfamily = { dimension = 1, size = 3 }\n",
    );
    assert_eq!(run("verify-fourier", &cfg, &[]).status.code(), Some(2));
    let out = run("verify-fourier", &cfg, &["--seed", "5"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["items"][0]["samples"].as_array().unwrap().len(), 3);
}

#[test]
fn non_convergence_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "nc.toml",
        "[quad]\nrel_tol = 1e-14\nmax_panels = 1\n\n[[norm]]\n\
         spec = { kind = \"gamma\", p = 2.0, u = { form = \"log_critical\", p = 2.0, alpha = 0.5 } }\n\
         input = { step = [[0.0, 1.0], [0.5, 2.0], [3.0, 0.0]] }\n",
    );
    assert_eq!(run("norm", &cfg, &[]).status.code(), Some(3));
}

#[test]
fn reports_are_deterministic_and_timings_are_separate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("transform.toml");
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    run("transform-weight", &cfg, &["--out", a.to_str().unwrap(), "--jobs", "1"]);
    run("transform-weight", &cfg, &["--out", b.to_str().unwrap(), "--jobs", "3"]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(dir.path().join("a.timings.json").exists());
    let csv = std::fs::read_to_string(dir.path().join("a.level_smallest_critical.csv")).unwrap();
    assert!(csv.starts_with("t,value,pointwise,primitive,primitive_identity\n"));
}

#[test]
fn overrides_change_the_digest() {
    let cfg = configs().join("norm.toml");
    let base = json(&run("norm", &cfg, &[]))["config_digest"].clone();
    let tol = json(&run("norm", &cfg, &["--tol", "1e-6"]))["config_digest"].clone();
    assert_ne!(base, tol);
}

#[test]
fn transform_tables_agree() {
    let out = run("transform-weight", &configs().join("transform.toml"), &[]);
    assert_eq!(out.status.code(), Some(0));
    for item in json(&out)["items"].as_array().unwrap() {
        assert!(item["max_rel_diff"].as_f64().unwrap() < 1e-8, "{item}");
    }
}
