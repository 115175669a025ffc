use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn hubforge(args: &[&str], scenario_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hubforge"));
    cmd.args(args).env("RUST_LOG", "warn").env_remove("HUBFORGE_SCENARIO_DIR");
    if let Some(dir) = scenario_dir {
        cmd.env("HUBFORGE_SCENARIO_DIR", dir);
    }
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn toy_hub(name: &str, commodity: &str, phase: &str) -> String {
    let regas = if phase == "gaseous" {
        format!("node regas kind transport {{ site = port; input = {commodity}; output = {commodity}; efficiency = 0.98; capex = 100; lifetime = 30; }}\n")
    } else {
        String::new()
    };
    let tail = if phase == "gaseous" {
        format!("hyperedge {commodity} as arrived {{ from ship.out; to regas.in; }}\nhyperedge {commodity} as gas {{ from regas.out; to demand.in; }}\n")
    } else {
        format!("hyperedge {commodity} as arrived {{ from ship.out; to demand.in; }}\n")
    };
    format!(
        r#"hub {name};
horizon 168;
wacc 0.07;
site field "Field";
site port "Port" load_center;
commodity electricity GWh;
commodity {commodity} kt;
hhv {commodity} 20.0;
node pv kind source {{ site = field; commodity = electricity; profile = pv; capex = 400; fom = 8; lifetime = 25; }}
node wind kind source {{ site = field; commodity = electricity; profile = wind; capex = 1000; fom = 12; lifetime = 30; }}
node battery kind storage {{ site = field; commodity = electricity; charge_eff = 0.95; discharge_eff = 0.95; flow_capex = 160; stock_capex = 140; flow_lifetime = 10; stock_lifetime = 10; }}
node synth kind conversion {{ site = field; output = {commodity}; factor electricity in 40; min_level = 0.2; ramp = 0.5; capex = 30000; fom = 1000; lifetime = 20; }}
node tank kind storage {{ site = field; commodity = {commodity}; stock_capex = 5; }}
node ship kind transport {{ site = field; input = {commodity}; output = {commodity}; efficiency = 0.99; capex = 10; lifetime = 30; }}
{regas}node demand kind demand {{ site = port; commodity = {commodity}; quantity = 0.01; phase = {phase}; }}
hyperedge electricity {{ from pv.out; from wind.out; from battery.out; to battery.in; to synth.electricity; }}
hyperedge {commodity} as made {{ from synth.{commodity}; from tank.out; to tank.in; to ship.in; }}
{tail}"#
    )
}

fn toy_dir() -> TempDir {
    let dir = TempDir::new().unwrap();
    for (name, commodity, phase) in [
        ("methane", "ch4", "gaseous"),
        ("ammonia", "nh3", "gaseous"),
        ("hydrogen", "h2", "gaseous"),
        ("methanol", "ch3oh", "liquid"),
    ] {
        std::fs::write(dir.path().join(format!("{name}.hub")), toy_hub(&format!("toy_{name}"), commodity, phase)).unwrap();
    }
    dir
}

#[test]
fn check_bundled_scenarios() {
    for name in ["methane", "ammonia", "hydrogen", "methanol"] {
        let path = repo().join(format!("scenarios/{name}.hub"));
        let out = hubforge(&["check", path.to_str().unwrap()], None);
        assert_eq!(code(&out), 0, "{name}: {}", stderr(&out));
    }
}

#[test]
fn check_reports_each_syntax_error() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.hub");
    std::fs::write(&path, "hub bad;\nhorizon ;\ncommodity electricity GWh\nsite x \"X\";\n").unwrap();
    let out = hubforge(&["check", path.to_str().unwrap()], None);
    assert_eq!(code(&out), 1);
    let diagnostics: Vec<String> = stderr(&out).lines().filter(|l| !l.starts_with("error:") && l.contains("bad.hub:")).map(String::from).collect();
    assert!(stderr(&out).contains(&format!("{} error(s)", diagnostics.len())), "{}", stderr(&out));
    assert!(diagnostics.iter().any(|d| d.contains("bad.hub:2:9: syntax error")), "{}", stderr(&out));
    assert!(diagnostics.iter().any(|d| d.contains("bad.hub:4:1: syntax error")), "{}", stderr(&out));
}

#[test]
fn check_missing_file_is_io_error() {
    let out = hubforge(&["check", "/nonexistent/none.hub"], None);
    assert_eq!(code(&out), 2);
}

#[test]
fn methanol_has_no_gaseous_run() {
    let out = hubforge(&["run", "--scenario", "methanol", "--phase", "gaseous"], None);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    assert!(stderr(&out).contains("gaseous"));
}

#[test]
fn unknown_scenario_and_bad_flags_are_user_errors() {
    assert_eq!(code(&hubforge(&["run", "--scenario", "coal"], None)), 1);
    assert_eq!(code(&hubforge(&["run", "--scenario", "methane", "--horizon", "24"], None)), 1);
    assert_eq!(code(&hubforge(&["run", "--scenario", "methane", "--synth-seed", "1", "--profiles", "x.csv"], None)), 1);
    assert_eq!(code(&hubforge(&["run"], None)), 1);
    assert_eq!(code(&hubforge(&["frobnicate"], None)), 1);
}

#[test]
fn run_writes_report_and_lp_identically() {
    let dir = TempDir::new().unwrap();
    let model = dir.path().join("toy.hub");
    std::fs::write(&model, toy_hub("toy", "ch4", "gaseous")).unwrap();
    let mut outputs = Vec::new();
    for k in 0..2 {
        let report = dir.path().join(format!("r{k}.json"));
        let lp = dir.path().join(format!("m{k}.lp"));
        let out = hubforge(
            &["run", "--model", model.to_str().unwrap(), "--out", report.to_str().unwrap(), "--export-lp", lp.to_str().unwrap()],
            None,
        );
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        outputs.push((std::fs::read(&report).unwrap(), std::fs::read(&lp).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    let json: serde_json::Value = serde_json::from_slice(&outputs[0].0).unwrap();
    assert!(json["levelized_cost"].as_f64().unwrap() > 0.0);
    assert_eq!(json["schema_version"], 1);
    let lp = String::from_utf8(outputs[0].1.clone()).unwrap();
    assert!(lp.starts_with("Minimize\n") && lp.ends_with("End\n"));
}

#[test]
fn config_file_mirrors_flags() {
    let dir = TempDir::new().unwrap();
    let model = dir.path().join("toy.hub");
    std::fs::write(&model, toy_hub("toy", "ch4", "gaseous")).unwrap();
    let config = dir.path().join("run.conf");
    let report = dir.path().join("r.csv");
    std::fs::write(&config, format!("model = {}\nphase = liquid\nout = {}\n", model.display(), report.display())).unwrap();
    let out = hubforge(&["run", "--config", config.to_str().unwrap(), "--demand-twh", "0.5"], None);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = std::fs::read_to_string(&report).unwrap();
    assert!(csv.contains("phase,,liquid,"), "{csv}");
    assert!(csv.contains("delivered,,0.00958904109589"), "{csv}");
}

#[test]
fn infeasible_run_exits_3_and_leaves_nothing() {
    let dir = TempDir::new().unwrap();
    let model = dir.path().join("toy.hub");
    std::fs::write(&model, toy_hub("toy", "ch4", "gaseous")).unwrap();
    let profiles = dir.path().join("calm.csv");
    let mut csv = String::from("hour,pv_cf,wind_cf\n");
    for t in 0..168 {
        csv.push_str(&format!("{t},0,0\n"));
    }
    std::fs::write(&profiles, csv).unwrap();
    let report = dir.path().join("r.json");
    let lp = dir.path().join("m.lp");
    let out = hubforge(
        &[
            "run",
            "--model",
            model.to_str().unwrap(),
            "--profiles",
            profiles.to_str().unwrap(),
            "--out",
            report.to_str().unwrap(),
            "--export-lp",
            lp.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(!report.exists() && !lp.exists());
}

#[test]
fn missing_profile_file_is_io_error() {
    let dir = TempDir::new().unwrap();
    let model = dir.path().join("toy.hub");
    std::fs::write(&model, toy_hub("toy", "ch4", "gaseous")).unwrap();
    let out = hubforge(&["run", "--model", model.to_str().unwrap(), "--profiles", "/nonexistent.csv"], None);
    assert_eq!(code(&out), 2);
}

#[test]
fn scenario_dir_overrides_bundled_files() {
    let dir = toy_dir();
    let out = hubforge(&["run", "--scenario", "ammonia", "--horizon", "168"], Some(dir.path()));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["hub"], "toy_ammonia");
    assert_eq!(json["phase"], "gaseous");
    let empty = TempDir::new().unwrap();
    assert_eq!(code(&hubforge(&["run", "--scenario", "ammonia"], Some(empty.path()))), 2);
}

#[test]
fn compare_ranks_every_carrier_and_phase() {
    let dir = toy_dir();
    let out = hubforge(&["compare", "--horizon", "168", "--format", "json"], Some(dir.path()));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = json["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 7);
    let mut ranks: Vec<u64> = rows.iter().map(|r| r["rank"].as_u64().unwrap()).collect();
    ranks.sort();
    assert_eq!(ranks, (1..=7).collect::<Vec<_>>());
    let table = hubforge(&["compare", "--horizon", "168"], Some(dir.path()));
    assert_eq!(code(&table), 0);
    assert_eq!(String::from_utf8_lossy(&table.stdout).lines().count(), 8);
}

#[test]
fn compare_names_the_failing_carrier() {
    let dir = toy_dir();
    let broken = toy_hub("toy_hydrogen", "h2", "gaseous").replace("profile = wind", "profile = tide");
    std::fs::write(dir.path().join("hydrogen.hub"), broken).unwrap();
    let out = hubforge(&["compare", "--horizon", "168"], Some(dir.path()));
    assert_ne!(code(&out), 0);
    assert!(stderr(&out).contains("hydrogen"), "{}", stderr(&out));
}

#[test]
fn format_is_stable() {
    let path = repo().join("scenarios/ammonia.hub");
    let once = hubforge(&["format", path.to_str().unwrap()], None);
    assert_eq!(code(&once), 0);
    let dir = TempDir::new().unwrap();
    let copy = dir.path().join("a.hub");
    std::fs::write(&copy, &once.stdout).unwrap();
    let twice = hubforge(&["format", copy.to_str().unwrap()], None);
    assert_eq!(once.stdout, twice.stdout);
}

#[test]
fn profiles_command_writes_csv() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("p.csv");
    let out = hubforge(&["profiles", "--synth-seed", "3", "--horizon", "200", "--out", path.to_str().unwrap()], None);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 201);
    assert!(text.starts_with("hour,pv_cf,wind_cf\n"));
}
