use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use covsteer::scenarios::{example1, uav};
use covsteer::SteeringMode;
use covsteer_cli::config::{InstanceConfig, EXAMPLE1, UAV_EXACT, UAV_RELAXED};
use covsteer_cli::output;
use covsteer_cli::policy::PolicyFile;
use covsteer_conic::parse_standard_form;
use tempfile::TempDir;

fn covsteer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_covsteer"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn first_line(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn solve_example1_writes_outputs() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("solve");
    let res = covsteer(&["solve", "bundled:example1", "-o", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    for f in ["report.json", "policy.json", "policy.csv", "statistics.csv", "gaps.csv"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["deterministic"], false);
    let policy: PolicyFile = serde_json::from_str(&fs::read_to_string(out.join("policy.json")).unwrap()).unwrap();
    assert!(policy.to_policy().is_ok());
}

#[test]
fn golden_csv_headers() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("solve");
    assert_eq!(code(&covsteer(&["solve", "bundled:example1", "-o", out.to_str().unwrap()])), 0);
    assert_eq!(first_line(&out.join("statistics.csv")), "k,mu_0,mu_1,sigma_0_0,sigma_0_1,sigma_1_1");
    assert_eq!(first_line(&out.join("gaps.csv")), "k,gap_m,gap_x,gap_u,norm_m,norm_x,norm_u");
    assert_eq!(first_line(&out.join("policy.csv")), "k,ubar_0,gain_0_0,gain_0_1,p_0_0");

    let sim = dir.path().join("sim");
    let res = covsteer(&[
        "simulate",
        "bundled:example1",
        "-p",
        out.join("policy.json").to_str().unwrap(),
        "-o",
        sim.to_str().unwrap(),
        "--samples",
        "200",
        "--seed",
        "3",
        "--family",
        "three-point",
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(first_line(&sim.join("trajectories.csv")), "trajectory,k,x_0,x_1,u_0");
    assert_eq!(first_line(&sim.join("sample_statistics.csv")), "k,mean_0,mean_1,cov_0_0,cov_0_1,cov_1_1");
    assert!(fs::read_to_string(sim.join("plot.svg")).unwrap().starts_with("<svg"));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(sim.join("validation.json")).unwrap()).unwrap();
    assert_eq!(v["samples"], 200);
    assert_eq!(v["family"], "three_point");
    // 200 trajectories, two rows each, plus the header.
    assert_eq!(fs::read_to_string(sim.join("trajectories.csv")).unwrap().lines().count(), 401);
}

#[test]
fn numbers_carry_seventeen_significant_digits() {
    let s = output::num(0.1);
    let mantissa = s.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17);
    assert_eq!(s.parse::<f64>().unwrap(), 0.1);
    assert_eq!(output::num(-1.0 / 3.0).parse::<f64>().unwrap(), -1.0 / 3.0);
}

#[test]
fn zero_horizon_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let text = EXAMPLE1.replace("horizon = 1", "horizon = 0");
    assert_ne!(text, EXAMPLE1);
    let path = write_config(dir.path(), "bad.toml", &text);
    let res = covsteer(&["solve", &path, "-o", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&res), 1);
    assert!(!res.stderr.is_empty());
}

#[test]
fn malformed_inputs_are_usage_errors() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();
    let path = write_config(dir.path(), "bad.toml", "mode = [");
    assert_eq!(code(&covsteer(&["solve", &path, "-o", out])), 1);
    let path = write_config(dir.path(), "extra.toml", &format!("{EXAMPLE1}\nunknown_key = 1\n"));
    assert_eq!(code(&covsteer(&["solve", &path, "-o", out])), 1);
    let asym = EXAMPLE1.replacen("sigma0 = [[1.0, 0.0], [0.0, 1.0]]", "sigma0 = [[1.0, 0.5], [0.0, 1.0]]", 1);
    assert_ne!(asym, EXAMPLE1);
    let path = write_config(dir.path(), "asym.toml", &asym);
    assert_eq!(code(&covsteer(&["solve", &path, "-o", out])), 1);
    assert_eq!(code(&covsteer(&["solve", "/nonexistent/config.toml", "-o", out])), 1);
    assert_eq!(code(&covsteer(&["reproduce", "no-such-scenario"])), 1);
    assert_eq!(code(&covsteer(&["frobnicate"])), 1);
    assert_eq!(code(&covsteer(&["simulate", "bundled:example1", "-o", out])), 1);
    assert_eq!(code(&covsteer(&["--help"])), 0);
}

#[test]
fn infeasible_instance_exits_with_two() {
    // The UAV with a 0.01 time step cannot contain its velocity noise.
    let text = UAV_RELAXED
        .replace(
            "a = { constant = [[1.0, 0.0, 0.1, 0.0], [0.0, 1.0, 0.0, 0.1],",
            "a = { constant = [[1.0, 0.0, 0.01, 0.0], [0.0, 1.0, 0.0, 0.01],",
        )
        .replace(
            "b = { constant = [[0.005, 0.0], [0.0, 0.005], [0.1, 0.0], [0.0, 0.1]] }",
            "b = { constant = [[0.00005, 0.0], [0.0, 0.00005], [0.01, 0.0], [0.0, 0.01]] }",
        );
    assert_eq!(text.matches("0.01, 0.0], [0.0, 1.0, 0.0, 0.01]").count(), 1);
    assert!(text.contains("0.00005"));
    let dir = TempDir::new().unwrap();
    let path = write_config(dir.path(), "uav-short-step.toml", &text);
    let res = covsteer(&["solve", &path, "-o", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&res), 2, "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn iteration_limit_exits_with_three() {
    let text = format!("{UAV_RELAXED}\n[solver]\nmax_iterations = 1\n");
    let dir = TempDir::new().unwrap();
    let path = write_config(dir.path(), "uav-one-iteration.toml", &text);
    let res = covsteer(&["solve", &path, "-o", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&res), 3, "{}", String::from_utf8_lossy(&res.stderr));
    assert!(String::from_utf8_lossy(&res.stderr).contains("iteration_limit"));
}

#[test]
fn config_round_trips_through_toml() {
    for text in [EXAMPLE1, UAV_RELAXED, UAV_EXACT] {
        let cfg = InstanceConfig::parse(text).unwrap();
        let again = InstanceConfig::parse(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.to_instance().unwrap(), cfg.to_instance().unwrap());
    }
}

#[test]
fn bundled_configs_match_library_scenarios() {
    assert_eq!(InstanceConfig::parse(EXAMPLE1).unwrap().to_instance().unwrap(), example1().unwrap());
    for (text, mode) in [(UAV_RELAXED, SteeringMode::Relaxed), (UAV_EXACT, SteeringMode::Exact)] {
        let from_file = InstanceConfig::parse(text).unwrap().to_instance().unwrap();
        let lib = uav(mode).unwrap();
        assert_eq!(from_file.mode(), mode);
        let (a, b) = (from_file.dynamics(), lib.dynamics());
        for k in 0..lib.horizon() {
            assert!((a.a(k) - b.a(k)).amax() <= 1e-15);
            assert!((a.b(k) - b.b(k)).amax() <= 1e-15);
            assert!((a.w(k) - b.w(k)).amax() <= 1e-15);
            for (x, y) in a.abar(k).iter().zip(b.abar(k)) {
                assert!((x - y).amax() <= 1e-15);
            }
            for (x, y) in a.bbar(k).iter().zip(b.bbar(k)) {
                assert!((x - y).amax() <= 1e-15);
            }
        }
        assert_eq!(from_file.boundary(), lib.boundary());
        assert_eq!(from_file.weights(), lib.weights());
    }
}

#[test]
fn config_subcommand_prints_bundled_file() {
    let res = covsteer(&["config", "uav-exact"]);
    assert_eq!(code(&res), 0);
    assert_eq!(String::from_utf8(res.stdout).unwrap(), UAV_EXACT);
    assert_eq!(code(&covsteer(&["config", "nope"])), 1);
}

#[test]
fn export_writes_parseable_programs() {
    let dir = TempDir::new().unwrap();
    for program in ["relaxed", "step2"] {
        let path = dir.path().join(format!("{program}.dat-s"));
        let res = covsteer(&["export", "bundled:example1", "-o", path.to_str().unwrap(), "--program", program]);
        assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
        let parsed = parse_standard_form(&fs::read_to_string(&path).unwrap()).unwrap();
        assert!(parsed.num_constraints() > 0);
    }
}

#[test]
fn reproduce_example1_passes() {
    let dir = TempDir::new().unwrap();
    let res = covsteer(&["reproduce", "example1", "-o", dir.path().to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert_eq!(code(&res), 0, "{stdout}");
    assert!(stdout.contains("PASS"));
    assert!(!stdout.contains("FAIL"));
}
