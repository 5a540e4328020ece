//! Acceptance suite: one test per acceptance criterion, each printing a
//! PASS/FAIL line with the measured quantities. Runtime budgets are
//! asserted for optimized builds and reported otherwise.

use shockfit::background::{background_constants, solve_normal_shock};
use shockfit::config::RunConfig;
use shockfit::verify::{
    check_elliptic, check_location_rates, check_nonlinear_behavior, check_rh_exactness,
    check_transfer_oracle, check_upstream_identity_order, reference_scenario, CheckResult,
};
use std::path::Path;
use std::time::Instant;

fn report(criterion: &str, budget_s: f64, started: Instant, checks: &[CheckResult]) {
    let elapsed = started.elapsed().as_secs_f64();
    let mut all_pass = true;
    for c in checks {
        println!(
            "criterion {criterion} [{}]: {} - {}",
            c.name,
            if c.pass { "PASS" } else { "FAIL" },
            c.detail
        );
        all_pass &= c.pass;
    }
    println!("criterion {criterion}: elapsed {elapsed:.2} s (budget {budget_s} s)");
    assert!(all_pass, "criterion {criterion} failed");
    if !cfg!(debug_assertions) {
        assert!(
            elapsed < budget_s,
            "criterion {criterion} exceeded its runtime budget: {elapsed:.2} s"
        );
    }
}

fn shipped_config_path() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml")
}

#[test]
fn criterion_1_rh_exactness() {
    let t = Instant::now();
    let checks = [check_rh_exactness()];
    report("1 (R-H exactness)", 1.0, t, &checks);
}

#[test]
fn criterion_2_transfer_coefficient_oracle() {
    let t = Instant::now();
    let sc = reference_scenario(64, 32);
    let bg = solve_normal_shock(&sc.gas, sc.inflow, true).unwrap();
    let checks = [check_transfer_oracle(&sc.gas, &bg)];
    report("2 (jump-gradient oracle)", 5.0, t, &checks);
}

#[test]
fn criterion_3_location_rates() {
    let t = Instant::now();
    let sc = reference_scenario(64, 32);
    let bg = solve_normal_shock(&sc.gas, sc.inflow, true).unwrap();
    let consts = background_constants(&sc.gas, &bg).unwrap();
    let checks = [check_location_rates(&bg, &consts, sc.pert.length)];
    report("3 (front-location rates)", 10.0, t, &checks);
}

#[test]
fn criterion_4_upstream_identity_order() {
    let t = Instant::now();
    let sc = reference_scenario(64, 32);
    let bg = solve_normal_shock(&sc.gas, sc.inflow, true).unwrap();
    let consts = background_constants(&sc.gas, &bg).unwrap();
    let checks = [check_upstream_identity_order(&bg, &consts, sc.pert.length)];
    report("4 (upstream identity order)", 30.0, t, &checks);
}

#[test]
fn criterion_5_elliptic_solver() {
    let t = Instant::now();
    let sc = reference_scenario(64, 32);
    let bg = solve_normal_shock(&sc.gas, sc.inflow, true).unwrap();
    let consts = background_constants(&sc.gas, &bg).unwrap();
    let checks = [check_elliptic(&sc.gas, &bg, &consts, sc.pert.length)];
    report("5 (elliptic solver)", 60.0, t, &checks);
}

#[test]
fn criteria_6_and_7_nonlinear_and_conservation() {
    // Runs on the shipped configuration at its stated 256x64 resolution.
    let t = Instant::now();
    let cfg = RunConfig::load(&shipped_config_path()).expect("shipped config parses");
    let sc = cfg
        .resolve(shipped_config_path().parent().unwrap())
        .expect("resolves");
    assert_eq!(
        (sc.numerics.nx, sc.numerics.ny),
        (256, 64),
        "shipped resolution"
    );
    let bg = solve_normal_shock(&sc.gas, sc.inflow, sc.require_ignition).unwrap();
    let consts = background_constants(&sc.gas, &bg).unwrap();
    let checks = check_nonlinear_behavior(&sc, &bg, &consts);
    report("6+7 (fitted front + conservation)", 300.0, t, &checks);
}

#[test]
fn criterion_8_determinism() {
    let t = Instant::now();
    let bin = env!("CARGO_BIN_EXE_shockfit");
    let cfg = shipped_config_path();
    let tmp = tempfile::tempdir().unwrap();
    let run_verify = |dir: &Path| {
        let out = std::process::Command::new(bin)
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(dir)
            .arg("verify")
            .output()
            .expect("verify runs");
        assert!(
            out.status.success(),
            "verify failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        out.stdout
    };
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    std::fs::create_dir_all(&a).unwrap();
    std::fs::create_dir_all(&b).unwrap();
    let out1 = run_verify(&a);
    let out2 = run_verify(&b);
    assert_eq!(
        out1, out2,
        "verify output must be byte-identical across runs"
    );

    // Identical configs must also produce byte-identical CSV artifacts.
    let run_solve = |dir: &Path| {
        let out = std::process::Command::new(bin)
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(dir)
            .arg("solve")
            .output()
            .expect("solve runs");
        assert!(
            out.status.success(),
            "solve failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    };
    run_solve(&a);
    run_solve(&b);
    for name in [
        "downstream.csv",
        "upstream.csv",
        "front.csv",
        "convergence.csv",
    ] {
        let fa = std::fs::read(a.join(name)).unwrap();
        let fb = std::fs::read(b.join(name)).unwrap();
        assert_eq!(fa, fb, "{name} differs across identical runs");
    }
    println!(
        "criterion 8 (determinism): PASS - verify stdout and 4 CSV artifacts byte-identical \
         ({} bytes of verify output)",
        out1.len()
    );
    println!("criterion 8: elapsed {:.2} s", t.elapsed().as_secs_f64());
}
