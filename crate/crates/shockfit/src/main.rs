//! `shockfit`: transonic shock fitting for 2-D reacting Euler flow in a
//! nearly flat nozzle. Subcommands mirror the pipeline stages: background
//! shock, front location, linearized solve, fitted-front solve, parameter
//! sweeps, and the verification battery.

use clap::{Parser, Subcommand};
use shockfit::background::{background_constants, solve_normal_shock};
use shockfit::config::{RunConfig, Scenario};
use shockfit::linfield::LinearGridSpec;
use shockfit::locator::{HypothesisCase, LocationSolution, Locator, RootPolicy};
use shockfit::nonlinear::{solve_transonic, TransonicOptions};
use shockfit::output::{
    fmt_float, write_convergence, write_fields, write_front, write_locations, LocateRow,
};
use shockfit::verify::run_battery;
use shockfit::Error;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "shockfit",
    about = "Steady transonic shock fitting for exothermically reacting nozzle flow"
)]
struct Cli {
    /// Path to the TOML run configuration.
    #[arg(long, global = true, default_value = "shockfit.toml")]
    config: PathBuf,
    /// Output directory (overrides [output].dir; SHOCKFIT_OUT overrides both).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Root selection when several admissible front positions exist.
    #[arg(long, global = true, value_parser = ["nearest", "smallest", "largest"])]
    root_policy: Option<String>,
    /// Nonlinear iteration tolerance (overrides [numerics].tol).
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the background normal shock and report its constants.
    Background,
    /// Locate the approximate shock front from the solvability equation.
    Locate,
    /// Locate the front over a grid of perturbation scales.
    Sweep,
    /// Solve the linearized field problem at the located front.
    Linear,
    /// Run the full fitted-front nonlinear solve.
    Solve,
    /// Run the verification battery and exit nonzero on any failure.
    Verify,
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    });
}

fn run(cli: &Cli) -> shockfit::Result<i32> {
    let config = RunConfig::load(&cli.config)?;
    let base_dir = cli.config.parent().unwrap_or(Path::new(".")).to_path_buf();
    let mut sc = config.resolve(&base_dir)?;
    if let Some(tol) = cli.tol {
        sc.numerics.tol = Some(tol);
    }
    if let Some(out) = &cli.out {
        sc.out_dir = out.clone();
    }
    if let Ok(env_out) = std::env::var("SHOCKFIT_OUT") {
        sc.out_dir = PathBuf::from(env_out);
    }
    let policy = match cli.root_policy.as_deref() {
        Some("nearest") => RootPolicy::NearestXiStar,
        Some("smallest") => RootPolicy::Smallest,
        Some("largest") => RootPolicy::Largest,
        _ => sc.numerics.root_policy.into(),
    };
    for note in &sc.notes {
        eprintln!("note: {note}");
    }
    std::fs::create_dir_all(&sc.out_dir)?;
    match cli.command {
        Command::Background => cmd_background(&sc),
        Command::Locate => cmd_locate(&sc, policy),
        Command::Sweep => cmd_sweep(&sc, policy, cli.workers.max(1)),
        Command::Linear => cmd_linear(&sc, policy),
        Command::Solve => cmd_solve(&sc, policy),
        Command::Verify => cmd_verify(&sc),
    }
}

fn case_id(case: &HypothesisCase) -> f64 {
    match case {
        HypothesisCase::H1 { .. } => 1.0,
        HypothesisCase::H2 { .. } => 2.0,
        HypothesisCase::H3 { .. } => 3.0,
        HypothesisCase::H4 => 4.0,
    }
}

fn cmd_background(sc: &Scenario) -> shockfit::Result<i32> {
    let bg = solve_normal_shock(&sc.gas, sc.inflow, sc.require_ignition)?;
    let consts = background_constants(&sc.gas, &bg)?;
    let res = bg.rh_residuals(&sc.gas)?;
    println!("background normal shock");
    for (label, s) in [("upstream", &bg.minus), ("downstream", &bg.plus)] {
        println!(
            "  {label}: p = {}, q = {}, S = {}, Z = {}, rho = {}, T = {}, M = {}",
            fmt_float(s.state.p),
            fmt_float(s.state.q),
            fmt_float(s.state.s),
            fmt_float(s.state.z),
            fmt_float(s.rho),
            fmt_float(s.t),
            fmt_float(s.mach),
        );
    }
    println!(
        "  p_ratio = {}",
        fmt_float(bg.plus.state.p / bg.minus.state.p)
    );
    println!("  mass_flux = {}", fmt_float(bg.mass_flux));
    println!("  K1 = {}", fmt_float(consts.k1));
    println!("  K2 = {}", fmt_float(consts.k2));
    println!(
        "  f1 = ({}, {}), f4 = ({}, {}), f5 = ({}, {})  [minus, plus]",
        fmt_float(consts.f1_minus),
        fmt_float(consts.f1_plus),
        fmt_float(consts.f4_minus),
        fmt_float(consts.f4_plus),
        fmt_float(consts.f5_minus),
        fmt_float(consts.f5_plus),
    );
    println!(
        "  RH residuals: [{}, {}, {}, {}]",
        fmt_float(res[0]),
        fmt_float(res[1]),
        fmt_float(res[2]),
        fmt_float(res[3])
    );
    if let Some(diag) = consts.k2_diagnostic() {
        println!("  diagnostic: {diag}");
    }
    Ok(0)
}

fn print_location(sc: &Scenario, sol: &LocationSolution) {
    println!("shock location ({} case)", sc.hypothesis.name());
    println!(
        "  sigma = {}, kappa = {}",
        fmt_float(sol.sigma),
        fmt_float(sol.kappa)
    );
    println!("  xi_dot = {}", fmt_float(sol.xi_dot));
    if let Some(xs) = sol.xi_star {
        println!("  xi_star = {}", fmt_float(xs));
    }
    println!(
        "  roots = [{}]",
        sol.all_roots
            .iter()
            .map(|r| fmt_float(*r))
            .collect::<Vec<_>>()
            .join(", ")
    );
    println!(
        "  P* = {}, R range = [{}, {}]",
        fmt_float(sol.p_star),
        fmt_float(sol.r_inf),
        fmt_float(sol.r_sup)
    );
    println!(
        "  admissible = {} (margin {}, beta0 {})",
        sol.admissible,
        fmt_float(sol.margin),
        fmt_float(sol.beta0)
    );
    println!("  monotone = {}", sol.monotone);
    for d in &sol.diagnostics {
        println!("  diagnostic: {d}");
    }
}

fn cmd_locate(sc: &Scenario, policy: RootPolicy) -> shockfit::Result<i32> {
    let bg = solve_normal_shock(&sc.gas, sc.inflow, sc.require_ignition)?;
    let consts = background_constants(&sc.gas, &bg)?;
    let loc = Locator::new(&bg, &consts, &sc.pert);
    let sol = loc.locate(&sc.hypothesis, policy)?;
    print_location(sc, &sol);
    for item in loc.hypothesis_checks(&sc.hypothesis, &sol) {
        println!(
            "  check {}: {} (margin {})",
            item.name,
            if item.ok { "ok" } else { "VIOLATED" },
            fmt_float(item.margin)
        );
    }
    let row = LocateRow {
        sigma: sol.sigma,
        kappa: sol.kappa,
        case_id: case_id(&sc.hypothesis.case),
        xi_dot: sol.xi_dot,
        n_roots: sol.all_roots.len(),
        admissible_margin: sol.margin,
        r_inf: sol.r_inf,
        r_sup: sol.r_sup,
        p_star: sol.p_star,
    };
    write_locations(&sc.out_dir.join("locate.csv"), &[row])?;
    println!("wrote {}", sc.out_dir.join("locate.csv").display());
    Ok(0)
}

fn cmd_sweep(sc: &Scenario, policy: RootPolicy, workers: usize) -> shockfit::Result<i32> {
    let bg = solve_normal_shock(&sc.gas, sc.inflow, sc.require_ignition)?;
    let consts = background_constants(&sc.gas, &bg)?;
    let sweep = sc
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("sweep subcommand needs a [sweep] block".into()))?;
    // Point list per hypothesis: H1 sweeps sigma, H2/H3 sweep kappa,
    // H4 takes the Cartesian product.
    let points: Vec<(f64, f64)> = match sc.hypothesis.case {
        HypothesisCase::H1 { a1, s } => {
            if sweep.sigma.is_empty() {
                return Err(Error::Config(
                    "[sweep].sigma must be non-empty for H1".into(),
                ));
            }
            sweep
                .sigma
                .iter()
                .map(|&sg| (sg, a1 * sg.powf(s)))
                .collect()
        }
        HypothesisCase::H2 { a2, s } => {
            if sweep.kappa.is_empty() {
                return Err(Error::Config(
                    "[sweep].kappa must be non-empty for H2".into(),
                ));
            }
            sweep.kappa.iter().map(|&k| (a2 * k.powf(s), k)).collect()
        }
        HypothesisCase::H3 { a } => {
            if sweep.kappa.is_empty() {
                return Err(Error::Config(
                    "[sweep].kappa must be non-empty for H3".into(),
                ));
            }
            sweep.kappa.iter().map(|&k| (a * k, k)).collect()
        }
        HypothesisCase::H4 => {
            if sweep.sigma.is_empty() || sweep.kappa.is_empty() {
                return Err(Error::Config(
                    "[sweep] needs both sigma and kappa lists for H4".into(),
                ));
            }
            sweep
                .sigma
                .iter()
                .flat_map(|&sg| sweep.kappa.iter().map(move |&k| (sg, k)))
                .collect()
        }
    };
    let loc = Locator::new(&bg, &consts, &sc.pert);
    let mut results: Vec<Option<shockfit::Result<LocationSolution>>> = Vec::new();
    results.resize_with(points.len(), || None);
    // Fan out over a scoped pool; results merge back in input order.
    std::thread::scope(|scope| {
        let chunks = points.len().div_ceil(workers);
        for (worker, slot_chunk) in results.chunks_mut(chunks).enumerate() {
            let loc = &loc;
            let hyp = &sc.hypothesis;
            let points = &points;
            scope.spawn(move || {
                for (off, slot) in slot_chunk.iter_mut().enumerate() {
                    let (sigma, kappa) = points[worker * chunks + off];
                    *slot = Some(loc.locate_at(hyp, sigma, kappa, policy));
                }
            });
        }
    });
    let mut rows = Vec::new();
    let mut failures = 0usize;
    for (k, slot) in results.into_iter().enumerate() {
        let (sigma, kappa) = points[k];
        match slot.expect("worker filled the slot") {
            Ok(sol) => rows.push(LocateRow {
                sigma: sol.sigma,
                kappa: sol.kappa,
                case_id: case_id(&sc.hypothesis.case),
                xi_dot: sol.xi_dot,
                n_roots: sol.all_roots.len(),
                admissible_margin: sol.margin,
                r_inf: sol.r_inf,
                r_sup: sol.r_sup,
                p_star: sol.p_star,
            }),
            Err(e) => {
                eprintln!("sweep point (sigma={sigma}, kappa={kappa}) failed: {e}");
                failures += 1;
            }
        }
    }
    let path = sc.out_dir.join("sweep.csv");
    write_locations(&path, &rows)?;
    println!(
        "wrote {} ({} points, {} failures)",
        path.display(),
        rows.len(),
        failures
    );
    Ok(if failures > 0 { 3 } else { 0 })
}

fn cmd_linear(sc: &Scenario, policy: RootPolicy) -> shockfit::Result<i32> {
    let bg = solve_normal_shock(&sc.gas, sc.inflow, sc.require_ignition)?;
    let consts = background_constants(&sc.gas, &bg)?;
    let loc = Locator::new(&bg, &consts, &sc.pert);
    let sol = loc.locate(&sc.hypothesis, policy)?;
    print_location(sc, &sol);
    let nx_up = sc.numerics.nx_up.unwrap_or_else(|| {
        shockfit::linfield::upstream_required_nx(&bg, sc.pert.length, sc.numerics.ny)
            .max(sc.numerics.nx)
    });
    let lin = shockfit::linfield::solve_linear(
        &sc.gas,
        &bg,
        &consts,
        &sc.pert,
        sol.xi_dot,
        LinearGridSpec {
            nx_up,
            nx_down: sc.numerics.nx,
            ny: sc.numerics.ny,
        },
    )?;
    let slope_norm = lin.psi_slope.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    println!("linearized solve");
    println!(
        "  compatibility residual = {}",
        fmt_float(lin.compat_residual)
    );
    println!("  max |psi_dot'| = {}", fmt_float(slope_norm));
    let up = &lin.upstream;
    write_fields(
        &sc.out_dir.join("linear_upstream.csv"),
        &up.dp,
        &up.dtheta,
        &up.dq,
        &up.ds,
        &up.dz,
    )?;
    let dn = &lin.downstream;
    write_fields(
        &sc.out_dir.join("linear_downstream.csv"),
        &dn.dp,
        &dn.dtheta,
        &dn.dq,
        &dn.ds,
        &dn.dz,
    )?;
    write_front(
        &sc.out_dir.join("linear_front.csv"),
        &lin.psi,
        &lin.psi_slope,
    )?;
    println!("wrote linear_upstream.csv, linear_downstream.csv, linear_front.csv");
    Ok(0)
}

fn cmd_solve(sc: &Scenario, policy: RootPolicy) -> shockfit::Result<i32> {
    let bg = solve_normal_shock(&sc.gas, sc.inflow, sc.require_ignition)?;
    let consts = background_constants(&sc.gas, &bg)?;
    let loc = Locator::new(&bg, &consts, &sc.pert);
    let sol = loc.locate(&sc.hypothesis, policy)?;
    print_location(sc, &sol);
    if !sol.admissible {
        return Err(Error::Admissibility("located front is inadmissible".into()));
    }
    let opts = TransonicOptions {
        nx_down: sc.numerics.nx,
        ny: sc.numerics.ny,
        nx_up: sc.numerics.nx_up,
        tol: sc.numerics.tol,
        max_sweeps: sc.numerics.max_sweeps,
        beta0: sol.beta0,
    };
    let ts = solve_transonic(
        &sc.gas, &bg, &consts, &sc.pert, sol.xi_dot, sol.beta0, &opts,
    )?;
    let eps = sc.pert.sigma + sc.pert.kappa;
    println!("fitted-front solve");
    println!("  sweeps = {}, converged = {}", ts.log.len(), ts.converged);
    println!(
        "  front: xi = {}, dxi = {}",
        fmt_float(ts.front.xi),
        fmt_float(ts.state.dxi)
    );
    println!(
        "  max |G_j| on the front = {}",
        fmt_float(ts.rh_residual_max)
    );
    println!(
        "  |psi' - psi_dot'| = {} (vs (sigma+kappa)^1.5/2 = {})",
        fmt_float(ts.slope_distance),
        fmt_float(0.5 * eps.powf(1.5))
    );
    println!("  |dU - U_dot_plus| = {}", fmt_float(ts.field_distance));
    println!("  K2 identity gap = {}", fmt_float(ts.k2_identity_gap));
    for d in &ts.diagnostics {
        println!("  diagnostic: {d}");
    }
    let st = &ts.state;
    write_fields(
        &sc.out_dir.join("downstream.csv"),
        &st.dp,
        &st.dtheta,
        &st.dq,
        &st.ds,
        &st.dz,
    )?;
    let up = &ts.upstream;
    // Upstream dump holds deviations from the uniform inflow.
    let minus = bg.minus.state;
    let to_delta = |f: &shockfit::grid::Field, base: f64| {
        let mut d = f.clone();
        for i in 0..=f.grid.nx {
            for j in 0..=f.grid.ny {
                d[(i, j)] = f[(i, j)] - base;
            }
        }
        d
    };
    write_fields(
        &sc.out_dir.join("upstream.csv"),
        &to_delta(&up.p, minus.p),
        &to_delta(&up.theta, 0.0),
        &to_delta(&up.q, minus.q),
        &to_delta(&up.s, minus.s),
        &to_delta(&up.z, minus.z),
    )?;
    write_front(
        &sc.out_dir.join("front.csv"),
        &ts.front.psi(),
        &ts.front.slope,
    )?;
    write_convergence(&sc.out_dir.join("convergence.csv"), &ts.log)?;
    println!("wrote downstream.csv, upstream.csv, front.csv, convergence.csv");
    if !ts.converged {
        return Err(Error::Divergence(format!(
            "iteration did not reach tolerance within {} sweeps",
            opts.max_sweeps
        )));
    }
    Ok(0)
}

fn cmd_verify(sc: &Scenario) -> shockfit::Result<i32> {
    let results = run_battery(sc)?;
    let mut failures = 0usize;
    for r in &results {
        println!(
            "{} {}: {}",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        );
        if !r.pass {
            failures += 1;
        }
    }
    println!("{} checks, {} failures", results.len(), failures);
    Ok(if failures > 0 { 1 } else { 0 })
}
