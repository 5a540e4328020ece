//! End-to-end pipeline behavior: the fitted-front iteration against the
//! linearized seed, symmetry of the purely reactive case, monotone response
//! to exit pressure, and the conservation structure of converged solutions.

use shockfit::background::{
    background_constants, solve_normal_shock, unit_flux_inflow, BackgroundConstants,
    BackgroundShock,
};
use shockfit::gas::{FlowState, GasModel, IgnitionParams};
use shockfit::locator::{Hypothesis, HypothesisCase, Locator, NozzlePerturbation, RootPolicy};
use shockfit::nonlinear::{solve_transonic, TransonicOptions, TransonicSolution};
use shockfit::profile::Profile;

fn setup() -> (GasModel, BackgroundShock, BackgroundConstants) {
    let gas = GasModel::new(
        1.4,
        2.5,
        0.5,
        1e-2,
        IgnitionParams::new(4.0, 1.0, 2.0, 1.0).unwrap(),
    )
    .unwrap();
    let inflow = unit_flux_inflow(&gas, 1.0, 2.0, 1.0).unwrap();
    let bg = solve_normal_shock(&gas, inflow, true).unwrap();
    let consts = background_constants(&gas, &bg).unwrap();
    (gas, bg, consts)
}

fn flat_reactive_pert(
    bg: &BackgroundShock,
    consts: &BackgroundConstants,
    kappa: f64,
    target_xi: f64,
) -> NozzlePerturbation {
    let p_kappa_star = consts.k2 * target_xi - consts.f1_plus;
    NozzlePerturbation::new(
        1.0,
        0.0,
        kappa,
        Profile::zero(),
        Profile::zero(),
        Profile::constant(p_kappa_star / bg.c_plus()),
    )
    .unwrap()
}

fn matched_pert(
    bg: &BackgroundShock,
    consts: &BackgroundConstants,
    sigma: f64,
    kappa: f64,
    xi_star: f64,
) -> NozzlePerturbation {
    // H4-style data: both reduced exit pressures sit on the matched curve,
    // so the located front is xi_star for every (sigma, kappa).
    let c_plus = bg.c_plus();
    let theta = Profile::poly(vec![0.0, 0.0, 0.0, 1.0]).unwrap();
    let theta_total = theta.integrate(0.0, 1.0);
    let r_sigma = theta_total - consts.k1 * theta.integrate(0.0, xi_star);
    let r_kappa = -consts.f1_plus + consts.k2 * xi_star;
    NozzlePerturbation::new(
        1.0,
        sigma,
        kappa,
        theta,
        Profile::constant(r_sigma / c_plus),
        Profile::constant(r_kappa / c_plus),
    )
    .unwrap()
}

fn run(
    gas: &GasModel,
    bg: &BackgroundShock,
    consts: &BackgroundConstants,
    pert: &NozzlePerturbation,
    hyp: &Hypothesis,
    nx_down: usize,
    ny: usize,
) -> TransonicSolution {
    let loc = Locator::new(bg, consts, pert);
    let sol = loc
        .locate_at(hyp, pert.sigma, pert.kappa, RootPolicy::NearestXiStar)
        .expect("locate");
    assert!(sol.admissible);
    let opts = TransonicOptions {
        nx_down,
        ny,
        nx_up: None,
        tol: None,
        max_sweeps: 100,
        beta0: sol.beta0,
    };
    solve_transonic(gas, bg, consts, pert, sol.xi_dot, sol.beta0, &opts).expect("solve")
}

#[test]
fn flat_reactive_case_keeps_the_front_flat() {
    let (gas, bg, consts) = setup();
    let kappa = 1e-2;
    let pert = flat_reactive_pert(&bg, &consts, kappa, 0.55);
    let hyp = Hypothesis {
        case: HypothesisCase::H2 { a2: 1e-6, s: 2.0 },
        beta0: None,
    };
    let sol = run(&gas, &bg, &consts, &pert, &hyp, 64, 32);
    assert!(sol.converged, "diagnostics: {:?}", sol.diagnostics);
    let max_slope = sol.front.slope.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(
        max_slope < 1e-10,
        "front should stay flat, max slope {max_slope:.3e}"
    );
    // The nonlinear correction to the front constant is second order in
    // kappa plus discretization.
    let h = 1.0 / 32.0;
    assert!(
        sol.state.dxi.abs() < 50.0 * (kappa * kappa + h * h),
        "front displacement {:.3e} too large",
        sol.state.dxi
    );
    println!(
        "flat case: sweeps {}, dxi {:.3e}, max slope {:.3e}, rh {:.3e}",
        sol.log.len(),
        sol.state.dxi,
        max_slope,
        sol.rh_residual_max
    );
}

#[test]
fn generic_case_converges_and_satisfies_jump_conditions() {
    let (gas, bg, consts) = setup();
    let pert = matched_pert(&bg, &consts, 5e-3, 5e-3, 0.5);
    let hyp = Hypothesis {
        case: HypothesisCase::H4,
        beta0: None,
    };
    let sol = run(&gas, &bg, &consts, &pert, &hyp, 96, 48);
    assert!(sol.converged, "diagnostics: {:?}", sol.diagnostics);
    assert!(sol.log.len() <= 20, "took {} sweeps", sol.log.len());
    let jp = bg.pressure_jump();
    assert!(
        sol.rh_residual_max < 1e-8 * jp,
        "jump residual {:.3e} vs floor {:.3e}",
        sol.rh_residual_max,
        1e-8 * jp
    );
    println!(
        "generic: sweeps {}, dxi {:.3e}, rh {:.3e}, |psi'-psi_dot'| {:.3e}",
        sol.log.len(),
        sol.state.dxi,
        sol.rh_residual_max,
        sol.slope_distance
    );
    // Contraction factor stays under 1/2 with the perturbation-sized slack.
    let eps = pert.sigma + pert.kappa;
    let bound = 0.5 + 2.0 * eps.sqrt();
    for l in &sol.log {
        println!(
            "  sweep {}: delta_f {:.3e} delta_s {:.3e} ratio {:.3} rh {:.3e}",
            l.sweep, l.field_delta, l.slope_delta, l.contraction_ratio, l.rh_residual_max
        );
        if l.contraction_ratio.is_finite() {
            assert!(
                l.contraction_ratio <= bound,
                "sweep {} contraction ratio {:.3} above {bound:.3}",
                l.sweep,
                l.contraction_ratio
            );
        }
    }
}

#[test]
fn overtight_admissibility_floor_is_reported() {
    // An absurd beta0 makes the solvability derivative fall below half the
    // floor, which must surface as an admissibility failure.
    let (gas, bg, consts) = setup();
    let pert = matched_pert(&bg, &consts, 5e-3, 5e-3, 0.5);
    let hyp = Hypothesis {
        case: HypothesisCase::H4,
        beta0: None,
    };
    let loc = Locator::new(&bg, &consts, &pert);
    let sol = loc
        .locate_at(&hyp, pert.sigma, pert.kappa, RootPolicy::NearestXiStar)
        .unwrap();
    let opts = shockfit::nonlinear::TransonicOptions {
        nx_down: 32,
        ny: 16,
        nx_up: None,
        tol: None,
        max_sweeps: 10,
        beta0: 1e6,
    };
    match solve_transonic(&gas, &bg, &consts, &pert, sol.xi_dot, 1e6, &opts) {
        Err(shockfit::Error::Admissibility(msg)) => {
            assert!(msg.contains("derivative"), "message: {msg}");
        }
        other => panic!("expected an admissibility failure, got {other:?}"),
    }
}

#[test]
fn distance_to_linearization_shrinks_superlinearly() {
    // || psi' - psi_dot' || under halving (sigma+kappa): order >= 1.5.
    let (gas, bg, consts) = setup();
    let mut dists = Vec::new();
    for &sc in &[1.0, 0.5, 0.25] {
        let sigma = 1e-2 * sc;
        let kappa = 1e-2 * sc;
        let pert = matched_pert(&bg, &consts, sigma, kappa, 0.5);
        let hyp = Hypothesis {
            case: HypothesisCase::H4,
            beta0: None,
        };
        let sol = run(&gas, &bg, &consts, &pert, &hyp, 96, 48);
        assert!(sol.converged);
        dists.push(sol.slope_distance.max(1e-300));
    }
    let order1 = (dists[0] / dists[1]).log2();
    let order2 = (dists[1] / dists[2]).log2();
    println!("slope distances {dists:?} orders {order1:.2} {order2:.2}");
    assert!(
        order1 >= 1.5 && order2 >= 1.5,
        "expected superlinear closeness, got orders {order1:.2}, {order2:.2} ({dists:?})"
    );
}

#[test]
fn solvability_derivative_tracks_the_front_sensitivity() {
    // At the linearized seed, dI/d(dxi) should sit near
    // -sigma K1 Theta(xi) + kappa K2, and the first root obeys the
    // linear-in-perturbation bound.
    use shockfit::linfield::{solve_linear, LinearGridSpec};
    use shockfit::nonlinear::{
        solve_upstream_nonlinear, IterationContext, IterationState, SweepWork,
    };

    let (gas, bg, consts) = setup();
    let pert = matched_pert(&bg, &consts, 5e-3, 5e-3, 0.5);
    let hyp = Hypothesis {
        case: HypothesisCase::H4,
        beta0: None,
    };
    let loc = Locator::new(&bg, &consts, &pert);
    let sol = loc
        .locate_at(&hyp, pert.sigma, pert.kappa, RootPolicy::NearestXiStar)
        .unwrap();
    let (nx, ny) = (64usize, 48usize);
    let lin = solve_linear(
        &gas,
        &bg,
        &consts,
        &pert,
        sol.xi_dot,
        LinearGridSpec {
            nx_up: 96,
            nx_down: nx,
            ny,
        },
    )
    .unwrap();
    let up_grid = shockfit::grid::FieldGrid::new(96, ny, 0.0, 1.0).unwrap();
    let upstream = solve_upstream_nonlinear(&gas, &bg, &pert, up_grid).unwrap();
    let ctx = IterationContext::new(
        &gas, &bg, &consts, &pert, &upstream, sol.xi_dot, nx, sol.beta0,
    )
    .unwrap();
    let state = IterationState {
        dp: lin.downstream.dp.clone(),
        dtheta: lin.downstream.dtheta.clone(),
        dq: lin.downstream.dq.clone(),
        ds: lin.downstream.ds.clone(),
        dz: lin.downstream.dz.clone(),
        slope: lin.psi_slope.clone(),
        dxi: 0.0,
        sweep: 0,
    };
    let work = SweepWork::build(&ctx, &state).unwrap();
    let h = 1e-7;
    let (ip, _) = work.solvability(&ctx, &state, h).unwrap();
    let (im, _) = work.solvability(&ctx, &state, -h).unwrap();
    let deriv = (ip - im) / (2.0 * h);
    let expected = -pert.sigma * consts.k1 * pert.theta.eval(sol.xi_dot) + pert.kappa * consts.k2;
    let eps = pert.sigma + pert.kappa;
    assert!(
        (deriv - expected).abs() < 5.0 * eps.powf(1.5),
        "dI/d(dxi) = {deriv:.6e} vs -sigma K1 Theta + kappa K2 = {expected:.6e}"
    );
    // First displacement from the seed stays within the linear bound.
    let dxi = shockfit::nonlinear::solvability_root(&ctx, &state, &work).unwrap();
    assert!(
        dxi.abs() <= 5.0 * eps,
        "first dxi = {dxi:.3e} vs C (sigma+kappa)"
    );
}

#[test]
fn converged_fields_satisfy_the_transformed_system() {
    // Direct finite-difference residual of the straightened-coordinate
    // reacting system at convergence: rounding-level for the corner-free
    // flat case, second-order decay in the interior for the generic case.
    use shockfit::nonlinear::{
        transformed_residual_interior, transformed_residual_max, IterationContext,
    };
    let (gas, bg, consts) = setup();

    let flat = flat_reactive_pert(&bg, &consts, 1e-2, 0.55);
    let hyp2 = Hypothesis {
        case: HypothesisCase::H2 { a2: 1e-6, s: 2.0 },
        beta0: None,
    };
    let sol = run(&gas, &bg, &consts, &flat, &hyp2, 64, 32);
    let ctx = IterationContext::new(
        &gas,
        &bg,
        &consts,
        &flat,
        &sol.upstream,
        sol.xi_dot,
        64,
        1e-3,
    )
    .unwrap();
    let r_flat = transformed_residual_max(&ctx, &sol.state).unwrap();
    assert!(r_flat < 1e-4, "flat-case equation residual {r_flat:.3e}");

    let hyp4 = Hypothesis {
        case: HypothesisCase::H4,
        beta0: None,
    };
    let mut residuals = Vec::new();
    for &(nx, ny) in &[(64usize, 32usize), (128, 64)] {
        let pert = matched_pert(&bg, &consts, 5e-3, 5e-3, 0.5);
        let sol = run(&gas, &bg, &consts, &pert, &hyp4, nx, ny);
        let ctx = IterationContext::new(
            &gas,
            &bg,
            &consts,
            &pert,
            &sol.upstream,
            sol.xi_dot,
            nx,
            1e-3,
        )
        .unwrap();
        residuals.push(transformed_residual_interior(&ctx, &sol.state, 0.2).unwrap());
    }
    println!("interior equation residuals {residuals:?}");
    assert!(
        residuals[1] < 5e-3,
        "interior residual too large: {residuals:?}"
    );
    assert!(
        residuals[0] / residuals[1] >= 2.5,
        "interior residual should shrink under refinement: {residuals:?}"
    );
}

#[test]
fn degenerate_perturbation_is_rejected() {
    let (gas, bg, consts) = setup();
    let pert = NozzlePerturbation::new(
        1.0,
        0.0,
        0.0,
        Profile::zero(),
        Profile::zero(),
        Profile::zero(),
    )
    .unwrap();
    let opts = shockfit::nonlinear::TransonicOptions {
        nx_down: 32,
        ny: 16,
        nx_up: None,
        tol: None,
        max_sweeps: 10,
        beta0: 1e-3,
    };
    let res = solve_transonic(&gas, &bg, &consts, &pert, 0.5, 1e-3, &opts);
    assert!(res.is_err(), "zero perturbation must be rejected");
}

#[test]
fn first_sweep_update_is_quadratic_in_the_perturbation() {
    let (gas, bg, consts) = setup();
    let mut first_deltas = Vec::new();
    for &sc in &[1.0, 0.5, 0.25] {
        let pert = matched_pert(&bg, &consts, 1e-2 * sc, 1e-2 * sc, 0.5);
        let hyp = Hypothesis {
            case: HypothesisCase::H4,
            beta0: None,
        };
        let sol = run(&gas, &bg, &consts, &pert, &hyp, 96, 48);
        first_deltas.push(sol.log[0].field_delta + sol.log[0].slope_delta);
    }
    let o1 = (first_deltas[0] / first_deltas[1]).log2();
    let o2 = (first_deltas[1] / first_deltas[2]).log2();
    assert!(
        o1 >= 1.5 && o2 >= 1.5,
        "first-sweep updates should shrink quadratically: {first_deltas:?} ({o1:.2}, {o2:.2})"
    );
}

#[test]
fn exit_pressure_pushes_the_front_toward_the_exit() {
    let (gas, bg, consts) = setup();
    let hyp = Hypothesis {
        case: HypothesisCase::H2 { a2: 1e-6, s: 2.0 },
        beta0: None,
    };
    let mut last = 0.0;
    for &target in &[0.35, 0.5, 0.65] {
        let pert = flat_reactive_pert(&bg, &consts, 1e-2, target);
        let sol = run(&gas, &bg, &consts, &pert, &hyp, 48, 24);
        let xi = sol.front.xi;
        assert!(
            xi > last,
            "front must move toward the exit: {xi} after {last}"
        );
        last = xi;
    }
}

#[test]
fn converged_solution_conserves_and_orders_states() {
    let (gas, bg, consts) = setup();
    let pert = matched_pert(&bg, &consts, 5e-3, 5e-3, 0.5);
    let hyp = Hypothesis {
        case: HypothesisCase::H4,
        beta0: None,
    };
    let sol = run(&gas, &bg, &consts, &pert, &hyp, 96, 48);
    let st = &sol.state;
    let g = st.dp.grid;
    let hx = g.hx();
    // Bernoulli constant along z1 on every streamline, O(h^2) + iteration tol.
    let b_plus = gas.bernoulli(&bg.plus.state).unwrap();
    let mut b_drift = 0.0f64;
    for j in 0..=g.ny {
        let b_seed = {
            let u = FlowState {
                p: bg.plus.state.p + st.dp[(0, j)],
                theta: st.dtheta[(0, j)],
                q: bg.plus.state.q + st.dq[(0, j)],
                s: bg.plus.state.s + st.ds[(0, j)],
                z: bg.plus.state.z + st.dz[(0, j)],
            };
            gas.bernoulli(&u).unwrap()
        };
        for i in 0..=g.nx {
            let u = FlowState {
                p: bg.plus.state.p + st.dp[(i, j)],
                theta: st.dtheta[(i, j)],
                q: bg.plus.state.q + st.dq[(i, j)],
                s: bg.plus.state.s + st.ds[(i, j)],
                z: bg.plus.state.z + st.dz[(i, j)],
            };
            b_drift = b_drift.max((gas.bernoulli(&u).unwrap() - b_seed).abs());
        }
    }
    println!(
        "downstream Bernoulli drift {b_drift:.3e} (h^2 = {:.3e})",
        hx * hx
    );
    assert!(b_drift < 20.0 * (hx * hx + 1e-8) * b_plus);
    // Z stays in [0,1] and never increases along the stream direction.
    for j in 0..=g.ny {
        let mut prev = f64::INFINITY;
        for i in 0..=g.nx {
            let z = bg.plus.state.z + st.dz[(i, j)];
            assert!((-1e-12..=1.0 + 1e-12).contains(&z), "Z out of range: {z}");
            assert!(z <= prev + 1e-12, "Z must not increase downstream");
            prev = z;
        }
    }
    // Upstream reactant also drains monotonically.
    let up = &sol.upstream;
    for j in (0..=up.grid.ny).step_by(8) {
        let mut prev = f64::INFINITY;
        for i in 0..=up.grid.nx {
            let z = up.z[(i, j)];
            assert!((0.0..=1.0).contains(&z));
            assert!(z <= prev + 1e-12);
            prev = z;
        }
    }
    // Entropy rises across the fitted front at every stream node.
    for (j, &psi_j) in sol.front.psi().iter().enumerate() {
        let s_minus = up.s.sample_at(psi_j, j);
        let s_plus = bg.plus.state.s + st.ds[(0, j)];
        assert!(s_plus > s_minus, "entropy jump must be positive at j={j}");
    }
}
