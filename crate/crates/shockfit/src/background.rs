//! The unperturbed plane normal shock: a uniform supersonic state connected
//! to the unique uniform subsonic state by the Rankine–Hugoniot conditions,
//! plus the derived constants feeding the shock locator.

use crate::gas::{Derived, FlowState, GasModel};
use crate::{Error, Result};

/// One side of the background shock with its derived thermodynamics.
#[derive(Debug, Clone, Copy)]
pub struct SideState {
    pub state: FlowState,
    pub rho: f64,
    pub t: f64,
    pub c: f64,
    pub mach: f64,
}

impl SideState {
    fn from_state(gas: &GasModel, state: FlowState) -> Result<Self> {
        let Derived { rho, t, c, mach } = gas.derived(&state)?;
        Ok(Self {
            state,
            rho,
            t,
            c,
            mach,
        })
    }

    /// `rho * q`, the mass flux carried by this side.
    pub fn mass_flux(&self) -> f64 {
        self.rho * self.state.q
    }

    /// `rho * q^2`, the momentum-flux coefficient used throughout.
    pub fn rho_q2(&self) -> f64 {
        self.rho * self.state.q * self.state.q
    }
}

/// Background normal-shock pair.
///
/// Both states are stored in the caller's physical units; nothing is rescaled.
/// `mass_flux` records `rho_bar * q_bar` (identical on both sides), and the
/// Lagrangian stream coordinate of every field solver spans `[0, 1]`, i.e. the
/// stream tube carrying unit mass flux. Supply an inflow with
/// `rho * q = 1` (see `RunConfig`'s `unit_mass_flux`) when the tube should be
/// the full unit-height nozzle.
#[derive(Debug, Clone, Copy)]
pub struct BackgroundShock {
    pub minus: SideState,
    pub plus: SideState,
    pub mass_flux: f64,
}

impl BackgroundShock {
    /// `[p_bar] = p_plus - p_minus > 0`.
    pub fn pressure_jump(&self) -> f64 {
        self.plus.state.p - self.minus.state.p
    }

    /// Residuals of the four plane-shock jump conditions
    /// `([rho q], [rho q^2 + p], [B], [Z])`, with the Bernoulli form
    /// including the `q_e Z` term (it cancels since `[Z] = 0`).
    pub fn rh_residuals(&self, gas: &GasModel) -> Result<[f64; 4]> {
        let b_m = gas.bernoulli(&self.minus.state)?;
        let b_p = gas.bernoulli(&self.plus.state)?;
        Ok([
            self.plus.mass_flux() - self.minus.mass_flux(),
            (self.plus.rho_q2() + self.plus.state.p) - (self.minus.rho_q2() + self.minus.state.p),
            b_p - b_m,
            self.plus.state.z - self.minus.state.z,
        ])
    }

    /// Elliptic coefficient `(1/(rho_bar_+ q_bar_+)) (1-M_bar_+^2)/(rho_bar_+ q_bar_+^2)`,
    /// positive behind the shock.
    pub fn c_plus(&self) -> f64 {
        (1.0 / self.plus.mass_flux()) * (1.0 - self.plus.mach * self.plus.mach) / self.plus.rho_q2()
    }
}

/// Solve the plane normal shock from a uniform supersonic inflow.
///
/// The downstream state comes from the closed-form polytropic relations and
/// is then polished by one Newton step on the momentum and Bernoulli
/// residuals (mass flux and `Z` transfer are exact by construction).
///
/// `require_ignition` enforces `T_minus >= T0` so the reaction is active on
/// both sides; pass `false` for detonation-style configurations where only
/// the compressed gas burns.
pub fn solve_normal_shock(
    gas: &GasModel,
    upstream: FlowState,
    require_ignition: bool,
) -> Result<BackgroundShock> {
    upstream.validate()?;
    if upstream.theta.abs() > 1e-12 {
        return Err(Error::Invalid(format!(
            "background inflow must be axial (theta = 0), got theta = {}",
            upstream.theta
        )));
    }
    let minus = SideState::from_state(gas, upstream)?;
    if minus.mach <= 1.0 {
        return Err(Error::NoShock(format!(
            "inflow Mach number must exceed 1 for a normal shock, got M = {:.6}",
            minus.mach
        )));
    }
    if require_ignition && minus.t < gas.ignition.t0 {
        return Err(Error::Invalid(format!(
            "inflow temperature {:.6} is below the ignition temperature {:.6}; \
             pass require_ignition = false for a detonation-style setup",
            minus.t, gas.ignition.t0
        )));
    }

    let g = gas.gamma;
    let m2 = minus.mach * minus.mach;
    let p_ratio = 1.0 + 2.0 * g / (g + 1.0) * (m2 - 1.0);
    let rho_ratio = (g + 1.0) * m2 / ((g - 1.0) * m2 + 2.0);
    let mut p_plus = upstream.p * p_ratio;
    let mut q_plus = upstream.q / rho_ratio;

    // One Newton step on ([rho q^2 + p], [B]) with rho_+ = mass_flux / q_+,
    // which keeps mass and Z transfer exact while scrubbing rounding from
    // the closed-form ratios.
    let flux = minus.mass_flux();
    let mom_minus = minus.rho_q2() + upstream.p;
    let bern_minus = 0.5 * upstream.q * upstream.q + g * upstream.p / ((g - 1.0) * minus.rho);
    for _ in 0..2 {
        let r1 = (flux * q_plus + p_plus) - mom_minus;
        let r2 = (0.5 * q_plus * q_plus + g * p_plus * q_plus / ((g - 1.0) * flux)) - bern_minus;
        let j11 = 1.0;
        let j12 = flux;
        let j21 = g * q_plus / ((g - 1.0) * flux);
        let j22 = q_plus + g * p_plus / ((g - 1.0) * flux);
        let det = j11 * j22 - j12 * j21;
        if det.abs() < 1e-300 {
            return Err(Error::Numeric(
                "normal-shock Newton polish is singular".into(),
            ));
        }
        p_plus -= (r1 * j22 - r2 * j12) / det;
        q_plus -= (j11 * r2 - j21 * r1) / det;
    }
    if !(p_plus > 0.0 && q_plus > 0.0) {
        return Err(Error::Numeric(
            "normal-shock polish left the physical region".into(),
        ));
    }

    let rho_plus = flux / q_plus;
    let s_plus = gas.entropy(p_plus, rho_plus)?;
    let plus = SideState::from_state(
        gas,
        FlowState::new(p_plus, 0.0, q_plus, s_plus, upstream.z)?,
    )?;
    if plus.mach >= 1.0 {
        return Err(Error::Numeric(format!(
            "downstream state is not subsonic (M = {:.6})",
            plus.mach
        )));
    }
    Ok(BackgroundShock {
        minus,
        plus,
        mass_flux: flux,
    })
}

/// Constants of the linearized problem frozen at the background states.
#[derive(Debug, Clone, Copy)]
pub struct BackgroundConstants {
    /// `K1 = [p_bar] ((gamma-1)/(gamma p_bar_+) + 1/(rho_bar_+ q_bar_+^2)) > 0`.
    pub k1: f64,
    /// `K2 = (1/(gamma c_v)) (1/T_bar_+) q_e Z_bar
    ///        (phi(T_+)/(rho_+ q_+^2) - phi(T_-)/(rho_- q_-^2))`.
    pub k2: f64,
    pub f1_plus: f64,
    pub f1_minus: f64,
    pub f4_plus: f64,
    pub f4_minus: f64,
    pub f5_plus: f64,
    pub f5_minus: f64,
}

impl BackgroundConstants {
    /// `K2 > 0` is asserted in the analysis when the reaction is active
    /// upstream; validated rather than assumed here.
    pub fn k2_diagnostic(&self) -> Option<String> {
        if self.k2 <= 0.0 && (self.f1_plus > 0.0 || self.f1_minus > 0.0) {
            Some(format!(
                "K2 = {:.6e} is not positive although the reaction is active; \
                 reaction-dominated shock location is ill-conditioned",
                self.k2
            ))
        } else {
            None
        }
    }
}

/// Evaluate `K1`, `K2` and the frozen source terms at the background states.
pub fn background_constants(
    gas: &GasModel,
    shock: &BackgroundShock,
) -> Result<BackgroundConstants> {
    let k1 = shock.pressure_jump()
        * ((gas.gamma - 1.0) / (gas.gamma * shock.plus.state.p) + 1.0 / shock.plus.rho_q2());
    let phi_p = gas.ignition_phi(shock.plus.t);
    let phi_m = gas.ignition_phi(shock.minus.t);
    let k2 = 1.0 / (gas.gamma * gas.c_v)
        * (1.0 / shock.plus.t)
        * gas.q_e
        * shock.plus.state.z
        * (phi_p / shock.plus.rho_q2() - phi_m / shock.minus.rho_q2());
    let (f1_plus, f4_plus, f5_plus) = gas.source_terms(&shock.plus.state)?;
    let (f1_minus, f4_minus, f5_minus) = gas.source_terms(&shock.minus.state)?;
    Ok(BackgroundConstants {
        k1,
        k2,
        f1_plus,
        f1_minus,
        f4_plus,
        f4_minus,
        f5_plus,
        f5_minus,
    })
}

/// A supersonic inflow with `rho * q = 1` for the requested pressure and
/// Mach number: `rho = 1/(gamma M^2 p)`, `q = gamma M^2 p`.
pub fn unit_flux_inflow(gas: &GasModel, p: f64, mach: f64, z: f64) -> Result<FlowState> {
    if !(p > 0.0 && mach > 0.0) {
        return Err(Error::Invalid(format!(
            "unit-flux inflow needs p, M > 0, got p={p}, M={mach}"
        )));
    }
    let q = gas.gamma * mach * mach * p;
    let rho = 1.0 / q;
    let s = gas.entropy(p, rho)?;
    FlowState::new(p, 0.0, q, s, z)
}
