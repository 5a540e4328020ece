//! Polytropic-gas thermodynamics, Arrhenius ignition kinetics, and the
//! reacting-source and jump functions shared by every solver stage.

use crate::{Error, Result};

/// Arrhenius ignition parameters: the rate factor is
/// `phi(T) = T^a * exp(-E/(R0*(T - T0)))` above the ignition temperature
/// `T0` and zero below it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IgnitionParams {
    /// Ignition temperature `T0 > 0`.
    pub t0: f64,
    /// Temperature exponent `a > 0`.
    pub a: f64,
    /// Activation energy `E > 0` (per mole).
    pub activation_energy: f64,
    /// Universal gas constant `R0 > 0` (per mole), pairing with `E`.
    pub r0: f64,
}

impl IgnitionParams {
    pub fn new(t0: f64, a: f64, activation_energy: f64, r0: f64) -> Result<Self> {
        for (name, v) in [
            ("t0", t0),
            ("a", a),
            ("activation_energy", activation_energy),
            ("r0", r0),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Invalid(format!(
                    "ignition parameter {name} must be strictly positive, got {v}"
                )));
            }
        }
        Ok(Self {
            t0,
            a,
            activation_energy,
            r0,
        })
    }
}

/// Polytropic gas with binding energy and reaction rate.
///
/// The polytropic consistency `gas_constant = (gamma - 1) * c_v` is enforced
/// at construction; `gas_constant` is derived, not free.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasModel {
    /// Adiabatic exponent `gamma > 1`.
    pub gamma: f64,
    /// Specific heat at constant volume, `c_v > 0`.
    pub c_v: f64,
    /// Specific gas constant `R = (gamma - 1) * c_v`.
    pub gas_constant: f64,
    /// Binding energy of unburned gas, `q_e >= 0`.
    pub q_e: f64,
    /// Reaction rate `kappa >= 0`.
    pub kappa: f64,
    pub ignition: IgnitionParams,
}

impl GasModel {
    pub fn new(
        gamma: f64,
        c_v: f64,
        q_e: f64,
        kappa: f64,
        ignition: IgnitionParams,
    ) -> Result<Self> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(Error::Invalid(format!("gamma must be > 1, got {gamma}")));
        }
        if !(c_v > 0.0) || !c_v.is_finite() {
            return Err(Error::Invalid(format!("c_v must be > 0, got {c_v}")));
        }
        if !(q_e >= 0.0) || !q_e.is_finite() {
            return Err(Error::Invalid(format!("q_e must be >= 0, got {q_e}")));
        }
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(Error::Invalid(format!("kappa must be >= 0, got {kappa}")));
        }
        Ok(Self {
            gamma,
            c_v,
            gas_constant: (gamma - 1.0) * c_v,
            q_e,
            kappa,
            ignition,
        })
    }

    /// Density from `p = (gamma-1) e^{S/c_v} rho^gamma`.
    pub fn density(&self, p: f64, s: f64) -> Result<f64> {
        if !(p > 0.0) {
            return Err(Error::Domain(format!("density needs p > 0, got {p}")));
        }
        let rho = (p / ((self.gamma - 1.0) * (s / self.c_v).exp())).powf(1.0 / self.gamma);
        if !rho.is_finite() || rho <= 0.0 {
            return Err(Error::Domain(format!(
                "density not finite for p={p}, S={s}"
            )));
        }
        Ok(rho)
    }

    /// Entropy solving `p = (gamma-1) e^{S/c_v} rho^gamma` for `S`.
    pub fn entropy(&self, p: f64, rho: f64) -> Result<f64> {
        if !(p > 0.0 && rho > 0.0) {
            return Err(Error::Domain(format!(
                "entropy needs p, rho > 0, got p={p}, rho={rho}"
            )));
        }
        Ok(self.c_v * (p / ((self.gamma - 1.0) * rho.powf(self.gamma))).ln())
    }

    /// Temperature from the ideal-gas law `p = rho R T`.
    pub fn temperature(&self, p: f64, rho: f64) -> Result<f64> {
        if !(p > 0.0 && rho > 0.0) {
            return Err(Error::Domain(format!(
                "temperature needs p, rho > 0, got p={p}, rho={rho}"
            )));
        }
        Ok(p / (rho * self.gas_constant))
    }

    /// Sound speed `c = sqrt(gamma p / rho)`.
    pub fn sound_speed(&self, p: f64, rho: f64) -> Result<f64> {
        if !(p > 0.0 && rho > 0.0) {
            return Err(Error::Domain(format!(
                "sound_speed needs p, rho > 0, got p={p}, rho={rho}"
            )));
        }
        Ok((self.gamma * p / rho).sqrt())
    }

    /// Mach number of a state.
    pub fn mach(&self, state: &FlowState) -> Result<f64> {
        let rho = self.density(state.p, state.s)?;
        Ok(state.q / self.sound_speed(state.p, rho)?)
    }

    /// Internal energy `e = p / ((gamma-1) rho)`.
    pub fn internal_energy(&self, p: f64, rho: f64) -> f64 {
        p / ((self.gamma - 1.0) * rho)
    }

    /// Bernoulli quantity `q^2/2 + gamma p / ((gamma-1) rho) + q_e Z`,
    /// conserved along streamlines in steady reacting flow.
    pub fn bernoulli(&self, state: &FlowState) -> Result<f64> {
        let rho = self.density(state.p, state.s)?;
        Ok(0.5 * state.q * state.q
            + self.gamma * state.p / ((self.gamma - 1.0) * rho)
            + self.q_e * state.z)
    }

    /// Arrhenius ignition factor `phi(T)`.
    ///
    /// Zero below `T0`, and defined as zero at `T0` by continuity. Whenever
    /// the exponent `E/(R0 (T-T0))` exceeds 700 the result is forced to zero,
    /// which also covers the essential singularity as `T -> T0+`.
    pub fn ignition_phi(&self, t: f64) -> f64 {
        let ig = &self.ignition;
        if t <= ig.t0 {
            return 0.0;
        }
        let expo = ig.activation_energy / (ig.r0 * (t - ig.t0));
        if expo > 700.0 {
            return 0.0;
        }
        t.powf(ig.a) * (-expo).exp()
    }

    /// Reaction source terms `(f1, f4, f5)` of the non-divergence system:
    /// `f1 = (1/(gamma c_v)) (1/(rho q^2)) (phi/T) q_e Z`,
    /// `f4 = (1/(q cos(theta))) (phi/T) q_e Z`,
    /// `f5 = phi Z / (q cos(theta))`.
    pub fn source_terms(&self, state: &FlowState) -> Result<(f64, f64, f64)> {
        let cos_th = state.theta.cos();
        if !(cos_th > 0.0) {
            return Err(Error::Domain(format!(
                "source_terms needs cos(theta) > 0, got theta={}",
                state.theta
            )));
        }
        let rho = self.density(state.p, state.s)?;
        let t = self.temperature(state.p, rho)?;
        let phi = self.ignition_phi(t);
        let f1 = 1.0 / (self.gamma * self.c_v)
            * (1.0 / (rho * state.q * state.q))
            * (phi / t)
            * self.q_e
            * state.z;
        let f4 = 1.0 / (state.q * cos_th) * (phi / t) * self.q_e * state.z;
        let f5 = phi * state.z / (state.q * cos_th);
        Ok((f1, f4, f5))
    }

    /// Derived thermodynamics of a state, bundled.
    pub fn derived(&self, state: &FlowState) -> Result<Derived> {
        let rho = self.density(state.p, state.s)?;
        let t = self.temperature(state.p, rho)?;
        let c = self.sound_speed(state.p, rho)?;
        Ok(Derived {
            rho,
            t,
            c,
            mach: state.q / c,
        })
    }

    /// The five jump residuals `G1..G5` of the Lagrangian Rankine–Hugoniot
    /// conditions, with `[w] = w_plus - w_minus`, `u1 = q cos(theta)`,
    /// `u2 = q sin(theta)`:
    ///
    /// `G1 = [1/(rho u1)][p] + [u2/u1][u2]`,
    /// `G2 = [u1 + p/(rho u1)][p] + [p u2/u1][u2]`,
    /// `G3 = [q^2/2 + gamma p/((gamma-1) rho)]`,
    /// `G4 = [Z]`,
    /// `G5 = [u2] - psi' [p]`.
    pub fn jump_functions(
        &self,
        u_plus: &FlowState,
        u_minus: &FlowState,
        psi_slope: f64,
    ) -> Result<[f64; 5]> {
        let side = |u: &FlowState| -> Result<(f64, f64, f64)> {
            let rho = self.density(u.p, u.s)?;
            let u1 = u.q * u.theta.cos();
            let u2 = u.q * u.theta.sin();
            if !(u1 > 0.0) {
                return Err(Error::Domain(format!(
                    "jump_functions needs u1 = q cos(theta) > 0, got {u1}"
                )));
            }
            Ok((rho, u1, u2))
        };
        let (rho_p, u1_p, u2_p) = side(u_plus)?;
        let (rho_m, u1_m, u2_m) = side(u_minus)?;
        let jp = u_plus.p - u_minus.p;
        let ju2 = u2_p - u2_m;
        let g1 =
            (1.0 / (rho_p * u1_p) - 1.0 / (rho_m * u1_m)) * jp + (u2_p / u1_p - u2_m / u1_m) * ju2;
        let g2 = ((u1_p + u_plus.p / (rho_p * u1_p)) - (u1_m + u_minus.p / (rho_m * u1_m))) * jp
            + (u_plus.p * u2_p / u1_p - u_minus.p * u2_m / u1_m) * ju2;
        let gm1 = self.gamma - 1.0;
        let g3 = (0.5 * u_plus.q * u_plus.q + self.gamma * u_plus.p / (gm1 * rho_p))
            - (0.5 * u_minus.q * u_minus.q + self.gamma * u_minus.p / (gm1 * rho_m));
        let g4 = u_plus.z - u_minus.z;
        let g5 = ju2 - psi_slope * jp;
        Ok([g1, g2, g3, g4, g5])
    }
}

/// Derived thermodynamic quantities of a [`FlowState`].
#[derive(Debug, Clone, Copy)]
pub struct Derived {
    pub rho: f64,
    pub t: f64,
    pub c: f64,
    pub mach: f64,
}

/// Primitive flow state `U = (p, theta, q, S, Z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowState {
    /// Pressure, `p > 0`.
    pub p: f64,
    /// Flow angle in radians, `|theta| < pi/2`.
    pub theta: f64,
    /// Speed, `q > 0`.
    pub q: f64,
    /// Entropy as it appears in `p = (gamma-1) e^{S/c_v} rho^gamma`,
    /// no additive offset convention.
    pub s: f64,
    /// Unburned-gas fraction, `0 <= Z <= 1`.
    pub z: f64,
}

impl FlowState {
    pub fn new(p: f64, theta: f64, q: f64, s: f64, z: f64) -> Result<Self> {
        let state = Self { p, theta, q, s, z };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0) || !self.p.is_finite() {
            return Err(Error::Invalid(format!(
                "pressure must be > 0, got {}",
                self.p
            )));
        }
        if !(self.q > 0.0) || !self.q.is_finite() {
            return Err(Error::Invalid(format!("speed must be > 0, got {}", self.q)));
        }
        if !(self.theta.abs() < std::f64::consts::FRAC_PI_2) {
            return Err(Error::Invalid(format!(
                "flow angle must satisfy |theta| < pi/2, got {}",
                self.theta
            )));
        }
        if !(0.0..=1.0).contains(&self.z) {
            return Err(Error::Invalid(format!(
                "Z must lie in [0, 1], got {}",
                self.z
            )));
        }
        if !self.s.is_finite() {
            return Err(Error::Invalid(format!(
                "entropy must be finite, got {}",
                self.s
            )));
        }
        Ok(())
    }

    /// As the 5-vector `(p, theta, q, S, Z)`.
    pub fn as_array(&self) -> [f64; 5] {
        [self.p, self.theta, self.q, self.s, self.z]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_gas() -> GasModel {
        GasModel::new(
            1.4,
            2.5,
            0.5,
            0.01,
            IgnitionParams::new(1.0, 1.0, 1.0, 1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn density_identity_normalization() {
        let gas = test_gas();
        // S chosen so (gamma-1) e^{S/c_v} = 1.
        let s = (1.0 / (gas.gamma - 1.0)).ln() * gas.c_v;
        assert!((gas.density(1.0, s).unwrap() - 1.0).abs() < 1e-14);
        assert!((gas.density(2f64.powf(1.4), s).unwrap() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn density_round_trip() {
        let gas = test_gas();
        let (p, s) = (3.0, 1.0);
        let rho = gas.density(p, s).unwrap();
        let p_back = (gas.gamma - 1.0) * (s / gas.c_v).exp() * rho.powf(gas.gamma);
        assert!((p_back - p).abs() / p < 1e-12);
    }

    #[test]
    fn density_rejects_nonpositive_pressure() {
        let gas = test_gas();
        assert!(gas.density(0.0, 0.0).is_err());
        assert!(gas.density(-1.0, 0.0).is_err());
    }

    #[test]
    fn temperature_quotient() {
        // R = 1 for gamma = 1.4, c_v = 2.5.
        let gas = test_gas();
        assert!((gas.gas_constant - 1.0).abs() < 1e-15);
        assert!((gas.temperature(1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((gas.temperature(4.5, 8.0 / 3.0).unwrap() - 1.6875).abs() < 1e-14);
        let t1 = gas.temperature(2.0, 0.7).unwrap();
        let t2 = gas.temperature(4.0, 0.7).unwrap();
        assert!((t2 - 2.0 * t1).abs() < 1e-14);
    }

    #[test]
    fn sound_speed_and_mach() {
        let gas = test_gas();
        let c = gas.sound_speed(1.0, 1.0).unwrap();
        assert!((c - 1.4f64.sqrt()).abs() < 1e-12);
        let s = gas.entropy(1.0, 1.0).unwrap();
        let sonic = FlowState::new(1.0, 0.0, c, s, 0.0).unwrap();
        assert!((gas.mach(&sonic).unwrap() - 1.0).abs() < 1e-12);
        let m2 = FlowState::new(1.0, 0.0, 2.0 * c, s, 0.0).unwrap();
        assert!((gas.mach(&m2).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ignition_phi_cases() {
        let gas = test_gas();
        assert_eq!(gas.ignition_phi(0.5), 0.0);
        assert_eq!(gas.ignition_phi(1.0), 0.0);
        // T0=1, a=1, E/R0=1, T=2 -> 2 e^{-1}.
        let phi = gas.ignition_phi(2.0);
        assert!((phi - 2.0 * (-1.0f64).exp()).abs() < 1e-12);
        // Just above T0 the exponent guard forces zero, no overflow.
        assert_eq!(gas.ignition_phi(1.0 + 1e-12), 0.0);
    }

    #[test]
    fn ignition_phi_monotone_above_t0_where_condition_holds() {
        // phi' >= 0 iff a/T >= E/(R0 (T-T0)^2); sample where that holds.
        let gas = test_gas();
        let mut prev = 0.0;
        for i in 0..200 {
            let t = 3.0 + 0.05 * i as f64;
            let cond = gas.ignition.a / t
                >= gas.ignition.activation_energy
                    / (gas.ignition.r0 * (t - gas.ignition.t0).powi(2));
            assert!(cond, "sampled grid must satisfy the derivative condition");
            let phi = gas.ignition_phi(t);
            assert!(phi >= prev);
            prev = phi;
        }
    }

    #[test]
    fn source_terms_trivial_cases() {
        let gas = test_gas();
        let s = gas.entropy(1.0, 1.0).unwrap();
        // Burned gas: Z = 0.
        let burned = FlowState::new(1.0, 0.1, 2.0, s, 0.0).unwrap();
        assert_eq!(gas.source_terms(&burned).unwrap(), (0.0, 0.0, 0.0));
        // Below ignition: T = 1/R = 1 exactly at T0 = 1.
        let cold = FlowState::new(1.0, 0.0, 2.0, s, 1.0).unwrap();
        let (f1, f4, f5) = gas.source_terms(&cold).unwrap();
        assert_eq!((f1, f4, f5), (0.0, 0.0, 0.0));
    }

    #[test]
    fn source_terms_algebraic_ratio() {
        // f1/f4 = cos(theta) / (gamma c_v rho q).
        let gas = test_gas();
        let state = FlowState::new(8.0, 0.2, 2.5, 2.0, 0.8).unwrap();
        let (f1, f4, _) = gas.source_terms(&state).unwrap();
        let rho = gas.density(state.p, state.s).unwrap();
        let expected = state.theta.cos() / (gas.gamma * gas.c_v * rho * state.q);
        assert!((f1 / f4 - expected).abs() / expected.abs() < 1e-12);
    }

    #[test]
    fn source_terms_reject_reversed_flow() {
        let gas = test_gas();
        let mut state = FlowState::new(1.0, 0.0, 1.0, 0.0, 1.0).unwrap();
        state.theta = 1.6; // bypass constructor to probe the operation guard
        assert!(gas.source_terms(&state).is_err());
    }

    #[test]
    fn jump_functions_vanish_without_jump() {
        let gas = test_gas();
        let state = FlowState::new(2.0, 0.1, 1.5, 0.3, 0.6).unwrap();
        let g = gas.jump_functions(&state, &state, 0.7).unwrap();
        for v in g {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn flow_state_validation() {
        assert!(FlowState::new(1.0, 0.0, 1.0, 0.0, 0.5).is_ok());
        assert!(FlowState::new(-1.0, 0.0, 1.0, 0.0, 0.5).is_err());
        assert!(FlowState::new(1.0, 1.6, 1.0, 0.0, 0.5).is_err());
        assert!(FlowState::new(1.0, 0.0, 0.0, 0.0, 0.5).is_err());
        assert!(FlowState::new(1.0, 0.0, 1.0, 0.0, 1.5).is_err());
    }

    #[test]
    fn gas_model_enforces_polytropic_consistency() {
        let gas = test_gas();
        assert!((gas.gas_constant - (gas.gamma - 1.0) * gas.c_v).abs() < 1e-15);
        assert!(GasModel::new(0.9, 2.5, 0.0, 0.0, gas.ignition).is_err());
        assert!(GasModel::new(1.4, -1.0, 0.0, 0.0, gas.ignition).is_err());
        assert!(GasModel::new(1.4, 2.5, -0.1, 0.0, gas.ignition).is_err());
        assert!(GasModel::new(1.4, 2.5, 0.0, -0.1, gas.ignition).is_err());
    }
}
