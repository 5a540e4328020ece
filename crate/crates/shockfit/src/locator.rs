//! Shock locator: evaluates the linearized solvability functional
//! `R(xi; sigma, kappa) = sigma R_sigma(xi) + kappa R_kappa(xi)` and solves
//! `R(xi) = P*(sigma, kappa)` for the approximate front position, under one
//! of the four perturbation hypotheses relating `sigma` and `kappa`.

use crate::background::{BackgroundConstants, BackgroundShock};
use crate::profile::{simpson, Profile, SIMPSON_PANELS};
use crate::{Error, Result};

/// Samples used to bracket roots of `R - P*` on `[0, L]`.
const ROOT_GRID: usize = 4096;
/// Bisection refinements per bracketed root.
const BISECT_ITERS: usize = 60;

/// Nozzle and exit-pressure perturbation data.
///
/// `theta` is the wall-angle shape on `[0, L]`; it must vanish to second
/// order at the entrance (checked to 1e-10 at construction). `p_sigma` and
/// `p_kappa` are the exit-pressure shapes on `[0, 1]`, entering as
/// `P_e = sigma * P_sigma + kappa * P_kappa`.
#[derive(Debug, Clone)]
pub struct NozzlePerturbation {
    pub length: f64,
    pub sigma: f64,
    pub kappa: f64,
    pub theta: Profile,
    pub p_sigma: Profile,
    pub p_kappa: Profile,
}

impl NozzlePerturbation {
    pub fn new(
        length: f64,
        sigma: f64,
        kappa: f64,
        theta: Profile,
        p_sigma: Profile,
        p_kappa: Profile,
    ) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::Invalid(format!(
                "nozzle length must be > 0, got {length}"
            )));
        }
        if !(sigma >= 0.0) || !(kappa >= 0.0) {
            return Err(Error::Invalid(format!(
                "perturbation scales must be >= 0, got sigma={sigma}, kappa={kappa}"
            )));
        }
        for (name, v) in [
            ("theta(0)", theta.eval(0.0)),
            ("theta'(0)", theta.deriv(0.0)),
            ("theta''(0)", theta.deriv2(0.0)),
        ] {
            if v.abs() > 1e-10 {
                return Err(Error::Invalid(format!(
                    "wall profile must vanish to second order at the entrance: {name} = {v:.3e}"
                )));
            }
        }
        theta.check_finite(0.0, length)?;
        p_sigma.check_finite(0.0, 1.0)?;
        p_kappa.check_finite(0.0, 1.0)?;
        Ok(Self {
            length,
            sigma,
            kappa,
            theta,
            p_sigma,
            p_kappa,
        })
    }
}

/// The four perturbation regimes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HypothesisCase {
    /// Wall perturbation dominates: `kappa = a1 * sigma^s`, `s > 1`.
    H1 { a1: f64, s: f64 },
    /// Reaction dominates: `sigma = a2 * kappa^s`, `s > 1`.
    H2 { a2: f64, s: f64 },
    /// Balanced: `sigma = a * kappa`.
    H3 { a: f64 },
    /// Matched exit pressure: `(P_sigma*, P_kappa*)` on the curve
    /// `(R_sigma(xi), R_kappa(xi))`, front independent of `(sigma, kappa)`.
    H4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hypothesis {
    pub case: HypothesisCase,
    /// Admissibility floor `beta0`; when absent a data-driven default is
    /// used: half the smallest root margin divided by `sigma + kappa`.
    pub beta0: Option<f64>,
}

impl Hypothesis {
    pub fn validate(&self) -> Result<()> {
        match self.case {
            HypothesisCase::H1 { a1, s } => {
                if !(a1 > 0.0) || !(s > 1.0) {
                    return Err(Error::Invalid(format!(
                        "H1 needs A1 > 0 and s > 1, got A1={a1}, s={s}"
                    )));
                }
            }
            HypothesisCase::H2 { a2, s } => {
                if !(a2 > 0.0) || !(s > 1.0) {
                    return Err(Error::Invalid(format!(
                        "H2 needs A2 > 0 and s > 1, got A2={a2}, s={s}"
                    )));
                }
            }
            HypothesisCase::H3 { a } => {
                if !(a > 0.0) {
                    return Err(Error::Invalid(format!("H3 needs A > 0, got A={a}")));
                }
            }
            HypothesisCase::H4 => {}
        }
        if let Some(b) = self.beta0 {
            if !(b > 0.0) {
                return Err(Error::Invalid(format!("beta0 must be > 0, got {b}")));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self.case {
            HypothesisCase::H1 { .. } => "H1",
            HypothesisCase::H2 { .. } => "H2",
            HypothesisCase::H3 { .. } => "H3",
            HypothesisCase::H4 => "H4",
        }
    }
}

/// Which root of `R = P*` to take when several are admissible.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum RootPolicy {
    #[default]
    NearestXiStar,
    Smallest,
    Largest,
}

/// Outcome of a shock-location solve.
#[derive(Debug, Clone)]
pub struct LocationSolution {
    pub xi_dot: f64,
    pub all_roots: Vec<f64>,
    /// The perturbation-independent limit position, where the hypothesis
    /// defines one.
    pub xi_star: Option<f64>,
    pub admissible: bool,
    /// `|kappa K2 - sigma K1 Theta(xi_dot)|`.
    pub margin: f64,
    pub beta0: f64,
    pub r_inf: f64,
    pub r_sup: f64,
    pub p_star: f64,
    pub monotone: bool,
    pub sigma: f64,
    pub kappa: f64,
    pub diagnostics: Vec<String>,
}

/// One side-condition check with its computed margin.
#[derive(Debug, Clone)]
pub struct CheckItem {
    pub name: String,
    pub ok: bool,
    pub margin: f64,
    pub detail: String,
}

/// Evaluator bundling the background constants with the perturbation data.
pub struct Locator<'a> {
    pub pert: &'a NozzlePerturbation,
    pub k1: f64,
    pub k2: f64,
    pub f1_plus: f64,
    /// `(1/(rho_+ q_+)) (1 - M_+^2)/(rho_+ q_+^2)`, the elliptic coefficient.
    pub c_plus: f64,
    theta_total: f64,
    p_sigma_star: f64,
    p_kappa_star: f64,
}

impl<'a> Locator<'a> {
    pub fn new(
        bg: &BackgroundShock,
        consts: &BackgroundConstants,
        pert: &'a NozzlePerturbation,
    ) -> Self {
        let c_plus = bg.c_plus();
        let theta_total = pert.theta.integrate(0.0, pert.length);
        let p_sigma_star = c_plus * pert.p_sigma.integrate(0.0, 1.0);
        let p_kappa_star = c_plus * pert.p_kappa.integrate(0.0, 1.0);
        Self {
            pert,
            k1: consts.k1,
            k2: consts.k2,
            f1_plus: consts.f1_plus,
            c_plus,
            theta_total,
            p_sigma_star,
            p_kappa_star,
        }
    }

    fn check_range(&self, xi: f64) -> Result<()> {
        if !(0.0..=self.pert.length).contains(&xi) {
            return Err(Error::Domain(format!(
                "xi = {xi} outside the nozzle [0, {}]",
                self.pert.length
            )));
        }
        Ok(())
    }

    /// `R_sigma(xi) = int_0^L Theta - K1 int_0^xi Theta`.
    pub fn r_sigma(&self, xi: f64) -> Result<f64> {
        self.check_range(xi)?;
        Ok(self.theta_total - self.k1 * self.pert.theta.integrate(0.0, xi))
    }

    /// `R_kappa(xi) = -f1_plus L + K2 xi`.
    pub fn r_kappa(&self, xi: f64) -> Result<f64> {
        self.check_range(xi)?;
        Ok(-self.f1_plus * self.pert.length + self.k2 * xi)
    }

    /// `R(xi; sigma, kappa)`, affine in `(sigma, kappa)` at fixed `xi`.
    pub fn r(&self, xi: f64, sigma: f64, kappa: f64) -> Result<f64> {
        Ok(sigma * self.r_sigma(xi)? + kappa * self.r_kappa(xi)?)
    }

    /// `dR/dxi = -sigma K1 Theta(xi) + kappa K2`.
    pub fn r_deriv(&self, xi: f64, sigma: f64, kappa: f64) -> f64 {
        -sigma * self.k1 * self.pert.theta.eval(xi) + kappa * self.k2
    }

    pub fn p_sigma_star(&self) -> f64 {
        self.p_sigma_star
    }

    pub fn p_kappa_star(&self) -> f64 {
        self.p_kappa_star
    }

    /// `P*(sigma, kappa) = c_plus int_0^1 (sigma P_sigma + kappa P_kappa)`.
    pub fn p_star(&self, sigma: f64, kappa: f64) -> f64 {
        sigma * self.p_sigma_star + kappa * self.p_kappa_star
    }

    /// Effective `(sigma, kappa)` under a hypothesis, deriving the dependent
    /// scale from the independent one.
    pub fn effective_perturbation(&self, hyp: &Hypothesis) -> (f64, f64) {
        match hyp.case {
            HypothesisCase::H1 { a1, s } => {
                let sigma = self.pert.sigma;
                (sigma, a1 * sigma.powf(s))
            }
            HypothesisCase::H2 { a2, s } => {
                let kappa = self.pert.kappa;
                (a2 * kappa.powf(s), kappa)
            }
            HypothesisCase::H3 { a } => {
                let kappa = self.pert.kappa;
                (a * kappa, kappa)
            }
            HypothesisCase::H4 => (self.pert.sigma, self.pert.kappa),
        }
    }

    /// Roots of `f` on `[0, L]` by sign-change bracketing on a uniform grid
    /// plus bisection.
    fn enumerate_roots(&self, f: &dyn Fn(f64) -> f64) -> (Vec<f64>, f64, f64) {
        let l = self.pert.length;
        let n = ROOT_GRID;
        let mut samples = Vec::with_capacity(n + 1);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..=n {
            let v = f(i as f64 * l / n as f64);
            lo = lo.min(v);
            hi = hi.max(v);
            samples.push(v);
        }
        let mut roots = Vec::new();
        for i in 0..n {
            let (fa, fb) = (samples[i], samples[i + 1]);
            if fa == 0.0 {
                let x = i as f64 * l / n as f64;
                if x > 0.0 && x < l {
                    roots.push(x);
                }
                continue;
            }
            if fa * fb < 0.0 {
                let mut a = i as f64 * l / n as f64;
                let mut b = (i + 1) as f64 * l / n as f64;
                let mut fa = fa;
                for _ in 0..BISECT_ITERS {
                    let m = 0.5 * (a + b);
                    let fm = f(m);
                    if fm == 0.0 {
                        a = m;
                        b = m;
                        break;
                    }
                    if fa * fm < 0.0 {
                        b = m;
                    } else {
                        a = m;
                        fa = fm;
                    }
                }
                let x = 0.5 * (a + b);
                if x > 0.0 && x < l {
                    roots.push(x);
                }
            }
        }
        // An exact zero at xi = L is excluded: roots must lie in (0, L).
        roots.dedup_by(|a, b| (*a - *b).abs() < 0.25 * l / n as f64);
        (roots, lo, hi)
    }

    /// The perturbation-independent limit position `xi_star`, where the
    /// hypothesis defines one.
    fn xi_star(
        &self,
        hyp: &Hypothesis,
        policy: RootPolicy,
        diags: &mut Vec<String>,
    ) -> Option<f64> {
        match hyp.case {
            HypothesisCase::H1 { .. } => {
                let target = self.p_sigma_star;
                let (roots, _, _) = self.enumerate_roots(&|xi| {
                    self.theta_total - self.k1 * self.pert.theta.integrate(0.0, xi) - target
                });
                pick_root(&roots, policy, None, diags, "R_sigma = P_sigma*")
            }
            HypothesisCase::H2 { .. } => self.affine_xi_star(diags),
            HypothesisCase::H3 { a } => {
                let target = a * self.p_sigma_star + self.p_kappa_star;
                let (roots, _, _) = self.enumerate_roots(&|xi| {
                    a * (self.theta_total - self.k1 * self.pert.theta.integrate(0.0, xi))
                        + (-self.f1_plus * self.pert.length + self.k2 * xi)
                        - target
                });
                pick_root(&roots, policy, None, diags, "R_A = P_A*")
            }
            HypothesisCase::H4 => {
                let xi = self.affine_xi_star(diags)?;
                // H4 additionally requires R_sigma(xi_star) = P_sigma*.
                let rs = self.r_sigma(xi).ok()?;
                let scale = self.r_scale();
                if (rs - self.p_sigma_star).abs() > 1e-8 * scale.max(1e-300) {
                    diags.push(format!(
                        "H4 pressure pair is off the matched curve: R_sigma(xi*) - P_sigma* = {:.3e}",
                        rs - self.p_sigma_star
                    ));
                }
                Some(xi)
            }
        }
    }

    fn affine_xi_star(&self, diags: &mut Vec<String>) -> Option<f64> {
        if self.k2 <= 0.0 {
            diags.push(format!(
                "K2 = {:.3e} is not positive; the reaction-dominated limit position is undefined",
                self.k2
            ));
            return None;
        }
        let xi = (self.p_kappa_star + self.f1_plus * self.pert.length) / self.k2;
        if xi > 0.0 && xi < self.pert.length {
            Some(xi)
        } else {
            diags.push(format!(
                "affine limit root xi* = {xi:.6} lies outside (0, L)"
            ));
            None
        }
    }

    fn r_scale(&self) -> f64 {
        self.theta_total.abs()
            + self.k1.abs() * self.pert.theta.integrate(0.0, self.pert.length).abs()
            + self.f1_plus * self.pert.length
            + self.k2 * self.pert.length
            + self.p_sigma_star.abs()
            + self.p_kappa_star.abs()
    }

    /// Solve `R(xi; sigma, kappa) = P*(sigma, kappa)` using the hypothesis's
    /// effective perturbation scales.
    pub fn locate(&self, hyp: &Hypothesis, policy: RootPolicy) -> Result<LocationSolution> {
        hyp.validate()?;
        let (sigma, kappa) = self.effective_perturbation(hyp);
        self.locate_at(hyp, sigma, kappa, policy)
    }

    /// Solve `R(xi; sigma, kappa) = P*` at explicit `(sigma, kappa)`.
    pub fn locate_at(
        &self,
        hyp: &Hypothesis,
        sigma: f64,
        kappa: f64,
        policy: RootPolicy,
    ) -> Result<LocationSolution> {
        hyp.validate()?;
        if sigma + kappa <= 0.0 {
            return Err(Error::Invalid(
                "degenerate perturbation: sigma + kappa must be positive".into(),
            ));
        }
        let mut diagnostics = Vec::new();
        let p_star = self.p_star(sigma, kappa);
        let f = |xi: f64| {
            sigma * (self.theta_total - self.k1 * self.pert.theta.integrate(0.0, xi))
                + kappa * (-self.f1_plus * self.pert.length + self.k2 * xi)
                - p_star
        };
        let (roots, f_lo, f_hi) = self.enumerate_roots(&f);
        let (r_inf, r_sup) = (f_lo + p_star, f_hi + p_star);
        if roots.is_empty() {
            return Err(Error::NoSolution {
                r_inf,
                r_sup,
                p_star,
            });
        }

        // Strict monotonicity of R in xi makes the root unique.
        let mut monotone = true;
        let n = 512;
        let mut sign = 0.0f64;
        for i in 0..=n {
            let d = self.r_deriv(i as f64 * self.pert.length / n as f64, sigma, kappa);
            if d == 0.0 {
                monotone = false;
                break;
            }
            if sign == 0.0 {
                sign = d.signum();
            } else if d.signum() != sign {
                monotone = false;
                break;
            }
        }

        let xi_star = self.xi_star(hyp, policy, &mut diagnostics);
        let selected = if monotone && roots.len() == 1 {
            roots[0]
        } else {
            match pick_root(&roots, policy, xi_star, &mut diagnostics, "R = P*") {
                Some(x) => x,
                None => {
                    return Err(Error::NoSolution {
                        r_inf,
                        r_sup,
                        p_star,
                    })
                }
            }
        };

        let margin_at =
            |xi: f64| (kappa * self.k2 - sigma * self.k1 * self.pert.theta.eval(xi)).abs();
        let beta0 = match hyp.beta0 {
            Some(b) => b,
            None => {
                let min_margin = roots
                    .iter()
                    .map(|&r| margin_at(r))
                    .fold(f64::INFINITY, f64::min);
                0.5 * min_margin / (sigma + kappa)
            }
        };
        let mut xi_dot = selected;
        let mut margin = margin_at(xi_dot);
        let mut admissible = margin >= beta0 * (sigma + kappa);
        if !admissible {
            // Fall back to an admissible root if any exists.
            let admissible_roots: Vec<f64> = roots
                .iter()
                .copied()
                .filter(|&r| margin_at(r) >= beta0 * (sigma + kappa))
                .collect();
            if admissible_roots.is_empty() {
                return Err(Error::Admissibility(format!(
                    "every root violates |kappa K2 - sigma K1 Theta(xi)| >= beta0 (sigma+kappa); \
                     best margin {margin:.3e} < {:.3e}",
                    beta0 * (sigma + kappa)
                )));
            }
            diagnostics.push(format!(
                "policy-selected root xi = {xi_dot:.6} is inadmissible; \
                 re-selected among {} admissible roots",
                admissible_roots.len()
            ));
            xi_dot = pick_root(
                &admissible_roots,
                policy,
                xi_star,
                &mut diagnostics,
                "R = P*",
            )
            .expect("non-empty admissible root list");
            margin = margin_at(xi_dot);
            admissible = true;
        }

        Ok(LocationSolution {
            xi_dot,
            all_roots: roots,
            xi_star,
            admissible,
            margin,
            beta0,
            r_inf,
            r_sup,
            p_star,
            monotone,
            sigma,
            kappa,
            diagnostics,
        })
    }

    /// Report the hypothesis side conditions with their margins.
    pub fn hypothesis_checks(&self, hyp: &Hypothesis, sol: &LocationSolution) -> Vec<CheckItem> {
        let mut items = Vec::new();
        match (hyp.case, sol.xi_star) {
            (HypothesisCase::H1 { .. }, Some(xs)) => {
                let th = self.pert.theta.eval(xs);
                items.push(CheckItem {
                    name: "H1: Theta(xi_star) != 0".into(),
                    ok: th.abs() > 1e-12,
                    margin: th.abs(),
                    detail: format!("Theta(xi_star) = {th:.6e}"),
                });
            }
            (HypothesisCase::H3 { a }, Some(xs)) => {
                let th = self.pert.theta.eval(xs);
                let gap = a * self.k1 * th - self.k2;
                items.push(CheckItem {
                    name: "H3: Theta(xi_star) != K2/(A K1)".into(),
                    ok: gap.abs() > 1e-12,
                    margin: gap.abs(),
                    detail: format!("A K1 Theta(xi_star) - K2 = {gap:.6e}"),
                });
            }
            _ => {}
        }
        let floor = sol.beta0 * (sol.sigma + sol.kappa);
        items.push(CheckItem {
            name: "admissibility: |kappa K2 - sigma K1 Theta(xi_dot)| >= beta0 (sigma+kappa)"
                .into(),
            ok: sol.margin >= floor,
            margin: sol.margin - floor,
            detail: format!("margin = {:.6e}, floor = {:.6e}", sol.margin, floor),
        });
        items.push(CheckItem {
            name: "pressure range: inf R < P* < sup R".into(),
            ok: sol.p_star > sol.r_inf && sol.p_star < sol.r_sup,
            margin: (sol.p_star - sol.r_inf).min(sol.r_sup - sol.p_star),
            detail: format!(
                "P* = {:.6e}, range = [{:.6e}, {:.6e}]",
                sol.p_star, sol.r_inf, sol.r_sup
            ),
        });
        items
    }
}

fn pick_root(
    roots: &[f64],
    policy: RootPolicy,
    xi_star: Option<f64>,
    diags: &mut Vec<String>,
    what: &str,
) -> Option<f64> {
    if roots.is_empty() {
        return None;
    }
    match policy {
        RootPolicy::Smallest => Some(roots[0]),
        RootPolicy::Largest => Some(*roots.last().unwrap()),
        RootPolicy::NearestXiStar => match xi_star {
            Some(xs) => roots
                .iter()
                .copied()
                .min_by(|a, b| (a - xs).abs().partial_cmp(&(b - xs).abs()).unwrap()),
            None => {
                if roots.len() > 1 {
                    diags.push(format!(
                        "{what}: no xi_star available to disambiguate {} roots; taking the smallest",
                        roots.len()
                    ));
                }
                Some(roots[0])
            }
        },
    }
}

/// Verify `R_sigma(xi)` against a brute-force quadrature with an independent
/// rule (midpoint refinement), used by the verification battery.
pub fn r_sigma_reference(pert: &NozzlePerturbation, k1: f64, xi: f64) -> f64 {
    let total = simpson(|x| pert.theta.eval(x), 0.0, pert.length, 2 * SIMPSON_PANELS);
    let part = simpson(|x| pert.theta.eval(x), 0.0, xi, 2 * SIMPSON_PANELS);
    total - k1 * part
}
