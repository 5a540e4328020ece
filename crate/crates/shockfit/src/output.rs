//! Deterministic CSV artifacts: every float prints with 17 significant
//! digits so files round-trip bit-exactly and identical runs produce
//! byte-identical output.

use crate::grid::Field;
use crate::nonlinear::SweepLog;
use crate::Result;
use std::io::Write;
use std::path::Path;

/// 17 significant digits, '.' decimal separator.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<()> {
    let mut out = String::new();
    out.push_str(header);
    out.push('\n');
    for row in rows {
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            out.push_str(&fmt_float(*v));
            first = false;
        }
        out.push('\n');
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

/// Field dump `(y1, y2, dp, dtheta, dq, dS, dZ)` over one sub-domain.
pub fn write_fields(
    path: &Path,
    dp: &Field,
    dtheta: &Field,
    dq: &Field,
    ds: &Field,
    dz: &Field,
) -> Result<()> {
    let g = dp.grid;
    let mut rows = Vec::with_capacity((g.nx + 1) * (g.ny + 1));
    for i in 0..=g.nx {
        for j in 0..=g.ny {
            rows.push(vec![
                g.x(i),
                g.y(j),
                dp[(i, j)],
                dtheta[(i, j)],
                dq[(i, j)],
                ds[(i, j)],
                dz[(i, j)],
            ]);
        }
    }
    write_csv(path, "y1,y2,dp,dtheta,dq,dS,dZ", &rows)
}

/// Shock-front profile `(y2, psi, psi_prime)`.
pub fn write_front(path: &Path, psi: &[f64], slope: &[f64]) -> Result<()> {
    let n = psi.len() - 1;
    let rows: Vec<Vec<f64>> = (0..=n)
        .map(|j| vec![j as f64 / n as f64, psi[j], slope[j]])
        .collect();
    write_csv(path, "y2,psi,psi_prime", &rows)
}

/// Convergence log of the fitted-front iteration.
pub fn write_convergence(path: &Path, log: &[SweepLog]) -> Result<()> {
    let rows: Vec<Vec<f64>> = log
        .iter()
        .map(|l| {
            vec![
                l.sweep as f64,
                l.dxi,
                l.field_delta,
                l.slope_delta,
                l.contraction_ratio,
                l.rh_residual_max,
            ]
        })
        .collect();
    write_csv(
        path,
        "sweep,dxi,field_delta_norm,slope_delta_norm,contraction_ratio,rh_residual_max",
        &rows,
    )
}

/// One shock-location record per sweep point.
pub struct LocateRow {
    pub sigma: f64,
    pub kappa: f64,
    pub case_id: f64,
    pub xi_dot: f64,
    pub n_roots: usize,
    pub admissible_margin: f64,
    pub r_inf: f64,
    pub r_sup: f64,
    pub p_star: f64,
}

pub fn write_locations(path: &Path, rows: &[LocateRow]) -> Result<()> {
    let data: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            vec![
                r.sigma,
                r.kappa,
                r.case_id,
                r.xi_dot,
                r.n_roots as f64,
                r.admissible_margin,
                r.r_inf,
                r.r_sup,
                r.p_star,
            ]
        })
        .collect();
    write_csv(
        path,
        "sigma,kappa,case,xi_dot,n_roots,admissible_margin,R_inf,R_sup,P_star",
        &data,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for &x in &[
            1.0,
            -3.5,
            std::f64::consts::PI,
            1.0 / 3.0,
            6.02e23,
            -1.6e-19,
            f64::MIN_POSITIVE,
        ] {
            let s = fmt_float(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, x, "round-trip failed for {s}");
            assert!(!s.contains(','));
        }
    }
}
