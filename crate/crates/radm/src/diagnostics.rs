//! Energy functionals, norms and identity residuals sampled along a run.

use crate::nonlinearity::orthogonality_defect_weighted;
use crate::timestepper::{ForcingPreset, Solver};
use crate::{Error, Result};

/// One sampling instant's worth of diagnostics, all computed from the same
/// snapshot of the velocity coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagRecord {
    pub t: f64,
    /// Half the weighted l2 norm squared with the model energy weights
    /// `a_hat * d_hat` (reduces to the kinetic energy when both are 1).
    pub model_energy: f64,
    /// `nu * sum a_hat d_hat |k|^2 |c_k|^2`: the model dissipation rate.
    pub model_dissipation: f64,
    /// Plain `(1/2) ||w||_2^2`.
    pub kinetic_energy: f64,
    /// `||w||_{theta,2}`.
    pub sobolev_theta: f64,
    /// `||w||_{1+theta,2}`.
    pub sobolev_one_plus_theta: f64,
    /// `max_k |k . c_k|`.
    pub div_residual: f64,
    /// Normalized defect of the nonlinear-term energy orthogonality.
    pub orth_defect: f64,
    /// Weighted pairing of the filtered forcing with the velocity,
    /// using the same model energy weights.
    pub forcing_power: f64,
}

/// Compute all diagnostics for the solver's current state.
pub fn sample(solver: &Solver) -> Result<DiagRecord> {
    let w = &solver.state.w;
    let grid = &solver.grid;
    let ew = &solver.energy_weight;
    let theta = solver.table.params.theta;

    let mut model_energy = 0.0;
    let mut model_diss = 0.0;
    let mut kinetic = 0.0;
    for m in 0..grid.len() {
        let mag2: f64 = (0..3).map(|a| w.comps[a][m].norm_sqr()).sum();
        model_energy += ew[m] * mag2;
        model_diss += ew[m] * grid.k_sq(m) as f64 * mag2;
        kinetic += mag2;
    }
    model_energy *= 0.5;
    model_diss *= solver.cfg.nu;
    kinetic *= 0.5;

    let orth_defect = if solver.cfg.disable_nonlinearity || kinetic == 0.0 {
        0.0
    } else {
        let term = solver.model_term(w)?;
        orthogonality_defect_weighted(w, &term.value, &solver.energy_weight)
    };

    let forcing_power = if solver.cfg.forcing == ForcingPreset::None {
        0.0
    } else {
        let f = solver.forcing_at(solver.state.t);
        let mut p = 0.0;
        for m in 0..grid.len() {
            for a in 0..3 {
                p += ew[m] * (f.comps[a][m] * w.comps[a][m].conj()).re;
            }
        }
        p
    };

    Ok(DiagRecord {
        t: solver.state.t,
        model_energy,
        model_dissipation: model_diss,
        kinetic_energy: kinetic,
        sobolev_theta: w.sobolev_norm(theta)?,
        sobolev_one_plus_theta: w.sobolev_norm(1.0 + theta)?,
        div_residual: w.divergence_residual(),
        orth_defect,
        forcing_power,
    })
}

/// Energy budget over a record sequence.
#[derive(Debug, Clone, Copy)]
pub struct BudgetReport {
    /// `|E(T) - E(0) + integral(dissipation) - integral(forcing power)|`.
    pub residual: f64,
    /// `sup_t [ 2 E(t) + integral_0^t dissipation ]`.
    pub a_priori_lhs: f64,
    /// `||v0||_2^2 + nu^{-1} integral ||f||_{-1}^2` (second term 0 when
    /// there is no forcing).
    pub a_priori_rhs: f64,
    pub a_priori_holds: bool,
}

fn check_ordering(records: &[DiagRecord]) -> Result<()> {
    for i in 1..records.len() {
        if records[i].t <= records[i - 1].t {
            return Err(Error::RecordOrdering(i));
        }
    }
    Ok(())
}

/// Composite Simpson quadrature on the (possibly non-uniform) record grid;
/// a leftover odd interval is closed with a trapezoid. Fourth-order on
/// uniform spacing, so quadrature error stays below the integrator error.
fn integrate(ts: &[f64], ys: &[f64]) -> f64 {
    let n = ts.len();
    if n < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    let mut i = 0;
    while i + 2 < n {
        let (t0, t1, t2) = (ts[i], ts[i + 1], ts[i + 2]);
        let (y0, y1, y2) = (ys[i], ys[i + 1], ys[i + 2]);
        let h0 = t1 - t0;
        let h1 = t2 - t1;
        // exact for quadratics through the three points
        let h = h0 + h1;
        total += h / 6.0
            * ((2.0 - h1 / h0) * y0 + h * h / (h0 * h1) * y1 + (2.0 - h0 / h1) * y2);
        i += 2;
    }
    if i + 1 < n {
        total += 0.5 * (ts[i + 1] - ts[i]) * (ys[i] + ys[i + 1]);
    }
    total
}

/// Check the integrated energy balance and the a priori bound.
///
/// `forcing_hm1_sq` holds `||f(t)||_{-1}^2` at each record's time (pass an
/// all-zero slice for unforced runs); `v0_l2` is the norm of the unfiltered
/// initial velocity.
pub fn energy_budget(
    records: &[DiagRecord],
    v0_l2: f64,
    nu: f64,
    forcing_hm1_sq: &[f64],
) -> Result<BudgetReport> {
    if records.len() < 2 {
        return Err(Error::VerificationFailure(
            "energy budget needs at least two records".into(),
        ));
    }
    if forcing_hm1_sq.len() != records.len() {
        return Err(Error::VerificationFailure(
            "forcing norm sequence length mismatch".into(),
        ));
    }
    check_ordering(records)?;

    let ts: Vec<f64> = records.iter().map(|r| r.t).collect();
    let diss: Vec<f64> = records.iter().map(|r| r.model_dissipation).collect();
    let power: Vec<f64> = records.iter().map(|r| r.forcing_power).collect();

    let e0 = records[0].model_energy;
    let e_end = records[records.len() - 1].model_energy;
    let residual = (e_end - e0 + integrate(&ts, &diss) - integrate(&ts, &power)).abs();

    // Running dissipation integral via trapezoids is accurate enough for an
    // inequality check.
    let mut lhs: f64 = 2.0 * e0;
    let mut acc = 0.0;
    for i in 1..records.len() {
        acc += 0.5 * (ts[i] - ts[i - 1]) * (diss[i] + diss[i - 1]);
        lhs = lhs.max(2.0 * records[i].model_energy + acc);
    }
    let mut rhs = v0_l2 * v0_l2;
    if nu > 0.0 {
        rhs += integrate(&ts, forcing_hm1_sq) / nu;
    }
    // slack for time discretization
    let a_priori_holds = lhs <= rhs * (1.0 + 1e-6) + 1e-12;

    Ok(BudgetReport {
        residual,
        a_priori_lhs: lhs,
        a_priori_rhs: rhs,
        a_priori_holds,
    })
}
