//! Pseudo-spectral evaluation of the rotational nonlinearity
//! `bar( D w x curl(D w) )` and its diagnostics.
//!
//! The cross-product form is kept as written (no rewriting into convective
//! plus Bernoulli-gradient form): the model's energy identity hinges on the
//! pointwise orthogonality `(a x curl a) . a = 0` of the rotational form.
//! The outer filter bar is applied after dealiasing; both are diagonal so
//! the order is mathematically irrelevant, but filtering last keeps the
//! orthogonality pairing exact on retained modes.

use num_complex::Complex64;

use crate::operators::SymbolTable;
use crate::spectral::{RealVectorField, SpectralVectorField, Transformer};
use crate::Result;

/// Result of one nonlinear-term evaluation plus cheap residual diagnostics.
pub struct NonlinearTerm {
    /// The filtered model term, in spectral space.
    pub value: SpectralVectorField,
    /// Fraction of the product's l2 norm removed by dealiasing.
    pub dealias_loss: f64,
    /// `max_x |(a x omega) . a|` normalized by the pointwise magnitudes:
    /// machine-precision orthogonality of the cross product to its factor.
    pub pointwise_defect: f64,
    /// `max_x |a(x)|` of the advecting (deconvolved) velocity, for CFL use.
    pub max_advect_speed: f64,
}

/// Spectral curl: `(curl v)_k = i k x c_k`.
pub fn curl(v: &SpectralVectorField) -> SpectralVectorField {
    let grid = v.grid.clone();
    let mut out = SpectralVectorField::zeros(grid.clone());
    for m in 0..grid.len() {
        let k = grid.k_at(m);
        let (kx, ky, kz) = (k[0] as f64, k[1] as f64, k[2] as f64);
        let c = [v.comps[0][m], v.comps[1][m], v.comps[2][m]];
        let i = Complex64::i();
        out.comps[0][m] = i * (ky * c[2] - kz * c[1]);
        out.comps[1][m] = i * (kz * c[0] - kx * c[2]);
        out.comps[2][m] = i * (kx * c[1] - ky * c[0]);
    }
    out
}

/// Which per-mode multipliers shape the model term.
///
/// `advect[m]` replaces the deconvolution symbol on the advecting velocity;
/// `bar[m]` is the outer filter multiplier (1 everywhere for the plain
/// rotational equations).
pub struct ModelSymbols<'a> {
    pub advect: &'a [f64],
    pub bar: &'a [f64],
}

/// Core evaluation: `bar( M u x curl(M u) )` for a per-mode multiplier `M`.
///
/// Pipeline: apply `advect`, curl, two inverse transforms, pointwise cross
/// product, forward transform, optional dealiasing, mean-free projection,
/// then the outer `bar` multiplier. The returned term is NOT Leray-projected;
/// the projection (and pressure recovery) happens in the time stepper.
pub fn model_term(
    u: &SpectralVectorField,
    sym: &ModelSymbols,
    dealias_on: bool,
    tf: &Transformer,
) -> Result<NonlinearTerm> {
    let grid = u.grid.clone();
    let mut advected = u.clone();
    for m in 0..grid.len() {
        let s = sym.advect[m];
        for a in 0..3 {
            advected.comps[a][m] *= s;
        }
    }
    let vorticity = curl(&advected);

    let a_phys = tf.inverse(&advected)?;
    let w_phys = tf.inverse_unchecked(&vorticity);

    let mut cross = RealVectorField::zeros(grid.clone());
    let mut defect = 0.0_f64;
    let mut max_speed_sq = 0.0_f64;
    for m in 0..grid.len() {
        let a = [a_phys.comps[0][m], a_phys.comps[1][m], a_phys.comps[2][m]];
        let w = [w_phys.comps[0][m], w_phys.comps[1][m], w_phys.comps[2][m]];
        let c = [
            a[1] * w[2] - a[2] * w[1],
            a[2] * w[0] - a[0] * w[2],
            a[0] * w[1] - a[1] * w[0],
        ];
        cross.comps[0][m] = c[0];
        cross.comps[1][m] = c[1];
        cross.comps[2][m] = c[2];
        let a_sq = a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
        let w_sq = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
        let dot = (c[0] * a[0] + c[1] * a[1] + c[2] * a[2]).abs();
        let scale = a_sq * w_sq.sqrt();
        if scale > 0.0 {
            defect = defect.max(dot / scale.max(1e-30));
        }
        max_speed_sq = max_speed_sq.max(a_sq);
    }

    let mut term = tf.forward(&cross);
    let before = term.l2_norm();
    if dealias_on {
        term.dealias();
    }
    term.project_mean_free();
    let after = term.l2_norm();
    let dealias_loss = if before > 0.0 {
        ((before * before - after * after).max(0.0)).sqrt() / before
    } else {
        0.0
    };

    for m in 0..grid.len() {
        let s = sym.bar[m];
        for a in 0..3 {
            term.comps[a][m] *= s;
        }
    }

    Ok(NonlinearTerm {
        value: term,
        dealias_loss,
        pointwise_defect: defect,
        max_advect_speed: max_speed_sq.sqrt(),
    })
}

/// The model term with the deconvolution operator as advecting multiplier
/// and the Helmholtz filter as outer bar, i.e.
/// `A^{-1}( D u x curl(D u) )` evaluated pseudo-spectrally.
pub fn rotational_cross(
    u: &SpectralVectorField,
    table: &SymbolTable,
    dealias_on: bool,
    tf: &Transformer,
) -> Result<NonlinearTerm> {
    let bar: Vec<f64> = table.a_hat.iter().map(|a| 1.0 / a).collect();
    model_term(
        u,
        &ModelSymbols {
            advect: &table.d_hat,
            bar: &bar,
        },
        dealias_on,
        tf,
    )
}

/// Normalized residual of the energy-identity pairing
/// `( bar(D u x curl(D u)), A D u )`, which vanishes in exact arithmetic.
pub fn orthogonality_defect(u: &SpectralVectorField, term: &NonlinearTerm, table: &SymbolTable) -> f64 {
    let weights: Vec<f64> = table
        .a_hat
        .iter()
        .zip(table.d_hat.iter())
        .map(|(a, d)| a * d)
        .collect();
    orthogonality_defect_weighted(u, &term.value, &weights)
}

/// Same defect with an explicit per-mode energy weight (`a_hat * d_hat` for
/// the deconvolution model, `a_hat^2` for its limit system, 1 when plain).
pub fn orthogonality_defect_weighted(
    u: &SpectralVectorField,
    term_value: &SpectralVectorField,
    weights: &[f64],
) -> f64 {
    let mut adu = u.clone();
    for m in 0..u.grid.len() {
        for a in 0..3 {
            adu.comps[a][m] *= weights[m];
        }
    }
    let pairing = term_value.inner(&adu).abs();
    let denom = term_value.l2_norm() * adu.l2_norm() + 1e-30;
    pairing / denom
}
