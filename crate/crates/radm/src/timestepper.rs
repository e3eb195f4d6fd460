//! Time advancement of the regularized rotational system.
//!
//! The viscous operator is diagonal in Fourier space, so the stiff part is
//! handled by an exact integrating factor `exp(-nu |k|^2 tau)` per stage
//! while the projected nonlinear + forcing part is advanced with a
//! low-storage third-order Runge-Kutta scheme (Williamson coefficients).
//! The pure heat equation is therefore integrated exactly, and the scheme
//! is unconditionally stable in the viscous term.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::nonlinearity::{model_term, ModelSymbols, NonlinearTerm};
use crate::operators::{leray_project, FilterParams, SymbolTable};
use crate::spectral::{RealVectorField, SpectralVectorField, Transformer, WaveGrid};
use crate::{Error, Result};

/// Forcing presets; all are divergence-free and mean-free by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForcingPreset {
    None,
    /// `f = f0 (sin x2, sin x3, sin x1)`, steady.
    SteadyTrig,
    /// The steady preset scaled by `exp(-t)`.
    TimeDecayingTrig,
}

/// Initial-condition presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IcPreset {
    /// `(sin x1 cos x2, -cos x1 sin x2, 0)`: a steady Euler solution in
    /// rotational form, decaying as `exp(-2 nu t)` under viscosity.
    TaylorGreen2d,
    /// Seeded random divergence-free field with a smooth decaying spectrum,
    /// supported inside the dealias mask and normalized to unit l2 norm.
    RandomDivfree,
    /// ABC flow with `A = B = C = 1` (a Beltrami field).
    AbcFlow,
}

/// Which advecting operator the nonlinearity uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelMode {
    /// Deconvolution `D_{N,theta}` advects; outer bar is the filter.
    Radm,
    /// The `N -> infinity` limit system: `A_theta` advects.
    LimitAtheta,
    /// Unregularized rotational equations: both operators are the identity.
    PlainRotationalNse,
}

/// Full run configuration.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub grid_n: usize,
    pub nu: f64,
    pub filter: FilterParams,
    pub dt: f64,
    pub t_end: f64,
    pub forcing: ForcingPreset,
    pub ic: IcPreset,
    pub ic_seed: u64,
    pub cfl_safety: f64,
    pub model_mode: ModelMode,
    /// Test hook: drop the nonlinear term entirely (heat-equation runs).
    pub disable_nonlinearity: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            grid_n: 32,
            nu: 0.02,
            filter: FilterParams {
                alpha: 0.25,
                theta: 0.5,
                deconv_order: 4,
            },
            dt: 1e-3,
            t_end: 0.5,
            forcing: ForcingPreset::None,
            ic: IcPreset::TaylorGreen2d,
            ic_seed: 7,
            cfl_safety: 0.5,
            model_mode: ModelMode::Radm,
            disable_nonlinearity: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nu < 0.0 || !self.nu.is_finite() {
            return Err(Error::InvalidConfig(format!("nu must be >= 0, got {}", self.nu)));
        }
        if self.nu == 0.0 && self.forcing != ForcingPreset::None {
            return Err(Error::InvalidConfig(
                "nu = 0 is allowed only with forcing none".into(),
            ));
        }
        if !(self.dt > 0.0) || !(self.t_end > 0.0) {
            return Err(Error::InvalidConfig("dt and t_end must be positive".into()));
        }
        if !(0.0 < self.cfl_safety && self.cfl_safety <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "cfl_safety must lie in (0, 1], got {}",
                self.cfl_safety
            )));
        }
        Ok(())
    }
}

/// Mean-free scalar pressure coefficients.
pub struct PressureField {
    pub grid: Arc<WaveGrid>,
    pub q_coeffs: Vec<Complex64>,
}

/// Advancing state: time, step count and the spectral velocity.
pub struct SolverState {
    pub t: f64,
    pub step_count: u64,
    pub w: SpectralVectorField,
    /// Max pointwise advecting speed observed in the last right-hand side
    /// evaluation (used for the CFL clamp).
    pub advect_max: f64,
}

/// Low-storage RK3 coefficients (Williamson).
const RK_A: [f64; 3] = [0.0, -5.0 / 9.0, -153.0 / 128.0];
const RK_B: [f64; 3] = [1.0 / 3.0, 15.0 / 16.0, 8.0 / 15.0];
const RK_C: [f64; 4] = [0.0, 1.0 / 3.0, 3.0 / 4.0, 1.0];

/// One configured solve: grid, symbols, transforms and the advancing state.
pub struct Solver {
    pub grid: Arc<WaveGrid>,
    pub cfg: SolverConfig,
    pub table: SymbolTable,
    pub tf: Transformer,
    /// Per-mode advecting multiplier (d_hat, a_hat or 1 depending on mode).
    pub advect: Vec<f64>,
    /// Per-mode outer-bar multiplier (1/a_hat, or 1 in the plain mode).
    pub bar: Vec<f64>,
    /// Per-mode model-energy weight `a_hat * advect` (1 in the plain mode).
    pub energy_weight: Vec<f64>,
    pub state: SolverState,
    /// l2 norm of the unfiltered initial velocity, for a priori budgets.
    pub v0_l2: f64,
    /// Spectral forcing shape (time factor applied separately).
    forcing_shape: SpectralVectorField,
    exp_cache: ExpCache,
}

struct ExpCache {
    dt: f64,
    /// `exp(-nu |k|^2 (c_{i+1} - c_i) dt)` per stage, per mode.
    factors: [Vec<f64>; 3],
}

impl Solver {
    /// Build the solver and its initial state from a configuration.
    pub fn new(cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = WaveGrid::new(cfg.grid_n)?;
        let tf = Transformer::new(&grid);

        // In the plain mode the filter is ignored wholesale.
        let table_params = match cfg.model_mode {
            ModelMode::PlainRotationalNse => FilterParams::identity(),
            _ => cfg.filter,
        };
        let table = SymbolTable::new(grid.clone(), table_params);

        let len = grid.len();
        let (advect, bar, energy_weight) = match cfg.model_mode {
            ModelMode::Radm => {
                let advect = table.d_hat.clone();
                let bar: Vec<f64> = table.a_hat.iter().map(|a| 1.0 / a).collect();
                let ew: Vec<f64> = table
                    .a_hat
                    .iter()
                    .zip(advect.iter())
                    .map(|(a, d)| a * d)
                    .collect();
                (advect, bar, ew)
            }
            ModelMode::LimitAtheta => {
                let advect = table.a_hat.clone();
                let bar: Vec<f64> = table.a_hat.iter().map(|a| 1.0 / a).collect();
                let ew: Vec<f64> = table.a_hat.iter().map(|a| a * a).collect();
                (advect, bar, ew)
            }
            ModelMode::PlainRotationalNse => {
                (vec![1.0; len], vec![1.0; len], vec![1.0; len])
            }
        };

        let mut v0 = build_initial_condition(&grid, &tf, &cfg)?;
        leray_project(&mut v0);
        v0.project_mean_free();
        let v0_l2 = v0.l2_norm();

        // w0 = filtered v0 (the filter is the identity when alpha or theta
        // is zero, and in the plain mode).
        let w0 = match cfg.model_mode {
            ModelMode::PlainRotationalNse => v0,
            _ => table.filter_apply(&v0),
        };

        let forcing_shape = build_forcing_shape(&grid, cfg.forcing);

        let mut solver = Solver {
            grid,
            cfg,
            table,
            tf,
            advect,
            bar,
            energy_weight,
            state: SolverState {
                t: 0.0,
                step_count: 0,
                w: w0,
                advect_max: 0.0,
            },
            v0_l2,
            forcing_shape,
            exp_cache: ExpCache {
                dt: f64::NAN,
                factors: [Vec::new(), Vec::new(), Vec::new()],
            },
        };
        // Prime the CFL speed estimate.
        let advected = solver.apply_advect(&solver.state.w);
        solver.state.advect_max = solver.tf.inverse_unchecked(&advected).max_speed();
        Ok(solver)
    }

    fn apply_advect(&self, v: &SpectralVectorField) -> SpectralVectorField {
        let mut out = v.clone();
        for m in 0..self.grid.len() {
            let s = self.advect[m];
            for a in 0..3 {
                out.comps[a][m] *= s;
            }
        }
        out
    }

    /// Filtered spectral forcing at time `t` (the outer bar of the momentum
    /// equation applied to the preset shape).
    pub fn forcing_at(&self, t: f64) -> SpectralVectorField {
        let mut f = match self.cfg.model_mode {
            ModelMode::PlainRotationalNse => self.forcing_shape.clone(),
            _ => self.table.filter_apply(&self.forcing_shape),
        };
        if self.cfg.forcing == ForcingPreset::TimeDecayingTrig {
            f.scale((-t).exp());
        }
        f
    }

    /// `H^{-1}` norm squared of the unfiltered forcing at time `t`.
    pub fn forcing_hm1_sq(&self, t: f64) -> f64 {
        let mut f = self.forcing_shape.clone();
        if self.cfg.forcing == ForcingPreset::TimeDecayingTrig {
            f.scale((-t).exp());
        }
        match f.sobolev_norm(-1.0) {
            Ok(n) => n * n,
            Err(_) => 0.0,
        }
    }

    /// Projected nonlinear-plus-forcing right-hand side at time `t`.
    ///
    /// The viscous term is absent: it is applied exactly through the
    /// integrating factor inside [`Solver::step`].
    pub fn rhs(&self, w: &SpectralVectorField, t: f64) -> Result<(SpectralVectorField, f64)> {
        let mut g;
        let vmax;
        if self.cfg.disable_nonlinearity {
            g = SpectralVectorField::zeros(self.grid.clone());
            vmax = self.state.advect_max;
        } else {
            let term = self.model_term(w)?;
            vmax = term.max_advect_speed;
            g = term.value;
        }
        if self.cfg.forcing != ForcingPreset::None {
            g.axpy(1.0, &self.forcing_at(t));
        }
        leray_project(&mut g);
        g.project_mean_free();
        Ok((g, vmax))
    }

    /// The model nonlinear term for the configured mode (dealiasing on).
    pub fn model_term(&self, w: &SpectralVectorField) -> Result<NonlinearTerm> {
        model_term(
            w,
            &ModelSymbols {
                advect: &self.advect,
                bar: &self.bar,
            },
            true,
            &self.tf,
        )
    }

    fn refresh_exp_cache(&mut self, dt: f64) {
        if self.exp_cache.dt == dt {
            return;
        }
        let nu = self.cfg.nu;
        for i in 0..3 {
            let tau = (RK_C[i + 1] - RK_C[i]) * dt;
            self.exp_cache.factors[i] = (0..self.grid.len())
                .map(|m| (-nu * self.grid.k_sq(m) as f64 * tau).exp())
                .collect();
        }
        self.exp_cache.dt = dt;
    }

    fn scale_by(field: &mut SpectralVectorField, factors: &[f64]) {
        for a in 0..3 {
            for (c, &f) in field.comps[a].iter_mut().zip(factors.iter()) {
                *c *= f;
            }
        }
    }

    /// Advance one step of at most `cfg.dt` (clamped by the CFL condition
    /// and by `t_end`). Returns the step size actually taken.
    pub fn step(&mut self) -> Result<f64> {
        let mut dt = self.cfg.dt.min(self.cfg.t_end - self.state.t);
        if dt <= 0.0 {
            return Ok(0.0);
        }
        // CFL on the advecting (deconvolved) field, which is the velocity
        // the nonlinearity actually transports with.
        let kmax = self.grid.k_max();
        if self.state.advect_max > 0.0 {
            let dt_cfl = self.cfg.cfl_safety / (self.state.advect_max * kmax);
            dt = dt.min(dt_cfl);
        }
        self.refresh_exp_cache(dt);

        let t0 = self.state.t;
        let mut w = self.state.w.clone();
        let mut q = SpectralVectorField::zeros(self.grid.clone());
        let mut vmax = self.state.advect_max;
        for i in 0..3 {
            let (g, v) = self.rhs(&w, t0 + RK_C[i] * dt)?;
            vmax = v;
            if i == 0 {
                q = g;
                q.scale(dt);
            } else {
                Self::scale_by(&mut q, &self.exp_cache.factors[i - 1]);
                q.scale(RK_A[i]);
                q.axpy(dt, &g);
            }
            w.axpy(RK_B[i], &q);
            Self::scale_by(&mut w, &self.exp_cache.factors[i]);
        }

        leray_project(&mut w);
        w.project_mean_free();
        if !w.all_finite() {
            return Err(Error::BlowUp {
                t: self.state.t,
                step: self.state.step_count,
            });
        }
        self.state.w = w;
        self.state.t = t0 + dt;
        self.state.step_count += 1;
        self.state.advect_max = vmax;
        Ok(dt)
    }

    /// Run to `t_end`, invoking `on_step(state)` after every accepted step.
    pub fn run(&mut self, mut on_step: impl FnMut(&Solver)) -> Result<()> {
        while self.state.t < self.cfg.t_end - 1e-14 {
            self.step()?;
            on_step(self);
        }
        Ok(())
    }

    /// Recover the pressure from the current state:
    /// `q_k = -i (k . t_k) / |k|^2` with `t` the unprojected model term plus
    /// filtered forcing.
    pub fn recover_pressure(&self) -> Result<PressureField> {
        let mut t_hat = self.model_term(&self.state.w)?.value;
        if self.cfg.forcing != ForcingPreset::None {
            t_hat.axpy(1.0, &self.forcing_at(self.state.t));
        }
        let mut q = vec![Complex64::ZERO; self.grid.len()];
        for m in 1..self.grid.len() {
            let k2 = self.grid.k_sq(m);
            if k2 == 0 {
                continue;
            }
            let k = self.grid.k_at(m);
            let dot = k[0] as f64 * t_hat.comps[0][m]
                + k[1] as f64 * t_hat.comps[1][m]
                + k[2] as f64 * t_hat.comps[2][m];
            q[m] = Complex64::new(0.0, -1.0) * dot / k2 as f64;
        }
        Ok(PressureField {
            grid: self.grid.clone(),
            q_coeffs: q,
        })
    }

    /// Add `eps * direction / ||direction||_{1/6}` to the current velocity
    /// (projected and re-symmetrized), for continuous-dependence studies.
    pub fn perturb(&mut self, direction: &SpectralVectorField, eps: f64) -> Result<()> {
        let mut d = direction.clone();
        leray_project(&mut d);
        d.project_mean_free();
        d.dealias();
        let norm = d.sobolev_norm(1.0 / 6.0)?;
        if norm == 0.0 {
            return Ok(());
        }
        self.state.w.axpy(eps / norm, &d);
        Ok(())
    }
}

fn build_initial_condition(
    grid: &Arc<WaveGrid>,
    tf: &Transformer,
    cfg: &SolverConfig,
) -> Result<SpectralVectorField> {
    match cfg.ic {
        IcPreset::TaylorGreen2d => {
            if grid.n() < 8 {
                return Err(Error::PresetGridMismatch {
                    preset: "taylor_green_2d",
                    needed: 8,
                    got: grid.n(),
                });
            }
            let phys = RealVectorField::from_fn(grid.clone(), |x, y, _| {
                [x.sin() * y.cos(), -(x.cos()) * y.sin(), 0.0]
            });
            Ok(tf.forward(&phys))
        }
        IcPreset::AbcFlow => {
            let phys = RealVectorField::from_fn(grid.clone(), |x, y, z| {
                [z.sin() + y.cos(), x.sin() + z.cos(), y.sin() + x.cos()]
            });
            Ok(tf.forward(&phys))
        }
        IcPreset::RandomDivfree => Ok(random_divfree_field(grid, cfg.ic_seed)),
    }
}

/// Seeded random divergence-free field: Gaussian coefficients shaped by
/// `exp(-|k|^2 / k0^2)` on in-mask modes, projected and normalized to
/// `||v||_2 = 1`.
pub fn random_divfree_field(grid: &Arc<WaveGrid>, seed: u64) -> SpectralVectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = SpectralVectorField::zeros(grid.clone());
    let k0_sq = 9.0;
    for m in 0..grid.len() {
        let k2 = grid.k_sq(m);
        if k2 == 0 || !grid.retained(m) {
            continue;
        }
        let amp = (-(k2 as f64) / k0_sq).exp();
        for a in 0..3 {
            v.comps[a][m] = Complex64::new(
                amp * rng.gen_range(-1.0..1.0),
                amp * rng.gen_range(-1.0..1.0),
            );
        }
    }
    v.enforce_symmetry();
    v.project_mean_free();
    leray_project(&mut v);
    let norm = v.l2_norm();
    if norm > 0.0 {
        v.scale(1.0 / norm);
    }
    v
}

fn build_forcing_shape(grid: &Arc<WaveGrid>, preset: ForcingPreset) -> SpectralVectorField {
    let mut f = SpectralVectorField::zeros(grid.clone());
    match preset {
        ForcingPreset::None => {}
        ForcingPreset::SteadyTrig | ForcingPreset::TimeDecayingTrig => {
            // f0 (sin x2, sin x3, sin x1): divergence-free, mean-free.
            let f0 = 0.1;
            let half_i = Complex64::new(0.0, -0.5 * f0);
            f.set_pair([0, 1, 0], [half_i, Complex64::ZERO, Complex64::ZERO]);
            f.set_pair([0, 0, 1], [Complex64::ZERO, half_i, Complex64::ZERO]);
            f.set_pair([1, 0, 0], [Complex64::ZERO, Complex64::ZERO, half_i]);
        }
    }
    f
}
