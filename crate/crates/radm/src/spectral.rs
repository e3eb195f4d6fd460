//! Discrete periodic torus, Fourier transforms, wavenumber algebra,
//! dealiasing and Sobolev norms.
//!
//! The box is fixed to side `2pi`, so wavenumbers are the integer lattice
//! `Z^3` truncated to `[-n/2+1, n/2]` per axis. Transform normalization
//! puts the `1/n^3` on the analysis side, so the stored coefficients are
//! the coefficients of the trigonometric interpolant
//! `f(x) = sum_k c_k exp(i k.x)` and the norm formulas
//! `||v||_{s,2}^2 = sum |k|^{2s} |c_k|^2` apply verbatim.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::{Error, Result};

/// Tolerance for the conjugate-symmetry check on inverse transforms.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Tolerance on the zero mode for mean-free fields.
pub const MEAN_FREE_TOL: f64 = 1e-12;

/// `x^e` for nonnegative `x`, exact (to 1 ulp) for e in {0, 1/2, 1}.
///
/// Used for the fractional symbols `|k|^{2 theta}`: callers pass the exact
/// integer `|k|^2` as `x` and `theta` as `e`, avoiding pow-of-negative
/// pitfalls since `x >= 0` always.
pub fn pow_nonneg(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if e == 1.0 {
        x
    } else if e == 0.5 {
        x.sqrt()
    } else if x == 0.0 {
        0.0
    } else {
        (e * x.ln()).exp()
    }
}

/// Discrete torus: collocation resolution, wavenumber lattice and the
/// dealiasing mask for quadratic products.
#[derive(Debug)]
pub struct WaveGrid {
    n: usize,
    /// Map from axis index to signed wavenumber, length `n`.
    wavenumbers: Vec<i32>,
    /// Per-mode dealias mask (true = retained), length `n^3`.
    dealias: Vec<bool>,
}

impl WaveGrid {
    /// Build a grid with `n` collocation points per axis.
    ///
    /// `n` must be even and at least 8 so the Hermitian layout is
    /// unambiguous (Nyquist modes are self-conjugate and forced real).
    pub fn new(n: usize) -> Result<Arc<Self>> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidGrid(n));
        }
        let wavenumbers: Vec<i32> = (0..n)
            .map(|i| {
                if i <= n / 2 {
                    i as i32
                } else {
                    i as i32 - n as i32
                }
            })
            .collect();
        // 2/3-rule ball: retain |k| <= n/3, i.e. 9 |k|^2 <= n^2 (exact in
        // integers). The ball sits inside the per-axis 2/3 cube, so products
        // of retained modes cannot alias back onto retained modes.
        let n2 = (n * n) as i64;
        let mut dealias = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let kx = wavenumbers[i] as i64;
                    let ky = wavenumbers[j] as i64;
                    let kz = wavenumbers[l] as i64;
                    dealias.push(9 * (kx * kx + ky * ky + kz * kz) <= n2);
                }
            }
        }
        Ok(Arc::new(WaveGrid {
            n,
            wavenumbers,
            dealias,
        }))
    }

    /// Collocation points (and retained modes) per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of modes / collocation points.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat index of mode `(i, j, l)` in axis-index coordinates.
    #[inline]
    pub fn idx(&self, i: usize, j: usize, l: usize) -> usize {
        (i * self.n + j) * self.n + l
    }

    /// Signed wavenumber vector of the mode at flat index `m`.
    #[inline]
    pub fn k_at(&self, m: usize) -> [i32; 3] {
        let n = self.n;
        [
            self.wavenumbers[m / (n * n)],
            self.wavenumbers[(m / n) % n],
            self.wavenumbers[m % n],
        ]
    }

    /// Exact integer `|k|^2` of the mode at flat index `m`.
    #[inline]
    pub fn k_sq(&self, m: usize) -> i64 {
        let k = self.k_at(m);
        let (x, y, z) = (k[0] as i64, k[1] as i64, k[2] as i64);
        x * x + y * y + z * z
    }

    /// Flat index of the conjugate partner `-k`.
    #[inline]
    pub fn conj_idx(&self, m: usize) -> usize {
        let n = self.n;
        let i = m / (n * n);
        let j = (m / n) % n;
        let l = m % n;
        self.idx((n - i) % n, (n - j) % n, (n - l) % n)
    }

    /// Whether the mode is its own conjugate partner (all axes 0 or Nyquist).
    #[inline]
    pub fn is_self_conjugate(&self, m: usize) -> bool {
        self.conj_idx(m) == m
    }

    /// Dealias mask value for the mode at flat index `m`.
    #[inline]
    pub fn retained(&self, m: usize) -> bool {
        self.dealias[m]
    }

    /// Largest `|k|` over all carried modes.
    pub fn k_max(&self) -> f64 {
        let h = (self.n / 2) as f64;
        (3.0 * h * h).sqrt()
    }

    /// Largest `|k|^2` over modes inside the dealias mask.
    pub fn k_sq_max_retained(&self) -> i64 {
        (0..self.len())
            .filter(|&m| self.dealias[m])
            .map(|m| self.k_sq(m))
            .max()
            .unwrap()
    }
}

/// Three-component complex Fourier coefficients on a [`WaveGrid`].
#[derive(Debug, Clone)]
pub struct SpectralVectorField {
    pub grid: Arc<WaveGrid>,
    /// One flat `n^3` coefficient array per velocity component.
    pub comps: [Vec<Complex64>; 3],
}

/// Three-component real values at the collocation points of a [`WaveGrid`].
#[derive(Debug, Clone)]
pub struct RealVectorField {
    pub grid: Arc<WaveGrid>,
    pub comps: [Vec<f64>; 3],
}

impl SpectralVectorField {
    pub fn zeros(grid: Arc<WaveGrid>) -> Self {
        let len = grid.len();
        SpectralVectorField {
            grid,
            comps: [
                vec![Complex64::ZERO; len],
                vec![Complex64::ZERO; len],
                vec![Complex64::ZERO; len],
            ],
        }
    }

    /// Set the coefficient at wavenumber `k` and the conjugate value at `-k`.
    pub fn set_pair(&mut self, k: [i32; 3], c: [Complex64; 3]) {
        let n = self.grid.n as i32;
        let wrap = |q: i32| (((q % n) + n) % n) as usize;
        let m = self.grid.idx(wrap(k[0]), wrap(k[1]), wrap(k[2]));
        let mc = self.grid.conj_idx(m);
        for a in 0..3 {
            self.comps[a][m] = c[a];
            self.comps[a][mc] = c[a].conj();
        }
        if m == mc {
            for a in 0..3 {
                self.comps[a][m] = Complex64::new(c[a].re, 0.0);
            }
        }
    }

    /// Coefficient at wavenumber `k`.
    pub fn get(&self, k: [i32; 3]) -> [Complex64; 3] {
        let n = self.grid.n as i32;
        let wrap = |q: i32| (((q % n) + n) % n) as usize;
        let m = self.grid.idx(wrap(k[0]), wrap(k[1]), wrap(k[2]));
        [self.comps[0][m], self.comps[1][m], self.comps[2][m]]
    }

    /// Plain l2 coefficient norm (`s = 0` Sobolev norm including the zero mode).
    pub fn l2_norm(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest coefficient magnitude over modes and components.
    pub fn linf_coeff(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// `( sum_{k != 0} |k|^{2s} |c_k|^2 )^{1/2}`.
    ///
    /// Rejects fields whose zero mode is not (numerically) zero, since for
    /// negative `s` the weight is singular there.
    pub fn sobolev_norm(&self, s: f64) -> Result<f64> {
        let c0 = (0..3)
            .map(|a| self.comps[a][0].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if c0 > MEAN_FREE_TOL {
            return Err(Error::MeanFreeViolation(c0));
        }
        let mut acc = 0.0;
        for m in 1..self.grid.len() {
            let k2 = self.grid.k_sq(m);
            if k2 == 0 {
                continue;
            }
            let w = pow_nonneg(k2 as f64, s);
            for a in 0..3 {
                acc += w * self.comps[a][m].norm_sqr();
            }
        }
        Ok(acc.sqrt())
    }

    /// Zero every coefficient outside the dealias mask.
    pub fn dealias(&mut self) {
        let grid = self.grid.clone();
        for a in 0..3 {
            for (m, c) in self.comps[a].iter_mut().enumerate() {
                if !grid.retained(m) {
                    *c = Complex64::ZERO;
                }
            }
        }
    }

    /// Force the zero mode to exactly zero.
    pub fn project_mean_free(&mut self) {
        for a in 0..3 {
            self.comps[a][0] = Complex64::ZERO;
        }
    }

    /// Largest conjugate-symmetry defect `max |c_k - conj(c_{-k})|`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for m in 0..self.grid.len() {
            let mc = self.grid.conj_idx(m);
            if mc < m {
                continue;
            }
            for a in 0..3 {
                let d = (self.comps[a][m] - self.comps[a][mc].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Symmetrize exactly: average each pair, zero the imaginary part of
    /// self-conjugate (Nyquist/zero) modes.
    pub fn enforce_symmetry(&mut self) {
        for m in 0..self.grid.len() {
            let mc = self.grid.conj_idx(m);
            if mc == m {
                for a in 0..3 {
                    self.comps[a][m] = Complex64::new(self.comps[a][m].re, 0.0);
                }
            } else if mc > m {
                for a in 0..3 {
                    let avg = 0.5 * (self.comps[a][m] + self.comps[a][mc].conj());
                    self.comps[a][m] = avg;
                    self.comps[a][mc] = avg.conj();
                }
            }
        }
    }

    /// `max_k |k . c_k|`, the discrete divergence residual.
    pub fn divergence_residual(&self) -> f64 {
        let mut worst = 0.0_f64;
        for m in 0..self.grid.len() {
            let k = self.grid.k_at(m);
            let d = k[0] as f64 * self.comps[0][m]
                + k[1] as f64 * self.comps[1][m]
                + k[2] as f64 * self.comps[2][m];
            worst = worst.max(d.norm());
        }
        worst
    }

    /// Real inner product `sum_k Re( u_k . conj(v_k) )` over components.
    pub fn inner(&self, other: &Self) -> f64 {
        let mut acc = 0.0;
        for a in 0..3 {
            for (u, v) in self.comps[a].iter().zip(other.comps[a].iter()) {
                acc += u.re * v.re + u.im * v.im;
            }
        }
        acc
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Self) {
        for a in 0..3 {
            for (u, v) in self.comps[a].iter_mut().zip(other.comps[a].iter()) {
                *u += s * v;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for a in 0..3 {
            for u in self.comps[a].iter_mut() {
                *u *= s;
            }
        }
    }

    /// Coefficient-wise difference `self - other` (same grid assumed).
    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// True iff every coefficient is finite.
    pub fn all_finite(&self) -> bool {
        self.comps
            .iter()
            .all(|c| c.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }
}

impl RealVectorField {
    pub fn zeros(grid: Arc<WaveGrid>) -> Self {
        let len = grid.len();
        RealVectorField {
            grid,
            comps: [vec![0.0; len], vec![0.0; len], vec![0.0; len]],
        }
    }

    /// Fill from a closure of the collocation coordinates `(x1, x2, x3)`.
    pub fn from_fn(grid: Arc<WaveGrid>, f: impl Fn(f64, f64, f64) -> [f64; 3]) -> Self {
        let n = grid.n();
        let h = 2.0 * std::f64::consts::PI / n as f64;
        let mut out = RealVectorField::zeros(grid.clone());
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let v = f(i as f64 * h, j as f64 * h, l as f64 * h);
                    let m = grid.idx(i, j, l);
                    for a in 0..3 {
                        out.comps[a][m] = v[a];
                    }
                }
            }
        }
        out
    }

    /// Largest pointwise speed `max_x |v(x)|`.
    pub fn max_speed(&self) -> f64 {
        let mut worst = 0.0_f64;
        for m in 0..self.grid.len() {
            let s = self.comps[0][m] * self.comps[0][m]
                + self.comps[1][m] * self.comps[1][m]
                + self.comps[2][m] * self.comps[2][m];
            worst = worst.max(s);
        }
        worst.sqrt()
    }
}

/// Cached FFT plans for one resolution.
///
/// All transforms are deterministic; results agree across runs to well
/// below 1e-13 relative.
pub struct Transformer {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Transformer {
    pub fn new(grid: &WaveGrid) -> Self {
        let mut planner = FftPlanner::new();
        Transformer {
            n: grid.n(),
            fwd: planner.plan_fft_forward(grid.n()),
            inv: planner.plan_fft_inverse(grid.n()),
        }
    }

    /// In-place 3-D FFT over a flat `n^3` array, one axis at a time.
    fn fft3(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let mut scratch = vec![Complex64::ZERO; plan.get_inplace_scratch_len()];
        // axis 2 (contiguous)
        for line in data.chunks_exact_mut(n) {
            plan.process_with_scratch(line, &mut scratch);
        }
        // axes 1 and 0: gather strided lines into a buffer
        let mut buf = vec![Complex64::ZERO; n];
        for i in 0..n {
            for l in 0..n {
                let base = i * n * n + l;
                for j in 0..n {
                    buf[j] = data[base + j * n];
                }
                plan.process_with_scratch(&mut buf, &mut scratch);
                for j in 0..n {
                    data[base + j * n] = buf[j];
                }
            }
        }
        for j in 0..n {
            for l in 0..n {
                let base = j * n + l;
                for i in 0..n {
                    buf[i] = data[base + i * n * n];
                }
                plan.process_with_scratch(&mut buf, &mut scratch);
                for i in 0..n {
                    data[base + i * n * n] = buf[i];
                }
            }
        }
    }

    /// Analysis transform: `c_k = (1/n^3) sum_x f(x) exp(-i k.x)`.
    ///
    /// Conjugate symmetry is enforced exactly on the output and Nyquist
    /// modes are forced real.
    pub fn forward(&self, f: &RealVectorField) -> SpectralVectorField {
        let mut out = SpectralVectorField::zeros(f.grid.clone());
        let scale = 1.0 / (f.grid.len() as f64);
        for a in 0..3 {
            let mut buf: Vec<Complex64> = f.comps[a]
                .iter()
                .map(|&x| Complex64::new(x, 0.0))
                .collect();
            self.fft3(&mut buf, &self.fwd);
            for z in buf.iter_mut() {
                *z *= scale;
            }
            out.comps[a] = buf;
        }
        out.enforce_symmetry();
        out
    }

    /// Synthesis transform: `f(x) = sum_k c_k exp(i k.x)`.
    ///
    /// Rejects inputs whose conjugate-symmetry defect exceeds
    /// [`SYMMETRY_TOL`] relative to the largest coefficient.
    pub fn inverse(&self, v: &SpectralVectorField) -> Result<RealVectorField> {
        let scale = v.linf_coeff().max(1.0);
        let defect = v.symmetry_defect();
        if defect > SYMMETRY_TOL * scale {
            return Err(Error::SymmetryViolation {
                defect,
                tol: SYMMETRY_TOL * scale,
            });
        }
        Ok(self.inverse_unchecked(v))
    }

    /// Synthesis without the symmetry check (for internal round trips where
    /// symmetry holds by construction). Imaginary parts are discarded.
    pub fn inverse_unchecked(&self, v: &SpectralVectorField) -> RealVectorField {
        let mut out = RealVectorField::zeros(v.grid.clone());
        for a in 0..3 {
            let mut buf = v.comps[a].clone();
            self.fft3(&mut buf, &self.inv);
            for (x, z) in out.comps[a].iter_mut().zip(buf.iter()) {
                *x = z.re;
            }
        }
        out
    }
}
