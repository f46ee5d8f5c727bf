//! Distributions f(x, θ) stored as spatial Fourier modes × angular harmonics.

use std::f64::consts::TAU;

use super::grid::{cell_average_phase, cell_averages_from_modes, forward_2d, GridSpec, SpatialField};
use crate::geometry::Vec2;
use crate::markov::InitialDensity;
use crate::{Error, Result};
use num_complex::Complex64;

/// f(x_p, θ) = Σ_s Σ_{|k|≤K} c_{s,k} e^{2πi m(s)·p/nx} e^{ikθ}.
///
/// Coefficients are stored spatial-mode-major, harmonic-minor: slot
/// `s·(2K+1) + (k + K)` with `s = my·nx + mx` in FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularField {
    pub grid: GridSpec,
    pub harmonics: usize,
    pub speed: f64,
    pub coeffs: Vec<Complex64>,
}

impl AngularField {
    pub fn zeros(grid: GridSpec, harmonics: usize, speed: f64) -> Self {
        AngularField {
            grid,
            harmonics,
            speed,
            coeffs: vec![Complex64::default(); grid.len() * (2 * harmonics + 1)],
        }
    }

    pub fn width(&self) -> usize {
        2 * self.harmonics + 1
    }

    pub fn index(&self, s: usize, k: i64) -> usize {
        s * self.width() + (k + self.harmonics as i64) as usize
    }

    pub fn get(&self, s: usize, k: i64) -> Complex64 {
        if k.unsigned_abs() as usize > self.harmonics {
            return Complex64::default();
        }
        self.coeffs[self.index(s, k)]
    }

    /// Samples f on the spatial grid and on M equispaced angles, then
    /// projects onto harmonics |k| ≤ K.
    pub fn from_fn<F: Fn(Vec2, f64) -> f64 + Sync>(grid: GridSpec, harmonics: usize, speed: f64, f: F) -> Self {
        let m = (4 * harmonics + 4).max(32);
        let mut field = Self::zeros(grid, harmonics, speed);
        let w = field.width();
        let kk = harmonics as i64;
        let mut per_k: Vec<Vec<Complex64>> = vec![vec![Complex64::default(); grid.len()]; w];
        #[allow(clippy::needless_range_loop)]
        for p in 0..grid.len() {
            let x = grid.point(p % grid.nx, p / grid.nx);
            let samples: Vec<f64> = (0..m).map(|j| f(x, TAU * j as f64 / m as f64)).collect();
            for k in -kk..=kk {
                let mut acc = Complex64::default();
                for (j, &v) in samples.iter().enumerate() {
                    acc += v * Complex64::from_polar(1.0, -(k as f64) * TAU * j as f64 / m as f64);
                }
                per_k[(k + kk) as usize][p] = acc / m as f64;
            }
        }
        for (j, data) in per_k.iter_mut().enumerate() {
            forward_2d(&grid, data);
            for (s, c) in data.iter().enumerate() {
                field.coeffs[s * w + j] = *c;
            }
        }
        field
    }

    pub fn from_density<D: InitialDensity>(grid: GridSpec, harmonics: usize, speed: f64, f0: &D) -> Self {
        Self::from_fn(grid, harmonics, speed, |x, t| f0.value(x, t))
    }

    /// Angle-independent field equal to `rho`.
    pub fn from_spatial(rho: &SpatialField, harmonics: usize, speed: f64) -> Self {
        let mut field = Self::zeros(rho.grid, harmonics, speed);
        for (s, c) in rho.modes().into_iter().enumerate() {
            let i = field.index(s, 0);
            field.coeffs[i] = c;
        }
        field
    }

    /// Spatial modes of harmonic k.
    pub fn harmonic(&self, k: i64) -> Vec<Complex64> {
        (0..self.grid.len()).map(|s| self.get(s, k)).collect()
    }

    /// Angular average ⟨f⟩(x) on the grid.
    pub fn spatial_marginal(&self) -> SpatialField {
        SpatialField::from_modes(self.grid, &self.harmonic(0))
    }

    /// The field with every k ≠ 0 harmonic removed.
    pub fn angular_average(&self) -> AngularField {
        let mut out = Self::zeros(self.grid, self.harmonics, self.speed);
        for s in 0..self.grid.len() {
            let i = self.index(s, 0);
            out.coeffs[i] = self.coeffs[i];
        }
        out
    }

    /// √(Σ|c|²): the root mean square of f over the box and the normalised
    /// angular measure.
    pub fn rms_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// L² norm over the box and the normalised angular measure.
    pub fn l2_norm(&self) -> f64 {
        self.grid.side * self.rms_norm()
    }

    /// L² norm of the k ≠ 0 harmonics.
    pub fn anisotropic_norm(&self) -> f64 {
        let kk = self.harmonics as i64;
        let mut acc = 0.0;
        for s in 0..self.grid.len() {
            for k in -kk..=kk {
                if k != 0 {
                    acc += self.get(s, k).norm_sqr();
                }
            }
        }
        self.grid.side * acc.sqrt()
    }

    /// ∫∫ f dx dθ/2π.
    pub fn mass(&self) -> f64 {
        self.grid.side * self.grid.side * self.coeffs[self.index(0, 0)].re
    }

    /// max |c_{s,k} − conj(c_{−s,−k})|.
    pub fn reality_defect(&self) -> f64 {
        let n = self.grid.nx;
        let kk = self.harmonics as i64;
        let mut worst = 0.0f64;
        for s in 0..self.grid.len() {
            let (mx, my) = (s % n, s / n);
            let t = ((n - my) % n) * n + (n - mx) % n;
            for k in -kk..=kk {
                worst = worst.max((self.get(s, k) - self.get(t, -k).conj()).norm());
            }
        }
        worst
    }

    fn check_compatible(&self, other: &AngularField) -> Result<()> {
        if self.grid != other.grid || self.harmonics != other.harmonics {
            return Err(Error::Shape("fields differ in grid or harmonic count".into()));
        }
        Ok(())
    }

    pub fn difference(&self, other: &AngularField) -> Result<AngularField> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *a -= b;
        }
        Ok(out)
    }

    /// Same field with harmonics truncated or zero-padded to `harmonics`.
    pub fn with_harmonics(&self, harmonics: usize) -> AngularField {
        let mut out = Self::zeros(self.grid, harmonics, self.speed);
        let kk = harmonics.min(self.harmonics) as i64;
        for s in 0..self.grid.len() {
            for k in -kk..=kk {
                let i = out.index(s, k);
                out.coeffs[i] = self.get(s, k);
            }
        }
        out
    }

    /// f at a grid point and angle.
    pub fn value_at_node(&self, ix: usize, iy: usize, theta: f64) -> f64 {
        let n = self.grid.nx;
        let kk = self.harmonics as i64;
        let mut acc = Complex64::default();
        for s in 0..self.grid.len() {
            let (mx, my) = (s % n, s / n);
            let phase = TAU * ((mx * ix + my * iy) % n) as f64 / n as f64;
            let e = Complex64::from_polar(1.0, phase);
            for k in -kk..=kk {
                acc += self.get(s, k) * e * Complex64::from_polar(1.0, k as f64 * theta);
            }
        }
        acc.re
    }

    /// Exact bin averages over `bins_x² × bins_theta` cells, layout
    /// `[iy][ix][itheta]`, matching the Monte Carlo histograms.
    pub fn joint_cell_averages(&self, bins_x: usize, bins_theta: usize) -> Vec<f64> {
        let kk = self.harmonics as i64;
        let w = TAU / bins_theta as f64;
        let mut out = vec![0.0; bins_x * bins_x * bins_theta];
        for k in -kk..=kk {
            let modes = self.harmonic(k);
            if modes.iter().all(|c| c.norm_sqr() == 0.0) {
                continue;
            }
            // Cell averages of a complex field: real and imaginary parts separately.
            let re: Vec<Complex64> = modes.to_vec();
            let (sp_re, sp_im) = complex_cell_averages(&self.grid, &re, bins_x);
            for it in 0..bins_theta {
                let a = cell_average_phase(k as f64, it as f64 * w, w);
                for b in 0..bins_x * bins_x {
                    let z = Complex64::new(sp_re[b], sp_im[b]) * a;
                    out[b * bins_theta + it] += z.re;
                }
            }
        }
        out
    }
}

/// Bin averages of the complex field Σ c_m e^{iκ·x}, returned as (Re, Im).
fn complex_cell_averages(grid: &GridSpec, modes: &[Complex64], bins: usize) -> (Vec<f64>, Vec<f64>) {
    // Split into the two Hermitian parts so the real-valued helper applies.
    let n = grid.nx;
    let conj_rev = |s: usize| {
        let (mx, my) = (s % n, s / n);
        modes[((n - my) % n) * n + (n - mx) % n].conj()
    };
    let even: Vec<Complex64> = (0..modes.len()).map(|s| 0.5 * (modes[s] + conj_rev(s))).collect();
    let odd: Vec<Complex64> = (0..modes.len())
        .map(|s| Complex64::new(0.0, -0.5) * (modes[s] - conj_rev(s)))
        .collect();
    (
        cell_averages_from_modes(grid, &even, bins),
        cell_averages_from_modes(grid, &odd, bins),
    )
}
