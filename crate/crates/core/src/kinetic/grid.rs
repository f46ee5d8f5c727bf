//! Periodic square grids and real spatial fields with spectral helpers.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;
use crate::{Error, Result};

/// The periodic box [−L/2, L/2)² sampled at `nx` points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub side: f64,
    pub nx: usize,
}

impl GridSpec {
    pub fn new(side: f64, nx: usize) -> Result<Self> {
        if !(side > 0.0) || nx < 2 || nx % 2 != 0 {
            return Err(Error::Shape(format!(
                "grid needs side > 0 and an even nx >= 2, got L={side}, nx={nx}"
            )));
        }
        Ok(GridSpec { side, nx })
    }

    pub fn spacing(&self) -> f64 {
        self.side / self.nx as f64
    }

    pub fn len(&self) -> usize {
        self.nx * self.nx
    }

    pub fn is_empty(&self) -> bool {
        self.nx == 0
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -0.5 * self.side + i as f64 * self.spacing()
    }

    pub fn point(&self, ix: usize, iy: usize) -> Vec2 {
        Vec2::new(self.coordinate(ix), self.coordinate(iy))
    }

    /// Signed frequency index of FFT slot `m`.
    pub fn frequency(&self, m: usize) -> i64 {
        let n = self.nx as i64;
        let m = m as i64;
        if m <= n / 2 {
            m
        } else {
            m - n
        }
    }

    /// Wavenumber 2πm/L of FFT slot `m`; the Nyquist slot keeps its value.
    pub fn wavenumber(&self, m: usize) -> f64 {
        TAU * self.frequency(m) as f64 / self.side
    }

    /// Wavenumber used for odd derivatives: the Nyquist slot maps to zero so
    /// real fields stay real.
    pub fn derivative_wavenumber(&self, m: usize) -> f64 {
        if m == self.nx / 2 {
            0.0
        } else {
            self.wavenumber(m)
        }
    }

    /// Wave vector of flat spatial mode `s = my·nx + mx`.
    pub fn wave_vector(&self, s: usize) -> (f64, f64) {
        (self.wavenumber(s % self.nx), self.wavenumber(s / self.nx))
    }

    pub fn derivative_wave_vector(&self, s: usize) -> (f64, f64) {
        (
            self.derivative_wavenumber(s % self.nx),
            self.derivative_wavenumber(s / self.nx),
        )
    }

    /// Largest resolved wavenumber, π·nx/L.
    pub fn max_wavenumber(&self) -> f64 {
        PI * self.nx as f64 / self.side
    }
}

/// Coefficients c with f(x_p) = Σ_m c_m e^{2πi m·p/nx}.
pub(crate) fn forward_2d(grid: &GridSpec, data: &mut [Complex64]) {
    transform_2d(grid, data, false);
    let scale = 1.0 / grid.len() as f64;
    for c in data.iter_mut() {
        *c *= scale;
    }
}

pub(crate) fn inverse_2d(grid: &GridSpec, data: &mut [Complex64]) {
    transform_2d(grid, data, true);
}

fn transform_2d(grid: &GridSpec, data: &mut [Complex64], inverse: bool) {
    let n = grid.nx;
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    // Rows are contiguous.
    fft.process(data);
    let mut col = vec![Complex64::default(); n];
    for x in 0..n {
        for y in 0..n {
            col[y] = data[y * n + x];
        }
        fft.process(&mut col);
        for y in 0..n {
            data[y * n + x] = col[y];
        }
    }
}

/// Average of e^{ik(u − u₀)} over a cell [a, a + w] in units where the
/// phase origin sits at u₀.
pub(crate) fn cell_average_phase(k: f64, start: f64, width: f64) -> Complex64 {
    let z = k * width;
    let base = Complex64::from_polar(1.0, k * start);
    if z.abs() < 1e-8 {
        base * Complex64::new(1.0 - z * z / 6.0, 0.5 * z)
    } else {
        base * (Complex64::from_polar(1.0, z) - 1.0) / Complex64::new(0.0, z)
    }
}

/// A real field sampled on a [`GridSpec`], layout `[iy][ix]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl SpatialField {
    pub fn zeros(grid: GridSpec) -> Self {
        SpatialField {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn<F: Fn(Vec2) -> f64>(grid: GridSpec, f: F) -> Self {
        let n = grid.nx;
        let values = (0..n * n).map(|i| f(grid.point(i % n, i / n))).collect();
        SpatialField { grid, values }
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(SpatialField { grid, values })
    }

    pub fn modes(&self) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        forward_2d(&self.grid, &mut data);
        data
    }

    pub fn from_modes(grid: GridSpec, modes: &[Complex64]) -> Self {
        let mut data = modes.to_vec();
        inverse_2d(&grid, &mut data);
        SpatialField {
            grid,
            values: data.iter().map(|c| c.re).collect(),
        }
    }

    /// Multiplies every spatial mode by `m(κ₁, κ₂)` using the full wavenumbers.
    pub fn apply_multiplier<M: Fn(f64, f64) -> f64>(&self, m: M) -> Self {
        let mut modes = self.modes();
        for (s, c) in modes.iter_mut().enumerate() {
            let (k1, k2) = self.grid.wave_vector(s);
            *c *= m(k1, k2);
        }
        Self::from_modes(self.grid, &modes)
    }

    pub fn laplacian(&self) -> Self {
        self.apply_multiplier(|a, b| -(a * a + b * b))
    }

    pub fn mass(&self) -> f64 {
        let h = self.grid.spacing();
        self.values.iter().sum::<f64>() * h * h
    }

    pub fn l1_norm(&self) -> f64 {
        let h = self.grid.spacing();
        self.values.iter().map(|v| v.abs()).sum::<f64>() * h * h
    }

    pub fn l2_norm(&self) -> f64 {
        let h = self.grid.spacing();
        (self.values.iter().map(|v| v * v).sum::<f64>()).sqrt() * h
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn difference(&self, other: &SpatialField) -> Result<SpatialField> {
        if self.grid != other.grid {
            return Err(Error::Shape("fields live on different grids".into()));
        }
        Ok(SpatialField {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }

    /// ‖a − b‖₂/‖b‖₂.
    pub fn relative_l2(&self, reference: &SpatialField) -> Result<f64> {
        Ok(self.difference(reference)?.l2_norm() / reference.l2_norm())
    }

    /// Exact averages of the trigonometric interpolant over a `bins × bins`
    /// partition of the box, layout `[iy][ix]`.
    pub fn cell_averages(&self, bins: usize) -> Vec<f64> {
        let modes = self.modes();
        cell_averages_from_modes(&self.grid, &modes, bins)
    }
}

pub(crate) fn cell_averages_from_modes(grid: &GridSpec, modes: &[Complex64], bins: usize) -> Vec<f64> {
    let n = grid.nx;
    let w = grid.side / bins as f64;
    // Phase origin at x = −L/2.
    let table: Vec<Vec<Complex64>> = (0..n)
        .map(|m| {
            let k = grid.wavenumber(m);
            (0..bins).map(|b| cell_average_phase(k, b as f64 * w, w)).collect()
        })
        .collect();
    let mut out = vec![0.0; bins * bins];
    for by in 0..bins {
        for bx in 0..bins {
            let mut acc = Complex64::default();
            for my in 0..n {
                let py = table[my][by];
                for mx in 0..n {
                    acc += modes[my * n + mx] * table[mx][bx] * py;
                }
            }
            out[by * bins + bx] = acc.re;
        }
    }
    out
}
