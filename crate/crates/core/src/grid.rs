//! Periodic box `[0, 2π·2^r)^n` sampled on a uniform tensor grid.
//!
//! Axis `i` has period `L_i = 2π·2^{r_i}` and `M_i` (even) sample points, so
//! the resolved frequencies are `m·2^{-r_i}` for `m = -M_i/2 .. M_i/2 - 1`.
//! Arrays over the grid are stored row-major: axis 0 varies slowest.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusGrid {
    exponents: Vec<i32>,
    modes: Vec<usize>,
}

impl TorusGrid {
    pub fn new(exponents: Vec<i32>, modes: Vec<usize>) -> Result<Self> {
        if exponents.is_empty() || exponents.len() > MAX_DIM {
            return Err(Error::config(format!(
                "spatial dimension must be 1..={MAX_DIM}, got {}",
                exponents.len()
            )));
        }
        if exponents.len() != modes.len() {
            return Err(Error::config(format!(
                "{} period exponents but {} mode counts",
                exponents.len(),
                modes.len()
            )));
        }
        if let Some(m) = modes.iter().find(|&&m| m < 2 || m % 2 != 0) {
            return Err(Error::config(format!(
                "mode counts must be even and >= 2, got {m}"
            )));
        }
        Ok(Self { exponents, modes })
    }

    /// Same period exponent and mode count on every axis.
    pub fn isotropic(n: usize, exponent: i32, modes: usize) -> Result<Self> {
        Self::new(vec![exponent; n], vec![modes; n])
    }

    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn exponents(&self) -> &[i32] {
        &self.exponents
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Frequency spacing `2^{-r_i}`.
    pub fn spacing(&self, axis: usize) -> f64 {
        (-(self.exponents[axis] as f64)).exp2()
    }

    pub fn period(&self, axis: usize) -> f64 {
        2.0 * PI * (self.exponents[axis] as f64).exp2()
    }

    /// Largest mode index `M_i/2`; stored fields must stay strictly below it.
    pub fn nyquist_index(&self, axis: usize) -> usize {
        self.modes[axis] / 2
    }

    pub fn nyquist(&self, axis: usize) -> f64 {
        self.nyquist_index(axis) as f64 * self.spacing(axis)
    }

    /// Physical quadrature weight `Π L_i / M_i`.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim())
            .map(|a| self.period(a) / self.modes[a] as f64)
            .product()
    }

    /// Volume of one frequency cell, `Π 2^{-r_i}`.
    pub fn frequency_cell(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    /// Signed mode number of storage index `idx` along `axis`.
    pub fn signed_mode(&self, axis: usize, idx: usize) -> i64 {
        let m = self.modes[axis];
        if idx < m / 2 {
            idx as i64
        } else {
            idx as i64 - m as i64
        }
    }

    /// Storage index of signed mode `mode` along `axis`, if it is on the grid.
    pub fn storage_index(&self, axis: usize, mode: i64) -> Option<usize> {
        let m = self.modes[axis] as i64;
        if mode < -m / 2 || mode >= m / 2 {
            None
        } else if mode >= 0 {
            Some(mode as usize)
        } else {
            Some((mode + m) as usize)
        }
    }

    /// Per-axis storage indices of a flat index.
    pub fn unflatten(&self, mut flat: usize) -> [usize; MAX_DIM] {
        let mut out = [0; MAX_DIM];
        for axis in (0..self.dim()).rev() {
            out[axis] = flat % self.modes[axis];
            flat /= self.modes[axis];
        }
        out
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.modes)
            .fold(0, |acc, (&i, &m)| acc * m + i)
    }

    /// Signed mode numbers of a flat index (unused axes are zero).
    pub fn mode_vector(&self, flat: usize) -> [i64; MAX_DIM] {
        let idx = self.unflatten(flat);
        let mut out = [0; MAX_DIM];
        for axis in 0..self.dim() {
            out[axis] = self.signed_mode(axis, idx[axis]);
        }
        out
    }

    /// Frequency vector `ξ` of a flat index (unused axes are zero).
    pub fn wavevector(&self, flat: usize) -> [f64; MAX_DIM] {
        let modes = self.mode_vector(flat);
        let mut out = [0.0; MAX_DIM];
        for axis in 0..self.dim() {
            out[axis] = modes[axis] as f64 * self.spacing(axis);
        }
        out
    }

    pub fn wavenumber_sq(&self, flat: usize) -> f64 {
        self.wavevector(flat).iter().map(|x| x * x).sum()
    }

    /// `|ξ|` at every grid frequency, in storage order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.wavenumber_sq(i).sqrt())
            .collect()
    }

    /// Physical coordinate of a flat sample index.
    pub fn position(&self, flat: usize) -> [f64; MAX_DIM] {
        let idx = self.unflatten(flat);
        let mut out = [0.0; MAX_DIM];
        for axis in 0..self.dim() {
            out[axis] = idx[axis] as f64 * self.period(axis) / self.modes[axis] as f64;
        }
        out
    }

    /// Grid with the same mode counts and every period exponent shifted by `-j`.
    pub fn dyadic_shift(&self, j: i32) -> Self {
        Self {
            exponents: self.exponents.iter().map(|r| r - j).collect(),
            modes: self.modes.clone(),
        }
    }

    /// Grid with the same periods and mode counts replaced.
    pub fn with_modes(&self, modes: Vec<usize>) -> Result<Self> {
        Self::new(self.exponents.clone(), modes)
    }

    pub(crate) fn ensure_same(&self, other: &TorusGrid) -> Result<()> {
        if self != other {
            return Err(Error::config(format!(
                "grid mismatch: {self:?} vs {other:?}"
            )));
        }
        Ok(())
    }
}

/// Smallest even integer `>= target` whose only prime factors are 2, 3 and 5.
pub fn smooth_even_at_least(target: usize) -> usize {
    let mut m = target.max(2);
    if m % 2 == 1 {
        m += 1;
    }
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 2;
    }
}

/// Smallest power of two `>= target`.
pub fn pow2_at_least(target: usize) -> usize {
    target.max(2).next_power_of_two()
}
