//! The bump `w`, the schedules `η_k`, `ε_N` and the oscillatory data
//!
//! ```text
//! u_{0,N}(x) = ε_N Σ_{k=0}^{N} 2^{2k/b} η_k cos((3/2)·2^k x₁) w(x).
//! ```
//!
//! `ŵ` is the C^∞ bump `amplitude·exp(1 − 1/(1 − |ξ/ρ|²))`, sampled directly as
//! torus coefficients. Multiplying by `cos((3/2)2^k x₁)` moves half of it to
//! each of `±(3/2)2^k e₁`, which are grid frequencies whenever `r₁ >= 1`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{pow2_at_least, TorusGrid};
use crate::littlewood_paley::ANNULUS_SUPPORT;
use crate::spectral::{GridDescriptor, RealField, SpectralField, Transform};

/// Minimum number of nonzero bump coefficients along each axis through the center.
pub const MIN_BUMP_POINTS: usize = 6;

/// Largest admissible bump radius.
pub const MAX_BUMP_RADIUS: f64 = 0.25;

/// Default period exponent along the modulated axis.
pub const DEFAULT_EXPONENT: i32 = 6;

/// Default period exponent on transverse axes.
pub const DEFAULT_TRANSVERSE_EXPONENT: i32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    /// Support radius of `ŵ`.
    pub rho: f64,
    /// `ŵ(0)`.
    pub amplitude: f64,
}

impl BumpSpec {
    /// Radius `1/(2b)`, amplitude 1.
    pub fn for_exponent(b: u32) -> Self {
        Self {
            rho: 1.0 / (2.0 * b as f64),
            amplitude: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho <= MAX_BUMP_RADIUS) {
            return Err(Error::pre(format!(
                "bump radius must lie in (0, {MAX_BUMP_RADIUS}], got {}",
                self.rho
            )));
        }
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::pre(format!(
                "bump amplitude must be positive, got {}",
                self.amplitude
            )));
        }
        Ok(())
    }

    /// Profile value at `|ξ| = radius`.
    pub fn profile(&self, radius: f64) -> f64 {
        let s = radius / self.rho;
        if s >= 1.0 {
            0.0
        } else {
            self.amplitude * (1.0 - 1.0 / (1.0 - s * s)).exp()
        }
    }
}

/// `ŵ` sampled on the grid frequencies, and `w` on the physical points.
pub fn build_bump(grid: &TorusGrid, spec: &BumpSpec) -> Result<(RealField, SpectralField)> {
    spec.validate()?;
    for axis in 0..grid.dim() {
        let h = grid.spacing(axis);
        // |m| h < rho
        let inner = (spec.rho / h).ceil() as usize - 1;
        let points = 2 * inner + 1;
        if points < MIN_BUMP_POINTS {
            return Err(Error::pre(format!(
                "bump of radius {} is under-resolved on axis {axis}: {points} coefficients across \
                 the diameter, need {MIN_BUMP_POINTS} (increase the period exponent)",
                spec.rho
            )));
        }
        if inner >= grid.nyquist_index(axis) {
            return Err(Error::pre(format!(
                "bump of radius {} exceeds the Nyquist frequency on axis {axis}",
                spec.rho
            )));
        }
    }
    let hat = SpectralField::from_fn(grid.clone(), |xi| {
        let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        Complex64::new(spec.profile(r), 0.0)
    })?
    .tagged(true, true)?;
    let w = Transform::new(grid).inverse(&hat)?;
    Ok((w, hat))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpsilonRule {
    /// `ε_N = 1/log(log(3+N))`.
    Paper,
    /// `ε_N = value` for every `N`.
    Constant(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub b: u32,
    pub epsilon: EpsilonRule,
}

impl Schedule {
    pub fn paper(b: u32) -> Self {
        Self {
            b,
            epsilon: EpsilonRule::Paper,
        }
    }

    pub fn constant(b: u32, value: f64) -> Result<Self> {
        let s = Self {
            b,
            epsilon: EpsilonRule::Constant(value),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        crate::spectral::check_exponent(self.b)?;
        if let EpsilonRule::Constant(v) = self.epsilon {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::pre(format!("constant ε must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// `η_k = (1+k)^{−1/b}`.
    pub fn eta(&self, k: u64) -> f64 {
        (1.0 + k as f64).powf(-1.0 / self.b as f64)
    }

    /// `log η_k`.
    pub fn log_eta(&self, k: u64) -> f64 {
        -(1.0 + k as f64).ln() / self.b as f64
    }

    pub fn epsilon(&self, n: u64) -> f64 {
        match self.epsilon {
            EpsilonRule::Paper => 1.0 / (3.0 + n as f64).ln().ln(),
            EpsilonRule::Constant(v) => v,
        }
    }

    pub fn log_epsilon(&self, n: u64) -> f64 {
        match self.epsilon {
            EpsilonRule::Paper => -(3.0 + n as f64).ln().ln().ln(),
            EpsilonRule::Constant(v) => v.ln(),
        }
    }

    /// `(η_k, ε_N)`.
    pub fn values(&self, k: u64, n: u64) -> (f64, f64) {
        (self.eta(k), self.epsilon(n))
    }

    /// Weight `ε_N·2^{2k/b}·η_k` of the `k`-th modulated term.
    pub fn term_weight(&self, k: u64, n: u64) -> f64 {
        self.epsilon(n) * (2.0 * k as f64 / self.b as f64).exp2() * self.eta(k)
    }
}

/// Storage offset of the modulation frequency `(3/2)·2^k` along axis 0.
pub fn modulation_mode(grid: &TorusGrid, k: u32) -> Result<i64> {
    let r = grid.exponents()[0];
    let shift = k as i32 + r - 1;
    if shift < 0 {
        return Err(Error::pre(format!(
            "modulation (3/2)·2^{k} is not a grid frequency for period exponent {r}"
        )));
    }
    Ok(3 * (1i64 << shift))
}

fn shifted(hat: &SpectralField, offset: i64) -> Result<Vec<Complex64>> {
    let grid = hat.grid();
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (flat, c) in hat.coeffs().iter().enumerate() {
        if *c == Complex64::new(0.0, 0.0) {
            continue;
        }
        let mut idx = grid.unflatten(flat);
        let m = grid.signed_mode(0, idx[0]) + offset;
        idx[0] = grid.storage_index(0, m).ok_or_else(|| {
            Error::pre(format!("shifted bump leaves the grid at mode {m} on axis 0"))
        })?;
        out[grid.flatten(&idx[..grid.dim()])] = *c;
    }
    Ok(out)
}

fn check_modulation_room(w_hat: &SpectralField, n_terms: u32) -> Result<i64> {
    let grid = w_hat.grid();
    let top = modulation_mode(grid, n_terms)?;
    let reach = top + w_hat.band()[0] as i64;
    if reach >= grid.nyquist_index(0) as i64 {
        return Err(Error::pre(format!(
            "(3/2)·2^{n_terms} + rho = {} is not below the axis-0 Nyquist frequency {}",
            reach as f64 * grid.spacing(0),
            grid.nyquist(0)
        )));
    }
    Ok(top)
}

/// Spectrum of `ε_N 2^{2k/b} η_k cos((3/2)2^k x₁) w(x)`.
pub fn u0n_term(w_hat: &SpectralField, n_terms: u32, k: u32, schedule: &Schedule) -> Result<SpectralField> {
    if k > n_terms {
        return Err(Error::pre(format!("term index {k} exceeds N = {n_terms}")));
    }
    check_modulation_room(w_hat, n_terms)?;
    let offset = modulation_mode(w_hat.grid(), k)?;
    let half = 0.5 * schedule.term_weight(k as u64, n_terms as u64);
    let plus = shifted(w_hat, offset)?;
    let minus = shifted(w_hat, -offset)?;
    let coeffs = plus
        .iter()
        .zip(&minus)
        .map(|(a, b)| (a + b) * half)
        .collect();
    let term = SpectralField::from_coeffs(w_hat.grid().clone(), coeffs)?;
    Ok(term.with_tags_unchecked(w_hat.is_real(), w_hat.is_nonnegative()))
}

/// `u_{0,N}` in physical and coefficient form.
pub fn build_u0n(
    grid: &TorusGrid,
    n_terms: u32,
    schedule: &Schedule,
    w_hat: &SpectralField,
) -> Result<(RealField, SpectralField)> {
    schedule.validate()?;
    crate::check_supercritical(grid.dim(), schedule.b)?;
    grid.ensure_same(w_hat.grid())?;
    check_modulation_room(w_hat, n_terms)?;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
    for k in 0..=n_terms {
        let term = u0n_term(w_hat, n_terms, k, schedule)?;
        for (acc, c) in coeffs.iter_mut().zip(term.coeffs()) {
            *acc += c;
        }
    }
    let hat = SpectralField::from_coeffs(grid.clone(), coeffs)?
        .tagged(w_hat.is_real(), w_hat.is_nonnegative())?;
    let u = Transform::new(grid).inverse(&hat)?;
    Ok((u, hat))
}

/// Grid for `u_{0,N}` with default period exponents: axis 0 resolves the top
/// modulation (and, with `bank_top`, the annulus edge `2^{bank_top}·8/3`);
/// transverse axes resolve the bump with room for products.
pub fn construction_grid(n: usize, b: u32, n_terms: u32, bank_top: Option<i32>) -> Result<TorusGrid> {
    if n == 0 || n > crate::grid::MAX_DIM {
        return Err(Error::config(format!("dimension must be 1..=3, got {n}")));
    }
    let rho = BumpSpec::for_exponent(b).rho;
    let mut reach = 1.5 * (n_terms as f64).exp2() + rho;
    if let Some(j) = bank_top {
        reach = reach.max(ANNULUS_SUPPORT.1 * (j as f64).exp2());
    }
    let h0 = (-(DEFAULT_EXPONENT as f64)).exp2();
    let m0 = pow2_at_least(2 * ((reach / h0).floor() as usize + 1));
    let mut exps = vec![DEFAULT_EXPONENT];
    let mut modes = vec![m0];
    for _ in 1..n {
        let h = (-(DEFAULT_TRANSVERSE_EXPONENT as f64)).exp2();
        let band = (rho / h).ceil() as usize;
        exps.push(DEFAULT_TRANSVERSE_EXPONENT);
        modes.push(pow2_at_least(4 * (band + 1)));
    }
    TorusGrid::new(exps, modes)
}

/// Everything needed to rebuild a `u_{0,N}` instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataDescriptor {
    pub n: usize,
    pub b: u32,
    #[serde(rename = "N")]
    pub n_terms: u32,
    pub bump: BumpSpec,
    pub schedule: Schedule,
    pub grid: GridDescriptor,
}

impl DataDescriptor {
    pub fn build(&self) -> Result<(RealField, SpectralField)> {
        if self.schedule.b != self.b {
            return Err(Error::config("schedule exponent differs from b"));
        }
        let grid = self.grid.to_grid()?;
        if grid.dim() != self.n {
            return Err(Error::config("grid dimension differs from n"));
        }
        let (_, w_hat) = build_bump(&grid, &self.bump)?;
        build_u0n(&grid, self.n_terms, &self.schedule, &w_hat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::l1_spectrum;

    #[test]
    fn bump_center_boundary_and_evenness() {
        let grid = TorusGrid::new(vec![6], vec![256]).unwrap();
        let spec = BumpSpec::for_exponent(4);
        let (_, hat) = build_bump(&grid, &spec).unwrap();
        assert_eq!(hat.at(&[0]).re, 1.0);
        // rho = 1/8 = 8 grid spacings
        assert_eq!(hat.at(&[8]).re, 0.0);
        assert_eq!(hat.band(), &[7]);
        for m in -20..20 {
            assert_eq!(hat.at(&[m]), hat.at(&[-m]));
            assert!(hat.at(&[m]).re >= 0.0);
        }
    }

    #[test]
    fn under_resolved_bump_rejected() {
        let grid = TorusGrid::new(vec![6, 4], vec![256, 32]).unwrap();
        // rho = 1/6 with spacing 1/16: only 5 points across
        assert!(build_bump(&grid, &BumpSpec::for_exponent(3)).is_err());
        let grid = TorusGrid::new(vec![6, 5], vec![256, 32]).unwrap();
        assert!(build_bump(&grid, &BumpSpec::for_exponent(3)).is_ok());
    }

    #[test]
    fn bump_radius_capped() {
        let spec = BumpSpec { rho: 0.3, amplitude: 1.0 };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn schedule_values() {
        for b in 2..7 {
            assert_eq!(Schedule::paper(b).eta(0), 1.0);
        }
        let s = Schedule::paper(2);
        assert!((s.eta(7) - 0.353_553_390_593_273_8).abs() < 1e-15);
        assert!((s.epsilon(13) - 0.980_602_274_416_971_2).abs() < 1e-12);
        assert!(s.epsilon(12) > 1.0);
        assert!(s.epsilon(13) < 1.0);
        let c = Schedule::constant(4, 0.5).unwrap();
        assert_eq!(c.values(3, 100), (4f64.powf(-0.25), 0.5));
        assert!(Schedule::constant(4, 0.0).is_err());
    }

    #[test]
    fn single_term_data() {
        let grid = construction_grid(1, 4, 0, None).unwrap();
        let (_, w_hat) = build_bump(&grid, &BumpSpec::for_exponent(4)).unwrap();
        let s = Schedule::paper(4);
        let (_, u_hat) = build_u0n(&grid, 0, &s, &w_hat).unwrap();
        let shift = modulation_mode(&grid, 0).unwrap();
        assert_eq!(shift, 96);
        let weight = s.epsilon(0);
        assert!((u_hat.at(&[96]).re - 0.5 * weight).abs() < 1e-15);
        assert!((u_hat.at(&[-96]).re - 0.5 * weight).abs() < 1e-15);
        assert_eq!(u_hat.at(&[0]).re, 0.0);
        assert!((l1_spectrum(&u_hat) - weight * l1_spectrum(&w_hat)).abs() < 1e-12);
    }

    #[test]
    fn fujita_regime_rejected() {
        let grid = construction_grid(1, 3, 2, None).unwrap();
        let (_, w_hat) = build_bump(&grid, &BumpSpec::for_exponent(3)).unwrap();
        let err = build_u0n(&grid, 2, &Schedule::paper(3), &w_hat).unwrap_err();
        assert!(err.to_string().contains("n(b-1)/2 > 1"));
    }

    #[test]
    fn modulation_must_fit() {
        let grid = TorusGrid::new(vec![6], vec![512]).unwrap();
        let (_, w_hat) = build_bump(&grid, &BumpSpec::for_exponent(4)).unwrap();
        // (3/2)·2^2 = 6 > Nyquist 4
        assert!(build_u0n(&grid, 2, &Schedule::paper(4), &w_hat).is_err());
        assert!(build_u0n(&grid, 1, &Schedule::paper(4), &w_hat).is_ok());
    }

    #[test]
    fn descriptor_roundtrip() {
        let grid = construction_grid(1, 4, 2, None).unwrap();
        let d = DataDescriptor {
            n: 1,
            b: 4,
            n_terms: 2,
            bump: BumpSpec::for_exponent(4),
            schedule: Schedule::constant(4, 1.0).unwrap(),
            grid: (&grid).into(),
        };
        let text = serde_json::to_string(&d).unwrap();
        let back: DataDescriptor = serde_json::from_str(&text).unwrap();
        assert_eq!(back, d);
        assert!(back.build().is_ok());
    }
}
