//! Dyadic partition of unity and homogeneous Besov norms.
//!
//! The radial cutoff `χ` equals 1 on `[0, 1]`, 0 on `[5/4, ∞)` and uses the
//! C^∞ transition `T(u) = e^{−1/u} / (e^{−1/u} + e^{−1/(1−u)})` in between.
//! The annulus profile `ψ̂(ξ) = χ(|ξ|/2) − χ(|ξ|)` is supported in
//! `1 <= |ξ| <= 5/2` and identically 1 on `[5/4, 2]`, so that
//! `Σ_{j=j_min}^{j_max} ψ̂(2^{−j}ξ) = χ(|ξ|/2^{j_max+1}) − χ(|ξ|/2^{j_min})`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::TorusGrid;
use crate::reduce::pairwise_sum;
use crate::spectral::{lp_norm_of_samples, transform_forward, RealField, SpectralField, Transform};

/// Inner radius of the cutoff transition.
pub const CUTOFF_INNER: f64 = 1.0;
/// Outer radius of the cutoff transition.
pub const CUTOFF_OUTER: f64 = 1.25;

/// Nominal support `[3/4, 8/3]` of the annulus profile.
pub const ANNULUS_SUPPORT: (f64, f64) = (0.75, 8.0 / 3.0);
/// Region `[5/4, 7/4]` where the profile must equal one.
pub const ANNULUS_PLATEAU: (f64, f64) = (1.25, 1.75);

/// Mass outside the bank's coverage tolerated by [`besov_norm`], relative to `Σ|c|`.
pub const COVERAGE_TOLERANCE: f64 = 1e-12;

fn transition(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        1.0 / (1.0 + (1.0 / u - 1.0 / (1.0 - u)).exp())
    }
}

/// Smooth radial cutoff `χ(ρ)`.
pub fn cutoff(rho: f64) -> f64 {
    if rho <= CUTOFF_INNER {
        1.0
    } else if rho >= CUTOFF_OUTER {
        0.0
    } else {
        1.0 - transition((rho - CUTOFF_INNER) / (CUTOFF_OUTER - CUTOFF_INNER))
    }
}

/// `ψ̂(2^{−j}ξ)` for `|ξ| = radius`. Scaling by powers of two is exact, so
/// neighbouring blocks telescope without rounding in the arguments.
pub fn annulus_profile(radius: f64, j: i32) -> f64 {
    let scaled = radius * (-(j as f64)).exp2();
    cutoff(scaled / 2.0) - cutoff(scaled)
}

/// Sampled profiles `ψ̂(2^{−j}ξ)` for `j_min <= j <= j_max` on one grid.
#[derive(Debug, Clone)]
pub struct FilterBank {
    grid: TorusGrid,
    j_min: i32,
    j_max: i32,
    profiles: Vec<Vec<f64>>,
}

impl FilterBank {
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn j_range(&self) -> (i32, i32) {
        (self.j_min, self.j_max)
    }

    pub fn profile(&self, j: i32) -> Result<&[f64]> {
        self.check_index(j)?;
        Ok(&self.profiles[(j - self.j_min) as usize])
    }

    /// Band `[2^{j_min}·(8/3), 2^{j_max}·(3/4)]` on which the bank sums to one.
    pub fn covered_band(&self) -> (f64, f64) {
        (
            ANNULUS_SUPPORT.1 * (self.j_min as f64).exp2(),
            ANNULUS_SUPPORT.0 * (self.j_max as f64).exp2(),
        )
    }

    /// `Σ_j ψ̂(2^{−j}ξ)` at every grid frequency.
    pub fn coverage(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| self.profiles.iter().map(|p| p[i]).sum())
            .collect()
    }

    fn check_index(&self, j: i32) -> Result<()> {
        if j < self.j_min || j > self.j_max {
            return Err(Error::pre(format!(
                "block {j} outside filter bank range [{}, {}]",
                self.j_min, self.j_max
            )));
        }
        Ok(())
    }
}

pub fn build_filter_bank(grid: &TorusGrid, j_min: i32, j_max: i32) -> Result<FilterBank> {
    if j_max - j_min < 1 {
        return Err(Error::pre(format!(
            "filter bank needs j_max - j_min >= 1, got [{j_min}, {j_max}]"
        )));
    }
    let top = ANNULUS_SUPPORT.1 * (j_max as f64).exp2();
    let resolved = (0..grid.dim()).map(|a| grid.nyquist(a)).fold(0.0, f64::max);
    if top >= resolved {
        return Err(Error::pre(format!(
            "grid Nyquist {resolved} does not resolve the top annulus edge 2^{j_max}·8/3 = {top}"
        )));
    }
    let radii = grid.wavenumbers();
    let profiles = (j_min..=j_max)
        .map(|j| radii.iter().map(|&r| annulus_profile(r, j)).collect())
        .collect();
    Ok(FilterBank {
        grid: grid.clone(),
        j_min,
        j_max,
        profiles,
    })
}

/// Spectral multiplication by `ψ̂(2^{−j}ξ)`.
pub fn dyadic_block(field: &SpectralField, bank: &FilterBank, j: i32) -> Result<SpectralField> {
    field.grid().ensure_same(bank.grid())?;
    let profile = bank.profile(j)?;
    let coeffs: Vec<Complex64> = field
        .coeffs()
        .iter()
        .zip(profile)
        .map(|(c, &p)| c * p)
        .collect();
    let block = SpectralField::from_coeffs(field.grid().clone(), coeffs)?;
    Ok(block.with_tags_unchecked(field.is_real(), field.is_nonnegative()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockNorm {
    pub j: i32,
    /// `‖Δ_j f‖_p`.
    pub block_norm: f64,
    /// `2^{js}‖Δ_j f‖_p`.
    pub weighted: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BesovReport {
    pub s: f64,
    pub p: f64,
    pub q: f64,
    pub j_min: i32,
    pub j_max: i32,
    pub blocks: Vec<BlockNorm>,
    pub total: f64,
}

impl BesovReport {
    /// CSV with header `j,block_norm,weighted,total`, one row per block.
    pub fn block_csv(&self) -> String {
        let mut out = String::from("j,block_norm,weighted,total\n");
        for b in &self.blocks {
            out.push_str(&format!(
                "{},{:e},{:e},{:e}\n",
                b.j, b.block_norm, b.weighted, self.total
            ));
        }
        out
    }

    /// Header for [`BesovReport::summary_row`].
    pub fn summary_header(&self) -> String {
        let mut h = String::from("s,p,q,j_min,j_max");
        for b in &self.blocks {
            h.push_str(&format!(",block_{}", b.j));
        }
        h.push_str(",total");
        h
    }

    /// `(s, p, q, j_min, j_max, per-block 2^{js}‖Δ_j f‖_p, total)`.
    pub fn summary_row(&self) -> String {
        let mut r = format!(
            "{:e},{:e},{:e},{},{}",
            self.s, self.p, self.q, self.j_min, self.j_max
        );
        for b in &self.blocks {
            r.push_str(&format!(",{:e}", b.weighted));
        }
        r.push_str(&format!(",{:e}", self.total));
        r
    }
}

/// `ℓ^q` norm of nonnegative terms; `q = ∞` is the maximum.
pub fn lq_sum(terms: &[f64], q: f64) -> Result<f64> {
    if q.is_nan() || q < 1.0 {
        return Err(Error::pre(format!("summation exponent q must be >= 1, got {q}")));
    }
    let max = terms.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if q.is_infinite() || max == 0.0 {
        return Ok(max);
    }
    let scaled: Vec<f64> = terms.iter().map(|v| (v.abs() / max).powf(q)).collect();
    Ok(max * pairwise_sum(&scaled).powf(1.0 / q))
}

/// Homogeneous Besov norm `(Σ_j (2^{js}‖Δ_j f‖_p)^q)^{1/q}` of a sampled field.
pub fn besov_norm(f: &RealField, s: f64, p: f64, q: f64, bank: &FilterBank) -> Result<BesovReport> {
    besov_norm_spectral(&transform_forward(f)?, s, p, q, bank)
}

/// [`besov_norm`] for a field already in coefficient form.
pub fn besov_norm_spectral(
    field: &SpectralField,
    s: f64,
    p: f64,
    q: f64,
    bank: &FilterBank,
) -> Result<BesovReport> {
    field.grid().ensure_same(bank.grid())?;
    if p.is_nan() || p < 1.0 || q.is_nan() || q < 1.0 {
        return Err(Error::pre(format!("Besov exponents need p, q >= 1, got p = {p}, q = {q}")));
    }
    check_coverage(field, bank)?;
    let plan = Transform::new(field.grid());
    let mut blocks = Vec::new();
    for j in bank.j_min..=bank.j_max {
        let block = dyadic_block(field, bank, j)?;
        let values = plan.inverse_complex(&block)?;
        let samples: Vec<f64> = values.iter().map(|c| c.re).collect();
        let block_norm = lp_norm_of_samples(field.grid(), &samples, p)?;
        blocks.push(BlockNorm {
            j,
            block_norm,
            weighted: (j as f64 * s).exp2() * block_norm,
        });
    }
    let weighted: Vec<f64> = blocks.iter().map(|b| b.weighted).collect();
    Ok(BesovReport {
        s,
        p,
        q,
        j_min: bank.j_min,
        j_max: bank.j_max,
        total: lq_sum(&weighted, q)?,
        blocks,
    })
}

fn check_coverage(field: &SpectralField, bank: &FilterBank) -> Result<()> {
    let coverage = bank.coverage();
    let mass: Vec<f64> = field.coeffs().iter().map(|c| c.norm()).collect();
    let total = pairwise_sum(&mass);
    if total == 0.0 {
        return Ok(());
    }
    let missing: Vec<f64> = mass
        .iter()
        .zip(&coverage)
        .map(|(m, c)| m * (1.0 - c).abs())
        .collect();
    let fraction = pairwise_sum(&missing) / total;
    if fraction > COVERAGE_TOLERANCE {
        let grid = field.grid();
        let mut offenders: Vec<(f64, usize)> = missing
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > COVERAGE_TOLERANCE * total)
            .map(|(i, &m)| (m, i))
            .collect();
        offenders.sort_by(|a, b| b.0.total_cmp(&a.0));
        let modes = offenders
            .iter()
            .take(8)
            .map(|(_, i)| grid.mode_vector(*i)[..grid.dim()].to_vec())
            .collect();
        return Err(Error::UncoveredMass { fraction, modes });
    }
    Ok(())
}
