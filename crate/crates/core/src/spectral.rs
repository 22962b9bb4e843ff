//! Fields on the torus and their Fourier coefficients.
//!
//! Convention: `f(x) = Σ_ξ c_ξ e^{i x·ξ}`. With this normalization the
//! coefficients of a pointwise product are the plain (unnormalized)
//! convolution of the factors' coefficients, and `sup|f| <= Σ|c_ξ|`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::NdFft;
use crate::grid::{TorusGrid, MAX_DIM};
use crate::reduce::{pairwise_sum, pairwise_sum_by};

/// Tolerance used when checking the real-valued / nonnegative tags.
pub const TAG_TOLERANCE: f64 = 1e-12;

/// Real samples at the uniform physical points of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: TorusGrid,
    samples: Vec<f64>,
}

impl RealField {
    pub fn new(grid: TorusGrid, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::config(format!(
                "{} samples for a grid of {} points",
                samples.len(),
                grid.len()
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::config(format!("non-finite sample at index {i}")));
        }
        Ok(Self { grid, samples })
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn([f64; MAX_DIM]) -> f64) -> Result<Self> {
        let samples = (0..grid.len()).map(|i| f(grid.position(i))).collect();
        Self::new(grid, samples)
    }

    pub fn constant(grid: TorusGrid, value: f64) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, vec![value; n])
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Fourier coefficients on a grid, with a declared per-axis band.
///
/// `band[i]` is the largest `|m_i|` that may carry a nonzero coefficient;
/// everything outside the band is exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
    band: Vec<usize>,
    real: bool,
    nonnegative: bool,
}

impl SpectralField {
    pub fn zeros(grid: TorusGrid) -> Self {
        let n = grid.len();
        let dim = grid.dim();
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); n],
            band: vec![0; dim],
            real: true,
            nonnegative: true,
        }
    }

    /// Wraps raw coefficients; the band is the tightest one containing every
    /// nonzero entry. No tags are set.
    pub fn from_coeffs(grid: TorusGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::config(format!(
                "{} coefficients for a grid of {} points",
                coeffs.len(),
                grid.len()
            )));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::config("non-finite Fourier coefficient"));
        }
        let band = tight_band(&grid, &coeffs);
        Ok(Self {
            grid,
            coeffs,
            band,
            real: false,
            nonnegative: false,
        })
    }

    /// Builds coefficients from a function of the frequency vector.
    pub fn from_fn(grid: TorusGrid, f: impl Fn([f64; MAX_DIM]) -> Complex64) -> Result<Self> {
        let coeffs = (0..grid.len()).map(|i| f(grid.wavevector(i))).collect();
        Self::from_coeffs(grid, coeffs)
    }

    /// Single coefficient `amplitude` at signed mode vector `mode`.
    pub fn delta(grid: TorusGrid, mode: &[i64], amplitude: Complex64) -> Result<Self> {
        let flat = flat_of_modes(&grid, mode)?;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
        coeffs[flat] = amplitude;
        Self::from_coeffs(grid, coeffs)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn band(&self) -> &[usize] {
        &self.band
    }

    /// Declared support radius along `axis`, in frequency units.
    pub fn band_limit(&self, axis: usize) -> f64 {
        self.band[axis] as f64 * self.grid.spacing(axis)
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn is_nonnegative(&self) -> bool {
        self.nonnegative
    }

    /// Coefficient at a signed mode vector (zero when off-grid).
    pub fn at(&self, mode: &[i64]) -> Complex64 {
        flat_of_modes(&self.grid, mode)
            .map(|i| self.coeffs[i])
            .unwrap_or_default()
    }

    /// Marks the field real-valued and/or nonnegative-spectrum after checking.
    pub fn tagged(mut self, real: bool, nonnegative: bool) -> Result<Self> {
        self.real = real;
        self.nonnegative = nonnegative;
        self.check_invariants()?;
        Ok(self)
    }

    pub(crate) fn with_tags_unchecked(mut self, real: bool, nonnegative: bool) -> Self {
        self.real = real;
        self.nonnegative = nonnegative;
        self
    }

    /// Zeroes every coefficient with `|m_i| > band[i]` and declares that band.
    pub fn truncate(mut self, band: &[usize]) -> Result<Self> {
        if band.len() != self.grid.dim() {
            return Err(Error::config("band has wrong dimension"));
        }
        for flat in 0..self.coeffs.len() {
            let modes = self.grid.mode_vector(flat);
            if (0..band.len()).any(|a| modes[a].unsigned_abs() as usize > band[a]) {
                self.coeffs[flat] = Complex64::new(0.0, 0.0);
            }
        }
        self.band = band
            .iter()
            .zip(self.grid.modes())
            .map(|(&b, &m)| b.min(m / 2))
            .collect();
        Ok(self)
    }

    /// Checks the band declaration and any tags that are set.
    pub fn check_invariants(&self) -> Result<()> {
        let scale = self.max_abs();
        for (flat, c) in self.coeffs.iter().enumerate() {
            if *c == Complex64::new(0.0, 0.0) {
                continue;
            }
            let modes = self.grid.mode_vector(flat);
            for axis in 0..self.grid.dim() {
                if modes[axis].unsigned_abs() as usize > self.band[axis] {
                    return Err(Error::pre(format!(
                        "coefficient at mode {:?} lies outside declared band {:?}",
                        &modes[..self.grid.dim()],
                        self.band
                    )));
                }
            }
        }
        if self.nonnegative {
            let tol = TAG_TOLERANCE * scale;
            if let Some((i, c)) = self
                .coeffs
                .iter()
                .enumerate()
                .find(|(_, c)| c.re < -tol || c.im.abs() > tol)
            {
                return Err(Error::pre(format!(
                    "nonnegative-spectrum tag violated at mode {:?}: {c}",
                    &self.grid.mode_vector(i)[..self.grid.dim()]
                )));
            }
        }
        if self.real {
            let tol = TAG_TOLERANCE * scale;
            for flat in 0..self.coeffs.len() {
                let partner = self.conjugate_index(flat);
                let d = self.coeffs[partner] - self.coeffs[flat].conj();
                if d.norm() > tol {
                    return Err(Error::pre(format!(
                        "real-valued tag violated at mode {:?}",
                        &self.grid.mode_vector(flat)[..self.grid.dim()]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Storage index of `-ξ` (wrapping the Nyquist index onto itself).
    pub fn conjugate_index(&self, flat: usize) -> usize {
        let idx = self.grid.unflatten(flat);
        let mut out = [0usize; MAX_DIM];
        for axis in 0..self.grid.dim() {
            let m = self.grid.modes()[axis];
            out[axis] = (m - idx[axis]) % m;
        }
        self.grid.flatten(&out[..self.grid.dim()])
    }

    /// Largest deviation from Hermitian symmetry, relative to `max|c|`.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        (0..self.coeffs.len())
            .map(|i| (self.coeffs[self.conjugate_index(i)] - self.coeffs[i].conj()).norm())
            .fold(0.0, f64::max)
            / scale
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// `min_ξ Re c_ξ`.
    pub fn positivity_margin(&self) -> f64 {
        self.coeffs.iter().fold(f64::INFINITY, |m, c| m.min(c.re))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c *= factor;
        }
        if factor < 0.0 {
            out.nonnegative = false;
        }
        if factor == 0.0 {
            out.band = vec![0; self.grid.dim()];
        }
        out
    }

    /// Coefficient-wise sum of two fields on the same grid.
    pub fn add(&self, other: &SpectralField) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self {
            grid: self.grid.clone(),
            coeffs,
            band: self
                .band
                .iter()
                .zip(&other.band)
                .map(|(a, b)| *a.max(b))
                .collect(),
            real: self.real && other.real,
            nonnegative: self.nonnegative && other.nonnegative,
        })
    }

    /// Largest `|c_ξ − d_ξ|`.
    pub fn max_diff(&self, other: &SpectralField) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm())))
    }

    /// `Σ_ξ |c_ξ − d_ξ|`.
    pub fn l1_distance(&self, other: &SpectralField) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        let diffs: Vec<f64> = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .collect();
        Ok(pairwise_sum(&diffs))
    }

    /// Re-expresses the coefficients on a grid with the same periods and
    /// different mode counts (zero-padding or exact truncation).
    pub fn resample(&self, target: &TorusGrid) -> Result<Self> {
        if target.exponents() != self.grid.exponents() {
            return Err(Error::config("resample requires identical periods"));
        }
        for axis in 0..target.dim() {
            if self.band[axis] >= target.nyquist_index(axis) {
                return Err(Error::Aliasing {
                    axis,
                    band: self.band[axis],
                    nyquist: target.nyquist_index(axis),
                });
            }
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); target.len()];
        for (flat, c) in self.coeffs.iter().enumerate() {
            if *c == Complex64::new(0.0, 0.0) {
                continue;
            }
            let modes = self.grid.mode_vector(flat);
            let t = flat_of_modes(target, &modes[..target.dim()])?;
            coeffs[t] = *c;
        }
        Ok(Self {
            grid: target.clone(),
            coeffs,
            band: self.band.clone(),
            real: self.real,
            nonnegative: self.nonnegative,
        })
    }

    /// Rescales `f ↦ 2^{2j/(b−1)} f(2^j x)` by moving each coefficient from
    /// `ξ` to `2^j ξ`. The target grid must have period exponents `r_i − j`;
    /// `None` keeps the mode counts (always exact).
    pub fn dyadic_rescale(&self, j: i32, b: u32, target: Option<&TorusGrid>) -> Result<Self> {
        check_exponent(b)?;
        let natural = self.grid.dyadic_shift(j);
        let target = target.cloned().unwrap_or(natural.clone());
        if target.exponents() != natural.exponents() {
            return Err(Error::config(format!(
                "dyadic rescale by 2^{j} needs period exponents {:?}, got {:?}",
                natural.exponents(),
                target.exponents()
            )));
        }
        let factor = (2.0 * j as f64 / (b as f64 - 1.0)).exp2();
        let shifted = Self {
            grid: natural,
            coeffs: self.coeffs.clone(),
            band: self.band.clone(),
            real: self.real,
            nonnegative: self.nonnegative,
        };
        let out = if target.modes() == shifted.grid.modes() {
            shifted
        } else {
            shifted.resample(&target)?
        };
        Ok(out.scaled(factor))
    }
}

fn tight_band(grid: &TorusGrid, coeffs: &[Complex64]) -> Vec<usize> {
    let mut band = vec![0usize; grid.dim()];
    for (flat, c) in coeffs.iter().enumerate() {
        if *c == Complex64::new(0.0, 0.0) {
            continue;
        }
        let modes = grid.mode_vector(flat);
        for axis in 0..grid.dim() {
            band[axis] = band[axis].max(modes[axis].unsigned_abs() as usize);
        }
    }
    band
}

fn flat_of_modes(grid: &TorusGrid, mode: &[i64]) -> Result<usize> {
    if mode.len() != grid.dim() {
        return Err(Error::config(format!(
            "mode vector of length {} on a {}-D grid",
            mode.len(),
            grid.dim()
        )));
    }
    let mut idx = [0usize; MAX_DIM];
    for axis in 0..grid.dim() {
        idx[axis] = grid.storage_index(axis, mode[axis]).ok_or_else(|| {
            Error::config(format!("mode {mode:?} is not resolved by the grid"))
        })?;
    }
    Ok(grid.flatten(&idx[..grid.dim()]))
}

pub(crate) fn check_exponent(b: u32) -> Result<()> {
    if b < 2 {
        return Err(Error::pre(format!("nonlinearity exponent b must be >= 2, got {b}")));
    }
    Ok(())
}

/// Cached forward/inverse transforms for one grid.
pub struct Transform {
    grid: TorusGrid,
    fft: NdFft,
}

impl Transform {
    pub fn new(grid: &TorusGrid) -> Self {
        Self {
            grid: grid.clone(),
            fft: NdFft::new(grid.modes()),
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn forward(&self, f: &RealField) -> Result<SpectralField> {
        self.grid.ensure_same(&f.grid)?;
        let mut data: Vec<Complex64> = f.samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.forward(&mut data);
        let band = self.grid.modes().iter().map(|m| m / 2).collect();
        Ok(SpectralField {
            grid: self.grid.clone(),
            coeffs: data,
            band,
            real: true,
            nonnegative: false,
        })
    }

    /// Complex physical values `Σ c_ξ e^{ix·ξ}`.
    pub fn inverse_complex(&self, field: &SpectralField) -> Result<Vec<Complex64>> {
        self.grid.ensure_same(&field.grid)?;
        let mut data = field.coeffs.clone();
        self.fft.inverse(&mut data);
        Ok(data)
    }

    pub fn inverse(&self, field: &SpectralField) -> Result<RealField> {
        let data = self.inverse_complex(field)?;
        let scale = data.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        let im = data.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
        if im > 1e-8 * scale {
            return Err(Error::pre(format!(
                "field is not real-valued: max |Im| = {im:.3e} vs max |f| = {scale:.3e}"
            )));
        }
        RealField::new(self.grid.clone(), data.iter().map(|c| c.re).collect())
    }

    pub(crate) fn forward_complex(&self, data: &mut [Complex64]) {
        self.fft.forward(data);
    }

    pub(crate) fn inverse_in_place(&self, data: &mut [Complex64]) {
        self.fft.inverse(data);
    }
}

pub fn transform_forward(f: &RealField) -> Result<SpectralField> {
    Transform::new(f.grid()).forward(f)
}

pub fn transform_inverse(field: &SpectralField) -> Result<RealField> {
    Transform::new(field.grid()).inverse(field)
}

/// Plain discrete convolution `Σ_η a_η b_{ξ−η}`.
///
/// Rejected when the band sum reaches the Nyquist index on any axis, since
/// the circular product would then wrap around.
pub fn convolve(a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
    convolve_with(&Transform::new(a.grid()), a, b)
}

pub fn convolve_with(plan: &Transform, a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
    a.grid.ensure_same(&b.grid)?;
    plan.grid.ensure_same(&a.grid)?;
    let grid = &a.grid;
    let mut band = Vec::with_capacity(grid.dim());
    for axis in 0..grid.dim() {
        let sum = a.band[axis] + b.band[axis];
        if sum >= grid.nyquist_index(axis) {
            return Err(Error::Aliasing {
                axis,
                band: sum,
                nyquist: grid.nyquist_index(axis),
            });
        }
        band.push(sum);
    }
    let mut pa = a.coeffs.clone();
    let mut pb = b.coeffs.clone();
    plan.inverse_in_place(&mut pa);
    plan.inverse_in_place(&mut pb);
    for (x, y) in pa.iter_mut().zip(&pb) {
        *x *= y;
    }
    plan.forward_complex(&mut pa);
    let out = SpectralField {
        grid: grid.clone(),
        coeffs: pa,
        band: band.clone(),
        real: a.real && b.real,
        nonnegative: a.nonnegative && b.nonnegative,
    };
    out.truncate(&band)
}

/// `b`-fold convolution power `a^{*b}`.
pub fn convolution_power(a: &SpectralField, b: u32) -> Result<SpectralField> {
    if b == 0 {
        return Err(Error::pre("convolution power needs b >= 1"));
    }
    let plan = Transform::new(a.grid());
    let mut acc = a.clone();
    for _ in 1..b {
        acc = convolve_with(&plan, &acc, a)?;
    }
    Ok(acc)
}

/// Heat semigroup `c_ξ ↦ e^{−t|ξ|²} c_ξ`.
pub fn heat_multiply(field: &SpectralField, t: f64) -> Result<SpectralField> {
    if !(t >= 0.0) {
        return Err(Error::pre(format!("heat flow time must be >= 0, got {t}")));
    }
    let mut out = field.clone();
    for (flat, c) in out.coeffs.iter_mut().enumerate() {
        *c *= (-t * field.grid.wavenumber_sq(flat)).exp();
    }
    Ok(out)
}

/// `(Σ |f(x_i)|^p Δx^n)^{1/p}`, or the maximum for `p = ∞`.
pub fn lp_norm(f: &RealField, p: f64) -> Result<f64> {
    lp_norm_of_samples(f.grid(), f.samples(), p)
}

pub(crate) fn lp_norm_of_samples(grid: &TorusGrid, samples: &[f64], p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::pre(format!("Lebesgue exponent must be >= 1, got {p}")));
    }
    let max = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if p.is_infinite() || max == 0.0 {
        return Ok(max);
    }
    let s = pairwise_sum_by(samples, |v| (v.abs() / max).powf(p));
    Ok(max * (s * grid.cell_volume()).powf(1.0 / p))
}

/// `Σ_ξ |c_ξ|`, an upper bound for `sup|f|`.
pub fn l1_spectrum(field: &SpectralField) -> f64 {
    pairwise_sum_by(&field.coeffs, |c| c.norm())
}

/// `2^{2j/(b−1)} f(2^j x)` on the grid with period `L/2^j` and the same
/// mode counts. Both sample sets coincide up to the amplitude factor, so the
/// operation is exact.
pub fn dyadic_rescale(f: &RealField, j: i32, b: u32) -> Result<RealField> {
    check_exponent(b)?;
    let factor = (2.0 * j as f64 / (b as f64 - 1.0)).exp2();
    RealField::new(
        f.grid.dyadic_shift(j),
        f.samples.iter().map(|v| v * factor).collect(),
    )
}

// ---------------------------------------------------------------------------
// Serialization container

pub const FIELD_FORMAT: &str = "blowlab-spectral-field/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDescriptor {
    pub n: usize,
    pub r: Vec<i32>,
    pub m: Vec<usize>,
}

impl From<&TorusGrid> for GridDescriptor {
    fn from(g: &TorusGrid) -> Self {
        Self {
            n: g.dim(),
            r: g.exponents().to_vec(),
            m: g.modes().to_vec(),
        }
    }
}

impl GridDescriptor {
    pub fn to_grid(&self) -> Result<TorusGrid> {
        if self.n != self.r.len() {
            return Err(Error::config("descriptor n does not match axis count"));
        }
        TorusGrid::new(self.r.clone(), self.m.clone())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldContainer {
    pub format: String,
    pub grid: GridDescriptor,
    pub layout: String,
    pub band: Vec<usize>,
    pub real: bool,
    pub nonnegative: bool,
    /// `(re, im)` pairs, row-major by axis.
    pub coeffs: Vec<[f64; 2]>,
}

impl From<&SpectralField> for FieldContainer {
    fn from(f: &SpectralField) -> Self {
        Self {
            format: FIELD_FORMAT.to_string(),
            grid: f.grid().into(),
            layout: "row-major".to_string(),
            band: f.band.clone(),
            real: f.real,
            nonnegative: f.nonnegative,
            coeffs: f.coeffs.iter().map(|c| [c.re, c.im]).collect(),
        }
    }
}

impl FieldContainer {
    pub fn into_field(self) -> Result<SpectralField> {
        if self.format != FIELD_FORMAT || self.layout != "row-major" {
            return Err(Error::config(format!(
                "unsupported field container {} / {}",
                self.format, self.layout
            )));
        }
        let grid = self.grid.to_grid()?;
        let coeffs = self
            .coeffs
            .iter()
            .map(|[re, im]| Complex64::new(*re, *im))
            .collect();
        let mut field = SpectralField::from_coeffs(grid, coeffs)?;
        if self.band.len() != field.grid.dim()
            || field.band.iter().zip(&self.band).any(|(t, d)| t > d)
        {
            return Err(Error::config("stored band does not contain the coefficients"));
        }
        field.band = self.band;
        field.tagged(self.real, self.nonnegative)
    }
}

impl SpectralField {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&FieldContainer::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<FieldContainer>(text)?.into_field()
    }
}
