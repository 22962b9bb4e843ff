//! Fourier-side blowup certificates in log space.
//!
//! For data with `û₀ >= A ŵ >= 0`, `supp ŵ ⊂ B(0,1)`, the solution satisfies
//!
//! ```text
//! û(t, ξ) >= A^{b^k} α_k e^{−b^k t} 1_{t >= t_k} ŵ_k(ξ),   ŵ_k = ŵ_{k−1}^{*b},
//! α_0 = 1,  α_k = α_{k−1}^b b^{−2k} c_δ,
//! t_0 = 0,  t_k = t_{k−1} + b^{−2k} (δ/2)(b² − 1),
//! c_δ = 1 − e^{−(δ/2)(b²−1)}.
//! ```
//!
//! Evaluated at `t = δ/2` and summed over `ξ`, the bound has logarithm
//! `Λ_k = b^k (log A + log‖ŵ‖₁ − δ/2) + log α_k`. Substituting the closed form
//! of `α_k` splits it exactly as
//!
//! ```text
//! Λ_k = b^k log(A / A_min) + (2k/(b−1) + 2b/(b−1)²) log b − log c_δ/(b−1),
//! A_min = b^{2b/(b−1)²} c_δ^{−1/(b−1)} e^{δ/2} / ‖ŵ‖₁,
//! ```
//!
//! which is how rows are evaluated: the doubly exponential part never has to
//! cancel against itself, and at `A = A_min` the increments are exactly
//! `(2/(b−1)) log b`.
//!
//! The second half of the module covers the oscillatory data `u_{0,N}`:
//! the constant `c(N, δ)` with `û_N(δ/2) >= c(N, δ) ŵ^{*b}`, and the search
//! for the smallest `N` with `c(N, δ)` above the threshold for `ŵ^{*b}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::data::{EpsilonRule, Schedule};
use crate::error::{Error, Result};
use crate::reduce::CompensatedSum;
use crate::spectral::{convolution_power, SpectralField};

/// `|Λ_k|` beyond which a row counts as escaped to `±∞`.
pub const ESCAPE_LOG: f64 = 500.0;

/// Largest `k` accepted by [`lower_bound_field`].
pub const MAX_FIELD_LEVEL: u32 = 3;

pub fn c_delta(delta: f64, b: u32) -> f64 {
    -(-0.5 * delta * (b as f64 * b as f64 - 1.0)).exp_m1()
}

fn check_scalars(delta: f64, b: u32) -> Result<()> {
    crate::spectral::check_exponent(b)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::pre(format!("δ must be positive and finite, got {delta}")));
    }
    Ok(())
}

/// `log A_min`.
pub fn log_lemma2_threshold(delta: f64, b: u32, w_l1: f64) -> Result<f64> {
    check_scalars(delta, b)?;
    if !(w_l1 > 0.0 && w_l1.is_finite()) {
        return Err(Error::pre(format!("‖ŵ‖₁ must be positive, got {w_l1}")));
    }
    let bf = b as f64;
    Ok(2.0 * bf / (bf - 1.0).powi(2) * bf.ln() - c_delta(delta, b).ln() / (bf - 1.0)
        + 0.5 * delta
        - w_l1.ln())
}

/// Smallest amplitude `A_min` with `A >= A_min ⇒ T* <= δ/2`.
pub fn lemma2_threshold(delta: f64, b: u32, w_l1: f64) -> Result<f64> {
    Ok(log_lemma2_threshold(delta, b, w_l1)?.exp())
}

/// Closed form of `log α_k`.
pub fn log_alpha_closed(k: u32, b: u32, delta: f64) -> f64 {
    let bf = b as f64;
    let bk = (k as f64 * bf.ln()).exp();
    let g = 2.0 * bf / (bf - 1.0).powi(2);
    bf.ln() * (-g * bk + 2.0 * k as f64 / (bf - 1.0) + g)
        + (bk - 1.0) / (bf - 1.0) * c_delta(delta, b).ln()
}

/// Closed form of `log α_k / b^k`; finite for every `k`.
pub fn log_alpha_scaled_closed(k: u32, b: u32, delta: f64) -> f64 {
    let bf = b as f64;
    let inv = (-(k as f64) * bf.ln()).exp();
    let g = 2.0 * bf / (bf - 1.0).powi(2);
    bf.ln() * (-g + (2.0 * k as f64 / (bf - 1.0) + g) * inv)
        + (1.0 - inv) / (bf - 1.0) * c_delta(delta, b).ln()
}

/// `t_k = (δ/2)(b²−1) Σ_{j=1}^{k} b^{−2j} = (δ/2)(1 − b^{−2k})`.
pub fn t_closed(k: u32, b: u32, delta: f64) -> f64 {
    -0.5 * delta * (-2.0 * k as f64 * (b as f64).ln()).exp_m1()
}

/// `δ/2 − t_k = (δ/2) b^{−2k}`.
pub fn time_gap(k: u32, b: u32, delta: f64) -> f64 {
    0.5 * delta * (-2.0 * k as f64 * (b as f64).ln()).exp()
}

/// Remainder `Λ_k − b^k log(A/A_min)`, linear in `k`.
pub fn lambda_remainder(k: u32, b: u32, delta: f64) -> f64 {
    let bf = b as f64;
    bf.ln() * (2.0 * k as f64 / (bf - 1.0) + 2.0 * bf / (bf - 1.0).powi(2))
        - c_delta(delta, b).ln() / (bf - 1.0)
}

/// Per-step growth of `Λ_k` at `A = A_min`.
pub fn marginal_increment(b: u32) -> f64 {
    2.0 / (b as f64 - 1.0) * (b as f64).ln()
}

/// Data amplitude, absolute or as a multiple of `A_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Amplitude {
    Absolute(f64),
    RelativeToThreshold(f64),
}

impl Amplitude {
    fn validate(&self) -> Result<()> {
        let v = match self {
            Amplitude::Absolute(v) | Amplitude::RelativeToThreshold(v) => *v,
        };
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::pre(format!("amplitude must be positive, got {v}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateParams {
    pub b: u32,
    pub delta: f64,
    pub amplitude: Amplitude,
    /// `Σ|c_ξ(ŵ)|`.
    pub w_l1: f64,
    pub n: usize,
}

impl CertificateParams {
    pub fn validate(&self) -> Result<()> {
        check_scalars(self.delta, self.b)?;
        crate::check_supercritical(self.n, self.b)?;
        self.amplitude.validate()?;
        log_lemma2_threshold(self.delta, self.b, self.w_l1).map(|_| ())
    }

    pub fn log_threshold(&self) -> Result<f64> {
        log_lemma2_threshold(self.delta, self.b, self.w_l1)
    }

    pub fn threshold(&self) -> Result<f64> {
        Ok(self.log_threshold()?.exp())
    }

    /// `log(A / A_min)`, the coefficient of `b^k` in `Λ_k`.
    pub fn log_ratio(&self) -> Result<f64> {
        Ok(match self.amplitude {
            Amplitude::RelativeToThreshold(f) => f.ln(),
            Amplitude::Absolute(a) => a.ln() - self.log_threshold()?,
        })
    }

    pub fn log_amplitude(&self) -> Result<f64> {
        Ok(match self.amplitude {
            Amplitude::RelativeToThreshold(f) => f.ln() + self.log_threshold()?,
            Amplitude::Absolute(a) => a.ln(),
        })
    }

    pub fn amplitude_value(&self) -> Result<f64> {
        Ok(self.log_amplitude()?.exp())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateRow {
    pub k: u32,
    pub t_k: f64,
    /// `δ/2 − t_k`, carried separately so it keeps full relative precision.
    pub gap_k: f64,
    pub log_alpha_k: f64,
    /// `log α_k / b^k`.
    pub log_alpha_scaled: f64,
    #[serde(rename = "Lambda_k")]
    pub lambda_k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Diverges,
    ConvergesToZero,
    Marginal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateSequence {
    pub params: CertificateParams,
    pub rows: Vec<CertificateRow>,
    pub verdict: Verdict,
    /// Set when the amplitude sits exactly on `A_min`.
    pub marginal: bool,
    /// First `k` with `Λ_k > ESCAPE_LOG`.
    pub k_star: Option<u32>,
    pub a_min: f64,
    pub log_ratio: f64,
}

impl CertificateSequence {
    /// CSV with header `k,t_k,log_alpha_k,Lambda_k`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,t_k,log_alpha_k,Lambda_k\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:e},{:e},{:e}\n",
                r.k, r.t_k, r.log_alpha_k, r.lambda_k
            ));
        }
        out
    }

    pub fn guarantee_text(&self) -> String {
        let d = self.params.delta;
        match (self.verdict, self.marginal) {
            (Verdict::Diverges, false) => format!(
                "certified: u0 >= A w with A >= A_min forces T* <= {} (delta/2)",
                d / 2.0
            ),
            (Verdict::Diverges, true) => format!(
                "certified at the marginal amplitude A = A_min: Lambda_k grows linearly, T* <= {}",
                d / 2.0
            ),
            (Verdict::ConvergesToZero, _) => {
                "not certified: the lower bound decays to zero, blowup before delta/2 is not implied"
                    .to_string()
            }
            (Verdict::Marginal, _) => {
                "undetermined within k_max: no row escaped and the amplitude lies below A_min"
                    .to_string()
            }
        }
    }

    pub fn verdict_record(&self) -> VerdictRecord {
        VerdictRecord {
            verdict: self.verdict,
            marginal: self.marginal,
            k_star: self.k_star,
            a_min: self.a_min,
            n_min: None,
            guarantee_text: self.guarantee_text(),
        }
    }
}

/// JSON verdict object shared by the certificate and threshold outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub verdict: Verdict,
    pub marginal: bool,
    pub k_star: Option<u32>,
    #[serde(rename = "A_min")]
    pub a_min: f64,
    #[serde(rename = "N_min")]
    pub n_min: Option<u64>,
    pub guarantee_text: String,
}

pub fn build_sequence(params: &CertificateParams, k_max: u32) -> Result<CertificateSequence> {
    params.validate()?;
    if k_max < 1 {
        return Err(Error::pre("k_max must be >= 1"));
    }
    let b = params.b;
    let bf = b as f64;
    let ln_b = bf.ln();
    let delta = params.delta;
    let ln_cd = c_delta(delta, b).ln();
    let log_ratio = params.log_ratio()?;

    let mut rows = Vec::with_capacity(k_max as usize + 1);
    let (mut log_alpha, mut scaled, mut t, mut gap) = (0.0f64, 0.0f64, 0.0f64, 0.5 * delta);
    for k in 0..=k_max {
        if k > 0 {
            let forcing = ln_cd - 2.0 * k as f64 * ln_b;
            log_alpha = bf * log_alpha + forcing;
            scaled += forcing * (-(k as f64) * ln_b).exp();
            // the running sum t += (δ/2)(b²−1)b^{−2k} overshoots δ/2 in rounding
            t = t_closed(k, b, delta);
            gap /= bf * bf;
        }
        let bk = (k as f64 * ln_b).exp();
        let growth = if log_ratio == 0.0 { 0.0 } else { bk * log_ratio };
        rows.push(CertificateRow {
            k,
            t_k: t,
            gap_k: gap,
            log_alpha_k: log_alpha,
            log_alpha_scaled: scaled,
            lambda_k: growth + lambda_remainder(k, b, delta),
        });
    }

    let k_star = rows.iter().find(|r| r.lambda_k > ESCAPE_LOG).map(|r| r.k);
    let marginal = log_ratio == 0.0;
    let verdict = if k_star.is_some() || log_ratio >= 0.0 {
        Verdict::Diverges
    } else {
        let n = rows.len();
        let escaped = rows.iter().any(|r| r.lambda_k < -ESCAPE_LOG);
        let decreasing = n >= 2 && rows[n - 1].lambda_k < rows[n - 2].lambda_k;
        if escaped && decreasing {
            Verdict::ConvergesToZero
        } else {
            Verdict::Marginal
        }
    };
    Ok(CertificateSequence {
        params: *params,
        rows,
        verdict,
        marginal,
        k_star,
        a_min: params.threshold()?,
        log_ratio,
    })
}

/// Sequence plus the amplitude at which the `b^k` coefficient of `Λ_k` changes sign.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceReport {
    pub sequence: CertificateSequence,
    pub critical_amplitude: f64,
    /// Coefficient of `b^k` in `Λ_k`.
    pub growth_coefficient: f64,
    /// Increment of `Λ_k` per step once the `b^k` term vanishes.
    pub marginal_increment: f64,
}

pub fn divergence_report(params: &CertificateParams, k_max: u32) -> Result<DivergenceReport> {
    let sequence = build_sequence(params, k_max)?;
    Ok(DivergenceReport {
        critical_amplitude: sequence.a_min,
        growth_coefficient: sequence.log_ratio,
        marginal_increment: marginal_increment(params.b),
        sequence,
    })
}

/// `ŵ_k = ŵ^{*b^k}`, built by repeated `b`-fold convolution.
pub fn lower_bound_kernel(k: u32, w_hat: &SpectralField, b: u32) -> Result<SpectralField> {
    if k > MAX_FIELD_LEVEL {
        return Err(Error::pre(format!(
            "lower-bound fields are limited to k <= {MAX_FIELD_LEVEL}, got {k}"
        )));
    }
    let mut kernel = w_hat.clone();
    for _ in 0..k {
        kernel = convolution_power(&kernel, b)?;
    }
    Ok(kernel)
}

/// `log(A^{b^k} α_k) − b^k t`, the scalar factor of the level-`k` bound.
pub fn log_bound_factor(k: u32, t: f64, params: &CertificateParams) -> Result<f64> {
    let bk = (params.b as f64).powi(k as i32);
    Ok(bk * params.log_amplitude()? + log_alpha_closed(k, params.b, params.delta) - bk * t)
}

/// `A^{b^k} α_k e^{−b^k t} 1_{t >= t_k} ŵ_k`.
pub fn lower_bound_field(
    k: u32,
    t: f64,
    w_hat: &SpectralField,
    params: &CertificateParams,
) -> Result<SpectralField> {
    let kernel = lower_bound_kernel(k, w_hat, params.b)?;
    lower_bound_from_kernel(k, t, &kernel, params)
}

/// [`lower_bound_field`] with a precomputed `ŵ_k`.
pub fn lower_bound_from_kernel(
    k: u32,
    t: f64,
    kernel: &SpectralField,
    params: &CertificateParams,
) -> Result<SpectralField> {
    params.validate()?;
    if !(t >= 0.0) {
        return Err(Error::pre(format!("time must be >= 0, got {t}")));
    }
    if t < t_closed(k, params.b, params.delta) {
        return Ok(SpectralField::zeros(kernel.grid().clone()));
    }
    let log_factor = log_bound_factor(k, t, params)?;
    if log_factor > 700.0 {
        return Err(Error::Numerical {
            t,
            reason: format!("lower-bound factor e^{log_factor:.1} overflows"),
        });
    }
    Ok(kernel.scaled(log_factor.exp()))
}

/// `(1 − e^{−τx})/x`, continuous at `x = 0`.
fn relaxation(x: f64, tau: f64) -> f64 {
    if x == 0.0 {
        tau
    } else {
        -(-tau * x).exp_m1() / x
    }
}

/// One Fourier–Duhamel step applied to the level-`(k−1)` bound:
/// `∫_{t_{k−1}}^{t} e^{(s−t)|ξ|²} [bound_{k−1}(s)]^{*b} ds`, evaluated exactly.
pub fn duhamel_step_bound(
    k: u32,
    t: f64,
    w_hat: &SpectralField,
    params: &CertificateParams,
) -> Result<SpectralField> {
    if k == 0 {
        return Err(Error::pre("the Duhamel step needs k >= 1"));
    }
    params.validate()?;
    let b = params.b;
    let t_prev = t_closed(k - 1, b, params.delta);
    let kernel = lower_bound_kernel(k, w_hat, b)?;
    if t <= t_prev {
        return Ok(SpectralField::zeros(kernel.grid().clone()));
    }
    let bk = (b as f64).powi(k as i32);
    let log_prefactor = bk * params.log_amplitude()?
        + b as f64 * log_alpha_closed(k - 1, b, params.delta)
        - bk * t;
    let prefactor = log_prefactor.exp();
    let grid = kernel.grid().clone();
    let coeffs: Vec<Complex64> = kernel
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| c * (prefactor * relaxation(grid.wavenumber_sq(i) - bk, t - t_prev)))
        .collect();
    let out = SpectralField::from_coeffs(grid, coeffs)?;
    Ok(out.with_tags_unchecked(kernel.is_real(), kernel.is_nonnegative()))
}

// ---------------------------------------------------------------------------
// The constant c(N, δ) for the oscillatory data.

/// Constants of the retained-term bound `û_N(t) >= ε_N^b S_N · prefactor ·
/// (1 − e^{−t(rate−1)}) e^{−t} · ŵ^{*b}`.
///
/// Even `b`: keeping `(A_k * B_k)^{*b/2}` gives the factor
/// `e^{−b t 2^{2k+2}} 2^{2k−b} η_k^b`; the Duhamel integral against
/// `e^{(s−t)}` contributes `(1 − e^{−t(b 2^{2k+2} − 1)})/(b 2^{2k+2} − 1)`,
/// bounded below by its `k = 0` rate, so `prefactor = 2^{−b}/(4b)` and
/// `rate = 4b`.
///
/// Odd `b = 2m + 3`: keeping `(A_k*B_k)^{*m} * A_{k+1} * B_k * B_k` (centers
/// cancel, so the product is a multiple of `ŵ^{*b}`) gives
/// `e^{−(m+3) t 2^{2k+3}} 2^{2k + 2/b − b} η_k^{b−1} η_{k+1}`. Dropping the
/// factor `2^{2/b} >= 1` and bounding the Duhamel integral the same way gives
/// `prefactor = 2^{−b}/(8(m+3))` and `rate = 8(m+3)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchConstants {
    pub prefactor: f64,
    pub rate: f64,
}

impl BranchConstants {
    pub fn derived(b: u32) -> Self {
        let bf = b as f64;
        if b % 2 == 0 {
            Self {
                prefactor: (-bf).exp2() / (4.0 * bf),
                rate: 4.0 * bf,
            }
        } else {
            let m = (b - 3) / 2;
            let r = 8.0 * (m as f64 + 3.0);
            Self {
                prefactor: (-bf).exp2() / r,
                rate: r,
            }
        }
    }

    /// `log(prefactor · (1 − e^{−t(rate−1)}) e^{−t})` at `t = δ/2`.
    pub fn log_time_factor(&self, delta: f64) -> f64 {
        let t = 0.5 * delta;
        self.prefactor.ln() + (-(-t * (self.rate - 1.0)).exp_m1()).ln() - t
    }
}

const DIRECT_TERMS: u64 = 1 << 20;

/// Partial sums `S_N` of the schedule weights entering `c(N, δ)`:
/// `Σ_{k=0}^{N} η_k^b` for even `b`, `Σ_{k=0}^{N−1} η_k^{b−1} η_{k+1}` for odd `b`.
///
/// Both weights equal `y^{−1}(1 + 1/y)^{−e}` with `y = 1 + k` and `e = 0`
/// (even) or `e = 1/b` (odd); beyond `2^20` terms the sum continues by
/// Euler–Maclaurin with the exact antiderivative series.
#[derive(Debug, Clone)]
pub struct WeightSeries {
    schedule: Schedule,
    base: Option<f64>,
}

impl WeightSeries {
    pub fn new(schedule: &Schedule) -> Self {
        Self {
            schedule: *schedule,
            base: None,
        }
    }

    pub fn is_odd(&self) -> bool {
        self.schedule.b % 2 == 1
    }

    /// Smallest admissible `N`.
    pub fn first_index(&self) -> u64 {
        if self.is_odd() {
            1
        } else {
            0
        }
    }

    /// Number of terms in `S_N`.
    pub fn term_count(&self, n: u64) -> u64 {
        if self.is_odd() {
            n
        } else {
            n + 1
        }
    }

    pub fn term(&self, k: u64) -> f64 {
        let s = &self.schedule;
        let b = s.b as f64;
        if self.is_odd() {
            ((b - 1.0) * s.log_eta(k) + s.log_eta(k + 1)).exp()
        } else {
            (b * s.log_eta(k)).exp()
        }
    }

    fn exponent(&self) -> f64 {
        if self.is_odd() {
            1.0 / self.schedule.b as f64
        } else {
            0.0
        }
    }

    /// Weight as a function of `y = 1 + k`, and its derivative.
    fn smooth(&self, y: f64) -> (f64, f64) {
        let e = self.exponent();
        let f = (1.0 + 1.0 / y).powf(-e) / y;
        let df = f / y * (-1.0 + e / (y + 1.0));
        (f, df)
    }

    /// `∫ y^{−1}(1 + 1/y)^{−e} dy = log y − Σ_{j>=1} C(−e, j) y^{−j}/j`.
    fn antiderivative(&self, y: f64) -> f64 {
        let e = self.exponent();
        let mut binom = 1.0;
        let mut series = 0.0;
        for j in 1..=6 {
            binom *= (-e - (j as f64 - 1.0)) / j as f64;
            series += binom * y.powi(-j) / j as f64;
        }
        y.ln() - series
    }

    fn direct(&self, terms: u64) -> f64 {
        let mut acc = CompensatedSum::default();
        for k in 0..terms {
            acc.add(self.term(k));
        }
        acc.value()
    }

    /// `S_N`.
    pub fn partial_sum(&mut self, n: u64) -> f64 {
        let terms = self.term_count(n);
        if terms <= DIRECT_TERMS {
            return self.direct(terms);
        }
        let base = match self.base {
            Some(v) => v,
            None => {
                let v = self.direct(DIRECT_TERMS);
                self.base = Some(v);
                v
            }
        };
        // remaining k = DIRECT_TERMS .. terms-1, i.e. y from y0 to y1
        let y0 = DIRECT_TERMS as f64 + 1.0;
        let y1 = terms as f64;
        let (f0, d0) = self.smooth(y0);
        let (f1, d1) = self.smooth(y1);
        base + self.antiderivative(y1) - self.antiderivative(y0) + 0.5 * (f0 + f1)
            + (d1 - d0) / 12.0
    }
}

/// `log c(N, δ)`.
pub fn log_theorem_constant(n: u64, delta: f64, schedule: &Schedule) -> Result<f64> {
    schedule.validate()?;
    check_scalars(delta, schedule.b)?;
    let mut series = WeightSeries::new(schedule);
    if n < series.first_index() {
        return Err(Error::pre(format!(
            "c(N, δ) for odd b needs N >= 1, got {n}"
        )));
    }
    let sum = series.partial_sum(n);
    Ok(log_constant_from_sum(n, sum, delta, schedule))
}

fn log_constant_from_sum(n: u64, sum: f64, delta: f64, schedule: &Schedule) -> f64 {
    schedule.b as f64 * schedule.log_epsilon(n)
        + sum.ln()
        + BranchConstants::derived(schedule.b).log_time_factor(delta)
}

pub fn theorem_constant(n: u64, delta: f64, schedule: &Schedule) -> Result<f64> {
    Ok(log_theorem_constant(n, delta, schedule)?.exp())
}

/// `log c(N, δ)` for every admissible `N <= n_max`, as `(N, value)` pairs.
pub fn theorem_constant_prefix(n_max: u64, delta: f64, schedule: &Schedule) -> Result<Vec<(u64, f64)>> {
    schedule.validate()?;
    check_scalars(delta, schedule.b)?;
    let series = WeightSeries::new(schedule);
    let mut acc = CompensatedSum::default();
    let mut out = Vec::new();
    let mut added = 0u64;
    for n in series.first_index()..=n_max {
        while added < series.term_count(n) {
            acc.add(series.term(added));
            added += 1;
        }
        out.push((n, log_constant_from_sum(n, acc.value(), delta, schedule)));
    }
    Ok(out)
}

/// `δ` maximizing `c(N, δ)` for fixed `N` (golden-section search on `log δ`),
/// with the maximal value.
pub fn theorem_constant_delta_maximizer(n: u64, schedule: &Schedule) -> Result<(f64, f64)> {
    let f = |log_d: f64| log_theorem_constant(n, log_d.exp(), schedule);
    let (mut lo, mut hi) = (-12.0f64, 6.0f64);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    for _ in 0..200 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1)?;
        }
    }
    let best = 0.5 * (lo + hi);
    Ok((best.exp(), f(best)?.exp()))
}

/// `log` of the amplitude `c(N, δ)` must reach:
/// `b^{2b/(b−1)²} e^{δ/2} / (c_δ^{1/(b−1)} ‖ŵ‖₁^b)`.
pub fn log_threshold_rhs(delta: f64, b: u32, w_l1: f64) -> Result<f64> {
    Ok(log_lemma2_threshold(delta, b, w_l1)? + w_l1.ln() - b as f64 * w_l1.ln())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ThresholdOutcome {
    Found {
        n: u64,
        log_c: f64,
        log_rhs: f64,
    },
    NotFound {
        cap: u64,
        log_c_at_cap: f64,
        log_rhs: f64,
        /// `log10` of the extrapolated smallest `N` (may be `inf`).
        log10_n_estimate: f64,
    },
}

impl ThresholdOutcome {
    pub fn guarantee_text(&self, delta: f64) -> String {
        match self {
            ThresholdOutcome::Found { n, .. } => {
                format!("certified T*_N < {delta} for the data u_(0,N) with N = {n}")
            }
            ThresholdOutcome::NotFound { cap, .. } => {
                format!("no N <= {cap} certifies blowup before {delta}; see the extrapolated estimate")
            }
        }
    }
}

const SCAN_LIMIT: u64 = 1 << 20;

/// Smallest `N` with `c(N, δ)` at or above the threshold, or `NotFound` at `cap`.
///
/// `N <= 2^20` is scanned exhaustively; beyond that, `c` is evaluated at
/// doubling checkpoints and bisected inside the first bracket that crosses.
pub fn certified_blowup_n(delta: f64, schedule: &Schedule, w_l1: f64, cap: u64) -> Result<ThresholdOutcome> {
    schedule.validate()?;
    let b = schedule.b;
    let log_rhs = log_threshold_rhs(delta, b, w_l1)?;
    let mut series = WeightSeries::new(schedule);
    let first = series.first_index();
    if cap < first {
        return Err(Error::pre(format!("search cap {cap} is below the first index {first}")));
    }

    let scan_top = cap.min(SCAN_LIMIT);
    let mut acc = CompensatedSum::default();
    let mut added = 0u64;
    let mut last = f64::NEG_INFINITY;
    for n in first..=scan_top {
        while added < series.term_count(n) {
            acc.add(series.term(added));
            added += 1;
        }
        last = log_constant_from_sum(n, acc.value(), delta, schedule);
        if last >= log_rhs {
            return Ok(ThresholdOutcome::Found {
                n,
                log_c: last,
                log_rhs,
            });
        }
    }

    let eval = |n: u64, series: &mut WeightSeries| {
        let s = series.partial_sum(n);
        log_constant_from_sum(n, s, delta, schedule)
    };
    let mut lo = scan_top;
    while lo < cap {
        let hi = lo.saturating_mul(2).min(cap);
        let v = eval(hi, &mut series);
        if v >= log_rhs {
            let (mut a, mut z) = (lo, hi);
            while z - a > 1 {
                let mid = a + (z - a) / 2;
                if eval(mid, &mut series) >= log_rhs {
                    z = mid;
                } else {
                    a = mid;
                }
            }
            return Ok(ThresholdOutcome::Found {
                n: z,
                log_c: eval(z, &mut series),
                log_rhs,
            });
        }
        last = v;
        lo = hi;
    }

    let sum_cap = series.partial_sum(cap);
    Ok(ThresholdOutcome::NotFound {
        cap,
        log_c_at_cap: last,
        log_rhs,
        log10_n_estimate: extrapolate_log_n(cap, sum_cap, delta, schedule, log_rhs)
            / std::f64::consts::LN_10,
    })
}

/// Solves `log c(e^L) = target` for `L = log N > log cap` with the asymptotic
/// model `S_N ≈ S_cap + log((N+1)/(cap+1))`.
fn extrapolate_log_n(cap: u64, sum_cap: f64, delta: f64, schedule: &Schedule, target: f64) -> f64 {
    let b = schedule.b as f64;
    let log_k = BranchConstants::derived(schedule.b).log_time_factor(delta);
    let l_cap = (cap as f64 + 1.0).ln();
    let model = |l: f64| {
        // log(3 + N) ≈ L once N is astronomically large
        let log_log = if l > 40.0 { l.ln() } else { (3.0 + l.exp()).ln().ln() };
        let log_eps = match schedule.epsilon {
            EpsilonRule::Paper => -log_log.ln(),
            EpsilonRule::Constant(v) => v.ln(),
        };
        b * log_eps + (sum_cap + (l - l_cap)).ln() + log_k
    };
    let mut lo = l_cap;
    let mut hi = l_cap.max(1.0);
    loop {
        hi *= 2.0;
        if !hi.is_finite() || hi > 1e300 {
            return f64::INFINITY;
        }
        if model(hi) >= target {
            break;
        }
        lo = hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if model(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Gridless `ε_N (Σ_{j<=N} η_j^q)^{1/q}` for `N = 0..=n_max`; multiply by
/// `‖w‖_{nb(b−1)/2}` to get the Besov-norm bound of `u_{0,N}`.
pub fn besov_bound_series(n_max: u64, q: f64, schedule: &Schedule) -> Result<Vec<f64>> {
    schedule.validate()?;
    if q.is_nan() || q < 1.0 {
        return Err(Error::pre(format!("q must be >= 1, got {q}")));
    }
    let mut acc = CompensatedSum::default();
    let mut out = Vec::with_capacity(n_max as usize + 1);
    for n in 0..=n_max {
        let series = if q.is_infinite() {
            1.0
        } else {
            acc.add((q * schedule.log_eta(n)).exp());
            acc.value().powf(1.0 / q)
        };
        out.push(schedule.epsilon(n) * series);
    }
    Ok(out)
}
