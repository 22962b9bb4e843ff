//! Time integration of `∂_t u = Δu + u^b` on the torus.
//!
//! The state is the coefficient vector. The heat part is integrated exactly
//! through the integrating factor `e^{−t|ξ|²}` (classical RK4 in Lawson form);
//! `u^b` is a pointwise power on a zero-padded grid large enough that the
//! degree-`b` product does not wrap onto retained modes. Every weight of the
//! scheme is positive, so a nonnegative spectrum stays nonnegative up to
//! rounding.
//!
//! Blowup is observed, not proven: it is declared when the sup norm passes a
//! cap or when the step-size rule asks for a step below `dt_min`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::certificate::{
    lower_bound_from_kernel, lower_bound_kernel, t_closed, Amplitude, CertificateParams,
};
use crate::error::{Error, Result};
use crate::fft::NdFft;
use crate::grid::{smooth_even_at_least, TorusGrid};
use crate::spectral::{check_exponent, l1_spectrum, lp_norm_of_samples, SpectralField};

pub const DEFAULT_BLOWUP_CAP: f64 = 1e8;
pub const DEFAULT_DT_MIN: f64 = 1e-12;
pub const DEFAULT_DT_MAX: f64 = 1e-2;
/// `C` in `dt = min(dt_max, C/(1 + sup^{b−1}))`.
pub const DEFAULT_DT_SAFETY: f64 = 0.1;
/// Largest level accepted by [`verify_lower_bound`].
pub const MAX_VERIFY_LEVEL: u32 = 2;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub b: u32,
    pub dt_max: f64,
    pub dt_min: f64,
    pub dt_safety: f64,
    pub blowup_cap: f64,
    /// Padded size per axis is at least `dealias_pad · M`.
    pub dealias_pad: f64,
    pub t_end: f64,
    pub record_every: usize,
    /// Exponent `p` of the weighted norm `t^{σ/2}‖u‖_p`; `None` picks the
    /// middle of the admissible window.
    pub z_exponent: Option<f64>,
    /// `false` drops `u^b` (pure heat flow).
    pub nonlinear: bool,
}

impl SolverConfig {
    pub fn new(b: u32, t_end: f64) -> Self {
        Self {
            b,
            dt_max: DEFAULT_DT_MAX,
            dt_min: DEFAULT_DT_MIN,
            dt_safety: DEFAULT_DT_SAFETY,
            blowup_cap: DEFAULT_BLOWUP_CAP,
            dealias_pad: minimal_pad(b),
            t_end,
            record_every: 1,
            z_exponent: None,
            nonlinear: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_exponent(self.b)?;
        if !(self.dt_min > 0.0 && self.dt_min < self.dt_max && self.dt_max.is_finite()) {
            return Err(Error::pre(format!(
                "need 0 < dt_min < dt_max, got dt_min = {}, dt_max = {}",
                self.dt_min, self.dt_max
            )));
        }
        if !(self.dt_safety > 0.0 && self.dt_safety.is_finite()) {
            return Err(Error::pre(format!("dt_safety must be positive, got {}", self.dt_safety)));
        }
        if !(self.blowup_cap > 0.0) {
            return Err(Error::pre(format!("blowup_cap must be positive, got {}", self.blowup_cap)));
        }
        if !(self.dealias_pad >= minimal_pad(self.b)) {
            return Err(Error::pre(format!(
                "dealias_pad must be >= (b+1)/2 = {} for alias-free degree-{} products, got {}",
                minimal_pad(self.b),
                self.b,
                self.dealias_pad
            )));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::pre(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.record_every == 0 {
            return Err(Error::pre("record_every must be >= 1"));
        }
        if let Some(p) = self.z_exponent {
            if !(p >= 1.0 && p.is_finite()) {
                return Err(Error::pre(format!("z_exponent must be a finite p >= 1, got {p}")));
            }
        }
        Ok(())
    }
}

pub fn minimal_pad(b: u32) -> f64 {
    (b as f64 + 1.0) / 2.0
}

/// Open window `n(b−1)/2 < p < nb(b−1)/2` of Theorem-1 exponents.
pub fn z_window(n: usize, b: u32) -> (f64, f64) {
    (crate::critical_exponent(n, b), crate::besov_integrability(n, b))
}

/// `σ = 2/(b−1) − n/p`.
pub fn z_sigma(n: usize, b: u32, p: f64) -> f64 {
    2.0 / (b as f64 - 1.0) - n as f64 / p
}

// ---------------------------------------------------------------------------
// Dealiased power

/// `u ↦ P(u^b)` through a padded grid, where `P` keeps `|m_i| < M_i/2`.
struct PaddedPower {
    padded: TorusGrid,
    fft: NdFft,
    /// `(base flat, padded flat)` for every retained mode.
    map: Vec<(usize, usize)>,
    b: u32,
    /// Drop the imaginary part of physical values (real data).
    real: bool,
    work: Vec<Complex64>,
}

/// Physical-space quantities gathered while evaluating the power.
struct Sampled {
    sup: f64,
    abs: Vec<f64>,
}

impl PaddedPower {
    fn new(grid: &TorusGrid, b: u32, pad: f64, real: bool) -> Result<Self> {
        let modes: Vec<usize> = grid
            .modes()
            .iter()
            .map(|&m| smooth_even_at_least((pad * m as f64).ceil() as usize))
            .collect();
        let padded = grid.with_modes(modes)?;
        let mut map = Vec::new();
        for flat in 0..grid.len() {
            let mv = grid.mode_vector(flat);
            let mut idx = [0usize; crate::grid::MAX_DIM];
            let mut keep = true;
            for axis in 0..grid.dim() {
                if mv[axis].unsigned_abs() as usize >= grid.nyquist_index(axis) {
                    keep = false;
                    break;
                }
                idx[axis] = padded
                    .storage_index(axis, mv[axis])
                    .expect("padded grid contains the base modes");
            }
            if keep {
                map.push((flat, padded.flatten(&idx[..grid.dim()])));
            }
        }
        Ok(Self {
            fft: NdFft::new(padded.modes()),
            work: vec![ZERO; padded.len()],
            padded,
            map,
            b,
            real,
        })
    }

    /// Fills `work` with the physical values of `u` on the padded grid.
    fn to_physical(&mut self, u: &[Complex64]) {
        self.work.iter_mut().for_each(|v| *v = ZERO);
        for &(base, pad) in &self.map {
            self.work[pad] = u[base];
        }
        self.fft.inverse(&mut self.work);
        if self.real {
            self.work.iter_mut().for_each(|v| v.im = 0.0);
        }
    }

    fn sample(&mut self, u: &[Complex64]) -> Sampled {
        self.to_physical(u);
        let abs: Vec<f64> = self.work.iter().map(|v| v.norm()).collect();
        let sup = abs.iter().fold(0.0f64, |m, &v| m.max(v));
        Sampled { sup, abs }
    }

    /// `out = P(u^b)`; assumes `work` already holds the physical values of `u`.
    fn power_from_physical(&mut self, out: &mut [Complex64]) {
        let b = self.b as i32;
        for v in self.work.iter_mut() {
            *v = v.powi(b);
        }
        self.fft.forward(&mut self.work);
        out.iter_mut().for_each(|v| *v = ZERO);
        for &(base, pad) in &self.map {
            out[base] = self.work[pad];
        }
    }

    fn power(&mut self, u: &[Complex64], out: &mut [Complex64]) {
        self.to_physical(u);
        self.power_from_physical(out);
    }
}

// ---------------------------------------------------------------------------
// Trajectory

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    /// Step that produced this state (0 at `t = 0`).
    pub dt: f64,
    pub l1_spectrum: f64,
    pub sup_norm: f64,
    /// `‖u‖_{n(b−1)/2}`.
    pub lp_crit: f64,
    /// `min_ξ Re c_ξ`.
    pub positivity_margin: f64,
    /// `t^{σ/2}‖u‖_p`.
    pub z_norm_p: f64,
    /// Relative Hermitian defect; 0 unless the data was tagged real.
    pub hermitian_defect: f64,
    pub max_abs_coeff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowupReason {
    Cap,
    DtFloor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Blowup {
    /// Time at which the criterion fired.
    pub t_star: f64,
    pub reason: BlowupReason,
    pub sup_norm: f64,
    /// Unclamped step `C/(1 + sup^{b−1})` at detection.
    pub dt_requested: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub field: SpectralField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub config: SolverConfig,
    pub n: usize,
    /// `p` actually used for `z_norm_p`.
    pub z_exponent: f64,
    pub records: Vec<TrajectoryRecord>,
    pub blowup: Option<Blowup>,
    pub snapshots: Vec<Snapshot>,
    /// State at the last record (the blowup time, or `t_end`).
    pub final_state: SpectralField,
    pub steps: usize,
}

/// JSON summary written next to the trajectory CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupSummary<C> {
    #[serde(rename = "T_star_num")]
    pub t_star_num: Option<f64>,
    pub reason: Option<BlowupReason>,
    pub last_t: f64,
    pub config: C,
}

pub const TRAJECTORY_HEADER: &str = "t,dt,l1_spectrum,sup_norm,lp_crit,positivity_margin,z_norm_p";

impl Trajectory {
    pub fn final_time(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.t)
    }

    pub fn blowup_time(&self) -> Option<f64> {
        self.blowup.map(|b| b.t_star)
    }

    pub fn snapshot_at(&self, t: f64) -> Option<&SpectralField> {
        self.snapshots.iter().find(|s| s.t == t).map(|s| &s.field)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRAJECTORY_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e}\n",
                r.t, r.dt, r.l1_spectrum, r.sup_norm, r.lp_crit, r.positivity_margin, r.z_norm_p
            ));
        }
        out
    }

    pub fn summary<C: Clone>(&self, config: &C) -> BlowupSummary<C> {
        BlowupSummary {
            t_star_num: self.blowup_time(),
            reason: self.blowup.map(|b| b.reason),
            last_t: self.final_time(),
            config: config.clone(),
        }
    }
}

fn check_band(u0: &SpectralField) -> Result<()> {
    let grid = u0.grid();
    for axis in 0..grid.dim() {
        if u0.band()[axis] >= grid.nyquist_index(axis) {
            return Err(Error::Aliasing {
                axis,
                band: u0.band()[axis],
                nyquist: grid.nyquist_index(axis),
            });
        }
    }
    Ok(())
}

/// Tags `coeffs` like `like` when the tags still hold, otherwise drops them.
fn retag(grid: &TorusGrid, coeffs: Vec<Complex64>, like: &SpectralField) -> Result<SpectralField> {
    let f = SpectralField::from_coeffs(grid.clone(), coeffs)?;
    let (real, nonneg) = (like.is_real(), like.is_nonnegative());
    if let Ok(g) = f.clone().tagged(real, nonneg) {
        return Ok(g);
    }
    if real {
        if let Ok(g) = f.clone().tagged(true, false) {
            return Ok(g);
        }
    }
    Ok(f)
}

/// Pairs `(ξ, −ξ)` of retained modes, each pair listed once.
fn conjugate_pairs(grid: &TorusGrid) -> Vec<(usize, usize)> {
    let n = grid.dim();
    let mut pairs = Vec::new();
    for flat in 0..grid.len() {
        let mv = grid.mode_vector(flat);
        let mut idx = [0usize; crate::grid::MAX_DIM];
        let mut ok = true;
        for axis in 0..n {
            match grid.storage_index(axis, -mv[axis]) {
                Some(i) if mv[axis].unsigned_abs() < grid.nyquist_index(axis) as u64 => idx[axis] = i,
                _ => ok = false,
            }
        }
        if ok {
            let partner = grid.flatten(&idx[..n]);
            if partner >= flat {
                pairs.push((flat, partner));
            }
        }
    }
    pairs
}

/// Replaces `c_ξ` by `(c_ξ + conj c_{−ξ})/2`; the result is exactly Hermitian.
fn symmetrize(u: &mut [Complex64], pairs: &[(usize, usize)]) {
    for &(a, b) in pairs {
        let v = 0.5 * (u[a] + u[b].conj());
        u[a] = v;
        u[b] = v.conj();
    }
}

fn first_non_finite(u: &[Complex64]) -> Option<usize> {
    u.iter().position(|c| !c.re.is_finite() || !c.im.is_finite())
}

/// Lawson RK4 weights for one step size.
struct Factors {
    full: Vec<f64>,
    half: Vec<f64>,
}

impl Factors {
    fn new(lambda: &[f64], h: f64) -> Self {
        Self {
            full: lambda.iter().map(|l| (-l * h).exp()).collect(),
            half: lambda.iter().map(|l| (-0.5 * l * h).exp()).collect(),
        }
    }
}

pub fn simulate(u0: &SpectralField, cfg: &SolverConfig) -> Result<Trajectory> {
    simulate_with_probes(u0, cfg, &[])
}

/// [`simulate`] that also lands exactly on every probe time and keeps the
/// state there as a snapshot.
pub fn simulate_with_probes(u0: &SpectralField, cfg: &SolverConfig, probes: &[f64]) -> Result<Trajectory> {
    cfg.validate()?;
    let grid = u0.grid().clone();
    let n = grid.dim();
    crate::check_supercritical(n, cfg.b)?;
    check_band(u0)?;
    let (lo, hi) = z_window(n, cfg.b);
    let z_p = cfg.z_exponent.unwrap_or(0.5 * (lo + hi));
    let half_sigma = 0.5 * z_sigma(n, cfg.b, z_p);
    let p_crit = crate::critical_exponent(n, cfg.b);

    let mut stops: Vec<f64> = probes
        .iter()
        .copied()
        .filter(|&p| p > 0.0 && p < cfg.t_end)
        .collect();
    if probes.iter().any(|p| !p.is_finite()) {
        return Err(Error::pre("probe times must be finite"));
    }
    stops.push(cfg.t_end);
    stops.sort_by(f64::total_cmp);
    stops.dedup();
    let is_probe = |t: f64| probes.contains(&t);

    let lambda: Vec<f64> = (0..grid.len()).map(|i| grid.wavenumber_sq(i)).collect();
    let mut power = PaddedPower::new(&grid, cfg.b, cfg.dealias_pad, u0.is_real())?;
    let len = grid.len();
    let mut u: Vec<Complex64> = u0.coeffs().to_vec();
    let mut k1 = vec![ZERO; len];
    let mut k2 = vec![ZERO; len];
    let mut k3 = vec![ZERO; len];
    let mut k4 = vec![ZERO; len];
    let mut stage = vec![ZERO; len];
    let bm1 = cfg.b as i32 - 1;
    let pairs = if u0.is_real() { conjugate_pairs(&grid) } else { Vec::new() };
    symmetrize(&mut u, &pairs);

    let mut traj = Trajectory {
        config: *cfg,
        n,
        z_exponent: z_p,
        records: Vec::new(),
        blowup: None,
        snapshots: Vec::new(),
        final_state: u0.clone(),
        steps: 0,
    };
    let (mut t, mut last_dt, mut next_stop) = (0.0f64, 0.0f64, 0usize);

    loop {
        if let Some(i) = first_non_finite(&u) {
            let last = traj.records.last().copied();
            return Err(Error::Numerical {
                t,
                reason: format!(
                    "non-finite coefficient at mode {:?} after a step of {last_dt:e}; last record {last:?}",
                    &grid.mode_vector(i)[..n]
                ),
            });
        }
        let sampled = power.sample(&u);
        let sup = sampled.sup;
        let at_stop = next_stop < stops.len() && t == stops[next_stop];
        let done = t >= cfg.t_end;
        // the step rule only guards the nonlinear term
        let dt_requested = if cfg.nonlinear {
            cfg.dt_safety / (1.0 + sup.powi(bm1))
        } else {
            cfg.dt_max
        };
        let blowup = if !sup.is_finite() || sup > cfg.blowup_cap {
            Some(BlowupReason::Cap)
        } else if dt_requested < cfg.dt_min {
            Some(BlowupReason::DtFloor)
        } else {
            None
        };

        if traj.steps % cfg.record_every == 0 || at_stop || done || blowup.is_some() {
            let field = SpectralField::from_coeffs(grid.clone(), u.clone())?;
            let hermitian_defect = if u0.is_real() { field.hermitian_defect() } else { 0.0 };
            let padded = &power.padded;
            let lp_crit = lp_norm_of_samples(padded, &sampled.abs, p_crit)?;
            let z = if t > 0.0 {
                t.powf(half_sigma) * lp_norm_of_samples(padded, &sampled.abs, z_p)?
            } else {
                0.0
            };
            traj.records.push(TrajectoryRecord {
                t,
                dt: last_dt,
                l1_spectrum: l1_spectrum(&field),
                sup_norm: sup,
                lp_crit,
                positivity_margin: field.positivity_margin(),
                z_norm_p: z,
                hermitian_defect,
                max_abs_coeff: field.max_abs(),
            });
        }
        if at_stop {
            if is_probe(t) {
                traj.snapshots.push(Snapshot {
                    t,
                    field: retag(&grid, u.clone(), u0)?,
                });
            }
            next_stop += 1;
        }
        if blowup.is_some() || done {
            traj.final_state = retag(&grid, u.clone(), u0)?;
        }
        if let Some(reason) = blowup {
            traj.blowup = Some(Blowup {
                t_star: t,
                reason,
                sup_norm: sup,
                dt_requested,
            });
            break;
        }
        if done {
            break;
        }

        let target = stops[next_stop];
        let mut h = cfg.dt_max.min(dt_requested);
        let landing = t + h >= target;
        if landing {
            h = target - t;
        }

        // k1 = N(u); `power.work` still holds the physical values of u
        if cfg.nonlinear {
            power.power_from_physical(&mut k1);
        }
        let e = Factors::new(&lambda, h);
        if cfg.nonlinear {
            for i in 0..len {
                stage[i] = e.half[i] * (u[i] + 0.5 * h * k1[i]);
            }
            power.power(&stage, &mut k2);
            for i in 0..len {
                stage[i] = e.half[i] * u[i] + 0.5 * h * k2[i];
            }
            power.power(&stage, &mut k3);
            for i in 0..len {
                stage[i] = e.full[i] * u[i] + h * e.half[i] * k3[i];
            }
            power.power(&stage, &mut k4);
            for i in 0..len {
                u[i] = e.full[i] * u[i]
                    + h / 6.0
                        * (e.full[i] * k1[i] + 2.0 * e.half[i] * (k2[i] + k3[i]) + k4[i]);
            }
        } else {
            for i in 0..len {
                u[i] *= e.full[i];
            }
        }
        symmetrize(&mut u, &pairs);
        t = if landing { target } else { t + h };
        last_dt = h;
        traj.steps += 1;
    }
    Ok(traj)
}

// ---------------------------------------------------------------------------
// Picard iterates

/// Iterates `û_l(t_i)` for `l = 1..=l_max` on the mesh `t_i = i T/steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct PicardIterates {
    pub times: Vec<f64>,
    /// `iterates[l − 1][i]` is `û_l(t_i)`.
    pub iterates: Vec<Vec<SpectralField>>,
    /// Set when an iterate overflowed; `iterates` then stops before `l_max`.
    pub diverged: bool,
}

impl PicardIterates {
    pub fn last(&self) -> &[SpectralField] {
        self.iterates.last().expect("at least one iterate")
    }

    /// `max_i ‖û_l(t_i) − û_{l−1}(t_i)‖_{ℓ¹}` for each `l >= 2`.
    pub fn increments(&self) -> Result<Vec<f64>> {
        self.iterates
            .windows(2)
            .map(|w| {
                w[0].iter()
                    .zip(&w[1])
                    .try_fold(0.0f64, |m, (a, b)| Ok(m.max(a.l1_distance(b)?)))
            })
            .collect()
    }
}

/// Weights `(W_i, W_{i+1})/h` of `∫_0^h e^{−λ(h−s)} N(s) ds` for `N` linear
/// between the end values; `z = λh`.
fn product_weights(z: f64) -> (f64, f64) {
    if z < 0.5 {
        // Σ (−1)^k (k+1) z^k/(k+2)!  and  Σ (−z)^k/(k+2)!
        let (mut left, mut right) = (0.0, 0.0);
        let mut term = 0.5; // z^k/(k+2)!
        for k in 0..24 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            left += sign * (k as f64 + 1.0) * term;
            right += sign * term;
            term *= z / (k as f64 + 3.0);
        }
        (left, right)
    } else {
        let e = (-z).exp();
        ((1.0 - e * (1.0 + z)) / (z * z), (e - 1.0 + z) / (z * z))
    }
}

pub fn picard_iterate(
    u0: &SpectralField,
    b: u32,
    t_final: f64,
    l_max: usize,
    steps: usize,
) -> Result<PicardIterates> {
    check_exponent(b)?;
    check_band(u0)?;
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::pre(format!("Picard horizon must be positive, got {t_final}")));
    }
    if l_max == 0 || steps == 0 {
        return Err(Error::pre("Picard iteration needs l_max >= 1 and steps >= 1"));
    }
    let grid = u0.grid().clone();
    let len = grid.len();
    let h = t_final / steps as f64;
    let times: Vec<f64> = (0..=steps).map(|i| i as f64 * h).collect();
    let lambda: Vec<f64> = (0..len).map(|i| grid.wavenumber_sq(i)).collect();
    let decay: Vec<f64> = lambda.iter().map(|l| (-l * h).exp()).collect();
    let weights: Vec<(f64, f64)> = lambda
        .iter()
        .map(|l| {
            let (a, c) = product_weights(l * h);
            (h * a, h * c)
        })
        .collect();
    let mut power = PaddedPower::new(&grid, b, minimal_pad(b), u0.is_real())?;

    // û_1(t_i) = e^{−t_i|ξ|²} û_0
    let heat: Vec<Vec<Complex64>> = times
        .iter()
        .map(|&t| {
            u0.coeffs()
                .iter()
                .zip(&lambda)
                .map(|(c, l)| c * (-l * t).exp())
                .collect()
        })
        .collect();
    let mut current = heat.clone();
    let mut iterates = Vec::with_capacity(l_max);
    let wrap = |vals: &[Vec<Complex64>]| -> Result<Vec<SpectralField>> {
        vals.iter().map(|c| retag(&grid, c.clone(), u0)).collect()
    };
    iterates.push(wrap(&current)?);

    let mut nonlin = vec![vec![ZERO; len]; steps + 1];
    let mut diverged = false;
    for _ in 1..l_max {
        for (i, state) in current.iter().enumerate() {
            power.power(state, &mut nonlin[i]);
        }
        let mut integral = vec![ZERO; len];
        let mut next = Vec::with_capacity(steps + 1);
        next.push(heat[0].clone());
        for i in 0..steps {
            for m in 0..len {
                let (wl, wr) = weights[m];
                integral[m] = decay[m] * integral[m] + wl * nonlin[i][m] + wr * nonlin[i + 1][m];
            }
            next.push(heat[i + 1].iter().zip(&integral).map(|(a, b)| a + b).collect());
        }
        if next.iter().any(|v| first_non_finite(v).is_some()) {
            // divergence is data: keep the finite iterates and flag it
            diverged = true;
            break;
        }
        current = next;
        iterates.push(wrap(&current)?);
    }
    Ok(PicardIterates {
        times,
        iterates,
        diverged,
    })
}

// ---------------------------------------------------------------------------
// Lower-bound verification

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ProbeStatus {
    Pass,
    Fail,
    /// The solution was not available at the probe time.
    NotReached,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundEntry {
    pub k: u32,
    pub t_k: f64,
    pub t_probe: f64,
    pub status: ProbeStatus,
    /// `min over supp ŵ_k of (Re û_num − bound)`.
    pub margin: Option<f64>,
    /// `1e−8 · ‖û_num‖_{ℓ¹}`.
    pub tolerance: Option<f64>,
    /// Largest coefficient of the bound, for scale.
    pub bound_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub probe_offset: f64,
    pub entries: Vec<LowerBoundEntry>,
}

impl LowerBoundReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.status == ProbeStatus::Pass)
    }

    /// True when some probe was not reached.
    pub fn partial(&self) -> bool {
        self.entries.iter().any(|e| e.status == ProbeStatus::NotReached)
    }
}

pub const LOWER_BOUND_RELATIVE_TOLERANCE: f64 = 1e-8;

/// `A = 0` is not a certificate amplitude, but zero data still has the
/// (degenerate) bound 0.
fn zero_amplitude(params: &CertificateParams) -> bool {
    params.amplitude == Amplitude::Absolute(0.0)
}

fn validate_for_bounds(params: &CertificateParams) -> Result<()> {
    if zero_amplitude(params) {
        CertificateParams {
            amplitude: Amplitude::RelativeToThreshold(1.0),
            ..*params
        }
        .validate()
    } else {
        params.validate()
    }
}

/// Probe offset `0.01·δ` past each `t_k`.
pub fn default_probe_offset(delta: f64) -> f64 {
    0.01 * delta
}

/// Margin of `u_num` over the level-`k` bound at time `t`, restricted to the
/// support of `kernel = ŵ_k`. Returns `(margin, tolerance, bound_max)`.
pub fn lower_bound_margin(
    u_num: &SpectralField,
    k: u32,
    t: f64,
    kernel: &SpectralField,
    params: &CertificateParams,
) -> Result<(f64, f64, f64)> {
    u_num.grid().ensure_same(kernel.grid())?;
    let bound = if zero_amplitude(params) {
        validate_for_bounds(params)?;
        SpectralField::zeros(kernel.grid().clone())
    } else {
        lower_bound_from_kernel(k, t, kernel, params)?
    };
    let mut margin = f64::INFINITY;
    for (i, w) in kernel.coeffs().iter().enumerate() {
        if w.re > 0.0 {
            margin = margin.min(u_num.coeffs()[i].re - bound.coeffs()[i].re);
        }
    }
    let tolerance = LOWER_BOUND_RELATIVE_TOLERANCE * l1_spectrum(u_num);
    Ok((margin, tolerance, bound.max_abs()))
}

/// Compares the solution against `A^{b^k} α_k e^{−b^k t} ŵ_k` at
/// `t_k + probe_offset` for `k = 0..=k_max`. `source` returns `None` when the
/// solution does not exist at the requested time.
pub fn verify_lower_bound<F>(
    mut source: F,
    params: &CertificateParams,
    w_hat: &SpectralField,
    k_max: u32,
    probe_offset: f64,
) -> Result<LowerBoundReport>
where
    F: FnMut(f64) -> Result<Option<SpectralField>>,
{
    validate_for_bounds(params)?;
    if k_max > MAX_VERIFY_LEVEL {
        return Err(Error::pre(format!(
            "lower bounds are verified for k <= {MAX_VERIFY_LEVEL}, got k_max = {k_max}"
        )));
    }
    if !(probe_offset > 0.0 && probe_offset.is_finite()) {
        return Err(Error::pre(format!("probe offset must be positive, got {probe_offset}")));
    }
    let mut entries = Vec::new();
    for k in 0..=k_max {
        let t_k = t_closed(k, params.b, params.delta);
        let t_probe = t_k + probe_offset;
        let entry = match source(t_probe)? {
            None => LowerBoundEntry {
                k,
                t_k,
                t_probe,
                status: ProbeStatus::NotReached,
                margin: None,
                tolerance: None,
                bound_max: None,
            },
            Some(u) => {
                let kernel = lower_bound_kernel(k, w_hat, params.b)?;
                let (margin, tol, bound_max) = lower_bound_margin(&u, k, t_probe, &kernel, params)?;
                LowerBoundEntry {
                    k,
                    t_k,
                    t_probe,
                    status: if margin >= -tol { ProbeStatus::Pass } else { ProbeStatus::Fail },
                    margin: Some(margin),
                    tolerance: Some(tol),
                    bound_max: Some(bound_max),
                }
            }
        };
        entries.push(entry);
    }
    Ok(LowerBoundReport {
        probe_offset,
        entries,
    })
}

/// Simulates from `u0 = A·ŵ` with probes at `t_k + probe_offset` and checks
/// the bounds on the snapshots.
pub fn simulate_and_verify(
    params: &CertificateParams,
    w_hat: &SpectralField,
    cfg: &SolverConfig,
    k_max: u32,
    probe_offset: f64,
) -> Result<(Trajectory, LowerBoundReport)> {
    if cfg.b != params.b {
        return Err(Error::config(format!(
            "solver b = {} differs from certificate b = {}",
            cfg.b, params.b
        )));
    }
    validate_for_bounds(params)?;
    let amplitude = if zero_amplitude(params) { 0.0 } else { params.amplitude_value()? };
    let u0 = w_hat.scaled(amplitude);
    let probes: Vec<f64> = (0..=k_max.min(MAX_VERIFY_LEVEL))
        .map(|k| t_closed(k, params.b, params.delta) + probe_offset)
        .collect();
    let traj = simulate_with_probes(&u0, cfg, &probes)?;
    let report = verify_lower_bound(
        |t| Ok(traj.snapshot_at(t).cloned()),
        params,
        w_hat,
        k_max,
        probe_offset,
    )?;
    Ok((traj, report))
}

// ---------------------------------------------------------------------------
// Theorem-1 weighted norm

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Diagnostics {
    pub p: f64,
    pub sigma: f64,
    /// `sup_t t^{σ/2}‖u(t)‖_p` over the records.
    pub sup_z: f64,
    /// Earliest positive record time and its weighted norm.
    pub t_min: f64,
    pub z_t_min: f64,
}

pub fn theorem1_diagnostics(traj: &Trajectory, p: f64) -> Result<Theorem1Diagnostics> {
    let b = traj.config.b;
    let (lo, hi) = z_window(traj.n, b);
    if !(p > lo && p < hi) {
        return Err(Error::pre(format!(
            "p must satisfy n(b-1)/2 < p < nb(b-1)/2, i.e. {lo} < p < {hi}, got {p}"
        )));
    }
    if p != traj.z_exponent {
        return Err(Error::config(format!(
            "trajectory recorded the weighted norm for p = {}, rerun with z_exponent = {p}",
            traj.z_exponent
        )));
    }
    let positive: Vec<&TrajectoryRecord> = traj.records.iter().filter(|r| r.t > 0.0).collect();
    let sup_z = positive.iter().fold(0.0f64, |m, r| m.max(r.z_norm_p));
    let (t_min, z_t_min) = positive.first().map_or((0.0, 0.0), |r| (r.t, r.z_norm_p));
    Ok(Theorem1Diagnostics {
        p,
        sigma: z_sigma(traj.n, b, p),
        sup_z,
        t_min,
        z_t_min,
    })
}
