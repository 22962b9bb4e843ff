//! One function per subcommand. Each validates, computes, writes its
//! artifacts and returns the one-line summary.

use blowlab_core::certificate::{
    build_sequence, certified_blowup_n, log_theorem_constant, besov_bound_series, Amplitude,
    CertificateParams, ThresholdOutcome,
};
use blowlab_core::data::{build_bump, construction_grid, BumpSpec, DataDescriptor};
use blowlab_core::littlewood_paley::{besov_norm_spectral, build_filter_bank};
use blowlab_core::solver::{default_probe_offset, simulate, simulate_and_verify, ProbeStatus};
use blowlab_core::spectral::{l1_spectrum, lp_norm, FieldContainer};
use blowlab_core::{besov_integrability, check_supercritical, Error, RealField, SpectralField, TorusGrid};
use rayon::prelude::*;
use serde_json::json;

use crate::args::*;
use crate::output::{num, AppIoError, OutDir};

pub enum Failure {
    Core(Error),
    Io(AppIoError),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<AppIoError> for Failure {
    fn from(e: AppIoError) -> Self {
        Failure::Io(e)
    }
}

pub struct Outcome {
    pub summary: String,
    /// 0, or 4 for a NOT_FOUND verdict.
    pub code: u8,
}

impl Outcome {
    fn ok(summary: String) -> Self {
        Self { summary, code: 0 }
    }
}

type Run = Result<Outcome, Failure>;

pub fn dispatch(config: &RunConfig, out: &OutDir) -> Run {
    if config.format_version != FORMAT_VERSION {
        return Err(Error::Config(format!(
            "format_version must be {FORMAT_VERSION}, got {}",
            config.format_version
        ))
        .into());
    }
    match &config.command {
        Command::Bump(a) => bump(a, out),
        Command::Data(a) => data(a, out),
        Command::Besov(a) => besov(a, out),
        Command::Certificate(a) => certificate(a, out),
        Command::Threshold(a) => threshold(a, out),
        Command::Simulate(a) => simulate_cmd(a, out),
        Command::Verify(a) => verify(a, out),
        Command::Sweep(a) => sweep(a, out),
    }
}

fn resolve_grid(
    spec: &GridSpec,
    n: usize,
    default: impl FnOnce() -> blowlab_core::Result<TorusGrid>,
) -> blowlab_core::Result<TorusGrid> {
    let grid = match (&spec.r, &spec.m) {
        (Some(r), Some(m)) => TorusGrid::new(r.clone(), m.clone())?,
        (None, None) => default()?,
        _ => return Err(Error::Config("give both --r and --m, or neither".into())),
    };
    if grid.dim() != n {
        return Err(Error::Config(format!(
            "grid has {} axes but n = {n}",
            grid.dim()
        )));
    }
    Ok(grid)
}

/// Σ|ŵ| of the default bump on its default grid.
fn default_w_l1(n: usize, b: u32) -> blowlab_core::Result<f64> {
    let grid = construction_grid(n, b, 0, None)?;
    Ok(l1_spectrum(&build_bump(&grid, &BumpSpec::for_exponent(b))?.1))
}

fn amplitude(text: &str) -> blowlab_core::Result<Amplitude> {
    parse_amplitude(text).map_err(Error::Config)
}

fn samples_csv(u: &RealField, column: &str) -> String {
    let grid = u.grid();
    let mut out = String::new();
    for axis in 0..grid.dim() {
        out.push_str(&format!("x{axis},"));
    }
    out.push_str(column);
    out.push('\n');
    for (i, v) in u.samples().iter().enumerate() {
        let x = grid.position(i);
        for xa in x.iter().take(grid.dim()) {
            out.push_str(&format!("{xa:e},"));
        }
        out.push_str(&format!("{v:e}\n"));
    }
    out
}

fn grid_text(grid: &TorusGrid) -> String {
    format!("r={:?} M={:?}", grid.exponents(), grid.modes())
}

fn bump(a: &BumpArgs, out: &OutDir) -> Run {
    let spec = BumpSpec {
        rho: a.rho.unwrap_or(BumpSpec::for_exponent(a.b).rho),
        amplitude: a.amplitude,
    };
    let grid = resolve_grid(&a.grid, a.n, || construction_grid(a.n, a.b, 0, None))?;
    let (w, w_hat) = build_bump(&grid, &spec)?;
    let l1 = l1_spectrum(&w_hat);
    out.csv("bump.csv", &samples_csv(&w, "w"))?;
    out.json(
        "bump_hat.json",
        &json!({ "bump": spec, "w_l1": l1, "sup": w.sup_norm(), "field": FieldContainer::from(&w_hat) }),
    )?;
    Ok(Outcome::ok(format!(
        "bump: rho={} {} w_l1={l1:.12e}",
        spec.rho,
        grid_text(&grid)
    )))
}

fn build_data(d: &DataSpec, bank_top: Option<i32>) -> blowlab_core::Result<(DataDescriptor, RealField, SpectralField)> {
    let schedule = d.schedule()?;
    check_supercritical(d.n, d.b)?;
    let grid = resolve_grid(&d.grid, d.n, || construction_grid(d.n, d.b, d.n_terms, bank_top))?;
    let desc = DataDescriptor {
        n: d.n,
        b: d.b,
        n_terms: d.n_terms,
        bump: BumpSpec::for_exponent(d.b),
        schedule,
        grid: (&grid).into(),
    };
    let (u, u_hat) = desc.build()?;
    Ok((desc, u, u_hat))
}

fn data(a: &DataArgs, out: &OutDir) -> Run {
    let (desc, u, u_hat) = build_data(&a.data, None)?;
    let grid = u.grid().clone();
    let l1 = l1_spectrum(&u_hat);
    let lp = lp_norm(&u, blowlab_core::critical_exponent(desc.n, desc.b))?;
    out.json(
        "data.json",
        &json!({ "descriptor": desc, "l1_spectrum": l1, "sup": u.sup_norm(), "lp_crit": lp }),
    )?;
    out.json("u0_hat.json", &FieldContainer::from(&u_hat))?;
    out.csv("u0.csv", &samples_csv(&u, "u0"))?;
    Ok(Outcome::ok(format!(
        "data: n={} b={} N={} {} l1={l1:.6e} sup={:.6e}",
        desc.n,
        desc.b,
        desc.n_terms,
        grid_text(&grid),
        u.sup_norm()
    )))
}

fn besov(a: &BesovArgs, out: &OutDir) -> Run {
    let d = &a.data;
    let j_max = a.j_max.unwrap_or((d.n_terms as i32).max(a.j_min + 1));
    let s = a.s.unwrap_or(-2.0 / d.b as f64);
    let p = a.p.unwrap_or(besov_integrability(d.n, d.b));
    let (_, _, u_hat) = build_data(d, Some(j_max))?;
    let bank = build_filter_bank(u_hat.grid(), a.j_min, j_max)?;
    let report = besov_norm_spectral(&u_hat, s, p, a.q, &bank)?;
    out.csv("besov_blocks.csv", &report.block_csv())?;
    out.csv(
        "besov_summary.csv",
        &format!("{}\n{}\n", report.summary_header(), report.summary_row()),
    )?;
    Ok(Outcome::ok(format!(
        "besov: s={s} p={p} q={} j=[{},{j_max}] total={:.12e}",
        a.q, a.j_min, report.total
    )))
}

fn certificate(a: &CertificateArgs, out: &OutDir) -> Run {
    let w_l1 = match a.w_l1 {
        Some(v) => v,
        None => default_w_l1(a.n, a.b)?,
    };
    let params = CertificateParams {
        b: a.b,
        delta: a.delta,
        amplitude: amplitude(&a.amplitude)?,
        w_l1,
        n: a.n,
    };
    let seq = build_sequence(&params, a.k_max)?;
    let record = seq.verdict_record();
    out.csv("certificate.csv", &seq.to_csv())?;
    out.json(
        "verdict.json",
        &json!({ "verdict": record, "A": params.amplitude_value()?, "w_l1": w_l1, "log_ratio": seq.log_ratio }),
    )?;
    let verdict = serde_json::to_value(record.verdict).map_err(Error::from)?;
    Ok(Outcome::ok(format!(
        "certificate: {} A_min={:.6e} k_star={} | {}",
        verdict.as_str().unwrap_or_default(),
        record.a_min,
        record.k_star.map_or_else(|| "none".to_string(), |k| k.to_string()),
        record.guarantee_text
    )))
}

fn threshold(a: &ThresholdArgs, out: &OutDir) -> Run {
    check_supercritical(a.n, a.b)?;
    let schedule = DataSpec {
        n: a.n,
        b: a.b,
        schedule: a.schedule,
        eps: a.eps,
        ..DataSpec::default()
    }
    .schedule()?;
    let w_l1 = match a.w_l1 {
        Some(v) => v,
        None => default_w_l1(a.n, a.b)?,
    };
    let outcome = certified_blowup_n(a.delta, &schedule, w_l1, a.cap)?;
    let n_min = match outcome {
        ThresholdOutcome::Found { n, .. } => Some(n),
        ThresholdOutcome::NotFound { .. } => None,
    };
    let text = outcome.guarantee_text(a.delta);
    out.json(
        "threshold.json",
        &json!({ "outcome": outcome, "N_min": n_min, "w_l1": w_l1, "guarantee_text": text }),
    )?;
    Ok(match n_min {
        Some(n) => Outcome::ok(format!("threshold: FOUND N_min={n} | {text}")),
        None => Outcome {
            summary: format!("threshold: NOT_FOUND | {text}"),
            code: 4,
        },
    })
}

fn blowup_text(t: Option<f64>, last: f64) -> String {
    match t {
        Some(t) => format!("T*_num={t:.6e}"),
        None => format!("no blowup up to t={last:.6e}"),
    }
}

fn simulate_cmd(a: &SimulateArgs, out: &OutDir) -> Run {
    let d = &a.data;
    let cfg = a.solver.config(d.b);
    cfg.validate()?;
    let amp = amplitude(&a.amplitude)?;
    let (u0, amplitude_value) = match a.init {
        InitialData::Bump => {
            check_supercritical(d.n, d.b)?;
            let grid = resolve_grid(&d.grid, d.n, || construction_grid(d.n, d.b, 0, None))?;
            let (_, w_hat) = build_bump(&grid, &BumpSpec::for_exponent(d.b))?;
            let params = CertificateParams {
                b: d.b,
                delta: a.delta,
                amplitude: amp,
                w_l1: l1_spectrum(&w_hat),
                n: d.n,
            };
            params.validate()?;
            let value = params.amplitude_value()?;
            (w_hat.scaled(value), value)
        }
        InitialData::Data => {
            let Amplitude::Absolute(value) = amp else {
                return Err(Error::Config(
                    "relative amplitudes (kx) need --init bump; give an absolute --A".into(),
                )
                .into());
            };
            let (_, _, u_hat) = build_data(d, None)?;
            (u_hat.scaled(value), value)
        }
    };
    let traj = simulate(&u0, &cfg)?;
    out.csv("trajectory.csv", &traj.to_csv())?;
    out.json(
        "blowup.json",
        &json!({ "summary": traj.summary(&cfg), "A": amplitude_value, "steps": traj.steps }),
    )?;
    Ok(Outcome::ok(format!(
        "simulate: A={amplitude_value:.6e} {} steps={}",
        blowup_text(traj.blowup_time(), traj.final_time()),
        traj.steps
    )))
}

fn status_text(s: ProbeStatus) -> &'static str {
    match s {
        ProbeStatus::Pass => "PASS",
        ProbeStatus::Fail => "FAIL",
        ProbeStatus::NotReached => "NOT_REACHED",
    }
}

fn verify(a: &VerifyArgs, out: &OutDir) -> Run {
    let cfg = a.solver.config(a.b);
    cfg.validate()?;
    check_supercritical(a.n, a.b)?;
    let grid = resolve_grid(&a.grid, a.n, || construction_grid(a.n, a.b, 0, None))?;
    let (_, w_hat) = build_bump(&grid, &BumpSpec::for_exponent(a.b))?;
    let params = CertificateParams {
        b: a.b,
        delta: a.delta,
        amplitude: amplitude(&a.amplitude)?,
        w_l1: l1_spectrum(&w_hat),
        n: a.n,
    };
    let offset = a.offset.unwrap_or(default_probe_offset(a.delta));
    let (traj, report) = simulate_and_verify(&params, &w_hat, &cfg, a.k_max, offset)?;
    let mut csv = String::from("k,t_k,t_probe,status,margin,tolerance,bound_max\n");
    for e in &report.entries {
        csv.push_str(&format!(
            "{},{:e},{:e},{},{},{},{}\n",
            e.k,
            e.t_k,
            e.t_probe,
            status_text(e.status),
            num(e.margin),
            num(e.tolerance),
            num(e.bound_max)
        ));
    }
    out.csv("lower_bounds.csv", &csv)?;
    out.csv("trajectory.csv", &traj.to_csv())?;
    out.json(
        "verify.json",
        &json!({
            "report": report,
            "passed": report.passed(),
            "partial": report.partial(),
            "blowup": traj.summary(&cfg),
            "A": params.amplitude_value()?,
        }),
    )?;
    let statuses: Vec<&str> = report.entries.iter().map(|e| status_text(e.status)).collect();
    Ok(Outcome::ok(format!(
        "verify: {} probes [{}]",
        blowup_text(traj.blowup_time(), traj.final_time()),
        statuses.join(",")
    )))
}

// ---------------------------------------------------------------------------
// Sweeps

const SWEEP_HEADER: &str = "kind,b,n,q,N,delta,A,metric,value,status\n";

#[derive(Default)]
struct Row {
    q: Option<f64>,
    n_terms: Option<u64>,
    delta: Option<f64>,
    amplitude: Option<f64>,
    metric: &'static str,
    value: Option<f64>,
    status: String,
}

fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn cell_status<T>(r: &blowlab_core::Result<T>) -> String {
    match r {
        Ok(_) => "ok".to_string(),
        Err(e) => format!("error: {e}"),
    }
}

fn check_increasing<T: PartialOrd + std::fmt::Debug>(name: &str, v: &[T]) -> blowlab_core::Result<()> {
    if v.is_empty() || v.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config(format!(
            "sweep grid {name} must be nonempty and strictly increasing, got {v:?}"
        )));
    }
    Ok(())
}

fn sweep(a: &SweepArgs, out: &OutDir) -> Run {
    check_supercritical(a.n, a.b)?;
    let schedule = a.schedule()?;
    let rows: Vec<Row> = match a.kind {
        SweepKind::BesovSeries => {
            check_increasing("q", &a.q)?;
            check_increasing("N", &a.n_values)?;
            let cells: Vec<(f64, u64)> = a
                .q
                .iter()
                .flat_map(|&q| a.n_values.iter().map(move |&n| (q, n)))
                .collect();
            cells
                .par_iter()
                .map(|&(q, n)| {
                    let r = besov_bound_series(n, q, &schedule);
                    Row {
                        q: Some(q),
                        n_terms: Some(n),
                        metric: "besov_bound",
                        value: r.as_ref().ok().and_then(|v| v.last().copied()),
                        status: cell_status(&r),
                        ..Row::default()
                    }
                })
                .collect()
        }
        SweepKind::TheoremConstant => {
            check_increasing("delta", &a.delta)?;
            check_increasing("N", &a.n_values)?;
            let cells: Vec<(f64, u64)> = a
                .delta
                .iter()
                .flat_map(|&d| a.n_values.iter().map(move |&n| (d, n)))
                .collect();
            cells
                .par_iter()
                .map(|&(delta, n)| {
                    let r = log_theorem_constant(n, delta, &schedule);
                    Row {
                        n_terms: Some(n),
                        delta: Some(delta),
                        metric: "log_c",
                        value: r.as_ref().ok().copied(),
                        status: cell_status(&r),
                        ..Row::default()
                    }
                })
                .collect()
        }
        SweepKind::Amplitude => amplitude_sweep(a)?,
    };
    let mut csv = String::from(SWEEP_HEADER);
    let kind = serde_json::to_value(a.kind).map_err(Error::from)?;
    let kind = kind.as_str().unwrap_or_default();
    let failed = rows.iter().filter(|r| r.status != "ok" && r.status != "no_blowup").count();
    for r in &rows {
        csv.push_str(&format!(
            "{kind},{},{},{},{},{},{},{},{},{}\n",
            a.b,
            a.n,
            num(r.q),
            r.n_terms.map_or_else(String::new, |n| n.to_string()),
            num(r.delta),
            num(r.amplitude),
            r.metric,
            num(r.value),
            quote(&r.status)
        ));
    }
    out.csv("sweep.csv", &csv)?;
    Ok(Outcome::ok(format!(
        "sweep: {kind} {} cells, {failed} failed",
        rows.len()
    )))
}

fn amplitude_sweep(a: &SweepArgs) -> blowlab_core::Result<Vec<Row>> {
    check_increasing("delta", &a.delta)?;
    let cfg = a.solver.config(a.b);
    cfg.validate()?;
    let grid = resolve_grid(&a.grid, a.n, || construction_grid(a.n, a.b, 0, None))?;
    let (_, w_hat) = build_bump(&grid, &BumpSpec::for_exponent(a.b))?;
    let w_l1 = l1_spectrum(&w_hat);
    let ladder = a
        .amplitudes
        .iter()
        .map(|s| amplitude(s))
        .collect::<blowlab_core::Result<Vec<_>>>()?;
    let mut cells = Vec::new();
    for &delta in &a.delta {
        let values = ladder
            .iter()
            .map(|&amplitude| {
                CertificateParams {
                    b: a.b,
                    delta,
                    amplitude,
                    w_l1,
                    n: a.n,
                }
                .amplitude_value()
            })
            .collect::<blowlab_core::Result<Vec<_>>>()?;
        check_increasing("A", &values)?;
        cells.extend(values.into_iter().map(|v| (delta, v)));
    }
    Ok(cells
        .par_iter()
        .map(|&(delta, value)| {
            let r = simulate(&w_hat.scaled(value), &cfg);
            let t_star = r.as_ref().ok().and_then(|t| t.blowup_time());
            let status = match &r {
                Ok(_) if t_star.is_none() => "no_blowup".to_string(),
                other => cell_status(other),
            };
            Row {
                delta: Some(delta),
                amplitude: Some(value),
                metric: "T_star_num",
                value: t_star,
                status,
                ..Row::default()
            }
        })
        .collect())
}
