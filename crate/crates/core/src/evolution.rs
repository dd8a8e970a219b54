//! Time integration of the full system on the radial grid.
//!
//! The scheme is the implicit midpoint (Crank-Nicolson) rule in weak form,
//! `(W + i dt/(4m) S) u' = (W - i dt/(4m) S) u + i dt W F((u + u')/2)`,
//! with the midpoint nonlinearity found by fixed-point iteration. Quadratic
//! invariants (the two phase charges) are conserved up to the fixed-point
//! tolerance; the energy drifts at second order in `dt`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::field::{Field3, MassTriple, C64};
use crate::grid::RadialGrid;
use crate::linalg::Tridiagonal;
use crate::states::{functionals, kinetic, nonlinearity, FunctionalReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_end: f64,
    pub direction: Direction,
    /// Minimum number of fixed-point sweeps per step.
    pub iterations: usize,
    /// Hard cap on fixed-point sweeps before the step is declared failed.
    pub max_iterations: usize,
    /// Relative increment at which the fixed point is accepted.
    pub fixed_point_tol: f64,
    pub blowup_k_factor: f64,
    pub sample_every: usize,
    /// Times (in the integration direction, as absolute values) at which snapshots are kept.
    pub checkpoints: Vec<f64>,
    /// When set, the step grows up to this size while the per-step relative
    /// energy change stays below `energy_tol`; it never drops below `dt`.
    pub dt_max: Option<f64>,
    pub energy_tol: f64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 1.0,
            direction: Direction::Forward,
            iterations: 3,
            max_iterations: 50,
            fixed_point_tol: 1e-13,
            blowup_k_factor: 20.0,
            sample_every: 10,
            checkpoints: Vec::new(),
            dt_max: None,
            energy_tol: 1e-9,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(invalid(format!("t_end must be nonnegative, got {}", self.t_end)));
        }
        if self.iterations == 0 || self.max_iterations < self.iterations {
            return Err(invalid("need 1 <= iterations <= max_iterations"));
        }
        if self.sample_every == 0 {
            return Err(invalid("sample_every must be at least 1"));
        }
        if let Some(m) = self.dt_max {
            if !(m >= self.dt) {
                return Err(invalid("dt_max must be at least dt"));
            }
        }
        if !(self.blowup_k_factor > 1.0) {
            return Err(invalid("blowup_k_factor must exceed 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Status {
    Completed,
    BlowupDetected { t_star: f64 },
    Diverged { t: f64 },
}

impl Status {
    pub fn label(&self) -> String {
        match self {
            Status::Completed => "completed".into(),
            Status::BlowupDetected { t_star } => format!("blowup-detected({t_star})"),
            Status::Diverged { t } => format!("diverged({t})"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EvolutionTrace {
    pub times: Vec<f64>,
    pub reports: Vec<FunctionalReport>,
    pub l4: Vec<f64>,
    pub status: Status,
    pub steps: usize,
    pub halved_steps: usize,
    #[serde(skip)]
    pub final_field: Field3,
    #[serde(skip)]
    pub snapshots: Vec<(f64, Field3)>,
}

impl EvolutionTrace {
    /// Largest relative deviation of a sampled quantity from its initial value.
    pub fn max_relative_drift(&self, f: impl Fn(&FunctionalReport) -> f64) -> f64 {
        let v0 = f(&self.reports[0]);
        let scale = v0.abs().max(f64::MIN_POSITIVE);
        self.reports.iter().map(|r| (f(r) - v0).abs() / scale).fold(0.0, f64::max)
    }
}

/// One integrator bound to a grid and masses; factorizations are cached per `dt`.
pub struct Stepper {
    grid: RadialGrid,
    masses: MassTriple,
    w: Vec<f64>,
    sd: Vec<f64>,
    so: Vec<f64>,
    cache: Option<(f64, [Tridiagonal<C64>; 3])>,
    pub min_iterations: usize,
    pub max_iterations: usize,
    pub tol: f64,
}

impl Stepper {
    pub fn new(grid: &RadialGrid, masses: &MassTriple) -> Self {
        let (sd, so) = grid.stiffness();
        Self {
            grid: grid.clone(),
            masses: *masses,
            w: grid.weights(),
            sd,
            so,
            cache: None,
            min_iterations: 3,
            max_iterations: 50,
            tol: 1e-13,
        }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    fn factors(&mut self, dt: f64) -> &[Tridiagonal<C64>; 3] {
        if self.cache.as_ref().is_none_or(|(d, _)| *d != dt) {
            let kin = self.masses.kinetic();
            let n = self.grid.n();
            let f = [0, 1, 2].map(|k| {
                let a = C64::new(0.0, 0.5 * dt * kin[k]);
                let diag: Vec<C64> = (0..n).map(|i| C64::new(self.w[i], 0.0) + a * self.sd[i]).collect();
                let off: Vec<C64> = self.so.iter().map(|o| a * o).collect();
                Tridiagonal::factor(&off, &diag, &off)
            });
            self.cache = Some((dt, f));
        }
        &self.cache.as_ref().expect("cached").1
    }

    /// Explicit half of the scheme, `(W - i dt/(4m) S) u`.
    fn explicit_part(&self, u: &Field3, dt: f64) -> [Vec<C64>; 3] {
        let kin = self.masses.kinetic();
        let n = self.grid.n();
        [0, 1, 2].map(|k| {
            let a = C64::new(0.0, -0.5 * dt * kin[k]);
            let v = &u.c[k].values;
            (0..n)
                .map(|i| {
                    let mut s = self.sd[i] * v[i];
                    if i > 0 {
                        s += self.so[i - 1] * v[i - 1];
                    }
                    if i + 1 < n {
                        s += self.so[i] * v[i + 1];
                    }
                    v[i] * self.w[i] + a * s
                })
                .collect()
        })
    }

    /// One step of size `dt`; `t` is only used for error reporting.
    pub fn step(&mut self, u: &Field3, dt: f64, t: f64) -> Result<Field3> {
        if dt == 0.0 {
            return Ok(u.clone());
        }
        if !u.is_finite() {
            return Err(LabError::NonConvergence { t, increment: f64::INFINITY });
        }
        let n = self.grid.n();
        let base = self.explicit_part(u, dt);
        let w = self.w.clone();
        let (min_it, max_it, tol) = (self.min_iterations, self.max_iterations, self.tol);
        let fac = self.factors(dt).clone();
        let mut next = u.clone();
        let scale = u.max_abs().max(1e-300);
        let mut last_inc = f64::INFINITY;
        for it in 0..max_it {
            let mut cand = Field3::zeros(n);
            for k in 0..3 {
                cand.c[k].sector = u.c[k].sector;
            }
            let mut rhs = base.clone();
            for i in 0..n {
                let m = [0, 1, 2].map(|k| 0.5 * (u.c[k].values[i] + next.c[k].values[i]));
                let f = nonlinearity(m[0], m[1], m[2]);
                for k in 0..3 {
                    rhs[k][i] += C64::new(0.0, dt * w[i]) * f[k];
                }
            }
            for k in 0..3 {
                fac[k].solve_in_place(&mut rhs[k]);
                cand.c[k].values = std::mem::take(&mut rhs[k]);
            }
            let inc = cand.sub(&next).max_abs() / scale.max(cand.max_abs());
            next = cand;
            if !inc.is_finite() || (it >= 3 && inc > last_inc && inc > 1e-6) {
                return Err(LabError::NonConvergence { t, increment: inc });
            }
            last_inc = inc;
            if it + 1 >= min_it && inc <= tol {
                return Ok(next);
            }
        }
        Err(LabError::NonConvergence { t, increment: last_inc })
    }
}

/// `||u||_{L^4} = (sum_k int |u_k|^4)^{1/4}`.
pub fn l4_norm(grid: &RadialGrid, u: &Field3) -> f64 {
    let d: Vec<f64> = (0..grid.n())
        .map(|i| (0..3).map(|k| u.c[k].values[i].norm_sqr().powi(2)).sum())
        .collect();
    grid.integrate_unchecked(&d).powf(0.25)
}

fn energy(grid: &RadialGrid, u: &Field3, masses: &MassTriple) -> f64 {
    kinetic(grid, u, masses) - 2.0 * crate::states::potential(grid, u)
}

/// Kinetic ceiling used by the blow-up detector.
pub fn detect_blowup(report: &FunctionalReport, k_ground: f64, factor: f64) -> bool {
    report.k > factor * k_ground || !report.k.is_finite()
}

/// Integrate from `u0`. Backward runs evolve `conj(u0)` forward and conjugate back,
/// recording negative times.
pub fn evolve(u0: &Field3, cfg: &EvolutionConfig, masses: &MassTriple, grid: &RadialGrid, k_ground: f64) -> Result<EvolutionTrace> {
    cfg.validate()?;
    grid.check_len(u0.n())?;
    let sign = match cfg.direction {
        Direction::Forward => 1.0,
        Direction::Backward => -1.0,
    };
    let orient = |u: &Field3| if sign > 0.0 { u.clone() } else { u.conj() };
    let mut st = Stepper::new(grid, masses);
    st.min_iterations = cfg.iterations;
    st.max_iterations = cfg.max_iterations;
    st.tol = cfg.fixed_point_tol;

    let mut u = orient(u0);
    let mut t = 0.0f64;
    let mut trace = EvolutionTrace {
        times: vec![0.0],
        reports: vec![functionals(grid, u0, masses, k_ground)?],
        l4: vec![l4_norm(grid, u0)],
        status: Status::Completed,
        steps: 0,
        halved_steps: 0,
        final_field: u0.clone(),
        snapshots: Vec::new(),
    };
    let mut pending: Vec<f64> = cfg.checkpoints.clone();
    pending.sort_by(f64::total_cmp);
    pending.retain(|c| *c >= 0.0);
    if pending.first() == Some(&0.0) {
        trace.snapshots.push((0.0, u0.clone()));
        pending.remove(0);
    }
    let mut h = cfg.dt;
    let mut step = 0usize;
    let mut e_prev = energy(grid, &u, masses);
    while t < cfg.t_end - 1e-9 * cfg.dt {
        let hs = h.min(cfg.t_end - t);
        let next = match st.step(&u, hs, t) {
            Ok(v) => v,
            Err(LabError::NonConvergence { .. }) => {
                // retry as two half steps; a second failure ends the run
                trace.halved_steps += 1;
                let half = 0.5 * hs;
                match st.step(&u, half, t).and_then(|m| st.step(&m, half, t + half)) {
                    Ok(v) => {
                        h = cfg.dt;
                        v
                    }
                    Err(LabError::NonConvergence { .. }) => {
                        trace.status = Status::BlowupDetected { t_star: sign * t };
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            Err(e) => return Err(e),
        };
        u = next;
        t += hs;
        step += 1;
        trace.steps = step;
        if !u.is_finite() {
            trace.status = Status::Diverged { t: sign * t };
            break;
        }
        if let Some(dt_max) = cfg.dt_max {
            let e = energy(grid, &u, masses);
            let change = (e - e_prev).abs() / e.abs().max(f64::MIN_POSITIVE);
            e_prev = e;
            if change > cfg.energy_tol {
                h = (0.5 * h).max(cfg.dt);
            } else if change < 0.25 * cfg.energy_tol {
                h = (1.25 * h).min(dt_max);
            }
        }
        while pending.first().is_some_and(|c| *c <= t + 0.5 * hs) {
            trace.snapshots.push((sign * pending.remove(0), orient(&u)));
        }
        let last = t >= cfg.t_end - 1e-9 * cfg.dt;
        if step % cfg.sample_every == 0 || last {
            let phys = orient(&u);
            let rep = functionals(grid, &phys, masses, k_ground)?;
            trace.times.push(sign * t);
            trace.l4.push(l4_norm(grid, &phys));
            trace.reports.push(rep);
            if detect_blowup(&rep, k_ground, cfg.blowup_k_factor) {
                trace.status = Status::BlowupDetected { t_star: sign * t };
                break;
            }
        } else if kinetic(grid, &u, masses) > cfg.blowup_k_factor * k_ground {
            let phys = orient(&u);
            trace.times.push(sign * t);
            trace.l4.push(l4_norm(grid, &phys));
            trace.reports.push(functionals(grid, &phys, masses, k_ground)?);
            trace.status = Status::BlowupDetected { t_star: sign * t };
            break;
        }
    }
    trace.final_field = orient(&u);
    Ok(trace)
}

#[derive(Debug, Clone, Serialize)]
pub struct ScatteringReport {
    pub consistent: bool,
    /// Decay factors of `||u||_{L^4}` and `|P|/K` from their peaks to the end of the window.
    pub l4_decay: f64,
    pub pk_decay: f64,
    /// Fitted algebraic exponents `q` in `~ t^{-q}` over the decaying part.
    pub l4_exponent: f64,
    pub pk_exponent: f64,
    /// Time of the later of the two peaks; decay is assessed after it.
    pub t_peak: f64,
    pub note: String,
}

/// Scattering-consistency proxy: after their peaks, `||u||_{L^4}` and `|P|/K`
/// must both decrease monotonically on log-spaced samples (up to a 1e-3
/// relative wobble) and by at least 10x overall.
pub fn scattering_diagnostic(trace: &EvolutionTrace) -> Result<ScatteringReport> {
    if trace.status != Status::Completed {
        return Err(LabError::Inconclusive(format!("run ended with status {}", trace.status.label())));
    }
    if trace.times.len() < 8 {
        return Err(LabError::Inconclusive("window too short: fewer than 8 samples".into()));
    }
    let t: Vec<f64> = trace.times.iter().map(|v| v.abs()).collect();
    let l4 = trace.l4.clone();
    let pk: Vec<f64> = trace
        .reports
        .iter()
        .map(|r| if r.k > 0.0 { r.p.abs() / r.k } else { 0.0 })
        .collect();
    let argmax = |v: &[f64]| v.iter().enumerate().fold(0, |b, (i, x)| if *x > v[b] { i } else { b });
    let peak = argmax(&l4).max(argmax(&pk));
    if t.len() - peak < 8 {
        return Ok(ScatteringReport {
            consistent: false,
            l4_decay: 1.0,
            pk_decay: 1.0,
            l4_exponent: f64::NAN,
            pk_exponent: f64::NAN,
            t_peak: t[peak],
            note: "no decay: the peak sits at the end of the window".into(),
        });
    }
    // decay is algebraic, so monotonicity is judged on samples at least 25%
    // apart in time; this ignores sample-to-sample noise once |P| is tiny
    let mut idx = vec![peak];
    for i in peak + 1..t.len() {
        let prev = t[*idx.last().expect("nonempty")];
        if t[i] >= 1.25 * prev.max(t[peak + 1]) {
            idx.push(i);
        }
    }
    if *idx.last().expect("nonempty") != t.len() - 1 {
        idx.push(t.len() - 1);
    }
    let monotone = |v: &[f64]| idx.windows(2).all(|w| v[w[1]] <= v[w[0]] * (1.0 + 1e-3));
    let decay = |v: &[f64]| {
        let end = *v.last().unwrap_or(&0.0);
        if end <= 0.0 {
            f64::INFINITY
        } else {
            v[peak] / end
        }
    };
    let fit = |v: &[f64]| {
        let pts: Vec<(f64, f64)> = (peak..t.len())
            .filter(|&i| t[i] > 0.0 && v[i] > 0.0)
            .skip((t.len() - peak) / 2)
            .map(|i| (t[i].ln(), v[i].ln()))
            .collect();
        if pts.len() < 2 {
            return f64::NAN;
        }
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        -crate::linalg::fit_line(&x, &y).0
    };
    let (dl, dp) = (decay(&l4), decay(&pk));
    let (ml, mp) = (monotone(&l4), monotone(&pk));
    let consistent = ml && mp && dl >= 10.0 && dp >= 10.0;
    let note = format!(
        "monotone after peak: L4 {ml}, P/K {mp}; decay L4 {dl:.3}x, P/K {dp:.3}x (threshold 10x is a desk convention)"
    );
    Ok(ScatteringReport {
        consistent,
        l4_decay: dl,
        pk_decay: dp,
        l4_exponent: fit(&l4),
        pk_exponent: fit(&pk),
        t_peak: t[peak],
        note,
    })
}
