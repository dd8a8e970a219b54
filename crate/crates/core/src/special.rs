//! Exponential series `U_k = sum_j e^{-j lambda1 t} g_j` for the two special
//! threshold solutions and the pipelines that evolve them.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::evolution::{evolve, scattering_diagnostic, Direction, EvolutionConfig, ScatteringReport, Status};
use crate::field::{Field3, MassTriple, C64};
use crate::grid::{RadialGrid, Sector};
use crate::linalg::fit_line;
use crate::linearized::LinearizedOps;
use crate::modulation::{Modulator, TrackSeries};
use crate::spectrum::{compute_lambda1, SpectralPair};
use crate::states::{ground_state, kinetic, potential, refine_discrete, GroundStateBundle};

pub const MAX_ORDER: usize = 8;
/// Smallest accepted pivot of the shifted block factorization, relative to its row scale.
const COLLISION_PIVOT: f64 = 1e-14;

/// The state the series expands around, the operators linearized there and
/// the unstable pair. With `omega != 0` the state is the relative
/// equilibrium `e^{i omega t} q` of the semi-discrete flow and every object
/// lives in the co-rotating frame.
#[derive(Debug, Clone)]
pub struct Background {
    pub gs: GroundStateBundle,
    pub ops: LinearizedOps,
    pub pair: SpectralPair,
    pub omega: f64,
    pub k_ground: f64,
}

impl Background {
    /// Expansion around the discrete relative equilibrium, which keeps the
    /// truncation defect of the closed-form profile out of the dynamics.
    pub fn discrete(masses: &MassTriple, grid: &RadialGrid) -> Result<Self> {
        let gs0 = ground_state(masses, grid);
        let d = refine_discrete(&gs0, grid)?;
        let mut gs = gs0;
        gs.qvec = d.q;
        let ops = LinearizedOps::from_profile(masses, grid, &gs.qvec, d.omega, Sector::Radial)?;
        Self::with_ops(gs, ops, d.omega)
    }

    /// Expansion around the sampled closed-form profile.
    pub fn closed_form(masses: &MassTriple, grid: &RadialGrid) -> Result<Self> {
        let gs = ground_state(masses, grid);
        let ops = LinearizedOps::assemble(masses, grid, &gs)?;
        Self::with_ops(gs, ops, 0.0)
    }

    fn with_ops(gs: GroundStateBundle, ops: LinearizedOps, omega: f64) -> Result<Self> {
        let pair = compute_lambda1(&ops, &gs)?;
        let k_ground = kinetic(ops.grid(), &gs.qvec, &gs.masses);
        Ok(Self { gs, ops, pair, omega, k_ground })
    }

    pub fn grid(&self) -> &RadialGrid {
        self.ops.grid()
    }

    pub fn lambda1(&self) -> f64 {
        self.pair.lambda1
    }

    /// Energy `K - 2P` of the expansion state.
    pub fn energy(&self) -> f64 {
        kinetic(self.grid(), &self.gs.qvec, &self.gs.masses) - 2.0 * potential(self.grid(), &self.gs.qvec)
    }
}

#[derive(Debug, Clone)]
pub struct SeriesApprox {
    pub a: f64,
    pub k: usize,
    /// `g[j - 1]` multiplies `e^{-j lambda1 t}`.
    pub g: Vec<Field3>,
    pub lambda1: f64,
    pub t0: f64,
    /// Relative residual of each shifted solve (`0` for `g_1`).
    pub solve_residuals: Vec<f64>,
    /// Pivot ratio of each shifted factorization (`1` for `g_1`).
    pub pivot_ratios: Vec<f64>,
}

/// Anchor time with `|a| e^{-lambda1 t0} = 0.1`.
pub fn default_t0(a: f64, lambda1: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        (10.0 * a.abs()).ln() / lambda1
    }
}

/// Quadratic and cubic part of `N(q + u) - N(q)`, for real `q`.
pub fn remainder(q: &Field3, u: &Field3) -> Field3 {
    let n = q.n();
    let mut out = Field3::zeros(n);
    for i in 0..n {
        let (q1, q2, q3) = (q.c[0].values[i].re, q.c[1].values[i].re, q.c[2].values[i].re);
        let (u1, u2, u3) = (u.c[0].values[i], u.c[1].values[i], u.c[2].values[i]);
        let c1 = u1.conj();
        out.c[0].values[i] = (u2 * u3 * q1 + c1 * u3 * q2 + c1 * u2 * q3 + c1 * u2 * u3) * 2.0;
        out.c[1].values[i] = u1 * u1 * q3 + u1 * u3.conj() * (2.0 * q1) + u1 * u1 * u3.conj();
        out.c[2].values[i] = u1 * u1 * q2 + u1 * u2.conj() * (2.0 * q1) + u1 * u1 * u2.conj();
    }
    out
}

/// Coefficient of `e^{-m lambda1 t}` in the nonlinear remainder of `q + sum_j e^{-j lambda1 t} g_j`,
/// collected from products whose exponent orders add up to `m` exactly.
pub fn order_coefficient(q: &Field3, g: &[Field3], m: usize) -> Field3 {
    let n = q.n();
    let top = g.len();
    let mut out = Field3::zeros(n);
    let zero = C64::new(0.0, 0.0);
    let mut x = vec![[zero; 3]; top + 1];
    for i in 0..n {
        for k in 0..3 {
            x[0][k] = q.c[k].values[i];
            for p in 1..=top {
                x[p][k] = g[p - 1].c[k].values[i];
            }
        }
        let mut acc = [zero; 3];
        for p in 0..=top.min(m) {
            for r in 0..=top.min(m - p) {
                let s = m - p - r;
                if s > top {
                    continue;
                }
                let nonzero = (p > 0) as usize + (r > 0) as usize + (s > 0) as usize;
                if nonzero < 2 {
                    continue;
                }
                // (p, r, s) index the three factors of each cubic monomial
                acc[0] += x[p][0].conj() * x[r][1] * x[s][2] * 2.0;
                acc[1] += x[p][0] * x[r][0] * x[s][2].conj();
                acc[2] += x[p][0] * x[r][0] * x[s][1].conj();
            }
        }
        for k in 0..3 {
            out.c[k].values[i] = acc[k];
        }
    }
    out
}

fn to_node_major(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len() / 3;
    let mut x = vec![0.0; 6 * n];
    for i in 0..n {
        for k in 0..3 {
            x[6 * i + k] = a[k * n + i];
            x[6 * i + 3 + k] = b[k * n + i];
        }
    }
    x
}

fn from_node_major(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len() / 6;
    let mut a = vec![0.0; 3 * n];
    let mut b = vec![0.0; 3 * n];
    for i in 0..n {
        for k in 0..3 {
            a[k * n + i] = x[6 * i + k];
            b[k * n + i] = x[6 * i + 3 + k];
        }
    }
    (a, b)
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Recursive construction `(calL - (j+1) lambda1) g_{j+1} = i R_{j+1}` on the
/// stacked real system, with one step of iterative refinement per solve.
pub fn build_series(a: f64, k: usize, bg: &Background) -> Result<SeriesApprox> {
    if !(1..=MAX_ORDER).contains(&k) {
        return Err(LabError::InvalidArgument(format!("series order must lie in 1..={MAX_ORDER}, got {k}")));
    }
    if !a.is_finite() {
        return Err(LabError::InvalidArgument("amplitude must be finite".into()));
    }
    let lambda = bg.lambda1();
    let mut g = vec![bg.pair.e_plus().scale(a)];
    let mut solve_residuals = vec![0.0];
    let mut pivot_ratios = vec![1.0];
    for j in 1..k {
        let shift = (j + 1) as f64 * lambda;
        let r = order_coefficient(&bg.gs.qvec, &g, j + 1);
        let ri = r.times_i();
        let rhs = to_node_major(&ri.re_stack(), &ri.im_stack());
        let mat = bg.ops.block_banded(shift);
        let check = mat.clone();
        let lu = mat.factor().map_err(|_| LabError::SpectrumCollision { shift, pivot: 0.0 })?;
        if lu.pivot_ratio < COLLISION_PIVOT {
            return Err(LabError::SpectrumCollision { shift, pivot: lu.pivot_ratio });
        }
        let mut x = lu.solve(&rhs);
        let res: Vec<f64> = check.matvec(&x).iter().zip(&rhs).map(|(p, q)| q - p).collect();
        let dx = lu.solve(&res);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
        let res: Vec<f64> = check.matvec(&x).iter().zip(&rhs).map(|(p, q)| q - p).collect();
        let scale = norm2(&rhs);
        solve_residuals.push(if scale > 0.0 { norm2(&res) / scale } else { 0.0 });
        pivot_ratios.push(lu.pivot_ratio);
        let (re, im) = from_node_major(&x);
        g.push(Field3::from_stacks(&re, &im));
    }
    Ok(SeriesApprox { a, k, g, lambda1: lambda, t0: default_t0(a, lambda), solve_residuals, pivot_ratios })
}

impl SeriesApprox {
    /// `U_k(t)`.
    pub fn field(&self, t: f64) -> Field3 {
        let n = self.g[0].n();
        let mut u = Field3::zeros(n);
        for (j, gj) in self.g.iter().enumerate() {
            u = u.axpy((-((j + 1) as f64) * self.lambda1 * t).exp(), gj);
        }
        u
    }

    /// Largest `|g_j|` beyond `r_max / 2` relative to its maximum, over all orders;
    /// a grid surrogate for rapid decay of the profiles.
    pub fn tail_ratio(&self, grid: &RadialGrid) -> f64 {
        let half = grid.r_max() / 2.0;
        let mut worst = 0.0f64;
        for gj in &self.g {
            let peak = gj.max_abs();
            if peak == 0.0 {
                continue;
            }
            let mut tail = 0.0f64;
            for c in &gj.c {
                for (v, &r) in c.values.iter().zip(grid.r()) {
                    if r > half {
                        tail = tail.max(v.norm());
                    }
                }
            }
            worst = worst.max(tail / peak);
        }
        worst
    }

    /// `d/dt U_k(t)`, applied to the exponentials.
    pub fn time_derivative(&self, t: f64) -> Field3 {
        let n = self.g[0].n();
        let mut u = Field3::zeros(n);
        for (j, gj) in self.g.iter().enumerate() {
            let l = (j + 1) as f64 * self.lambda1;
            u = u.axpy(-l * (-l * t).exp(), gj);
        }
        u
    }
}

/// `||d_t U_k + calL U_k - i R(U_k)||` in the Hilbert norm, evaluated directly
/// from the full nonlinearity.
pub fn residual_epsilon(series: &SeriesApprox, bg: &Background, t: f64) -> f64 {
    let u = series.field(t);
    let du = series.time_derivative(t);
    let (la, lb) = bg.ops.apply_block(&u.re_stack(), &u.im_stack());
    let lu = Field3::from_stacks(&la, &lb);
    let r = remainder(&bg.gs.qvec, &u).times_i();
    du.add(&lu).sub(&r).h1_norm(bg.grid())
}

/// Fitted log-slope of `residual_epsilon` over `[t, t + span]`.
pub fn residual_slope(series: &SeriesApprox, bg: &Background, t: f64, span: f64, samples: usize) -> (f64, Vec<(f64, f64)>) {
    let pts: Vec<(f64, f64)> = (0..samples)
        .map(|i| {
            let s = t + span * i as f64 / (samples - 1) as f64;
            (s, residual_epsilon(series, bg, s))
        })
        .collect();
    let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let (slope, _) = fit_line(&x, &y);
    (-slope, pts)
}

/// `q + U_k(t0)`, provided the series residual there is below `tol`.
pub fn make_initial_data(series: &SeriesApprox, bg: &Background, t0: f64, tol: f64) -> Result<Field3> {
    let residual = residual_epsilon(series, bg, t0);
    if !(residual <= tol) {
        return Err(LabError::SeedTolerance { tolerance: tol, residual, order: series.k });
    }
    Ok(bg.gs.qvec.add(&series.field(t0)))
}

/// Default seed tolerance `1e-6 K(Q)`.
pub fn default_seed_tolerance(bg: &Background) -> f64 {
    1e-6 * bg.k_ground
}

#[derive(Debug, Clone, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpecialConfig {
    pub k: usize,
    /// Anchor time; `None` selects `|a| e^{-lambda1 t0} = 0.1`.
    pub t0: Option<f64>,
    /// Seed tolerance as a multiple of `K(Q)`.
    pub seed_tolerance: f64,
    /// Forward window length in units of `1/lambda1`.
    pub forward_span: f64,
    /// Number of modulation samples along the forward window.
    pub forward_samples: usize,
    pub forward: EvolutionConfig,
    pub backward: EvolutionConfig,
}

impl Default for SpecialConfig {
    fn default() -> Self {
        Self {
            k: 8,
            t0: None,
            seed_tolerance: 1e-6,
            forward_span: 6.0,
            forward_samples: 61,
            forward: EvolutionConfig { dt: 1e-2, sample_every: 50, ..Default::default() },
            backward: EvolutionConfig {
                dt: 1e-2,
                direction: Direction::Backward,
                sample_every: 20,
                dt_max: Some(1.0),
                t_end: 6000.0,
                ..Default::default()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayFit {
    pub rate: f64,
    pub ratio_to_lambda1: f64,
}

fn fit_decay(t: &[f64], y: &[f64], lambda1: f64) -> DecayFit {
    let pts: Vec<(f64, f64)> = t.iter().zip(y).filter(|(_, v)| **v > 0.0).map(|(a, b)| (*a, b.ln())).collect();
    if pts.len() < 3 {
        return DecayFit { rate: f64::NAN, ratio_to_lambda1: f64::NAN };
    }
    let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let v: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let rate = -fit_line(&x, &v).0;
    DecayFit { rate, ratio_to_lambda1: rate / lambda1 }
}

#[derive(Debug, Clone, Serialize)]
pub struct ForwardReport {
    pub t0: f64,
    pub k_initial: f64,
    pub energy_defect: f64,
    pub status: Status,
    pub delta_fit: DecayFit,
    pub alpha_fit: DecayFit,
    pub h_fit: DecayFit,
    pub track: TrackSeries,
}

#[derive(Debug, Clone, Serialize)]
pub struct BackwardReport {
    pub status: Status,
    pub scattering: Option<ScatteringReport>,
    pub note: String,
    pub times: Vec<f64>,
    pub kinetic: Vec<f64>,
    pub l4: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub a: f64,
    pub lambda1: f64,
    pub k: usize,
    pub residual_t0: f64,
    pub forward: ForwardReport,
    pub backward: Option<BackwardReport>,
    /// Forward fit within 10% of `lambda1` and the backward behavior matching the sign of `a`.
    pub passed: bool,
}

fn anchor(a: f64, cfg: &SpecialConfig, bg: &Background) -> f64 {
    cfg.t0.unwrap_or_else(|| default_t0(a, bg.lambda1()))
}

/// Forward leg: evolve `q + U_k(t0)` over `forward_span / lambda1` and fit the
/// decay of the modulation quantities.
pub fn verify_forward(a: f64, cfg: &SpecialConfig, bg: &Background) -> Result<(SeriesApprox, f64, ForwardReport)> {
    let series = build_series(a, cfg.k, bg)?;
    let t0 = anchor(a, cfg, bg);
    let tol = cfg.seed_tolerance * bg.k_ground;
    let u0 = make_initial_data(&series, bg, t0, tol)?;
    let residual_t0 = residual_epsilon(&series, bg, t0);
    let grid = bg.grid();
    let masses = bg.gs.masses;
    let span = cfg.forward_span / bg.lambda1();
    let ns = cfg.forward_samples.max(3);
    let mut fcfg = cfg.forward.clone();
    fcfg.direction = Direction::Forward;
    fcfg.t_end = span;
    fcfg.checkpoints = (0..ns).map(|i| span * i as f64 / (ns - 1) as f64).collect();
    let trace = evolve(&u0, &fcfg, &masses, grid, bg.k_ground)?;
    let e0 = kinetic(grid, &u0, &masses) - 2.0 * potential(grid, &u0);
    let modulator = Modulator::new(grid, &bg.gs, &bg.ops)?;
    let samples: Vec<(f64, Field3)> = trace.snapshots.iter().map(|(t, u)| (t0 + t, u.clone())).collect();
    let track = modulator.track(&samples);
    let times = track.times();
    let pick = |f: fn(&crate::modulation::TrackPoint) -> f64| -> Vec<f64> { track.points.iter().map(f).collect() };
    let lambda = bg.lambda1();
    let report = ForwardReport {
        t0,
        k_initial: kinetic(grid, &u0, &masses),
        energy_defect: (e0 - bg.energy()).abs(),
        status: trace.status,
        delta_fit: fit_decay(&times, &pick(|p| p.delta), lambda),
        alpha_fit: fit_decay(&times, &pick(|p| p.alpha.abs()), lambda),
        h_fit: fit_decay(&times, &pick(|p| p.h_norm), lambda),
        track,
    };
    Ok((series, residual_t0, report))
}

/// Backward leg: `a > 0` should end in a detected blow-up, `a < 0` should disperse.
pub fn verify_backward(a: f64, cfg: &SpecialConfig, bg: &Background, series: &SeriesApprox) -> Result<BackwardReport> {
    let t0 = anchor(a, cfg, bg);
    let u0 = make_initial_data(series, bg, t0, cfg.seed_tolerance * bg.k_ground)?;
    let mut bcfg = cfg.backward.clone();
    bcfg.direction = Direction::Backward;
    let trace = evolve(&u0, &bcfg, &bg.gs.masses, bg.grid(), bg.k_ground)?;
    let scattering = if trace.status == Status::Completed { scattering_diagnostic(&trace).ok() } else { None };
    let note = match (&trace.status, &scattering) {
        (Status::BlowupDetected { t_star }, _) => format!("blow-up detected at t = {:.4}", t0 + t_star),
        (Status::Completed, Some(s)) if s.consistent => "scattering-consistent".into(),
        (Status::Completed, Some(s)) => format!("not scattering-consistent: {}", s.note),
        (Status::Completed, None) => "inconclusive".into(),
        (Status::Diverged { t }, _) => format!("diverged at t = {:.4}", t0 + t),
    };
    Ok(BackwardReport {
        status: trace.status,
        scattering,
        note,
        times: trace.times.iter().map(|t| t0 + t).collect(),
        kinetic: trace.reports.iter().map(|r| r.k).collect(),
        l4: trace.l4.clone(),
    })
}

/// Forward fit within 10% of `lambda1` (or a motionless track for `a = 0`)
/// and, when present, the backward behavior matching the sign of `a`.
pub fn scenario_passed(a: f64, bg: &Background, forward: &ForwardReport, backward: Option<&BackwardReport>) -> bool {
    let fit_ok = if a == 0.0 {
        // stationary run: nothing may move
        forward.track.points.iter().all(|p| p.delta < 1e-8 * bg.k_ground)
    } else {
        (0.9..=1.1).contains(&forward.delta_fit.ratio_to_lambda1)
    };
    let back_ok = backward.is_none_or(|b| {
        if a == 0.0 {
            b.status == Status::Completed
        } else if a > 0.0 {
            matches!(b.status, Status::BlowupDetected { .. })
        } else {
            b.scattering.as_ref().is_some_and(|s| s.consistent)
        }
    });
    fit_ok && back_ok
}

/// Both legs for one sign; the backward leg runs on `backward_bg`, which may
/// use a larger domain than the forward leg.
pub fn verify_special(a: f64, cfg: &SpecialConfig, bg: &Background, backward_bg: Option<&Background>) -> Result<ScenarioReport> {
    let (series, residual_t0, forward) = verify_forward(a, cfg, bg)?;
    let backward = match backward_bg {
        Some(b) => {
            let s = if std::ptr::eq(b, bg) { series.clone() } else { build_series(a, cfg.k, b)? };
            Some(verify_backward(a, cfg, b, &s)?)
        }
        None => None,
    };
    let passed = scenario_passed(a, bg, &forward, backward.as_ref());
    Ok(ScenarioReport {
        a,
        lambda1: bg.lambda1(),
        k: cfg.k,
        residual_t0,
        forward,
        backward,
        passed,
    })
}
