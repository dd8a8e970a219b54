//! Modulation decomposition `u_[eta, theta, mu] = (1 + alpha) Q + h` near the
//! ground-state orbit, with `h` orthogonal to `iQp`, `iQq`, `Lambda Q` in the
//! Hilbert product and `F(Q, h) = 0`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::field::{Field3, C64};
use crate::grid::RadialGrid;
use crate::linearized::LinearizedOps;
use crate::states::{apply_symmetry, kinetic, potential, GroundStateBundle};

const MAX_NEWTON: usize = 50;
const NEWTON_TOL: f64 = 1e-12;
const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct ModulationState {
    pub eta: f64,
    pub theta: f64,
    pub mu: f64,
    pub alpha: f64,
    pub h: Field3,
    pub h_norm: f64,
    /// `|K(Q) - K(u)|`.
    pub delta: f64,
    /// Relative defects of `(h, iQp)`, `(h, iQq)`, `(h, Lambda Q)`, `F(Q, h)` and
    /// of the projection formula for `alpha`.
    pub residuals: [f64; 5],
    pub iterations: usize,
}

impl ModulationState {
    pub fn defect_max(&self) -> f64 {
        self.residuals.iter().fold(0.0, |a, &b| a.max(b))
    }

    pub fn params(&self) -> [f64; 3] {
        [self.eta, self.theta, self.mu]
    }
}

/// Reduces `(eta, theta)` modulo the lattice of trivial phase pairs, generated
/// by `(pi, pi)` and `(0, 2 pi)`, to `eta in (-pi/2, pi/2]`, `theta in (-pi, pi]`.
pub fn canonical_phases(eta: f64, theta: f64) -> (f64, f64) {
    let k = (eta / PI).round();
    let (mut e, mut t) = (eta - k * PI, theta - k * PI);
    if e <= -PI / 2.0 {
        e += PI;
        t += PI;
    }
    t -= 2.0 * PI * (t / (2.0 * PI)).round();
    if t <= -PI {
        t += 2.0 * PI;
    }
    (e, t)
}

/// Lattice representative of `(eta, theta)` nearest to `prev`.
pub fn nearest_branch(eta: f64, theta: f64, prev: (f64, f64)) -> (f64, f64) {
    let (e0, t0) = canonical_phases(eta, theta);
    let (pe, pt) = canonical_phases(prev.0, prev.1);
    let (se, st) = (prev.0 - pe, prev.1 - pt);
    let mut best = (e0 + se, t0 + st);
    let mut dist = f64::INFINITY;
    for k in -2..=2 {
        for m in -2..=2 {
            let c = (e0 + se + k as f64 * PI, t0 + st + k as f64 * PI + 2.0 * m as f64 * PI);
            let d = (c.0 - prev.0).powi(2) + (c.1 - prev.1).powi(2);
            if d < dist {
                dist = d;
                best = c;
            }
        }
    }
    best
}

/// Precomputed directions and normalizations for repeated decompositions.
pub struct Modulator<'a> {
    grid: &'a RadialGrid,
    gs: &'a GroundStateBundle,
    ops: &'a LinearizedOps,
    dirs: [Field3; 3],
    dir_norms: [f64; 3],
    f_qq: f64,
    k_ground: f64,
    q_norm: f64,
    pub delta0: f64,
}

impl<'a> Modulator<'a> {
    pub fn new(grid: &'a RadialGrid, gs: &'a GroundStateBundle, ops: &'a LinearizedOps) -> Result<Self> {
        grid.check_len(gs.n())?;
        if ops.n() != gs.n() {
            return Err(LabError::InvalidArgument("operator and ground state sizes differ".into()));
        }
        let dirs = [gs.qp.times_i(), gs.qq.times_i(), gs.lambda_q.clone()];
        let dir_norms = [0, 1, 2].map(|j| dirs[j].h1_norm(grid));
        let f_qq = ops.form_f(&gs.qvec, &gs.qvec);
        if !(f_qq.abs() > 0.0) {
            return Err(LabError::InvalidArgument("F(Q, Q) vanishes on this grid".into()));
        }
        let k_ground = kinetic(grid, &gs.qvec, &gs.masses);
        Ok(Self {
            grid,
            gs,
            ops,
            dirs,
            dir_norms,
            f_qq,
            k_ground,
            q_norm: gs.qvec.h1_norm(grid),
            delta0: 0.1 * k_ground,
        })
    }

    pub fn with_delta0(mut self, delta0: f64) -> Self {
        self.delta0 = delta0;
        self
    }

    pub fn k_ground(&self) -> f64 {
        self.k_ground
    }

    pub fn q_norm(&self) -> f64 {
        self.q_norm
    }

    pub fn delta(&self, u: &Field3) -> f64 {
        (self.k_ground - kinetic(self.grid, u, &self.gs.masses)).abs()
    }

    fn alpha_of(&self, w: &Field3) -> f64 {
        self.ops.form_f(&self.gs.qvec, w) / self.f_qq - 1.0
    }

    /// Condition vector `((h, iQp), (h, iQq), (h, Lambda Q))` for `x = (eta, theta, log mu)`,
    /// scaled by the direction norms and `||u||`.
    fn conditions(&self, u: &Field3, scale: f64, x: [f64; 3]) -> Result<[f64; 3]> {
        let w = apply_symmetry(self.grid, u, x[0], x[1], x[2].exp())?.field;
        let alpha = self.alpha_of(&w);
        let h = w.axpy(-(1.0 + alpha), &self.gs.qvec);
        Ok([0, 1, 2].map(|j| h.h1_dot(&self.dirs[j], self.grid) / (self.dir_norms[j] * scale)))
    }

    /// Coarse seed: for each trial scale the phases maximizing the Hilbert
    /// overlap with `Q` are found on a fine phase grid.
    pub fn seed(&self, u: &Field3) -> Result<[f64; 3]> {
        let logs: Vec<f64> = (0..=24).map(|i| -1.5 + 0.125 * i as f64).collect();
        let q = &self.gs.qvec;
        let grid = self.grid;
        let scored: Vec<Result<(f64, [f64; 3])>> = logs
            .par_iter()
            .map(|&l| {
                let v = apply_symmetry(grid, u, 0.0, 0.0, l.exp())?.field;
                let c: [C64; 3] = [0, 1, 2].map(|k| {
                    let qk = q.c[k].re();
                    C64::new(grid.dirichlet_form(&v.c[k].re(), &qk), grid.dirichlet_form(&v.c[k].im(), &qk))
                });
                let vv = v.h1_dot(&v, grid);
                let mut best = (f64::INFINITY, [0.0, 0.0, l]);
                let (ne, nt) = (64, 128);
                for a in 0..ne {
                    let eta = -PI / 2.0 + PI * (a as f64 + 0.5) / ne as f64;
                    for b in 0..nt {
                        let theta = -PI + 2.0 * PI * (b as f64 + 0.5) / nt as f64;
                        let ph = [eta + theta, 2.0 * eta, 2.0 * theta];
                        let overlap: f64 = (0..3).map(|k| (C64::from_polar(1.0, ph[k]) * c[k]).re).sum();
                        let d = vv - 2.0 * overlap;
                        if d < best.0 {
                            best = (d, [eta, theta, l]);
                        }
                    }
                }
                Ok(best)
            })
            .collect();
        let mut best = (f64::INFINITY, [0.0, 0.0, 0.0]);
        for s in scored {
            let s = s?;
            if s.0 < best.0 {
                best = s;
            }
        }
        Ok(best.1)
    }

    fn newton(&self, u: &Field3, scale: f64, x0: [f64; 3]) -> Result<([f64; 3], usize)> {
        let norm = |g: &[f64; 3]| g.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut x = x0;
        let mut g = self.conditions(u, scale, x)?;
        for it in 0..MAX_NEWTON {
            if norm(&g) < NEWTON_TOL {
                return Ok((x, it));
            }
            let mut jac = nalgebra::Matrix3::<f64>::zeros();
            for c in 0..3 {
                let mut xp = x;
                let mut xm = x;
                xp[c] += FD_STEP;
                xm[c] -= FD_STEP;
                let (gp, gm) = (self.conditions(u, scale, xp)?, self.conditions(u, scale, xm)?);
                for r in 0..3 {
                    jac[(r, c)] = (gp[r] - gm[r]) / (2.0 * FD_STEP);
                }
            }
            let rhs = nalgebra::Vector3::new(-g[0], -g[1], -g[2]);
            let step = jac
                .lu()
                .solve(&rhs)
                .ok_or_else(|| LabError::NoConvergence("singular modulation Jacobian".into()))?;
            let mut t = 1.0;
            loop {
                let xn = [x[0] + t * step[0], x[1] + t * step[1], x[2] + t * step[2]];
                let gn = self.conditions(u, scale, xn)?;
                if norm(&gn) < norm(&g) || t < 1e-3 {
                    x = xn;
                    g = gn;
                    break;
                }
                t *= 0.5;
            }
        }
        if norm(&g) < NEWTON_TOL {
            return Ok((x, MAX_NEWTON));
        }
        Err(LabError::NoConvergence(format!(
            "modulation conditions stalled at {:.3e} after {MAX_NEWTON} iterations",
            norm(&g)
        )))
    }

    /// Decomposes `u`. Without a guess the Newton iteration is seeded by a
    /// coarse search; a failing warm start falls back to the same search.
    pub fn modulate(&self, u: &Field3, guess: Option<[f64; 3]>) -> Result<ModulationState> {
        self.grid.check_len(u.n())?;
        let delta = self.delta(u);
        if delta > self.delta0 {
            return Err(LabError::InvalidArgument(format!(
                "delta(u) = {delta:.3e} exceeds delta_0 = {:.3e}",
                self.delta0
            )));
        }
        let scale = u.h1_norm(self.grid).max(f64::MIN_POSITIVE);
        let solved = match guess {
            Some([e, t, m]) => {
                if !(m > 0.0) {
                    return Err(LabError::InvalidArgument(format!("scale guess must be positive, got {m}")));
                }
                self.newton(u, scale, [e, t, m.ln()]).or_else(|_| self.newton(u, scale, self.seed(u)?))
            }
            None => self.newton(u, scale, self.seed(u)?),
        };
        let (x, iterations) = solved?;
        let (eta, theta) = match guess {
            Some([e, t, _]) => nearest_branch(x[0], x[1], (e, t)),
            None => canonical_phases(x[0], x[1]),
        };
        let mu = x[2].exp();
        let w = apply_symmetry(self.grid, u, eta, theta, mu)?.field;
        let alpha = self.alpha_of(&w);
        let h = w.axpy(-(1.0 + alpha), &self.gs.qvec);
        let mut residuals = [0.0; 5];
        for j in 0..3 {
            residuals[j] = (h.h1_dot(&self.dirs[j], self.grid) / (self.dir_norms[j] * scale)).abs();
        }
        let wq = self.ops.form_f(&self.gs.qvec, &w);
        residuals[3] = self.ops.form_f(&self.gs.qvec, &h).abs() / (self.f_qq.abs() * scale / self.q_norm);
        residuals[4] = (alpha + 1.0 - wq / self.f_qq).abs();
        Ok(ModulationState {
            eta,
            theta,
            mu,
            alpha,
            h_norm: h.h1_norm(self.grid),
            h,
            delta,
            residuals,
            iterations,
        })
    }

    /// Independent decompositions, each seeded by the coarse search.
    pub fn modulate_batch(&self, fields: &[Field3]) -> Vec<Result<ModulationState>> {
        fields.par_iter().map(|u| self.modulate(u, None)).collect()
    }

    /// Warm-started chain along a trajectory. Phases are continued to the
    /// nearest branch so that finite differences are meaningful.
    pub fn track(&self, samples: &[(f64, Field3)]) -> TrackSeries {
        let mut points: Vec<TrackPoint> = Vec::with_capacity(samples.len());
        let mut status = TrackStatus::Complete;
        let mut guess: Option<[f64; 3]> = None;
        for (t, u) in samples {
            match self.modulate(u, guess) {
                Ok(s) => {
                    guess = Some(s.params());
                    points.push(TrackPoint {
                        t: *t,
                        eta: s.eta,
                        theta: s.theta,
                        mu: s.mu,
                        alpha: s.alpha,
                        delta: s.delta,
                        h_norm: s.h_norm,
                        defect_max: s.defect_max(),
                    });
                }
                Err(e) => {
                    let delta = self.delta(u);
                    status = if delta > self.delta0 {
                        TrackStatus::ExitedTube { t: *t, delta }
                    } else {
                        TrackStatus::Stalled { t: *t, delta, message: e.to_string() }
                    };
                    break;
                }
            }
        }
        let derivatives = derivative_bound(&points);
        let bound_constant = derivatives.iter().map(|d| d.ratio).fold(0.0, f64::max);
        TrackSeries { points, derivatives, bound_constant, status, delta0: self.delta0 }
    }
}

/// One-shot decomposition.
pub fn modulate(
    u: &Field3,
    grid: &RadialGrid,
    gs: &GroundStateBundle,
    ops: &LinearizedOps,
    guess: Option<[f64; 3]>,
) -> Result<ModulationState> {
    Modulator::new(grid, gs, ops)?.modulate(u, guess)
}

/// Smooth complex perturbation built from Gaussian bumps with seeded coefficients.
pub fn smooth_perturbation(grid: &RadialGrid, seed: u64) -> Field3 {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let widths = [0.7, 1.5, 3.0];
    let coef: Vec<[f64; 6]> = (0..3).map(|_| [0; 6].map(|_| rng.random_range(-1.0..1.0))).collect();
    let mut re = vec![0.0; 3 * grid.n()];
    let mut im = vec![0.0; 3 * grid.n()];
    for (i, &r) in grid.r().iter().enumerate() {
        for k in 0..3 {
            for (j, w) in widths.iter().enumerate() {
                let g = (-(r / w) * (r / w)).exp();
                re[k * grid.n() + i] += coef[j][2 * k] * g;
                im[k * grid.n() + i] += coef[j][2 * k + 1] * g;
            }
        }
    }
    Field3::from_stacks(&re, &im)
}

/// Point `(1 + s) Q + eps w` on the threshold surface `E = E(Q)`, taking the
/// root `s` nearest zero. The comparability `delta ~ |alpha| ~ ||h||` holds on
/// this surface; off it, `delta` and `alpha` only see the `Q` content of `w`.
pub fn threshold_perturbation(grid: &RadialGrid, gs: &GroundStateBundle, w: &Field3, eps: f64) -> Result<Field3> {
    let energy = |u: &Field3| kinetic(grid, u, &gs.masses) - 2.0 * potential(grid, u);
    let e_q = energy(&gs.qvec);
    let point = |s: f64| gs.qvec.scale(1.0 + s).axpy(eps, w);
    let g = |s: f64| energy(&point(s)) - e_q;
    let g0 = g(0.0);
    if g0 == 0.0 {
        return Ok(point(0.0));
    }
    let mut bracket = None;
    let mut step = 1e-3 * eps.abs().max(1e-12);
    'scan: while step < 0.5 {
        for s in [step, -step] {
            if g(s).signum() != g0.signum() {
                bracket = Some((0.0, s));
                break 'scan;
            }
        }
        step *= 2.0;
    }
    let (mut a, mut b) = bracket.ok_or_else(|| {
        LabError::InvalidArgument(format!("no threshold-energy point on the Q line through Q + {eps:e} w"))
    })?;
    let ga = g0;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if g(m).signum() == ga.signum() {
            a = m;
        } else {
            b = m;
        }
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs()) {
            break;
        }
    }
    Ok(point(0.5 * (a + b)))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TrackPoint {
    pub t: f64,
    pub eta: f64,
    pub theta: f64,
    pub mu: f64,
    pub alpha: f64,
    pub delta: f64,
    pub h_norm: f64,
    pub defect_max: f64,
}

/// Centered differences of the parameters and the ratio
/// `(|eta'| + |theta'| + |alpha'| + |mu'|/mu) / (mu^2 delta)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DerivativeSample {
    pub t: f64,
    pub eta_dot: f64,
    pub theta_dot: f64,
    pub alpha_dot: f64,
    pub log_mu_dot: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TrackStatus {
    Complete,
    /// The sample left the `delta_0` tube; the series stops there.
    ExitedTube { t: f64, delta: f64 },
    /// Newton failed inside the tube; `delta_0` should be tightened below `delta`.
    Stalled { t: f64, delta: f64, message: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct TrackSeries {
    pub points: Vec<TrackPoint>,
    pub derivatives: Vec<DerivativeSample>,
    pub bound_constant: f64,
    pub status: TrackStatus,
    pub delta0: f64,
}

impl TrackSeries {
    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }
}

fn derivative_bound(points: &[TrackPoint]) -> Vec<DerivativeSample> {
    points
        .windows(3)
        .map(|w| {
            let dt = w[2].t - w[0].t;
            let d = |f: fn(&TrackPoint) -> f64| (f(&w[2]) - f(&w[0])) / dt;
            let eta_dot = d(|p| p.eta);
            let theta_dot = d(|p| p.theta);
            let alpha_dot = d(|p| p.alpha);
            let log_mu_dot = d(|p| p.mu.ln());
            let p = &w[1];
            let scale = p.mu * p.mu * p.delta;
            let sum = eta_dot.abs() + theta_dot.abs() + alpha_dot.abs() + log_mu_dot.abs();
            DerivativeSample {
                t: p.t,
                eta_dot,
                theta_dot,
                alpha_dot,
                log_mu_dot,
                ratio: if scale > 0.0 { sum / scale } else { f64::INFINITY },
            }
        })
        .collect()
}
