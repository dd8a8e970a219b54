//! Ground-state family, symmetry action and the conserved/variational functionals.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::field::{Field3, MassTriple, RadialField, C64};
use crate::grid::{RadialGrid, Sector};
use crate::linalg::{BandedMatrix, BandedLu};

/// The scalar bubble `(1 + r^2/8)^{-1}`, which solves `-Delta Q = Q^3` in R^4.
pub fn bubble(r: f64) -> f64 {
    1.0 / (1.0 + r * r / 8.0)
}

/// `r Q'(r)` for the bubble.
pub fn bubble_r_dr(r: f64) -> f64 {
    let q = bubble(r);
    -0.25 * r * r * q * q
}

/// Amplitudes `(Q_1, Q_2, Q_3) = c * Q` of the vector ground state.
pub fn ground_coefficients(m: &MassTriple) -> [f64; 3] {
    let (m1, m2, m3) = (m.m1(), m.m2(), m.m3());
    [
        (4.0 * m2 * m3).powf(-0.25),
        0.5 * (m2 / (m1 * m1 * m3)).powf(0.25),
        0.5 * (m3 / (m1 * m1 * m2)).powf(0.25),
    ]
}

#[derive(Debug, Clone)]
pub struct GroundStateBundle {
    /// Scalar bubble sampled on the grid.
    pub q: Vec<f64>,
    pub qvec: Field3,
    /// Generator of the first phase rotation, `(Q_1, 2Q_2, 0)`.
    pub qp: Field3,
    /// Generator of the second phase rotation, `(2Q_1, -Q_2, 5Q_3)`.
    pub qq: Field3,
    /// Scaling generator `Q_j + r dQ_j/dr`.
    pub lambda_q: Field3,
    pub masses: MassTriple,
    pub coef: [f64; 3],
}

impl GroundStateBundle {
    pub fn n(&self) -> usize {
        self.q.len()
    }

    /// Scalar scaling generator `Q + r Q'`.
    pub fn lambda_scalar(&self, grid: &RadialGrid) -> Vec<f64> {
        grid.r().iter().map(|&r| bubble(r) + bubble_r_dr(r)).collect()
    }
}

pub fn ground_state(masses: &MassTriple, grid: &RadialGrid) -> GroundStateBundle {
    let c = ground_coefficients(masses);
    let q: Vec<f64> = grid.r().iter().map(|&r| bubble(r)).collect();
    let lq: Vec<f64> = grid.r().iter().map(|&r| bubble(r) + bubble_r_dr(r)).collect();
    let scaled = |v: &[f64], a: [f64; 3]| {
        let parts: Vec<Vec<f64>> = a.iter().map(|ak| v.iter().map(|x| ak * x).collect()).collect();
        Field3::from_real([&parts[0], &parts[1], &parts[2]])
    };
    GroundStateBundle {
        qvec: scaled(&q, c),
        qp: scaled(&q, [c[0], 2.0 * c[1], 0.0]),
        qq: scaled(&q, [2.0 * c[0], -c[1], 5.0 * c[2]]),
        lambda_q: scaled(&lq, c),
        q,
        masses: *masses,
        coef: c,
    }
}

/// Nonlinear terms `(2 conj(u1) u2 u3, u1^2 conj(u3), u1^2 conj(u2))` at one node.
#[inline]
pub fn nonlinearity(u1: C64, u2: C64, u3: C64) -> [C64; 3] {
    [u1.conj() * u2 * u3 * 2.0, u1 * u1 * u3.conj(), u1 * u1 * u2.conj()]
}

/// Residual of the stationary system `-(1/2m_k) Delta Q_k - N_k(Q) = 0`,
/// per component, relative to the max-norm of the nonlinear term.
pub fn stationary_residual(gs: &GroundStateBundle, grid: &RadialGrid) -> [f64; 3] {
    let kin = gs.masses.kinetic();
    let q = &gs.qvec;
    let mut out = [0.0; 3];
    let n = grid.n();
    let lap: Vec<Vec<f64>> = (0..3).map(|k| grid.laplacian_real(&q.c[k].re(), Sector::Radial)).collect();
    for (k, o) in out.iter_mut().enumerate() {
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for i in 0..n {
            let nl = nonlinearity(q.c[0].values[i], q.c[1].values[i], q.c[2].values[i])[k].re;
            num = num.max((-kin[k] * lap[k][i] - nl).abs());
            den = den.max(nl.abs());
        }
        *o = num / den;
    }
    out
}

/// A relative equilibrium `u_k(t) = e^{i omega t} q_k` of the semi-discrete flow.
/// Its profile is within O(n^-2) of the closed-form ground state; `omega`
/// absorbs the truncation and discretization defect of the scaling mode.
#[derive(Debug, Clone)]
pub struct DiscreteGroundState {
    pub q: Field3,
    pub omega: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Bordered Newton solve for `-(1/2m_k) Delta_h q_k + omega q_k = N_k(q)`,
/// pinning the scale with a core-localized projection on the scaling generator.
pub fn refine_discrete(gs: &GroundStateBundle, grid: &RadialGrid) -> Result<DiscreteGroundState> {
    let n = grid.n();
    let kin = gs.masses.kinetic();
    let (sd, so) = grid.stiffness();
    let w = grid.weights();
    let q0: Vec<f64> = gs.qvec.re_stack();
    // pin functional: sum_k int (q_k - Q_k) LambdaQ_k Q^2
    let pin: Vec<f64> = (0..3 * n)
        .map(|j| {
            let i = j % n;
            w[i] * gs.lambda_q.c[j / n].values[i].re * gs.q[i] * gs.q[i]
        })
        .collect();
    let mut q = q0.clone();
    let mut omega = 0.0;
    let residual = |q: &[f64], omega: f64| -> Vec<f64> {
        // weak form: S q_k / 2m_k + W (omega q_k - N_k)
        let mut f = vec![0.0; 3 * n];
        for i in 0..n {
            let (a, b, c) = (q[i], q[n + i], q[2 * n + i]);
            let nl = [2.0 * a * b * c, a * a * c, a * a * b];
            for k in 0..3 {
                let x = |j: usize| q[k * n + j];
                let mut s = sd[i] * x(i);
                if i > 0 {
                    s += so[i - 1] * x(i - 1);
                }
                if i + 1 < n {
                    s += so[i] * x(i + 1);
                }
                f[k * n + i] = kin[k] * s + w[i] * (omega * x(i) - nl[k]);
            }
        }
        f
    };
    let scale: f64 = w.iter().zip(&gs.q).map(|(wi, qi)| wi * qi.powi(3)).fold(0.0, f64::max);
    let mut last = f64::INFINITY;
    for it in 0..30 {
        let f = residual(&q, omega);
        let fnorm = f.iter().enumerate().map(|(j, v)| (v / w[j % n]).abs()).fold(0.0, f64::max);
        let pin_val: f64 = pin.iter().zip(q.iter().zip(&q0)).map(|(p, (a, b))| p * (a - b)).sum();
        last = fnorm;
        // node-major unknowns 3i + k, plus omega as the last unknown
        let dim = 3 * n + 1;
        let bw = 5;
        let mut jac = BorderedSystem::new(dim, bw);
        for i in 0..n {
            let (a, b, c) = (q[i], q[n + i], q[2 * n + i]);
            let dn = [
                [2.0 * b * c, 2.0 * a * c, 2.0 * a * b],
                [2.0 * a * c, 0.0, a * a],
                [2.0 * a * b, a * a, 0.0],
            ];
            for k in 0..3 {
                let row = 3 * i + k;
                jac.band.add(row, row, kin[k] * sd[i] + w[i] * omega);
                if i > 0 {
                    jac.band.add(row, row - 3, kin[k] * so[i - 1]);
                }
                if i + 1 < n {
                    jac.band.add(row, row + 3, kin[k] * so[i]);
                }
                for l in 0..3 {
                    jac.band.add(row, 3 * i + l, -w[i] * dn[k][l]);
                }
                jac.col[row] = w[i] * q[k * n + i];
                jac.row[row] = pin[k * n + i];
            }
        }
        let mut rhs = vec![0.0; dim];
        for i in 0..n {
            for k in 0..3 {
                rhs[3 * i + k] = -f[k * n + i];
            }
        }
        rhs[dim - 1] = -pin_val;
        let d = jac.solve(&rhs)?;
        let mut step = 0.0f64;
        for i in 0..n {
            for k in 0..3 {
                q[k * n + i] += d[3 * i + k];
                step = step.max(d[3 * i + k].abs());
            }
        }
        omega += d[dim - 1];
        if step < 1e-13 || (it > 2 && fnorm < 1e-10 * scale.max(1.0)) {
            let f = residual(&q, omega);
            last = f.iter().enumerate().map(|(j, v)| (v / w[j % n]).abs()).fold(0.0, f64::max);
            return Ok(DiscreteGroundState {
                q: Field3::from_real_stack(&q),
                omega,
                residual: last,
                iterations: it + 1,
            });
        }
    }
    Err(LabError::NoConvergence(format!("discrete ground state residual stalled at {last:.3e}")))
}

/// Banded matrix plus one dense border row and column, solved by block elimination.
struct BorderedSystem {
    band: BandedMatrix,
    col: Vec<f64>,
    row: Vec<f64>,
    n: usize,
}

impl BorderedSystem {
    fn new(dim: usize, bw: usize) -> Self {
        let n = dim - 1;
        Self { band: BandedMatrix::zeros(n, bw, bw), col: vec![0.0; n], row: vec![0.0; n], n }
    }

    fn solve(self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        let lu: BandedLu = self.band.factor()?;
        let y = lu.solve(&rhs[..n]);
        let z = lu.solve(&self.col);
        let ry: f64 = self.row.iter().zip(&y).map(|(a, b)| a * b).sum();
        let rz: f64 = self.row.iter().zip(&z).map(|(a, b)| a * b).sum();
        let s = (rhs[n] - ry) / (-rz);
        let mut x: Vec<f64> = y.iter().zip(&z).map(|(a, b)| a - s * b).collect();
        x.push(s);
        Ok(x)
    }
}

/// Result of the symmetry action. `overflow` carries the fraction of the
/// Dirichlet energy pushed beyond `r_max` (or unresolved near the origin)
/// when that fraction is not negligible.
#[derive(Debug, Clone)]
pub struct Transformed {
    pub field: Field3,
    pub overflow: Option<String>,
}

/// Cubic interpolation of a profile at radius `r`. Inside the first cell the
/// profile is interpolated as an even (sector 0) or odd (sector 1) function;
/// beyond the last node the Dirichlet wall value 0 is used as a node.
pub fn interpolate(grid: &RadialGrid, f: &[C64], sector: Sector, r: f64) -> C64 {
    let n = grid.n();
    let zero = C64::new(0.0, 0.0);
    if r >= grid.r_max() {
        return zero;
    }
    let rr = grid.r();
    let x = grid.index_coordinate(r);
    if x < 1.0 {
        // Lagrange in r^2 on the first four nodes
        let t = r * r;
        let ts: Vec<f64> = (0..4).map(|i| rr[i] * rr[i]).collect();
        let mut acc = zero;
        for j in 0..4 {
            let mut l = 1.0;
            for m in 0..4 {
                if m != j {
                    l *= (t - ts[m]) / (ts[j] - ts[m]);
                }
            }
            let v = match sector {
                Sector::Radial => f[j],
                Sector::Odd => f[j] / rr[j],
            };
            acc += v * l;
        }
        return match sector {
            Sector::Radial => acc,
            Sector::Odd => acc * r,
        };
    }
    let s = grid.s_of_r(r);
    let h = grid.spacing();
    let j = (x.floor() as usize).min(n - 2);
    let (idx, vals): ([f64; 4], [C64; 4]) = if j + 2 <= n - 1 {
        let ids = [j - 1, j, j + 1, j + 2];
        (ids.map(|i| (i as f64 + 0.5) * h), ids.map(|i| f[i]))
    } else {
        // last interval: nodes n-3, n-2, n-1 and the wall
        let s_wall = grid.s_of_r(grid.r_max());
        (
            [(n as f64 - 2.5) * h, (n as f64 - 1.5) * h, (n as f64 - 0.5) * h, s_wall],
            [f[n - 3], f[n - 2], f[n - 1], zero],
        )
    };
    let mut acc = zero;
    for a in 0..4 {
        let mut l = 1.0;
        for b in 0..4 {
            if a != b {
                l *= (s - idx[b]) / (idx[a] - idx[b]);
            }
        }
        acc += vals[a] * l;
    }
    acc
}

/// `u_[theta1, theta2, lambda]`: phases `(theta1+theta2, 2 theta1, 2 theta2)` and
/// the energy-critical rescaling `lambda^{-1} u(x / lambda)`.
pub fn apply_symmetry(
    grid: &RadialGrid,
    u: &Field3,
    theta1: f64,
    theta2: f64,
    lambda: f64,
) -> Result<Transformed> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(invalid(format!("scale must be positive, got {lambda}")));
    }
    grid.check_len(u.n())?;
    let phases = [theta1 + theta2, 2.0 * theta1, 2.0 * theta2].map(|p| C64::from_polar(1.0, p));
    let sector = u.sector();
    let mut out = u.clone();
    let identity_scale = lambda == 1.0;
    for k in 0..3 {
        let src = &u.c[k].values;
        for (i, v) in out.c[k].values.iter_mut().enumerate() {
            let base = if identity_scale {
                src[i]
            } else {
                interpolate(grid, src, sector, grid.r()[i] / lambda) / lambda
            };
            *v = base * phases[k];
        }
    }
    let overflow = if identity_scale { None } else { overflow_note(grid, u, lambda) };
    Ok(Transformed { field: out, overflow })
}

fn overflow_note(grid: &RadialGrid, u: &Field3, lambda: f64) -> Option<String> {
    let n = grid.n();
    let grad: Vec<f64> = {
        let mut g = vec![0.0; n];
        for f in &u.c {
            let re = grid.gradient_sq_real(&f.re(), f.sector);
            let im = grid.gradient_sq_real(&f.im(), f.sector);
            for i in 0..n {
                g[i] += re[i] + im[i];
            }
        }
        g
    };
    let total = grid.integrate_unchecked(&grad);
    if total <= 0.0 {
        return None;
    }
    if lambda > 1.0 {
        // original content beyond r_max / lambda leaves the grid
        let inner = grid.integrate_ball(&grad, grid.r_max() / lambda).unwrap_or(total);
        let lost = (total - inner) / total;
        (lost > 1e-5).then(|| format!("scale {lambda} pushes {lost:.2e} of the Dirichlet energy past r_max"))
    } else {
        // original content inside r_1 / lambda collapses into the first cell
        let r1 = grid.r()[1];
        let inner = grid.integrate_ball(&grad, r1 / lambda).unwrap_or(0.0);
        let frac = inner / total;
        (frac > 1e-3).then(|| format!("scale {lambda} compresses {frac:.2e} of the Dirichlet energy below the first cell"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "P")]
    pub p: f64,
    #[serde(rename = "E")]
    pub e: f64,
    pub nehari: f64,
    pub delta_signed: f64,
    pub delta_abs: f64,
    pub charge12: f64,
    pub charge13: f64,
    pub gn_ratio: f64,
}

/// Kinetic functional `sum_k (1/2m_k) ||grad u_k||^2`, using the Dirichlet form
/// that matches the discrete Laplacian.
pub fn kinetic(grid: &RadialGrid, u: &Field3, masses: &MassTriple) -> f64 {
    let kin = masses.kinetic();
    (0..3)
        .map(|k| {
            let f = &u.c[k];
            kin[k] * (grid.dirichlet_form(&f.re(), &f.re()) + grid.dirichlet_form(&f.im(), &f.im()))
        })
        .sum()
}

/// Part of `kinetic` carried by the Dirichlet wall at `r_max`. Fields that do
/// not vanish there, such as the algebraically decaying `Q`, pick up this
/// truncation term on top of the interior discretization error.
pub fn kinetic_wall(grid: &RadialGrid, u: &Field3, masses: &MassTriple) -> f64 {
    let kin = masses.kinetic();
    (0..3)
        .map(|k| {
            let f = &u.c[k];
            kin[k] * (grid.wall_form(&f.re(), &f.re()) + grid.wall_form(&f.im(), &f.im()))
        })
        .sum()
}

/// Potential functional `Re int conj(u1)^2 u2 u3`.
pub fn potential(grid: &RadialGrid, u: &Field3) -> f64 {
    let d: Vec<f64> = (0..grid.n())
        .map(|i| {
            let (a, b, c) = (u.c[0].values[i], u.c[1].values[i], u.c[2].values[i]);
            (a.conj() * a.conj() * b * c).re
        })
        .collect();
    grid.integrate_unchecked(&d)
}

/// Component masses `int |u_k|^2`.
pub fn component_masses(grid: &RadialGrid, u: &Field3) -> [f64; 3] {
    [0, 1, 2].map(|k| {
        let d: Vec<f64> = u.c[k].values.iter().map(|v| v.norm_sqr()).collect();
        grid.integrate_unchecked(&d)
    })
}

pub fn functionals(grid: &RadialGrid, u: &Field3, masses: &MassTriple, k_ground: f64) -> Result<FunctionalReport> {
    grid.check_len(u.n())?;
    let k = kinetic(grid, u, masses);
    let p = potential(grid, u);
    let m = component_masses(grid, u);
    let delta = k_ground - k;
    Ok(FunctionalReport {
        k,
        p,
        e: k - 2.0 * p,
        nehari: k - 4.0 * p,
        delta_signed: delta,
        delta_abs: delta.abs(),
        charge12: m[0] + 2.0 * m[1],
        charge13: m[0] + 2.0 * m[2],
        gn_ratio: if k == 0.0 { 0.0 } else { p.abs() / (k * k) },
    })
}

/// Functionals with `delta` measured against the bundle's ground state.
pub fn report(grid: &RadialGrid, u: &Field3, gs: &GroundStateBundle) -> Result<FunctionalReport> {
    let kq = kinetic(grid, &gs.qvec, &gs.masses);
    functionals(grid, u, &gs.masses, kq)
}

/// Sharp Sobolev constant `||Q||_{L^4} / ||grad Q||_{L^2}` evaluated on the grid.
pub fn g4_constant(grid: &RadialGrid) -> f64 {
    let q: Vec<f64> = grid.r().iter().map(|&r| bubble(r)).collect();
    let q4: Vec<f64> = q.iter().map(|v| v.powi(4)).collect();
    let l4 = grid.integrate_unchecked(&q4).powf(0.25);
    let grad = grid.dirichlet_form(&q, &q).sqrt();
    l4 / grad
}

/// Sharp constant of `|P(u)| <= G_S K(u)^2`, namely `(m1 sqrt(m2 m3)/2) G_4^4`.
pub fn gn_constant(masses: &MassTriple, grid: &RadialGrid) -> f64 {
    let g4 = g4_constant(grid);
    0.5 * masses.m1() * (masses.m2() * masses.m3()).sqrt() * g4.powi(4)
}

/// Closed form of `G_4 = (32 pi^2 / 3)^{-1/4}`.
pub fn g4_exact() -> f64 {
    (32.0 * std::f64::consts::PI.powi(2) / 3.0).powf(-0.25)
}

/// Builds a radial field from a closure of `r`.
pub fn sample(grid: &RadialGrid, f: impl Fn(f64) -> f64) -> RadialField {
    let v: Vec<f64> = grid.r().iter().map(|&r| f(r)).collect();
    RadialField::from_real(&v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn setup(m: [f64; 3], n: usize) -> (RadialGrid, GroundStateBundle) {
        let g = RadialGrid::stretched(1.0e4, n, 8.0).unwrap();
        let masses = MassTriple::new(m[0], m[1], m[2]).unwrap();
        let gs = ground_state(&masses, &g);
        (g, gs)
    }

    #[test]
    fn closed_form_values() {
        let (g, gs) = setup([1.0, 1.0, 1.0], 256);
        assert_eq!(bubble(0.0), 1.0);
        for i in 0..g.n() {
            assert_eq!(gs.qvec.c[1].values[i], gs.qvec.c[2].values[i]);
        }
        let c = gs.coef;
        // Q2 Q3 = Q^2 / (4 m1)
        assert!((c[1] * c[2] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn stationary_residual_is_small() {
        let (g, gs) = setup([1.0, 1.0, 3.0], 4096);
        let r = stationary_residual(&gs, &g);
        assert!(r.iter().all(|v| *v < 1e-3), "{r:?}");
        let (g2, gs2) = setup([1.0, 1.0, 3.0], 2048);
        let r2 = stationary_residual(&gs2, &g2);
        let ratio = r2[0] / r[0];
        assert!(ratio > 3.0 && ratio < 5.0, "ratio {ratio}");
    }

    #[test]
    fn pohozaev_and_energy() {
        let (g, gs) = setup([1.0, 1.0, 3.0], 4096);
        let rep = report(&g, &gs.qvec, &gs).unwrap();
        assert!(rep.nehari.abs() / rep.k < 1e-5);
        assert!((rep.e - rep.k / 2.0).abs() / rep.k < 1e-5);
        assert_eq!(rep.delta_signed, 0.0);
        let zero = report(&g, &Field3::zeros(g.n()), &gs).unwrap();
        assert_eq!((zero.k, zero.p, zero.e, zero.gn_ratio), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn gn_equality_at_ground_state() {
        let (g, gs) = setup([1.0, 2.0, 4.0], 4096);
        let rep = report(&g, &gs.qvec, &gs).unwrap();
        let gsc = gn_constant(&gs.masses, &g);
        assert!((rep.gn_ratio - gsc).abs() / gsc < 1e-5);
        assert!((g4_constant(&g) - g4_exact()).abs() < 1e-5);
        let bump = sample(&g, |r| (-(r - 2.0).powi(2)).exp());
        let mut u = gs.qvec.clone();
        for k in 0..3 {
            for (v, b) in u.c[k].values.iter_mut().zip(&bump.values) {
                *v += b * 0.1;
            }
        }
        let pert = report(&g, &u, &gs).unwrap();
        assert!(pert.gn_ratio < gsc);
        assert!((g4_exact() - (32.0 * PI * PI / 3.0).powf(-0.25)).abs() == 0.0);
    }

    #[test]
    fn symmetry_phases_and_identity() {
        let (g, gs) = setup([1.0, 1.0, 3.0], 512);
        let same = apply_symmetry(&g, &gs.qvec, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(same.field, gs.qvec);
        let t = apply_symmetry(&g, &gs.qvec, PI, 0.0, 1.0).unwrap().field;
        for i in 0..g.n() {
            assert!((t.c[0].values[i] + gs.qvec.c[0].values[i]).norm() < 1e-14);
            assert!((t.c[1].values[i] - gs.qvec.c[1].values[i]).norm() < 1e-14);
            assert!((t.c[2].values[i] - gs.qvec.c[2].values[i]).norm() < 1e-14);
        }
    }

    #[test]
    fn kinetic_is_scale_invariant() {
        let (g, gs) = setup([1.0, 1.0, 3.0], 4096);
        let k0 = kinetic(&g, &gs.qvec, &gs.masses);
        let t = apply_symmetry(&g, &gs.qvec, 0.3, -0.7, 1.5).unwrap();
        assert!(t.overflow.is_none(), "{:?}", t.overflow);
        let k1 = kinetic(&g, &t.field, &gs.masses);
        assert!(((k1 - k0) / k0).abs() < 1e-6, "{}", (k1 - k0) / k0);
        let p0 = potential(&g, &gs.qvec);
        let p1 = potential(&g, &t.field);
        assert!(((p1 - p0) / p0).abs() < 1e-6);
    }

    #[test]
    fn interpolation_reproduces_smooth_profiles() {
        let g = RadialGrid::stretched(1.0e4, 1024, 8.0).unwrap();
        let f: Vec<C64> = g.r().iter().map(|&r| C64::new(bubble(r), 0.0)).collect();
        for &r in &[0.0, 0.001, 0.5, 1.7, 10.0, 300.0] {
            let v = interpolate(&g, &f, Sector::Radial, r).re;
            assert!((v - bubble(r)).abs() < 1e-8, "r={r}: {v}");
        }
        assert_eq!(interpolate(&g, &f, Sector::Radial, 2.0e4).re, 0.0);
    }

    #[test]
    fn large_scale_reports_overflow() {
        let (g, gs) = setup([1.0, 1.0, 3.0], 512);
        let t = apply_symmetry(&g, &gs.qvec, 0.0, 0.0, 1.0e5).unwrap();
        assert!(t.overflow.is_some());
        assert!(apply_symmetry(&g, &gs.qvec, 0.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn discrete_refinement_converges_near_closed_form() {
        let (g, gs) = setup([1.0, 1.0, 3.0], 1024);
        let d = refine_discrete(&gs, &g).unwrap();
        assert!(d.omega.abs() < 1e-6, "omega {}", d.omega);
        let diff = d.q.sub(&gs.qvec).max_abs() / gs.qvec.max_abs();
        assert!(diff < 1e-4, "diff {diff}");
        assert!(d.residual < 1e-9, "residual {}", d.residual);
    }
}
