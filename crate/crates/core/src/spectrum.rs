//! The unstable eigenvalue of the linearized flow.
//!
//! `T = L_I^{1/2} L_R L_I^{1/2}` is built densely on a moderate grid, which
//! certifies the sign structure of the spectrum. The pair is then polished on
//! the working grid by shifted inverse iteration on the banded block operator.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::field::{Field3, MassTriple, C64};
use crate::grid::{RadialGrid, Sector};
use crate::linalg::sym_eigen;
use crate::linearized::{LinearizedOps, Part};
use crate::states::{interpolate, GroundStateBundle};

/// Largest grid on which dense eigensolves are attempted.
pub const DENSE_CAP: usize = 512;

/// Dense square root of `L_I`, held in the symmetric coordinates `W^{1/2} v`.
#[derive(Debug, Clone)]
pub struct SqrtLi {
    pub matrix: DMatrix<f64>,
    pub min_eigenvalue: f64,
    pub clamp_threshold: f64,
    pub clamped: usize,
}

impl SqrtLi {
    /// Apply to a component-major stack in ordinary coordinates.
    pub fn apply(&self, ops: &LinearizedOps, v: &[f64]) -> Vec<f64> {
        let n = ops.n();
        let w = ops.weights();
        let x = DVector::from_iterator(v.len(), v.iter().enumerate().map(|(j, a)| a * w[j % n].sqrt()));
        let y = &self.matrix * x;
        y.iter().enumerate().map(|(j, a)| a / w[j % n].sqrt()).collect()
    }
}

fn weighted_norm(ops: &LinearizedOps, v: &[f64]) -> f64 {
    ops.l2_dot(v, v).max(0.0).sqrt()
}

/// Relative residual `||L_I Q_p||_W / ||Q_p||_W` of the two phase directions.
pub fn kernel_residual(ops: &LinearizedOps, gs: &GroundStateBundle) -> f64 {
    [gs.qp.re_stack(), gs.qq.re_stack()]
        .iter()
        .map(|v| weighted_norm(ops, &ops.apply(Part::Imag, v)) / weighted_norm(ops, v))
        .fold(0.0, f64::max)
}

/// Square root of `L_I` by dense spectral decomposition. Eigenvalues within
/// ten times the measured kernel residual of zero are clamped to zero.
pub fn sqrt_li(ops: &LinearizedOps, gs: &GroundStateBundle) -> Result<SqrtLi> {
    if ops.n() > DENSE_CAP {
        return Err(LabError::InvalidArgument(format!(
            "dense square root requested at n = {} above the cap {DENSE_CAP}",
            ops.n()
        )));
    }
    let thr = 10.0 * kernel_residual(ops, gs);
    let (vals, vecs) = sym_eigen(ops.dense_symmetric(Part::Imag));
    let min = vals[0];
    if min < -1e-4 {
        return Err(LabError::NotPsd(min));
    }
    let mut clamped = 0;
    let roots: Vec<f64> = vals
        .iter()
        .map(|&v| {
            if v <= thr {
                clamped += usize::from(v.abs() <= thr);
                if v < 0.0 || v.abs() <= thr {
                    return 0.0;
                }
            }
            v.max(0.0).sqrt()
        })
        .collect();
    let d = DMatrix::from_diagonal(&DVector::from_vec(roots));
    let m = &vecs * d * vecs.transpose();
    let matrix = (&m + m.transpose()) * 0.5;
    Ok(SqrtLi { matrix, min_eigenvalue: min, clamp_threshold: thr, clamped })
}

/// Dense `T` in symmetric coordinates and its ascending eigenpairs.
pub struct DenseT {
    pub t: DMatrix<f64>,
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
    pub sqrt: SqrtLi,
}

pub fn dense_t(ops: &LinearizedOps, gs: &GroundStateBundle) -> Result<DenseT> {
    let sqrt = sqrt_li(ops, gs)?;
    let r = ops.dense_symmetric(Part::Real);
    let t = &sqrt.matrix * r * &sqrt.matrix;
    let t = (&t + t.transpose()) * 0.5;
    let (values, vectors) = sym_eigen(t.clone());
    Ok(DenseT { t, values, vectors, sqrt })
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralPair {
    pub lambda1: f64,
    #[serde(skip)]
    pub e1: Field3,
    #[serde(skip)]
    pub e2: Field3,
    /// Eigenvector of `T` (empty when the pair came from inverse iteration only).
    #[serde(skip)]
    pub g: Option<Field3>,
    pub residual_r: f64,
    pub residual_i: f64,
    pub normalization: f64,
    /// Lowest eigenvalues of the dense `T` used for the seed.
    pub t_eigenvalues: Vec<f64>,
    pub n: usize,
}

impl SpectralPair {
    /// `e_+ = e1 + i e2`.
    pub fn e_plus(&self) -> Field3 {
        Field3::from_stacks(&self.e1.re_stack(), &self.e2.re_stack())
    }

    /// `e_- = -conj(e_+)`, so that `calL e_- = -lambda1 e_-` and `F(e_+, e_-) = 1`.
    pub fn e_minus(&self) -> Field3 {
        self.e_plus().conj().scale(-1.0)
    }

    /// Second-lowest over lowest eigenvalue gap of `T`, in units of `lambda1^2`.
    pub fn relative_gap(&self) -> f64 {
        if self.t_eigenvalues.len() < 2 {
            return f64::NAN;
        }
        (self.t_eigenvalues[1] - self.t_eigenvalues[0]) / (self.lambda1 * self.lambda1)
    }
}

/// `(u, v)_K = sum_k (1/2m_k) int grad u_k . grad v_k` for real stacks.
pub fn k_dot(grid: &RadialGrid, masses: &MassTriple, u: &[f64], v: &[f64]) -> f64 {
    let n = grid.n();
    let kin = masses.kinetic();
    (0..3).map(|k| kin[k] * grid.dirichlet_form(&u[k * n..(k + 1) * n], &v[k * n..(k + 1) * n])).sum()
}

/// Residuals `||L_R e1 - l e2|| / ||l e2||` and `||L_I e2 + l e1|| / ||l e1||`.
pub fn pair_residuals(ops: &LinearizedOps, lambda: f64, e1: &[f64], e2: &[f64]) -> (f64, f64) {
    let lr = ops.apply(Part::Real, e1);
    let li = ops.apply(Part::Imag, e2);
    let rr: Vec<f64> = lr.iter().zip(e2).map(|(a, b)| a - lambda * b).collect();
    let ri: Vec<f64> = li.iter().zip(e1).map(|(a, b)| a + lambda * b).collect();
    (
        weighted_norm(ops, &rr) / (lambda * weighted_norm(ops, e2)),
        weighted_norm(ops, &ri) / (lambda * weighted_norm(ops, e1)),
    )
}

/// Scale so that `F(e_+, e_-) = -lambda <e1, e2> = 1` and fix the sign by `(e1, Q)_K > 0`.
fn normalize(ops: &LinearizedOps, gs: &GroundStateBundle, lambda: f64, e1: &mut [f64], e2: &mut [f64]) -> Result<f64> {
    let f = -lambda * ops.l2_dot(e1, e2);
    if !(f > 0.0) {
        return Err(LabError::NoConvergence(format!("eigenpair normalization F(e+, e-) = {f:e} is not positive")));
    }
    let mut s = 1.0 / f.sqrt();
    if k_dot(ops.grid(), ops.masses(), e1, &gs.qvec.re_stack()) < 0.0 {
        s = -s;
    }
    e1.iter_mut().for_each(|v| *v *= s);
    e2.iter_mut().for_each(|v| *v *= s);
    Ok(-lambda * ops.l2_dot(e1, e2))
}

/// Dense computation of the unstable pair on a grid with `n <= DENSE_CAP`.
pub fn compute_lambda1_dense(ops: &LinearizedOps, gs: &GroundStateBundle) -> Result<SpectralPair> {
    let dt = dense_t(ops, gs)?;
    let min = dt.values[0];
    if min >= 0.0 {
        return Err(LabError::NoUnstableMode(min));
    }
    let lambda = (-min).sqrt();
    let n = ops.n();
    let w = ops.weights();
    let g_sym: Vec<f64> = dt.vectors.column(0).iter().copied().collect();
    let e1_sym = &dt.sqrt.matrix * DVector::from_vec(g_sym.clone());
    let mut e1: Vec<f64> = e1_sym.iter().enumerate().map(|(j, a)| a / w[j % n].sqrt()).collect();
    let mut e2: Vec<f64> = ops.apply(Part::Real, &e1).iter().map(|v| v / lambda).collect();
    let g: Vec<f64> = g_sym.iter().enumerate().map(|(j, a)| a / w[j % n].sqrt()).collect();
    let normalization = normalize(ops, gs, lambda, &mut e1, &mut e2)?;
    let (residual_r, residual_i) = pair_residuals(ops, lambda, &e1, &e2);
    Ok(SpectralPair {
        lambda1: lambda,
        e1: Field3::from_real_stack(&e1),
        e2: Field3::from_real_stack(&e2),
        g: Some(Field3::from_real_stack(&g)),
        residual_r,
        residual_i,
        normalization,
        t_eigenvalues: dt.values.iter().take(6).copied().collect(),
        n,
    })
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

/// Shifted inverse iteration for the eigenvalue of `calL` near `shift`,
/// with a few shift updates from the quotient `<L_R a, a> / <b, a>`.
pub fn polish(
    ops: &LinearizedOps,
    gs: &GroundStateBundle,
    shift: f64,
    seed: (&[f64], &[f64]),
    tol: f64,
) -> Result<SpectralPair> {
    let mut sigma = shift;
    let mut x = to_node_major(seed.0, seed.1);
    let mut lambda = shift;
    let mut best = (f64::INFINITY, f64::INFINITY);
    for _outer in 0..4 {
        let lu = ops.block_banded(sigma).factor()?;
        for _ in 0..8 {
            let y = lu.solve(&x);
            let nrm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !nrm.is_finite() || nrm == 0.0 {
                return Err(LabError::NoConvergence("inverse iteration produced a non-finite vector".into()));
            }
            x = y.iter().map(|v| v / nrm).collect();
            let (a, b) = from_node_major(&x);
            let denom = ops.l2_dot(&b, &a);
            if denom == 0.0 {
                continue;
            }
            lambda = ops.quad(Part::Real, &a, &a) / denom;
            best = pair_residuals(ops, lambda, &a, &b);
            if best.0.max(best.1) < tol {
                break;
            }
        }
        if best.0.max(best.1) < tol {
            break;
        }
        sigma = lambda;
    }
    if !(lambda > 0.0) {
        return Err(LabError::NoUnstableMode(-lambda * lambda.abs()));
    }
    let (mut e1, mut e2) = from_node_major(&x);
    let normalization = normalize(ops, gs, lambda, &mut e1, &mut e2)?;
    let (residual_r, residual_i) = pair_residuals(ops, lambda, &e1, &e2);
    Ok(SpectralPair {
        lambda1: lambda,
        e1: Field3::from_real_stack(&e1),
        e2: Field3::from_real_stack(&e2),
        g: None,
        residual_r,
        residual_i,
        normalization,
        t_eigenvalues: Vec::new(),
        n: ops.n(),
    })
}

/// Resample a real stack from one grid to another.
pub fn resample(from: &RadialGrid, to: &RadialGrid, v: &[f64]) -> Vec<f64> {
    let n = from.n();
    let mut out = Vec::with_capacity(3 * to.n());
    for k in 0..3 {
        let c: Vec<C64> = v[k * n..(k + 1) * n].iter().map(|&x| C64::new(x, 0.0)).collect();
        out.extend(to.r().iter().map(|&r| interpolate(from, &c, Sector::Radial, r).re));
    }
    out
}

/// The unstable pair on `ops`' grid. Grids above the dense cap are seeded
/// from a dense solve on a coarse grid with the same mapping and then polished.
pub fn compute_lambda1(ops: &LinearizedOps, gs: &GroundStateBundle) -> Result<SpectralPair> {
    compute_lambda1_seeded(ops, gs, 256)
}

pub fn compute_lambda1_seeded(ops: &LinearizedOps, gs: &GroundStateBundle, coarse_n: usize) -> Result<SpectralPair> {
    if ops.n() <= coarse_n.min(DENSE_CAP) {
        let dense = compute_lambda1_dense(ops, gs)?;
        let mut p = polish(ops, gs, dense.lambda1, (&dense.e1.re_stack(), &dense.e2.re_stack()), 1e-10)?;
        p.g = dense.g;
        p.t_eigenvalues = dense.t_eigenvalues;
        return Ok(p);
    }
    let grid = ops.grid();
    let coarse = RadialGrid::new(grid.r_max(), coarse_n.min(DENSE_CAP), grid.mapping())?;
    let cgs = crate::states::ground_state(ops.masses(), &coarse);
    let cops = LinearizedOps::assemble(ops.masses(), &coarse, &cgs)?;
    let seed = compute_lambda1_dense(&cops, &cgs)?;
    let a = resample(&coarse, grid, &seed.e1.re_stack());
    let b = resample(&coarse, grid, &seed.e2.re_stack());
    let mut p = polish(ops, gs, seed.lambda1, (&a, &b), 1e-10)?;
    p.t_eigenvalues = seed.t_eigenvalues;
    Ok(p)
}

#[derive(Debug, Clone, Serialize)]
pub struct Richardson {
    pub n: Vec<usize>,
    pub values: Vec<f64>,
    /// Second-order extrapolations from consecutive pairs.
    pub extrapolated: Vec<f64>,
    /// Observed order from the three finest values.
    pub order: f64,
}

impl Richardson {
    /// Agreement of the last two extrapolations in significant digits.
    pub fn digits(&self) -> f64 {
        let k = self.extrapolated.len();
        if k < 2 {
            return 0.0;
        }
        let (a, b) = (self.extrapolated[k - 2], self.extrapolated[k - 1]);
        -((a - b).abs() / b.abs()).log10()
    }
}

pub fn richardson(n: &[usize], values: &[f64]) -> Richardson {
    let extrapolated = values.windows(2).map(|w| w[1] + (w[1] - w[0]) / 3.0).collect();
    let order = if values.len() >= 3 {
        let k = values.len();
        let (a, b, c) = (values[k - 3], values[k - 2], values[k - 1]);
        ((a - b) / (b - c)).abs().log2()
    } else {
        f64::NAN
    };
    Richardson { n: n.to_vec(), values: values.to_vec(), extrapolated, order }
}

/// Unstable eigenvalue over a sequence of grids sharing `r_max` and the mapping scale.
pub fn lambda1_convergence(masses: &MassTriple, r_max: f64, scale: f64, ns: &[usize]) -> Result<(Richardson, Vec<SpectralPair>)> {
    let mut pairs = Vec::new();
    for &n in ns {
        let grid = RadialGrid::stretched(r_max, n, scale)?;
        let gs = crate::states::ground_state(masses, &grid);
        let ops = LinearizedOps::assemble(masses, &grid, &gs)?;
        pairs.push(compute_lambda1(&ops, &gs)?);
    }
    let values: Vec<f64> = pairs.iter().map(|p| p.lambda1).collect();
    Ok((richardson(ns, &values), pairs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WitnessForm {
    /// `W = phi (1/(2 sqrt m1), 1/(2 sqrt(2 m2)), 1/(2 sqrt(2 m3)))`.
    Printed,
    /// `W = phi (sqrt m1, sqrt(m2/2), sqrt(m3/2))`, for which `<L_R W, W> = <L_3 phi, phi>`.
    MassBalanced,
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub value: f64,
    pub epsilon: f64,
    pub form: WitnessForm,
    /// `<L_3 phi, phi>` of the scalar profile used.
    pub scalar_value: f64,
}

pub fn witness_field(form: WitnessForm, masses: &MassTriple, phi: &[f64]) -> Vec<f64> {
    let m = masses.as_array();
    let c = match form {
        WitnessForm::Printed => [
            0.5 / m[0].sqrt(),
            0.5 / (2.0 * m[1]).sqrt(),
            0.5 / (2.0 * m[2]).sqrt(),
        ],
        WitnessForm::MassBalanced => [m[0].sqrt(), (0.5 * m[1]).sqrt(), (0.5 * m[2]).sqrt()],
    };
    c.iter().flat_map(|ck| phi.iter().map(move |p| ck * p)).collect()
}

/// Search `phi = Lambda Q + eps Q` for a direction with `<L_R W, W> < 0`.
/// The printed witness is tried first and the mass-balanced one second.
pub fn witness_negative_direction(ops: &LinearizedOps, gs: &GroundStateBundle) -> Result<Witness> {
    let grid = ops.grid();
    let lam = gs.lambda_scalar(grid);
    let l3 = crate::linearized::scalar_operator(3.0, grid, gs);
    let mut eps_set = vec![0.0];
    for e in [0.01, 0.03, 0.1, 0.3, 1.0, 3.0] {
        eps_set.push(e);
        eps_set.push(-e);
    }
    for form in [WitnessForm::Printed, WitnessForm::MassBalanced] {
        let mut best: Option<Witness> = None;
        for &eps in &eps_set {
            let phi: Vec<f64> = lam.iter().zip(&gs.q).map(|(l, q)| l + eps * q).collect();
            let w = witness_field(form, ops.masses(), &phi);
            let wn = ops.l2_dot(&w, &w);
            if wn == 0.0 {
                continue;
            }
            let v = ops.quad(Part::Real, &w, &w);
            if best.as_ref().is_none_or(|b| v < b.value) {
                best = Some(Witness { value: v, epsilon: eps, form, scalar_value: l3.quad(&phi, &phi) });
            }
        }
        if let Some(b) = best {
            if b.value < 0.0 {
                return Ok(b);
            }
        }
    }
    let probe = witness_field(WitnessForm::MassBalanced, ops.masses(), &gs.q);
    Err(LabError::WitnessFailure(ops.quad(Part::Real, &probe, &probe)))
}

/// Real eigenvalues of the dense block operator `calL` inside `[-window, window]`.
pub fn block_real_spectrum(ops: &LinearizedOps, window: f64) -> Result<Vec<f64>> {
    let n = ops.n();
    if n > DENSE_CAP / 2 {
        return Err(LabError::InvalidArgument("block spectrum is only computed on small grids".into()));
    }
    let dim = 6 * n;
    let band = ops.block_banded(0.0);
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for j in 0..dim {
        let mut e = vec![0.0; dim];
        e[j] = 1.0;
        m.set_column(j, &DVector::from_vec(band.matvec(&e)));
    }
    let eig = m.complex_eigenvalues();
    let mut out: Vec<f64> = eig
        .iter()
        .filter(|z| z.im.abs() <= 1e-8 * (1.0 + z.re.abs()) && z.re.abs() <= window)
        .map(|z| z.re)
        .collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::ground_state;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(m: [f64; 3], n: usize) -> (RadialGrid, GroundStateBundle, LinearizedOps) {
        let g = RadialGrid::stretched(1.0e4, n, 8.0).unwrap();
        let masses = MassTriple::new(m[0], m[1], m[2]).unwrap();
        let gs = ground_state(&masses, &g);
        let ops = LinearizedOps::assemble(&masses, &g, &gs).unwrap();
        (g, gs, ops)
    }

    #[test]
    fn square_root_properties() {
        let (_, gs, ops) = setup([1.0, 1.0, 3.0], 128);
        let s = sqrt_li(&ops, &gs).unwrap();
        let sym = (&s.matrix - s.matrix.transpose()).amax();
        assert!(sym <= 1e-10 * s.matrix.amax());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v: Vec<f64> = (0..ops.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let twice = s.apply(&ops, &s.apply(&ops, &v));
        let direct = ops.apply(Part::Imag, &v);
        let diff: Vec<f64> = twice.iter().zip(&direct).map(|(a, b)| a - b).collect();
        // clamping removes at most the near-kernel component
        assert!(weighted_norm(&ops, &diff) <= 1e-3 * weighted_norm(&ops, &direct));
        let kp = s.apply(&ops, &gs.qp.re_stack());
        assert!(weighted_norm(&ops, &kp) <= 0.1 * weighted_norm(&ops, &gs.qp.re_stack()));
    }

    #[test]
    fn dense_pair_and_conjugate() {
        let (_, gs, ops) = setup([1.0, 1.0, 3.0], 192);
        let p = compute_lambda1(&ops, &gs).unwrap();
        assert!(p.lambda1 > 0.1 && p.lambda1 < 0.14, "{}", p.lambda1);
        assert!(p.residual_r < 1e-6 && p.residual_i < 1e-6, "{p:?}");
        assert!((p.normalization - 1.0).abs() < 1e-8);
        assert!(p.t_eigenvalues[1] > 0.0 || p.t_eigenvalues[1].abs() < 1e-3 * p.lambda1.powi(2));
        // (e1, -e2) solves the system with -lambda1
        let e1 = p.e1.re_stack();
        let m2: Vec<f64> = p.e2.re_stack().iter().map(|v| -v).collect();
        let lr = ops.apply(Part::Real, &e1);
        let res: f64 = lr.iter().zip(&m2).map(|(a, b)| (a + p.lambda1 * b).abs()).fold(0.0, f64::max);
        assert!(res <= 1e-6 * lr.iter().fold(0.0f64, |m, x| m.max(x.abs())));
        assert!(k_dot(ops.grid(), ops.masses(), &e1, &gs.qvec.re_stack()) > 0.0);
    }

    #[test]
    fn real_spectrum_of_block_operator() {
        let (_, gs, ops) = setup([1.0, 1.0, 3.0], 96);
        let p = compute_lambda1(&ops, &gs).unwrap();
        let real = block_real_spectrum(&ops, 0.5).unwrap();
        let near = |x: f64| real.iter().any(|v| (v - x).abs() < 1e-6 * p.lambda1.max(1.0));
        assert!(near(p.lambda1) && near(-p.lambda1), "{real:?} vs {}", p.lambda1);
        for v in &real {
            assert!((v.abs() - p.lambda1).abs() < 1e-6 || v.abs() < 0.3 * p.lambda1, "{v}");
        }
    }

    #[test]
    fn polished_matches_dense_on_same_grid() {
        let (_, gs, ops) = setup([1.0, 1.0, 3.0], 256);
        let d = compute_lambda1_dense(&ops, &gs).unwrap();
        let p = polish(&ops, &gs, 0.9 * d.lambda1, (&d.e1.re_stack(), &d.e2.re_stack()), 1e-11).unwrap();
        assert!((p.lambda1 - d.lambda1).abs() < 1e-6 * d.lambda1, "{} vs {}", p.lambda1, d.lambda1);
    }

    #[test]
    fn witnesses_are_negative() {
        for m in [[1.0, 1.0, 3.0], [1.0, 2.0, 4.0]] {
            let (_, gs, ops) = setup(m, 1024);
            let w = witness_negative_direction(&ops, &gs).unwrap();
            assert!(w.value < 0.0, "{m:?}: {w:?}");
        }
        // mass-balanced witness reproduces the scalar form
        let (g, gs, ops) = setup([1.0, 2.0, 4.0], 1024);
        let l3 = crate::linearized::scalar_operator(3.0, &g, &gs);
        let w = witness_field(WitnessForm::MassBalanced, ops.masses(), &gs.q);
        let a = ops.quad(Part::Real, &w, &w);
        let b = l3.quad(&gs.q, &gs.q);
        assert!((a - b).abs() < 1e-8 * b.abs(), "{a} vs {b}");
    }

    #[test]
    fn richardson_on_exact_quadratic() {
        let ns = [100, 200, 400];
        let v: Vec<f64> = ns.iter().map(|&n| 2.0 + 5.0 / (n as f64).powi(2)).collect();
        let r = richardson(&ns, &v);
        assert!((r.extrapolated[1] - 2.0).abs() < 1e-12);
        assert!((r.order - 2.0).abs() < 1e-9);
    }
}
