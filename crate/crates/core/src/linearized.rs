//! Linearized operators around the ground state, the Gamma change of
//! variables, the 3x3 potential diagonalizations, the quadratic form F and
//! constrained coercivity checks.
//!
//! Real 3-fields are stored as component-major stacks of length `3n`. The
//! operators act in "strong" form `L v = (1/2m_k)(-Delta_h) v_k + V(r) v`, and
//! every operator has a symmetric "weak" matrix `A = W L` where `W` holds the
//! quadrature weights, so `<L u, v> = u^T A v`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LabError, Result};
use crate::field::{Field3, MassTriple};
use crate::grid::{RadialGrid, Sector};
use crate::linalg::{lanczos_smallest, sym_eigen, BandedMatrix};
use crate::states::GroundStateBundle;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    /// `L_R`, acting on real parts.
    Real,
    /// `L_I`, acting on imaginary parts.
    Imag,
}

#[derive(Debug, Clone)]
pub struct LinearizedOps {
    grid: RadialGrid,
    masses: MassTriple,
    kin: [f64; 3],
    sector: Sector,
    omega: f64,
    vr: Vec<[f64; 9]>,
    vi: Vec<[f64; 9]>,
    w: Vec<f64>,
    sd: Vec<f64>,
    so: Vec<f64>,
    chol: BidiagonalCholesky,
}

fn potentials(q1: f64, q2: f64, q3: f64) -> ([f64; 9], [f64; 9]) {
    let a = 2.0 * q2 * q3;
    let b = 2.0 * q1 * q3;
    let c = 2.0 * q1 * q2;
    let d = q1 * q1;
    (
        [-a, -b, -c, -b, 0.0, -d, -c, -d, 0.0],
        [a, -b, -c, -b, 0.0, d, -c, d, 0.0],
    )
}

impl LinearizedOps {
    /// Operators around the closed-form ground state.
    pub fn assemble(masses: &MassTriple, grid: &RadialGrid, gs: &GroundStateBundle) -> Result<Self> {
        Self::from_profile(masses, grid, &gs.qvec, 0.0, Sector::Radial)
    }

    /// Operators around an arbitrary real profile `q`, with an optional
    /// frequency shift `omega` (used for relative equilibria `e^{i omega t} q`).
    pub fn from_profile(
        masses: &MassTriple,
        grid: &RadialGrid,
        q: &Field3,
        omega: f64,
        sector: Sector,
    ) -> Result<Self> {
        grid.check_len(q.n())?;
        let n = grid.n();
        let mut vr = Vec::with_capacity(n);
        let mut vi = Vec::with_capacity(n);
        for i in 0..n {
            let (r, im) = potentials(q.c[0].values[i].re, q.c[1].values[i].re, q.c[2].values[i].re);
            vr.push(r);
            vi.push(im);
        }
        let (sd, so) = grid.stiffness_sector(sector);
        let chol = BidiagonalCholesky::factor(&sd, &so)?;
        Ok(Self {
            grid: grid.clone(),
            masses: *masses,
            kin: masses.kinetic(),
            sector,
            omega,
            vr,
            vi,
            w: grid.weights(),
            sd,
            so,
            chol,
        })
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }
    pub fn dim(&self) -> usize {
        3 * self.grid.n()
    }
    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }
    pub fn masses(&self) -> &MassTriple {
        &self.masses
    }
    pub fn omega(&self) -> f64 {
        self.omega
    }
    pub fn sector(&self) -> Sector {
        self.sector
    }
    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    fn pot(&self, part: Part) -> &[[f64; 9]] {
        match part {
            Part::Real => &self.vr,
            Part::Imag => &self.vi,
        }
    }

    /// Potential matrix entry `V_{kl}` at node `i`.
    pub fn potential(&self, part: Part, i: usize, k: usize, l: usize) -> f64 {
        self.pot(part)[i][3 * k + l]
    }

    #[inline]
    fn stiff(&self, v: &[f64], i: usize) -> f64 {
        let n = self.n();
        let mut s = self.sd[i] * v[i];
        if i > 0 {
            s += self.so[i - 1] * v[i - 1];
        }
        if i + 1 < n {
            s += self.so[i] * v[i + 1];
        }
        s
    }

    /// Weak form `A v = W L v`.
    pub fn form_apply(&self, part: Part, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        let pot = self.pot(part);
        let mut out = vec![0.0; 3 * n];
        for k in 0..3 {
            let vk = &v[k * n..(k + 1) * n];
            for i in 0..n {
                let mut acc = self.kin[k] * self.stiff(vk, i);
                let mut p = self.omega * v[k * n + i];
                for l in 0..3 {
                    p += pot[i][3 * k + l] * v[l * n + i];
                }
                acc += self.w[i] * p;
                out[k * n + i] = acc;
            }
        }
        out
    }

    /// Strong form `L v`.
    pub fn apply(&self, part: Part, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut out = self.form_apply(part, v);
        for (j, o) in out.iter_mut().enumerate() {
            *o /= self.w[j % n];
        }
        out
    }

    /// `<L u, v>` in the quadrature inner product.
    pub fn quad(&self, part: Part, u: &[f64], v: &[f64]) -> f64 {
        self.form_apply(part, u).iter().zip(v).map(|(a, b)| a * b).sum()
    }

    pub fn l2_dot(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.n();
        u.iter().zip(v).enumerate().map(|(j, (a, b))| self.w[j % n] * a * b).sum()
    }

    /// Block Dirichlet (Hilbert) Gram matrix applied to `v`.
    pub fn h1_apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; 3 * n];
        for k in 0..3 {
            let vk = &v[k * n..(k + 1) * n];
            for i in 0..n {
                out[k * n + i] = self.stiff(vk, i);
            }
        }
        out
    }

    pub fn h1_dot(&self, u: &[f64], v: &[f64]) -> f64 {
        self.h1_apply(u).iter().zip(v).map(|(a, b)| a * b).sum()
    }

    /// Solve `B x = b` with the block Gram matrix.
    pub fn h1_solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut x = b.to_vec();
        for k in 0..3 {
            let s = &mut x[k * n..(k + 1) * n];
            self.chol.solve_lower(s);
            self.chol.solve_upper(s);
        }
        x
    }

    /// Symmetrized dense matrix `W^{-1/2} A W^{-1/2}` (same spectrum as `L`).
    pub fn dense_symmetric(&self, part: Part) -> DMatrix<f64> {
        let n = self.n();
        let dim = 3 * n;
        let pot = self.pot(part);
        let mut m = DMatrix::<f64>::zeros(dim, dim);
        let ws: Vec<f64> = self.w.iter().map(|w| w.sqrt()).collect();
        for k in 0..3 {
            for i in 0..n {
                let row = k * n + i;
                m[(row, row)] += self.kin[k] * self.sd[i] / self.w[i] + self.omega;
                if i + 1 < n {
                    let v = self.kin[k] * self.so[i] / (ws[i] * ws[i + 1]);
                    m[(row, row + 1)] += v;
                    m[(row + 1, row)] += v;
                }
                for l in 0..3 {
                    m[(row, l * n + i)] += pot[i][3 * k + l];
                }
            }
        }
        m
    }

    /// Strong-form entries `(row, col, value)` of `L_R` or `L_I`.
    pub fn coo(&self, part: Part) -> Vec<(usize, usize, f64)> {
        let n = self.n();
        let pot = self.pot(part);
        let mut out = Vec::new();
        for k in 0..3 {
            for i in 0..n {
                let row = k * n + i;
                if i > 0 {
                    out.push((row, row - 1, self.kin[k] * self.so[i - 1] / self.w[i]));
                }
                for l in 0..3 {
                    let mut v = pot[i][3 * k + l];
                    if l == k {
                        v += self.kin[k] * self.sd[i] / self.w[i] + self.omega;
                    }
                    if v != 0.0 {
                        out.push((row, l * n + i, v));
                    }
                }
                if i + 1 < n {
                    out.push((row, row + 1, self.kin[k] * self.so[i] / self.w[i]));
                }
            }
        }
        out.sort_by_key(|e| (e.0, e.1));
        out
    }

    /// Banded matrix of `calL - shift` acting on node-major `(a, b)` stacks,
    /// unknown `6 i + c` with `c < 3` the real and `c >= 3` the imaginary part.
    /// `calL (a, b) = (-L_I b, L_R a)`.
    pub fn block_banded(&self, shift: f64) -> BandedMatrix {
        let n = self.n();
        let mut m = BandedMatrix::zeros(6 * n, 11, 11);
        for i in 0..n {
            for k in 0..3 {
                let ra = 6 * i + k;
                let rb = 6 * i + 3 + k;
                m.add(ra, ra, -shift);
                m.add(rb, rb, -shift);
                // row a_k: -(L_I b)_k
                let d = self.kin[k] * self.sd[i] / self.w[i] + self.omega;
                m.add(ra, 6 * i + 3 + k, -d);
                m.add(rb, 6 * i + k, d);
                if i > 0 {
                    let o = self.kin[k] * self.so[i - 1] / self.w[i];
                    m.add(ra, 6 * (i - 1) + 3 + k, -o);
                    m.add(rb, 6 * (i - 1) + k, o);
                }
                if i + 1 < n {
                    let o = self.kin[k] * self.so[i] / self.w[i];
                    m.add(ra, 6 * (i + 1) + 3 + k, -o);
                    m.add(rb, 6 * (i + 1) + k, o);
                }
                for l in 0..3 {
                    m.add(ra, 6 * i + 3 + l, -self.vi[i][3 * k + l]);
                    m.add(rb, 6 * i + l, self.vr[i][3 * k + l]);
                }
            }
        }
        m
    }

    /// Apply `calL` to a component-major `(a, b)` pair.
    pub fn apply_block(&self, a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let top: Vec<f64> = self.apply(Part::Imag, b).iter().map(|v| -v).collect();
        (top, self.apply(Part::Real, a))
    }

    /// `F(u, v) = 1/2 <L_R Re u, Re v> + 1/2 <L_I Im u, Im v>`.
    pub fn form_f(&self, u: &Field3, v: &Field3) -> f64 {
        0.5 * self.quad(Part::Real, &u.re_stack(), &v.re_stack())
            + 0.5 * self.quad(Part::Imag, &u.im_stack(), &v.im_stack())
    }
}

/// Cholesky factor of the tridiagonal stiffness, `S = L L^T` with `L` lower bidiagonal.
#[derive(Debug, Clone)]
struct BidiagonalCholesky {
    diag: Vec<f64>,
    sub: Vec<f64>,
}

impl BidiagonalCholesky {
    fn factor(d: &[f64], o: &[f64]) -> Result<Self> {
        let n = d.len();
        let mut diag = vec![0.0; n];
        let mut sub = vec![0.0; n.saturating_sub(1)];
        for i in 0..n {
            let a = d[i] - if i > 0 { sub[i - 1] * sub[i - 1] } else { 0.0 };
            if !(a > 0.0) {
                return Err(LabError::NotPsd(a));
            }
            diag[i] = a.sqrt();
            if i + 1 < n {
                sub[i] = o[i] / diag[i];
            }
        }
        Ok(Self { diag, sub })
    }

    /// `x <- L^{-1} x`.
    fn solve_lower(&self, x: &mut [f64]) {
        for i in 0..x.len() {
            if i > 0 {
                x[i] -= self.sub[i - 1] * x[i - 1];
            }
            x[i] /= self.diag[i];
        }
    }

    /// `x <- L^{-T} x`.
    fn solve_upper(&self, x: &mut [f64]) {
        let n = x.len();
        for i in (0..n).rev() {
            if i + 1 < n {
                x[i] -= self.sub[i] * x[i + 1];
            }
            x[i] /= self.diag[i];
        }
    }

    /// `x <- L^T x`.
    fn mul_upper(&self, x: &mut [f64]) {
        let n = x.len();
        for i in 0..n {
            x[i] *= self.diag[i];
            if i + 1 < n {
                x[i] += self.sub[i] * x[i + 1];
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// `Gamma(u, v, g) = (sqrt(2m1) u, sqrt(2m2) v, sqrt(2m3) g)` and its inverse.
pub fn gamma_transform(v: &Field3, masses: &MassTriple, dir: Direction) -> Field3 {
    let s = masses.as_array().map(|m| match dir {
        Direction::Forward => (2.0 * m).sqrt(),
        Direction::Inverse => 1.0 / (2.0 * m).sqrt(),
    });
    v.map(|k, _, x| x * s[k])
}

/// The constant matrices of the Gamma-transformed operators and their eigenbases.
#[derive(Debug, Clone)]
pub struct PotentialMatrices {
    pub m_a: [[f64; 3]; 3],
    pub m_b: [[f64; 3]; 3],
    /// Orthonormal eigenbasis of `M_A`, columns for eigenvalues (-1, -1, 3).
    pub p_mat: [[f64; 3]; 3],
    /// Orthonormal eigenbasis of `M_B`, columns for eigenvalues (1, 1, -3).
    pub c_mat: [[f64; 3]; 3],
    /// The matrices as printed in the source analysis, kept for comparison.
    pub printed_p: [[f64; 3]; 3],
    pub printed_c: [[f64; 3]; 3],
}

pub fn potential_eigendecomposition() -> PotentialMatrices {
    let s2 = 2f64.sqrt();
    let r2 = 1.0 / s2;
    let (s3, s5) = (3f64.sqrt(), 5f64.sqrt());
    let (s10, s15, s30) = (10f64.sqrt(), 15f64.sqrt(), 30f64.sqrt());
    PotentialMatrices {
        m_a: [[1.0, -s2, -s2], [-s2, 0.0, 1.0], [-s2, 1.0, 0.0]],
        m_b: [[-1.0, -s2, -s2], [-s2, 0.0, -1.0], [-s2, -1.0, 0.0]],
        p_mat: [[0.0, r2, r2], [r2, 0.5, -0.5], [-r2, 0.5, -0.5]],
        c_mat: [[0.0, r2, r2], [r2, -0.5, 0.5], [-r2, -0.5, 0.5]],
        printed_p: [[1.0 / s3, 1.0 / s3, 1.0 / s5], [s2 / s3, 0.0, -s2 / s5], [0.0, s2 / s3, -s2 / s5]],
        printed_c: [
            [-s10 / 5.0, -2.0 * s15 / 15.0, s2 / 2.0],
            [2.0 * s5 / 5.0, -s30 / 15.0, 0.5],
            [-2.0 * s5 / 5.0, s30 / 15.0, 0.5],
        ],
    }
}

impl PotentialMatrices {
    pub fn eigenvalues_a(&self) -> Vec<f64> {
        crate::linalg::sym_eigenvalues(to_dmatrix(&self.m_a))
    }
    pub fn eigenvalues_b(&self) -> Vec<f64> {
        crate::linalg::sym_eigenvalues(to_dmatrix(&self.m_b))
    }

    /// Max-norm defects `(|X^T X - I|, |X D X^T - M|)` of a claimed diagonalizer.
    pub fn defects(x: &[[f64; 3]; 3], m: &[[f64; 3]; 3], d: [f64; 3]) -> (f64, f64) {
        let xm = to_dmatrix(x);
        let orth = (xm.transpose() * &xm - DMatrix::<f64>::identity(3, 3)).amax();
        let recon = (&xm * DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&d)) * xm.transpose()
            - to_dmatrix(m))
        .amax();
        (orth, recon)
    }
}

fn to_dmatrix(a: &[[f64; 3]; 3]) -> DMatrix<f64> {
    DMatrix::from_fn(3, 3, |i, j| a[i][j])
}

/// Apply a 3x3 matrix pointwise to a real 3-field stack.
pub fn mix3(a: &[[f64; 3]; 3], v: &[f64], transpose: bool) -> Vec<f64> {
    let n = v.len() / 3;
    let mut out = vec![0.0; 3 * n];
    for k in 0..3 {
        for l in 0..3 {
            let c = if transpose { a[l][k] } else { a[k][l] };
            if c != 0.0 {
                for i in 0..n {
                    out[k * n + i] += c * v[l * n + i];
                }
            }
        }
    }
    out
}

/// Scalar operator `L_gamma = -Delta - gamma Q^2` in the radial sector.
#[derive(Debug, Clone)]
pub struct ScalarOperator {
    pub gamma: f64,
    grid: RadialGrid,
    q2: Vec<f64>,
}

pub fn scalar_operator(gamma: f64, grid: &RadialGrid, gs: &GroundStateBundle) -> ScalarOperator {
    ScalarOperator { gamma, grid: grid.clone(), q2: gs.q.iter().map(|q| q * q).collect() }
}

impl ScalarOperator {
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let lap = self.grid.laplacian_real(f, Sector::Radial);
        lap.iter().zip(f).zip(&self.q2).map(|((l, v), q2)| -l - self.gamma * q2 * v).collect()
    }

    pub fn quad(&self, f: &[f64], g: &[f64]) -> f64 {
        let lf = self.apply(f);
        (0..f.len()).map(|i| self.grid.weight(i) * lf[i] * g[i]).sum()
    }

    /// Ascending eigenvalues of the dense symmetrized discretization.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let n = self.grid.n();
        let (sd, so) = self.grid.stiffness();
        let w = self.grid.weights();
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = sd[i] / w[i] - self.gamma * self.q2[i];
            if i + 1 < n {
                let v = so[i] / (w[i] * w[i + 1]).sqrt();
                m[(i, i + 1)] = v;
                m[(i + 1, i)] = v;
            }
        }
        crate::linalg::sym_eigenvalues(m)
    }
}

/// Orthogonality constraint on real 3-fields.
#[derive(Debug, Clone)]
pub enum Constraint {
    /// `(v, c)_{H^1} = 0`.
    H1(Vec<f64>),
    /// `<v, a>_{L^2} = 0`.
    L2(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct CoercivityReport {
    /// Smallest Rayleigh quotients `<L v, v> / ||v||^2_{H^1}` on the constrained space.
    pub values: Vec<f64>,
    /// Matching minimizers as component-major stacks.
    pub vectors: Vec<Vec<f64>>,
}

impl CoercivityReport {
    pub fn min(&self) -> f64 {
        self.values[0]
    }
}

/// Smallest `want` values of the Hilbert-normalized Rayleigh quotient of
/// `<L_part v, v>` on the subspace cut out by `constraints`.
///
/// The generalized problem `A x = mu B x` is reduced to standard form with
/// the bidiagonal Cholesky factor of the Gram matrix and solved by Lanczos.
pub fn coercivity_min(
    ops: &LinearizedOps,
    part: Part,
    constraints: &[Constraint],
    want: usize,
) -> Result<CoercivityReport> {
    let n = ops.n();
    let dim = 3 * n;
    // constraint directions in the reduced coordinates y = L^T x
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for c in constraints {
        let mut d = match c {
            Constraint::H1(v) => {
                let mut y = v.clone();
                for k in 0..3 {
                    ops.chol.mul_upper(&mut y[k * n..(k + 1) * n]);
                }
                y
            }
            Constraint::L2(a) => {
                let mut y: Vec<f64> = a.iter().enumerate().map(|(j, v)| v * ops.w[j % n]).collect();
                for k in 0..3 {
                    ops.chol.solve_lower(&mut y[k * n..(k + 1) * n]);
                }
                y
            }
        };
        let norm0 = norm(&d);
        if norm0 == 0.0 {
            return Err(LabError::DegenerateConstraints);
        }
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&d, b);
                axpy(&mut d, -c, b);
            }
        }
        let nd = norm(&d);
        if nd < 1e-8 * norm0 {
            return Err(LabError::DegenerateConstraints);
        }
        d.iter_mut().for_each(|v| *v /= nd);
        basis.push(d);
    }
    let project = |y: &mut Vec<f64>| {
        for _ in 0..2 {
            for b in &basis {
                let c = dot(y, b);
                axpy(y, -c, b);
            }
        }
    };
    let to_x = |y: &[f64]| {
        let mut x = y.to_vec();
        for k in 0..3 {
            ops.chol.solve_upper(&mut x[k * n..(k + 1) * n]);
        }
        x
    };
    // Pi C Pi + sigma (I - Pi): the removed directions are pushed far above
    // the spectrum of interest so they never appear as spurious zeros.
    let sigma = 1.0e3;
    let op = |y: &[f64]| {
        let mut yy = y.to_vec();
        project(&mut yy);
        let x = to_x(&yy);
        let mut z = ops.form_apply(part, &x);
        for k in 0..3 {
            ops.chol.solve_lower(&mut z[k * n..(k + 1) * n]);
        }
        project(&mut z);
        for ((zi, yi), pi) in z.iter_mut().zip(y).zip(&yy) {
            *zi += sigma * (yi - pi);
        }
        z
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut start: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    project(&mut start);
    let max_iter = dim.min(600);
    let pairs = lanczos_smallest(op, |a, b| dot(a, b), &start, want, max_iter, 1e-10);
    let vectors = pairs.vectors.iter().map(|y| to_x(y)).collect();
    Ok(CoercivityReport { values: pairs.values, vectors })
}

/// Coercivity of `F` on the radial orthogonal complement `G^perp`:
/// `F(Q, h) = 0`, `h perp Lambda Q` on the real part and `h perp Q_p, Q_q` on the
/// imaginary part, all in the Hilbert metric. `F` splits into the two parts,
/// so the constant is half the smaller of the two constrained minima.
pub fn coercivity_f(ops: &LinearizedOps, gs: &GroundStateBundle) -> Result<(f64, f64, f64)> {
    let q = gs.qvec.re_stack();
    let lrq = ops.apply(Part::Real, &q);
    let re = coercivity_min(
        ops,
        Part::Real,
        &[Constraint::L2(lrq), Constraint::H1(gs.lambda_q.re_stack())],
        1,
    )?;
    let im = coercivity_min(
        ops,
        Part::Imag,
        &[Constraint::H1(gs.qp.re_stack()), Constraint::H1(gs.qq.re_stack())],
        1,
    )?;
    Ok((0.5 * re.min().min(im.min()), re.min(), im.min()))
}

/// Smallest Hilbert-normalized eigenvalues of `L_part` and the number of them below `threshold`.
pub fn near_kernel(ops: &LinearizedOps, part: Part, want: usize, threshold: f64) -> Result<(usize, Vec<f64>)> {
    let rep = coercivity_min(ops, part, &[], want)?;
    let count = rep.values.iter().filter(|v| v.abs() < threshold).count();
    Ok((count, rep.values))
}

/// Dense generalized eigenvalues of `A x = mu B x`, for cross-checking on small grids.
pub fn dense_generalized(ops: &LinearizedOps, part: Part) -> Vec<f64> {
    let dim = ops.dim();
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    for j in 0..dim {
        let mut e = vec![0.0; dim];
        e[j] = 1.0;
        let col = ops.form_apply(part, &e);
        a.set_column(j, &nalgebra::DVector::from_vec(col));
    }
    let mut b = DMatrix::<f64>::zeros(dim, dim);
    for j in 0..dim {
        let mut e = vec![0.0; dim];
        e[j] = 1.0;
        b.set_column(j, &nalgebra::DVector::from_vec(ops.h1_apply(&e)));
    }
    let l = b.cholesky().expect("Gram matrix is SPD").l();
    let li = l.clone().try_inverse().expect("invertible factor");
    let c = &li * a * li.transpose();
    let c = (&c + c.transpose()) * 0.5;
    sym_eigen(c).0
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}
