//! Complex radial profiles, 3-component fields and the coupling masses.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{RadialGrid, Sector};

pub type C64 = Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    pub values: Vec<C64>,
    pub sector: Sector,
}

impl RadialField {
    pub fn zeros(n: usize) -> Self {
        Self { values: vec![C64::new(0.0, 0.0); n], sector: Sector::Radial }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self { values: values.iter().map(|&v| C64::new(v, 0.0)).collect(), sector: Sector::Radial }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn re(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn im(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.im).collect()
    }

    pub fn from_parts(re: &[f64], im: &[f64]) -> Self {
        Self {
            values: re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)).collect(),
            sector: Sector::Radial,
        }
    }
}

/// Sector-aware radial Laplacian of a complex profile.
pub fn laplacian(grid: &RadialGrid, f: &RadialField) -> Result<RadialField> {
    grid.check_len(f.len())?;
    let re = grid.laplacian_real(&f.re(), f.sector);
    let im = grid.laplacian_real(&f.im(), f.sector);
    let mut out = RadialField::from_parts(&re, &im);
    out.sector = f.sector;
    Ok(out)
}

/// `|grad f|^2` sampled on the nodes.
pub fn gradient_sq(grid: &RadialGrid, f: &RadialField) -> Result<Vec<f64>> {
    grid.check_len(f.len())?;
    let a = grid.gradient_sq_real(&f.re(), f.sector);
    let b = grid.gradient_sq_real(&f.im(), f.sector);
    Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field3 {
    pub c: [RadialField; 3],
}

impl Field3 {
    pub fn zeros(n: usize) -> Self {
        Self { c: [RadialField::zeros(n), RadialField::zeros(n), RadialField::zeros(n)] }
    }

    pub fn new(c1: RadialField, c2: RadialField, c3: RadialField) -> Result<Self> {
        if c1.len() != c2.len() || c1.len() != c3.len() {
            return Err(invalid("components must share the grid"));
        }
        if c1.sector != c2.sector || c1.sector != c3.sector {
            return Err(invalid("components must share the angular sector"));
        }
        Ok(Self { c: [c1, c2, c3] })
    }

    pub fn from_real(parts: [&[f64]; 3]) -> Self {
        Self { c: parts.map(RadialField::from_real) }
    }

    /// Build from a real stacked vector of length `3n` (component-major).
    pub fn from_real_stack(v: &[f64]) -> Self {
        let n = v.len() / 3;
        Self::from_real([&v[..n], &v[n..2 * n], &v[2 * n..]])
    }

    /// Build from stacked real and imaginary parts, each of length `3n`.
    pub fn from_stacks(re: &[f64], im: &[f64]) -> Self {
        let n = re.len() / 3;
        let comp = |k: usize| RadialField::from_parts(&re[k * n..(k + 1) * n], &im[k * n..(k + 1) * n]);
        Self { c: [comp(0), comp(1), comp(2)] }
    }

    pub fn n(&self) -> usize {
        self.c[0].len()
    }

    pub fn sector(&self) -> Sector {
        self.c[0].sector
    }

    /// Real parts stacked component-major.
    pub fn re_stack(&self) -> Vec<f64> {
        self.c.iter().flat_map(|f| f.values.iter().map(|v| v.re)).collect()
    }

    pub fn im_stack(&self) -> Vec<f64> {
        self.c.iter().flat_map(|f| f.values.iter().map(|v| v.im)).collect()
    }

    pub fn map(&self, mut f: impl FnMut(usize, usize, C64) -> C64) -> Self {
        let mut out = self.clone();
        for (k, comp) in out.c.iter_mut().enumerate() {
            for (i, v) in comp.values.iter_mut().enumerate() {
                *v = f(k, i, *v);
            }
        }
        out
    }

    pub fn zip_map(&self, other: &Field3, mut f: impl FnMut(C64, C64) -> C64) -> Self {
        let mut out = self.clone();
        for k in 0..3 {
            for (v, w) in out.c[k].values.iter_mut().zip(&other.c[k].values) {
                *v = f(*v, *w);
            }
        }
        out
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|_, _, v| v * a)
    }

    pub fn scale_c(&self, a: C64) -> Self {
        self.map(|_, _, v| v * a)
    }

    pub fn add(&self, other: &Field3) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field3) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Field3) -> Self {
        self.zip_map(other, |x, y| x + y * a)
    }

    pub fn conj(&self) -> Self {
        self.map(|_, _, v| v.conj())
    }

    /// Multiply by `i`.
    pub fn times_i(&self) -> Self {
        self.map(|_, _, v| C64::new(-v.im, v.re))
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|f| f.values.iter().all(|v| v.re.is_finite() && v.im.is_finite()))
    }

    pub fn max_abs(&self) -> f64 {
        self.c
            .iter()
            .flat_map(|f| f.values.iter().map(|v| v.norm()))
            .fold(0.0, f64::max)
    }

    /// Real Hilbert inner product `Re sum_k int grad u_k . conj(grad v_k)`.
    pub fn h1_dot(&self, other: &Field3, grid: &RadialGrid) -> f64 {
        (0..3)
            .map(|k| {
                grid.dirichlet_form(&self.c[k].re(), &other.c[k].re())
                    + grid.dirichlet_form(&self.c[k].im(), &other.c[k].im())
            })
            .sum()
    }

    pub fn h1_norm(&self, grid: &RadialGrid) -> f64 {
        self.h1_dot(self, grid).max(0.0).sqrt()
    }

    /// Real `L^2` inner product `Re sum_k int u_k conj(v_k)`.
    pub fn l2_dot(&self, other: &Field3, grid: &RadialGrid) -> f64 {
        let mut acc = 0.0;
        for k in 0..3 {
            for (i, (a, b)) in self.c[k].values.iter().zip(&other.c[k].values).enumerate() {
                acc += grid.weight(i) * (a.re * b.re + a.im * b.im);
            }
        }
        acc
    }
}

/// The three coupling masses. Resonance flags are always derived from the values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct MassTriple {
    m: [f64; 3],
}

const RESONANCE_TOL: f64 = 1e-12;

impl MassTriple {
    pub fn new(m1: f64, m2: f64, m3: f64) -> Result<Self> {
        for (k, m) in [m1, m2, m3].iter().enumerate() {
            if !(*m > 0.0) || !m.is_finite() {
                return Err(invalid(format!("mass m{} must be positive, got {m}", k + 1)));
            }
        }
        Ok(Self { m: [m1, m2, m3] })
    }

    pub fn m1(&self) -> f64 {
        self.m[0]
    }
    pub fn m2(&self) -> f64 {
        self.m[1]
    }
    pub fn m3(&self) -> f64 {
        self.m[2]
    }
    pub fn as_array(&self) -> [f64; 3] {
        self.m
    }

    /// `2 m1 + m2 = m3`, the condition printed in the source analysis.
    pub fn resonance_paper(&self) -> bool {
        (2.0 * self.m[0] + self.m[1] - self.m[2]).abs() <= RESONANCE_TOL * self.scale()
    }

    /// `2 m1 = m2 + m3`, the Galilean (mass-balance) condition.
    pub fn resonance_galilean(&self) -> bool {
        (2.0 * self.m[0] - self.m[1] - self.m[2]).abs() <= RESONANCE_TOL * self.scale()
    }

    fn scale(&self) -> f64 {
        self.m.iter().fold(1.0, |a: f64, b| a.max(*b))
    }

    /// Kinetic coefficients `1 / (2 m_k)`.
    pub fn kinetic(&self) -> [f64; 3] {
        self.m.map(|m| 0.5 / m)
    }
}

impl TryFrom<[f64; 3]> for MassTriple {
    type Error = crate::error::LabError;
    fn try_from(m: [f64; 3]) -> Result<Self> {
        Self::new(m[0], m[1], m[2])
    }
}

impl From<MassTriple> for [f64; 3] {
    fn from(m: MassTriple) -> Self {
        m.m
    }
}

impl std::str::FromStr for MassTriple {
    type Err = crate::error::LabError;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| invalid(format!("bad mass list '{s}': {e}")))?;
        match parts.as_slice() {
            [a, b, c] => Self::new(*a, *b, *c),
            _ => Err(invalid(format!("expected three masses, got '{s}'"))),
        }
    }
}
