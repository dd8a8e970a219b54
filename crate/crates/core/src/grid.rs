//! Radial discretization of R^4.
//!
//! Nodes sit at cell centres of a uniform grid in a mapped coordinate `s`,
//! so the first node is half a cell away from the origin. Cell measures are
//! the exact `r^3 dr` volumes of the mapped cells, which makes the quadrature
//! exact for constants and second order for smooth integrands. The Laplacian
//! is the finite-volume operator built from face fluxes `r_f^3 (f_{j+1}-f_j)/dr`;
//! the flux through `r = 0` vanishes (even reflection) and a homogeneous
//! Dirichlet value is imposed on the outer face `r = r_max`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Surface area of the unit sphere S^3, `2 pi^2`.
pub const SPHERE_AREA: f64 = 2.0 * PI * PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Mapping {
    Uniform,
    /// `r(s) = L s / (1 - s^2)`, odd in `s` so the mesh stays symmetric
    /// under reflection through the origin.
    AlgebraicStretch { scale: f64 },
}

impl Mapping {
    fn r_of_s(&self, s: f64) -> f64 {
        match *self {
            Mapping::Uniform => s,
            Mapping::AlgebraicStretch { scale } => scale * s / (1.0 - s * s),
        }
    }

    fn s_of_r(&self, r: f64) -> f64 {
        match *self {
            Mapping::Uniform => r,
            Mapping::AlgebraicStretch { scale } => 2.0 * r / (scale + (scale * scale + 4.0 * r * r).sqrt()),
        }
    }

    pub fn code(&self) -> u8 {
        match self {
            Mapping::Uniform => 0,
            Mapping::AlgebraicStretch { .. } => 1,
        }
    }

    pub fn scale(&self) -> f64 {
        match *self {
            Mapping::Uniform => 0.0,
            Mapping::AlgebraicStretch { scale } => scale,
        }
    }
}

/// Angular sector of a radial profile. `Odd` is the `l = 1` sector used by
/// `d_j Q`-type profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Sector {
    #[default]
    Radial,
    Odd,
}

impl Sector {
    pub fn from_index(l: u32) -> Result<Self> {
        match l {
            0 => Ok(Sector::Radial),
            1 => Ok(Sector::Odd),
            _ => Err(invalid(format!("unsupported angular sector l = {l}"))),
        }
    }

    pub fn index(&self) -> u32 {
        match self {
            Sector::Radial => 0,
            Sector::Odd => 1,
        }
    }

    /// `l (l + 2)` in four dimensions.
    fn centrifugal(&self) -> f64 {
        match self {
            Sector::Radial => 0.0,
            Sector::Odd => 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    n: usize,
    mapping: Mapping,
    r_max: f64,
    h: f64,
    r: Vec<f64>,
    faces: Vec<f64>,
    /// Cell measures `int r^3 dr`; the 4D quadrature weight is `SPHERE_AREA * quad_w`.
    quad_w: Vec<f64>,
    /// Face couplings `r_f^3 / (r_{j+1} - r_j)`; the last entry couples node
    /// `n-1` to the Dirichlet wall.
    flux: Vec<f64>,
}

impl RadialGrid {
    pub fn new(r_max: f64, n: usize, mapping: Mapping) -> Result<Self> {
        if n < 16 {
            return Err(invalid(format!("grid needs at least 16 nodes, got {n}")));
        }
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(invalid(format!("r_max must be positive, got {r_max}")));
        }
        if let Mapping::AlgebraicStretch { scale } = mapping {
            if !(scale > 0.0) || !scale.is_finite() {
                return Err(invalid(format!("stretch scale must be positive, got {scale}")));
            }
        }
        let s_max = mapping.s_of_r(r_max);
        let h = s_max / n as f64;
        let r: Vec<f64> = (0..n).map(|i| mapping.r_of_s((i as f64 + 0.5) * h)).collect();
        let mut faces: Vec<f64> = (0..=n).map(|i| mapping.r_of_s(i as f64 * h)).collect();
        faces[0] = 0.0;
        faces[n] = r_max;
        let quad_w = (0..n)
            .map(|i| (faces[i + 1].powi(4) - faces[i].powi(4)) / 4.0)
            .collect();
        let mut flux = Vec::with_capacity(n);
        for j in 0..n - 1 {
            flux.push(faces[j + 1].powi(3) / (r[j + 1] - r[j]));
        }
        flux.push(r_max.powi(3) / (r_max - r[n - 1]));
        Ok(Self { n, mapping, r_max, h, r, faces, quad_w, flux })
    }

    /// Default stretched grid used across the lab.
    pub fn stretched(r_max: f64, n: usize, scale: f64) -> Result<Self> {
        Self::new(r_max, n, Mapping::AlgebraicStretch { scale })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn mapping(&self) -> Mapping {
        self.mapping
    }
    pub fn r_max(&self) -> f64 {
        self.r_max
    }
    /// Spacing in the mapped coordinate.
    pub fn spacing(&self) -> f64 {
        self.h
    }
    pub fn r(&self) -> &[f64] {
        &self.r
    }
    pub fn faces(&self) -> &[f64] {
        &self.faces
    }
    pub fn quad_w(&self) -> &[f64] {
        &self.quad_w
    }
    pub fn flux(&self) -> &[f64] {
        &self.flux
    }

    /// 4D volume element attached to node `i`.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        SPHERE_AREA * self.quad_w[i]
    }

    pub fn weights(&self) -> Vec<f64> {
        self.quad_w.iter().map(|w| SPHERE_AREA * w).collect()
    }

    pub fn s_of_r(&self, r: f64) -> f64 {
        self.mapping.s_of_r(r)
    }

    /// Position of `r` in node-index units: node `i` sits at `i`.
    pub fn index_coordinate(&self, r: f64) -> f64 {
        self.mapping.s_of_r(r) / self.h - 0.5
    }

    /// `int_{R^4} f dx` for radial `f` sampled on the nodes.
    pub fn integrate(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f.len())?;
        Ok(self.integrate_unchecked(f))
    }

    pub(crate) fn integrate_unchecked(&self, f: &[f64]) -> f64 {
        SPHERE_AREA * f.iter().zip(&self.quad_w).map(|(f, w)| f * w).sum::<f64>()
    }

    /// Integral over the ball `|x| < rho`, splitting the cell that contains `rho`.
    pub fn integrate_ball(&self, f: &[f64], rho: f64) -> Result<f64> {
        self.check_len(f.len())?;
        if !(rho >= 0.0) {
            return Err(invalid("ball radius must be nonnegative"));
        }
        let mut acc = 0.0;
        for i in 0..self.n {
            let (lo, hi) = (self.faces[i], self.faces[i + 1]);
            if hi <= rho {
                acc += f[i] * self.quad_w[i];
            } else {
                if lo < rho {
                    acc += f[i] * (rho.powi(4) - lo.powi(4)) / 4.0;
                }
                break;
            }
        }
        Ok(SPHERE_AREA * acc)
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            Err(invalid(format!("sample length {len} does not match grid size {}", self.n)))
        } else {
            Ok(())
        }
    }

    /// Finite-volume radial Laplacian of a real profile in the given sector.
    pub fn laplacian_real(&self, f: &[f64], sector: Sector) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n];
        let cent = sector.centrifugal();
        for i in 0..n {
            let right = if i + 1 < n { f[i + 1] - f[i] } else { -f[i] };
            let mut div = self.flux[i] * right;
            if i > 0 {
                div -= self.flux[i - 1] * (f[i] - f[i - 1]);
            }
            out[i] = div / self.quad_w[i] - cent * f[i] / (self.r[i] * self.r[i]);
        }
        out
    }

    /// Dirichlet form `int grad f . grad g dx` consistent with [`Self::laplacian_real`]:
    /// `dirichlet_form(f, g) = -int g Lap f dx` exactly.
    pub fn dirichlet_form(&self, f: &[f64], g: &[f64]) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for j in 0..n - 1 {
            acc += self.flux[j] * (f[j + 1] - f[j]) * (g[j + 1] - g[j]);
        }
        acc += self.flux[n - 1] * f[n - 1] * g[n - 1];
        SPHERE_AREA * acc
    }

    /// Share of `dirichlet_form` from the jump to zero at `r_max`.
    pub fn wall_form(&self, f: &[f64], g: &[f64]) -> f64 {
        let n = self.n;
        SPHERE_AREA * self.flux[n - 1] * f[n - 1] * g[n - 1]
    }

    /// Node-sampled `|f'(r)|^2` by centred differences (plus `l(l+2)|f|^2/r^2`).
    pub fn gradient_sq_real(&self, f: &[f64], sector: Sector) -> Vec<f64> {
        let n = self.n;
        let r = &self.r;
        let ghost_sign = match sector {
            Sector::Radial => 1.0,
            Sector::Odd => -1.0,
        };
        let cent = sector.centrifugal();
        (0..n)
            .map(|i| {
                let d = if i == 0 {
                    (f[1] - ghost_sign * f[0]) / (r[1] + r[0])
                } else if i == n - 1 {
                    (f[i] - f[i - 1]) / (r[i] - r[i - 1])
                } else {
                    (f[i + 1] - f[i - 1]) / (r[i + 1] - r[i - 1])
                };
                d * d + cent * f[i] * f[i] / (r[i] * r[i])
            })
            .collect()
    }

    /// Tridiagonal stiffness `S` with `f^T S g = dirichlet_form(f, g)`,
    /// returned as (diagonal, off-diagonal).
    pub fn stiffness(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n - 1];
        for j in 0..n - 1 {
            let c = SPHERE_AREA * self.flux[j];
            diag[j] += c;
            diag[j + 1] += c;
            off[j] = -c;
        }
        diag[n - 1] += SPHERE_AREA * self.flux[n - 1];
        (diag, off)
    }

    /// Sector-aware stiffness: [`Self::stiffness`] plus the centrifugal mass term.
    pub fn stiffness_sector(&self, sector: Sector) -> (Vec<f64>, Vec<f64>) {
        let (mut diag, off) = self.stiffness();
        let cent = sector.centrifugal();
        if cent != 0.0 {
            for (i, d) in diag.iter_mut().enumerate() {
                *d += SPHERE_AREA * self.quad_w[i] * cent / (self.r[i] * self.r[i]);
            }
        }
        (diag, off)
    }

    /// Stable fingerprint of the grid parameters, used in run manifests.
    pub fn descriptor(&self) -> String {
        format!(
            "n={};r_max={:e};mapping={};scale={:e}",
            self.n,
            self.r_max,
            self.mapping.code(),
            self.mapping.scale()
        )
    }
}
