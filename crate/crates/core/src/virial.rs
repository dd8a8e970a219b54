//! Localized virial functionals and the empirical check of the virial identities.
//!
//! `V = int sum_k m_k |u_k|^2 w`, `I_R = Im int w' sum_k conj(u_k) d_r u_k`,
//! `F_R = -1/4 int DDw sum_k |u_k|^2/m_k - 2 Re int Lap(w) conj(u1)^2 u2 u3
//!        + int w'' sum_k |d_r u_k|^2/m_k`.
//! On the grid `I_R` uses the face current `Im(conj(u_j) u_{j+1})`, which makes
//! `dV/dt = I_R` exact for the semi-discrete flow when `2 m1 = m2 + m3`.
//! The bilaplacian term is integrated by parts, `1/4 int d_r(Lap w) d_r(...)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::evolution::Stepper;
use crate::field::{Field3, MassTriple, C64};
use crate::grid::{RadialGrid, SPHERE_AREA};
use crate::states::{ground_state, kinetic, potential};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightProfile {
    /// `w_R = 0` beyond `2R` (the curvature cap cannot hold; see [`VirialWeight::max_curvature`]).
    Truncated,
    /// `w_R` constant beyond `2R`, with `d_r^2 w_R <= 2` everywhere.
    Plateau,
}

/// Blend `phi(1 + x) = 1 + 2x + x^2 + x^4 (a + b x + c x^2 + d x^3)` on `x in [0, 1]`,
/// matching `s^2` to third order at `x = 0`.
#[derive(Debug, Clone, Copy)]
struct Blend {
    c: [f64; 4],
    tail: f64,
}

impl Blend {
    fn new(profile: WeightProfile) -> Self {
        match profile {
            // phi'' = 2(1 - 3x^2 + 2x^3) - 90 x^2 (1-x)^2 integrated twice
            WeightProfile::Plateau => Self { c: [-8.0, 9.2, -3.0, 0.0], tail: 2.2 },
            WeightProfile::Truncated => {
                // value and first three derivatives vanish at x = 1
                let m = nalgebra::Matrix4::new(
                    1.0, 1.0, 1.0, 1.0, //
                    4.0, 5.0, 6.0, 7.0, //
                    12.0, 20.0, 30.0, 42.0, //
                    24.0, 60.0, 120.0, 210.0,
                );
                let rhs = nalgebra::Vector4::new(-4.0, -4.0, -2.0, 0.0);
                let sol = m.lu().solve(&rhs).expect("nonsingular Hermite system");
                Self { c: [sol[0], sol[1], sol[2], sol[3]], tail: 0.0 }
            }
        }
    }

    /// `(phi, phi', phi'', phi''', phi'''')` at `s`.
    fn eval(&self, s: f64) -> [f64; 5] {
        if s <= 1.0 {
            return [s * s, 2.0 * s, 2.0, 0.0, 0.0];
        }
        if s >= 2.0 {
            return [self.tail, 0.0, 0.0, 0.0, 0.0];
        }
        let x = s - 1.0;
        let [a, b, c, d] = self.c;
        // q(x) = a x^4 + b x^5 + c x^6 + d x^7
        let q = [
            a * x.powi(4) + b * x.powi(5) + c * x.powi(6) + d * x.powi(7),
            4.0 * a * x.powi(3) + 5.0 * b * x.powi(4) + 6.0 * c * x.powi(5) + 7.0 * d * x.powi(6),
            12.0 * a * x * x + 20.0 * b * x.powi(3) + 30.0 * c * x.powi(4) + 42.0 * d * x.powi(5),
            24.0 * a * x + 60.0 * b * x * x + 120.0 * c * x.powi(3) + 210.0 * d * x.powi(4),
            24.0 * a + 120.0 * b * x + 360.0 * c * x * x + 840.0 * d * x.powi(3),
        ];
        [1.0 + 2.0 * x + x * x + q[0], 2.0 + 2.0 * x + q[1], 2.0 + q[2], q[3], q[4]]
    }
}

/// Radial derivatives of `w` up to fourth order at `r`.
#[derive(Debug, Clone, Copy)]
pub struct WeightDerivs {
    pub w: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
}

impl WeightDerivs {
    /// `Lap w = w'' + 3 w'/r`.
    pub fn laplacian(&self, r: f64) -> f64 {
        if r == 0.0 {
            return 4.0 * self.d2;
        }
        self.d2 + 3.0 * self.d1 / r
    }

    /// `d_r Lap w = w''' + 3 w''/r - 3 w'/r^2`.
    pub fn laplacian_dr(&self, r: f64) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        self.d3 + 3.0 * self.d2 / r - 3.0 * self.d1 / (r * r)
    }

    /// `Lap Lap w = w'''' + 6 w'''/r + 3 w''/r^2 - 3 w'/r^3`.
    pub fn bilaplacian(&self, r: f64) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        self.d4 + 6.0 * self.d3 / r + 3.0 * self.d2 / (r * r) - 3.0 * self.d1 / r.powi(3)
    }
}

#[derive(Debug, Clone)]
pub struct VirialWeight {
    /// `None` is the `R = infinity` sentinel (`w = r^2`).
    pub radius: Option<f64>,
    pub profile: WeightProfile,
    blend: Blend,
    pub w: Vec<f64>,
    pub dw: Vec<f64>,
    pub d2w: Vec<f64>,
    pub bilap: Vec<f64>,
}

impl VirialWeight {
    pub fn derivs(&self, r: f64) -> WeightDerivs {
        match self.radius {
            None => WeightDerivs { w: r * r, d1: 2.0 * r, d2: 2.0, d3: 0.0, d4: 0.0 },
            Some(rr) => {
                let p = self.blend.eval(r / rr);
                WeightDerivs { w: rr * rr * p[0], d1: rr * p[1], d2: p[2], d3: p[3] / rr, d4: p[4] / (rr * rr) }
            }
        }
    }

    /// Largest `d_r^2 w` over a fine sampling of the transition layer and the grid.
    pub fn max_curvature(&self) -> f64 {
        let mut m = self.d2w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if let Some(rr) = self.radius {
            for j in 0..=4000 {
                let r = rr * (1.0 + j as f64 / 4000.0);
                m = m.max(self.derivs(r).d2);
            }
        }
        m
    }
}

pub fn make_weight(radius: Option<f64>, profile: WeightProfile, grid: &RadialGrid) -> Result<VirialWeight> {
    if let Some(r) = radius {
        if !(r > 0.0) || !r.is_finite() {
            return Err(LabError::InvalidArgument(format!("weight radius must be positive, got {r}")));
        }
        if 2.0 * r > grid.r_max() {
            return Err(LabError::DomainOverflow(format!("2R = {} exceeds r_max = {}", 2.0 * r, grid.r_max())));
        }
    }
    let mut vw = VirialWeight {
        radius,
        profile,
        blend: Blend::new(profile),
        w: Vec::new(),
        dw: Vec::new(),
        d2w: Vec::new(),
        bilap: Vec::new(),
    };
    for &r in grid.r() {
        let d = vw.derivs(r);
        vw.w.push(d.w);
        vw.dw.push(d.d1);
        vw.d2w.push(d.d2);
        vw.bilap.push(d.bilaplacian(r));
    }
    Ok(vw)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct VirialValues {
    pub v: f64,
    pub i_r: f64,
    pub f_r: f64,
}

pub fn virial_functionals(grid: &RadialGrid, u: &Field3, weight: &VirialWeight, masses: &MassTriple) -> VirialValues {
    let n = grid.n();
    let m = masses.as_array();
    let r = grid.r();
    let faces = grid.faces();
    let flux = grid.flux();
    let mut v = 0.0;
    for i in 0..n {
        let dens: f64 = (0..3).map(|k| m[k] * u.c[k].values[i].norm_sqr()).sum();
        v += grid.weight(i) * weight.w[i] * dens;
    }
    let mut cur = 0.0;
    let mut hess = 0.0;
    let mut bil = 0.0;
    let h: Vec<f64> = (0..n).map(|i| (0..3).map(|k| u.c[k].values[i].norm_sqr() / m[k]).sum()).collect();
    for j in 0..n {
        let (a, b): (Vec<C64>, Vec<C64>) = (0..3)
            .map(|k| {
                let x = u.c[k].values[j];
                let y = if j + 1 < n { u.c[k].values[j + 1] } else { C64::new(0.0, 0.0) };
                (x, y)
            })
            .unzip();
        let r_next = if j + 1 < n { r[j + 1] } else { grid.r_max() };
        let w_next = if j + 1 < n { weight.w[j + 1] } else { weight.derivs(grid.r_max()).w };
        let im: f64 = (0..3).map(|k| (a[k].conj() * b[k]).im).sum();
        cur += flux[j] * (w_next - weight.w[j]) * im;
        let f = weight.derivs(faces[j + 1]);
        let grad2: f64 = (0..3).map(|k| (b[k] - a[k]).norm_sqr() / m[k]).sum();
        hess += flux[j] * f.d2 * grad2;
        let h_next = if j + 1 < n { h[j + 1] } else { 0.0 };
        bil += flux[j] * (r_next - r[j]) * f.laplacian_dr(faces[j + 1]) * (h_next - h[j]);
    }
    let mut nl = 0.0;
    for i in 0..n {
        let (a, b, c) = (u.c[0].values[i], u.c[1].values[i], u.c[2].values[i]);
        nl += grid.weight(i) * weight.derivs(r[i]).laplacian(r[i]) * (a.conj() * a.conj() * b * c).re;
    }
    VirialValues {
        v,
        i_r: SPHERE_AREA * cur,
        f_r: SPHERE_AREA * (0.25 * bil + hess) - 2.0 * nl,
    }
}

/// `F_infinity = 4 (K - 4P)` with the same quadratures as [`virial_functionals`].
pub fn f_infinity_identity(grid: &RadialGrid, u: &Field3, masses: &MassTriple) -> (f64, f64) {
    let w = make_weight(None, WeightProfile::Plateau, grid).expect("sentinel weight");
    let f = virial_functionals(grid, u, &w, masses).f_r;
    (f, 4.0 * (kinetic(grid, u, masses) - 4.0 * potential(grid, u)))
}

/// Fourth-order central differences on a uniform sample; ends are left out.
pub fn central_derivative(f: &[f64], tau: f64) -> Vec<Option<f64>> {
    (0..f.len())
        .map(|i| {
            (i >= 2 && i + 2 < f.len())
                .then(|| (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * tau))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub n: usize,
    pub r_max: f64,
    pub stretch: f64,
    pub radius: f64,
    pub profile: WeightProfile,
    pub dt: f64,
    pub t_end: f64,
    /// Initial data: `scale * Q * exp(i chirp r^2 exp(-r^2 / 100))`.
    pub scale: f64,
    pub chirp: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            n: 2048,
            r_max: 1.0e4,
            stretch: 8.0,
            radius: 6.0,
            profile: WeightProfile::Plateau,
            dt: 2e-3,
            t_end: 0.5,
            scale: 0.8,
            chirp: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub masses: [f64; 3],
    pub paper_condition: bool,
    pub galilean_condition: bool,
    /// `max |dV/dt - I_R|` and `max |dI_R/dt - F_R|` over samples, divided by `K(u0)^2`.
    pub defect_v: f64,
    pub defect_i: f64,
    /// The same maxima relative to `max |I_R|` and `max |F_R|` along the run.
    pub rel_defect_v: f64,
    pub rel_defect_i: f64,
    /// `max |F_inf - 4(K - 4P)|` over samples, relative to `K(u0)`.
    pub f_inf_defect: f64,
    /// `max |dV/dt|` along the run, divided by `K(u0)^2`.
    pub max_dv: f64,
    pub testable: bool,
    /// Set when the run for this triple failed; the scan continues without it.
    pub error: Option<String>,
}

impl ScanRow {
    fn failed(masses: &MassTriple, e: &LabError) -> Self {
        Self {
            masses: masses.as_array(),
            paper_condition: masses.resonance_paper(),
            galilean_condition: masses.resonance_galilean(),
            defect_v: f64::NAN,
            defect_i: f64::NAN,
            rel_defect_v: f64::NAN,
            rel_defect_i: f64::NAN,
            f_inf_defect: f64::NAN,
            max_dv: f64::NAN,
            testable: false,
            error: Some(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanTable {
    pub rows: Vec<ScanRow>,
    /// Which condition zeroes the `dV/dt` defect: "galilean", "paper", or "none".
    pub selected: String,
}

impl ScanTable {
    pub fn selected_rows(&self) -> Vec<&ScanRow> {
        self.rows
            .iter()
            .filter(|r| match self.selected.as_str() {
                "galilean" => r.galilean_condition,
                "paper" => r.paper_condition,
                _ => false,
            })
            .collect()
    }
}

pub fn scan_initial(grid: &RadialGrid, masses: &MassTriple, scale: f64, chirp: f64) -> Field3 {
    let gs = ground_state(masses, grid);
    let r = grid.r().to_vec();
    gs.qvec.map(|_, i, v| v * scale * C64::from_polar(1.0, chirp * r[i] * r[i] * (-r[i] * r[i] / 100.0).exp()))
}

/// Run one short trajectory and measure the two identity defects.
pub fn identity_defects(masses: &MassTriple, cfg: &ScanConfig) -> Result<ScanRow> {
    let grid = RadialGrid::stretched(cfg.r_max, cfg.n, cfg.stretch)?;
    let weight = make_weight(Some(cfg.radius), cfg.profile, &grid)?;
    let u0 = scan_initial(&grid, masses, cfg.scale, cfg.chirp);
    let k0 = kinetic(&grid, &u0, masses);
    let mut st = Stepper::new(&grid, masses);
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let mut u = u0;
    let mut vals = vec![virial_functionals(&grid, &u, &weight, masses)];
    let mut finf = 0.0f64;
    let mut testable = true;
    for s in 0..steps {
        match st.step(&u, cfg.dt, s as f64 * cfg.dt) {
            Ok(v) => u = v,
            Err(LabError::NonConvergence { .. }) => {
                testable = false;
                break;
            }
            Err(e) => return Err(e),
        }
        vals.push(virial_functionals(&grid, &u, &weight, masses));
        if s % 50 == 0 {
            let (a, b) = f_infinity_identity(&grid, &u, masses);
            finf = finf.max((a - b).abs() / k0);
        }
    }
    let v: Vec<f64> = vals.iter().map(|x| x.v).collect();
    let ir: Vec<f64> = vals.iter().map(|x| x.i_r).collect();
    let dv = central_derivative(&v, cfg.dt);
    let di = central_derivative(&ir, cfg.dt);
    let mut dev_v = 0.0f64;
    let mut dev_i = 0.0f64;
    let mut max_dv = 0.0f64;
    for (j, x) in vals.iter().enumerate() {
        if let Some(d) = dv[j] {
            max_dv = max_dv.max(d.abs());
            dev_v = dev_v.max((d - x.i_r).abs());
        }
        if let Some(d) = di[j] {
            dev_i = dev_i.max((d - x.f_r).abs());
        }
    }
    let max_i = ir.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let max_f = vals.iter().fold(0.0f64, |m, x| m.max(x.f_r.abs()));
    Ok(ScanRow {
        masses: masses.as_array(),
        paper_condition: masses.resonance_paper(),
        galilean_condition: masses.resonance_galilean(),
        defect_v: dev_v / (k0 * k0),
        defect_i: dev_i / (k0 * k0),
        rel_defect_v: dev_v / max_i,
        rel_defect_i: dev_i / max_f,
        f_inf_defect: finf,
        max_dv: max_dv / (k0 * k0),
        testable,
        error: None,
    })
}

/// Default list of twelve triples: Galilean-resonant, paper-resonant and generic.
pub fn default_scan_masses() -> Vec<MassTriple> {
    [
        [1.0, 1.0, 1.0],
        [1.0, 0.5, 1.5],
        [2.0, 1.0, 3.0],
        [1.0, 1.6, 0.4],
        [1.0, 1.0, 3.0],
        [1.0, 2.0, 4.0],
        [0.5, 1.0, 2.0],
        [1.0, 0.5, 2.5],
        [1.0, 1.0, 10.0],
        [1.0, 2.0, 2.0],
        [2.0, 1.0, 1.0],
        [1.0, 3.0, 0.7],
    ]
    .iter()
    .map(|m| MassTriple::new(m[0], m[1], m[2]).expect("positive masses"))
    .collect()
}

/// Runs the defect measurement over `masses` (in parallel) and selects the
/// condition whose triples all have `dV/dt` defects at least 100x below every
/// triple that violates it.
pub fn identity_scan(masses: &[MassTriple], cfg: &ScanConfig) -> Result<ScanTable> {
    if masses.is_empty() {
        return Err(LabError::InvalidArgument("empty mass lattice".into()));
    }
    let rows: Vec<ScanRow> = masses
        .par_iter()
        .map(|m| identity_defects(m, cfg).unwrap_or_else(|e| ScanRow::failed(m, &e)))
        .collect();
    let separates = |pick: &dyn Fn(&ScanRow) -> bool| {
        let inside: Vec<f64> = rows.iter().filter(|r| r.testable && pick(r)).map(|r| r.defect_v).collect();
        let outside: Vec<f64> = rows.iter().filter(|r| r.testable && !pick(r)).map(|r| r.defect_v).collect();
        if inside.is_empty() || outside.is_empty() {
            return false;
        }
        let worst_in = inside.iter().fold(0.0f64, |a, b| a.max(*b));
        let best_out = outside.iter().fold(f64::INFINITY, |a, b| a.min(*b));
        worst_in * 100.0 <= best_out
    };
    let selected = if separates(&|r: &ScanRow| r.galilean_condition) {
        "galilean"
    } else if separates(&|r: &ScanRow| r.paper_condition) {
        "paper"
    } else {
        "none"
    };
    Ok(ScanTable { rows, selected: selected.into() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> RadialGrid {
        RadialGrid::stretched(1.0e4, 1024, 8.0).unwrap()
    }

    #[test]
    fn weight_regions() {
        let g = grid();
        for profile in [WeightProfile::Truncated, WeightProfile::Plateau] {
            let w = make_weight(Some(10.0), profile, &g).unwrap();
            assert!((w.derivs(5.0).w - 25.0).abs() < 1e-12);
            let tail = w.derivs(25.0).w;
            match profile {
                WeightProfile::Truncated => assert_eq!(tail, 0.0),
                WeightProfile::Plateau => assert!((tail - 220.0).abs() < 1e-9),
            }
            // continuity of value and three derivatives at R and 2R
            for r0 in [10.0, 20.0] {
                let (a, b) = (w.derivs(r0 - 1e-9), w.derivs(r0 + 1e-9));
                for (x, y) in [(a.w, b.w), (a.d1, b.d1), (a.d2, b.d2), (a.d3, b.d3)] {
                    assert!((x - y).abs() < 1e-6 * (1.0 + x.abs()), "{profile:?} at {r0}: {x} vs {y}");
                }
            }
        }
        let inf = make_weight(None, WeightProfile::Plateau, &g).unwrap();
        assert!(inf.bilap.iter().zip(g.r()).all(|(v, r)| v.abs() < 1e-12 * (1.0 + 1.0 / (r * r))));
        assert!(matches!(make_weight(Some(6000.0), WeightProfile::Plateau, &g), Err(LabError::DomainOverflow(_))));
    }

    #[test]
    fn curvature_cap() {
        let g = grid();
        let p = make_weight(Some(10.0), WeightProfile::Plateau, &g).unwrap();
        assert!(p.max_curvature() <= 2.0 + 1e-12);
        // with w'(2R) = 0 and w'' <= 2, w cannot fall from R^2 to 0 on [R, 2R]
        let t = make_weight(Some(10.0), WeightProfile::Truncated, &g).unwrap();
        assert!(t.max_curvature() > 2.0);
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let g = grid();
        let w = make_weight(Some(3.0), WeightProfile::Truncated, &g).unwrap();
        let h = 1e-4;
        for r in [3.5, 4.2, 5.9] {
            let d = w.derivs(r);
            let fd = (w.derivs(r + h).d3 - w.derivs(r - h).d3) / (2.0 * h);
            assert!((fd - d.d4).abs() < 1e-5 * (1.0 + d.d4.abs()));
            let lap = |x: f64| w.derivs(x).laplacian(x);
            let fd = (lap(r + h) - lap(r - h)) / (2.0 * h);
            assert!((fd - d.laplacian_dr(r)).abs() < 1e-5 * (1.0 + fd.abs()));
            let ld = |x: f64| w.derivs(x).laplacian_dr(x);
            let bil = (ld(r + h) - ld(r - h)) / (2.0 * h) + 3.0 * ld(r) / r;
            assert!((bil - d.bilaplacian(r)).abs() < 1e-4 * (1.0 + bil.abs()));
        }
    }

    #[test]
    fn f_infinity_is_algebraic() {
        let g = grid();
        for m in [[1.0, 1.0, 3.0], [1.0, 1.0, 10.0]] {
            let masses = MassTriple::new(m[0], m[1], m[2]).unwrap();
            let u = scan_initial(&g, &masses, 0.7, 0.1);
            let (a, b) = f_infinity_identity(&g, &u, &masses);
            assert!((a - b).abs() <= 1e-12 * b.abs().max(kinetic(&g, &u, &masses)));
        }
    }

    #[test]
    fn current_vanishes_on_ground_state_orbit() {
        let g = grid();
        let masses = MassTriple::new(1.0, 2.0, 4.0).unwrap();
        let gs = ground_state(&masses, &g);
        let w = make_weight(Some(8.0), WeightProfile::Plateau, &g).unwrap();
        let kq = kinetic(&g, &gs.qvec, &masses);
        let u = crate::states::apply_symmetry(&g, &gs.qvec, 0.7, -0.3, 1.2).unwrap().field;
        assert!(virial_functionals(&g, &u, &w, &masses).i_r.abs() < 1e-6 * kq);
        let real = gs.qvec.scale(0.5);
        assert_eq!(virial_functionals(&g, &real, &w, &masses).i_r, 0.0);
    }

    #[test]
    fn stationary_ground_state_has_no_virial_drift() {
        let g = grid();
        let masses = MassTriple::new(1.0, 0.5, 1.5).unwrap();
        let gs = ground_state(&masses, &g);
        let w = make_weight(Some(6.0), WeightProfile::Plateau, &g).unwrap();
        let mut st = Stepper::new(&g, &masses);
        let mut u = gs.qvec.clone();
        let mut v = vec![virial_functionals(&g, &u, &w, &masses).v];
        for s in 0..8 {
            u = st.step(&u, 1e-2, s as f64 * 1e-2).unwrap();
            v.push(virial_functionals(&g, &u, &w, &masses).v);
        }
        let d = central_derivative(&v, 1e-2);
        for x in d.iter().flatten() {
            assert!(x.abs() < 1e-6 * v[0]);
        }
    }

    #[test]
    fn central_derivative_is_fourth_order() {
        let f: Vec<f64> = (0..20).map(|i| (0.1 * i as f64).sin()).collect();
        let d = central_derivative(&f, 0.1);
        assert!(d[0].is_none() && d[19].is_none());
        for (i, x) in d.iter().enumerate() {
            if let Some(x) = x {
                assert!((x - (0.1 * i as f64).cos()).abs() < 5e-5);
            }
        }
    }
}
