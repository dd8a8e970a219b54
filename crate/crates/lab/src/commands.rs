//! The six subcommands. Each one writes its artifacts through a [`Run`] and
//! returns `Falsified` when a checked property fails after a clean run.

use crit3_core::evolution::{evolve, scattering_diagnostic, Status};
use crit3_core::io;
use crit3_core::linearized::LinearizedOps;
use crit3_core::modulation::{canonical_phases, smooth_perturbation, threshold_perturbation, Modulator};
use crit3_core::plot::{HeatMap, LinePlot, Series};
use crit3_core::special::{self, Background, BackwardReport, ForwardReport, ScenarioReport};
use crit3_core::spectrum::{self, Richardson, SpectralPair};
use crit3_core::states::{self, apply_symmetry, gn_constant, ground_state, stationary_residual};
use crit3_core::virial::identity_scan;
use crit3_core::{Field3, MassTriple, RadialGrid};
use serde::Serialize;

use crate::manifest::Run;
use crate::CliError;

pub const POHOZAEV_TOL: f64 = 1e-5;
pub const SPECTRUM_RESIDUAL_TOL: f64 = 1e-6;
pub const MIN_SPECTRUM_N: usize = 64;
pub const ROUND_TRIP_TOL: f64 = 1e-6;

fn falsified(failures: Vec<String>) -> Result<(), CliError> {
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Falsified(failures.join("; ")))
    }
}

#[derive(Serialize)]
struct GroundStateSummary {
    masses: [f64; 3],
    coefficients: [f64; 3],
    #[serde(rename = "K")]
    k: f64,
    #[serde(rename = "P")]
    p: f64,
    #[serde(rename = "E")]
    e: f64,
    /// `|K - 4P| / K`.
    pohozaev_defect: f64,
    gn_ratio: f64,
    gn_constant: f64,
    /// `gn_ratio / G_S - 1`; zero for the optimizer.
    gn_excess: f64,
    stationary_residual: [f64; 3],
    passed: bool,
}

pub fn ground_state_cmd(run: &mut Run) -> Result<(), CliError> {
    let masses = run.cfg.mass_triple()?;
    let grid = run.cfg.grid.build()?;
    run.record_grid(&grid);
    let gs = ground_state(&masses, &grid);
    let rep = states::report(&grid, &gs.qvec, &gs)?;
    let pohozaev = (rep.k - 4.0 * rep.p).abs() / rep.k;
    let gs_const = gn_constant(&masses, &grid);
    let summary = GroundStateSummary {
        masses: masses.as_array(),
        coefficients: gs.coef,
        k: rep.k,
        p: rep.p,
        e: rep.e,
        pohozaev_defect: pohozaev,
        gn_ratio: rep.gn_ratio,
        gn_constant: gs_const,
        gn_excess: rep.gn_ratio / gs_const - 1.0,
        stationary_residual: stationary_residual(&gs, &grid),
        passed: pohozaev <= POHOZAEV_TOL,
    };
    run.write_json("functionals.json", &rep)?;
    run.write_json("ground_state.json", &summary)?;
    run.write("q_profile.csv", |w| io::write_field_csv(w, &grid, &gs.qvec))?;
    eprintln!("K = {:.10e}, P = {:.10e}, |K-4P|/K = {pohozaev:.3e}", rep.k, rep.p);
    let mut failures = Vec::new();
    if !summary.passed {
        failures.push(format!("Pohozaev defect {pohozaev:.3e} exceeds {POHOZAEV_TOL:e}"));
    }
    falsified(failures)
}

#[derive(Serialize)]
struct SpectrumSummary<'a> {
    pair: &'a SpectralPair,
    relative_gap: f64,
    witness: Option<spectrum::Witness>,
    witness_error: Option<String>,
    convergence: Option<Richardson>,
    passed: bool,
}

pub fn spectrum_cmd(run: &mut Run) -> Result<(), CliError> {
    let masses = run.cfg.mass_triple()?;
    let gcfg = run.cfg.grid;
    if gcfg.n < MIN_SPECTRUM_N {
        return Err(CliError::Config(format!("spectrum needs n >= {MIN_SPECTRUM_N}, got {}", gcfg.n)));
    }
    let grid = gcfg.build()?;
    run.record_grid(&grid);
    let gs = ground_state(&masses, &grid);
    let ops = LinearizedOps::assemble(&masses, &grid, &gs)?;
    let pair = spectrum::compute_lambda1(&ops, &gs)?;
    eprintln!("lambda1 = {:.10} (n = {})", pair.lambda1, gcfg.n);
    let (witness, witness_error) = match spectrum::witness_negative_direction(&ops, &gs) {
        Ok(w) => (Some(w), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let convergence = if run.cfg.spectrum.convergence && gcfg.n / 4 >= MIN_SPECTRUM_N {
        let ns = [gcfg.n / 4, gcfg.n / 2];
        let (coarse, _) = spectrum::lambda1_convergence(&masses, gcfg.r_max, gcfg.stretch, &ns)?;
        let mut values = coarse.values.clone();
        values.push(pair.lambda1);
        Some(spectrum::richardson(&[ns[0], ns[1], gcfg.n], &values))
    } else {
        None
    };

    let mut failures = Vec::new();
    if !(pair.lambda1 > 0.0) {
        failures.push(format!("lambda1 = {} is not positive", pair.lambda1));
    }
    let res = pair.residual_r.max(pair.residual_i);
    if !(res <= SPECTRUM_RESIDUAL_TOL) {
        failures.push(format!("eigen-residual {res:.3e} exceeds {SPECTRUM_RESIDUAL_TOL:e}"));
    }
    match &witness {
        Some(w) if w.value < 0.0 => {}
        _ => failures.push("no negative direction of L_R found".into()),
    }

    let summary = SpectrumSummary {
        pair: &pair,
        relative_gap: pair.relative_gap(),
        witness,
        witness_error,
        convergence,
        passed: failures.is_empty(),
    };
    run.write_json("spectrum.json", &summary)?;
    run.write("e1.csv", |w| io::write_field_csv(w, &grid, &pair.e1))?;
    run.write("e2.csv", |w| io::write_field_csv(w, &grid, &pair.e2))?;
    let r = grid.r();
    let mut plot = LinePlot::new("unstable eigenpair", "r", "|component|").log_y();
    for (name, f) in [("e1", &pair.e1), ("e2", &pair.e2)] {
        for k in 0..3 {
            let y: Vec<f64> = f.c[k].values.iter().map(|v| v.norm()).collect();
            plot = plot.with_series(Series::new(format!("{name} c{}", k + 1), r, &y));
        }
    }
    run.write_text("eigenpair.svg", &plot.render())?;
    falsified(failures)
}

#[derive(Serialize)]
struct EvolveSummary {
    status: Status,
    steps: usize,
    halved_steps: usize,
    energy_drift: f64,
    charge12_drift: f64,
    charge13_drift: f64,
    snapshots: Vec<(String, f64)>,
    scattering: Option<crit3_core::evolution::ScatteringReport>,
    scattering_error: Option<String>,
}

/// `scale * Q + perturbation * w`, with `w` normalized to the Hilbert norm of `Q`.
fn evolve_initial(run: &Run, grid: &RadialGrid, masses: &MassTriple) -> Field3 {
    let gs = ground_state(masses, grid);
    let sec = &run.cfg.evolve;
    let mut u = gs.qvec.scale(sec.scale);
    if sec.perturbation != 0.0 {
        let w = smooth_perturbation(grid, run.cfg.seed);
        let w = w.scale(gs.qvec.h1_norm(grid) / w.h1_norm(grid));
        u = u.axpy(sec.perturbation, &w);
    }
    u
}

pub fn evolve_cmd(run: &mut Run) -> Result<(), CliError> {
    let masses = run.cfg.mass_triple()?;
    let grid = run.cfg.grid.build()?;
    run.record_grid(&grid);
    let k_ground = states::kinetic(&grid, &ground_state(&masses, &grid).qvec, &masses);
    let u0 = evolve_initial(run, &grid, &masses);
    let ecfg = run.cfg.evolve.run.clone();
    let trace = evolve(&u0, &ecfg, &masses, &grid, k_ground)?;
    eprintln!("evolution ended: {} after {} steps", trace.status.label(), trace.steps);

    run.write("trace.csv", |w| io::write_trace_csv(w, &trace))?;
    let mut snapshots = Vec::new();
    for (i, (t, u)) in trace.snapshots.iter().enumerate() {
        let name = format!("snapshot_{i:03}.bin");
        run.write(&name, |w| io::write_snapshot(w, &grid, u))?;
        snapshots.push((name, *t));
    }
    run.write("final.bin", |w| io::write_snapshot(w, &grid, &trace.final_field))?;
    let (scattering, scattering_error) = if run.cfg.evolve.scattering {
        match scattering_diagnostic(&trace) {
            Ok(s) => (Some(s), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, None)
    };
    let summary = EvolveSummary {
        status: trace.status,
        steps: trace.steps,
        halved_steps: trace.halved_steps,
        energy_drift: trace.max_relative_drift(|r| r.e),
        charge12_drift: trace.max_relative_drift(|r| r.charge12),
        charge13_drift: trace.max_relative_drift(|r| r.charge13),
        snapshots,
        scattering,
        scattering_error,
    };
    run.write_json("evolve.json", &summary)?;

    let t: Vec<f64> = trace.times.iter().map(|v| v.abs()).collect();
    let k: Vec<f64> = trace.reports.iter().map(|r| r.k).collect();
    let mut kplot = LinePlot::new("kinetic functional", "|t|", "K(u)").log_y().with_series(Series::new("K", &t, &k));
    if let Status::BlowupDetected { t_star } = trace.status {
        kplot = kplot.with_marker(t_star.abs(), "blow-up");
    }
    run.write_text("kinetic.svg", &kplot.render())?;
    let lplot = LinePlot::new("L4 norm", "|t|", "||u||_L4").log_y().with_series(Series::new("L4", &t, &trace.l4));
    run.write_text("l4.svg", &lplot.render())?;
    Ok(())
}

fn write_forward(run: &mut Run, a: f64, lambda1: f64, k_ground: f64, q_norm: f64, fwd: &ForwardReport) -> Result<(), CliError> {
    run.write("forward_track.csv", |w| io::write_track_csv(w, &fwd.track))?;
    let t: Vec<f64> = fwd.track.points.iter().map(|p| p.t).collect();
    let d: Vec<f64> = fwd.track.points.iter().map(|p| p.delta / k_ground).collect();
    let al: Vec<f64> = fwd.track.points.iter().map(|p| p.alpha.abs()).collect();
    let h: Vec<f64> = fwd.track.points.iter().map(|p| p.h_norm / q_norm).collect();
    let mut plot = LinePlot::new(format!("forward decay, a = {a}"), "t", "size")
        .log_y()
        .with_series(Series::new("delta/K(Q)", &t, &d))
        .with_series(Series::new("|alpha|", &t, &al))
        .with_series(Series::new("||h||/||Q||", &t, &h));
    if let (Some(&t0), Some(&d0)) = (t.first(), d.first()) {
        if d0 > 0.0 {
            let reference: Vec<f64> = t.iter().map(|s| d0 * (-lambda1 * (s - t0)).exp()).collect();
            plot = plot.with_series(Series::new("exp(-lambda1 t)", &t, &reference));
        }
    }
    run.write_text("delta_decay.svg", &plot.render())?;
    Ok(())
}

fn write_backward(run: &mut Run, b: &BackwardReport) -> Result<(), CliError> {
    let rows: Vec<Vec<f64>> = b.times.iter().zip(&b.kinetic).zip(&b.l4).map(|((t, k), l)| vec![*t, *k, *l]).collect();
    run.write("backward_trace.csv", |w| io::write_table_csv(w, &["t", "K", "L4norm"], &rows))?;
    let mut plot = LinePlot::new(format!("backward leg: {}", b.note), "t", "K(u)")
        .log_y()
        .with_series(Series::new("K", &b.times, &b.kinetic))
        .with_series(Series::new("||u||_L4", &b.times, &b.l4));
    if let (Status::BlowupDetected { .. }, Some(&t)) = (b.status, b.times.last()) {
        plot = plot.with_marker(t, "blow-up");
    }
    run.write_text("backward_kinetic.svg", &plot.render())?;
    Ok(())
}

pub fn special_cmd(run: &mut Run) -> Result<(), CliError> {
    let masses = run.cfg.mass_triple()?;
    let grid = run.cfg.grid.build()?;
    run.record_grid(&grid);
    let sec = run.cfg.special.clone();
    let a = sec.amplitude;
    if !a.is_finite() {
        return Err(CliError::Config(format!("amplitude must be finite, got {a}")));
    }
    let bg = Background::discrete(&masses, &grid)?;
    eprintln!("lambda1 = {:.8}, K(Q) = {:.6}", bg.lambda1(), bg.k_ground);
    let (_, residual_t0, forward) = special::verify_forward(a, &sec.series, &bg)?;
    let q_norm = bg.gs.qvec.h1_norm(&grid);
    write_forward(run, a, bg.lambda1(), bg.k_ground, q_norm, &forward)?;
    eprintln!(
        "forward: delta rate {:.5} = {:.4} lambda1 ({})",
        forward.delta_fit.rate,
        forward.delta_fit.ratio_to_lambda1,
        forward.status.label()
    );

    let mut report = ScenarioReport {
        a,
        lambda1: bg.lambda1(),
        k: sec.series.k,
        residual_t0,
        passed: special::scenario_passed(a, &bg, &forward, None),
        forward,
        backward: None,
    };
    // the forward results stay on disk if the backward leg fails
    run.write_json("special.json", &report)?;

    if sec.backward {
        let bgrid = sec.backward_grid.build()?;
        run.record_grid(&bgrid);
        let bbg = if bgrid.r() == grid.r() { bg.clone() } else { Background::discrete(&masses, &bgrid)? };
        let series = special::build_series(a, sec.series.k, &bbg)?;
        let back = special::verify_backward(a, &sec.series, &bbg, &series)?;
        eprintln!("backward: {}", back.note);
        write_backward(run, &back)?;
        report.passed = special::scenario_passed(a, &bg, &report.forward, Some(&back));
        report.backward = Some(back);
        run.write_json("special.json", &report)?;
    }
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Falsified(format!("special solution checks failed for a = {a}; see special.json")))
    }
}

pub fn virial_scan_cmd(run: &mut Run) -> Result<(), CliError> {
    let lattice = run
        .cfg
        .virial
        .lattice
        .iter()
        .map(|m| MassTriple::new(m[0], m[1], m[2]))
        .collect::<Result<Vec<_>, _>>()?;
    let scfg = run.cfg.virial.scan.clone();
    let grid = RadialGrid::stretched(scfg.r_max, scfg.n, scfg.stretch)?;
    run.record_grid(&grid);
    let table = identity_scan(&lattice, &scfg)?;
    eprintln!("selected resonance condition: {}", table.selected);
    run.write("scan.csv", |w| io::write_scan_csv(w, &table))?;
    run.write_json("scan.json", &table)?;
    let heat = HeatMap {
        title: format!("virial defects (selected: {})", table.selected),
        row_labels: table.rows.iter().map(|r| format!("({}, {}, {})", r.masses[0], r.masses[1], r.masses[2])).collect(),
        col_labels: vec!["dV/dt - I_R".into(), "dI_R/dt - F_R".into(), "max |dV/dt|".into(), "F_inf".into()],
        values: table.rows.iter().map(|r| vec![r.defect_v, r.defect_i, r.max_dv, r.f_inf_defect]).collect(),
    };
    run.write_text("heatmap.svg", &heat.render())?;
    for r in table.rows.iter().filter(|r| r.error.is_some()) {
        eprintln!("triple {:?} failed: {}", r.masses, r.error.as_deref().unwrap_or_default());
    }
    // a lattice with both classes present must separate them
    let testable = table.rows.iter().filter(|r| r.testable);
    let (mut inside, mut outside) = (false, false);
    for r in testable {
        if r.galilean_condition || r.paper_condition {
            inside = true;
        } else {
            outside = true;
        }
    }
    let mut failures = Vec::new();
    if inside && outside && table.selected == "none" {
        failures.push("no resonance condition separates the dV/dt defects".into());
    }
    falsified(failures)
}

#[derive(Serialize)]
struct RoundTripRow {
    applied: [f64; 3],
    recovered: [f64; 3],
    error: f64,
}

#[derive(Serialize)]
struct Decomposition {
    input: String,
    eta: Option<f64>,
    theta: Option<f64>,
    mu: Option<f64>,
    alpha: Option<f64>,
    delta: Option<f64>,
    h_norm: Option<f64>,
    defect_max: Option<f64>,
    /// Why the input could not be decomposed, e.g. it lies outside the tube.
    error: Option<String>,
}

pub fn modulate_cmd(run: &mut Run) -> Result<(), CliError> {
    let masses = run.cfg.mass_triple()?;
    let grid = run.cfg.modulate.grid.build()?;
    run.record_grid(&grid);
    let gs = ground_state(&masses, &grid);
    let ops = LinearizedOps::assemble(&masses, &grid, &gs)?;
    let m = Modulator::new(&grid, &gs, &ops)?;
    let sec = run.cfg.modulate.clone();
    let mut failures = Vec::new();

    // comparability of delta, |alpha| and ||h|| in scale-free units, on
    // threshold-energy data Q + eps w
    let w = smooth_perturbation(&grid, run.cfg.seed);
    let w = w.scale(1.0 / w.h1_norm(&grid));
    let mut rows = Vec::new();
    for &eps in &sec.epsilons {
        let s = m.modulate(&threshold_perturbation(&grid, &gs, &w, eps)?, None)?;
        let (d, a, h) = (s.delta / m.k_ground(), s.alpha.abs(), s.h_norm / m.q_norm());
        let spread = d.max(a).max(h) / d.min(a).min(h);
        if !(spread <= 10.0) {
            failures.push(format!("eps {eps}: delta, |alpha|, ||h|| spread by {spread:.2}"));
        }
        rows.push(vec![eps, d, a, h, s.eta, s.theta, s.mu, s.defect_max()]);
    }
    run.write("modulate.csv", |wr| {
        io::write_table_csv(wr, &["eps", "delta_rel", "alpha_abs", "h_rel", "eta", "theta", "mu", "defect_max"], &rows)
    })?;

    let mut trips = Vec::new();
    for &[eta, theta, mu] in &sec.round_trip {
        let u = apply_symmetry(&grid, &gs.qvec, eta, theta, mu)?.field;
        let s = m.modulate(&u, None)?;
        let (e0, t0) = canonical_phases(-eta, -theta);
        let (e1, t1) = canonical_phases(s.eta, s.theta);
        let err = (e1 - e0).abs().max((t1 - t0).abs()).max((s.mu * mu - 1.0).abs());
        if !(err <= ROUND_TRIP_TOL) {
            failures.push(format!("round trip ({eta}, {theta}, {mu}) recovered with error {err:.2e}"));
        }
        trips.push(RoundTripRow { applied: [eta, theta, mu], recovered: [s.eta, s.theta, s.mu], error: err });
    }
    let trip_rows: Vec<Vec<f64>> =
        trips.iter().map(|r| [r.applied.as_slice(), r.recovered.as_slice(), &[r.error]].concat()).collect();
    run.write("round_trip.csv", |wr| {
        io::write_table_csv(wr, &["eta", "theta", "mu", "eta_rec", "theta_rec", "mu_rec", "error"], &trip_rows)
    })?;

    if !sec.inputs.is_empty() {
        let mut dec = Vec::new();
        for path in &sec.inputs {
            let (g, u) = io::read_snapshot(io::open(path)?)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let input = path.display().to_string();
            let result = if g.r() != grid.r() {
                Err(format!("written on a different grid (n = {}, r_max = {})", g.n(), g.r_max()))
            } else {
                m.modulate(&u, None).map_err(|e| e.to_string())
            };
            dec.push(match result {
                Ok(s) => Decomposition {
                    input,
                    eta: Some(s.eta),
                    theta: Some(s.theta),
                    mu: Some(s.mu),
                    alpha: Some(s.alpha),
                    delta: Some(s.delta),
                    h_norm: Some(s.h_norm),
                    defect_max: Some(s.defect_max()),
                    error: None,
                },
                Err(e) => {
                    eprintln!("{input}: {e}");
                    Decomposition {
                        input,
                        eta: None,
                        theta: None,
                        mu: None,
                        alpha: None,
                        delta: None,
                        h_norm: None,
                        defect_max: None,
                        error: Some(e),
                    }
                }
            });
        }
        run.write_json("decompositions.json", &dec)?;
    }
    for f in &failures {
        eprintln!("{f}");
    }
    falsified(failures)
}

