//! The nine suites. Each turns [`Settings`] into checks, loose measurements
//! and CSV tables; thresholds are fixed here and carry a short statement of
//! the claim they encode.

use std::time::Instant;

use fisher_hydro::brackets::{
    angular_momentum_check, bargmann_check, generator_value_with, AlgebraFloors, Coordinates, Generator,
};
use fisher_hydro::fields::{polar_decompose, PhysicalConstants, WaveField};
use fisher_hydro::functionals::{
    coefficient_scan, dg_entropy_identity, fisher_el_necessity_report, shannon_entropy_rate, DensitySample,
    RegulariserSpec, TIGHT_MASK_EPS,
};
use fisher_hydro::grid::{integrate, make_grid};
use fisher_hydro::propagate::{
    evolve, evolve_density_diffusion, step_linear, EvolutionKind, EvolutionSpec, DIFFUSION_MASK_EPS,
};
use fisher_hydro::residuals::{
    alpha_scan, continuity_residual, momentum_balance_residual, multi_mass_scan, ratio_grid, residual_sample,
    HjTerms, ResidualOptions, ScanResult, SnapshotTriple, RESIDUAL_MASK_EPS,
};
use fisher_hydro::states::{
    bump_density, gaussian_packet, harmonic_potential, hermite_energy, hermite_state, vortex_state,
};
use fisher_hydro::stresstests::{
    circulation, complexifier_scan, default_complexifier_cases, superposition_curve, superposition_residual,
    time_reversal_defect, Resolution, SuperpositionConfig,
};

use crate::config::{Settings, TestId};
use crate::error::CliError;
use crate::verdict::{Cell, Check, GridFingerprint, Op, Report, Table};

type SuiteResult = Result<(Report, GridFingerprint), CliError>;

/// Dispatch on the test id.
pub fn run_suite(s: &Settings) -> SuiteResult {
    match s.test {
        TestId::ScanAlpha => scan_alpha(s),
        TestId::Continuity => continuity(s),
        TestId::DgEntropy => dg_entropy(s),
        TestId::Circulation => circulation_suite(s),
        TestId::FisherEl => fisher_el(s),
        TestId::TimeReversal => time_reversal(s),
        TestId::Galilei => galilei(s),
        TestId::Complexifier => complexifier(s),
        TestId::Superposition => superposition(s),
    }
}

fn constants(s: &Settings) -> Result<PhysicalConstants, CliError> {
    Ok(PhysicalConstants::new(s.hbar, s.mass)?)
}

fn fingerprint(s: &Settings) -> GridFingerprint {
    GridFingerprint { n: s.n, dt: s.dt, length: s.length }
}

fn max_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m, v| if v.is_nan() { f64::NAN } else { m.max(v.abs()) })
}

/// Box, packet and time of the momentum-balance floor. The triple spacing is
/// small enough that the fourth-order stencil error dominates the centred
/// time difference, so the floor refines by more than 4× per doubling.
pub const MOMENTUM_LENGTH: f64 = 40.0;
pub const MOMENTUM_TIME: f64 = 0.5;
pub const MOMENTUM_BASE: Resolution = Resolution { n: 1024, dt: 0.000625 };

/// Momentum-balance residual of a free moving Gaussian at `factor · α⋆`.
pub fn momentum_floor(res: Resolution, factor: f64, c: &PhysicalConstants) -> Result<f64, CliError> {
    let g = make_grid(1, res.n, MOMENTUM_LENGTH)?;
    let v = vec![0.0; res.n];
    let psi0 = gaussian_packet(&g, &[0.0], 1.0, &[1.0])?;
    // The free kinetic factor is exact, so one step reaches the snapshot time.
    let psi = step_linear(&psi0, &v, MOMENTUM_TIME, c)?;
    let triple = SnapshotTriple::around(&psi, &v, EvolutionKind::Linear, res.dt, c)?;
    Ok(momentum_balance_residual(&triple, &v, factor * c.alpha_star(), c, RESIDUAL_MASK_EPS)?)
}

fn scan_alpha(s: &Settings) -> SuiteResult {
    let c = constants(s)?;
    let ratios = ratio_grid(s.alpha_min, s.alpha_max, s.alpha_steps);
    let step = (s.alpha_max - s.alpha_min) / (s.alpha_steps - 1) as f64;
    let opts = ResidualOptions { eps_mask: s.mask_eps, ..ResidualOptions::default() };
    let run = |n: usize, dt: f64, stride: usize, boost: f64| -> Result<ScanResult, CliError> {
        let g = make_grid(1, n, s.length)?;
        let psi = gaussian_packet(&g, &[0.0], 1.0, &[s.mass * boost / s.hbar])?;
        let spec = EvolutionSpec::new(EvolutionKind::Linear, dt, s.t_final, stride)?;
        let traj = evolve(&psi, &vec![0.0; n], "free", &spec, &c)?;
        Ok(alpha_scan(&traj, &ratios, &c, &opts)?)
    };
    let mut r = Report::default();

    let t0 = Instant::now();
    let base = run(s.n, s.dt, s.record_stride, 0.0)?;
    let elapsed = t0.elapsed().as_secs_f64();
    let g = "table1";
    r.at_most(g, "argmin_offset", (base.argmin - 1.0).abs(), step * (1.0 + 1e-9), "scan minimum within one grid step of the Fisher scale");
    r.is_true(g, "argmin_interior", !base.inconclusive, "scan minimum is not on the scan boundary");
    r.within(g, "min_residual", base.min_value, 1e-4, 1e-2, "discretisation floor of the HJ residual on a free Gaussian");
    r.at_most(g, "r_cont_mean", base.r_cont_mean, 1e-6, "continuity closes along the linear flow");
    r.at_most(g, "interior_local_minima", base.local_minima() as f64, 1.0, "single-minimum residual curve");
    r.at_most(g, "runtime_seconds", elapsed, 60.0, "wall-clock budget of one scan");
    r.note("argmin", base.argmin);
    r.note("min_residual", base.min_value);
    r.note("r_cont_mean", base.r_cont_mean);

    let boosted = run(s.n, s.dt, s.record_stride, s.boost)?;
    let diff = max_abs(base.residuals.iter().zip(&boosted.residuals).map(|(a, b)| a - b));
    r.is_true("boost", "argmin_identical", boosted.argmin == base.argmin, "Galilean boost leaves the scan minimum in place");
    r.at_most("boost", "max_curve_difference", diff, 1e-9, "Galilean boost leaves the residual curve unchanged");
    r.note("boost_max_curve_difference", diff);

    let mut headers = vec!["alpha_ratio[1]", "r_hj[1]", "r_hj_boosted[1]"];
    let refined = if s.refine {
        let fine = run(4 * s.n, s.dt / 4.0, 4 * s.record_stride, 0.0)?;
        r.is_true("refined", "argmin_unchanged", fine.argmin == base.argmin, "scan minimum stable under grid and step refinement");
        r.note("refined_argmin", fine.argmin);
        r.note("refined_min_residual", fine.min_value);
        headers.push("r_hj_refined[1]");
        Some(fine)
    } else {
        None
    };
    let mut curve = Table::new("scan_alpha_curve", &headers);
    for i in 0..ratios.len() {
        let mut row = vec![Cell::Num(ratios[i]), Cell::Num(base.residuals[i]), Cell::Num(boosted.residuals[i])];
        if let Some(f) = &refined {
            row.push(Cell::Num(f.residuals[i]));
        }
        curve.push(row);
    }
    r.tables.push(curve);

    // Oscillator ground states per mass on their own grid.
    let mm_grid = make_grid(1, 1024, 20.0)?;
    match multi_mass_scan(&mm_grid, &ratios, &s.masses, None, s.hbar, s.omega) {
        Ok(mm) => {
            let offset = mm.common_argmin.map_or(f64::INFINITY, |a| (a - 1.0).abs());
            r.at_most("multi_mass", "common_argmin_offset", offset, step * (1.0 + 1e-9), "every mass component minimised at the same coefficient ratio 1");
            let mut headers: Vec<String> = vec!["c[1]".into()];
            headers.extend(s.masses.iter().map(|m| format!("r_mass_{m}[1]")));
            let mut table = Table { name: "scan_alpha_multi_mass".into(), headers, rows: Vec::new() };
            for (i, cval) in ratios.iter().enumerate() {
                let mut row = vec![Cell::Num(*cval)];
                row.extend(mm.scans.iter().map(|sc| Cell::Num(sc.residuals[i])));
                table.push(row);
            }
            r.tables.push(table);
        }
        // A boundary minimum is a verdict on the scan window, not an abort.
        Err(fisher_hydro::Error::InconclusiveScan { argmin }) => {
            r.is_true("multi_mass", "argmin_interior", false, "every mass component has an interior minimum");
            r.note("multi_mass_boundary_argmin", argmin);
        }
        Err(e) => return Err(e.into()),
    }

    // The audit evaluates momentum balance at the configured coefficient.
    let floor = momentum_floor(MOMENTUM_BASE, 1.0, &c)?;
    let audit = momentum_floor(MOMENTUM_BASE, s.alpha_factor, &c)?;
    r.note("momentum_audit_floor", floor);
    r.note("momentum_audit_residual", audit);
    r.note("momentum_audit_alpha_factor", s.alpha_factor);
    r.advise(Check::new(
        "momentum_audit",
        "audit_at_floor",
        audit / floor,
        Op::AtMost,
        10.0,
        "momentum balance closes only at the Fisher scale; a larger ratio flags the configured coefficient",
    ));
    Ok((r, fingerprint(s)))
}

fn continuity(s: &Settings) -> SuiteResult {
    let c = constants(s)?;
    let a_star = c.alpha_star();
    let g = make_grid(1, s.n, s.length)?;
    let psi = hermite_state(&g, 0, s.mass, s.omega, s.hbar, 0.0)?;
    let v = harmonic_potential(&g, s.mass, s.omega, &[0.0]);
    let triple = SnapshotTriple::around(&psi, &v, EvolutionKind::Linear, s.dt, &c)?;
    let opts = ResidualOptions { eps_mask: s.mask_eps, ..ResidualOptions::generator() };
    let terms = HjTerms::new(&triple, &v, &c, &opts)?;
    let mut r = Report::default();

    let r0 = terms.residual(a_star);
    r.at_most("eigenstate", "r_hj_at_alpha_star", r0, 1e-8, "stationary state closes the HJ equation at the Fisher scale");
    r.at_most("eigenstate", "r_cont", terms.r_cont, 1e-10, "stationary state closes continuity");
    r.note("r_hj_at_alpha_star", r0);
    r.note("r_cont", terms.r_cont);

    let deltas = [0.05, 0.1, 0.2];
    let mut table = Table::new(
        "continuity_perturbation",
        &["delta[1]", "r_hj_plus[1]", "r_hj_minus[1]", "r_cont_plus[1]", "r_cont_minus[1]"],
    );
    let mut cont_change: f64 = 0.0;
    let mut curves = [Vec::new(), Vec::new()];
    for &d in &deltas {
        let mut row = vec![Cell::Num(d)];
        let mut conts = Vec::new();
        for (k, sign) in [1.0, -1.0].into_iter().enumerate() {
            let sample = residual_sample(&triple, &v, (1.0 + sign * d) * a_star, &c, &opts)?;
            curves[k].push(sample.r_hj);
            cont_change = cont_change.max((sample.r_cont - terms.r_cont).abs());
            row.push(Cell::Num(sample.r_hj));
            conts.push(sample.r_cont);
        }
        row.extend(conts.into_iter().map(Cell::Num));
        table.push(row);
    }
    r.tables.push(table);
    for (label, curve) in ["plus", "minus"].iter().zip(&curves) {
        let increasing = r0 < curve[0] && curve.windows(2).all(|w| w[1] > w[0]);
        r.is_true("eigenstate", &format!("r_hj_{label}_increasing"), increasing, "HJ residual grows with the coefficient offset");
        for k in 0..deltas.len() - 1 {
            let ratio = curve[k + 1] / curve[k];
            r.within(
                "eigenstate",
                &format!("r_hj_{label}_ratio_{}_{}", deltas[k + 1], deltas[k]),
                ratio,
                1.6,
                2.4,
                "HJ residual approximately linear in the coefficient offset",
            );
        }
    }
    r.at_most("eigenstate", "r_cont_change", cont_change, 1e-12, "continuity residual does not depend on the coefficient");

    let centred = HjTerms::new(&triple, &v, &c, &ResidualOptions { eps_mask: s.mask_eps, ..ResidualOptions::default() })?;
    r.note("r_hj_centred_route", centred.residual(a_star));

    if s.diffusion > 0.0 {
        let dg = SnapshotTriple::around(&psi, &v, EvolutionKind::DgDiffusion { d: s.diffusion }, s.dt, &c)?;
        let cont = continuity_residual(&dg, &v, &c, &ResidualOptions { eps_mask: s.mask_eps, ..ResidualOptions::default() })?;
        r.at_least("diffusion", "r_cont_diffusive", cont, 1e-3, "diffusive flow visibly violates continuity");
        r.note("r_cont_diffusive", cont);
    }

    let floor = momentum_floor(MOMENTUM_BASE, 1.0, &c)?;
    let fine = momentum_floor(MOMENTUM_BASE.refined(), 1.0, &c)?;
    let forced = momentum_floor(MOMENTUM_BASE, 1.2, &c)?;
    r.at_most("momentum", "floor_at_alpha_star", floor, 1e-5, "momentum balance closes at the Fisher scale up to discretisation");
    r.at_least("momentum", "floor_refinement_factor", floor / fine, 4.0, "the floor is discretisation error and shrinks under grid doubling");
    r.at_least("momentum", "forced_over_floor", forced / floor, 10.0, "a coefficient off the Fisher scale leaves a residual force density");
    let mut table = Table::new("continuity_momentum_balance", &["n[1]", "dt[time]", "alpha_ratio[1]", "residual[1]"]);
    for (res, factor, value) in [(MOMENTUM_BASE, 1.0, floor), (MOMENTUM_BASE.refined(), 1.0, fine), (MOMENTUM_BASE, 1.2, forced)] {
        table.push(vec![Cell::Int(res.n as i64), Cell::Num(res.dt), Cell::Num(factor), Cell::Num(value)]);
    }
    r.tables.push(table);
    Ok((r, fingerprint(s)))
}

/// Packet used by the wavefunction-level diffusion checks.
pub const DG_IDENTITY_GRID: (usize, f64) = (1024, 40.0);

fn dg_entropy(s: &Settings) -> SuiteResult {
    let c = constants(s)?;
    let g = make_grid(1, s.n, s.length)?;
    let d = s.diffusion;
    // Heat kernel from a unit-variance Gaussian.
    let rho0 = gaussian_packet(&g, &[0.0], 2f64.sqrt(), &[0.0])?.density();
    let still = vec![vec![0.0; s.n]];
    let spec = EvolutionSpec::new(EvolutionKind::DensityDiffusion { d }, s.dt, s.t_final, s.record_stride)?;
    let traj = evolve_density_diffusion(&g, &rho0, &still, d, &spec)?;
    let mut r = Report::default();

    let x = g.axis();
    let last = traj.densities.last().expect("initial density recorded");
    let var = integrate(&last.iter().zip(&x).map(|(p, x)| p * x * x).collect::<Vec<_>>(), &g);
    let t_end = *traj.times.last().expect("initial time recorded");
    let expected = 1.0 + 2.0 * d * t_end;
    r.at_most("heat_kernel", "variance_error", (var - expected).abs() / expected, 1e-8, "diffusion spreads the variance as 1 + 2Dt");

    let rates = shannon_entropy_rate(&traj, d, &still, TIGHT_MASK_EPS)?;
    let worst = max_abs(rates.iter().map(|e| {
        if e.predicted != 0.0 {
            (e.measured - e.predicted) / e.predicted
        } else {
            e.measured
        }
    }));
    r.at_most("entropy_rate", "worst_relative_error", worst, 1e-4, "Shannon entropy grows at D times the Fisher information");
    r.note("entropy_rate_worst_relative_error", worst);
    let mut table = Table::new("dg_entropy_rates", &["time[time]", "measured[1/time]", "predicted[1/time]"]);
    for e in &rates {
        table.push(vec![Cell::Num(e.time), Cell::Num(e.measured), Cell::Num(e.predicted)]);
    }
    r.tables.push(table);

    // Reversible transport by a uniform drift.
    let drift = vec![vec![0.5; s.n]];
    let spec0 = EvolutionSpec::new(EvolutionKind::DensityDiffusion { d: 0.0 }, s.dt, s.t_final, s.record_stride)?;
    let traj0 = evolve_density_diffusion(&g, &rho0, &drift, 0.0, &spec0)?;
    let rate0 = max_abs(shannon_entropy_rate(&traj0, 0.0, &drift, TIGHT_MASK_EPS)?.iter().map(|e| e.measured));
    r.at_most("reversible", "max_entropy_rate", rate0, 1e-10, "entropy is conserved without diffusion");
    r.note("reversible_max_entropy_rate", rate0);

    // Entropy balance of the diffusive wave flow along a trapped trajectory.
    let (n, length) = DG_IDENTITY_GRID;
    let gw = make_grid(1, n, length)?;
    let psi0 = gaussian_packet(&gw, &[0.0], 1.0, &[0.5])?;
    let v = harmonic_potential(&gw, s.mass, 0.5, &[0.0]);
    let spec = EvolutionSpec::new(EvolutionKind::DgDiffusion { d }, 0.005, 1.0, 40)?;
    let wave = evolve(&psi0, &v, "harmonic", &spec, &c)?;
    let mut table = Table::new("dg_entropy_balance", &["time[time]", "measured[1/time]", "predicted[1/time]"]);
    let mut worst: f64 = 0.0;
    for psi in &wave.snapshots {
        let e = dg_entropy_identity(psi, &v, d, 1e-4, &c, DIFFUSION_MASK_EPS)?;
        worst = worst.max(((e.measured - e.predicted) / e.predicted).abs());
        table.push(vec![Cell::Num(e.time), Cell::Num(e.measured), Cell::Num(e.predicted)]);
    }
    r.tables.push(table);
    r.at_most("dg_identity", "worst_relative_error", worst, 1e-6, "diffusive wave flow produces entropy at D times the Fisher information");
    r.note("dg_identity_worst_relative_error", worst);
    Ok((r, fingerprint(s)))
}

fn circulation_suite(s: &Settings) -> SuiteResult {
    let c = constants(s)?;
    let g = make_grid(2, s.n, s.length)?;
    let h = g.spacing();
    let center = [0.5 * h, 0.5 * h];
    let radii = [3usize, 8, 20];
    let mut r = Report::default();
    let mut table = Table::new(
        "circulation",
        &["winding[1]", "radius[cells]", "line[action]", "area[action]", "n_estimate[1]"],
    );
    let (mut worst_int, mut worst_gap) = (0.0f64, 0.0f64);
    let mut all_match = true;
    let quantum = 2.0 * std::f64::consts::PI * s.hbar;
    for winding in 0..=2 {
        let psi = vortex_state(&g, winding, 1.0, center)?;
        let mut found = Vec::new();
        for &radius in &radii {
            let rep = circulation(&psi, radius, center, &c)?;
            worst_int = worst_int.max(rep.integer_defect);
            worst_gap = worst_gap.max((rep.line_value - rep.area_value).abs() / rep.line_value.abs().max(quantum));
            all_match &= rep.nearest_integer == winding as i64;
            found.push(rep.nearest_integer);
            table.push(vec![
                Cell::Int(winding as i64),
                Cell::Int(radius as i64),
                Cell::Num(rep.line_value),
                Cell::Num(rep.area_value),
                Cell::Num(rep.n_estimate),
            ]);
        }
        r.is_true("loop_invariance", &format!("winding_{winding}_same_on_all_loops"), found.windows(2).all(|w| w[0] == w[1]), "integer circulation is unchanged under loop deformation");
    }
    r.at_most("quantisation", "worst_integer_defect", worst_int, 1e-6, "circulation is an integer multiple of 2πħ");
    r.is_true("quantisation", "windings_recovered", all_match, "constructed winding numbers are returned");
    r.at_most("quantisation", "worst_line_area_gap", worst_gap, 1e-6, "line and area forms of the circulation agree");
    r.tables.push(table);
    Ok((r, fingerprint(s)))
}

fn fisher_el(s: &Settings) -> SuiteResult {
    let c = constants(s)?;
    let g = make_grid(1, s.n, s.length)?;
    let eps = s.mask_eps;
    let excited = hermite_state(&g, 1, s.mass, s.omega, s.hbar, 0.0)?;
    let node_half_width = 0.05;
    let samples = vec![
        DensitySample::positive("gaussian", gaussian_packet(&g, &[0.0], 1.0, &[0.0])?.density(), eps),
        DensitySample::positive("bump", bump_density(&g, 4.0), eps),
        DensitySample::with_node("excited", &excited, 0.0, node_half_width, eps),
    ];
    let k = c.alpha_star();
    let specs = vec![
        RegulariserSpec::Fisher { c: k },
        RegulariserSpec::Constant { c: k },
        RegulariserSpec::Power { p: -0.5, c: k },
        RegulariserSpec::Power { p: -2.0, c: k },
        RegulariserSpec::Power { p: 0.5, c: k },
        RegulariserSpec::Power { p: 1.0, c: k },
    ];
    let rows = fisher_el_necessity_report(&samples, &specs, &g)?;
    let mut r = Report::default();
    let fisher = max_abs(rows.iter().filter(|x| x.is_fisher).map(|x| x.residual));
    let other = rows.iter().filter(|x| !x.is_fisher).map(|x| x.residual).fold(f64::INFINITY, f64::min);
    r.at_most("necessity", "fisher_worst_residual", fisher, 1e-9, "the Fisher EL field is a Laplacian quotient on every density");
    r.at_least("necessity", "other_best_residual", other, 1e-3, "no other regulariser family produces a Laplacian quotient");
    r.note("fisher_worst_residual", fisher);
    r.note("other_best_residual", other);
    let mut table = Table::new("fisher_el_necessity", &["density[label]", "family[label]", "residual[1]", "fitted_coefficient[1]"]);
    for row in &rows {
        table.push(vec![
            Cell::Text(row.rho_id.clone()),
            Cell::Text(row.family.clone()),
            Cell::Num(row.residual),
            Cell::Num(row.fitted_coefficient),
        ]);
    }
    r.tables.push(table);

    let v = harmonic_potential(&g, s.mass, s.omega, &[0.0]);
    let cs = ratio_grid(0.5, 1.5, 101);
    let scan = coefficient_scan(&samples[2], &v, hermite_energy(1, s.omega, s.hbar), k, &cs, &g)?;
    r.at_most("excited_scan", "argmin_offset", (scan.argmin - 1.0).abs(), 0.01 + 1e-12, "the node-masked excited state balances at the Fisher coefficient");
    r.note("excited_argmin", scan.argmin);
    let mut table = Table::new("fisher_el_excited_scan", &["c[1]", "residual[1]"]);
    for (cv, res) in scan.alphas.iter().zip(&scan.residuals) {
        table.push(vec![Cell::Num(*cv), Cell::Num(*res)]);
    }
    r.tables.push(table);
    Ok((r, fingerprint(s)))
}

fn time_reversal(s: &Settings) -> SuiteResult {
    let c = constants(s)?;
    let g = make_grid(1, s.n, s.length)?;
    let psi0 = gaussian_packet(&g, &[1.0], 1.0, &[0.5])?;
    let v = harmonic_potential(&g, s.mass, s.omega, &[0.0]);
    let rep = time_reversal_defect(&psi0, &v, s.t_final, s.dt, s.diffusion, &c)?;
    let twice = time_reversal_defect(&psi0, &v, 2.0 * s.t_final, s.dt, 0.0, &c)?;
    let mut r = Report::default();
    r.at_most("reversible", "defect_d0", rep.floor, 1e-10, "the linear flow is an involution under conjugation");
    let growth = if rep.floor > 0.0 { twice.floor / rep.floor } else { 1.0 };
    r.at_most("reversible", "floor_growth_on_doubled_horizon", growth, 4.0, "round-off accumulates at most linearly in the horizon");
    if s.diffusion > 0.0 {
        r.at_least("diffusive", "floor_ratio", rep.floor_ratio, 1e3, "diffusion breaks the involution far above round-off");
    }
    r.note("defect_d0", rep.floor);
    r.note("defect", rep.defect);
    r.note("floor_ratio", rep.floor_ratio);
    let mut table = Table::new("time_reversal", &["horizon[time]", "diffusion[1]", "defect[1]"]);
    table.push(vec![Cell::Num(s.t_final), Cell::Num(0.0), Cell::Num(rep.floor)]);
    table.push(vec![Cell::Num(s.t_final), Cell::Num(s.diffusion), Cell::Num(rep.defect)]);
    table.push(vec![Cell::Num(2.0 * s.t_final), Cell::Num(0.0), Cell::Num(twice.floor)]);
    r.tables.push(table);
    Ok((r, fingerprint(s)))
}

fn galilei(s: &Settings) -> SuiteResult {
    let c = constants(s)?;
    let a_star = c.alpha_star();
    let g = make_grid(1, s.n, s.length)?;
    let free = vec![0.0; s.n];
    let floors = AlgebraFloors::default();
    let mut r = Report::default();
    let mut table = Table::new(
        "galilei_brackets",
        &["state[label]", "identity[label]", "bracket[1]", "expected[1]", "deviation[1]", "tolerance[1]"],
    );
    let push_entries = |table: &mut Table, state: &str, report: &fisher_hydro::brackets::AlgebraReport| {
        for e in report.entries() {
            table.push(vec![
                Cell::Text(state.into()),
                Cell::Text(e.name.clone()),
                Cell::Num(e.bracket),
                Cell::Num(e.expected),
                Cell::Num(e.deviation),
                Cell::Num(e.tolerance),
            ]);
        }
    };
    let k = s.mass * s.boost / s.hbar;
    for (label, wave) in [("at_rest", 0.0), ("boosted", k)] {
        let psi = gaussian_packet(&g, &[-2.0], 1.0, &[wave])?;
        let hydro = polar_decompose(&psi, TIGHT_MASK_EPS, &c)?;
        let rep = bargmann_check(&hydro, &free, a_star, &c, s.t_final, floors)?;
        let momentum = generator_value_with(Generator::P(0), &hydro, &free, a_star, &c, s.t_final, &Coordinates::packet_centred(&hydro)?)?;
        r.at_most("free_closure", &format!("{label}_h_p"), rep.hp[0].deviation.abs(), 1e-10, "translations commute with the free Hamiltonian");
        r.at_most("free_closure", &format!("{label}_p_k_plus_m"), rep.pk_plus_m[0].deviation.abs(), 1e-10, "central charge of the Galilei algebra is the mass");
        let hk = rep.hk_plus_p[0].deviation.abs();
        if momentum.abs() > 0.0 && label == "boosted" {
            r.at_most("free_closure", "boosted_h_k_plus_p_relative", hk / momentum.abs(), 1e-8, "boost generator closes against momentum");
        } else {
            r.advise(Check::new("free_closure", &format!("{label}_h_k_plus_p"), hk, Op::AtMost, 1e-8, "boost generator closes against momentum"));
        }
        r.note(&format!("{label}_momentum"), momentum);
        push_entries(&mut table, label, &rep);
    }

    let trap = harmonic_potential(&g, s.mass, s.omega, &[0.0]);
    let psi = gaussian_packet(&g, &[-2.0], 1.0, &[0.5])?;
    let hydro = polar_decompose(&psi, TIGHT_MASK_EPS, &c)?;
    let rep = bargmann_check(&hydro, &trap, a_star, &c, 0.0, floors)?;
    r.at_most("trap_force", "h_p_minus_force", rep.hp[0].deviation.abs(), 1e-8, "in a trap the momentum bracket equals the mean force");
    r.is_true("trap_force", "nonclosure_reported", rep.hp[0].expected_nonclosure && rep.hp[0].expected.abs() > 0.0, "trapped state reports the expected non-closure");
    push_entries(&mut table, "trapped", &rep);
    r.tables.push(table);

    // Boost generator is conserved along the free flow.
    let psi = gaussian_packet(&g, &[-2.0], 1.0, &[k])?;
    let spec = EvolutionSpec::new(EvolutionKind::Linear, s.dt, 2.0, 100)?;
    let traj = evolve(&psi, &free, "free", &spec, &c)?;
    let origin = Coordinates::about(&g, &[0.0])?;
    let ks: Vec<f64> = traj
        .snapshots
        .iter()
        .map(|w| {
            let h = polar_decompose(w, TIGHT_MASK_EPS, &c)?;
            Ok(generator_value_with(Generator::K(0), &h, &free, a_star, &c, w.time, &origin)?)
        })
        .collect::<Result<_, CliError>>()?;
    let drift = max_abs(ks.iter().map(|x| (x - ks[0]) / ks[0].abs().max(1.0)));
    r.at_most("boost_conservation", "k_relative_drift", drift, 1e-8, "the boost generator is a constant of the free flow");
    r.note("k_relative_drift", drift);

    // Quantised angular momentum of a centred vortex in a central trap.
    let g2 = make_grid(2, 128, 20.0)?;
    let vortex: WaveField = vortex_state(&g2, 1, 1.5, [0.0, 0.0])?;
    let h2 = polar_decompose(&vortex, 1e-10, &c)?;
    let trap2 = harmonic_potential(&g2, s.mass, s.omega, &[0.0, 0.0]);
    let am = angular_momentum_check(&h2, &trap2, a_star, &c, 1e-9)?;
    r.at_most("angular_momentum", "lz_minus_hbar", (am.lz / s.hbar - 1.0).abs(), 1e-6, "a unit vortex carries one quantum of angular momentum");
    r.is_true("angular_momentum", "rotation_identities", am.pass, "angular momentum closes with momenta and commutes with a central Hamiltonian");
    r.note("lz", am.lz);
    r.note("h_lz", am.h_lz);
    Ok((r, fingerprint(s)))
}

/// Scan axes of the complexifier test; `s` is in units of `1/ħ`.
pub const COMPLEXIFIER_P: [f64; 6] = [0.3, 0.4, 0.5, 0.6, 0.7, 1.0];
pub const COMPLEXIFIER_S: [f64; 5] = [0.8, 0.9, 1.0, 1.1, 1.25];

fn complexifier(s: &Settings) -> SuiteResult {
    let c = constants(s)?;
    let g = make_grid(1, s.n, s.length)?;
    let cases = default_complexifier_cases(&g, &c)?;
    let s_grid: Vec<f64> = COMPLEXIFIER_S.iter().map(|x| x / s.hbar).collect();
    let scan = complexifier_scan(&COMPLEXIFIER_P, &s_grid, &cases, &c, s.dt)?;
    let mut r = Report::default();
    let (pi, si) = scan.argmin;
    let at_polar = (COMPLEXIFIER_P[pi] - 0.5).abs() < 1e-12 && (COMPLEXIFIER_S[si] - 1.0).abs() < 1e-12;
    r.is_true("rigidity", "argmin_at_polar_map", at_polar, "only the polar map linearises the flow");
    r.is_true("rigidity", "argmin_unique", scan.unique, "the minimum cell is unique");
    r.is_true("rigidity", "informative", scan.informative, "reference states carry gradients");
    r.at_most("rigidity", "min_defect", scan.min_value, 1e-6, "the polar map reproduces the linear equation up to discretisation");
    let far = (0..COMPLEXIFIER_P.len())
        .filter(|&i| (COMPLEXIFIER_P[i] - 0.5).abs() >= 0.1 - 1e-12)
        .flat_map(|i| scan.defects[i].iter().copied())
        .fold(f64::INFINITY, f64::min);
    r.at_least("rigidity", "min_defect_off_amplitude", far, 1e-2, "amplitude exponents away from 1/2 fail visibly");
    let unit = COMPLEXIFIER_S.iter().position(|&x| x == 1.0).expect("unit slope on the grid");
    let p_one = COMPLEXIFIER_P.iter().position(|&x| x == 1.0).expect("p = 1 on the grid");
    r.at_least("rigidity", "density_ansatz_defect", scan.defects[p_one][unit], 1e-2, "the density itself is not a linear variable");
    r.at_most("rigidity", "recovered_alpha_error", (scan.alpha - c.alpha_star()).abs() / c.alpha_star(), 1e-12, "the minimising slope recovers the Fisher scale");
    r.note("min_defect", scan.min_value);
    r.note("kappa", scan.kappa);
    let mut table = Table::new("complexifier_defects", &["p[1]", "s[1/action]", "defect[1]"]);
    for (i, p) in COMPLEXIFIER_P.iter().enumerate() {
        for (j, sv) in s_grid.iter().enumerate() {
            table.push(vec![Cell::Num(*p), Cell::Num(*sv), Cell::Num(scan.defects[i][j])]);
        }
    }
    r.tables.push(table);
    Ok((r, fingerprint(s)))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

fn superposition(s: &Settings) -> SuiteResult {
    let cfg = SuperpositionConfig {
        betas: s.betas.clone(),
        eps_reg: s.eps_reg,
        omega: s.omega,
        horizon: s.t_final,
        length: s.length,
        base: Resolution { n: s.n, dt: s.dt },
        hbar: s.hbar,
        mass: s.mass,
        ..SuperpositionConfig::default()
    };
    cfg.validate()?;
    let t0 = Instant::now();
    let curve = superposition_curve(&cfg)?;
    let elapsed = t0.elapsed().as_secs_f64();
    let mut r = Report::default();
    let g = "superposition";
    for (i, &beta) in curve.betas.iter().enumerate() {
        let (b, f) = (curve.base[i], curve.refined[i]);
        if beta == 0.0 {
            r.at_most(g, "linear_base", b, 1e-10, "linear evolution superposes exactly");
            r.at_most(g, "linear_refined", f, 1e-10, "linear evolution superposes exactly");
        } else {
            r.at_least(g, &format!("beta_{beta}_refined_over_base"), f / b, 0.9, "the nonlinear defect does not vanish under refinement");
        }
        if close(beta, 0.005) {
            r.within(g, "beta_0.005_base", b, 0.08, 0.35, "weak non-Fisher term already breaks superposition");
        }
        if close(beta, 0.02) || close(beta, 0.05) {
            r.within(g, &format!("beta_{beta}_base"), b, 1.2, 1.45, "strong non-Fisher term drives the states to near orthogonality");
        }
        r.note(&format!("base_beta_{beta}"), b);
        r.note(&format!("refined_beta_{beta}"), f);
    }
    if curve.betas.len() > 1 {
        r.is_true(g, "monotone_in_beta", curve.monotone, "the defect grows with the nonlinearity on both grids");
    }
    r.at_most(g, "runtime_seconds", elapsed, 180.0, "wall-clock budget of the full curve");

    let nonlinear: Vec<f64> = curve.betas.iter().copied().filter(|&b| b > 0.0).collect();
    if !nonlinear.is_empty() {
        let mut worst: f64 = 0.0;
        for scale in [10.0, 0.1] {
            let shifted = SuperpositionConfig { eps_reg: s.eps_reg * scale, ..cfg.clone() };
            for &beta in &nonlinear {
                let i = curve.betas.iter().position(|&b| b == beta).expect("beta in curve");
                let value = superposition_residual(&shifted, beta, cfg.base)?;
                worst = worst.max(((value - curve.base[i]) / curve.base[i]).abs());
            }
        }
        r.advise(Check::new(g, "eps_reg_sensitivity", worst, Op::AtMost, 0.1, "regulariser of the non-Fisher term shifted by a decade either way"));
        r.note("eps_reg_sensitivity", worst);
    }
    let mut table = Table::new("superposition_curve", &["beta[1]", "base[1]", "refined[1]"]);
    for i in 0..curve.betas.len() {
        table.push(vec![Cell::Num(curve.betas[i]), Cell::Num(curve.base[i]), Cell::Num(curve.refined[i])]);
    }
    r.tables.push(table);
    Ok((r, fingerprint(s)))
}
