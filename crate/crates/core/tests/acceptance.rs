//! The project's exit gate: nine numbered end-to-end checks, each printed
//! as one PASS or FAIL line with its measured numbers. Output goes to the
//! raw stdout so the lines survive the harness capture.
//!
//! The heavy checks propagate at desk scale (box 400 a.u., 31 channels,
//! one optical cycle at omega 0.02), so the full gate costs a few hours
//! of single-core time. Run it with `cargo test --test acceptance`.

use ionrate::adk::{adk_delta_p, rate_derivative, AdkParams};
use ionrate::atom::{bound_states, calibrate_yukawa, BoundProjector, Potential, RadialGrid};
use ionrate::fields::PulseSpec;
use ionrate::rates::{self, delay_report, ScanContext, ScanParams};
use ionrate::ATTOSECONDS_PER_AU;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

const OMEGA: f64 = 0.02;
const DESK_E0: f64 = 0.06;
const DESK_R: f64 = 400.0;
const DESK_L_MAX: usize = 30;
const DR: f64 = 0.05;
const DT: f64 = 0.02;
const L_B: usize = 12;
const E0_AXIS: [f64; 5] = [0.03, 0.04, 0.05, 0.06, 0.07];
const LEVELS: [f64; 2] = [0.5, 0.8];

fn period() -> f64 {
    2.0 * PI / OMEGA
}

/// Print past the harness capture so every gate line lands in the test
/// log even when the gate passes.
fn emit(line: &str) {
    use std::io::Write;
    let mut out = std::io::stdout();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

type Check = Result<String, String>;

fn fail(msg: String) -> Check {
    Err(msg)
}

fn run_check(failures: &mut Vec<&'static str>, tag: &'static str, what: &str, f: impl FnOnce() -> Check) {
    let t0 = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f));
    let minutes = t0.elapsed().as_secs_f64() / 60.0;
    match outcome {
        Ok(Ok(detail)) => emit(&format!("[{tag}] PASS {what}: {detail} ({minutes:.1} min)")),
        Ok(Err(why)) => {
            emit(&format!("[{tag}] FAIL {what}: {why} ({minutes:.1} min)"));
            failures.push(tag);
        }
        Err(payload) => {
            let why = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panicked".into());
            emit(&format!("[{tag}] FAIL {what}: panicked: {why} ({minutes:.1} min)"));
            failures.push(tag);
        }
    }
}

fn desk_grid() -> Result<RadialGrid, String> {
    RadialGrid::from_extent(DR, DESK_R).map_err(|e| e.to_string())
}

fn desk_params(potential: Potential, alpha: f64, epsilon: f64, tag: &str) -> Result<ScanParams, String> {
    Ok(ScanParams {
        potential,
        grid: desk_grid()?,
        l_max: DESK_L_MAX,
        dt: DT,
        l_b: L_B,
        omega: OMEGA,
        n_cycles: 1,
        alpha,
        epsilon,
        fingerprint: tag.to_string(),
    })
}

fn base_pulse(e0: f64) -> PulseSpec {
    PulseSpec::new(e0, OMEGA, 1).expect("static pulse parameters")
}

/// Nine-point kick grid spaced by a thirty-second of the optical cycle,
/// centered on the field maximum.
fn tau_axis() -> Vec<f64> {
    let center = base_pulse(DESK_E0).field_peak_time();
    let step = period() / 32.0;
    (0..9).map(|j| center + (j as f64 - 4.0) * step).collect()
}

// [1] Field-free structure on the production grid, plus the convergence
// order of the discretization between step 0.1 and 0.05.
fn check_hydrogen_structure() -> Check {
    let fine = RadialGrid::from_extent(DR, 700.0).map_err(|e| e.to_string())?;
    let states = bound_states(&fine, &Potential::Coulomb, 0, 3);
    if states.len() != 3 {
        return fail(format!("expected 3 s states, found {}", states.len()));
    }
    let mut worst = 0.0f64;
    for (i, s) in states.iter().enumerate() {
        let n = (i + 1) as f64;
        let err = (s.energy + 0.5 / (n * n)).abs();
        worst = worst.max(err);
        if err >= 1e-3 {
            return fail(format!("n={} energy {} off by {err:.2e}", i + 1, s.energy));
        }
    }
    let coarse = RadialGrid::from_extent(0.1, 700.0).map_err(|e| e.to_string())?;
    let ground_coarse = bound_states(&coarse, &Potential::Coulomb, 0, 1)[0].energy;
    let err_coarse = (ground_coarse + 0.5).abs();
    let err_fine = (states[0].energy + 0.5).abs();
    let order = (err_coarse / err_fine).log2();
    if !(1.8..=2.2).contains(&order) {
        return fail(format!("step-halving order {order:.3} is not second order"));
    }
    Ok(format!("s-state energies off by at most {worst:.1e} a.u.; step-halving order {order:.3}"))
}

// Shared desk-scale propagations: one unkicked reference and three kicked
// variants reused by checks 2, 4, and 5.
struct DeskRuns {
    ctx: ScanContext,
    p_base: f64,
    psi: ionrate::atom::WaveFunction,
    dp_alpha_full: f64,
    dp_alpha_half: f64,
    dp_wide_kick: f64,
}

fn desk_runs() -> Result<DeskRuns, String> {
    let params = desk_params(Potential::Coulomb, 0.001, period() / 1000.0, "gate-desk")?;
    let ctx = ScanContext::new(params).map_err(|e| e.to_string())?;
    let peak = base_pulse(DESK_E0).field_peak_time();

    let outcome = ctx
        .propagator()
        .propagate(ctx.initial_state(), &base_pulse(DESK_E0))
        .map_err(|e| e.to_string())?;
    let p_base = ctx
        .projector()
        .ionization_probability(&outcome.psi)
        .map_err(|e| e.to_string())?;

    let kicked = |alpha: f64, eps: f64| -> Result<f64, String> {
        let pulse = base_pulse(DESK_E0)
            .with_signal(peak, alpha, eps)
            .map_err(|e| e.to_string())?;
        Ok(ctx.ionization_run(&pulse).map_err(|e| e.to_string())?.probability)
    };
    let dp_alpha_full = kicked(0.001, period() / 1000.0)? - p_base;
    let dp_alpha_half = kicked(0.0005, period() / 1000.0)? - p_base;
    let dp_wide_kick = kicked(0.001, period() / 30.0)? - p_base;

    Ok(DeskRuns { ctx, p_base, psi: outcome.psi, dp_alpha_full, dp_alpha_half, dp_wide_kick })
}

// [2] The bound projector is an orthogonal projector in practice, and the
// ionization probability is stable against widening the channel cutoff.
fn check_projector(runs: &DeskRuns) -> Check {
    let proj12 = runs.ctx.projector();
    let q = proj12.project(&runs.psi).map_err(|e| e.to_string())?;
    let qq = proj12.project(&q).map_err(|e| e.to_string())?;
    let mut diff = qq.clone();
    diff.sub_assign(&q);
    let idem = diff.norm() / q.norm();
    if idem >= 1e-12 {
        return fail(format!("projector not idempotent: relative defect {idem:.2e}"));
    }

    let mut unbound = runs.psi.clone();
    unbound.sub_assign(&q);
    let total = runs.psi.norm_sq();
    let pythagoras = ((q.norm_sq() + unbound.norm_sq()) - total).abs() / total;
    if pythagoras >= 1e-12 {
        return fail(format!("norm split violated at {pythagoras:.2e}"));
    }

    let grid = desk_grid()?;
    let proj10 = BoundProjector::build(grid, &Potential::Coulomb, 10);
    let p10 = proj10.ionization_probability(&runs.psi).map_err(|e| e.to_string())?;
    let p12 = runs.p_base;
    let cutoff_shift = ((p10 - p12) / p12).abs();
    if cutoff_shift >= 1e-4 {
        return fail(format!("cutoff 10 -> 12 moves P by {cutoff_shift:.2e} relative"));
    }
    Ok(format!(
        "idempotence defect {idem:.1e}, norm split defect {pythagoras:.1e}, cutoff shift {cutoff_shift:.1e}"
    ))
}

// [3] Null and unitarity suite: with a vanishing field nothing ionizes,
// the norm stays put step by step, and the box edge stays dark.
fn check_null_run() -> Check {
    let params = desk_params(Potential::Coulomb, 0.001, period() / 1000.0, "gate-null")?;
    let ctx = ScanContext::new(params).map_err(|e| e.to_string())?;
    let pulse = PulseSpec::new(1e-30, OMEGA, 1).map_err(|e| e.to_string())?;
    let out = ctx
        .propagator()
        .propagate(ctx.initial_state(), &pulse)
        .map_err(|e| e.to_string())?;
    let p = ctx.projector().ionization_probability(&out.psi).map_err(|e| e.to_string())?;

    if p >= 1e-8 {
        return fail(format!("vanishing field ionized P = {p:.2e}"));
    }
    if out.max_step_drift >= 1e-12 {
        return fail(format!("per-step drift {:.2e}", out.max_step_drift));
    }
    if out.run_drift.abs() >= 1e-8 {
        return fail(format!("full-run drift {:.2e}", out.run_drift));
    }
    if out.outer_fraction >= 1e-6 || out.reflection_flagged {
        return fail(format!(
            "edge population {:.2e}, flagged {}",
            out.outer_fraction, out.reflection_flagged
        ));
    }
    Ok(format!(
        "P {p:.1e}, step drift {:.1e}, run drift {:.1e}, edge {:.1e}",
        out.max_step_drift, out.run_drift, out.outer_fraction
    ))
}

// [4] The probability response is linear in the kick area at the
// production amplitude: halving alpha halves the response.
fn check_linearity(runs: &DeskRuns) -> Check {
    let ratio = runs.dp_alpha_full / runs.dp_alpha_half;
    if (ratio - 2.0).abs() > 0.1 {
        return fail(format!(
            "dP({:.1e})/dP({:.1e}) = {ratio:.4}, outside 2 +- 0.1",
            runs.dp_alpha_full, runs.dp_alpha_half
        ));
    }
    Ok(format!(
        "dP {:.4e} vs {:.4e}, ratio {ratio:.4}",
        runs.dp_alpha_full, runs.dp_alpha_half
    ))
}

// [5] The extracted response does not depend on the kick width: a kick
// thirty-three times wider moves the number by a few percent at most.
fn check_kick_width(runs: &DeskRuns) -> Check {
    let rel = ((runs.dp_wide_kick - runs.dp_alpha_full) / runs.dp_alpha_full).abs();
    if rel >= 0.03 {
        return fail(format!(
            "width T/30 vs T/1000 moves dP by {:.2}%",
            rel * 100.0
        ));
    }
    Ok(format!("width T/30 vs T/1000 moves dP by {:.2}%", rel * 100.0))
}

// [6] The quasistatic reference surface: its contours center exactly on
// the field peak, the table is time-reversal symmetric, and the analytic
// field derivative agrees with finite differences.
fn check_quasistatic_reference() -> Check {
    let params = AdkParams::default();
    let pulse = base_pulse(DESK_E0)
        .with_signal(base_pulse(DESK_E0).duration() / 2.0, 0.001, period() / 1000.0)
        .map_err(|e| e.to_string())?;
    let taus = tau_axis();
    let table = ionrate::adk::adk_contours(&E0_AXIS, &taus, &pulse, &params)
        .map_err(|e| e.to_string())?;
    let report = delay_report(&table, &LEVELS, &base_pulse(DESK_E0));
    if !report.errors.is_empty() {
        return fail(format!("contour analysis errors: {:?}", report.errors));
    }
    let bound = 1e-3 * period();
    let mut worst_mid = 0.0f64;
    for row in &report.rows {
        for level in &row.levels {
            worst_mid = worst_mid.max(level.delay_au.abs());
            if level.delay_au.abs() >= bound {
                return fail(format!(
                    "contour midpoint off the field peak by {:.2e} au at E0 {} level {}",
                    level.delay_au, row.e0, level.level
                ));
            }
        }
    }

    let t1 = pulse.duration();
    let mut worst_sym = 0.0f64;
    for j in 1..64usize {
        let tau = j as f64 * t1 / 64.0;
        let a = adk_delta_p(0.05, tau, 0.001, &pulse, &params).map_err(|e| e.to_string())?;
        let b = adk_delta_p(0.05, t1 - tau, 0.001, &pulse, &params).map_err(|e| e.to_string())?;
        let rel = if a == 0.0 && b == 0.0 { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) };
        worst_sym = worst_sym.max(rel);
    }
    if worst_sym >= 1e-10 {
        return fail(format!("mirror asymmetry {worst_sym:.2e} relative"));
    }

    let mut worst_fd = 0.0f64;
    for k in 0..50 {
        let e = 0.02 + 0.13 * k as f64 / 49.0;
        let h = 1e-6 * e;
        let analytic = rate_derivative(e, &params).map_err(|x| x.to_string())?;
        let numeric = (ionrate::adk::rate(e + h, &params) - ionrate::adk::rate(e - h, &params))
            / (2.0 * h);
        let rel = ((analytic - numeric) / analytic).abs();
        worst_fd = worst_fd.max(rel);
    }
    if worst_fd >= 1e-5 {
        return fail(format!("derivative vs finite differences off by {worst_fd:.2e}"));
    }
    Ok(format!(
        "midpoints within {worst_mid:.1e} au of the peak, mirror asymmetry {worst_sym:.1e}, derivative agreement {worst_fd:.1e}"
    ))
}

/// Shared engine for checks 7 and 8: full desk-scale scan over the five
/// field strengths and nine kick times, then the delay analysis; every
/// row must analyze cleanly and every delay must sit below one grid step.
fn scan_delay_bound(potential: Potential, tag: &str) -> Check {
    let params = desk_params(potential, 0.001, period() / 1000.0, tag)?;
    let ctx = ScanContext::new(params).map_err(|e| e.to_string())?;
    let taus = tau_axis();
    let table = rates::scan(&ctx, &E0_AXIS, &taus).map_err(|e| e.to_string())?;
    if !table.failures.is_empty() {
        let first = &table.failures[0];
        return fail(format!(
            "{} cells failed, first at row {} col {:?}: {}",
            table.failures.len(),
            first.e0_index,
            first.tau_index,
            first.message
        ));
    }
    let report = delay_report(&table, &LEVELS, &base_pulse(DESK_E0));
    if !report.errors.is_empty() {
        return fail(format!("delay analysis errors: {:?}", report.errors));
    }
    if report.rows.len() != E0_AXIS.len() {
        return fail(format!("only {} of {} rows analyzed", report.rows.len(), E0_AXIS.len()));
    }
    let step = report.tau_step;
    let mut worst = 0.0f64;
    for row in &report.rows {
        let mut row_worst = row.peak_delay_au.abs();
        for level in &row.levels {
            row_worst = row_worst.max(level.delay_au.abs());
        }
        worst = worst.max(row_worst);
        if row_worst >= step {
            return fail(format!(
                "E0 {} delay {row_worst:.2} au exceeds the {step:.2} au kick-grid step",
                row.e0
            ));
        }
    }
    Ok(format!(
        "max |delay| {worst:.2} au = {:.0} as, under the {step:.2} au grid step",
        worst * ATTOSECONDS_PER_AU
    ))
}

// [8] The same bound for screened wells whose depth is calibrated so the
// ground state sits at -0.5 a.u.
fn check_screened_wells() -> Check {
    let grid = desk_grid()?;
    let mut detail = String::new();
    for a in [2.0, 5.0] {
        let amplitude = calibrate_yukawa(a, -0.5, &grid).map_err(|e| e.to_string())?;
        let pot = Potential::Yukawa { amplitude, screening: a };
        let ground = bound_states(&grid, &pot, 0, 1)
            .first()
            .map(|s| s.energy)
            .ok_or_else(|| format!("screening {a}: calibrated well binds nothing"))?;
        if (ground + 0.5).abs() >= 1e-6 {
            return fail(format!("screening {a}: calibrated ground state at {ground}"));
        }
        match scan_delay_bound(pot, &format!("gate-yukawa-{a}")) {
            Ok(part) => {
                let _ = write!(detail, "a={a}: A={amplitude:.6}, {part}; ");
            }
            Err(why) => return fail(format!("screening {a}: {why}")),
        }
    }
    Ok(detail.trim_end_matches("; ").to_string())
}

// [9] Engineering determinism through the command-line front end: the
// same table bit for bit across worker counts and across an interrupted,
// resumed run; the config fingerprint present in the artifacts.
fn check_determinism() -> Check {
    use std::process::Command;
    let bin = env!("CARGO_BIN_EXE_ionrate");
    let dir = std::env::temp_dir().join(format!("ionrate-gate-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let cfg_text = "pulse.omega = 0.08\npulse.peak_field = 0.05\ngrid.r_max = 60\n\
                    propagation.l_max = 8\nprojector.l_b = 4\nkick.alpha = -0.002\n\
                    scan.e0 = 0.03,0.05\nscan.tau_count = 3\n";
    let cfg = dir.join("gate.cfg");
    std::fs::write(&cfg, cfg_text).map_err(|e| e.to_string())?;
    let fingerprint = ionrate::config::RunConfig::parse(cfg_text)
        .map_err(|e| e.to_string())?
        .fingerprint()
        .to_string();

    let run = |args: &[&str]| -> Result<(), String> {
        let out = Command::new(bin).args(args).output().map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!(
                "{args:?} exited {:?}: {}",
                out.status.code(),
                String::from_utf8_lossy(&out.stderr)
            ));
        }
        Ok(())
    };
    let cfg_s = cfg.to_str().unwrap();
    let w1 = dir.join("w1");
    let w2 = dir.join("w2");
    run(&["scan", "--config", cfg_s, "--out", w1.to_str().unwrap(), "--workers", "1"])?;
    run(&["scan", "--config", cfg_s, "--out", w2.to_str().unwrap(), "--workers", "2"])?;
    let table = std::fs::read(w1.join("scan.csv")).map_err(|e| e.to_string())?;
    if table != std::fs::read(w2.join("scan.csv")).map_err(|e| e.to_string())? {
        return fail("worker count changed the table bits".into());
    }

    let journal = std::fs::read_to_string(w1.join("scan.journal")).map_err(|e| e.to_string())?;
    let mut kept: Vec<&str> = journal.lines().take(4).collect();
    let resumed = dir.join("resumed");
    std::fs::create_dir_all(&resumed).map_err(|e| e.to_string())?;
    kept.push("");
    std::fs::write(resumed.join("scan.journal"), kept.join("\n")).map_err(|e| e.to_string())?;
    run(&["scan", "--config", cfg_s, "--out", resumed.to_str().unwrap(), "--resume"])?;
    if table != std::fs::read(resumed.join("scan.csv")).map_err(|e| e.to_string())? {
        return fail("resumed table differs from the uninterrupted one".into());
    }

    run(&["propagate", "--config", cfg_s, "--out", w1.to_str().unwrap()])?;
    run(&["eigen", "--config", cfg_s, "--out", w1.to_str().unwrap()])?;
    run(&["adk", "--config", cfg_s, "--out", w1.to_str().unwrap()])?;
    run(&[
        "delay",
        w1.join("scan.csv").to_str().unwrap(),
        "--config",
        cfg_s,
        "--out",
        w1.to_str().unwrap(),
    ])?;
    let mut carriers = 0;
    for name in ["scan.meta", "propagate.json", "eigen.meta", "adk.meta", "delay.meta"] {
        let body = std::fs::read_to_string(w1.join(name)).map_err(|e| e.to_string())?;
        if !body.contains(&fingerprint) {
            return fail(format!("{name} does not carry the config fingerprint"));
        }
        carriers += 1;
    }
    Ok(format!(
        "tables bitwise equal across workers and resume; fingerprint present in {carriers} artifacts"
    ))
}

#[test]
fn acceptance_gate() {
    let mut failures: Vec<&'static str> = Vec::new();
    emit("acceptance gate: 9 checks, desk-scale physics, expect a few hours");

    run_check(&mut failures, "1", "hydrogen structure", check_hydrogen_structure);
    run_check(&mut failures, "6", "quasistatic reference", check_quasistatic_reference);
    run_check(&mut failures, "9", "determinism and fingerprints", check_determinism);
    run_check(&mut failures, "3", "null and unitarity", check_null_run);

    let shared = desk_runs();
    match &shared {
        Ok(runs) => {
            emit(&format!(
                "    shared desk runs done: P_base = {:.6e}",
                runs.p_base
            ));
            run_check(&mut failures, "2", "projector sanity", || check_projector(runs));
            run_check(&mut failures, "4", "kick linearity", || check_linearity(runs));
            run_check(&mut failures, "5", "kick-width robustness", || check_kick_width(runs));
        }
        Err(why) => {
            for tag in ["2", "4", "5"] {
                emit(&format!("[{tag}] FAIL shared desk runs unavailable: {why}"));
                failures.push(match tag {
                    "2" => "2",
                    "4" => "4",
                    _ => "5",
                });
            }
        }
    }

    run_check(&mut failures, "7", "bare-well delay bound", || {
        scan_delay_bound(Potential::Coulomb, "gate-coulomb")
    });
    run_check(&mut failures, "8", "screened-well delay bound", check_screened_wells);

    if failures.is_empty() {
        emit("acceptance gate: all 9 checks passed");
    } else {
        emit(&format!("acceptance gate: FAILED checks {failures:?}"));
        panic!("acceptance gate failed: {failures:?}");
    }
}
