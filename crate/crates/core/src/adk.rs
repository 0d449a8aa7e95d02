//! Quasistatic tunneling ionization: a closed-form rate for a hydrogenic
//! level, its analytic field derivative, and the purely instantaneous
//! response surface those two predict for the kick scan. The propagation
//! results are judged against this reference.

use crate::error::{Error, Result};
use crate::fields::PulseSpec;
use crate::rates::{instantaneous_probability, ScanResult};
use std::f64::consts::{LN_2, PI};

/// Level parameters of the quasistatic rate. Defaults describe the
/// hydrogen ground state; keeping them adjustable lets short-range
/// potentials calibrated to the same binding energy reuse the reference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdkParams {
    /// Binding energy of the level (a.u.).
    pub ionization_potential: f64,
    /// Asymptotic charge seen by the outgoing electron.
    pub effective_charge: f64,
}

impl Default for AdkParams {
    fn default() -> Self {
        Self { ionization_potential: 0.5, effective_charge: 1.0 }
    }
}

impl AdkParams {
    pub fn new(ionization_potential: f64, effective_charge: f64) -> Result<Self> {
        if !(ionization_potential > 0.0 && ionization_potential.is_finite()) {
            return Err(Error::Domain(format!(
                "ionization potential must be positive, got {ionization_potential}"
            )));
        }
        if !(effective_charge > 0.0 && effective_charge.is_finite()) {
            return Err(Error::Domain(format!(
                "effective charge must be positive, got {effective_charge}"
            )));
        }
        Ok(Self { ionization_potential, effective_charge })
    }
}

/// Static-field tunneling rate W(E), even in the sign of the field and
/// zero at zero field (the limit of the essential singularity). With
/// binding 1/2 and unit charge it reduces to (4/|E|)·exp(−2/(3|E|)).
pub fn rate(e: f64, p: &AdkParams) -> f64 {
    let f = e.abs();
    if f == 0.0 {
        return 0.0;
    }
    let kappa = (2.0 * p.ionization_potential).sqrt();
    let n_star = p.effective_charge / kappa;
    let f0 = kappa * kappa * kappa;
    // squared asymptotic normalization 2^(2n*)/(n*·Γ(n*+1)·Γ(n*)), kept in
    // logs so large effective quantum numbers cannot overflow
    let ln_c2 =
        2.0 * n_star * LN_2 - n_star.ln() - libm::lgamma(n_star + 1.0) - libm::lgamma(n_star);
    let ln_w = ln_c2
        + p.ionization_potential.ln()
        + (2.0 * n_star - 1.0) * (2.0 * f0 / f).ln()
        - 2.0 * f0 / (3.0 * f);
    ln_w.exp()
}

/// Analytic dW/dE. The zero-field point is an essential singularity of
/// the closed form and is rejected rather than approximated.
pub fn rate_derivative(e: f64, p: &AdkParams) -> Result<f64> {
    if e == 0.0 {
        return Err(Error::SingularDerivative);
    }
    let f = e.abs();
    let kappa = (2.0 * p.ionization_potential).sqrt();
    let n_star = p.effective_charge / kappa;
    let f0 = kappa * kappa * kappa;
    Ok(e.signum() * rate(f, p) * (2.0 * f0 / (3.0 * f * f) - (2.0 * n_star - 1.0) / f))
}

/// Instantaneous-response prediction for one kick cell: the rate
/// derivative at the unperturbed field at the kick center, times the kick
/// area α√π. Nothing about the rest of the pulse enters.
pub fn adk_delta_p(
    e0: f64,
    tau: f64,
    alpha: f64,
    p: &PulseSpec,
    params: &AdkParams,
) -> Result<f64> {
    let pulse = PulseSpec::new(e0, p.omega, p.n_cycles)?;
    if !(tau > 0.0 && tau < pulse.duration()) {
        return Err(Error::Domain(format!("kick center {tau} outside the pulse")));
    }
    let d = rate_derivative(pulse.fundamental_field(tau), params)?;
    Ok(d * alpha * PI.sqrt())
}

/// One table cell; where the field vanishes the response takes its limit,
/// zero, instead of tripping the singular derivative.
fn cell_response(e: f64, alpha: f64, params: &AdkParams) -> f64 {
    if e == 0.0 {
        return 0.0;
    }
    rate_derivative(e, params).expect("field is nonzero") * alpha * PI.sqrt()
}

/// Quadrature panels behind every analytic baseline.
const BASELINE_QUAD: usize = 20_000;

/// The analytic response surface over an (E0, tau) grid, shaped like a
/// propagation scan so the same contour and delay tooling consumes both.
/// Kick parameters come from the pulse's probe signal, or default to
/// α = 0.001 and ε = T/1000 when it carries none; baselines integrate the
/// rate over the kick-free pulse. Every contour of this table is a level
/// set of the instantaneous field magnitude.
pub fn adk_contours(
    e0_values: &[f64],
    tau_values: &[f64],
    p: &PulseSpec,
    params: &AdkParams,
) -> Result<ScanResult> {
    if e0_values.is_empty() || tau_values.is_empty() {
        return Err(Error::Domain("contour axes must be nonempty".into()));
    }
    let (alpha, epsilon) = match p.signal {
        Some(s) => (s.alpha, s.epsilon),
        None => (0.001, p.period() / 1000.0),
    };
    let mut delta_p = Vec::with_capacity(e0_values.len());
    let mut baseline_p = Vec::with_capacity(e0_values.len());
    for &e0 in e0_values {
        let pulse = PulseSpec::new(e0, p.omega, p.n_cycles)?;
        let row: Vec<Option<f64>> = tau_values
            .iter()
            .map(|&tau| Some(cell_response(pulse.fundamental_field(tau), alpha, params)))
            .collect();
        delta_p.push(row);
        baseline_p.push(Some(instantaneous_probability(
            |e| rate(e, params),
            &pulse,
            BASELINE_QUAD,
        )));
    }
    let result = ScanResult {
        e0_values: e0_values.to_vec(),
        tau_values: tau_values.to_vec(),
        delta_p,
        baseline_p,
        alpha,
        epsilon,
        fingerprint: String::new(),
        failures: Vec::new(),
        flagged_cells: Vec::new(),
        flagged_baselines: Vec::new(),
    };
    result.validate()?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::{contour_crossings, delay_report};

    fn hydrogen() -> AdkParams {
        AdkParams::default()
    }

    #[test]
    fn rate_is_even_zero_at_zero_and_monotone_in_field_strength() {
        let p = hydrogen();
        assert_eq!(rate(0.0, &p), 0.0);
        assert_eq!(rate(-0.06, &p), rate(0.06, &p));
        let mut prev = 0.0;
        for k in 1..=100 {
            let w = rate(0.002 * k as f64, &p);
            assert!(w > prev, "rate not increasing at |E| = {}", 0.002 * k as f64);
            prev = w;
        }
    }

    #[test]
    fn hydrogen_rate_matches_frozen_values_and_the_closed_form() {
        let p = hydrogen();
        let frozen = [
            (0.05, 1.2956774338500901e-4),
            (0.06, 9.963559016520967e-4),
            (0.07, 4.176611004539988e-3),
        ];
        for (e, want) in frozen {
            let got = rate(e, &p);
            assert!((got / want - 1.0).abs() < 1e-12, "W({e}) = {got}, want {want}");
        }
        for k in 1..=50 {
            let f = 0.02 + 0.0026 * k as f64;
            let closed = (4.0 / f) * (-2.0 / (3.0 * f)).exp();
            assert!((rate(f, &p) / closed - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tighter_binding_suppresses_the_rate() {
        let h = hydrogen();
        let tight = AdkParams::new(0.9, 1.0).unwrap();
        assert!(rate(0.06, &tight) < rate(0.06, &h));
        assert!(rate(0.06, &tight) > 0.0);
        assert!(AdkParams::new(0.0, 1.0).is_err());
        assert!(AdkParams::new(0.5, -1.0).is_err());
    }

    #[test]
    fn derivative_matches_central_differences() {
        let p = hydrogen();
        let want = 0.1679044204635941;
        let got = rate_derivative(0.06, &p).unwrap();
        assert!((got / want - 1.0).abs() < 1e-12, "dW(0.06) = {got}");
        assert_eq!(rate_derivative(-0.06, &p).unwrap(), -got);
        assert!(matches!(rate_derivative(0.0, &p), Err(Error::SingularDerivative)));

        for k in 0..50 {
            let e = 0.02 + 0.13 * k as f64 / 49.0;
            let h = 1e-6 * e;
            let fd = (rate(e + h, &p) - rate(e - h, &p)) / (2.0 * h);
            let an = rate_derivative(e, &p).unwrap();
            assert!(
                (an / fd - 1.0).abs() < 1e-5,
                "at E = {e}: analytic {an}, central difference {fd}"
            );
            assert!(an > 0.0);
        }
        assert!(rate_derivative(0.05, &p).unwrap() < rate_derivative(0.07, &p).unwrap());
    }

    #[test]
    fn kick_cell_matches_explicit_quadrature_of_the_kick() {
        let p = hydrogen();
        let pulse = PulseSpec::new(0.06, 0.02, 1).unwrap();
        let t1 = pulse.duration();
        let tau = pulse.field_peak_time();
        let alpha = 0.001;
        let eps = t1 / 1000.0;
        let fast = adk_delta_p(0.06, tau, alpha, &pulse, &p).unwrap();
        // the same first-order response with the true kick shape under the
        // integral instead of the area times the midpoint derivative
        let slow = crate::numerics::simpson(
            |t| {
                let d = rate_derivative(pulse.fundamental_field(t), &p).unwrap();
                d * (alpha / eps) * (-((t - tau) / eps).powi(2)).exp()
            },
            tau - 10.0 * eps,
            tau + 10.0 * eps,
            4000,
        );
        assert!(
            (fast / slow - 1.0).abs() < 1e-3,
            "derivative-times-area {fast} vs kick quadrature {slow}"
        );
        // frozen product at the peak: dW/dE(−0.06)·α√π
        let want = -2.9760283663475627e-4;
        assert!((fast / want - 1.0).abs() < 1e-10, "fast = {fast}");
    }

    #[test]
    fn response_table_is_symmetric_under_time_reversal() {
        let p = hydrogen();
        let pulse = PulseSpec::new(0.06, 0.02, 1).unwrap();
        let t1 = pulse.duration();
        for k in 1..=9 {
            let s = 0.048 * t1 * k as f64;
            let a = adk_delta_p(0.06, 0.5 * t1 - s, 0.001, &pulse, &p).unwrap();
            let b = adk_delta_p(0.06, 0.5 * t1 + s, 0.001, &pulse, &p).unwrap();
            // the rate's exponent amplifies last-ulp field differences by
            // 2/(3E²)·ulp, up to ~1e-11 at the weakest sampled fields
            let scale = a.abs().max(b.abs()).max(1e-300);
            assert!((a - b).abs() / scale < 2e-11, "offset {s}: {a} vs {b}");
        }
        assert!(matches!(adk_delta_p(0.06, -1.0, 0.001, &pulse, &p), Err(Error::Domain(_))));
        assert_eq!(adk_delta_p(0.06, 0.5 * t1, 0.0, &pulse, &p).unwrap(), 0.0);
    }

    #[test]
    fn zero_field_cells_take_the_limit_value() {
        assert_eq!(cell_response(0.0, 0.001, &hydrogen()), 0.0);
        assert!(cell_response(0.06, 0.001, &hydrogen()) != 0.0);
    }

    #[test]
    fn contour_midpoints_sit_at_the_field_peak() {
        let p = hydrogen();
        let pulse = PulseSpec::new(0.06, 0.02, 1).unwrap();
        let peak = pulse.field_peak_time();
        let step = pulse.period() / 32.0;
        let tau: Vec<f64> = (-4..=4).map(|k| peak + k as f64 * step).collect();
        let table = adk_contours(&[0.05, 0.06, 0.07], &tau, &pulse, &p).unwrap();
        assert!(table.is_complete());
        let report = delay_report(&table, &[0.5, 0.8], &pulse);
        assert!(report.errors.is_empty(), "{:?}", report.errors);
        let tol = 1e-3 * pulse.period();
        for row in &report.rows {
            assert!(row.peak_delay_au.abs() < tol, "peak delay {}", row.peak_delay_au);
            for l in &row.levels {
                assert!(l.delay_au.abs() < tol, "level {} delay {}", l.level, l.delay_au);
            }
        }
        // baselines are small positive probabilities at these intensities
        for b in table.baseline_p.iter().map(|b| b.unwrap()) {
            assert!(b > 0.0 && b < 0.5, "baseline {b}");
        }
    }

    #[test]
    fn baseline_quadrature_is_self_converged() {
        let p = hydrogen();
        let pulse = PulseSpec::new(0.06, 0.02, 1).unwrap();
        let a = instantaneous_probability(|e| rate(e, &p), &pulse, 5000);
        let b = instantaneous_probability(|e| rate(e, &p), &pulse, 10_000);
        assert!((a / b - 1.0).abs() < 1e-6, "{a} vs {b}");
    }

    /// Least-squares parabola through (x, y) pairs; returns coefficients
    /// of y = c0 + c1·x + c2·x².
    fn fit_parabola(xs: &[f64], ys: &[f64]) -> [f64; 3] {
        let n = xs.len() as f64;
        let (mut s1, mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0, 0.0);
        let (mut t0, mut t1, mut t2) = (0.0, 0.0, 0.0);
        for (&x, &y) in xs.iter().zip(ys) {
            s1 += x;
            s2 += x * x;
            s3 += x * x * x;
            s4 += x * x * x * x;
            t0 += y;
            t1 += y * x;
            t2 += y * x * x;
        }
        let m = [[n, s1, s2], [s1, s2, s3], [s2, s3, s4]];
        let det = |m: &[[f64; 3]; 3]| {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        };
        let d = det(&m);
        let mut out = [0.0; 3];
        for c in 0..3 {
            let mut mc = m;
            for r in 0..3 {
                mc[r][c] = [t0, t1, t2][r];
            }
            out[c] = det(&mc) / d;
        }
        out
    }

    #[test]
    fn contour_lines_are_parabolic_near_the_peak() {
        let p = hydrogen();
        let pulse = PulseSpec::new(0.06, 0.02, 1).unwrap();
        let peak = pulse.field_peak_time();
        // near-peak regime: a narrow band of field strengths and a finely
        // sampled tau axis keep all crossings within a tenth of a cycle
        let step = pulse.period() / 512.0;
        let tau: Vec<f64> = (-20..=20).map(|k| peak + k as f64 * step).collect();
        let e0s: Vec<f64> = (0..8).map(|k| 0.055 + 0.00012 * k as f64).collect();
        let table = adk_contours(&e0s, &tau, &pulse, &p).unwrap();

        let magnitude = |row: &[Option<f64>]| -> Vec<f64> {
            row.iter().map(|v| v.unwrap().abs()).collect()
        };
        let weakest = magnitude(&table.delta_p[0]);
        let level = 0.84 * weakest.iter().cloned().fold(0.0, f64::max);

        // collect the contour line in the (tau, E0) plane
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (i, e0) in e0s.iter().enumerate() {
            let (l, r) = contour_crossings(&tau, &magnitude(&table.delta_p[i]), level).unwrap();
            xs.push(l - peak);
            ys.push(*e0);
            xs.push(r - peak);
            ys.push(*e0);
        }
        let c = fit_parabola(&xs, &ys);
        let span = xs.iter().cloned().fold(0.0f64, |a, x| a.max(x.abs()));
        let curvature_term = c[2] * span * span;
        assert!(curvature_term.abs() > 0.0);
        let mut worst = 0.0f64;
        for (&x, &y) in xs.iter().zip(&ys) {
            let fit = c[0] + c[1] * x + c[2] * x * x;
            worst = worst.max((y - fit).abs());
        }
        assert!(
            worst < 0.01 * curvature_term.abs(),
            "residual {worst} vs curvature term {curvature_term}"
        );
        // the line is symmetric: no measurable linear tilt
        assert!(c[1].abs() * span < 0.01 * curvature_term.abs(), "tilt {}", c[1]);
    }

    #[test]
    fn equal_field_cells_give_equal_responses() {
        let p = hydrogen();
        let pulse = PulseSpec::new(0.06, 0.02, 1).unwrap();
        let t1 = pulse.duration();
        let step = t1 / 64.0;
        let tau: Vec<f64> = (8..=56).map(|k| k as f64 * step).collect();
        let table = adk_contours(&[0.06], &tau, &pulse, &p).unwrap();
        let row = &table.delta_p[0];
        for j in 0..tau.len() {
            let jm = tau.len() - 1 - j;
            let a = row[j].unwrap();
            let b = row[jm].unwrap();
            let scale = a.abs().max(b.abs()).max(1e-300);
            assert!(
                (a - b).abs() / scale < 2e-11,
                "mirror cells {j}/{jm}: {a} vs {b}"
            );
        }
    }
}
