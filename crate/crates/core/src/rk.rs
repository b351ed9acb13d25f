//! Embedded Dormand-Prince 5(4) stepper with PI step-size control, cubic
//! Hermite interpolation inside accepted steps, and bisected event location.

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - 0.75 * BETA;
const MAX_GROW_FACTOR: f64 = 5.0;
const MAX_SHRINK_FACTOR: f64 = 0.1;

/// Which sign change of the event function fires the event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Crossing {
    /// Fires when the function passes from strictly negative to
    /// non-negative.
    Rising,
    /// Fires when the function passes from strictly positive to
    /// non-positive.
    Falling,
}

/// A scalar event function watched along the integration; the run stops
/// at the earliest located crossing.
pub(crate) struct EventSpec<'a, const N: usize> {
    pub g: Box<dyn Fn(f64, &[f64; N]) -> f64 + 'a>,
    pub direction: Crossing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RunStatus {
    ReachedEnd,
    EventStop { event: usize },
    StepSizeUnderflow,
    MaxStepsExceeded,
}

#[derive(Debug, Clone)]
pub(crate) struct RunResult<const N: usize> {
    pub status: RunStatus,
    pub x: f64,
    pub y: [f64; N],
}

/// Tolerances and step limits, independent of the vector field.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Controls {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

/// Cubic Hermite interpolation at fraction `t` of a step of width `h`.
fn hermite<const N: usize>(
    y0: &[f64; N],
    f0: &[f64; N],
    y1: &[f64; N],
    f1: &[f64; N],
    h: f64,
    t: f64,
) -> [f64; N] {
    let t2 = t * t;
    let t3 = t2 * t;
    let b0 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let b1 = t3 - 2.0 * t2 + t;
    let b2 = -2.0 * t3 + 3.0 * t2;
    let b3 = t3 - t2;
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = b0 * y0[i] + b1 * h * f0[i] + b2 * y1[i] + b3 * h * f1[i];
    }
    out
}

fn crossed(direction: Crossing, g0: f64, g1: f64) -> bool {
    match direction {
        Crossing::Rising => g0 < 0.0 && g1 >= 0.0,
        Crossing::Falling => g0 > 0.0 && g1 <= 0.0,
    }
}

/// Initial step size after Hairer, bounded by `max_step`.
fn initial_step<const N: usize>(
    rhs: &dyn Fn(f64, &[f64; N]) -> [f64; N],
    x0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    controls: &Controls,
) -> f64 {
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for i in 0..N {
        let sk = controls.abs_tol + controls.rel_tol * y0[i].abs();
        dnf += (f0[i] / sk).powi(2);
        dny += (y0[i] / sk).powi(2);
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        0.01 * (dny / dnf).sqrt()
    };
    h = h.min(controls.max_step);
    let mut y1 = [0.0; N];
    for i in 0..N {
        y1[i] = y0[i] + h * f0[i];
    }
    let f1 = rhs(x0 + h, &y1);
    let mut der2 = 0.0;
    for i in 0..N {
        let sk = controls.abs_tol + controls.rel_tol * y0[i].abs();
        der2 += ((f1[i] - f0[i]) / sk).powi(2);
    }
    let der12 = (der2.sqrt() / h).max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 {
        (h * 1e-3).max(1e-6)
    } else {
        (0.01 / der12).powf(0.2)
    };
    (100.0 * h).min(h1).min(controls.max_step)
}

/// Integrates `dy/dx = rhs(x, y)` forward from `x0` to `x_end`.
///
/// `on_accept` receives the endpoint of every accepted step; on an event
/// the located event point replaces the step endpoint. Crossings are
/// located by bisection on the Hermite interpolant of the accepted step.
pub(crate) fn run<const N: usize>(
    rhs: &dyn Fn(f64, &[f64; N]) -> [f64; N],
    x0: f64,
    y0: [f64; N],
    x_end: f64,
    controls: &Controls,
    events: &[EventSpec<'_, N>],
    mut on_accept: impl FnMut(f64, &[f64; N]),
) -> RunResult<N> {
    assert!(x_end > x0, "integration must run forward");
    let mut x = x0;
    let mut y = y0;
    let mut f = rhs(x, &y);
    let mut h = initial_step(rhs, x, &y, &f, controls);
    let mut facold: f64 = 1e-4;
    let mut n_steps = 0usize;

    loop {
        if n_steps >= controls.max_steps {
            return RunResult {
                status: RunStatus::MaxStepsExceeded,
                x,
                y,
            };
        }
        if h.abs() <= 10.0 * f64::EPSILON * x.abs().max(1.0) {
            return RunResult {
                status: RunStatus::StepSizeUnderflow,
                x,
                y,
            };
        }
        let mut last = false;
        if x + h >= x_end {
            h = x_end - x;
            last = true;
        }

        let mut yt = [0.0; N];
        for i in 0..N {
            yt[i] = y[i] + h * A21 * f[i];
        }
        let k2 = rhs(x + C2 * h, &yt);
        for i in 0..N {
            yt[i] = y[i] + h * (A31 * f[i] + A32 * k2[i]);
        }
        let k3 = rhs(x + C3 * h, &yt);
        for i in 0..N {
            yt[i] = y[i] + h * (A41 * f[i] + A42 * k2[i] + A43 * k3[i]);
        }
        let k4 = rhs(x + C4 * h, &yt);
        for i in 0..N {
            yt[i] = y[i] + h * (A51 * f[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        let k5 = rhs(x + C5 * h, &yt);
        for i in 0..N {
            yt[i] = y[i] + h * (A61 * f[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let k6 = rhs(x + h, &yt);
        let mut y1 = [0.0; N];
        for i in 0..N {
            y1[i] = y[i]
                + h * (A71 * f[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        let k7 = rhs(x + h, &y1);

        let mut err_sq = 0.0;
        for i in 0..N {
            let e = h
                * (E1 * f[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sk = controls.abs_tol + controls.rel_tol * y[i].abs().max(y1[i].abs());
            err_sq += (e / sk).powi(2);
        }
        let err = (err_sq / N as f64).sqrt();

        if !err.is_finite() || y1.iter().any(|c| !c.is_finite()) {
            n_steps += 1;
            h *= 0.1;
            continue;
        }

        if err > 1.0 {
            n_steps += 1;
            let fac11 = err.powf(EXPO1);
            h /= (fac11 / SAFETY).min(MAX_GROW_FACTOR);
            continue;
        }

        n_steps += 1;
        let fac11 = err.max(1e-16).powf(EXPO1);
        let mut fac = fac11 / facold.powf(BETA);
        fac = (fac / SAFETY).clamp(MAX_SHRINK_FACTOR, MAX_GROW_FACTOR);
        let h_next = (h / fac).min(controls.max_step);
        facold = err.max(1e-4);

        let mut earliest: Option<(f64, usize)> = None;
        for (idx, event) in events.iter().enumerate() {
            let g0 = (event.g)(x, &y);
            let g1 = (event.g)(x + h, &y1);
            if crossed(event.direction, g0, g1) {
                let mut lo = 0.0f64;
                let mut hi = 1.0f64;
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    let ym = hermite(&y, &f, &y1, &k7, h, mid);
                    let gm = (event.g)(x + mid * h, &ym);
                    if crossed(event.direction, g0, gm) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                if earliest.is_none_or(|(t, _)| hi < t) {
                    earliest = Some((hi, idx));
                }
            }
        }
        if let Some((t_frac, idx)) = earliest {
            let y_ev = hermite(&y, &f, &y1, &k7, h, t_frac);
            let x_ev = x + t_frac * h;
            on_accept(x_ev, &y_ev);
            return RunResult {
                status: RunStatus::EventStop { event: idx },
                x: x_ev,
                y: y_ev,
            };
        }

        x += h;
        y = y1;
        f = k7;
        on_accept(x, &y);
        if last {
            return RunResult {
                status: RunStatus::ReachedEnd,
                x,
                y,
            };
        }
        h = h_next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn controls() -> Controls {
        Controls {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            max_step: 0.1,
            max_steps: 1_000_000,
        }
    }

    #[test]
    fn exponential_growth_is_integrated_to_high_accuracy() {
        let rhs = |_x: f64, y: &[f64; 1]| [y[0]];
        let res = run(&rhs, 0.0, [1.0], 1.0, &controls(), &[], |_, _| {});
        assert_eq!(res.status, RunStatus::ReachedEnd);
        assert!((res.y[0] - 1f64.exp()).abs() < 1e-11);
    }

    #[test]
    fn harmonic_oscillator_returns_after_one_period() {
        let rhs = |_x: f64, y: &[f64; 2]| [y[1], -y[0]];
        let res = run(
            &rhs,
            0.0,
            [1.0, 0.0],
            2.0 * std::f64::consts::PI,
            &controls(),
            &[],
            |_, _| {},
        );
        assert!((res.y[0] - 1.0).abs() < 1e-10);
        assert!(res.y[1].abs() < 1e-10);
    }

    #[test]
    fn rising_event_is_located_and_stops_the_run() {
        let rhs = |_x: f64, y: &[f64; 1]| [y[0]];
        let events = [EventSpec {
            g: Box::new(|_x: f64, y: &[f64; 1]| y[0] - 2.0),
            direction: Crossing::Rising,
        }];
        let res = run(&rhs, 0.0, [1.0], 5.0, &controls(), &events, |_, _| {});
        assert!(matches!(res.status, RunStatus::EventStop { event: 0 }));
        assert!((res.x - 2f64.ln()).abs() < 1e-9);
        assert!((res.y[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn event_exactly_zero_at_start_does_not_fire_immediately() {
        let rhs = |_x: f64, y: &[f64; 2]| [y[1], -y[0]];
        let events = [EventSpec {
            g: Box::new(|_x: f64, y: &[f64; 2]| y[1]),
            direction: Crossing::Rising,
        }];
        let res = run(
            &rhs,
            0.0,
            [1.0, 0.0],
            10.0,
            &controls(),
            &events,
            |_, _| {},
        );
        match res.status {
            RunStatus::EventStop { event: 0 } => {
                assert!((res.x - std::f64::consts::PI).abs() < 1e-8);
            }
            other => panic!("expected an event stop, got {other:?}"),
        }
    }

    #[test]
    fn a_linear_ramp_event_is_located_mid_step() {
        let rhs = |_x: f64, _y: &[f64; 1]| [1.0];
        let events = [EventSpec {
            g: Box::new(|_x: f64, y: &[f64; 1]| y[0] - 0.5),
            direction: Crossing::Rising,
        }];
        let res = run(&rhs, 0.0, [0.0], 1.0, &controls(), &events, |_, _| {});
        assert_eq!(res.status, RunStatus::EventStop { event: 0 });
        assert!((res.x - 0.5).abs() < 1e-10);
    }
}
