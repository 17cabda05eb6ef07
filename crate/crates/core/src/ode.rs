//! Dormand–Prince 5(4) integrator for two-component systems, with cubic
//! Hermite dense output between accepted steps.

pub type State = [f64; 2];

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Largest step in the independent variable.
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-14, h_max: 0.05, h_min: 1e-12, max_steps: 2_000_000 }
    }
}

/// Accepted steps; `err` is the scaled local error estimate of the step that
/// ended at each node (zero at the first node).
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub y: Vec<State>,
    pub dy: Vec<State>,
    pub err: Vec<f64>,
    pub rejected: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Completed,
    /// The stop predicate fired; integration ended at the last accepted node.
    Stopped(String),
    /// Step size fell below `h_min` or the right-hand side stopped being finite.
    Failed(String),
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn finite(y: &State) -> bool {
    y[0].is_finite() && y[1].is_finite()
}

/// Integrates y' = f(t, y) from t0 to t1 (either direction). `stop` is
/// checked at every accepted node and may end the run early.
pub fn integrate(
    f: impl Fn(f64, &State) -> State,
    t0: f64,
    y0: State,
    t1: f64,
    opts: OdeOptions,
    stop: impl Fn(f64, &State) -> Option<String>,
) -> (Trajectory, Outcome) {
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let mut traj = Trajectory::default();
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    traj.t.push(t);
    traj.y.push(y);
    traj.dy.push(k1);
    traj.err.push(0.0);
    if !finite(&k1) {
        return (traj, Outcome::Failed(format!("right-hand side not finite at t = {t}")));
    }
    if let Some(msg) = stop(t, &y) {
        return (traj, Outcome::Stopped(msg));
    }
    if t0 == t1 {
        return (traj, Outcome::Completed);
    }
    let mut h = opts.h_max.min((t1 - t0).abs()).min(0.01);
    let mut steps = 0;
    while (t1 - t) * dir > 0.0 {
        steps += 1;
        if steps > opts.max_steps {
            return (traj, Outcome::Failed(format!("step budget exhausted at t = {t}")));
        }
        let last = (t1 - t).abs() <= h * (1.0 + 1e-12);
        let hs = if last { (t1 - t).abs() } else { h };
        let step = dir * hs;
        let mut k = [[0.0; 2]; 7];
        k[0] = k1;
        for i in 1..7 {
            let mut yi = y;
            for (j, kj) in k.iter().enumerate().take(i) {
                yi[0] += step * A[i][j] * kj[0];
                yi[1] += step * A[i][j] * kj[1];
            }
            k[i] = f(t + C[i] * step, &yi);
        }
        let mut y5 = y;
        let mut y4 = y;
        for i in 0..7 {
            y5[0] += step * B5[i] * k[i][0];
            y5[1] += step * B5[i] * k[i][1];
            y4[0] += step * B4[i] * k[i][0];
            y4[1] += step * B4[i] * k[i][1];
        }
        let err = if finite(&y5) && k.iter().all(finite) {
            let mut e = 0.0f64;
            for c in 0..2 {
                let sc = opts.atol + opts.rtol * y[c].abs().max(y5[c].abs());
                e = e.max(((y5[c] - y4[c]) / sc).abs());
            }
            e
        } else {
            f64::INFINITY
        };
        if err <= 1.0 {
            t = if last { t1 } else { t + step };
            y = y5;
            k1 = k[6];
            traj.t.push(t);
            traj.y.push(y);
            traj.dy.push(k1);
            traj.err.push(err);
            if let Some(msg) = stop(t, &y) {
                return (traj, Outcome::Stopped(msg));
            }
            let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (hs * grow).min(opts.h_max);
        } else {
            traj.rejected += 1;
            let shrink = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.5) } else { 0.1 };
            h = hs * shrink;
            if h < opts.h_min {
                return (traj, Outcome::Failed(format!("step size underflow at t = {t}")));
            }
        }
    }
    (traj, Outcome::Completed)
}

/// Cubic Hermite interpolation on one interval.
pub fn hermite(t0: f64, t1: f64, y0: f64, y1: f64, d0: f64, d1: f64, t: f64) -> (f64, f64) {
    let h = t1 - t0;
    if h == 0.0 {
        return (y0, d0);
    }
    let x = (t - t0) / h;
    let x2 = x * x;
    let x3 = x2 * x;
    let h00 = 2.0 * x3 - 3.0 * x2 + 1.0;
    let h10 = x3 - 2.0 * x2 + x;
    let h01 = -2.0 * x3 + 3.0 * x2;
    let h11 = x3 - x2;
    let value = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
    let dh00 = (6.0 * x2 - 6.0 * x) / h;
    let dh10 = 3.0 * x2 - 4.0 * x + 1.0;
    let dh01 = (-6.0 * x2 + 6.0 * x) / h;
    let dh11 = 3.0 * x2 - 2.0 * x;
    let deriv = dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1;
    (value, deriv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let (traj, out) = integrate(|_, y| [y[1], -y[0]], 0.0, [0.0, 1.0], 10.0, OdeOptions::default(), |_, _| None);
        assert_eq!(out, Outcome::Completed);
        let n = traj.t.len() - 1;
        assert_eq!(traj.t[n], 10.0);
        assert!((traj.y[n][0] - 10f64.sin()).abs() < 1e-9);
        assert!((traj.y[n][1] - 10f64.cos()).abs() < 1e-9);
    }

    #[test]
    fn backward_and_stop() {
        let (traj, out) =
            integrate(|_, y| [-y[0], 0.0], 0.0, [1.0, 0.0], -3.0, OdeOptions::default(), |_, y| (y[0] > 10.0).then(|| "big".into()));
        assert_eq!(out, Outcome::Stopped("big".into()));
        let last = *traj.t.last().unwrap();
        assert!(last < -2.3 && last > -2.5);
    }

    #[test]
    fn hermite_is_exact_for_cubics() {
        let f = |t: f64| t * t * t - 2.0 * t + 1.0;
        let df = |t: f64| 3.0 * t * t - 2.0;
        let (v, d) = hermite(0.5, 2.0, f(0.5), f(2.0), df(0.5), df(2.0), 1.3);
        assert!((v - f(1.3)).abs() < 1e-13 && (d - df(1.3)).abs() < 1e-13);
    }
}
