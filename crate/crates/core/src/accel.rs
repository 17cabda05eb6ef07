//! Sequence acceleration and small least-squares helpers.

/// One Richardson pass assuming a geometric (power-law in r along dyadic
/// radii) error with a common ratio, estimated as the median of local
/// difference ratios.
pub fn richardson_pass(seq: &[f64]) -> Vec<f64> {
    if seq.len() < 3 {
        return seq.to_vec();
    }
    let mut local: Vec<f64> = seq
        .windows(3)
        .filter_map(|w| {
            let d0 = w[1] - w[0];
            let d1 = w[2] - w[1];
            (d0 != 0.0).then(|| d1 / d0)
        })
        .filter(|q| q.is_finite())
        .collect();
    if local.is_empty() {
        return seq[1..].to_vec();
    }
    local.sort_by(f64::total_cmp);
    let q = local[local.len() / 2];
    if !(q.abs() < 1.0) {
        // not contracting: leave unchanged
        return seq[1..].to_vec();
    }
    seq.windows(2).map(|w| (w[1] - q * w[0]) / (1.0 - q)).collect()
}

/// Aitken Δ² transform; entries with a vanishing second difference are
/// passed through.
pub fn aitken(seq: &[f64]) -> Vec<f64> {
    seq.windows(3)
        .map(|w| {
            let d1 = w[1] - w[0];
            let d2 = w[2] - w[1];
            let den = d2 - d1;
            if den == 0.0 || !den.is_finite() {
                w[2]
            } else {
                let v = w[2] - d2 * d2 / den;
                if v.is_finite() {
                    v
                } else {
                    w[2]
                }
            }
        })
        .collect()
}

/// Richardson pass followed by Aitken Δ².
pub fn accelerate(seq: &[f64]) -> Vec<f64> {
    aitken(&richardson_pass(seq))
}

/// Wynn's ε-algorithm of order k (column ε_{2k}) on each window of 2k+1
/// consecutive terms; exact for a limit plus k geometric components. A
/// window containing a repeated value returns its last term.
pub fn wynn_epsilon(seq: &[f64], k: usize) -> Vec<f64> {
    let m = 2 * k + 1;
    if k == 0 || seq.len() < m {
        return Vec::new();
    }
    seq.windows(m).map(|w| wynn_window(w, k).unwrap_or(w[m - 1])).collect()
}

fn wynn_window(w: &[f64], k: usize) -> Option<f64> {
    let mut prev = vec![0.0; w.len() + 1];
    let mut cur = w.to_vec();
    for _ in 0..2 * k {
        let next: Vec<f64> = cur
            .windows(2)
            .enumerate()
            .map(|(i, c)| {
                let d = c[1] - c[0];
                if d == 0.0 {
                    f64::NAN
                } else {
                    prev[i + 1] + 1.0 / d
                }
            })
            .collect();
        if next.iter().any(|x| !x.is_finite()) {
            return None;
        }
        prev = cur;
        cur = next;
    }
    Some(cur[0])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Some(LineFit { slope, intercept, r_squared })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_sequence_is_extrapolated_exactly() {
        let seq: Vec<f64> = (0..10).map(|k| 3.0 + 2.0 * 0.5f64.powi(k)).collect();
        let acc = accelerate(&seq);
        for v in acc {
            assert!((v - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_rate_sequence() {
        let seq: Vec<f64> = (0..16)
            .map(|k| 1.0 + 0.7 * 2f64.powf(-k as f64 / 3.0) + 0.2 * 2f64.powf(-2.0 * k as f64 / 3.0))
            .collect();
        // not exact with two rates, but far better than the raw sequence
        let acc = accelerate(&seq);
        let last = acc[acc.len() - 1];
        let raw = seq[seq.len() - 1];
        assert!((last - 1.0).abs() * 20.0 < (raw - 1.0).abs(), "{last}");
    }

    #[test]
    fn wynn_removes_two_rates() {
        let seq: Vec<f64> = (0..12).map(|k| 1.0 + 0.5f64.powi(k) + 0.8f64.powi(k)).collect();
        let acc = wynn_epsilon(&seq, 2);
        assert_eq!(acc.len(), 8);
        assert!((acc[7] - 1.0).abs() < 1e-10, "{}", acc[7]);
        let flat = wynn_epsilon(&[2.0; 7], 2);
        assert!(flat.iter().all(|&x| x == 2.0));
    }

    #[test]
    fn line_fit() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        let f = fit_line(&xs, &ys).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept - 1.0).abs() < 1e-14);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
    }
}
