use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Kendall's tau-b with its two-sided p-value from the tie-corrected normal
/// approximation. `O(n log n)` (Knight's merge-sort count).
///
/// Returns `(NaN, NaN)` when either side is constant.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("kendall tau needs equal lengths ({} vs {})", x.len(), y.len())));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::invalid("kendall tau needs at least two observations"));
    }
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let n0 = (n * (n - 1) / 2) as i64;
    let x_ties = tie_groups(pairs.iter().map(|p| p.0));
    let joint_ties = tie_groups_by(&pairs, |a, b| a.0 == b.0 && a.1 == b.1);
    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let swaps = merge_count(&mut ys) as i64;
    let y_ties = tie_groups(ys.iter().copied());

    let n1 = pairs_in(&x_ties);
    let n2 = pairs_in(&y_ties);
    let n3 = pairs_in(&joint_ties);
    let s = n0 - n1 - n2 + n3 - 2 * swaps;
    let tau = tau_b(s, n0, n1, n2);
    if tau.is_nan() {
        return Ok((f64::NAN, f64::NAN));
    }
    let var = s_variance(n, &x_ties, &y_ties);
    let p = if var > 0.0 {
        erfc((s as f64).abs() / var.sqrt() / std::f64::consts::SQRT_2)
    } else {
        f64::NAN
    };
    Ok((tau, p))
}

/// `(C − D) / sqrt((n0 − n1)(n0 − n2))`, NaN when a side is constant.
pub fn tau_b(s: i64, n0: i64, n1: i64, n2: i64) -> f64 {
    let denom = ((n0 - n1) as f64) * ((n0 - n2) as f64);
    if denom <= 0.0 {
        f64::NAN
    } else {
        s as f64 / denom.sqrt()
    }
}

fn tie_groups(sorted: impl Iterator<Item = f64>) -> Vec<usize> {
    let v: Vec<f64> = sorted.collect();
    tie_groups_by(&v, |a, b| a == b)
}

fn tie_groups_by<T>(sorted: &[T], eq: impl Fn(&T, &T) -> bool) -> Vec<usize> {
    let mut out = Vec::new();
    let mut run = 1;
    for w in sorted.windows(2) {
        if eq(&w[0], &w[1]) {
            run += 1;
        } else {
            if run > 1 {
                out.push(run);
            }
            run = 1;
        }
    }
    if run > 1 {
        out.push(run);
    }
    out
}

fn pairs_in(groups: &[usize]) -> i64 {
    groups.iter().map(|&t| (t * (t - 1) / 2) as i64).sum()
}

/// Variance of `S = C − D` under independence with tie correction.
fn s_variance(n: usize, xt: &[usize], yt: &[usize]) -> f64 {
    let n = n as f64;
    let f = |t: &usize| {
        let t = *t as f64;
        (t * (t - 1.0), t * (t - 1.0) * (t - 2.0), t * (t - 1.0) * (2.0 * t + 5.0))
    };
    let (x1, x2, x3) = xt.iter().map(f).fold((0.0, 0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let (y1, y2, y3) = yt.iter().map(f).fold((0.0, 0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let mut v = (n * (n - 1.0) * (2.0 * n + 5.0) - x3 - y3) / 18.0;
    if n > 2.0 {
        v += x2 * y2 / (9.0 * n * (n - 1.0) * (n - 2.0));
    }
    v + x1 * y1 / (2.0 * n * (n - 1.0))
}

/// Stable merge sort counting inversions (strictly greater before smaller).
fn merge_count(v: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid]) + merge_count(&mut v[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            swaps += (mid - i) as u64;
            merged.push(v[j]);
            j += 1;
        } else {
            merged.push(v[i]);
            i += 1;
        }
    }
    merged.extend_from_slice(&v[i..mid]);
    merged.extend_from_slice(&v[j..n]);
    v.copy_from_slice(&merged);
    swaps
}
