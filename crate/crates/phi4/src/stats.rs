//! Small statistics helpers shared by the estimators.

/// Sample mean and standard error of the mean.
pub fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, f64::INFINITY);
    }
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub slope_stderr: f64,
}

/// Ordinary least squares `y = a + b x`; the slope error is residual based.
pub fn line(xs: &[f64], ys: &[f64]) -> LineFit {
    let w = vec![1.0; xs.len()];
    let fit = weighted_core(xs, ys, &w);
    let n = xs.len() as f64;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - fit.0 - fit.1 * x).powi(2)).sum();
    let mx = xs.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let se = if n > 2.0 { (rss / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    LineFit { intercept: fit.0, slope: fit.1, slope_stderr: se }
}

/// Weighted least squares with per-point standard deviations. The slope error
/// is the larger of the propagated and the residual-scaled estimate.
pub fn weighted_line(xs: &[f64], ys: &[f64], sds: &[f64]) -> LineFit {
    let w: Vec<f64> = sds.iter().map(|s| 1.0 / (s * s)).collect();
    let (a, b, sw, swx, swxx) = weighted_core(xs, ys, &w);
    let det = sw * swxx - swx * swx;
    let propagated = (sw / det).sqrt();
    let n = xs.len() as f64;
    let chi2: f64 = xs.iter().zip(ys).zip(&w).map(|((x, y), wi)| wi * (y - a - b * x).powi(2)).sum();
    let scale = if n > 2.0 { (chi2 / (n - 2.0)).sqrt().max(1.0) } else { 1.0 };
    LineFit { intercept: a, slope: b, slope_stderr: propagated * scale }
}

fn weighted_core(xs: &[f64], ys: &[f64], w: &[f64]) -> (f64, f64, f64, f64, f64) {
    let (mut sw, mut swx, mut swy, mut swxx, mut swxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((&x, &y), &wi) in xs.iter().zip(ys).zip(w) {
        sw += wi;
        swx += wi * x;
        swy += wi * y;
        swxx += wi * x * x;
        swxy += wi * x * y;
    }
    let det = sw * swxx - swx * swx;
    let b = (sw * swxy - swx * swy) / det;
    let a = (swy - b * swx) / sw;
    (a, b, sw, swx, swxx)
}

/// Least squares on an arbitrary basis: returns coefficients `c` minimising
/// `sum_i (y_i - sum_j c_j phi_j(x_i))^2` via the normal equations.
pub fn least_squares(rows: &[Vec<f64>], ys: &[f64]) -> Vec<f64> {
    let m = rows[0].len();
    let mut a = vec![vec![0.0; m + 1]; m];
    for (row, &y) in rows.iter().zip(ys) {
        for i in 0..m {
            for j in 0..m {
                a[i][j] += row[i] * row[j];
            }
            a[i][m] += row[i] * y;
        }
    }
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        for i in 0..m {
            if i != col {
                let f = a[i][col] / a[col][col];
                for j in col..=m {
                    a[i][j] -= f * a[col][j];
                }
            }
        }
    }
    (0..m).map(|i| a[i][m] / a[i][i]).collect()
}

/// Delete-one-block jackknife of a statistic over `blocks` contiguous groups.
pub fn jackknife<T>(data: &[T], blocks: usize, stat: impl Fn(&[&T]) -> f64) -> (f64, f64) {
    let all: Vec<&T> = data.iter().collect();
    let full = stat(&all);
    let g = blocks.min(data.len()).max(2);
    let size = data.len() / g;
    let mut reps = Vec::with_capacity(g);
    for b in 0..g {
        let lo = b * size;
        let hi = if b + 1 == g { data.len() } else { lo + size };
        let kept: Vec<&T> = data[..lo].iter().chain(&data[hi..]).collect();
        reps.push(stat(&kept));
    }
    let m = reps.iter().sum::<f64>() / g as f64;
    let var = reps.iter().map(|x| (x - m).powi(2)).sum::<f64>() * (g as f64 - 1.0) / g as f64;
    (full, var.sqrt())
}

/// Normalized autocorrelation at lags `0..max_lag`.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Vec<f64> {
    let n = series.len();
    let m = series.iter().sum::<f64>() / n as f64;
    let c0: f64 = series.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64;
    (0..max_lag.min(n))
        .map(|lag| {
            let c: f64 = (0..n - lag).map(|i| (series[i] - m) * (series[i + lag] - m)).sum::<f64>() / n as f64;
            if c0 > 0.0 {
                c / c0
            } else {
                0.0
            }
        })
        .collect()
}

/// Integrated autocorrelation time (in samples) with a self-consistent window.
pub fn integrated_autocorrelation(series: &[f64]) -> f64 {
    let rho = autocorrelation(series, series.len() / 2);
    let mut tau = 0.5;
    for (lag, r) in rho.iter().enumerate().skip(1) {
        tau += r;
        if lag as f64 >= 5.0 * tau {
            break;
        }
    }
    tau.max(0.5)
}
