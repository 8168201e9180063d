//! Sharp Littlewood-Paley blocks, Bony paraproducts, Besov norms and a
//! statistical regularity estimator.
//!
//! Blocks are `A_{-1} = {|k| <= 1}` and `A_j = {2^{j-1} < |k| <= 2^j}` in
//! physical frequency `|2 pi k / L|`. They partition frequency space, so
//! `sum_j Delta_j = Id` and `Delta_j Delta_k = 0` for `j != k` hold exactly.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{same_grid, Field, Spectrum};
use crate::grid::Grid;
use crate::stats;

/// Range of non-empty levels on a grid.
pub fn levels(grid: &Grid) -> std::ops::RangeInclusive<i32> {
    -1..=grid.max_level()
}

/// Restriction of a spectrum to levels in `[lo, hi]`.
pub fn band(s: &Spectrum, lo: i32, hi: i32) -> Spectrum {
    let lv = s.grid().levels();
    s.map_modes(|i| if lv[i] >= lo && lv[i] <= hi { one() } else { zero() })
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// `Delta_j f`.
pub fn lp_block(f: &Field, j: i32) -> Result<Field> {
    if j < -1 {
        return Err(Error::InvalidArgument(format!("level {j} < -1")));
    }
    Ok(band(&f.spectrum(), j, j).to_field())
}

/// Which part of the Bony decomposition to assemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Part {
    /// `a < b = sum_{j < k-1} Delta_j a Delta_k b`
    Para,
    /// `a (.) b = sum_{|j-k| <= 1} Delta_j a Delta_k b`
    Resonant,
}

fn bony(a: &Spectrum, b: &Spectrum, part: Part) -> Result<Spectrum> {
    same_grid(a.grid(), b.grid())?;
    let grid = a.grid();
    let top = grid.max_level();
    let mut acc = vec![0.0; grid.padded().len()];
    for k in -1..=top {
        let bk = band(b, k, k);
        if bk.mean_square() == 0.0 {
            continue;
        }
        let ak = match part {
            Part::Para => band(a, -1, k - 2),
            Part::Resonant => band(a, k - 1, k + 1),
        };
        if ak.mean_square() == 0.0 {
            continue;
        }
        let pa = ak.to_padded_values();
        let pb = bk.to_padded_values();
        for ((s, x), y) in acc.iter_mut().zip(&pa).zip(&pb) {
            *s += x * y;
        }
    }
    Ok(Spectrum::from_padded_values(grid, &acc))
}

/// Paraproduct `a < b` (low frequencies of `a` times high frequencies of `b`).
pub fn paraproduct(a: &Field, b: &Field) -> Result<Field> {
    Ok(bony(&a.spectrum(), &b.spectrum(), Part::Para)?.to_field())
}

/// Resonant product `a (.) b`.
pub fn resonant(a: &Field, b: &Field) -> Result<Field> {
    Ok(bony(&a.spectrum(), &b.spectrum(), Part::Resonant)?.to_field())
}

pub fn resonant_spectral(a: &Spectrum, b: &Spectrum) -> Result<Spectrum> {
    bony(a, b, Part::Resonant)
}

/// `L^p` norm with cell weight `(L/N)^d`; `p = inf` gives the maximum.
pub fn lp_norm_values(values: &[f64], cell: f64, p: f64) -> f64 {
    if p.is_infinite() {
        values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    } else {
        (values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * cell).powf(1.0 / p)
    }
}

/// `|| (2^{j gamma} ||Delta_j f||_{L^p})_j ||_{l^q}`.
pub fn besov_norm(f: &Field, gamma: f64, p: f64, q: f64) -> Result<f64> {
    if !(p >= 1.0 && q >= 1.0) {
        return Err(Error::InvalidArgument(format!("p = {p}, q = {q} must lie in [1, inf]")));
    }
    let s = f.spectrum();
    let cell = f.grid().cell_volume();
    let terms: Vec<f64> = levels(f.grid())
        .map(|j| {
            let block = band(&s, j, j).to_field();
            2f64.powf(j as f64 * gamma) * lp_norm_values(block.values(), cell, p)
        })
        .collect();
    Ok(if q.is_infinite() {
        terms.iter().fold(0.0, |m: f64, &t| m.max(t))
    } else {
        terms.iter().map(|t| t.powf(q)).sum::<f64>().powf(1.0 / q)
    })
}

/// Per-level mean square `E[(Delta_j u)(x)^2]` with its standard error.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelStat {
    pub level: i32,
    pub mean_square: f64,
    pub stderr: f64,
}

/// Result of [`estimate_regularity`].
#[derive(Clone, Debug)]
pub struct RegularityEstimate {
    pub gamma: f64,
    pub stderr: f64,
    pub slope: f64,
    pub levels: Vec<LevelStat>,
    pub window: (i32, i32),
}

/// Default fit window: levels `1 ..= j_max - 2`. Level 0 holds no integer
/// frequency, and the top two levels are cut by the corners of the frequency box.
pub fn default_window(grid: &Grid) -> (i32, i32) {
    (1, grid.max_level() - 2)
}

pub const MIN_SAMPLES: usize = 16;
pub const MIN_LEVELS: usize = 4;

/// Fits `log2 E[(Delta_j u)^2] = c + slope * j` over the window and reports
/// `gamma = -slope / 2`. The expectation combines the sample average with the
/// spatial average (Parseval: the spatial mean of `(Delta_j u)^2` is the
/// block's spectral energy).
pub fn estimate_regularity(samples: &[Field], window: Option<(i32, i32)>) -> Result<RegularityEstimate> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples { needed: MIN_SAMPLES, got: samples.len() });
    }
    let grid = samples[0].grid().clone();
    for s in samples {
        same_grid(&grid, s.grid())?;
    }
    let (lo, hi) = window.unwrap_or_else(|| default_window(&grid));
    let lv = grid.levels();
    let nlev = (grid.max_level() + 2) as usize;
    let mut per_sample = vec![Vec::with_capacity(samples.len()); nlev];
    for s in samples {
        let mut e = vec![0.0; nlev];
        for (c, &l) in s.coeffs().iter().zip(lv) {
            e[(l + 1) as usize] += c.norm_sqr();
        }
        for (acc, v) in per_sample.iter_mut().zip(e) {
            acc.push(v);
        }
    }
    let all: Vec<LevelStat> = per_sample
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let (m, se) = stats::mean_stderr(v);
            LevelStat { level: i as i32 - 1, mean_square: m, stderr: se }
        })
        .collect();
    // levels holding only round-off from the transforms count as empty
    let floor = all.iter().fold(0.0f64, |m, s| m.max(s.mean_square)) * 1e-24;
    let used: Vec<&LevelStat> =
        all.iter().filter(|s| s.level >= lo && s.level <= hi && s.mean_square > floor).collect();
    if used.len() < MIN_LEVELS {
        return Err(Error::TooFewLevels { needed: MIN_LEVELS, got: used.len() });
    }
    let xs: Vec<f64> = used.iter().map(|s| s.level as f64).collect();
    let ys: Vec<f64> = used.iter().map(|s| s.mean_square.log2()).collect();
    // delta method: sd(log2 m) = se / (m ln 2)
    let sds: Vec<f64> = used
        .iter()
        .map(|s| (s.stderr / (s.mean_square * std::f64::consts::LN_2)).max(1e-12))
        .collect();
    let fit = stats::weighted_line(&xs, &ys, &sds);
    Ok(RegularityEstimate {
        gamma: -fit.slope / 2.0,
        stderr: fit.slope_stderr / 2.0,
        slope: fit.slope,
        levels: all,
        window: (lo, hi),
    })
}

/// Gaussian field with `E|c_k|^2 = L^{-d} lambda_k^{-(d/2 + gamma)}`: a
/// sample lies in `C^{gamma - eps}` for every `eps > 0`, uniformly in `N`.
pub fn power_law_field(grid: &Grid, gamma: f64, stream: &mut crate::noise::NoiseStream) -> Field {
    let g = stream.next_gaussians(grid);
    let norm = grid.volume().sqrt().recip();
    let expo = -(grid.dim() as f64 / 2.0 + gamma) / 2.0;
    let coeffs = grid.lambda().iter().zip(&g).map(|(&l, z)| z * (norm * l.powf(expo))).collect();
    Spectrum::from_coeffs(grid, coeffs).expect("length matches grid").to_field()
}

/// Empirical constant of the resonant estimate
/// `||a (.) b||_{C^{g1+g2}} <= C ||a||_{C^{g1}} ||b||_{C^{g2}}`, meaningful for `g1 + g2 > 0`.
pub fn resonant_constant(a: &Field, b: &Field, g1: f64, g2: f64) -> Result<f64> {
    if !(g1 + g2 > 0.0) {
        return Err(Error::InvalidArgument(format!("resonant estimate needs g1 + g2 > 0, got {}", g1 + g2)));
    }
    let inf = f64::INFINITY;
    let lhs = besov_norm(&resonant(a, b)?, g1 + g2, inf, inf)?;
    let rhs = besov_norm(a, g1, inf, inf)? * besov_norm(b, g2, inf, inf)?;
    Ok(lhs / rhs)
}
