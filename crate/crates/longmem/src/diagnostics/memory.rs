//! Sample memory diagnostics: autocovariance/autocorrelation, the
//! periodogram, and tail-decay classification of coefficient sequences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AcfResult {
    pub lags: Vec<usize>,
    /// Biased (1/n) autocovariance estimates; the 1/n normalization keeps the
    /// implied spectral estimate positive semi-definite.
    pub autocovariance: Vec<f64>,
    pub autocorrelation: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// Fourier frequencies 2*pi*j/n for j = 1..floor(n/2), i.e. (0, pi].
    pub frequencies: Vec<f64>,
    pub ordinates: Vec<f64>,
    /// Series length, needed to weight the ordinates in the Parseval check.
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayKind {
    Exponential,
    Polynomial,
    Undecided,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayClass {
    pub kind: DecayKind,
    /// rho for the exponential hypothesis, the exponent for the polynomial one.
    pub rate: f64,
    /// (log-linear fit R^2, log-log fit R^2).
    pub fit_r2: (f64, f64),
    /// Exact zeros are excluded from the fit and counted here.
    pub zeros_excluded: usize,
}

/// Sample ACF with the biased estimator
/// gamma_k = (1/n) sum_{t} (x_t - mean)(x_{t+k} - mean).
pub fn acf(series: &[f64], max_lag: usize) -> Result<AcfResult> {
    let n = series.len();
    if max_lag == 0 {
        return Err(Error::Domain("max_lag must be >= 1".into()));
    }
    if n <= max_lag {
        return Err(Error::Data(format!("series length {n} must exceed max_lag {max_lag}")));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let mut autocovariance = Vec::with_capacity(max_lag + 1);
    for k in 0..=max_lag {
        let mut acc = 0.0;
        for t in 0..n - k {
            acc += centered[t] * centered[t + k];
        }
        autocovariance.push(acc / n as f64);
    }
    let g0 = autocovariance[0];
    if g0 <= 0.0 {
        return Err(Error::Data("degenerate series: zero sample variance".into()));
    }
    let autocorrelation = autocovariance.iter().map(|g| g / g0).collect();
    Ok(AcfResult { lags: (0..=max_lag).collect(), autocovariance, autocorrelation })
}

/// Periodogram I(lambda_j) = |sum_t (x_t - mean) e^{-i t lambda_j}|^2 / (2 pi n)
/// at the Fourier frequencies lambda_j = 2 pi j / n, j = 1..floor(n/2).
///
/// Direct O(n^2) evaluation with an incrementally rotated phasor; no FFT.
pub fn periodogram(series: &[f64]) -> Result<SpectrumResult> {
    let n = series.len();
    if n < 16 {
        return Err(Error::Data(format!("periodogram needs n >= 16, got {n}")));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|v| v - mean).collect();
    if centered.iter().all(|v| *v == 0.0) {
        return Err(Error::Data("degenerate series: zero sample variance".into()));
    }
    let half = n / 2;
    let mut frequencies = Vec::with_capacity(half);
    let mut ordinates = Vec::with_capacity(half);
    let norm = 1.0 / (2.0 * std::f64::consts::PI * n as f64);
    for j in 1..=half {
        let lambda = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
        let (step_cos, step_sin) = (lambda.cos(), -lambda.sin());
        // Phasor starts at e^{-i * 0 * lambda} = 1 and is rotated per sample.
        let (mut pc, mut ps) = (1.0f64, 0.0f64);
        let (mut re, mut im) = (0.0f64, 0.0f64);
        for (t, &x) in centered.iter().enumerate() {
            re += x * pc;
            im += x * ps;
            let next_c = pc * step_cos - ps * step_sin;
            let next_s = pc * step_sin + ps * step_cos;
            pc = next_c;
            ps = next_s;
            // Refresh the phasor periodically so rounding drift stays bounded.
            if t % 4096 == 4095 {
                let angle = -lambda * (t as f64 + 1.0);
                pc = angle.cos();
                ps = angle.sin();
            }
        }
        frequencies.push(lambda);
        ordinates.push((re * re + im * im) * norm);
    }
    Ok(SpectrumResult { frequencies, ordinates, n })
}

/// Just the `count` lowest-frequency periodogram ordinates, where long
/// memory shows up as divergence. O(count * n) instead of O(n^2).
pub fn periodogram_lowfreq(series: &[f64], count: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = series.len();
    if n < 16 {
        return Err(Error::Data(format!("periodogram needs n >= 16, got {n}")));
    }
    let count = count.min(n / 2);
    let mean = series.iter().sum::<f64>() / n as f64;
    let norm = 1.0 / (2.0 * std::f64::consts::PI * n as f64);
    let mut frequencies = Vec::with_capacity(count);
    let mut ordinates = Vec::with_capacity(count);
    for j in 1..=count {
        let lambda = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
        let (mut re, mut im) = (0.0f64, 0.0f64);
        for (t, &x) in series.iter().enumerate() {
            let angle = -lambda * t as f64;
            re += (x - mean) * angle.cos();
            im += (x - mean) * angle.sin();
        }
        frequencies.push(lambda);
        ordinates.push((re * re + im * im) * norm);
    }
    Ok((frequencies, ordinates))
}

impl SpectrumResult {
    /// Symmetry-weighted mean ordinate, the quantity that equals
    /// gamma_0 / (2 pi): ordinates below the Nyquist frequency stand for a
    /// conjugate pair, the Nyquist ordinate (even n) for itself.
    pub fn parseval_mean(&self) -> f64 {
        let mut acc = 0.0;
        for (j, &ord) in self.ordinates.iter().enumerate() {
            let weight = if self.n % 2 == 0 && j + 1 == self.n / 2 { 1.0 } else { 2.0 };
            acc += weight * ord;
        }
        acc / self.n as f64
    }
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return (0.0, my, 0.0);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = (sxy * sxy) / (sxx * syy);
    (slope, intercept, r2)
}

/// Least-squares slope, intercept and R^2 of y on x. Exposed for the
/// slope-style acceptance checks.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    least_squares(xs, ys)
}

/// Classify the tail decay of a coefficient sequence as exponential
/// (log|c_k| linear in k) or polynomial (log|c_k| linear in log k) by
/// whichever least-squares fit explains more variance; `Undecided` when both
/// R^2 fall below 0.8.
///
/// `coeffs[k]` is c_k; the fit uses k >= max(tail_start, 1), skipping exact
/// zeros (underflowed geometric tails produce those).
pub fn classify_decay(coeffs: &[f64], tail_start: usize) -> Result<DecayClass> {
    let start = tail_start.max(1);
    let mut ks = Vec::new();
    let mut logs = Vec::new();
    let mut zeros = 0usize;
    for (k, &c) in coeffs.iter().enumerate().skip(start) {
        if c == 0.0 {
            zeros += 1;
            continue;
        }
        ks.push(k as f64);
        logs.push(c.abs().ln());
    }
    if ks.len() < 20 {
        return Err(Error::Data(format!(
            "decay classification needs >= 20 nonzero tail points, found {}",
            ks.len()
        )));
    }
    let (slope_exp, _, r2_exp) = least_squares(&ks, &logs);
    let log_ks: Vec<f64> = ks.iter().map(|k| k.ln()).collect();
    let (slope_poly, _, r2_poly) = least_squares(&log_ks, &logs);
    let (kind, rate) = if r2_exp < 0.8 && r2_poly < 0.8 {
        (DecayKind::Undecided, 0.0)
    } else if r2_exp >= r2_poly {
        (DecayKind::Exponential, slope_exp.exp())
    } else {
        (DecayKind::Polynomial, slope_poly)
    };
    Ok(DecayClass { kind, rate, fit_r2: (r2_exp, r2_poly), zeros_excluded: zeros })
}

/// Memory classification of an observed series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MemoryClass {
    ShortMemory,
    LongMemory,
    Undecided,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesMemoryReport {
    pub class: MemoryClass,
    /// Fraction of lags 1..L inside the +-3/sqrt(n) white-noise band.
    pub white_noise_fraction: f64,
    /// Decay fit of the ACF tail, when enough significant lags exist.
    pub acf_decay: Option<DecayClass>,
    pub max_lag: usize,
}

/// Least-squares fits of log(mean ACF) over log-spaced lag bins; binning
/// tames the sampling noise of individual autocorrelations at moderate n.
fn binned_decay_fit(r: &[f64], lo: usize, hi: usize) -> DecayClass {
    let nbins = 12usize;
    let ratio = (hi as f64 / lo as f64).powf(1.0 / nbins as f64);
    let mut edges = Vec::with_capacity(nbins + 1);
    let mut e = lo as f64;
    for _ in 0..=nbins {
        edges.push((e.round() as usize).min(hi));
        e *= ratio;
    }
    edges.dedup();
    let mut centers = Vec::new();
    let mut logs = Vec::new();
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1].max(pair[0]));
        let vals = &r[a..=b];
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        // Both decay hypotheses concern a positive tail; skip washed-out bins.
        if mean > 0.0 {
            centers.push((a + b) as f64 / 2.0);
            logs.push(mean.ln());
        }
    }
    if centers.len() < 4 {
        return DecayClass { kind: DecayKind::Undecided, rate: 0.0, fit_r2: (0.0, 0.0), zeros_excluded: 0 };
    }
    let (_, _, r2_exp) = least_squares(&centers, &logs);
    let log_centers: Vec<f64> = centers.iter().map(|c| c.ln()).collect();
    let (slope_poly, _, r2_poly) = least_squares(&log_centers, &logs);
    if r2_poly >= 0.8 {
        DecayClass { kind: DecayKind::Polynomial, rate: slope_poly, fit_r2: (r2_exp, r2_poly), zeros_excluded: 0 }
    } else {
        DecayClass { kind: DecayKind::Undecided, rate: 0.0, fit_r2: (r2_exp, r2_poly), zeros_excluded: 0 }
    }
}

/// Heuristic memory classification from the sample ACF. This is a
/// finite-sample decision rule, not a hypothesis test.
///
/// Near-white series are short memory, as are series whose correlation falls
/// inside the white-noise band for most of the examined tail (a geometric
/// ACF with rate up to ~0.95 dies well inside a 200-lag window). When the
/// correlation persists across the whole window, moderate geometric decay is
/// already ruled out and a binned log-log fit of the tail gates the
/// long-memory verdict.
pub fn classify_series_memory(series: &[f64]) -> Result<SeriesMemoryReport> {
    let n = series.len();
    if n < 32 {
        return Err(Error::Data(format!("memory classification needs n >= 32, got {n}")));
    }
    let max_lag = 200.min(n / 4);
    let res = acf(series, max_lag)?;
    let band = 3.0 / (n as f64).sqrt();
    let r = &res.autocorrelation;
    let inside = r[1..].iter().filter(|v| v.abs() <= band).count();
    let white_fraction = inside as f64 / max_lag as f64;
    if white_fraction >= 0.95 {
        return Ok(SeriesMemoryReport {
            class: MemoryClass::ShortMemory,
            white_noise_fraction: white_fraction,
            acf_decay: None,
            max_lag,
        });
    }
    let tail_start = 20.min(max_lag / 4).max(1);
    let significant_tail = r[tail_start..].iter().filter(|v| v.abs() > band).count() as f64
        / (max_lag - tail_start + 1) as f64;
    if significant_tail < 0.5 {
        return Ok(SeriesMemoryReport {
            class: MemoryClass::ShortMemory,
            white_noise_fraction: white_fraction,
            acf_decay: None,
            max_lag,
        });
    }
    let decay = binned_decay_fit(r, tail_start.min(5).max(2), max_lag);
    let class = match decay.kind {
        DecayKind::Polynomial => MemoryClass::LongMemory,
        _ => MemoryClass::Undecided,
    };
    Ok(SeriesMemoryReport {
        class,
        white_noise_fraction: white_fraction,
        acf_decay: Some(decay),
        max_lag,
    })
}
