//! Windowed time series and a trend test used as the stability proxy.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Accumulates a scalar series into consecutive windows of fixed length and
/// keeps only the per-window means.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedTrace {
    window: u64,
    filled: u64,
    acc: f64,
    means: Vec<f64>,
}

impl WindowedTrace {
    pub fn new(window: u64) -> Result<Self> {
        if window == 0 {
            return Err(Error::InvalidParameter("window length must be positive".into()));
        }
        Ok(Self {
            window,
            filled: 0,
            acc: 0.0,
            means: Vec::new(),
        })
    }

    pub fn push(&mut self, x: f64) {
        self.acc += x;
        self.filled += 1;
        if self.filled == self.window {
            self.means.push(self.acc / self.window as f64);
            self.acc = 0.0;
            self.filled = 0;
        }
    }

    pub fn window(&self) -> u64 {
        self.window
    }

    /// Means of the completed windows; a trailing partial window is dropped.
    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn from_means(window: u64, means: Vec<f64>) -> Result<Self> {
        let mut t = Self::new(window)?;
        t.means = means;
        Ok(t)
    }
}

/// Average of equally long window series, index by index.
pub fn pool_means(series: &[&[f64]]) -> Result<Vec<f64>> {
    let Some(first) = series.first() else {
        return Ok(Vec::new());
    };
    if let Some(s) = series.iter().find(|s| s.len() != first.len()) {
        return Err(Error::Dimension {
            expected: first.len(),
            got: s.len(),
        });
    }
    let k = series.len() as f64;
    Ok((0..first.len())
        .map(|i| series.iter().map(|s| s[i]).sum::<f64>() / k)
        .collect())
}

/// Per-slot drift estimated from first differences of window means.
///
/// For a series with a linear trend `c t` the differences have mean `c W`.
/// Differencing also removes any slowly wandering level, so a random-walk
/// alternative does not produce the spuriously narrow interval that an
/// ordinary least-squares fit would.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendEstimate {
    pub slope: f64,
    pub std_error: f64,
    pub df: u64,
    /// Ordinary least-squares slope of the window means against slot index,
    /// for reference only.
    pub ols_slope: f64,
}

pub fn trend(window: u64, means: &[f64]) -> Result<TrendEstimate> {
    let k = means.len();
    if k < 3 {
        return Err(Error::InvalidParameter(alloc::format!(
            "trend needs at least 3 windows, got {k}"
        )));
    }
    let w = window as f64;
    let d: Vec<f64> = means.windows(2).map(|p| p[1] - p[0]).collect();
    let m = d.len() as f64;
    let mean = d.iter().sum::<f64>() / m;
    let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1.0);
    let tbar = (k as f64 - 1.0) / 2.0;
    let ybar = means.iter().sum::<f64>() / k as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in means.iter().enumerate() {
        let dx = i as f64 - tbar;
        sxy += dx * (y - ybar);
        sxx += dx * dx;
    }
    Ok(TrendEstimate {
        slope: mean / w,
        std_error: math::sqrt(var / m) / w,
        df: d.len() as u64 - 1,
        ols_slope: sxy / sxx / w,
    })
}

/// Name of the stability proxy, recorded in every report.
pub const STABILITY_PROXY: &str =
    "no positive drift: lower confidence bound of the per-slot drift of window means is <= 0";

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub proxy: &'static str,
    pub window: u64,
    pub windows: usize,
    pub level: f64,
    pub trend: TrendEstimate,
    pub ci: (f64, f64),
    pub stable: bool,
    pub mean: f64,
    pub max_window_mean: f64,
}

/// `t_crit` is the two-sided Student-t critical value for `level` at
/// `trend.df` degrees of freedom.
pub fn stability_diagnostic(window: u64, means: &[f64], level: f64, t_crit: f64) -> Result<StabilityReport> {
    let trend = trend(window, means)?;
    let half = t_crit * trend.std_error;
    let ci = (trend.slope - half, trend.slope + half);
    Ok(StabilityReport {
        proxy: STABILITY_PROXY,
        window,
        windows: means.len(),
        level,
        trend,
        ci,
        stable: ci.0 <= 0.0,
        mean: means.iter().sum::<f64>() / means.len() as f64,
        max_window_mean: means.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Mean and standard error of independent replicate values.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, math::sqrt(var / n))
}
