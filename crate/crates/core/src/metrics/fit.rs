//! Least-squares fits: lines, exponentials, and the two-phase growth model
//! of a cumulative-weight trajectory.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination; 1 for a perfect (or constant) fit.
    pub r2: f64,
    pub sse: f64,
    pub n: usize,
}

impl LineFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// Ordinary least squares `y = slope * x + intercept`. Needs two distinct x.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(&x, &y)| (y - slope * x - intercept).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Some(LineFit { slope, intercept, r2, sse, n })
}

/// `y = exp(rate * x + offset)`, fitted on `ln y`. The reported `sse` is
/// measured on `y` itself so it can be compared with a line fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpFit {
    pub rate: f64,
    pub offset: f64,
    pub sse: f64,
    pub n: usize,
}

impl ExpFit {
    pub fn eval(&self, x: f64) -> f64 {
        (self.rate * x + self.offset).exp()
    }
}

pub fn fit_exponential(xs: &[f64], ys: &[f64]) -> Option<ExpFit> {
    if ys.iter().any(|&y| y <= 0.0) {
        return None;
    }
    let logs: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let line = fit_line(xs, &logs)?;
    let mut fit = ExpFit { rate: line.slope, offset: line.intercept, sse: 0.0, n: xs.len() };
    fit.sse = xs.iter().zip(ys).map(|(&x, &y)| (y - fit.eval(x)).powi(2)).sum();
    Some(fit)
}

/// Exponential adaptation phase followed by linear growth.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthPhases {
    /// `None` when the best split puts every point in the linear phase.
    pub exponential: Option<ExpFit>,
    /// `None` when the best split puts every point in the exponential phase.
    pub linear: Option<LineFit>,
    /// Time of the first point of the linear phase (or past the last point).
    pub changepoint: f64,
    /// Number of points assigned to the exponential phase.
    pub split: usize,
    pub total_sse: f64,
}

const MIN_SEGMENT: usize = 3;
const GRID_POINTS: usize = 400;

/// Fits an exponential to a leading segment and a line to the rest, scanning
/// candidate split points on a grid and keeping the smallest combined
/// residual. Either segment may come out empty.
pub fn fit_growth_phases(points: &[(f64, u64)]) -> Result<GrowthPhases> {
    let n = points.len();
    if n < 2 * MIN_SEGMENT {
        return Err(Error::InsufficientData(format!(
            "growth-phase fit needs at least {} points, got {n}",
            2 * MIN_SEGMENT
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1 as f64).collect();

    let step = ((n - 2 * MIN_SEGMENT) / GRID_POINTS).max(1);
    let mut candidates: Vec<usize> = vec![0];
    candidates.extend((MIN_SEGMENT..=n - MIN_SEGMENT).step_by(step));
    candidates.push(n);

    let mut best: Option<GrowthPhases> = None;
    for k in candidates {
        let exponential = if k == 0 {
            None
        } else {
            match fit_exponential(&xs[..k], &ys[..k]) {
                Some(f) => Some(f),
                None => continue,
            }
        };
        let linear = if k == n {
            None
        } else {
            match fit_line(&xs[k..], &ys[k..]) {
                Some(f) => Some(f),
                None => continue,
            }
        };
        let total_sse = exponential.map_or(0.0, |f| f.sse) + linear.map_or(0.0, |f| f.sse);
        if best.as_ref().is_none_or(|b| total_sse < b.total_sse) {
            best = Some(GrowthPhases {
                exponential,
                linear,
                changepoint: xs.get(k).copied().unwrap_or(f64::INFINITY),
                split: k,
                total_sse,
            });
        }
    }
    best.ok_or_else(|| Error::InsufficientData("no admissible split".into()))
}
