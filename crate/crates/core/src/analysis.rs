//! Singular-feature detection along transects, convergence of time averages,
//! and invariant sets as level sets of converged average fields.

use std::collections::VecDeque;
use std::ops::ControlFlow;

use rayon::prelude::*;

use crate::descriptor::{descriptor_at, AverageSeries, Axis, LDConfig, ScalarField};
use crate::error::{Error, Result};
use crate::integrator::sweep;
use crate::systems::{check_dim, VectorField};

/// Descriptor samples along `anchor + s * direction` for uniformly spaced `s`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransectProfile {
    pub anchor: Vec<f64>,
    pub direction: Vec<f64>,
    pub offsets: Vec<f64>,
    pub values: Vec<f64>,
    pub partial: Vec<bool>,
    /// Backward difference quotient at each interior sample; `None` when a
    /// neighbouring sample is partial.
    pub left_slope: Vec<Option<f64>>,
    /// Forward difference quotient at each interior sample.
    pub right_slope: Vec<Option<f64>>,
}

impl TransectProfile {
    /// Builds a profile from precomputed samples on `[-half_width, half_width]`.
    pub fn from_samples(
        anchor: Vec<f64>,
        direction: Vec<f64>,
        half_width: f64,
        values: Vec<f64>,
        partial: Vec<bool>,
    ) -> Result<Self> {
        let n = values.len();
        if n < 5 || n.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!("transects need an odd sample count >= 5, got {n}")));
        }
        if partial.len() != n {
            return Err(Error::InvalidConfig("partial flags and values differ in length".into()));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidConfig(format!("half width must be > 0, got {half_width}")));
        }
        let h = 2.0 * half_width / (n - 1) as f64;
        let offsets = (0..n)
            .map(|i| if i + 1 == n { half_width } else { -half_width + h * i as f64 })
            .collect();
        let slope = |a: usize, b: usize| (!partial[a] && !partial[b]).then(|| (values[b] - values[a]) / h);
        let left_slope = (1..n - 1).map(|i| slope(i - 1, i)).collect();
        let right_slope = (1..n - 1).map(|i| slope(i, i + 1)).collect();
        Ok(TransectProfile {
            anchor,
            direction,
            offsets,
            values,
            partial,
            left_slope,
            right_slope,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.offsets[1] - self.offsets[0]
    }

    /// Full-dimensional coordinates of sample `i`.
    pub fn point(&self, i: usize) -> Vec<f64> {
        let s = self.offsets[i];
        self.anchor.iter().zip(&self.direction).map(|(a, d)| a + s * d).collect()
    }
}

/// Samples the descriptor along a line through `anchor`.
pub fn transect<F: VectorField + ?Sized>(
    field: &F,
    cfg: &LDConfig,
    anchor: &[f64],
    direction: &[f64],
    half_width: f64,
    n: usize,
) -> Result<TransectProfile> {
    check_dim(field.dim(), anchor.len())?;
    check_dim(field.dim(), direction.len())?;
    let norm = direction.iter().map(|d| d * d).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::InvalidConfig("transect direction must be a nonzero vector".into()));
    }
    let direction: Vec<f64> = direction.iter().map(|d| d / norm).collect();
    // validate before integrating anything
    let empty = TransectProfile::from_samples(anchor.to_vec(), direction.clone(), half_width, vec![0.0; n], vec![false; n])?;
    let samples = (0..n)
        .into_par_iter()
        .map(|i| descriptor_at(field, &empty.point(i), cfg))
        .collect::<Result<Vec<_>>>()?;
    TransectProfile::from_samples(
        anchor.to_vec(),
        direction,
        half_width,
        samples.iter().map(|s| s.value).collect(),
        samples.iter().map(|s| s.partial).collect(),
    )
}

pub const DEFAULT_KAPPA: f64 = 10.0;

#[derive(Clone, Debug, PartialEq)]
pub struct SingularFeatureReport {
    pub flagged_offsets: Vec<f64>,
    /// Sample indices of the flags.
    pub flagged_indices: Vec<usize>,
    pub jump_ratios: Vec<f64>,
    pub threshold: f64,
    /// Slope-jump scale the ratios are measured against.
    pub baseline: f64,
    /// All slopes vanish; nothing can be detected.
    pub degenerate: bool,
}

fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

/// Flags samples where the derivative along the transect fails to exist.
///
/// The jump `|right_slope - left_slope|` at each interior sample is compared
/// with the median jump over the transect, which measures how much a smooth
/// profile bends between neighbouring samples. Samples whose ratio exceeds
/// `kappa` are grouped into runs of adjacent samples, and each run reports
/// its sample with the largest ratio. Ratios are unchanged by positive
/// rescaling of the values.
pub fn detect_singularities(profile: &TransectProfile, kappa: f64) -> Result<SingularFeatureReport> {
    if !(kappa > 1.0) {
        return Err(Error::InvalidConfig(format!("kappa must exceed 1, got {kappa}")));
    }
    let jumps: Vec<Option<f64>> = profile
        .left_slope
        .iter()
        .zip(&profile.right_slope)
        .map(|(l, r)| Some((r.as_ref()? - l.as_ref()?).abs()))
        .collect();
    let slopes: Vec<f64> = profile
        .left_slope
        .iter()
        .chain(&profile.right_slope)
        .flatten()
        .map(|s| s.abs())
        .collect();
    let mut report = SingularFeatureReport {
        flagged_offsets: Vec::new(),
        flagged_indices: Vec::new(),
        jump_ratios: Vec::new(),
        threshold: kappa,
        baseline: 0.0,
        degenerate: false,
    };
    if slopes.iter().all(|&s| s == 0.0) {
        report.degenerate = true;
        return Ok(report);
    }
    let typical_slope = median(slopes.clone()).max(slopes.iter().cloned().fold(0.0, f64::max) * 1e-3);
    report.baseline = median(jumps.iter().flatten().copied().collect()).max(1e-6 * typical_slope);

    let ratios: Vec<Option<f64>> = jumps.iter().map(|j| j.map(|j| j / report.baseline)).collect();
    let mut i = 0;
    while i < ratios.len() {
        if ratios[i].is_some_and(|r| r > kappa) {
            let mut best = i;
            let mut j = i;
            while j < ratios.len() && ratios[j].is_some_and(|r| r > kappa) {
                if ratios[j] > ratios[best] {
                    best = j;
                }
                j += 1;
            }
            // interior sample k sits at profile index k + 1
            report.flagged_indices.push(best + 1);
            report.flagged_offsets.push(profile.offsets[best + 1]);
            report.jump_ratios.push(ratios[best].unwrap());
            i = j;
        } else {
            i += 1;
        }
    }
    Ok(report)
}

pub const DEFAULT_WINDOW: f64 = 10.0;
pub const DEFAULT_EPS: f64 = 1e-3;

/// Time averages against `tau` with a convergence verdict.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceSeries {
    pub x0: Vec<f64>,
    pub taus: Vec<f64>,
    pub averages: Vec<f64>,
    /// Relative oscillation over the window ending at each sample; `None`
    /// until a full window is available.
    pub oscillation: Vec<Option<f64>>,
    pub converged: bool,
    /// Earliest sample after which every window stays within tolerance.
    pub tau_converged: Option<f64>,
    pub window: f64,
    pub tolerance: f64,
}

impl ConvergenceSeries {
    /// Final average, when converged.
    pub fn limit(&self) -> Option<f64> {
        self.converged.then(|| *self.averages.last().unwrap())
    }

    /// Whether the verdict was reached no later than `tau`.
    pub fn converged_by(&self, tau: f64) -> bool {
        self.tau_converged.is_some_and(|t| t <= tau)
    }
}

/// Judges convergence of `(tau, average)` samples: the relative oscillation
/// `(max - min) / |mean|` over the trailing window `[tau - window, tau]` must
/// fall below `eps` and stay there.
pub fn assess_convergence(samples: &[(f64, f64)], window: f64, eps: f64) -> Result<ConvergenceSeries> {
    if !(window > 0.0) || !(eps > 0.0) {
        return Err(Error::InvalidConfig("window and tolerance must be positive".into()));
    }
    if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::InvalidConfig("tau samples must be strictly ascending".into()));
    }
    let taus: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let averages: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let first = *taus.first().ok_or_else(|| Error::TooFewSamples("empty series".into()))?;
    let slack = 1e-9 * window;

    let mut oscillation = Vec::with_capacity(taus.len());
    let mut start = 0;
    for (j, &tau) in taus.iter().enumerate() {
        if tau - first < window - slack {
            oscillation.push(None);
            continue;
        }
        while taus[start] < tau - window - slack {
            start += 1;
        }
        let span = &averages[start..=j];
        let (lo, hi) = span.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| (lo.min(a), hi.max(a)));
        let mean = span.iter().sum::<f64>() / span.len() as f64;
        let osc = if hi == lo { 0.0 } else { (hi - lo) / mean.abs().max(f64::MIN_POSITIVE) };
        oscillation.push(Some(osc));
    }
    if oscillation.iter().all(Option::is_none) {
        return Err(Error::TooFewSamples(format!("no full window of width {window} in the series")));
    }
    let converged = oscillation.last().unwrap().is_some_and(|o| o < eps);
    let tau_converged = converged.then(|| {
        let mut k = oscillation.len();
        while k > 0 && oscillation[k - 1].is_some_and(|o| o < eps) {
            k -= 1;
        }
        taus[k]
    });
    Ok(ConvergenceSeries {
        x0: Vec::new(),
        taus,
        averages,
        oscillation,
        converged,
        tau_converged,
        window,
        tolerance: eps,
    })
}

/// [`assess_convergence`] on a computed series. Samples past a truncation
/// are dropped.
pub fn assess_series(series: &AverageSeries, window: f64, eps: f64) -> Result<ConvergenceSeries> {
    let valid: Vec<(f64, f64)> = series
        .pairs()
        .into_iter()
        .zip(&series.valid)
        .take_while(|(_, &ok)| ok)
        .map(|(p, _)| p)
        .collect();
    let mut out = assess_convergence(&valid, window, eps)?;
    out.x0 = series.x0.clone();
    if valid.len() < series.taus.len() {
        out.converged = false;
        out.tau_converged = None;
    }
    Ok(out)
}

fn neighbours(field: &ScalarField, k: usize) -> impl Iterator<Item = usize> + '_ {
    let shape = field.grid.shape();
    let idx = field.grid.multi_index(k);
    let mut out = Vec::with_capacity(2 * shape.len());
    for d in 0..shape.len() {
        let mut n = idx.clone();
        if idx[d] > 0 {
            n[d] = idx[d] - 1;
            out.push(field.grid.flat_index(&n));
        }
        if idx[d] + 1 < shape[d] {
            n[d] = idx[d] + 1;
            out.push(field.grid.flat_index(&n));
        }
    }
    out.into_iter()
}

/// Connected components of `{node : |value - level| <= tol}` under face
/// adjacency. Each component lists flat node indices in ascending order;
/// components are ordered by their smallest index.
pub fn invariant_level_set(field: &ScalarField, level: f64, tol: f64) -> Vec<Vec<usize>> {
    let inside: Vec<bool> = field.values.iter().map(|v| (v - level).abs() <= tol).collect();
    let mut seen = vec![false; inside.len()];
    let mut components = Vec::new();
    for start in 0..inside.len() {
        if !inside[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut component = Vec::new();
        while let Some(k) = queue.pop_front() {
            component.push(k);
            for n in neighbours(field, k) {
                if inside[n] && !seen[n] {
                    seen[n] = true;
                    queue.push_back(n);
                }
            }
        }
        component.sort_unstable();
        components.push(component);
    }
    components
}

/// Median absolute difference between face-adjacent nodes: the typical
/// variation of the field across one grid spacing.
pub fn neighbor_variation(field: &ScalarField) -> f64 {
    let mut diffs = Vec::new();
    for k in 0..field.len() {
        for n in neighbours(field, k).filter(|&n| n > k) {
            diffs.push((field.values[n] - field.values[k]).abs());
        }
    }
    median(diffs)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvarianceReport {
    /// Largest `|f(x(t)) - f(seed)|` along the trajectory.
    pub deviation: f64,
    /// Interpolated field value at the seed.
    pub reference: f64,
    /// Trajectory nodes compared.
    pub samples: usize,
    /// The trajectory left the grid box; only the interior part was compared.
    pub left_box: bool,
    pub tol: f64,
    pub within_tol: bool,
}

/// Follows the trajectory from `seed` for `t_span` and measures how far the
/// interpolated `grid_field` strays from its value at the seed. Fields with
/// a period wrap coordinates back into the grid box.
pub fn invariance_check<F: VectorField + ?Sized>(
    field: &F,
    seed: &[f64],
    t_span: f64,
    grid_field: &ScalarField,
    tol: f64,
) -> Result<InvarianceReport> {
    check_dim(field.dim(), seed.len())?;
    check_dim(field.dim(), grid_field.grid.dim())?;
    if grid_field.grid.axes().iter().any(|a| matches!(a, Axis::Fixed(_))) {
        return Err(Error::Unsupported("invariance checks need a field over the full phase space".into()));
    }
    if !(t_span > 0.0) {
        return Err(Error::InvalidConfig(format!("t_span must be > 0, got {t_span}")));
    }
    let period = field.period();
    let wrap = |x: &[f64]| -> Vec<f64> {
        match period {
            Some(p) => x
                .iter()
                .zip(grid_field.grid.axes())
                .map(|(&c, axis)| match *axis {
                    Axis::Free { lo, hi, .. } if c < lo || c > hi => lo + (c - lo).rem_euclid(p),
                    _ => c,
                })
                .collect(),
            None => x.to_vec(),
        }
    };
    let reference = grid_field
        .interpolate(&wrap(seed))
        .ok_or_else(|| Error::InvalidConfig("seed lies outside the field's grid".into()))?;

    let cfg = &grid_field.meta.config;
    let mut deviation = 0.0f64;
    let mut samples = 0;
    let mut left_box = false;
    sweep(field, seed, cfg.t0, t_span, &cfg.integrator, |_, x, _| match grid_field.interpolate(&wrap(x)) {
        Some(v) => {
            deviation = deviation.max((v - reference).abs());
            samples += 1;
            ControlFlow::Continue(())
        }
        None => {
            left_box = true;
            ControlFlow::Break(())
        }
    })?;
    Ok(InvarianceReport {
        deviation,
        reference,
        samples,
        left_box,
        tol,
        within_tol: deviation <= tol,
    })
}
