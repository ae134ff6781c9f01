//! Descriptor engines: `M_p`, arc length `M` and LAVD at single points, over
//! grids of initial conditions, and as running time averages.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::ControlFlow;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrator::{accumulate, sweep, IntegratorConfig};
use crate::systems::{check_dim, VectorField};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DescriptorKind {
    /// Sum of `|x_i'|^p` over components, `0 < p <= 1`.
    Mp { p: f64 },
    /// Euclidean speed.
    ArcLength,
    /// Lagrangian-averaged vorticity deviation, forward in time only.
    Lavd,
}

impl DescriptorKind {
    pub fn name(&self) -> &'static str {
        match self {
            DescriptorKind::Mp { .. } => "mp",
            DescriptorKind::ArcLength => "arclength",
            DescriptorKind::Lavd => "lavd",
        }
    }

    pub fn p(&self) -> Option<f64> {
        match self {
            DescriptorKind::Mp { p } => Some(*p),
            _ => None,
        }
    }

    /// Builds a kind from its name and the optional exponent.
    pub fn from_parts(name: &str, p: Option<f64>) -> Result<Self> {
        match (name, p) {
            ("mp", Some(p)) => Ok(DescriptorKind::Mp { p }),
            ("mp", None) => Err(Error::InvalidConfig("kind mp requires an exponent p".into())),
            ("arclength", _) => Ok(DescriptorKind::ArcLength),
            ("lavd", _) => Ok(DescriptorKind::Lavd),
            (other, _) => Err(Error::InvalidConfig(format!("unknown descriptor kind `{other}`"))),
        }
    }
}

impl fmt::Display for DescriptorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DescriptorKind::Mp { p } => write!(f, "mp(p={p})"),
            other => f.write_str(other.name()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LDConfig {
    pub kind: DescriptorKind,
    pub tau: f64,
    pub t0: f64,
    pub integrator: IntegratorConfig,
}

impl LDConfig {
    pub fn new(kind: DescriptorKind, tau: f64) -> Result<Self> {
        let cfg = LDConfig {
            kind,
            tau,
            t0: 0.0,
            integrator: IntegratorConfig::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn mp(p: f64, tau: f64) -> Result<Self> {
        Self::new(DescriptorKind::Mp { p }, tau)
    }

    pub fn arclength(tau: f64) -> Result<Self> {
        Self::new(DescriptorKind::ArcLength, tau)
    }

    pub fn lavd(tau: f64) -> Result<Self> {
        Self::new(DescriptorKind::Lavd, tau)
    }

    pub fn with_t0(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.integrator.step = step;
        self
    }

    pub fn with_safety_box(mut self, half_width: f64) -> Self {
        self.integrator.safety_box = half_width;
        self
    }

    pub fn with_integrator(mut self, integrator: IntegratorConfig) -> Self {
        self.integrator = integrator;
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let DescriptorKind::Mp { p } = self.kind {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidConfig(format!("p must lie in (0, 1], got {p}")));
            }
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidConfig(format!("tau must be > 0, got {}", self.tau)));
        }
        if !self.t0.is_finite() {
            return Err(Error::InvalidConfig("t0 must be finite".into()));
        }
        self.integrator.validate()
    }
}

/// Descriptor value at one initial condition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LdValue {
    pub value: f64,
    /// The trajectory was truncated before the horizon; `value` covers only
    /// the reached part.
    pub partial: bool,
}

fn mp_integrand(p: f64) -> impl Fn(&[f64], f64, &[f64]) -> f64 {
    move |_, _, v| {
        if p == 1.0 {
            v.iter().map(|c| c.abs()).sum()
        } else {
            v.iter().map(|c| c.abs().powf(p)).sum()
        }
    }
}

fn speed(_: &[f64], _: f64, v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn check_lavd<F: VectorField + ?Sized>(field: &F, cfg: &LDConfig) -> Result<()> {
    if field.dim() != 2 {
        return Err(Error::Unsupported(format!(
            "LAVD needs a planar field, `{}` has dimension {}",
            field.name(),
            field.dim()
        )));
    }
    if field.mean_vorticity(cfg.t0).is_none() {
        return Err(Error::Unsupported(format!(
            "no registered mean vorticity for `{}`",
            field.name()
        )));
    }
    Ok(())
}

/// Numerical descriptor value at `x0`.
///
/// `mp` and `arclength` integrate over `[t0 - tau, t0 + tau]`; `lavd` over
/// `[t0, t0 + tau]`. Truncation by the safety box (or a non-finite state)
/// yields a partial value instead of an error.
pub fn descriptor_at<F: VectorField + ?Sized>(field: &F, x0: &[f64], cfg: &LDConfig) -> Result<LdValue> {
    cfg.validate()?;
    check_dim(field.dim(), x0.len())?;
    let ic = &cfg.integrator;
    let (value, partial) = match cfg.kind {
        DescriptorKind::Mp { p } => two_sided(field, x0, cfg, mp_integrand(p))?,
        DescriptorKind::ArcLength => two_sided(field, x0, cfg, speed)?,
        DescriptorKind::Lavd => {
            check_lavd(field, cfg)?;
            let deviation = |x: &[f64], t: f64, _: &[f64]| {
                let w = field.vorticity(x, t).unwrap_or(f64::NAN);
                let mean = field.mean_vorticity(t).unwrap_or(f64::NAN);
                (w - mean).abs()
            };
            let (value, outcome) = accumulate(field, x0, cfg.t0, cfg.tau, ic, deviation)?;
            (value, outcome.truncated.is_some())
        }
    };
    Ok(LdValue { value, partial })
}

fn two_sided<F, G>(field: &F, x0: &[f64], cfg: &LDConfig, integrand: G) -> Result<(f64, bool)>
where
    F: VectorField + ?Sized,
    G: Fn(&[f64], f64, &[f64]) -> f64,
{
    let (back, b) = accumulate(field, x0, cfg.t0, -cfg.tau, &cfg.integrator, &integrand)?;
    let (fwd, f) = accumulate(field, x0, cfg.t0, cfg.tau, &cfg.integrator, &integrand)?;
    Ok((back + fwd, b.truncated.is_some() || f.truncated.is_some()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Axis {
    /// `n` uniformly spaced nodes from `lo` to `hi` inclusive.
    Free { lo: f64, hi: f64, n: usize },
    /// A slice through the domain at a fixed coordinate.
    Fixed(f64),
}

impl Axis {
    pub fn free(lo: f64, hi: f64, n: usize) -> Self {
        Axis::Free { lo, hi, n }
    }

    pub fn count(&self) -> usize {
        match self {
            Axis::Free { n, .. } => *n,
            Axis::Fixed(_) => 1,
        }
    }

    pub fn coord(&self, i: usize) -> f64 {
        match *self {
            Axis::Free { lo, hi, n } => {
                if i + 1 == n {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            }
            Axis::Fixed(v) => v,
        }
    }

    pub fn spacing(&self) -> Option<f64> {
        match *self {
            Axis::Free { lo, hi, n } => Some((hi - lo) / (n - 1) as f64),
            Axis::Fixed(_) => None,
        }
    }
}

/// Grid of initial conditions. Free axes are stored with the first free axis
/// varying fastest, so a planar field is a sequence of rows of constant `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    axes: Vec<Axis>,
}

impl GridSpec {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidGrid("no axes".into()));
        }
        for (i, axis) in axes.iter().enumerate() {
            match *axis {
                Axis::Free { lo, hi, n } => {
                    if !(lo.is_finite() && hi.is_finite()) {
                        return Err(Error::InvalidGrid(format!("axis {i}: non-finite bounds")));
                    }
                    if !(lo < hi) {
                        return Err(Error::InvalidGrid(format!("axis {i}: need lo < hi, got {lo}..{hi}")));
                    }
                    if n < 2 {
                        return Err(Error::InvalidGrid(format!("axis {i}: need at least 2 nodes, got {n}")));
                    }
                }
                Axis::Fixed(v) => {
                    if !v.is_finite() {
                        return Err(Error::InvalidGrid(format!("axis {i}: non-finite slice")));
                    }
                }
            }
        }
        Ok(GridSpec { axes })
    }

    /// Box `[lo, hi]` with `n` nodes per axis.
    pub fn uniform(lo: &[f64], hi: &[f64], n: &[usize]) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() != n.len() {
            return Err(Error::InvalidGrid("lo, hi and resolution lengths differ".into()));
        }
        Self::new(
            lo.iter()
                .zip(hi)
                .zip(n)
                .map(|((&lo, &hi), &n)| Axis::free(lo, hi, n))
                .collect(),
        )
    }

    /// Square `[lo, hi]^2` with `n` nodes per side.
    pub fn square(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::uniform(&[lo, lo], &[hi, hi], &[n, n])
    }

    pub fn with_slice(mut self, axis: usize, value: f64) -> Result<Self> {
        if axis >= self.axes.len() {
            return Err(Error::InvalidGrid(format!("slice axis {axis} out of range")));
        }
        self.axes[axis] = Axis::Fixed(value);
        Self::new(self.axes)
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn free_axes(&self) -> Vec<usize> {
        (0..self.axes.len())
            .filter(|&i| matches!(self.axes[i], Axis::Free { .. }))
            .collect()
    }

    /// Node counts of the free axes.
    pub fn shape(&self) -> Vec<usize> {
        self.free_axes().iter().map(|&i| self.axes[i].count()).collect()
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-free-axis indices of flat index `k`.
    pub fn multi_index(&self, mut k: usize) -> Vec<usize> {
        self.shape()
            .iter()
            .map(|&n| {
                let i = k % n;
                k /= n;
                i
            })
            .collect()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        let mut k = 0;
        let mut stride = 1;
        for (&i, n) in idx.iter().zip(self.shape()) {
            k += i * stride;
            stride *= n;
        }
        k
    }

    /// Full-dimensional coordinates of node `k`.
    pub fn node(&self, k: usize) -> Vec<f64> {
        let idx = self.multi_index(k);
        let mut free = idx.into_iter();
        self.axes
            .iter()
            .map(|axis| match axis {
                Axis::Free { .. } => axis.coord(free.next().expect("index per free axis")),
                Axis::Fixed(v) => *v,
            })
            .collect()
    }

    pub fn spacing(&self, axis: usize) -> Option<f64> {
        self.axes.get(axis).and_then(Axis::spacing)
    }

    pub fn coords(&self, axis: usize) -> Vec<f64> {
        let a = self.axes[axis];
        (0..a.count()).map(|i| a.coord(i)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    Descriptor,
    /// Descriptor divided by the window length `2 tau`.
    Average,
    /// Finite-difference derivative of a descriptor along a spatial axis.
    Derivative { axis: usize },
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::Descriptor => f.write_str("descriptor"),
            Quantity::Average => f.write_str("average"),
            Quantity::Derivative { axis } => write!(f, "derivative:{axis}"),
        }
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "descriptor" => Ok(Quantity::Descriptor),
            "average" => Ok(Quantity::Average),
            _ => s
                .strip_prefix("derivative:")
                .and_then(|a| a.parse().ok())
                .map(|axis| Quantity::Derivative { axis })
                .ok_or_else(|| Error::InvalidConfig(format!("unknown quantity `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldMeta {
    pub system: String,
    pub params: BTreeMap<String, f64>,
    pub config: LDConfig,
    pub quantity: Quantity,
    /// RFC 3339 creation time, when the producer records one.
    pub created: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub partial: Vec<bool>,
    pub meta: FieldMeta,
}

impl ScalarField {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn partial_count(&self) -> usize {
        self.partial.iter().filter(|&&p| p).count()
    }

    /// Value at the node with per-free-axis indices `idx`.
    pub fn at(&self, idx: &[usize]) -> f64 {
        self.values[self.grid.flat_index(idx)]
    }

    /// The time-average field `M / (2 tau)`.
    pub fn to_average(&self) -> Result<ScalarField> {
        if self.meta.quantity != Quantity::Descriptor {
            return Err(Error::InvalidConfig("only descriptor fields can be averaged".into()));
        }
        let window = match self.meta.config.kind {
            DescriptorKind::Lavd => self.meta.config.tau,
            _ => 2.0 * self.meta.config.tau,
        };
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v /= window);
        out.meta.quantity = Quantity::Average;
        Ok(out)
    }

    /// Multilinear interpolation over the free axes at the full-dimensional
    /// point `x`. Returns `None` outside the grid box.
    pub fn interpolate(&self, x: &[f64]) -> Option<f64> {
        let free = self.grid.free_axes();
        let mut base = Vec::with_capacity(free.len());
        let mut frac = Vec::with_capacity(free.len());
        for &a in &free {
            let Axis::Free { lo, hi, n } = self.grid.axes()[a] else { unreachable!() };
            let c = x[a];
            if !(c >= lo && c <= hi) {
                return None;
            }
            let s = (c - lo) / (hi - lo) * (n - 1) as f64;
            let i = (s.floor() as usize).min(n - 2);
            base.push(i);
            frac.push(s - i as f64);
        }
        let mut total = 0.0;
        let mut idx = base.clone();
        for corner in 0..(1usize << free.len()) {
            let mut weight = 1.0;
            for d in 0..free.len() {
                if corner >> d & 1 == 1 {
                    idx[d] = base[d] + 1;
                    weight *= frac[d];
                } else {
                    idx[d] = base[d];
                    weight *= 1.0 - frac[d];
                }
            }
            if weight != 0.0 {
                total += weight * self.at(&idx);
            }
        }
        Some(total)
    }
}

/// Evaluates the descriptor at every grid node, in parallel over the current
/// rayon pool. Output does not depend on the number of workers.
pub fn compute_field<F: VectorField + ?Sized>(field: &F, grid: &GridSpec, cfg: &LDConfig) -> Result<ScalarField> {
    compute_field_with(field, grid, cfg, BTreeMap::new())
}

/// [`compute_field`] for a builtin, recording its parameters in the metadata.
pub fn compute_field_with<F: VectorField + ?Sized>(
    field: &F,
    grid: &GridSpec,
    cfg: &LDConfig,
    params: BTreeMap<String, f64>,
) -> Result<ScalarField> {
    cfg.validate()?;
    check_dim(field.dim(), grid.dim())?;
    if cfg.kind == DescriptorKind::Lavd {
        check_lavd(field, cfg)?;
    }
    let samples: Vec<LdValue> = (0..grid.len())
        .into_par_iter()
        .map(|k| descriptor_at(field, &grid.node(k), cfg))
        .collect::<Result<_>>()?;
    Ok(ScalarField {
        grid: grid.clone(),
        values: samples.iter().map(|s| s.value).collect(),
        partial: samples.iter().map(|s| s.partial).collect(),
        meta: FieldMeta {
            system: field.name(),
            params,
            config: *cfg,
            quantity: Quantity::Descriptor,
            created: None,
        },
    })
}

/// Running time averages `M(x0, t0, tau) / (2 tau)` at several horizons,
/// taken from one trajectory per direction.
#[derive(Clone, Debug, PartialEq)]
pub struct AverageSeries {
    pub x0: Vec<f64>,
    /// Horizons as requested.
    pub requested: Vec<f64>,
    /// Horizons actually used, rounded to the integrator grid.
    pub taus: Vec<f64>,
    pub averages: Vec<f64>,
    /// False for samples beyond a truncation; their average covers only the
    /// reached part of the window.
    pub valid: Vec<bool>,
}

impl AverageSeries {
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.taus.iter().copied().zip(self.averages.iter().copied()).collect()
    }
}

pub fn time_average<F: VectorField + ?Sized>(
    field: &F,
    x0: &[f64],
    cfg: &LDConfig,
    tau_samples: &[f64],
) -> Result<AverageSeries> {
    check_dim(field.dim(), x0.len())?;
    if tau_samples.is_empty() {
        return Err(Error::TooFewSamples("no tau samples".into()));
    }
    if tau_samples.iter().any(|t| !(*t > 0.0)) || tau_samples.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig("tau samples must be positive and ascending".into()));
    }
    let tau_max = *tau_samples.last().unwrap();
    let cfg = cfg.with_tau(tau_max);
    cfg.validate()?;
    let integrand: Box<dyn Fn(&[f64], f64, &[f64]) -> f64> = match cfg.kind {
        DescriptorKind::Mp { p } => Box::new(mp_integrand(p)),
        DescriptorKind::ArcLength => Box::new(speed),
        DescriptorKind::Lavd => {
            return Err(Error::Unsupported("time averages of LAVD".into()));
        }
    };

    let (steps, h) = cfg.integrator.grid(tau_max)?;
    let marks: Vec<usize> = tau_samples
        .iter()
        .map(|t| ((t / h).round() as usize).clamp(1, steps))
        .collect();

    // cumulative integrals at the marked nodes, per direction
    let run = |duration: f64| -> Result<(Vec<f64>, usize)> {
        let mut cumulative = vec![f64::NAN; marks.len()];
        let mut total = 0.0;
        let mut prev: Option<f64> = None;
        let mut node = 0usize;
        let mut next_mark = 0usize;
        let weight = 0.5 * h;
        let outcome = sweep(field, x0, cfg.t0, duration, &cfg.integrator, |t, x, v| {
            let g = integrand(x, t, v);
            if let Some(p) = prev {
                total += weight * (p + g);
            }
            prev = Some(g);
            while next_mark < marks.len() && marks[next_mark] == node {
                cumulative[next_mark] = total;
                next_mark += 1;
            }
            node += 1;
            ControlFlow::Continue(())
        })?;
        // samples past a truncation keep the last reached total
        for c in cumulative.iter_mut().skip(next_mark) {
            *c = total;
        }
        let reached = if outcome.truncated.is_some() { outcome.steps } else { steps };
        Ok((cumulative, reached))
    };
    let (back, back_reached) = run(-tau_max)?;
    let (fwd, fwd_reached) = run(tau_max)?;

    let taus: Vec<f64> = marks.iter().map(|&m| m as f64 * h).collect();
    let averages = (0..marks.len())
        .map(|k| (back[k] + fwd[k]) / (2.0 * taus[k]))
        .collect();
    let valid = marks
        .iter()
        .map(|&m| m <= back_reached && m <= fwd_reached)
        .collect();
    Ok(AverageSeries {
        x0: x0.to_vec(),
        requested: tau_samples.to_vec(),
        taus,
        averages,
        valid,
    })
}

/// Exponent chosen so that both saddle terms of `M_p` stay comparable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PSelection {
    pub p: f64,
    /// Unclamped `1 / (tau |lambda - mu|)`.
    pub raw: f64,
    pub clamped: bool,
}

/// `p = 1 / (tau (lambda - mu))`, clamped into `(0, 1]`. The magnitude of
/// the rate gap is used, so `lambda < mu` gives the mirrored choice.
pub fn select_p(lambda: f64, mu: f64, tau: f64) -> Result<PSelection> {
    if !(tau > 0.0) {
        return Err(Error::InvalidConfig(format!("tau must be > 0, got {tau}")));
    }
    if lambda == mu {
        return Err(Error::InvalidConfig("p selection undefined for lambda = mu".into()));
    }
    let raw = 1.0 / (tau * (lambda - mu).abs());
    if !raw.is_finite() {
        return Err(Error::InvalidConfig("rate gap too small to select p".into()));
    }
    Ok(PSelection {
        p: raw.min(1.0),
        raw,
        clamped: raw > 1.0,
    })
}

/// Central differences along spatial `axis`, one-sided at the boundaries.
pub fn partial_derivative(field: &ScalarField, axis: usize) -> Result<ScalarField> {
    let free = field.grid.free_axes();
    let position = free
        .iter()
        .position(|&a| a == axis)
        .ok_or_else(|| Error::InvalidGrid(format!("axis {axis} is not a free axis")))?;
    let n = field.grid.shape()[position];
    if n < 3 {
        return Err(Error::InvalidGrid(format!("need at least 3 nodes along axis {axis}, got {n}")));
    }
    let h = field.grid.spacing(axis).expect("free axis");
    let mut values = Vec::with_capacity(field.len());
    let mut partial = Vec::with_capacity(field.len());
    for k in 0..field.len() {
        let mut idx = field.grid.multi_index(k);
        let i = idx[position];
        let (lo, hi) = match i {
            0 => (0, 1),
            _ if i == n - 1 => (n - 2, n - 1),
            _ => (i - 1, i + 1),
        };
        idx[position] = lo;
        let a = field.grid.flat_index(&idx);
        idx[position] = hi;
        let b = field.grid.flat_index(&idx);
        values.push((field.values[b] - field.values[a]) / ((hi - lo) as f64 * h));
        partial.push(field.partial[a] || field.partial[b] || field.partial[k]);
    }
    let mut meta = field.meta.clone();
    meta.quantity = Quantity::Derivative { axis };
    Ok(ScalarField {
        grid: field.grid.clone(),
        values,
        partial,
        meta,
    })
}

/// Computes the descriptor field on `grid` and differentiates it along `axis`.
pub fn partial_derivative_field<F: VectorField + ?Sized>(
    field: &F,
    grid: &GridSpec,
    cfg: &LDConfig,
    axis: usize,
) -> Result<ScalarField> {
    partial_derivative(&compute_field(field, grid, cfg)?, axis)
}
