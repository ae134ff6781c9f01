//! Catalog of builtin vector fields with their exact flows and closed-form
//! descriptor values.
//!
//! Every builtin is addressable by a string id (`linear-saddle`, `abc`, ...)
//! and carries its parameters as a name/value map so it can be written to and
//! read back from field file headers. User code can plug in its own fields by
//! implementing [`VectorField`].

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use crate::descriptor::{DescriptorKind, LDConfig};
use crate::error::{Error, Result};

/// A (possibly time-dependent) vector field `dx/dt = v(x, t)`.
pub trait VectorField: Sync {
    fn dim(&self) -> usize;

    /// Writes `v(x, t)` into `out`. Both slices have length `dim()`.
    fn velocity(&self, x: &[f64], t: f64, out: &mut [f64]);

    fn is_autonomous(&self) -> bool {
        false
    }

    /// Scalar vorticity `dv/dx - du/dy` of a planar field, when known.
    fn vorticity(&self, _x: &[f64], _t: f64) -> Option<f64> {
        None
    }

    /// Spatial mean of the vorticity over a flow-invariant domain. Only
    /// fields with spatially constant vorticity provide it.
    fn mean_vorticity(&self, _t: f64) -> Option<f64> {
        None
    }

    /// Common period of all coordinates, for fields on a periodic box.
    fn period(&self) -> Option<f64> {
        None
    }

    fn name(&self) -> String {
        "custom".to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SystemId {
    LinearSaddle,
    RotatedSaddle,
    NonlinearSaddle,
    NonautoLinearSaddle,
    NonautoNonlinearSaddle,
    NonhamSaddle,
    GlobalAttractor,
    HarmonicOscillator,
    RotatingSaddle,
    Abc,
    Rest,
}

impl SystemId {
    pub const ALL: [SystemId; 11] = [
        SystemId::LinearSaddle,
        SystemId::RotatedSaddle,
        SystemId::NonlinearSaddle,
        SystemId::NonautoLinearSaddle,
        SystemId::NonautoNonlinearSaddle,
        SystemId::NonhamSaddle,
        SystemId::GlobalAttractor,
        SystemId::HarmonicOscillator,
        SystemId::RotatingSaddle,
        SystemId::Abc,
        SystemId::Rest,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SystemId::LinearSaddle => "linear-saddle",
            SystemId::RotatedSaddle => "rotated-saddle",
            SystemId::NonlinearSaddle => "nonlinear-saddle",
            SystemId::NonautoLinearSaddle => "nonauto-linear-saddle",
            SystemId::NonautoNonlinearSaddle => "nonauto-nonlinear-saddle",
            SystemId::NonhamSaddle => "nonham-saddle",
            SystemId::GlobalAttractor => "global-attractor",
            SystemId::HarmonicOscillator => "harmonic-oscillator",
            SystemId::RotatingSaddle => "rotating-saddle",
            SystemId::Abc => "abc",
            SystemId::Rest => "rest",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            SystemId::Abc => 3,
            _ => 2,
        }
    }

    pub fn is_autonomous(self) -> bool {
        !matches!(
            self,
            SystemId::NonautoLinearSaddle
                | SystemId::NonautoNonlinearSaddle
                | SystemId::RotatingSaddle
        )
    }

    /// Parameter names with their default values.
    pub fn parameters(self) -> &'static [(&'static str, f64)] {
        match self {
            SystemId::LinearSaddle => &[("lambda", 1.0)],
            SystemId::NonhamSaddle => &[("lambda", 2.0), ("mu", 1.0)],
            SystemId::NonautoLinearSaddle | SystemId::NonautoNonlinearSaddle => {
                &[("forcing", 1.0)]
            }
            SystemId::RotatingSaddle => &[("omega", 2.0)],
            SystemId::Abc => &[("A", 1.0), ("B", 1.0), ("C", 1.0)],
            _ => &[],
        }
    }
}

impl fmt::Display for SystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SystemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SystemId::ALL
            .iter()
            .copied()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::UnknownSystem(s.to_string()))
    }
}

/// Positive time modulation `f(t)` of the nonautonomous saddles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Forcing {
    /// `f(t) = 2 + sin t`
    Oscillatory,
    /// `f(t) = 1 + t^2 / (1 + t^2)`
    Saturating,
}

impl Forcing {
    fn from_param(value: f64) -> Result<Self> {
        if value == 1.0 {
            Ok(Forcing::Oscillatory)
        } else if value == 2.0 {
            Ok(Forcing::Saturating)
        } else {
            Err(Error::InvalidParameter {
                name: "forcing".into(),
                value,
                reason: "expected 1 (2 + sin t) or 2 (1 + t^2/(1+t^2))".into(),
            })
        }
    }

    pub fn rate(self, t: f64) -> f64 {
        match self {
            Forcing::Oscillatory => 2.0 + t.sin(),
            Forcing::Saturating => 1.0 + t * t / (1.0 + t * t),
        }
    }

    /// Antiderivative `F(t) = int_0^t f(s) ds`.
    pub fn integral(self, t: f64) -> f64 {
        match self {
            Forcing::Oscillatory => 2.0 * t + 1.0 - t.cos(),
            Forcing::Saturating => 2.0 * t - t.atan(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Model {
    LinearSaddle { lambda: f64 },
    RotatedSaddle,
    NonlinearSaddle,
    NonautoLinearSaddle { forcing: Forcing },
    NonautoNonlinearSaddle { forcing: Forcing },
    NonhamSaddle { lambda: f64, mu: f64 },
    GlobalAttractor,
    HarmonicOscillator,
    RotatingSaddle { omega: f64 },
    Abc { a: f64, b: f64, c: f64 },
    Rest,
}

/// A builtin vector field together with its parameter values.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorFieldSpec {
    id: SystemId,
    params: BTreeMap<String, f64>,
    model: Model,
}

impl VectorFieldSpec {
    /// Builds a builtin from an explicit parameter map. Every parameter the
    /// builtin declares must be present and finite; unknown names are rejected.
    pub fn new(id: SystemId, params: BTreeMap<String, f64>) -> Result<Self> {
        let declared = id.parameters();
        for (name, value) in &params {
            if !declared.iter().any(|(n, _)| n == name) {
                return Err(Error::InvalidParameter {
                    name: name.clone(),
                    value: *value,
                    reason: format!("not a parameter of `{id}`"),
                });
            }
            if !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name: name.clone(),
                    value: *value,
                    reason: "must be finite".into(),
                });
            }
        }
        let get = |name: &str| -> Result<f64> {
            params.get(name).copied().ok_or_else(|| Error::MissingParameter {
                system: id.to_string(),
                name: name.to_string(),
            })
        };
        let positive = |name: &str| -> Result<f64> {
            let value = get(name)?;
            if value > 0.0 {
                Ok(value)
            } else {
                Err(Error::InvalidParameter {
                    name: name.into(),
                    value,
                    reason: "must be > 0".into(),
                })
            }
        };
        let model = match id {
            SystemId::LinearSaddle => Model::LinearSaddle {
                lambda: positive("lambda")?,
            },
            SystemId::RotatedSaddle => Model::RotatedSaddle,
            SystemId::NonlinearSaddle => Model::NonlinearSaddle,
            SystemId::NonautoLinearSaddle => Model::NonautoLinearSaddle {
                forcing: Forcing::from_param(get("forcing")?)?,
            },
            SystemId::NonautoNonlinearSaddle => Model::NonautoNonlinearSaddle {
                forcing: Forcing::from_param(get("forcing")?)?,
            },
            SystemId::NonhamSaddle => {
                let lambda = positive("lambda")?;
                let mu = positive("mu")?;
                if lambda == mu {
                    return Err(Error::InvalidParameter {
                        name: "mu".into(),
                        value: mu,
                        reason: "must differ from lambda".into(),
                    });
                }
                Model::NonhamSaddle { lambda, mu }
            }
            SystemId::GlobalAttractor => Model::GlobalAttractor,
            SystemId::HarmonicOscillator => Model::HarmonicOscillator,
            SystemId::RotatingSaddle => Model::RotatingSaddle {
                omega: get("omega")?,
            },
            SystemId::Abc => Model::Abc {
                a: get("A")?,
                b: get("B")?,
                c: get("C")?,
            },
            SystemId::Rest => Model::Rest,
        };
        Ok(VectorFieldSpec { id, params, model })
    }

    /// The builtin with its default parameters.
    pub fn builtin(id: SystemId) -> Self {
        let params = id
            .parameters()
            .iter()
            .map(|(n, v)| (n.to_string(), *v))
            .collect();
        VectorFieldSpec::new(id, params).expect("defaults are valid")
    }

    /// Replaces one parameter, revalidating the whole spec.
    pub fn with(&self, name: &str, value: f64) -> Result<Self> {
        let mut params = self.params.clone();
        params.insert(name.to_string(), value);
        VectorFieldSpec::new(self.id, params)
    }

    pub fn linear_saddle(lambda: f64) -> Result<Self> {
        Self::builtin(SystemId::LinearSaddle).with("lambda", lambda)
    }

    pub fn nonham_saddle(lambda: f64, mu: f64) -> Result<Self> {
        Self::builtin(SystemId::NonhamSaddle)
            .with("lambda", lambda)?
            .with("mu", mu)
    }

    pub fn rotating_saddle(omega: f64) -> Result<Self> {
        Self::builtin(SystemId::RotatingSaddle).with("omega", omega)
    }

    pub fn abc(a: f64, b: f64, c: f64) -> Result<Self> {
        Self::builtin(SystemId::Abc)
            .with("A", a)?
            .with("B", b)?
            .with("C", c)
    }

    pub fn id(&self) -> SystemId {
        self.id
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn autonomous(&self) -> bool {
        self.id.is_autonomous()
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }

    /// `v(x, t)` as a fresh vector, after checking the dimension.
    pub fn evaluate(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        let mut out = vec![0.0; self.dim()];
        self.velocity(x, t, &mut out);
        Ok(out)
    }

    /// Forcing law of the nonautonomous saddles.
    pub fn forcing(&self) -> Option<Forcing> {
        match self.model {
            Model::NonautoLinearSaddle { forcing } | Model::NonautoNonlinearSaddle { forcing } => {
                Some(forcing)
            }
            _ => None,
        }
    }
}

impl fmt::Display for VectorFieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id)?;
        for (k, v) in &self.params {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

impl VectorField for VectorFieldSpec {
    fn dim(&self) -> usize {
        self.id.dim()
    }

    fn velocity(&self, x: &[f64], t: f64, out: &mut [f64]) {
        match self.model {
            Model::LinearSaddle { lambda } => {
                out[0] = lambda * x[0];
                out[1] = -lambda * x[1];
            }
            Model::RotatedSaddle => {
                out[0] = x[1];
                out[1] = x[0];
            }
            Model::NonlinearSaddle => {
                // H = xy + x^2 y^2
                let rate = 1.0 + 2.0 * x[0] * x[1];
                out[0] = rate * x[0];
                out[1] = -rate * x[1];
            }
            Model::NonautoLinearSaddle { forcing } => {
                let f = forcing.rate(t);
                out[0] = f * x[0];
                out[1] = -f * x[1];
            }
            Model::NonautoNonlinearSaddle { forcing } => {
                // H = f(t) xy + x^2 y
                let f = forcing.rate(t);
                out[0] = f * x[0] + x[0] * x[0];
                out[1] = -f * x[1] - 2.0 * x[0] * x[1];
            }
            Model::NonhamSaddle { lambda, mu } => {
                out[0] = lambda * x[0];
                out[1] = -mu * x[1];
            }
            Model::GlobalAttractor => {
                out[0] = -x[0];
                out[1] = -x[1];
            }
            Model::HarmonicOscillator => {
                out[0] = x[1];
                out[1] = -x[0];
            }
            Model::RotatingSaddle { omega } => {
                let (s, c) = (2.0 * omega * t).sin_cos();
                out[0] = s * x[0] + (omega + c) * x[1];
                out[1] = (c - omega) * x[0] - s * x[1];
            }
            Model::Abc { a, b, c } => {
                let (sx, cx) = x[0].sin_cos();
                let (sy, cy) = x[1].sin_cos();
                let (sz, cz) = x[2].sin_cos();
                out[0] = a * sz + c * cy;
                out[1] = b * sx + a * cz;
                out[2] = c * sy + b * cx;
            }
            Model::Rest => {
                out[0] = 0.0;
                out[1] = 0.0;
            }
        }
    }

    fn is_autonomous(&self) -> bool {
        self.autonomous()
    }

    fn vorticity(&self, x: &[f64], t: f64) -> Option<f64> {
        match self.model {
            Model::NonlinearSaddle => Some(-2.0 * (x[0] * x[0] + x[1] * x[1])),
            Model::NonautoNonlinearSaddle { .. } => Some(-2.0 * x[1]),
            Model::Abc { .. } => None,
            _ => self.mean_vorticity(t),
        }
    }

    fn mean_vorticity(&self, _t: f64) -> Option<f64> {
        match self.model {
            Model::HarmonicOscillator => Some(-2.0),
            Model::RotatingSaddle { omega } => Some(-2.0 * omega),
            Model::LinearSaddle { .. }
            | Model::RotatedSaddle
            | Model::NonautoLinearSaddle { .. }
            | Model::NonhamSaddle { .. }
            | Model::GlobalAttractor
            | Model::Rest => Some(0.0),
            Model::NonlinearSaddle | Model::NonautoNonlinearSaddle { .. } | Model::Abc { .. } => {
                None
            }
        }
    }

    fn period(&self) -> Option<f64> {
        match self.model {
            Model::Abc { .. } => Some(TAU),
            _ => None,
        }
    }

    fn name(&self) -> String {
        self.id.to_string()
    }
}

/// `v(x, t)` for a builtin, with dimension checking.
pub fn evaluate_field(spec: &VectorFieldSpec, x: &[f64], t: f64) -> Result<Vec<f64>> {
    spec.evaluate(x, t)
}

/// Exact flow map from `(x0, t0)` to time `t`.
pub fn exact_solution(spec: &VectorFieldSpec, x0: &[f64], t0: f64, t: f64) -> Result<Vec<f64>> {
    check_dim(spec.dim(), x0.len())?;
    let dt = t - t0;
    let (x, y) = (x0[0], x0[1]);
    let out = match spec.model {
        Model::LinearSaddle { lambda } => vec![x * (lambda * dt).exp(), y * (-lambda * dt).exp()],
        Model::RotatedSaddle => rotated_saddle_flow(x, y, dt).to_vec(),
        Model::NonlinearSaddle => {
            // xy is conserved, so the rate 1 + 2xy is constant on trajectories.
            let rate = 1.0 + 2.0 * x * y;
            vec![x * (rate * dt).exp(), y * (-rate * dt).exp()]
        }
        Model::NonautoLinearSaddle { forcing } => {
            let growth = forcing.integral(t) - forcing.integral(t0);
            vec![x * growth.exp(), y * (-growth).exp()]
        }
        Model::NonhamSaddle { lambda, mu } => vec![x * (lambda * dt).exp(), y * (-mu * dt).exp()],
        Model::GlobalAttractor => vec![x * (-dt).exp(), y * (-dt).exp()],
        Model::HarmonicOscillator => {
            let (s, c) = dt.sin_cos();
            vec![x * c + y * s, -x * s + y * c]
        }
        Model::RotatingSaddle { omega } => {
            // In the co-rotating coordinates u = R(wt) x the field is the
            // stationary saddle u' = (u2, u1).
            let u0 = rotate([x, y], omega * t0);
            let u = rotated_saddle_flow(u0[0], u0[1], dt);
            rotate(u, -omega * t).to_vec()
        }
        Model::Rest => vec![x, y],
        Model::NonautoNonlinearSaddle { .. } | Model::Abc { .. } => {
            return Err(Error::NoExactSolution(spec.id.to_string()))
        }
    };
    Ok(out)
}

fn rotated_saddle_flow(x: f64, y: f64, dt: f64) -> [f64; 2] {
    let (s, c) = (dt.sinh(), dt.cosh());
    [x * c + y * s, x * s + y * c]
}

/// Counter-clockwise rotation by `angle`.
fn rotate(p: [f64; 2], angle: f64) -> [f64; 2] {
    let (s, c) = angle.sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1]]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleKind {
    DescriptorClosedForm,
    ExactSolution,
    AverageLimit,
}

/// A registered closed form for one (system, descriptor) combination.
#[derive(Clone, Debug)]
pub struct AnalyticOracle {
    pub kind: OracleKind,
    spec: VectorFieldSpec,
}

impl AnalyticOracle {
    /// Looks up the oracle of the requested kind, if one is registered.
    pub fn lookup(spec: &VectorFieldSpec, kind: OracleKind, cfg: &LDConfig) -> Option<Self> {
        let known = match kind {
            OracleKind::DescriptorClosedForm => descriptor_closed_form(spec, &zero(spec), cfg).is_some(),
            OracleKind::AverageLimit => average_limit_form(spec, &zero(spec), cfg).is_some(),
            OracleKind::ExactSolution => exact_solution(spec, &zero(spec), 0.0, 0.0).is_ok(),
        };
        known.then(|| AnalyticOracle {
            kind,
            spec: spec.clone(),
        })
    }

    /// Scalar value of the oracle. For `ExactSolution` this is the Euclidean
    /// norm of the flowed point at `t0 + tau`.
    pub fn eval(&self, x0: &[f64], cfg: &LDConfig) -> Result<f64> {
        match self.kind {
            OracleKind::DescriptorClosedForm => oracle_descriptor(&self.spec, x0, cfg),
            OracleKind::AverageLimit => average_limit(&self.spec, x0, cfg),
            OracleKind::ExactSolution => {
                let p = exact_solution(&self.spec, x0, cfg.t0, cfg.t0 + cfg.tau)?;
                Ok(p.iter().map(|v| v * v).sum::<f64>().sqrt())
            }
        }
    }
}

fn zero(spec: &VectorFieldSpec) -> Vec<f64> {
    vec![0.0; spec.dim()]
}

fn descriptor_name(cfg: &LDConfig) -> String {
    cfg.kind.to_string()
}

/// Closed-form descriptor value over `[t0 - tau, t0 + tau]`.
pub fn oracle_descriptor(spec: &VectorFieldSpec, x0: &[f64], cfg: &LDConfig) -> Result<f64> {
    check_dim(spec.dim(), x0.len())?;
    descriptor_closed_form(spec, x0, cfg).ok_or_else(|| Error::NoOracle {
        system: spec.id.to_string(),
        descriptor: descriptor_name(cfg),
    })
}

fn descriptor_closed_form(spec: &VectorFieldSpec, x0: &[f64], cfg: &LDConfig) -> Option<f64> {
    let tau = cfg.tau;
    let (x, y) = (x0[0], x0[1]);
    match (spec.model, cfg.kind) {
        (Model::Rest, _) => Some(0.0),
        (Model::LinearSaddle { lambda }, DescriptorKind::Mp { p }) => {
            Some(2.0 * (x.abs().powf(p) + y.abs().powf(p)) * lambda.powf(p - 1.0) * (lambda * p * tau).sinh() / p)
        }
        (Model::NonlinearSaddle, DescriptorKind::Mp { p }) => {
            let rate = 1.0 + 2.0 * x * y;
            if rate == 0.0 {
                return Some(0.0);
            }
            Some(2.0 * (x.abs().powf(p) + y.abs().powf(p)) * rate.abs().powf(p) / (p * rate) * (p * rate * tau).sinh())
        }
        (Model::NonhamSaddle { lambda, mu }, DescriptorKind::Mp { p }) => Some(
            lambda.powf(p - 1.0) * x.abs().powf(p) * 2.0 * (lambda * p * tau).sinh() / p
                + mu.powf(p - 1.0) * y.abs().powf(p) * 2.0 * (mu * p * tau).sinh() / p,
        ),
        (Model::GlobalAttractor, DescriptorKind::Mp { p }) => {
            Some((x.abs().powf(p) + y.abs().powf(p)) * 2.0 * (p * tau).sinh() / p)
        }
        (Model::GlobalAttractor, DescriptorKind::ArcLength) => Some(2.0 * x.hypot(y) * tau.sinh()),
        (Model::HarmonicOscillator, DescriptorKind::ArcLength) => Some(2.0 * tau * x.hypot(y)),
        (Model::HarmonicOscillator, DescriptorKind::Mp { p }) if p == 1.0 => {
            // Along the orbit the velocity is rho (sin theta, -cos theta) with
            // theta = theta0 - t, so M_1 integrates |sin| + |cos| over
            // [theta0 - tau, theta0 + tau].
            let rho = x.hypot(y);
            let theta0 = y.atan2(x);
            let span = |shift: f64| abs_sin_integral(theta0 + shift + tau) - abs_sin_integral(theta0 + shift - tau);
            Some(rho * (span(0.0) + span(FRAC_PI_2)))
        }
        (Model::HarmonicOscillator, DescriptorKind::Lavd) => Some(0.0),
        (Model::NonautoLinearSaddle { forcing }, DescriptorKind::Mp { p }) => {
            let (a, b) = nonauto_weights(forcing, p, cfg.t0, tau);
            Some(x.abs().powf(p) * a + y.abs().powf(p) * b)
        }
        _ => None,
    }
}

/// `int_0^s |sin u| du`, valid for any real `s`.
fn abs_sin_integral(s: f64) -> f64 {
    let periods = (s / PI).floor();
    let rem = s - periods * PI;
    2.0 * periods + 1.0 - rem.cos()
}

const GAUSS_LEGENDRE_8: [(f64, f64); 4] = [
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
];

/// Composite 8-point Gauss-Legendre quadrature.
pub(crate) fn gauss_legendre<F: Fn(f64) -> f64>(a: f64, b: f64, panels: usize, f: F) -> f64 {
    let width = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let mid = a + (k as f64 + 0.5) * width;
        let half = 0.5 * width;
        let mut panel = 0.0;
        for &(node, weight) in &GAUSS_LEGENDRE_8 {
            panel += weight * (f(mid - half * node) + f(mid + half * node));
        }
        total += panel * half;
    }
    total
}

/// Weights `A`, `B` with `M_p = |x0|^p A + |y0|^p B` for the nonautonomous
/// linear saddle, evaluated by quadrature of the exact velocity magnitudes.
fn nonauto_weights(forcing: Forcing, p: f64, t0: f64, tau: f64) -> (f64, f64) {
    let base = forcing.integral(t0);
    let panels = ((2.0 * tau * 16.0).ceil() as usize).max(64);
    let grow = |t: f64| ((forcing.integral(t) - base).exp() * forcing.rate(t)).powf(p);
    let decay = |t: f64| ((base - forcing.integral(t)).exp() * forcing.rate(t)).powf(p);
    (
        gauss_legendre(t0 - tau, t0 + tau, panels, grow),
        gauss_legendre(t0 - tau, t0 + tau, panels, decay),
    )
}

/// Limit of the time average `M / (2 tau)` as `tau -> infinity`.
pub fn average_limit(spec: &VectorFieldSpec, x0: &[f64], cfg: &LDConfig) -> Result<f64> {
    check_dim(spec.dim(), x0.len())?;
    average_limit_form(spec, x0, cfg).ok_or_else(|| Error::NoOracle {
        system: spec.id.to_string(),
        descriptor: format!("{} average limit", descriptor_name(cfg)),
    })
}

fn average_limit_form(spec: &VectorFieldSpec, x0: &[f64], cfg: &LDConfig) -> Option<f64> {
    let rho = x0[0].hypot(x0[1]);
    match (spec.model, cfg.kind) {
        (Model::Rest, DescriptorKind::Mp { .. } | DescriptorKind::ArcLength) => Some(0.0),
        (Model::HarmonicOscillator, DescriptorKind::ArcLength) => Some(rho),
        (Model::HarmonicOscillator, DescriptorKind::Mp { p }) if p == 1.0 => Some(4.0 * rho / PI),
        _ => None,
    }
}
