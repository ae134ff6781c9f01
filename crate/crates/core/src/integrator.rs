//! Fixed-step RK4 propagation with trapezoid accumulation of integrands on
//! the RK4 time grid.
//!
//! Every node of a grid computation uses the same time grid (the step is only
//! shortened so the horizon is hit exactly), which keeps results independent
//! of how nodes are scheduled across threads.

use std::ops::ControlFlow;

use crate::error::{Error, Result};
use crate::systems::{check_dim, VectorField};

pub const DEFAULT_SAFETY_BOX: f64 = 1e15;
pub const DEFAULT_MAX_STEPS: usize = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub step: f64,
    pub max_steps: usize,
    /// Half-width of the box `|x_i| <= safety_box` outside of which a
    /// trajectory is truncated.
    pub safety_box: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            step: 0.1,
            max_steps: DEFAULT_MAX_STEPS,
            safety_box: DEFAULT_SAFETY_BOX,
        }
    }
}

impl IntegratorConfig {
    pub fn with_step(step: f64) -> Self {
        IntegratorConfig {
            step,
            ..Default::default()
        }
    }

    pub fn safety_box(mut self, half_width: f64) -> Self {
        self.safety_box = half_width;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidConfig(format!("step must be > 0, got {}", self.step)));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidConfig("max_steps must be positive".into()));
        }
        if !(self.safety_box > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "safety box must be > 0, got {}",
                self.safety_box
            )));
        }
        Ok(())
    }

    /// Number of steps and the (possibly shortened) signed step that covers
    /// `duration` exactly.
    pub fn grid(&self, duration: f64) -> Result<(usize, f64)> {
        self.validate()?;
        if !duration.is_finite() {
            return Err(Error::StepHorizon(format!("non-finite duration {duration}")));
        }
        if duration == 0.0 {
            return Ok((0, 0.0));
        }
        let span = duration.abs();
        // guard against 2.0000000001 steps from representation error
        let steps = ((span / self.step) * (1.0 - 1e-12)).ceil().max(1.0);
        if steps > self.max_steps as f64 {
            return Err(Error::StepHorizon(format!(
                "{steps} steps of {} exceed max_steps = {}",
                self.step, self.max_steps
            )));
        }
        let steps = steps as usize;
        Ok((steps, duration / steps as f64))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub system: String,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectories hold at least x0")
    }
}

/// Why a sweep stopped before its horizon.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Truncation {
    ExitedBox,
    NonFinite,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepOutcome {
    /// Steps completed (nodes visited minus one).
    pub steps: usize,
    /// Time of the last visited node.
    pub reached: f64,
    pub truncated: Option<Truncation>,
    /// Signed step actually used.
    pub step: f64,
}

/// Integrates from `(x0, t0)` over the signed `duration`, calling `visit`
/// with `(t, x, v(x, t))` at every node including the initial one. The
/// visitor may stop the sweep early with `ControlFlow::Break`.
///
/// A step that leaves the safety box or produces a non-finite state is not
/// visited; the sweep stops there and reports the truncation.
pub fn sweep<F, V>(
    field: &F,
    x0: &[f64],
    t0: f64,
    duration: f64,
    cfg: &IntegratorConfig,
    mut visit: V,
) -> Result<SweepOutcome>
where
    F: VectorField + ?Sized,
    V: FnMut(f64, &[f64], &[f64]) -> ControlFlow<()>,
{
    let n = field.dim();
    check_dim(n, x0.len())?;
    let (steps, h) = cfg.grid(duration)?;

    let mut x = x0.to_vec();
    let mut v = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];

    field.velocity(&x, t0, &mut v);
    let mut outcome = SweepOutcome {
        steps: 0,
        reached: t0,
        truncated: None,
        step: h,
    };
    if visit(t0, &x, &v).is_break() {
        return Ok(outcome);
    }

    for i in 0..steps {
        let t = t0 + i as f64 * h;
        let t_next = if i + 1 == steps {
            t0 + duration
        } else {
            t0 + (i + 1) as f64 * h
        };
        let half = 0.5 * h;

        for j in 0..n {
            tmp[j] = x[j] + half * v[j];
        }
        field.velocity(&tmp, t + half, &mut k2);
        for j in 0..n {
            tmp[j] = x[j] + half * k2[j];
        }
        field.velocity(&tmp, t + half, &mut k3);
        for j in 0..n {
            tmp[j] = x[j] + h * k3[j];
        }
        field.velocity(&tmp, t_next, &mut k4);
        for j in 0..n {
            tmp[j] = x[j] + h / 6.0 * (v[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }

        if tmp.iter().any(|c| !c.is_finite()) {
            outcome.truncated = Some(Truncation::NonFinite);
            return Ok(outcome);
        }
        if tmp.iter().any(|c| c.abs() > cfg.safety_box) {
            outcome.truncated = Some(Truncation::ExitedBox);
            return Ok(outcome);
        }

        std::mem::swap(&mut x, &mut tmp);
        field.velocity(&x, t_next, &mut v);
        outcome.steps = i + 1;
        outcome.reached = t_next;
        if visit(t_next, &x, &v).is_break() {
            break;
        }
    }
    Ok(outcome)
}

/// RK4 trajectory from `t0` to `t1` (backward when `t1 < t0`).
pub fn integrate<F: VectorField + ?Sized>(
    field: &F,
    x0: &[f64],
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let mut times = Vec::new();
    let mut states = Vec::new();
    let outcome = sweep(field, x0, t0, t1 - t0, cfg, |t, x, _| {
        times.push(t);
        states.push(x.to_vec());
        ControlFlow::Continue(())
    })?;
    if outcome.truncated == Some(Truncation::NonFinite) {
        return Err(Error::BlowUp {
            last_time: outcome.reached,
        });
    }
    Ok(Trajectory {
        times,
        states,
        system: field.name(),
    })
}

/// Two-sided trapezoid integral of a trajectory functional.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub backward: f64,
    pub forward: f64,
    /// Earliest and latest times actually reached.
    pub reached: (f64, f64),
    /// Set when either direction was truncated by the safety box.
    pub partial: bool,
}

/// One-sided trapezoid integral of `integrand(x, t, v)` along the trajectory
/// over the signed `duration`, with the sweep outcome.
pub fn accumulate<F, G>(
    field: &F,
    x0: &[f64],
    t0: f64,
    duration: f64,
    cfg: &IntegratorConfig,
    integrand: G,
) -> Result<(f64, SweepOutcome)>
where
    F: VectorField + ?Sized,
    G: Fn(&[f64], f64, &[f64]) -> f64,
{
    let mut total = 0.0;
    let mut previous: Option<f64> = None;
    let (_, h) = cfg.grid(duration)?;
    let weight = 0.5 * h.abs();
    let outcome = sweep(field, x0, t0, duration, cfg, |t, x, v| {
        let g = integrand(x, t, v);
        if let Some(prev) = previous {
            total += weight * (prev + g);
        }
        previous = Some(g);
        ControlFlow::Continue(())
    })?;
    Ok((total, outcome))
}

/// Integral of `integrand` over `[t0 - tau, t0 + tau]`, as the sum of the
/// backward and forward trapezoid integrals on the RK4 grids.
pub fn integrate_with_quadrature<F, G>(
    field: &F,
    x0: &[f64],
    t0: f64,
    tau: f64,
    cfg: &IntegratorConfig,
    integrand: G,
) -> Result<Quadrature>
where
    F: VectorField + ?Sized,
    G: Fn(&[f64], f64, &[f64]) -> f64,
{
    if !(tau > 0.0) {
        return Err(Error::InvalidConfig(format!("tau must be > 0, got {tau}")));
    }
    let (backward, back) = accumulate(field, x0, t0, -tau, cfg, &integrand)?;
    let (forward, fwd) = accumulate(field, x0, t0, tau, cfg, &integrand)?;
    for outcome in [back, fwd] {
        if outcome.truncated == Some(Truncation::NonFinite) {
            return Err(Error::BlowUp {
                last_time: outcome.reached,
            });
        }
    }
    Ok(Quadrature {
        value: backward + forward,
        backward,
        forward,
        reached: (back.reached, fwd.reached),
        partial: back.truncated.is_some() || fwd.truncated.is_some(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{exact_solution, SystemId, VectorFieldSpec};

    /// `x' = x` on the line.
    struct Growth;

    impl VectorField for Growth {
        fn dim(&self) -> usize {
            1
        }
        fn velocity(&self, x: &[f64], _t: f64, out: &mut [f64]) {
            out[0] = x[0];
        }
    }

    #[test]
    fn single_rk4_step_by_hand() {
        // k1..k4 = 1, 1.05, 1.0525, 1.10525
        let traj = integrate(&Growth, &[1.0], 0.0, 0.1, &IntegratorConfig::with_step(0.1)).unwrap();
        let expect = 1.0 + 0.1 / 6.0 * (1.0 + 2.0 * 1.05 + 2.0 * 1.0525 + 1.10525);
        assert_eq!(traj.len(), 2);
        assert!((traj.last()[0] - expect).abs() < 1e-15);
        assert!((traj.last()[0] - 1.105_170_83).abs() < 1e-8);
    }

    #[test]
    fn zero_span_is_the_initial_point() {
        let spec = VectorFieldSpec::builtin(SystemId::Abc);
        let traj = integrate(&spec, &[0.1, 0.2, 0.3], 2.0, 2.0, &IntegratorConfig::default()).unwrap();
        assert_eq!(traj.times, vec![2.0]);
        assert_eq!(traj.states, vec![vec![0.1, 0.2, 0.3]]);
    }

    #[test]
    fn linear_saddle_endpoint() {
        let spec = VectorFieldSpec::linear_saddle(1.0).unwrap();
        let traj = integrate(&spec, &[1.0, 1.0], 0.0, 1.0, &IntegratorConfig::with_step(0.01)).unwrap();
        let end = traj.last();
        assert!((end[0] - 1f64.exp()).abs() < 1e-8);
        assert!((end[1] - (-1f64).exp()).abs() < 1e-8);
        assert_eq!(*traj.times.last().unwrap(), 1.0);
    }

    #[test]
    fn step_is_shortened_to_hit_the_horizon() {
        let cfg = IntegratorConfig::with_step(0.3);
        let (n, h) = cfg.grid(1.0).unwrap();
        assert_eq!(n, 4);
        assert!((h - 0.25).abs() < 1e-15);
        let (n, h) = cfg.grid(-0.9).unwrap();
        assert_eq!(n, 3);
        assert!((h + 0.3).abs() < 1e-15);
        let traj = integrate(&Growth, &[1.0], 0.5, -0.4, &cfg).unwrap();
        assert_eq!(*traj.times.last().unwrap(), -0.4);
        assert!(traj.times.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn step_guard() {
        let cfg = IntegratorConfig {
            step: 0.1,
            max_steps: 5,
            ..Default::default()
        };
        assert!(matches!(cfg.grid(1.0), Err(Error::StepHorizon(_))));
        assert!(IntegratorConfig::with_step(0.0).validate().is_err());
        assert!(IntegratorConfig::with_step(-1.0).validate().is_err());
    }

    #[test]
    fn blow_up_is_an_error_for_trajectories() {
        struct Explosive;
        impl VectorField for Explosive {
            fn dim(&self) -> usize {
                1
            }
            fn velocity(&self, x: &[f64], _t: f64, out: &mut [f64]) {
                out[0] = x[0] * x[0] * x[0];
            }
        }
        let cfg = IntegratorConfig::with_step(0.5).safety_box(f64::INFINITY);
        match integrate(&Explosive, &[10.0], 0.0, 10.0, &cfg) {
            Err(Error::BlowUp { last_time }) => assert!(last_time < 10.0),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn quadrature_of_one_is_the_time_span() {
        let spec = VectorFieldSpec::builtin(SystemId::RotatedSaddle);
        let q = integrate_with_quadrature(&spec, &[0.2, 0.1], 0.0, 3.0, &IntegratorConfig::with_step(0.01), |_, _, _| 1.0).unwrap();
        assert!((q.value - 6.0).abs() < 1e-12);
        assert!(!q.partial);
    }

    #[test]
    fn quadrature_matches_closed_forms() {
        let saddle = VectorFieldSpec::linear_saddle(1.0).unwrap();
        let q = integrate_with_quadrature(&saddle, &[1.0, 1.0], 0.0, 1.0, &IntegratorConfig::with_step(1e-3), |_, _, v| {
            v[0].abs() + v[1].abs()
        })
        .unwrap();
        assert!((q.value - 4.0 * 1f64.sinh()).abs() < 1e-5);

        let ho = VectorFieldSpec::builtin(SystemId::HarmonicOscillator);
        let q = integrate_with_quadrature(&ho, &[2.0, 0.0], 0.0, 10.0, &IntegratorConfig::with_step(1e-3), |_, _, v| {
            v[0].hypot(v[1])
        })
        .unwrap();
        assert!((q.value - 40.0).abs() < 1e-6, "{}", q.value);
    }

    #[test]
    fn safety_box_truncates_with_a_flag() {
        let spec = VectorFieldSpec::linear_saddle(1.0).unwrap();
        let cfg = IntegratorConfig::with_step(0.01).safety_box(10.0);
        let q = integrate_with_quadrature(&spec, &[1.0, 1.0], 0.0, 5.0, &cfg, |_, _, v| v[0].abs()).unwrap();
        assert!(q.partial);
        // x = e^t leaves |x| <= 10 near t = ln 10
        assert!(q.reached.1 < 10f64.ln() && q.reached.1 > 10f64.ln() - 0.02);
        assert!(q.reached.0 < q.reached.1 && q.reached.0 > -5.0 - 1e-12);
        assert!(q.reached.0 <= -2.3);
    }

    #[test]
    fn fourth_order_convergence() {
        let spec = VectorFieldSpec::linear_saddle(1.0).unwrap();
        let x0 = [1.0, 1.0];
        let exact = exact_solution(&spec, &x0, 0.0, 2.0).unwrap();
        let err = |h: f64| {
            let end = integrate(&spec, &x0, 0.0, 2.0, &IntegratorConfig::with_step(h)).unwrap();
            (end.last()[0] - exact[0]).hypot(end.last()[1] - exact[1])
        };
        let ratio = err(0.1) / err(0.05);
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn forward_then_backward_returns_home() {
        let cfg = IntegratorConfig::with_step(1e-3);
        for id in [SystemId::HarmonicOscillator, SystemId::LinearSaddle, SystemId::RotatedSaddle, SystemId::NonlinearSaddle] {
            let spec = VectorFieldSpec::builtin(id);
            let x0 = [0.3, -0.2];
            let there = integrate(&spec, &x0, 0.0, 5.0, &cfg).unwrap();
            let back = integrate(&spec, there.last(), 5.0, 0.0, &cfg).unwrap();
            for i in 0..2 {
                assert!((back.last()[i] - x0[i]).abs() < 1e-9, "{id}: {:?}", back.last());
            }
        }
    }
}
