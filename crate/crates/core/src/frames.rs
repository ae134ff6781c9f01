//! Rotating coordinate frames for planar fields.
//!
//! A frame with angular speed `omega` and `sense` maps `x` to
//! `x_ = R(sense * omega * t)^T x`, where `R(a)` is the counter-clockwise
//! rotation by `a`. Fields are pushed forward as
//! `v_(x_, t) = R^T v(R x_, t) - sense * omega * J x_` with `J = [[0, -1], [1, 0]]`.

use crate::error::{Error, Result};
use crate::systems::{check_dim, SystemId, VectorField, VectorFieldSpec};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotatingFrame {
    pub omega: f64,
    /// `+1` or `-1`.
    pub sense: f64,
}

impl RotatingFrame {
    pub fn new(omega: f64, sense: i8) -> Result<Self> {
        if !omega.is_finite() {
            return Err(Error::InvalidParameter {
                name: "omega".into(),
                value: omega,
                reason: "must be finite".into(),
            });
        }
        let sense = match sense {
            1 => 1.0,
            -1 => -1.0,
            other => {
                return Err(Error::InvalidParameter {
                    name: "sense".into(),
                    value: other as f64,
                    reason: "must be +1 or -1".into(),
                })
            }
        };
        Ok(RotatingFrame { omega, sense })
    }

    /// Rotation angle of the frame at time `t`.
    pub fn angle(&self, t: f64) -> f64 {
        self.sense * self.omega * t
    }

    pub fn is_identity(&self) -> bool {
        self.omega == 0.0
    }
}

/// Counter-clockwise rotation of `x` by `angle`.
pub fn rotate(x: [f64; 2], angle: f64) -> [f64; 2] {
    let (s, c) = angle.sin_cos();
    [c * x[0] - s * x[1], s * x[0] + c * x[1]]
}

/// Frame coordinates `R^T x` of a point, or `R x` when `inverse`.
pub fn transform_point(frame: &RotatingFrame, x: [f64; 2], t: f64, inverse: bool) -> [f64; 2] {
    let a = frame.angle(t);
    rotate(x, if inverse { a } else { -a })
}

/// A planar field seen from a rotating frame, evaluated by composition.
#[derive(Clone, Debug)]
pub struct RotatedField<F> {
    inner: F,
    frame: RotatingFrame,
}

impl<F: VectorField> RotatedField<F> {
    pub fn new(inner: F, frame: RotatingFrame) -> Result<Self> {
        check_dim(2, inner.dim()).map_err(|_| Error::Unsupported(format!("rotating frames need a planar field, got dimension {}", inner.dim())))?;
        Ok(RotatedField { inner, frame })
    }

    pub fn inner(&self) -> &F {
        &self.inner
    }

    pub fn frame(&self) -> &RotatingFrame {
        &self.frame
    }

    fn spin(&self) -> f64 {
        2.0 * self.frame.sense * self.frame.omega
    }
}

impl<F: VectorField> VectorField for RotatedField<F> {
    fn dim(&self) -> usize {
        2
    }

    fn velocity(&self, x: &[f64], t: f64, out: &mut [f64]) {
        let a = self.frame.angle(t);
        let lab = rotate([x[0], x[1]], a);
        let mut v = [0.0; 2];
        self.inner.velocity(&lab, t, &mut v);
        let back = rotate(v, -a);
        let w = self.frame.sense * self.frame.omega;
        out[0] = back[0] + w * x[1];
        out[1] = back[1] - w * x[0];
    }

    fn is_autonomous(&self) -> bool {
        self.frame.is_identity() && self.inner.is_autonomous()
    }

    fn vorticity(&self, x: &[f64], t: f64) -> Option<f64> {
        let lab = rotate([x[0], x[1]], self.frame.angle(t));
        self.inner.vorticity(&lab, t).map(|w| w - self.spin())
    }

    fn mean_vorticity(&self, t: f64) -> Option<f64> {
        self.inner.mean_vorticity(t).map(|w| w - self.spin())
    }

    fn name(&self) -> String {
        format!(
            "{}@rotating(omega={},sense={})",
            self.inner.name(),
            self.frame.omega,
            self.frame.sense
        )
    }
}

/// Result of [`transform_field`]: a closed-form builtin when the image is
/// known, a composed field otherwise.
#[derive(Clone, Debug)]
pub enum FramedField<F = VectorFieldSpec> {
    Builtin(VectorFieldSpec),
    Composed(RotatedField<F>),
}

impl<F: VectorField> FramedField<F> {
    pub fn as_builtin(&self) -> Option<&VectorFieldSpec> {
        match self {
            FramedField::Builtin(spec) => Some(spec),
            FramedField::Composed(_) => None,
        }
    }
}

impl<F: VectorField> VectorField for FramedField<F> {
    fn dim(&self) -> usize {
        2
    }

    fn velocity(&self, x: &[f64], t: f64, out: &mut [f64]) {
        match self {
            FramedField::Builtin(s) => s.velocity(x, t, out),
            FramedField::Composed(c) => c.velocity(x, t, out),
        }
    }

    fn is_autonomous(&self) -> bool {
        match self {
            FramedField::Builtin(s) => s.is_autonomous(),
            FramedField::Composed(c) => c.is_autonomous(),
        }
    }

    fn vorticity(&self, x: &[f64], t: f64) -> Option<f64> {
        match self {
            FramedField::Builtin(s) => s.vorticity(x, t),
            FramedField::Composed(c) => c.vorticity(x, t),
        }
    }

    fn mean_vorticity(&self, t: f64) -> Option<f64> {
        match self {
            FramedField::Builtin(s) => s.mean_vorticity(t),
            FramedField::Composed(c) => c.mean_vorticity(t),
        }
    }

    fn name(&self) -> String {
        match self {
            FramedField::Builtin(s) => s.name(),
            FramedField::Composed(c) => c.name(),
        }
    }
}

/// Pushes a planar builtin forward into `frame`.
///
/// Known images come back as builtins: the rest field in the unit-speed
/// co-rotating frame is the harmonic oscillator (and back), and the rotating
/// saddle in the counter-rotating frame of its own `omega` is the stationary
/// rotated saddle.
pub fn transform_field(spec: &VectorFieldSpec, frame: RotatingFrame) -> Result<FramedField> {
    if spec.id().dim() != 2 {
        return Err(Error::Unsupported(format!(
            "rotating frames need a planar field, `{}` has dimension {}",
            spec.id(),
            spec.id().dim()
        )));
    }
    if frame.is_identity() {
        return Ok(FramedField::Builtin(spec.clone()));
    }
    let image = match (spec.id(), frame.omega, frame.sense) {
        (SystemId::Rest, w, s) if w * s == 1.0 => Some(SystemId::HarmonicOscillator),
        (SystemId::HarmonicOscillator, w, s) if w * s == -1.0 => Some(SystemId::Rest),
        (SystemId::RotatingSaddle, w, s) if s == -1.0 && Some(w) == spec.param("omega") => {
            Some(SystemId::RotatedSaddle)
        }
        _ => None,
    };
    Ok(match image {
        Some(id) => FramedField::Builtin(VectorFieldSpec::builtin(id)),
        None => FramedField::Composed(RotatedField::new(spec.clone(), frame)?),
    })
}
