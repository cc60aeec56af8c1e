//! Star-shaped radial functions and other analytic closed curves.

use std::f64::consts::PI;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Point, Result};

/// Number of angles used when checking positivity of a radial function.
const STAR_CHECK_POINTS: usize = 2048;

/// A smooth closed curve `t ↦ x(t)`, `t ∈ [0, 2π)`, traversed counterclockwise.
pub trait ClosedCurve {
    /// Position, first and second derivative with respect to `t`.
    fn sample(&self, t: f64) -> [Point; 3];
}

/// Radial function `q(t) = a0 + Σ a_k cos kt + Σ b_k sin kt`.
///
/// Serializes as `{"a": [a0, ..., am], "b": [b1, ..., bm]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTrigShape", into = "RawTrigShape")]
pub struct TrigShape {
    a: Vec<f64>,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawTrigShape {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl TryFrom<RawTrigShape> for TrigShape {
    type Error = Error;

    fn try_from(raw: RawTrigShape) -> Result<Self> {
        TrigShape::new(raw.a, raw.b)
    }
}

impl From<TrigShape> for RawTrigShape {
    fn from(s: TrigShape) -> Self {
        RawTrigShape { a: s.a, b: s.b }
    }
}

impl TrigShape {
    /// Builds a shape and checks that it is finite and star-shaped.
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let shape = Self::new_unchecked(a, b)?;
        shape.check_star_shaped()?;
        Ok(shape)
    }

    /// Builds a shape without the positivity check (coefficients must still be
    /// finite and consistently sized).
    pub fn new_unchecked(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() || a.len() != b.len() + 1 {
            return Err(Error::Config(format!(
                "expected a.len() == b.len() + 1, got {} and {}",
                a.len(),
                b.len()
            )));
        }
        if a.iter().chain(&b).any(|c| !c.is_finite()) {
            return Err(Error::Config("non-finite shape coefficient".into()));
        }
        Ok(Self { a, b })
    }

    /// Circle of radius `r` expressed with `m` modes.
    pub fn circle(r: f64, m: usize) -> Result<Self> {
        let mut a = vec![0.0; m + 1];
        a[0] = r;
        Self::new(a, vec![0.0; m])
    }

    /// Shape from the packed vector `(a0, ..., am, b1, ..., bm)`.
    pub fn from_coeffs(coeffs: &[f64]) -> Result<Self> {
        if coeffs.len().is_multiple_of(2) {
            return Err(Error::Config(format!(
                "coefficient vector must have odd length 2m+1, got {}",
                coeffs.len()
            )));
        }
        let m = coeffs.len() / 2;
        Self::new(coeffs[..=m].to_vec(), coeffs[m + 1..].to_vec())
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Packed vector `(a0, ..., am, b1, ..., bm)`.
    pub fn coeffs(&self) -> Vec<f64> {
        self.a.iter().chain(&self.b).copied().collect()
    }

    /// Same shape with `m` modes (truncating or zero-padding).
    pub fn with_modes(&self, m: usize) -> Result<Self> {
        let mut a = self.a.clone();
        let mut b = self.b.clone();
        a.resize(m + 1, 0.0);
        b.resize(m, 0.0);
        Self::new(a, b)
    }

    /// Trigonometric basis `g(t) = (1, cos t, ..., cos mt, sin t, ..., sin mt)`.
    pub fn basis(m: usize, t: f64) -> Vec<f64> {
        let mut g = Vec::with_capacity(2 * m + 1);
        g.push(1.0);
        g.extend((1..=m).map(|k| (k as f64 * t).cos()));
        g.extend((1..=m).map(|k| (k as f64 * t).sin()));
        g
    }

    /// `q(t)`, `q'(t)`, `q''(t)`.
    pub fn radial(&self, t: f64) -> [f64; 3] {
        let mut q = self.a[0];
        let mut dq = 0.0;
        let mut ddq = 0.0;
        for k in 1..=self.m() {
            let kf = k as f64;
            let (s, c) = (kf * t).sin_cos();
            let (ak, bk) = (self.a[k], self.b[k - 1]);
            q += ak * c + bk * s;
            dq += kf * (-ak * s + bk * c);
            ddq -= kf * kf * (ak * c + bk * s);
        }
        [q, dq, ddq]
    }

    pub fn radius(&self, t: f64) -> f64 {
        let (s1, c1) = t.sin_cos();
        let (mut s, mut c) = (0.0, 1.0);
        let mut q = self.a[0];
        for (ak, bk) in self.a[1..].iter().zip(&self.b) {
            (s, c) = (s * c1 + c * s1, c * c1 - s * s1);
            q += ak * c + bk * s;
        }
        q
    }

    fn check_star_shaped(&self) -> Result<()> {
        check_positive(|t| self.radius(t))
    }
}

fn check_positive(radius: impl Fn(f64) -> f64) -> Result<()> {
    for i in 0..STAR_CHECK_POINTS {
        let t = 2.0 * PI * i as f64 / STAR_CHECK_POINTS as f64;
        let r = radius(t);
        if !(r > 0.0) {
            return Err(Error::NotStarShaped { t, radius: r });
        }
    }
    Ok(())
}

/// Star-shaped curve `q(t)(cos t, sin t)` with an analytic radial function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum StarShape {
    /// Finite trigonometric series.
    Trig(TrigShape),
    /// `q = (4/5 + 18/25 cos t + 3/25 sin 2t) / (1 + 7/10 cos t)`.
    Bean,
    /// `q = sqrt(cos²t + 0.26 sin²(t + 0.5))`.
    Peanut,
}

impl StarShape {
    /// Names accepted by [`StarShape::preset`].
    pub const PRESETS: [&'static str; 4] = ["disk05", "bean", "peanut", "pear"];

    /// Named presets: `disk05`, `bean`, `peanut`, `pear`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "disk05" => Ok(Self::Trig(TrigShape::circle(0.5, 0)?)),
            "bean" => Ok(Self::Bean),
            "peanut" => Ok(Self::Peanut),
            "pear" => Ok(Self::Trig(TrigShape::new(
                vec![18.0 / 25.0, 0.0, 0.0, 3.0 / 20.0],
                vec![0.0; 3],
            )?)),
            other => Err(Error::Config(format!(
                "unknown shape preset '{other}' (expected one of {:?})",
                Self::PRESETS
            ))),
        }
    }

    /// `q(t)`, `q'(t)`, `q''(t)`.
    pub fn radial(&self, t: f64) -> [f64; 3] {
        match self {
            Self::Trig(s) => s.radial(t),
            Self::Bean => {
                let (s1, c1) = t.sin_cos();
                let (s2, c2) = (2.0 * t).sin_cos();
                let num = 0.8 + 0.72 * c1 + 0.12 * s2;
                let dnum = -0.72 * s1 + 0.24 * c2;
                let ddnum = -0.72 * c1 - 0.48 * s2;
                let den = 1.0 + 0.7 * c1;
                let dden = -0.7 * s1;
                let ddden = -0.7 * c1;
                let q = num / den;
                let dq = (dnum * den - num * dden) / (den * den);
                let ddq = (ddnum * den - num * ddden) / (den * den) - 2.0 * dden * dq / den;
                [q, dq, ddq]
            }
            Self::Peanut => {
                let f = t.cos().powi(2) + 0.26 * (t + 0.5).sin().powi(2);
                let df = -(2.0 * t).sin() + 0.26 * (2.0 * t + 1.0).sin();
                let ddf = -2.0 * (2.0 * t).cos() + 0.52 * (2.0 * t + 1.0).cos();
                let q = f.sqrt();
                let dq = df / (2.0 * q);
                let ddq = ddf / (2.0 * q) - df * df / (4.0 * q * q * q);
                [q, dq, ddq]
            }
        }
    }

    pub fn radius(&self, t: f64) -> f64 {
        match self {
            Self::Trig(s) => s.radius(t),
            _ => self.radial(t)[0],
        }
    }

    /// Maximum radius over a dense angle grid.
    pub fn max_radius(&self) -> f64 {
        (0..STAR_CHECK_POINTS)
            .map(|i| self.radius(2.0 * PI * i as f64 / STAR_CHECK_POINTS as f64))
            .fold(f64::MIN, f64::max)
    }

    pub fn check_star_shaped(&self) -> Result<()> {
        check_positive(|t| self.radius(t))
    }
}

impl From<TrigShape> for StarShape {
    fn from(s: TrigShape) -> Self {
        Self::Trig(s)
    }
}

impl FromStr for StarShape {
    type Err = Error;

    /// Accepts a preset name or a JSON object `{"a": [...], "b": [...]}`.
    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim();
        if trimmed.starts_with('{') {
            let shape: TrigShape = serde_json::from_str(trimmed)?;
            Ok(Self::Trig(shape))
        } else {
            Self::preset(trimmed)
        }
    }
}

impl ClosedCurve for StarShape {
    fn sample(&self, t: f64) -> [Point; 3] {
        let [q, dq, ddq] = self.radial(t);
        let (s, c) = t.sin_cos();
        let e = Point::new(c, s);
        let de = Point::new(-s, c);
        [q * e, dq * e + q * de, (ddq - q) * e + 2.0 * dq * de]
    }
}

impl ClosedCurve for TrigShape {
    fn sample(&self, t: f64) -> [Point; 3] {
        let [q, dq, ddq] = self.radial(t);
        let (s, c) = t.sin_cos();
        let e = Point::new(c, s);
        let de = Point::new(-s, c);
        [q * e, dq * e + q * de, (ddq - q) * e + 2.0 * dq * de]
    }
}

/// Ellipse `(a cos t, b sin t)` centred at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub a: f64,
    pub b: f64,
}

impl ClosedCurve for Ellipse {
    fn sample(&self, t: f64) -> [Point; 3] {
        let (s, c) = t.sin_cos();
        [
            Point::new(self.a * c, self.b * s),
            Point::new(-self.a * s, self.b * c),
            Point::new(-self.a * c, -self.b * s),
        ]
    }
}

/// Radius and point of a star-shaped curve at angle `t`.
pub fn eval_shape(shape: &StarShape, t: f64) -> Result<(f64, Point)> {
    let r = shape.radius(t);
    if !(r > 0.0) {
        return Err(Error::NotStarShaped { t, radius: r });
    }
    Ok((r, r * Point::new(t.cos(), t.sin())))
}
