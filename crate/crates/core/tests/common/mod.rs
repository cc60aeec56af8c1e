#![allow(dead_code)]

use plasmoshape::geometry::{DiscreteCurve, StarShape, TrigShape};
use plasmoshape::C64;
use std::f64::consts::PI;

pub fn sample(curve: &DiscreteCurve, f: impl Fn(f64) -> f64) -> Vec<f64> {
    curve.t.iter().map(|&t| f(t)).collect()
}

pub fn max_abs(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

pub fn diff_norm(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Observed order from errors at steps `ε, ε/2, ε/4`.
pub fn richardson_order(e: &[f64]) -> f64 {
    e.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min)
}

/// L² projection of a radial function onto `m` trigonometric modes.
pub fn trig_fit(shape: &StarShape, m: usize) -> TrigShape {
    let n = 1024;
    let r: Vec<f64> = (0..n).map(|k| shape.radius(2.0 * PI * k as f64 / n as f64)).collect();
    let coef = |f: &dyn Fn(f64) -> f64| -> f64 {
        (0..n).map(|k| r[k] * f(2.0 * PI * k as f64 / n as f64)).sum::<f64>() * 2.0 / n as f64
    };
    let mut a = vec![r.iter().sum::<f64>() / n as f64];
    let mut b = Vec::new();
    for j in 1..=m {
        let j = j as f64;
        a.push(coef(&|t| (j * t).cos()));
        b.push(coef(&|t| (j * t).sin()));
    }
    TrigShape::new(a, b).unwrap()
}
