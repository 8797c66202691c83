//! Cone definitions and Euclidean projections.
//!
//! Every cone here is closed and convex. `NonNeg`, `SecondOrder` and
//! `RotatedSecondOrder` are self-dual; the dual of `Zero` is the whole space.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

/// One block of the product cone `K`, identified by its dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "dim", rename_all = "snake_case")]
pub enum Cone {
    /// `{0}^dim`
    Zero(usize),
    /// `R^dim_+`
    NonNeg(usize),
    /// `{(t, x) : ‖x‖₂ ≤ t}`
    SecondOrder(usize),
    /// `{(u, v, x) : 2uv ≥ ‖x‖₂², u ≥ 0, v ≥ 0}`
    RotatedSecondOrder(usize),
}

impl Cone {
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Zero(d) | Cone::NonNeg(d) | Cone::SecondOrder(d) | Cone::RotatedSecondOrder(d) => d,
        }
    }

    /// Whether a diagonal row scaling may differ between rows of this block.
    pub(crate) fn is_separable(&self) -> bool {
        matches!(self, Cone::Zero(_) | Cone::NonNeg(_))
    }

    /// Project `v` onto the cone in place.
    pub fn project(&self, v: &mut [f64]) {
        debug_assert_eq!(v.len(), self.dim());
        match self {
            Cone::Zero(_) => v.iter_mut().for_each(|x| *x = 0.0),
            Cone::NonNeg(_) => project_nonneg_in_place(v),
            Cone::SecondOrder(_) => project_soc_in_place(v),
            Cone::RotatedSecondOrder(_) => project_rsoc_in_place(v),
        }
    }

    /// Project `v` onto the dual cone `K*` in place.
    pub fn project_dual(&self, v: &mut [f64]) {
        match self {
            Cone::Zero(_) => {}
            _ => self.project(v),
        }
    }

    /// Infinity-norm distance from `v` to the cone.
    pub fn distance(&self, v: &[f64]) -> f64 {
        let mut p = v.to_vec();
        self.project(&mut p);
        v.iter().zip(&p).fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }

    /// Infinity-norm distance from `v` to the dual cone.
    pub fn dual_distance(&self, v: &[f64]) -> f64 {
        let mut p = v.to_vec();
        self.project_dual(&mut p);
        v.iter().zip(&p).fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

/// Total dimension of a cone list.
pub fn total_dim(cones: &[Cone]) -> usize {
    cones.iter().map(Cone::dim).sum()
}

/// Apply `f` to each block of `v`, partitioned according to `cones`.
pub fn for_each_block<F>(cones: &[Cone], v: &mut [f64], mut f: F)
where
    F: FnMut(&Cone, &mut [f64]),
{
    let mut offset = 0;
    for cone in cones {
        let d = cone.dim();
        f(cone, &mut v[offset..offset + d]);
        offset += d;
    }
}

/// Project onto the product cone.
pub fn project_product(cones: &[Cone], v: &mut [f64]) {
    for_each_block(cones, v, |c, blk| c.project(blk));
}

/// Largest block distance of `v` from the product cone.
pub fn product_distance(cones: &[Cone], v: &[f64]) -> f64 {
    let mut offset = 0;
    let mut worst = 0.0f64;
    for cone in cones {
        let d = cone.dim();
        worst = worst.max(cone.distance(&v[offset..offset + d]));
        offset += d;
    }
    worst
}

pub fn project_nonneg(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| x.max(0.0)).collect()
}

fn project_nonneg_in_place(v: &mut [f64]) {
    v.iter_mut().for_each(|x| *x = x.max(0.0));
}

/// Projection of `(t, x)` onto the second-order cone.
pub fn project_soc(t: f64, x: &[f64]) -> (f64, Vec<f64>) {
    let mut v = Vec::with_capacity(x.len() + 1);
    v.push(t);
    v.extend_from_slice(x);
    project_soc_in_place(&mut v);
    let t = v[0];
    v.remove(0);
    (t, v)
}

fn project_soc_in_place(v: &mut [f64]) {
    let (t, x) = v.split_first_mut().expect("second-order cone of dimension zero");
    let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm <= *t {
        return;
    }
    if norm <= -*t {
        *t = 0.0;
        x.iter_mut().for_each(|a| *a = 0.0);
        return;
    }
    let scale = 0.5 * (norm + *t);
    *t = scale;
    let ratio = scale / norm;
    x.iter_mut().for_each(|a| *a *= ratio);
}

/// Projection of `(u, v, x)` onto the rotated second-order cone.
pub fn project_rsoc(u: f64, v: f64, x: &[f64]) -> (f64, f64, Vec<f64>) {
    let mut w = Vec::with_capacity(x.len() + 2);
    w.push(u);
    w.push(v);
    w.extend_from_slice(x);
    project_rsoc_in_place(&mut w);
    (w[0], w[1], w[2..].to_vec())
}

fn project_rsoc_in_place(w: &mut [f64]) {
    assert!(w.len() >= 2, "rotated cone needs dimension at least 2");
    // (u, v) -> ((u+v)/√2, (u-v)/√2) maps the rotated cone onto the standard one.
    let (u, v) = (w[0], w[1]);
    w[0] = FRAC_1_SQRT_2 * (u + v);
    w[1] = FRAC_1_SQRT_2 * (u - v);
    project_soc_in_place(w);
    let (t, r) = (w[0], w[1]);
    w[0] = FRAC_1_SQRT_2 * (t + r);
    w[1] = FRAC_1_SQRT_2 * (t - r);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nonneg_clips_negatives() {
        assert_eq!(project_nonneg(&[1.0, -2.0, 0.0]), vec![1.0, 0.0, 0.0]);
        assert_eq!(project_nonneg(&[0.5, 3.0]), vec![0.5, 3.0]);
    }

    #[test]
    fn soc_cases() {
        assert_eq!(project_soc(2.0, &[1.0, 0.0]), (2.0, vec![1.0, 0.0]));
        assert_eq!(project_soc(-3.0, &[0.0, 0.0]), (0.0, vec![0.0, 0.0]));
        assert_eq!(project_soc(0.0, &[2.0, 0.0]), (1.0, vec![1.0, 0.0]));
    }

    #[test]
    fn rsoc_cases() {
        let (u, v, x) = project_rsoc(1.0, 1.0, &[0.0, 0.0]);
        assert!((u - 1.0).abs() < 1e-15 && (v - 1.0).abs() < 1e-15 && x == vec![0.0, 0.0]);

        let s2 = 2f64.sqrt();
        let (u, v, x) = project_rsoc(1.0, 1.0, &[s2, 0.0]);
        assert!((u - 1.0).abs() < 1e-12 && (v - 1.0).abs() < 1e-12);
        assert!((x[0] - s2).abs() < 1e-12 && x[1] == 0.0);

        assert_eq!(project_rsoc(-1.0, -1.0, &[0.0, 0.0]), (0.0, 0.0, vec![0.0, 0.0]));
    }

    #[test]
    fn zero_cone_dual_is_free() {
        let c = Cone::Zero(2);
        assert_eq!(c.distance(&[1.0, -1.0]), 1.0);
        assert_eq!(c.dual_distance(&[1.0, -1.0]), 0.0);
    }

    #[test]
    fn serde_shape() {
        let s = serde_json::to_string(&Cone::RotatedSecondOrder(4)).unwrap();
        assert_eq!(s, r#"{"type":"rotated_second_order","dim":4}"#);
    }
}
