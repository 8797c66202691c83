//! Random cone programs with a known optimum.
//!
//! A primal-dual pair `(s*, y*)` is drawn complementary block by block, then
//! `A` and `x*` are drawn freely and `b = A x* + s*`, `c = −Aᵀ y*`. The KKT
//! conditions hold at `(x*, s*, y*)`, so `cᵀx*` is the optimal value.

use crate::cone::Cone;
use crate::csc::CscMatrix;
use crate::program::ConeProgram;
use rand::Rng;
use std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone)]
pub struct PlantedProgram {
    pub program: ConeProgram,
    pub optimum: f64,
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub y: Vec<f64>,
}

fn unit_vector<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-3 {
            return v.into_iter().map(|a| a / n).collect();
        }
    }
}

/// Complementary `(s, y)` on a second-order cone of dimension `d`.
fn soc_pair<R: Rng>(rng: &mut R, d: usize) -> (Vec<f64>, Vec<f64>) {
    let mut s = vec![0.0; d];
    let mut y = vec![0.0; d];
    match rng.random_range(0..4) {
        0 => {
            // interior primal, zero dual
            let u = unit_vector(rng, d - 1);
            let r = rng.random_range(0.0..0.9);
            s[0] = rng.random_range(0.5..2.0);
            for k in 1..d {
                s[k] = s[0] * r * u[k - 1];
            }
        }
        1 => {
            let u = unit_vector(rng, d - 1);
            let r = rng.random_range(0.0..0.9);
            y[0] = rng.random_range(0.5..2.0);
            for k in 1..d {
                y[k] = y[0] * r * u[k - 1];
            }
        }
        _ if d >= 2 => {
            // both on the boundary, on opposite rays
            let u = unit_vector(rng, d - 1);
            let (a, b) = (rng.random_range(0.5..2.0), rng.random_range(0.5..2.0));
            s[0] = a;
            y[0] = b;
            for k in 1..d {
                s[k] = a * u[k - 1];
                y[k] = -b * u[k - 1];
            }
        }
        _ => {
            s[0] = rng.random_range(0.5..2.0);
        }
    }
    (s, y)
}

/// The symmetric orthogonal map between standard and rotated cone coordinates.
fn rotate(v: &mut [f64]) {
    let (a, b) = (v[0], v[1]);
    v[0] = FRAC_1_SQRT_2 * (a + b);
    v[1] = FRAC_1_SQRT_2 * (a - b);
}

fn block_pair<R: Rng>(rng: &mut R, cone: &Cone) -> (Vec<f64>, Vec<f64>) {
    match *cone {
        Cone::Zero(d) => (vec![0.0; d], (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()),
        Cone::NonNeg(d) => {
            let mut s = vec![0.0; d];
            let mut y = vec![0.0; d];
            for k in 0..d {
                match rng.random_range(0..3) {
                    0 => s[k] = rng.random_range(0.1..2.0),
                    1 => y[k] = rng.random_range(0.1..2.0),
                    _ => {}
                }
            }
            (s, y)
        }
        Cone::SecondOrder(d) => soc_pair(rng, d),
        Cone::RotatedSecondOrder(d) => {
            let (mut s, mut y) = soc_pair(rng, d);
            rotate(&mut s);
            rotate(&mut y);
            (s, y)
        }
    }
}

/// Draw a program with roughly `n` variables and a mix of all four cone types.
pub fn planted_program<R: Rng>(rng: &mut R, n: usize) -> PlantedProgram {
    assert!(n >= 1);
    let mut cones = Vec::new();
    let mut m = 0;
    let target = n + n / 2 + 2;
    while m < target {
        let cone = match rng.random_range(0..4) {
            0 => Cone::Zero(rng.random_range(1..=3.min(n))),
            1 => Cone::NonNeg(rng.random_range(1..=6)),
            2 => Cone::SecondOrder(rng.random_range(2..=6)),
            _ => Cone::RotatedSecondOrder(rng.random_range(3..=6)),
        };
        m += cone.dim();
        cones.push(cone);
    }

    let mut s = Vec::with_capacity(m);
    let mut y = Vec::with_capacity(m);
    for cone in &cones {
        let (bs, by) = block_pair(rng, cone);
        s.extend(bs);
        y.extend(by);
    }

    // Sparse A with a guaranteed entry in every row and column.
    let density = (4.0 / n as f64).min(1.0);
    let (mut rows, mut cols, mut vals) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..m {
        for j in 0..n {
            if rng.random::<f64>() < density || j == i % n {
                rows.push(i);
                cols.push(j);
                vals.push(rng.random_range(-1.0..1.0));
            }
        }
    }
    for j in 0..n {
        rows.push(rng.random_range(0..m));
        cols.push(j);
        vals.push(rng.random_range(-1.0..1.0));
    }
    let a = CscMatrix::from_triplets(m, n, &rows, &cols, &vals);

    let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut ax = vec![0.0; m];
    a.mul_vec(&x, &mut ax);
    let b: Vec<f64> = ax.iter().zip(&s).map(|(ax, s)| ax + s).collect();
    let mut aty = vec![0.0; n];
    a.tmul_vec(&y, &mut aty);
    let c: Vec<f64> = aty.iter().map(|v| -v).collect();
    let optimum = c.iter().zip(&x).map(|(c, x)| c * x).sum();
    let program = ConeProgram::new(c, a, b, cones).expect("planted program is well formed");
    PlantedProgram { program, optimum, x, s, y }
}
