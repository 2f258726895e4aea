//! Test-side oracles, written independently of the library's algorithms.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Lyndon words of length `k` over `d` letters by brute force: a word is
/// Lyndon iff it is strictly smaller than each of its proper suffixes.
pub fn brute_force_lyndon(d: usize, k: usize) -> Vec<Vec<usize>> {
    let total = d.pow(k as u32);
    let mut out = Vec::new();
    for code in 0..total {
        let mut w = vec![0; k];
        let mut c = code;
        for slot in w.iter_mut().rev() {
            *slot = c % d + 1;
            c /= d;
        }
        if (1..k).all(|i| w[..] < w[i..]) {
            out.push(w);
        }
    }
    out
}

/// Truncated tensor series as per-level flat vectors, with its own product.
pub type Levels = Vec<Vec<f64>>;

pub fn tensor_mul(a: &Levels, b: &Levels, d: usize) -> Levels {
    let n = a.len() - 1;
    (0..=n)
        .map(|k| {
            let mut out = vec![0.0; d.pow(k as u32)];
            for i in 0..=k {
                let (x, y) = (&a[i], &b[k - i]);
                for (p, xv) in x.iter().enumerate() {
                    if *xv == 0.0 {
                        continue;
                    }
                    for (q, yv) in y.iter().enumerate() {
                        out[p * y.len() + q] += xv * yv;
                    }
                }
            }
            out
        })
        .collect()
}

pub fn tensor_sub(a: &Levels, b: &Levels) -> Levels {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(u, v)| u - v).collect()).collect()
}

pub fn tensor_add_scaled(a: &Levels, b: &Levels, s: f64) -> Levels {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(u, v)| u + s * v).collect()).collect()
}

pub fn bracket(a: &Levels, b: &Levels, d: usize) -> Levels {
    tensor_sub(&tensor_mul(a, b, d), &tensor_mul(b, a, d))
}

pub fn vector_levels(v: &[f64], n: usize) -> Levels {
    let d = v.len();
    (0..=n).map(|k| if k == 1 { v.to_vec() } else { vec![0.0; d.pow(k as u32)] }).collect()
}

/// `X + Y + ½[X,Y] + (1/12)([X,[X,Y]] − [Y,[X,Y]])` for level-one X, Y.
pub fn bch_degree_three(x: &[f64], y: &[f64], n: usize) -> Levels {
    let d = x.len();
    let (xl, yl) = (vector_levels(x, n), vector_levels(y, n));
    let xy = bracket(&xl, &yl, d);
    let mut out = tensor_add_scaled(&xl, &yl, 1.0);
    out = tensor_add_scaled(&out, &xy, 0.5);
    out = tensor_add_scaled(&out, &bracket(&xl, &xy, d), 1.0 / 12.0);
    tensor_add_scaled(&out, &bracket(&yl, &xy, d), -1.0 / 12.0)
}

/// Signature levels `0..=n` of a piecewise-linear path by cumulative
/// trapezoid integration of `I_{w i}(t) = ∫ I_w dX^i` on `sub` substeps per
/// segment.
pub fn trapezoid_signature(points: &[Vec<f64>], n: usize, sub: usize) -> Levels {
    let d = points[0].len();
    let mut fine = vec![points[0].clone()];
    for pair in points.windows(2) {
        for s in 1..=sub {
            let t = s as f64 / sub as f64;
            fine.push(pair[0].iter().zip(&pair[1]).map(|(a, b)| a + t * (b - a)).collect());
        }
    }
    let mut current: Levels = (0..=n).map(|k| vec![0.0; d.pow(k as u32)]).collect();
    current[0][0] = 1.0;
    for step in fine.windows(2) {
        let dx: Vec<f64> = step[0].iter().zip(&step[1]).map(|(a, b)| b - a).collect();
        let mut next = current.clone();
        // Level k at the new time uses level k-1 at both ends of the step.
        for k in 1..=n {
            let len_prev = d.pow(k as u32 - 1);
            for w in 0..len_prev {
                for i in 0..d {
                    let avg = 0.5 * (current[k - 1][w] + next[k - 1][w]);
                    next[k][w * d + i] = current[k][w * d + i] + avg * dx[i];
                }
            }
        }
        current = next;
    }
    current
}

/// Heisenberg Gaussian `exp(−z²/2s_z² − a²/2s_a² − b²/2s_b²)` in exponential
/// coordinates `(z, a, b)` on `(X12, X1, X2)`, `[X1, X2] = X12`.
#[derive(Clone, Copy, Debug)]
pub struct HeisenbergGaussian {
    pub sz: f64,
    pub sa: f64,
    pub sb: f64,
    pub z0: f64,
}

impl HeisenbergGaussian {
    pub fn value(&self, z: f64, a: f64, b: f64) -> f64 {
        (-((z - self.z0).powi(2) / (2.0 * self.sz * self.sz) + a * a / (2.0 * self.sa * self.sa) + b * b / (2.0 * self.sb * self.sb))).exp()
    }

    /// `K(x, y)` of `π_λ(f)` for the chart `[X12, X1 | X2]`, by completing
    /// the square in the Gaussian H-integral.
    pub fn kernel(&self, lambda: f64, x: f64, y: f64) -> (f64, f64) {
        let mag = (-(x - y).powi(2) / (2.0 * self.sb * self.sb)).exp()
            * (2.0 * PI).sqrt()
            * self.sz
            * (-lambda * lambda * self.sz * self.sz / 2.0).exp()
            * (2.0 * PI).sqrt()
            * self.sa
            * (-lambda * lambda * self.sa * self.sa * (x + y).powi(2) / 8.0).exp();
        let phase = lambda * self.z0;
        (mag * phase.cos(), mag * phase.sin())
    }

    /// `‖f‖²` in closed form.
    pub fn norm_sq(&self) -> f64 {
        PI.powf(1.5) * self.sz * self.sa * self.sb
    }

    /// `‖π_λ(f)‖²_HS` in closed form (for `z0 = 0`).
    pub fn hs_norm_sq(&self, lambda: f64) -> f64 {
        (2.0 * PI * self.sz * self.sa).powi(2) * (-lambda * lambda * self.sz * self.sz).exp() * PI * self.sb / (lambda.abs() * self.sa)
    }

    /// Trace of `π_λ(f)` in closed form (for `z0 = 0`).
    pub fn trace(&self, lambda: f64) -> f64 {
        2.0 * PI / lambda.abs() * (2.0 * PI).sqrt() * self.sz * (-lambda * lambda * self.sz * self.sz / 2.0).exp()
    }
}

/// Heisenberg group law in exponential coordinates `(z, a, b)`.
pub fn heisenberg_mul(p: [f64; 3], q: [f64; 3]) -> [f64; 3] {
    [p[0] + q[0] + 0.5 * (p[1] * q[2] - p[2] * q[1]), p[1] + q[1], p[2] + q[2]]
}

/// `∫∫ f(σ(x) u σ(y)⁻¹) e^{iλz} dz da` with `u = exp(z X12 + a X1)`, by a
/// dense midpoint rule on a wide box; independent of the library's charts.
pub fn heisenberg_kernel_dense(g: &HeisenbergGaussian, lambda: f64, x: f64, y: f64, nodes: usize, half: f64) -> (f64, f64) {
    let h = 2.0 * half / nodes as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for i in 0..nodes {
        let z = -half + (i as f64 + 0.5) * h;
        for j in 0..nodes {
            let a = -half + (j as f64 + 0.5) * h;
            let p = heisenberg_mul(heisenberg_mul([0.0, 0.0, x], [z, a, 0.0]), [0.0, 0.0, -y]);
            let v = g.value(p[0], p[1], p[2]) * h * h;
            re += v * (lambda * z).cos();
            im += v * (lambda * z).sin();
        }
    }
    (re, im)
}
