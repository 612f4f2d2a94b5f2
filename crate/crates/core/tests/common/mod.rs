#![allow(dead_code)]

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// `∫_a^b g` with `panels` equal panels of an `order`-point Gauss–Legendre rule.
pub fn composite(a: f64, b: f64, panels: usize, order: usize, mut g: impl FnMut(f64) -> f64) -> f64 {
    let rule = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for &(x, w) in &rule {
            acc += 0.5 * h * w * g(mid + 0.5 * h * x);
        }
    }
    acc
}

/// Hermite functions `ψ₀…ψ₂` in closed form.
pub fn psi(n: usize, x: f64) -> f64 {
    let g = PI.powf(-0.25) * (-0.5 * x * x).exp();
    match n {
        0 => g,
        1 => 2f64.sqrt() * x * g,
        2 => (2.0 * x * x - 1.0) / 2f64.sqrt() * g,
        _ => unimplemented!("closed forms only up to n = 2"),
    }
}

pub fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
