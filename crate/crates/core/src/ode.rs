//! Fixed-step classical Runge-Kutta integration for autonomous systems.

use crate::error::{Error, Result};

fn axpy(y: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(y, k)| y + h * k).collect()
}

pub fn rk4_step<F>(f: &F, y: &[f64], h: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let k1 = f(y);
    let k2 = f(&axpy(y, 0.5 * h, &k1));
    let k3 = f(&axpy(y, 0.5 * h, &k2));
    let k4 = f(&axpy(y, h, &k3));
    y.iter()
        .enumerate()
        .map(|(i, y)| y + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Advances `y' = f(y)` from `t0` to `t1` (either direction) in equal steps
/// no longer than `max_step`.
pub fn integrate<F>(f: &F, t0: f64, y0: &[f64], t1: f64, max_step: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let span = t1 - t0;
    let steps = (span.abs() / max_step).ceil().max(1.0) as usize;
    let h = span / steps as f64;
    let mut y = y0.to_vec();
    for k in 0..steps {
        y = rk4_step(f, &y, h);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::OdeBlowUp {
                t: t0 + (k + 1) as f64 * h,
            });
        }
    }
    Ok(y)
}

/// Solves `y' = f(y)`, `y(t0) = y0` at each of `targets`, marching outward
/// from `t0` through the sorted targets on both sides.
pub fn solve_at<F>(f: &F, t0: f64, y0: &[f64], targets: &[f64], max_step: f64) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut order: Vec<usize> = (0..targets.len()).collect();
    order.sort_by(|&a, &b| targets[a].total_cmp(&targets[b]));
    let mut out = vec![Vec::new(); targets.len()];
    let split = order.partition_point(|&i| targets[i] < t0);
    let (below, above) = order.split_at(split);
    for side in [above.iter().collect::<Vec<_>>(), below.iter().rev().collect()] {
        let mut t = t0;
        let mut y = y0.to_vec();
        for &i in side {
            if targets[i] != t {
                y = integrate(f, t, &y, targets[i], max_step)?;
                t = targets[i];
            }
            out[i] = y.clone();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let f = |y: &[f64]| vec![y[0]];
        let y = integrate(&f, 0.0, &[1.0], 1.0, 0.01).unwrap();
        assert!((y[0] - 1f64.exp()).abs() <= 1e-9);
        let back = integrate(&f, 1.0, &y, 0.0, 0.01).unwrap();
        assert!((back[0] - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn rotation_at_targets() {
        let f = |y: &[f64]| vec![-y[1], y[0]];
        let targets = [0.9, 0.1, 0.5, 0.3, 0.7];
        let ys = solve_at(&f, 0.5, &[1.0, 0.0], &targets, 1e-3).unwrap();
        for (t, y) in targets.iter().zip(&ys) {
            let s = t - 0.5;
            assert!((y[0] - s.cos()).abs() <= 1e-12 && (y[1] - s.sin()).abs() <= 1e-12);
        }
    }

    #[test]
    fn blow_up_is_detected() {
        let f = |y: &[f64]| vec![y[0] * y[0]];
        assert!(matches!(
            integrate(&f, 0.0, &[1.0], 2.0, 1e-3),
            Err(Error::OdeBlowUp { .. })
        ));
    }
}
