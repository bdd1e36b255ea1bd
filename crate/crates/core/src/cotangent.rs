//! Cotangent paths and loops: shooting through a point, linearized tangent
//! vectors, the Lagrangian test for the path-space 2-form, and the tangent
//! cone probe for `pi = x dx ^ dy`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bivector::{presets, BivectorField};
use crate::error::{Error, Result};
use crate::functionals::trig_sum;
use crate::ode;
use crate::pathspace::{
    bump_reparam, column, cotangent_defect, max_defect, omega, sup_norm, transpose,
    BoundaryKind, Grid, PathSample, TangentVector,
};

/// Relative tolerance for "is cotangent" and for linearized residuals.
pub const COTANGENT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct ShootResult {
    pub path: PathSample,
    pub defect_max: f64,
    pub through_point_error: f64,
    /// Difference between the ODE solution and a run at half the step.
    pub ode_error: f64,
}

/// Builds a cotangent path (or loop) through `(q, p)` at `t = 1/2`.
///
/// Solves `y' = sharp(y, p)`, `y(1/2) = q` on the window of `psi` and returns
/// `a(t) = (y(psi(t)), psi'(t) p)`.
pub fn shoot_through(
    pi: &BivectorField,
    q: &[f64],
    p: &[f64],
    eps: f64,
    grid: &Grid,
) -> Result<ShootResult> {
    pi.check_len(q)?;
    pi.check_len(p)?;
    let reparam = bump_reparam(eps, grid)?;
    let rhs = |y: &[f64]| pi.at_unchecked(y).sharp(p);
    let max_step = eps / (8.0 * grid.intervals() as f64);
    let ys = ode::solve_at(&rhs, 0.5, q, &reparam.psi, max_step)?;
    let fine = ode::solve_at(&rhs, 0.5, q, &reparam.psi, 0.5 * max_step)?;
    let ode_error = ys
        .iter()
        .zip(&fine)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    let size = 1.0_f64.max(sup_norm(&fine));
    if !ode_error.is_finite() || ode_error > 1e-8 * size {
        let worst = ys
            .iter()
            .zip(&fine)
            .zip(&reparam.psi)
            .map(|((a, b), t)| {
                let e = a.iter().zip(b).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
                (if e.is_finite() { e } else { f64::INFINITY }, *t)
            })
            .fold((0.0, 0.5), |m, x| if x.0 > m.0 { x } else { m });
        return Err(Error::OdeBlowUp { t: worst.1 });
    }
    let ps = reparam
        .dpsi
        .iter()
        .map(|d| p.iter().map(|x| d * x).collect())
        .collect();
    let path = PathSample::new(*grid, ys, ps)?;
    let defect_max = max_defect(pi, &path)?;
    let mid = grid.midpoint_index();
    let through_point_error = path.q()[mid]
        .iter()
        .zip(q)
        .chain(path.p()[mid].iter().zip(p))
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(ShootResult {
        path,
        defect_max,
        through_point_error,
        ode_error,
    })
}

/// Marches `dq' = sharp_derivative(q, dq, p) + sharp(q, dp)` from `dq(0) = dq0`
/// over every cell of the grid with one RK4 step per cell, using interpolated
/// midpoint data. Returns the node values and the value reached at `t = 1`.
fn march_linearized(
    pi: &BivectorField,
    a: &PathSample,
    dp: &[Vec<f64>],
    dq0: &[f64],
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let grid = a.grid();
    let n = a.dim();
    let len = grid.len();
    let half = |values: &[Vec<f64>]| -> Vec<Vec<f64>> {
        let cols: Vec<Vec<f64>> = (0..n)
            .map(|c| grid.half_step_values(&column(values, c)))
            .collect();
        transpose(&cols, grid.intervals())
    };
    let (q_mid, p_mid, dp_mid) = (half(a.q()), half(a.p()), half(dp));
    let rhs = |q: &[f64], p: &[f64], dp: &[f64], x: &[f64]| -> Vec<f64> {
        let at = pi.at_unchecked(q);
        let lin = at.sharp_derivative(x, p);
        let src = at.sharp(dp);
        lin.iter().zip(src).map(|(a, b)| a + b).collect()
    };
    let h = grid.step();
    let mut out = Vec::with_capacity(len);
    let mut x = dq0.to_vec();
    out.push(x.clone());
    for i in 0..grid.intervals() {
        let next = (i + 1) % len;
        let step = |x: &[f64], k: &[f64], s: f64| -> Vec<f64> {
            x.iter().zip(k).map(|(x, k)| x + s * k).collect()
        };
        let k1 = rhs(&a.q()[i], &a.p()[i], &dp[i], &x);
        let k2 = rhs(&q_mid[i], &p_mid[i], &dp_mid[i], &step(&x, &k1, 0.5 * h));
        let k3 = rhs(&q_mid[i], &p_mid[i], &dp_mid[i], &step(&x, &k2, 0.5 * h));
        let k4 = rhs(&a.q()[next], &a.p()[next], &dp[next], &step(&x, &k3, h));
        x = (0..n)
            .map(|c| x[c] + h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]))
            .collect();
        if out.len() < len {
            out.push(x.clone());
        }
    }
    (out, x)
}

fn require_cotangent(pi: &BivectorField, a: &PathSample) -> Result<f64> {
    if a.dim() != pi.dim() {
        return Err(Error::DimensionMismatch {
            expected: pi.dim(),
            found: a.dim(),
        });
    }
    let scale = a.scale_for(pi);
    let defect = max_defect(pi, a)?;
    let tol = COTANGENT_TOL * scale;
    if defect > tol {
        return Err(Error::NotCotangent { defect, tol });
    }
    Ok(scale)
}

/// Tangent vector `(dq, dp)` to the cotangent set at `a`, with `dq` solving
/// the linearized cotangent equation from `dq(0) = dq0`.
///
/// On loops the solution must return to `dq0` after one period (to
/// `1e-6 * scale`); otherwise `NonClosingTangents` is returned.
pub fn linearized_tangent(
    pi: &BivectorField,
    a: &PathSample,
    dp: &[Vec<f64>],
    dq0: &[f64],
) -> Result<TangentVector> {
    let scale = require_cotangent(pi, a)?;
    pi.check_len(dq0)?;
    let grid = *a.grid();
    grid.check_len(dp.len())?;
    if let Some(bad) = dp.iter().find(|v| v.len() != a.dim()) {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: bad.len(),
        });
    }
    let (dq, end) = march_linearized(pi, a, dp, dq0);
    if grid.is_periodic() {
        let gap = end.iter().zip(dq0).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        if gap > COTANGENT_TOL * scale {
            return Err(Error::NonClosingTangents {
                closed: 0,
                required: 1,
            });
        }
    }
    TangentVector::new(grid, dq, dp.to_vec())
}

/// Node-wise residual `dq' - sharp_derivative(q, dq, p) - sharp(q, dp)`,
/// computed with the grid derivative.
pub fn linearized_residual(
    pi: &BivectorField,
    a: &PathSample,
    d: &TangentVector,
) -> Result<Vec<Vec<f64>>> {
    if a.dim() != pi.dim() {
        return Err(Error::DimensionMismatch {
            expected: pi.dim(),
            found: a.dim(),
        });
    }
    d.check_compatible(a.grid(), a.dim())?;
    let ddq = a.grid().differentiate_vectors(d.dq())?;
    Ok((0..a.grid().len())
        .map(|i| {
            let at = pi.at_unchecked(&a.q()[i]);
            let lin = at.sharp_derivative(&d.dq()[i], &a.p()[i]);
            let src = at.sharp(&d.dp()[i]);
            (0..a.dim()).map(|c| ddq[i][c] - lin[c] - src[c]).collect()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmegaReport {
    /// Largest `|omega|` over pairs of tangent vectors.
    pub max_omega: f64,
    /// Largest `|omega|` after breaking the first vector of each pair.
    pub max_omega_broken: f64,
    pub pairs: usize,
    /// Sampled tangent vectors that failed to close up and were discarded.
    pub non_closing: usize,
    pub scale: f64,
}

fn random_periodic_covectors(grid: &Grid, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let series: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
        .map(|_| {
            let cos = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let sin = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            (cos, sin)
        })
        .collect();
    grid.times()
        .into_iter()
        .map(|t| series.iter().map(|(c, s)| trig_sum(c, s, t)).collect())
        .collect()
}

/// Samples `2 * trials` tangent vectors to the cotangent loop `a` and reports
/// the largest `|omega|` over consecutive pairs.
///
/// Each vector starts from random periodic `dp` and random `dq0`; a constant
/// shift of `dp` is then chosen by least squares so that `dq` closes up.
/// Vectors that still fail to close are counted and discarded. The broken
/// variant adds `cos(2 pi t)` to the first component of `dq`, which violates
/// the linearized equation.
pub fn lagrangian_omega_test(
    pi: &BivectorField,
    a: &PathSample,
    trials: usize,
    seed: u64,
) -> Result<OmegaReport> {
    let grid = *a.grid();
    if !grid.is_periodic() {
        return Err(Error::InvalidGrid("the omega test needs a periodic grid".into()));
    }
    let scale = require_cotangent(pi, a)?;
    let n = a.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // response of the closure gap to a constant dp = e_k
    let zero = vec![0.0; n];
    let mut response = DMatrix::zeros(n, n);
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        let (_, end) = march_linearized(pi, a, &vec![e; grid.len()], &zero);
        for r in 0..n {
            response[(r, k)] = end[r];
        }
    }
    let svd = response.svd(true, true);

    let wanted = 2 * trials;
    let mut tangents = Vec::with_capacity(wanted);
    let mut non_closing = 0;
    let mut attempts = 0;
    while tangents.len() < wanted && attempts < 4 * wanted.max(1) {
        attempts += 1;
        let mut dp = random_periodic_covectors(&grid, n, &mut rng);
        let dq0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (_, end) = march_linearized(pi, a, &dp, &dq0);
        let gap = DVector::from_iterator(n, end.iter().zip(&dq0).map(|(e, s)| s - e));
        let shift = svd
            .solve(&gap, 1e-12)
            .map_err(|e| Error::InvalidGrid(e.to_string()))?;
        for v in dp.iter_mut() {
            for (x, c) in v.iter_mut().zip(shift.iter()) {
                *x += c;
            }
        }
        match linearized_tangent(pi, a, &dp, &dq0) {
            Ok(t) => tangents.push(t),
            Err(Error::NonClosingTangents { .. }) => non_closing += 1,
            Err(e) => return Err(e),
        }
    }
    if tangents.len() < wanted {
        return Err(Error::NonClosingTangents {
            closed: tangents.len(),
            required: wanted,
        });
    }

    let mut max_omega = 0.0_f64;
    let mut max_omega_broken = 0.0_f64;
    for pair in tangents.chunks(2) {
        let (d1, d2) = (&pair[0], &pair[1]);
        max_omega = max_omega.max(omega(d1, d2)?.abs());
        let broken_dq = d1
            .dq()
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let mut v = v.clone();
                v[0] += (2.0 * std::f64::consts::PI * grid.time(i)).cos();
                v
            })
            .collect();
        let broken = TangentVector::new(grid, broken_dq, d1.dp().to_vec())?;
        max_omega_broken = max_omega_broken.max(omega(&broken, d2)?.abs());
    }
    Ok(OmegaReport {
        max_omega,
        max_omega_broken,
        pairs: trials,
        non_closing,
        scale,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeResult {
    pub eps: f64,
    pub modes: usize,
    pub res_u: f64,
    pub res_v: f64,
    pub res_uv: f64,
    pub holonomy_uv: f64,
}

/// Best sup-norm defect reachable from `base` by Fourier corrections, and
/// the corrected loop.
fn gauss_newton_probe(
    pi: &BivectorField,
    base: &[f64],
    modes: usize,
    bound: f64,
    grid: &Grid,
) -> Result<(f64, PathSample)> {
    let n = pi.dim();
    let len = grid.len();
    let unknowns = 2 * n * modes * 2;
    let basis: Vec<Vec<f64>> = (0..2 * modes)
        .map(|m| {
            let k = (m / 2 + 1) as f64;
            grid.times()
                .into_iter()
                .map(|t| {
                    let w = 2.0 * std::f64::consts::PI * k * t;
                    if m % 2 == 0 {
                        w.cos()
                    } else {
                        w.sin()
                    }
                })
                .collect()
        })
        .collect();
    // unknown u drives component u / (2 modes) of (q, p) with basis u % (2 modes)
    let build = |theta: &[f64]| -> PathSample {
        let mut state = vec![base.to_vec(); len];
        for (u, c) in theta.iter().enumerate() {
            let comp = u / (2 * modes);
            for (i, s) in state.iter_mut().enumerate() {
                s[comp] += c * basis[u % (2 * modes)][i];
            }
        }
        let q = state.iter().map(|s| s[..n].to_vec()).collect();
        let p = state.iter().map(|s| s[n..].to_vec()).collect();
        PathSample::from_parts(*grid, n, q, p)
    };
    let residual = |a: &PathSample| -> Result<Vec<f64>> {
        Ok(cotangent_defect(pi, a)?.concat())
    };

    let mut theta = vec![0.0; unknowns];
    let mut path = build(&theta);
    let mut r = residual(&path)?;
    let sup = |r: &[f64]| r.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let mut history = vec![sup(&r)];
    let mut best = (history[0], path.clone());
    for _ in 0..50 {
        if best.0 == 0.0 {
            break;
        }
        let mut jac = DMatrix::zeros(len * n, unknowns);
        let dqs: Vec<Vec<f64>> = basis.iter().map(|b| grid.differentiate_unchecked(b)).collect();
        for u in 0..unknowns {
            let comp = u / (2 * modes);
            let b = u % (2 * modes);
            for i in 0..len {
                let at = pi.at_unchecked(&path.q()[i]);
                let mut col = vec![0.0; n];
                if comp < n {
                    let mut dq = vec![0.0; n];
                    dq[comp] = basis[b][i];
                    let lin = at.sharp_derivative(&dq, &path.p()[i]);
                    for c in 0..n {
                        col[c] -= lin[c];
                    }
                    col[comp] += dqs[b][i];
                } else {
                    let mut dp = vec![0.0; n];
                    dp[comp - n] = basis[b][i];
                    let src = at.sharp(&dp);
                    for c in 0..n {
                        col[c] -= src[c];
                    }
                }
                for c in 0..n {
                    jac[(i * n + c, u)] = col[c];
                }
            }
        }
        let rhs = DVector::from_iterator(r.len(), r.iter().map(|x| -x));
        let step = jac
            .svd(true, true)
            .solve(&rhs, 1e-12)
            .map_err(|_| Error::OptimizerDivergence {
                history: history.clone(),
            })?;
        for (t, s) in theta.iter_mut().zip(step.iter()) {
            *t = (*t + s).clamp(-bound, bound);
        }
        path = build(&theta);
        r = residual(&path)?;
        let now = sup(&r);
        history.push(now);
        if !now.is_finite() || now > 1e3 * history[0].max(bound) {
            return Err(Error::OptimizerDivergence { history });
        }
        if now < best.0 {
            best = (now, path.clone());
        }
        if step.amax() <= 1e-15 * bound.max(1e-300) {
            break;
        }
    }
    Ok(best)
}

/// Probes the tangent cone of cotangent loops of `pi = x dx ^ dy` at the
/// constant zero loop along `u = (eps,0,0,0)`, `v = (0,0,0,eps)` and `u + v`.
pub fn tangent_cone_probe(eps: f64, modes: usize, grid: &Grid) -> Result<ProbeResult> {
    if !(eps > 0.0 && eps <= 0.1) {
        return Err(Error::ParameterOutOfRange {
            name: "eps",
            value: eps,
            expected: "0 < eps <= 0.1",
        });
    }
    if modes < 4 {
        return Err(Error::ParameterOutOfRange {
            name: "modes",
            value: modes as f64,
            expected: "modes >= 4",
        });
    }
    if grid.kind() != BoundaryKind::Periodic {
        return Err(Error::InvalidGrid("the probe needs a periodic grid".into()));
    }
    if 2 * modes >= grid.intervals() {
        return Err(Error::InvalidGrid(format!(
            "{modes} modes are not resolved on {} nodes",
            grid.intervals()
        )));
    }
    let pi = presets::x_dx_dy();
    let bound = eps * eps;
    let (res_u, _) = gauss_newton_probe(&pi, &[eps, 0.0, 0.0, 0.0], modes, bound, grid)?;
    let (res_v, _) = gauss_newton_probe(&pi, &[0.0, 0.0, 0.0, eps], modes, bound, grid)?;
    let (res_uv, loop_uv) = gauss_newton_probe(&pi, &[eps, 0.0, 0.0, eps], modes, bound, grid)?;
    let holonomy_uv = grid.integrate_unchecked(&column(loop_uv.p(), 1));
    Ok(ProbeResult {
        eps,
        modes,
        res_u,
        res_v,
        res_uv,
        holonomy_uv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Polynomial;
    use crate::pathspace::is_cotangent;
    use std::f64::consts::PI;

    fn circle_loop(grid: Grid) -> PathSample {
        let w = 2.0 * PI;
        let times = grid.times();
        let q = times.iter().map(|t| vec![(w * t).cos(), (w * t).sin()]).collect();
        let p = times
            .iter()
            .map(|t| vec![-w * (w * t).cos(), -w * (w * t).sin()])
            .collect();
        PathSample::new(grid, q, p).unwrap()
    }

    #[test]
    fn shoot_with_zero_anchor() {
        let pi = BivectorField::zero(3).unwrap();
        let g = Grid::semi_free(128).unwrap();
        let r = shoot_through(&pi, &[0.1, 0.2, 0.3], &[1.0, -1.0, 0.5], 0.45, &g).unwrap();
        assert!(r.path.q().iter().all(|q| q == &vec![0.1, 0.2, 0.3]));
        assert!(r.defect_max <= 1e-12);
        assert_eq!(r.through_point_error, 0.0);
    }

    #[test]
    fn shoot_symplectic_plane() {
        let pi = presets::symplectic_plane();
        for g in [Grid::semi_free(128).unwrap(), Grid::periodic(128).unwrap()] {
            let r = shoot_through(&pi, &[0.0, 0.0], &[1.0, 0.0], 0.45, &g).unwrap();
            assert!(r.defect_max <= 1e-7, "{}", r.defect_max);
            assert!(r.through_point_error <= 1e-12);
            // y(s) = (0, -(s - 1/2))
            let reparam = bump_reparam(0.45, &g).unwrap();
            for (q, psi) in r.path.q().iter().zip(&reparam.psi) {
                assert!(q[0].abs() <= 1e-14 && (q[1] + psi - 0.5).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn shoot_so3_is_cotangent() {
        let pi = presets::so3();
        let g = Grid::semi_free(128).unwrap();
        let r = shoot_through(&pi, &[0.3, -0.8, 0.5], &[1.2, 0.4, -0.9], 0.45, &g).unwrap();
        let scale = r.path.scale_for(&pi);
        assert!(is_cotangent(&pi, &r.path, 1e-6 * scale).unwrap(), "{}", r.defect_max);
        assert!(r.through_point_error <= 1e-6);
    }

    #[test]
    fn shoot_kernel_covector_gives_constant_loop() {
        // sharp(q, p) = 0 for p parallel to q under so(3)
        let pi = presets::so3();
        let g = Grid::periodic(64).unwrap();
        let q = [0.2, 0.4, -0.4];
        let r = shoot_through(&pi, &q, &[0.5, 1.0, -1.0], 0.3, &g).unwrap();
        assert!(r.path.q().iter().all(|x| x.iter().zip(&q).all(|(a, b)| (a - b).abs() <= 1e-14)));
    }

    #[test]
    fn shoot_rejects_bad_eps() {
        let g = Grid::semi_free(128).unwrap();
        let pi = presets::so3();
        assert!(shoot_through(&pi, &[0.0; 3], &[0.0; 3], 0.6, &g).is_err());
        assert!(shoot_through(&pi, &[0.0; 2], &[0.0; 3], 0.3, &g).is_err());
    }

    #[test]
    fn shoot_detects_blow_up() {
        // y1' = y1^2 p2 blows up from y1 = 20 within the window
        let pi = BivectorField::from_upper(2, [((0, 1), Polynomial::monomial(1.0, vec![2, 0]))]).unwrap();
        let g = Grid::semi_free(64).unwrap();
        let err = shoot_through(&pi, &[20.0, 0.0], &[0.0, 1.0], 0.45, &g).unwrap_err();
        assert!(matches!(err, Error::OdeBlowUp { .. }));
    }

    #[test]
    fn linearized_on_constant_path() {
        let pi = presets::symplectic_plane();
        let g = Grid::semi_free(128).unwrap();
        let a = PathSample::constant(g, &[0.0, 0.0]).unwrap();
        let dp: Vec<Vec<f64>> = g
            .times()
            .into_iter()
            .map(|t| {
                let b = crate::functionals::flat_bump(t);
                vec![b, -2.0 * b * t]
            })
            .collect();
        let d = linearized_tangent(&pi, &a, &dp, &[0.5, 1.0]).unwrap();
        // dq(t) = dq0 + int_0^t (dp2, -dp1)
        let mut acc = [0.5, 1.0];
        let f = |t: f64| {
            let b = crate::functionals::flat_bump(t);
            [-2.0 * b * t, -b]
        };
        for i in 0..g.intervals() {
            let (t0, t1) = (g.time(i), g.time(i + 1));
            acc[0] += crate::pathspace::gauss_legendre(&|t| f(t)[0], t0, t1);
            acc[1] += crate::pathspace::gauss_legendre(&|t| f(t)[1], t0, t1);
            let got = &d.dq()[i + 1];
            assert!((got[0] - acc[0]).abs() <= 1e-8 && (got[1] - acc[1]).abs() <= 1e-8);
        }

        let still = linearized_tangent(&pi, &a, &vec![vec![0.0; 2]; g.len()], &[0.3, -0.2]).unwrap();
        assert!(still.dq().iter().all(|v| v == &vec![0.3, -0.2]));
    }

    #[test]
    fn linearized_so3_residual() {
        let pi = presets::so3();
        let g = Grid::semi_free(128).unwrap();
        let a = shoot_through(&pi, &[0.3, -0.8, 0.5], &[1.2, 0.4, -0.9], 0.45, &g)
            .unwrap()
            .path;
        let dp: Vec<Vec<f64>> = g
            .times()
            .into_iter()
            .map(|t| {
                let b = crate::functionals::flat_bump(t);
                vec![b * (2.0 * PI * t).sin(), b, -b * t]
            })
            .collect();
        let d = linearized_tangent(&pi, &a, &dp, &[0.1, 0.2, -0.3]).unwrap();
        let res = linearized_residual(&pi, &a, &d).unwrap();
        let scale = a.scale_for(&pi);
        assert!(sup_norm(&res) <= 1e-6 * scale, "{}", sup_norm(&res));
    }

    #[test]
    fn linearized_requires_cotangent() {
        let pi = presets::symplectic_plane();
        let g = Grid::periodic(32).unwrap();
        let a = PathSample::new(g, vec![vec![0.0, 0.0]; 32], vec![vec![1.0, 0.0]; 32]).unwrap();
        assert!(matches!(
            linearized_tangent(&pi, &a, &vec![vec![0.0; 2]; 32], &[0.0, 0.0]),
            Err(Error::NotCotangent { .. })
        ));
    }

    #[test]
    fn omega_vanishes_on_circle_loop() {
        let pi = presets::symplectic_plane();
        let a = circle_loop(Grid::periodic(128).unwrap());
        let report = lagrangian_omega_test(&pi, &a, 20, 11).unwrap();
        assert!(report.max_omega <= 1e-6 * report.scale, "{report:?}");
        assert!(report.max_omega_broken > 1e-3 * report.scale, "{report:?}");
        assert_eq!(report.non_closing, 0);
    }

    #[test]
    fn omega_is_deterministic() {
        let pi = presets::symplectic_plane();
        let a = circle_loop(Grid::periodic(64).unwrap());
        assert_eq!(
            lagrangian_omega_test(&pi, &a, 3, 5).unwrap(),
            lagrangian_omega_test(&pi, &a, 3, 5).unwrap()
        );
    }

    #[test]
    fn probe_contract() {
        let g = Grid::periodic(128).unwrap();
        let r = tangent_cone_probe(1e-2, 8, &g).unwrap();
        assert!(r.res_u <= 1e-9 && r.res_v <= 1e-9, "{r:?}");
        assert!(r.res_uv >= 0.4e-4, "{r:?}");
        assert!((r.holonomy_uv - 1e-2).abs() <= 1e-4, "{r:?}");
        assert!(tangent_cone_probe(0.2, 8, &g).is_err());
        assert!(tangent_cone_probe(0.01, 3, &g).is_err());
        assert!(tangent_cone_probe(0.01, 8, &Grid::semi_free(128).unwrap()).is_err());
    }
}
