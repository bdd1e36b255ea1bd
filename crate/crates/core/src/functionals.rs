//! Local functionals `F(a) = int f(t, q, q', p, p') dt` of first-order jets,
//! their variational gradients and a finite-difference oracle.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::Polynomial;
use crate::bivector::BivectorField;
use crate::error::{Error, Result};
use crate::pathspace::{dot, transpose, BoundaryKind, Grid, PathSample, TangentVector};

/// A first-order jet of a path at time `t`.
#[derive(Debug, Clone, Copy)]
pub struct Jet<'a> {
    pub t: f64,
    pub q: &'a [f64],
    pub dq: &'a [f64],
    pub p: &'a [f64],
    pub dp: &'a [f64],
}

/// Partial derivatives of an integrand with respect to `q`, `q'`, `p`, `p'`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotGradients {
    pub q: Vec<f64>,
    pub dq: Vec<f64>,
    pub p: Vec<f64>,
    pub dp: Vec<f64>,
}

impl SlotGradients {
    pub fn zero(n: usize) -> Self {
        Self {
            q: vec![0.0; n],
            dq: vec![0.0; n],
            p: vec![0.0; n],
            dp: vec![0.0; n],
        }
    }

    fn slot(&self, k: usize) -> &[f64] {
        match k {
            0 => &self.q,
            1 => &self.dq,
            2 => &self.p,
            _ => &self.dp,
        }
    }
}

const SLOT_NAMES: [&str; 4] = ["dF/dq", "dF/dq'", "dF/dp", "dF/dp'"];

pub type Integrand = Arc<dyn Fn(&Jet) -> f64 + Send + Sync>;
pub type SlotFn = Arc<dyn Fn(&Jet) -> SlotGradients + Send + Sync>;

/// A local functional with an analytically supplied gradient of its integrand.
#[derive(Clone)]
pub struct LocalFunctional {
    n: usize,
    label: String,
    integrand: Integrand,
    slots: SlotFn,
}

impl fmt::Debug for LocalFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LocalFunctional")
            .field("n", &self.n)
            .field("label", &self.label)
            .finish_non_exhaustive()
    }
}

/// Tolerance of the construction-time slot check.
pub const SLOT_CHECK_TOL: f64 = 1e-6;

impl LocalFunctional {
    /// Wraps an integrand and its slot gradients, checking the latter against
    /// central differences at a few seeded random jets.
    pub fn new(
        n: usize,
        label: impl Into<String>,
        integrand: Integrand,
        slots: SlotFn,
    ) -> Result<Self> {
        let functional = Self {
            n,
            label: label.into(),
            integrand,
            slots,
        };
        functional.check_slots()?;
        Ok(functional)
    }

    fn check_slots(&self) -> Result<()> {
        let n = self.n;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5107);
        for _ in 0..6 {
            let t: f64 = rng.gen_range(0.0..1.0);
            let mut x: Vec<Vec<f64>> = (0..4)
                .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let eval = |x: &[Vec<f64>]| {
                (self.integrand)(&Jet {
                    t,
                    q: &x[0],
                    dq: &x[1],
                    p: &x[2],
                    dp: &x[3],
                })
            };
            let analytic = (self.slots)(&Jet {
                t,
                q: &x[0],
                dq: &x[1],
                p: &x[2],
                dp: &x[3],
            });
            for slot in 0..4 {
                let exact = analytic.slot(slot);
                if exact.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: exact.len(),
                    });
                }
                for c in 0..n {
                    let x0 = x[slot][c];
                    let h = 1e-5 * x0.abs().max(1.0);
                    x[slot][c] = x0 + h;
                    let up = eval(&x);
                    x[slot][c] = x0 - h;
                    let down = eval(&x);
                    x[slot][c] = x0;
                    let fd = (up - down) / (2.0 * h);
                    let error = (fd - exact[c]).abs() / exact[c].abs().max(1.0);
                    if !(error <= SLOT_CHECK_TOL) {
                        return Err(Error::InconsistentSlotGradient {
                            label: self.label.clone(),
                            slot: SLOT_NAMES[slot],
                            error,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn integrand_at(&self, jet: &Jet) -> f64 {
        (self.integrand)(jet)
    }

    pub fn slot_gradients_at(&self, jet: &Jet) -> SlotGradients {
        (self.slots)(jet)
    }

    fn check_path(&self, a: &PathSample) -> Result<()> {
        if a.dim() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: a.dim(),
            });
        }
        Ok(())
    }

    fn integrand_values(&self, a: &PathSample) -> Vec<f64> {
        let dq = a.q_prime();
        let dp = a.p_prime();
        let grid = a.grid();
        (0..grid.len())
            .map(|i| {
                (self.integrand)(&Jet {
                    t: grid.time(i),
                    q: &a.q()[i],
                    dq: &dq[i],
                    p: &a.p()[i],
                    dp: &dp[i],
                })
            })
            .collect()
    }

    pub fn evaluate(&self, a: &PathSample) -> Result<f64> {
        self.check_path(a)?;
        Ok(a.grid().integrate_unchecked(&self.integrand_values(a)))
    }

    /// Variational gradient `A = df/dq - (df/dq')'`, `B = df/dp - (df/dp')'`,
    /// with boundary covectors `df/dq'` at the endpoints on semi-free grids.
    pub fn gradient(&self, a: &PathSample) -> Result<GradientResult> {
        self.check_path(a)?;
        let grid = *a.grid();
        let n = self.n;
        let dq = a.q_prime();
        let dp = a.p_prime();
        let slots: Vec<SlotGradients> = (0..grid.len())
            .map(|i| {
                (self.slots)(&Jet {
                    t: grid.time(i),
                    q: &a.q()[i],
                    dq: &dq[i],
                    p: &a.p()[i],
                    dp: &dp[i],
                })
            })
            .collect();
        let euler_lagrange = |value: fn(&SlotGradients) -> &Vec<f64>,
                              rate: fn(&SlotGradients) -> &Vec<f64>| {
            let columns: Vec<Vec<f64>> = (0..n)
                .map(|c| {
                    let r: Vec<f64> = slots.iter().map(|s| rate(s)[c]).collect();
                    let dr = grid.differentiate_unchecked(&r);
                    slots.iter().zip(dr).map(|(s, d)| value(s)[c] - d).collect()
                })
                .collect();
            transpose(&columns, grid.len())
        };
        let a_part = euler_lagrange(|s| &s.q, |s| &s.dq);
        let b_part = euler_lagrange(|s| &s.p, |s| &s.dp);
        let (alpha0, alpha1) = match grid.kind() {
            BoundaryKind::Periodic => (vec![0.0; n], vec![0.0; n]),
            BoundaryKind::SemiFree => (slots[0].dq.clone(), slots[grid.len() - 1].dq.clone()),
        };
        Ok(GradientResult {
            grid,
            a: a_part,
            b: b_part,
            alpha0,
            alpha1,
        })
    }

    /// Finite-difference oracle for `d/de F(a + e d)` at `e = 0`: central
    /// differences at `e = 1e-3, 5e-4, 2.5e-4` combined by two Richardson steps.
    pub fn directional_derivative(&self, a: &PathSample, d: &TangentVector) -> Result<f64> {
        self.check_path(a)?;
        d.check_compatible(a.grid(), self.n)?;
        let grid = a.grid();
        let central = |eps: f64| {
            let up = grid.integrate_unchecked(&self.integrand_values(&a.displaced(d, eps)));
            let down = grid.integrate_unchecked(&self.integrand_values(&a.displaced(d, -eps)));
            (up - down) / (2.0 * eps)
        };
        let d1 = central(1e-3);
        let d2 = central(5e-4);
        let d3 = central(2.5e-4);
        let r1 = (4.0 * d2 - d1) / 3.0;
        let r2 = (4.0 * d3 - d2) / 3.0;
        Ok((16.0 * r2 - r1) / 15.0)
    }

    /// `F + G`, with summed integrands and slot gradients.
    pub fn add(&self, other: &LocalFunctional) -> Result<LocalFunctional> {
        self.combine(other, 1.0, 1.0)
    }

    /// `self_weight * F + other_weight * G`.
    pub fn combine(
        &self,
        other: &LocalFunctional,
        self_weight: f64,
        other_weight: f64,
    ) -> Result<LocalFunctional> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        let (f, g) = (self.integrand.clone(), other.integrand.clone());
        let (sf, sg) = (self.slots.clone(), other.slots.clone());
        let mix = move |x: &[f64], y: &[f64]| -> Vec<f64> {
            x.iter()
                .zip(y)
                .map(|(x, y)| self_weight * x + other_weight * y)
                .collect()
        };
        Ok(LocalFunctional {
            n: self.n,
            label: format!("{self_weight}*({}) + {other_weight}*({})", self.label, other.label),
            integrand: Arc::new(move |j| self_weight * f(j) + other_weight * g(j)),
            slots: Arc::new(move |j| {
                let (x, y) = (sf(j), sg(j));
                SlotGradients {
                    q: mix(&x.q, &y.q),
                    dq: mix(&x.dq, &y.dq),
                    p: mix(&x.p, &y.p),
                    dp: mix(&x.dp, &y.dp),
                }
            }),
        })
    }
}

/// Sampled gradient `(A, B)` of a functional at a path, with the boundary
/// covectors `alpha0`, `alpha1` (zero on loops).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientResult {
    pub grid: Grid,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub alpha0: Vec<f64>,
    pub alpha1: Vec<f64>,
}

impl GradientResult {
    /// `int <A, dq> + <B, dp> dt + <alpha1, dq(1)> - <alpha0, dq(0)>`.
    pub fn pair(&self, d: &TangentVector) -> Result<f64> {
        d.check_compatible(&self.grid, self.alpha0.len())?;
        let integrand: Vec<f64> = (0..self.grid.len())
            .map(|i| dot(&self.a[i], &d.dq()[i]) + dot(&self.b[i], &d.dp()[i]))
            .collect();
        let bulk = self.grid.integrate_unchecked(&integrand);
        let last = self.grid.len() - 1;
        Ok(match self.grid.kind() {
            BoundaryKind::Periodic => bulk,
            BoundaryKind::SemiFree => {
                bulk + dot(&self.alpha1, &d.dq()[last]) - dot(&self.alpha0, &d.dq()[0])
            }
        })
    }

    pub fn max_abs_a(&self) -> f64 {
        crate::pathspace::sup_norm(&self.a)
    }

    pub fn max_abs_b(&self) -> f64 {
        crate::pathspace::sup_norm(&self.b)
    }
}

/// A scalar profile `f(t)` on `[0, 1]`.
#[derive(Clone)]
pub struct Profile {
    label: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    df: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Profile({})", self.label)
    }
}

/// `exp(-1/x)` for `x > 0`, else 0.
fn flat_ramp(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

fn flat_ramp_derivative(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp() / (x * x)
    } else {
        0.0
    }
}

/// Smooth step: 0 for `x <= 0`, 1 for `x >= 1`, flat at both ends.
pub fn smooth_step(x: f64) -> f64 {
    let a = flat_ramp(x);
    let b = flat_ramp(1.0 - x);
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

pub fn smooth_step_derivative(x: f64) -> f64 {
    let a = flat_ramp(x);
    let b = flat_ramp(1.0 - x);
    let (da, db) = (flat_ramp_derivative(x), -flat_ramp_derivative(1.0 - x));
    let s = a + b;
    if s == 0.0 {
        0.0
    } else {
        (da * s - a * (da + db)) / (s * s)
    }
}

/// The flat bump `exp(4 - 1/(t(1-t)))` on `(0, 1)`, equal to 1 at `t = 1/2`.
pub fn flat_bump(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        (4.0 - 1.0 / (t * (1.0 - t))).exp()
    }
}

impl Profile {
    /// A profile from a function and its derivative.
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            f: Arc::new(f),
            df: Arc::new(df),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("{c}"), move |_| c, |_| 0.0)
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// `sum_k c_k sin(k pi t)`, `k = 1, 2, ...`; vanishes at both ends.
    pub fn sine_series(coeffs: &[f64]) -> Self {
        let c = coeffs.to_vec();
        let dc = coeffs.to_vec();
        Self::new(
            format!("sine{coeffs:?}"),
            move |t| {
                c.iter()
                    .enumerate()
                    .map(|(k, c)| c * ((k + 1) as f64 * PI * t).sin())
                    .sum()
            },
            move |t| {
                dc.iter()
                    .enumerate()
                    .map(|(k, c)| {
                        let w = (k + 1) as f64 * PI;
                        c * w * (w * t).cos()
                    })
                    .sum()
            },
        )
    }

    /// `c0 + sum_k a_k cos(2 pi k t) + b_k sin(2 pi k t)`; periodic.
    pub fn fourier(c0: f64, cos: &[f64], sin: &[f64]) -> Self {
        let (a, b) = (cos.to_vec(), sin.to_vec());
        let (da, db) = (a.clone(), b.clone());
        Self::new(
            format!("fourier({c0};{cos:?};{sin:?})"),
            move |t| c0 + trig_sum(&a, &b, t),
            move |t| trig_sum_derivative(&da, &db, t),
        )
    }

    /// Flat bump times a Fourier series; vanishes with all derivatives at the
    /// endpoints.
    pub fn bumped_fourier(c0: f64, cos: &[f64], sin: &[f64]) -> Self {
        let inner = Self::fourier(c0, cos, sin);
        let (f, df) = (inner.f.clone(), inner.df.clone());
        let g = inner.f;
        Self::new(
            format!("bump*{}", inner.label),
            move |t| flat_bump(t) * f(t),
            move |t| flat_bump_derivative(t) * g(t) + flat_bump(t) * df(t),
        )
    }

    /// Equal to 1 on `[3/8, 5/8]` and to 0 outside `[1/4, 3/4]`.
    pub fn plateau() -> Self {
        Self::new(
            "plateau",
            |t| smooth_step(8.0 * (t - 0.25)) * smooth_step(8.0 * (0.75 - t)),
            |t| {
                8.0 * smooth_step_derivative(8.0 * (t - 0.25)) * smooth_step(8.0 * (0.75 - t))
                    - 8.0 * smooth_step(8.0 * (t - 0.25)) * smooth_step_derivative(8.0 * (0.75 - t))
            },
        )
    }

    /// Bump `c * beta(d (t - center))` with `beta(x) = exp(-1/(1 - x^2))`,
    /// normalized to unit integral under `grid`'s quadrature.
    pub fn dirac(d: u32, center: f64, grid: &Grid) -> Result<Self> {
        if d == 0 {
            return Err(Error::ParameterOutOfRange {
                name: "d",
                value: 0.0,
                expected: "d >= 1",
            });
        }
        let width = 1.0 / d as f64;
        if !(center - width >= 0.0 && center + width <= 1.0) {
            return Err(Error::ParameterOutOfRange {
                name: "center",
                value: center,
                expected: "[center - 1/d, center + 1/d] inside [0, 1]",
            });
        }
        let df = d as f64;
        let beta = move |t: f64| {
            let x = df * (t - center);
            if x.abs() < 1.0 {
                (-1.0 / (1.0 - x * x)).exp()
            } else {
                0.0
            }
        };
        let dbeta = move |t: f64| {
            let x = df * (t - center);
            if x.abs() < 1.0 {
                let u = 1.0 - x * x;
                (-1.0 / u).exp() * (-2.0 * x / (u * u)) * df
            } else {
                0.0
            }
        };
        let mass = grid.integrate_unchecked(&grid.times().into_iter().map(beta).collect::<Vec<_>>());
        if !(mass > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "grid too coarse to resolve a bump of width 1/{d}"
            )));
        }
        let c = 1.0 / mass;
        Ok(Self::new(
            format!("dirac(d={d}, center={center})"),
            move |t| c * beta(t),
            move |t| c * dbeta(t),
        ))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        (self.df)(t)
    }

    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        grid.times().into_iter().map(|t| self.eval(t)).collect()
    }

    pub(crate) fn boundary_check(&self, kind: BoundaryKind) -> Result<()> {
        if kind == BoundaryKind::SemiFree {
            let (f0, f1) = (self.eval(0.0), self.eval(1.0));
            if f0.abs() > 1e-12 || f1.abs() > 1e-12 {
                return Err(Error::BoundaryViolation(format!(
                    "profile `{}` must vanish at t = 0 and t = 1 (got {f0:e}, {f1:e})",
                    self.label
                )));
            }
        }
        Ok(())
    }
}

pub fn flat_bump_derivative(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        let u = t * (1.0 - t);
        flat_bump(t) * (1.0 - 2.0 * t) / (u * u)
    }
}

pub(crate) fn trig_sum(a: &[f64], b: &[f64], t: f64) -> f64 {
    let mut acc = 0.0;
    for (k, c) in a.iter().enumerate() {
        acc += c * (2.0 * PI * (k + 1) as f64 * t).cos();
    }
    for (k, s) in b.iter().enumerate() {
        acc += s * (2.0 * PI * (k + 1) as f64 * t).sin();
    }
    acc
}

pub(crate) fn trig_sum_derivative(a: &[f64], b: &[f64], t: f64) -> f64 {
    let mut acc = 0.0;
    for (k, c) in a.iter().enumerate() {
        let w = 2.0 * PI * (k + 1) as f64;
        acc -= c * w * (w * t).sin();
    }
    for (k, s) in b.iter().enumerate() {
        let w = 2.0 * PI * (k + 1) as f64;
        acc += s * w * (w * t).cos();
    }
    acc
}

fn unit(n: usize, k: usize, value: f64) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[k] = value;
    v
}

/// `F_{f,s}(a) = int f(t) (sum_j pi_sj(q) p_j - q_s') dt`, which vanishes on
/// cotangent paths. `s` is 0-based.
pub fn constraint_functional(
    pi: &BivectorField,
    s: usize,
    profile: &Profile,
    kind: BoundaryKind,
) -> Result<LocalFunctional> {
    let n = pi.dim();
    if s >= n {
        return Err(Error::IndexOutOfRange { index: s, bound: n });
    }
    profile.boundary_check(kind)?;
    let pi = Arc::new(pi.clone());
    let (pi_f, pi_g) = (pi.clone(), pi);
    let (f, g) = (profile.clone(), profile.clone());
    LocalFunctional::new(
        n,
        format!("F[{}, s={}]", profile.label(), s + 1),
        Arc::new(move |j: &Jet| {
            let sharp_s: f64 = pi_f.at_unchecked(j.q).sharp(j.p)[s];
            f.eval(j.t) * (sharp_s - j.dq[s])
        }),
        Arc::new(move |j: &Jet| {
            let at = pi_g.at_unchecked(j.q);
            let w = g.eval(j.t);
            SlotGradients {
                q: (0..n)
                    .map(|k| w * (0..n).map(|jj| at.dpi(s, jj, k) * j.p[jj]).sum::<f64>())
                    .collect(),
                dq: unit(n, s, -w),
                p: (0..n).map(|jj| w * at.pi(s, jj)).collect(),
                dp: vec![0.0; n],
            }
        }),
    )
}

/// `F(a) = int dh(q') dt = h(q(1)) - h(q(0))`; its gradient vanishes.
pub fn casimir_functional(h: &Polynomial) -> Result<LocalFunctional> {
    let n = h.nvars();
    let grad: Vec<Polynomial> = (0..n).map(|k| h.partial(k)).collect::<Result<_>>()?;
    let hess: Vec<Vec<Polynomial>> = grad
        .iter()
        .map(|g| (0..n).map(|k| g.partial(k)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let grad = Arc::new(grad);
    let hess = Arc::new(hess);
    let g2 = grad.clone();
    LocalFunctional::new(
        n,
        format!("casimir[{h}]"),
        Arc::new(move |j: &Jet| {
            grad.iter()
                .zip(j.dq)
                .map(|(g, v)| g.eval_unchecked(j.q) * v)
                .sum()
        }),
        Arc::new(move |j: &Jet| SlotGradients {
            q: (0..n)
                .map(|k| {
                    (0..n)
                        .map(|m| hess[m][k].eval_unchecked(j.q) * j.dq[m])
                        .sum()
                })
                .collect(),
            dq: g2.iter().map(|g| g.eval_unchecked(j.q)).collect(),
            p: vec![0.0; n],
            dp: vec![0.0; n],
        }),
    )
}

/// The integrand `d/dt g(t, q(t))` for a polynomial `g` in `(t, q_1..q_n)`
/// vanishing at `t = 0` and `t = 1`; the functional is zero on semi-free
/// paths although its integrand is not.
pub fn total_derivative_functional(g: &Polynomial) -> Result<LocalFunctional> {
    if g.nvars() < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: g.nvars(),
        });
    }
    let n = g.nvars() - 1;
    check_vanishes_at_time_ends(g)?;
    let gt = g.partial(0)?;
    let gq: Vec<Polynomial> = (1..=n).map(|k| g.partial(k)).collect::<Result<_>>()?;
    let gtq: Vec<Polynomial> = (1..=n).map(|k| gt.partial(k)).collect::<Result<_>>()?;
    let gqq: Vec<Vec<Polynomial>> = gq
        .iter()
        .map(|p| (1..=n).map(|k| p.partial(k)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let gq = Arc::new(gq);
    let gq_slot = gq.clone();
    let point = |j: &Jet| -> Vec<f64> { std::iter::once(j.t).chain(j.q.iter().copied()).collect() };
    LocalFunctional::new(
        n,
        format!("d/dt[{g}]"),
        Arc::new(move |j: &Jet| {
            let x = point(j);
            gt.eval_unchecked(&x)
                + gq.iter()
                    .zip(j.dq)
                    .map(|(p, v)| p.eval_unchecked(&x) * v)
                    .sum::<f64>()
        }),
        Arc::new(move |j: &Jet| {
            let x = point(j);
            SlotGradients {
                q: (0..n)
                    .map(|k| {
                        gtq[k].eval_unchecked(&x)
                            + (0..n)
                                .map(|m| gqq[m][k].eval_unchecked(&x) * j.dq[m])
                                .sum::<f64>()
                    })
                    .collect(),
                dq: gq_slot.iter().map(|p| p.eval_unchecked(&x)).collect(),
                p: vec![0.0; n],
                dp: vec![0.0; n],
            }
        }),
    )
}

/// Checks `g(0, q) = g(1, q) = 0` identically via the coefficients of `g`.
fn check_vanishes_at_time_ends(g: &Polynomial) -> Result<()> {
    let mut at_zero: std::collections::BTreeMap<Vec<u32>, f64> = Default::default();
    let mut at_one: std::collections::BTreeMap<Vec<u32>, f64> = Default::default();
    let mut size = 0.0_f64;
    for (exps, coef) in g.terms() {
        size = size.max(coef.abs());
        let rest = exps[1..].to_vec();
        if exps[0] == 0 {
            *at_zero.entry(rest.clone()).or_default() += coef;
        }
        *at_one.entry(rest).or_default() += coef;
    }
    let worst = at_zero
        .values()
        .chain(at_one.values())
        .fold(0.0_f64, |m, c| m.max(c.abs()));
    if worst > 1e-12 * size.max(1.0) {
        return Err(Error::BoundaryViolation(format!(
            "g = {g} does not vanish at t = 0 and t = 1"
        )));
    }
    Ok(())
}

/// `F(a) = int w(t) P(q, q', p, p') dt` for a polynomial `P` in `4n`
/// variables ordered `q_1..q_n, q'_1..q'_n, p_1..p_n, p'_1..p'_n`.
pub fn polynomial_functional(weight: &Profile, poly: &Polynomial) -> Result<LocalFunctional> {
    if poly.nvars() == 0 || poly.nvars() % 4 != 0 {
        return Err(Error::DimensionMismatch {
            expected: 4 * (poly.nvars() / 4).max(1),
            found: poly.nvars(),
        });
    }
    let n = poly.nvars() / 4;
    let partials: Vec<Polynomial> = (0..4 * n).map(|k| poly.partial(k)).collect::<Result<_>>()?;
    let partials = Arc::new(partials);
    let p = poly.clone();
    let (w, w2) = (weight.clone(), weight.clone());
    let stack = |j: &Jet| -> Vec<f64> {
        j.q.iter()
            .chain(j.dq)
            .chain(j.p)
            .chain(j.dp)
            .copied()
            .collect()
    };
    LocalFunctional::new(
        n,
        format!("{}*[{poly}]", weight.label()),
        Arc::new(move |j: &Jet| w.eval(j.t) * p.eval_unchecked(&stack(j))),
        Arc::new(move |j: &Jet| {
            let x = stack(j);
            let c = w2.eval(j.t);
            let g: Vec<f64> = partials.iter().map(|d| c * d.eval_unchecked(&x)).collect();
            SlotGradients {
                q: g[..n].to_vec(),
                dq: g[n..2 * n].to_vec(),
                p: g[2 * n..3 * n].to_vec(),
                dp: g[3 * n..].to_vec(),
            }
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bivector::presets;
    use crate::pathspace::sup_norm;

    /// Variable `k` of the 4n-variable jet polynomial ring.
    fn jv(n: usize, k: usize) -> Polynomial {
        Polynomial::variable(4 * n, k).unwrap()
    }

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

    fn bumpy_path(grid: Grid) -> PathSample {
        let times = grid.times();
        let q = times
            .iter()
            .map(|&t| {
                let b = flat_bump(t);
                vec![0.3 + b * (2.0 * PI * t).sin(), -0.1 + 0.5 * b * t, b * b]
            })
            .collect();
        let p = times
            .iter()
            .map(|&t| {
                let b = flat_bump(t);
                vec![b, b * (PI * t).cos(), -0.7 * b * t]
            })
            .collect();
        PathSample::new(grid, q, p).unwrap()
    }

    fn bumpy_tangent(grid: Grid) -> TangentVector {
        let times = grid.times();
        let dq = times
            .iter()
            .map(|&t| {
                let s = smooth_step(t);
                vec![0.5 - s, 0.2 + flat_bump(t) * t, -0.4 * s]
            })
            .collect();
        let dp = times
            .iter()
            .map(|&t| {
                let b = flat_bump(t);
                vec![b * t, -b, b * (3.0 * t).sin()]
            })
            .collect();
        TangentVector::new(grid, dq, dp).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let g = Grid::semi_free(128).unwrap();
        let one = polynomial_functional(&Profile::constant(1.0), &Polynomial::constant(12, 1.0))
            .unwrap();
        assert_eq!(one.evaluate(&bumpy_path(g)).unwrap(), 1.0);

        // <p, q'>
        let n = 2;
        let pq = jv(n, 4).mul(&jv(n, 2)).unwrap().add(&jv(n, 5).mul(&jv(n, 3)).unwrap()).unwrap();
        let f = polynomial_functional(&Profile::constant(1.0), &pq).unwrap();
        let circle = circle_loop(Grid::periodic(128).unwrap());
        assert!(f.evaluate(&circle).unwrap().abs() <= 1e-8);

        let td = total_derivative_functional(
            &Polynomial::from_terms(4, [(1.0, vec![1, 1, 0, 0]), (-1.0, vec![2, 1, 0, 0])]).unwrap(),
        )
        .unwrap();
        assert!(td.evaluate(&bumpy_path(Grid::semi_free(128).unwrap())).unwrap().abs() <= 1e-9);
    }

    #[test]
    fn gradient_of_half_square_norm() {
        let n = 3;
        let mut poly = Polynomial::zero(4 * n);
        for k in 0..n {
            poly = poly.add(&jv(n, k).mul(&jv(n, k)).unwrap().scale(0.5)).unwrap();
        }
        let f = polynomial_functional(&Profile::constant(1.0), &poly).unwrap();
        let a = bumpy_path(Grid::semi_free(128).unwrap());
        let gr = f.gradient(&a).unwrap();
        for (ai, qi) in gr.a.iter().zip(a.q()) {
            for (x, y) in ai.iter().zip(qi) {
                assert!((x - y).abs() <= 1e-12);
            }
        }
        assert_eq!(sup_norm(&gr.b), 0.0);
        assert_eq!(gr.alpha0, vec![0.0; 3]);
        assert_eq!(gr.alpha1, vec![0.0; 3]);
    }

    #[test]
    fn gradient_of_action_form() {
        // f = <p, q'>: A = -p', B = q', alpha = p at the ends
        let n = 3;
        let mut poly = Polynomial::zero(4 * n);
        for k in 0..n {
            poly = poly.add(&jv(n, 2 * n + k).mul(&jv(n, n + k)).unwrap()).unwrap();
        }
        let f = polynomial_functional(&Profile::constant(1.0), &poly).unwrap();
        let g = Grid::semi_free(128).unwrap();
        let a = bumpy_path(g);
        let gr = f.gradient(&a).unwrap();
        let (dq, dp) = (a.q_prime(), a.p_prime());
        for i in 0..g.len() {
            for k in 0..n {
                assert!((gr.a[i][k] + dp[i][k]).abs() <= 1e-9);
                assert!((gr.b[i][k] - dq[i][k]).abs() <= 1e-12);
            }
        }
        assert_eq!(gr.alpha0, a.p()[0]);
        assert_eq!(gr.alpha1, a.p()[g.len() - 1]);
        let d = bumpy_tangent(g);
        let dd = f.directional_derivative(&a, &d).unwrap();
        let pair = gr.pair(&d).unwrap();
        assert!((dd - pair).abs() <= 1e-8 * pair.abs().max(1.0));
    }

    #[test]
    fn directional_derivative_examples() {
        let n = 3;
        let c = [0.5, -1.0, 2.0];
        let mut lin = Polynomial::zero(4 * n);
        for k in 0..n {
            lin = lin.add(&jv(n, k).scale(c[k])).unwrap();
        }
        let f = polynomial_functional(&Profile::constant(1.0), &lin).unwrap();
        let g = Grid::semi_free(128).unwrap();
        let a = bumpy_path(g);
        let d = bumpy_tangent(g);
        let exact: Vec<f64> = d.dq().iter().map(|v| dot(v, &c)).collect();
        let exact = g.integrate(&exact).unwrap();
        assert!((f.directional_derivative(&a, &d).unwrap() - exact).abs() <= 1e-11);
        let zero = TangentVector::zero(g, n);
        assert_eq!(f.directional_derivative(&a, &zero).unwrap(), 0.0);
    }

    #[test]
    fn gradient_matches_oracle_on_both_kinds() {
        let pi = presets::so3();
        for kind in [BoundaryKind::SemiFree, BoundaryKind::Periodic] {
            let g = Grid::new(128, kind).unwrap();
            let (a, d) = match kind {
                BoundaryKind::SemiFree => (bumpy_path(g), bumpy_tangent(g)),
                BoundaryKind::Periodic => {
                    let times = g.times();
                    let q = times
                        .iter()
                        .map(|&t| vec![(2.0 * PI * t).cos(), 0.3, (2.0 * PI * t).sin()])
                        .collect();
                    let p = times.iter().map(|&t| vec![t.sin() * 0.0 + 0.2, (4.0 * PI * t).cos(), 1.0]).collect();
                    let dq = times.iter().map(|&t| vec![1.0, (2.0 * PI * t).sin(), 0.0]).collect();
                    let dp = times.iter().map(|&t| vec![(6.0 * PI * t).cos(), 0.5, -1.0]).collect();
                    (
                        PathSample::new(g, q, p).unwrap(),
                        TangentVector::new(g, dq, dp).unwrap(),
                    )
                }
            };
            let profile = match kind {
                BoundaryKind::SemiFree => Profile::sine_series(&[1.0, 0.3]),
                BoundaryKind::Periodic => Profile::fourier(0.5, &[0.2], &[1.0]),
            };
            for s in 0..3 {
                let f = constraint_functional(&pi, s, &profile, kind).unwrap();
                let pair = f.gradient(&a).unwrap().pair(&d).unwrap();
                let dd = f.directional_derivative(&a, &d).unwrap();
                assert!((dd - pair).abs() <= 1e-6 * pair.abs().max(1.0), "{kind} s={s}: {dd} vs {pair}");
            }
        }
    }

    #[test]
    fn constraint_functional_examples() {
        let pi = presets::symplectic_plane();
        let g = Grid::periodic(128).unwrap();
        let circle = circle_loop(g);
        for s in 0..2 {
            let f = constraint_functional(&pi, s, &Profile::fourier(1.0, &[0.5], &[0.25]), g.kind())
                .unwrap();
            assert!(f.evaluate(&circle).unwrap().abs() <= 1e-6);
        }
        let zero = constraint_functional(&pi, 0, &Profile::zero(), g.kind()).unwrap();
        assert_eq!(zero.evaluate(&circle).unwrap(), 0.0);
        let gz = zero.gradient(&circle).unwrap();
        assert_eq!(sup_norm(&gz.a) + sup_norm(&gz.b), 0.0);

        // pi = 0 reduces to -int f q_s'
        let sf = Grid::semi_free(128).unwrap();
        let a = bumpy_path(sf);
        let profile = Profile::sine_series(&[1.0]);
        let f = constraint_functional(&BivectorField::zero(3).unwrap(), 0, &profile, sf.kind()).unwrap();
        let dq = a.q_prime();
        let expected: Vec<f64> = (0..sf.len()).map(|i| -profile.eval(sf.time(i)) * dq[i][0]).collect();
        assert!((f.evaluate(&a).unwrap() - sf.integrate(&expected).unwrap()).abs() <= 1e-14);

        assert!(matches!(
            constraint_functional(&pi, 2, &profile, sf.kind()),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            constraint_functional(&pi, 0, &Profile::constant(1.0), sf.kind()),
            Err(Error::BoundaryViolation(_))
        ));
    }

    #[test]
    fn casimir_examples() {
        let h = Polynomial::variable(3, 0).unwrap();
        let f = casimir_functional(&h).unwrap();
        let a = bumpy_path(Grid::semi_free(256).unwrap());
        let expected = a.q()[256][0] - a.q()[0][0];
        assert!((f.evaluate(&a).unwrap() - expected).abs() <= 1e-10, "{}", f.evaluate(&a).unwrap() - expected);

        let quad = Polynomial::from_terms(3, [(1.0, vec![2, 0, 0]), (1.0, vec![0, 1, 1])]).unwrap();
        let f = casimir_functional(&quad).unwrap();
        let gr = f.gradient(&a).unwrap();
        assert!(gr.max_abs_a() <= 1e-7 && gr.max_abs_b() <= 1e-7);

        let g = Grid::periodic(128).unwrap();
        let times = g.times();
        let q = times
            .iter()
            .map(|&t| vec![(2.0 * PI * t).cos(), (2.0 * PI * t).sin(), 0.5])
            .collect();
        let lp = PathSample::new(g, q, vec![vec![0.0; 3]; 128]).unwrap();
        assert!(f.evaluate(&lp).unwrap().abs() <= 1e-10);
    }

    #[test]
    fn total_derivative_examples() {
        // g = t(1-t) q1
        let g = Polynomial::from_terms(4, [(1.0, vec![1, 1, 0, 0]), (-1.0, vec![2, 1, 0, 0])]).unwrap();
        let f = total_derivative_functional(&g).unwrap();
        let grid = Grid::semi_free(128).unwrap();
        let a = bumpy_path(grid);
        assert!(f.evaluate(&a).unwrap().abs() <= 1e-9);
        let gr = f.gradient(&a).unwrap();
        assert!(gr.max_abs_a() <= 1e-7 && gr.max_abs_b() <= 1e-7);

        let zero = total_derivative_functional(&Polynomial::zero(4)).unwrap();
        assert_eq!(zero.evaluate(&a).unwrap(), 0.0);

        let bad = Polynomial::variable(4, 1).unwrap();
        assert!(matches!(
            total_derivative_functional(&bad),
            Err(Error::BoundaryViolation(_))
        ));
    }

    #[test]
    fn inconsistent_slots_are_rejected() {
        let err = LocalFunctional::new(
            1,
            "wrong",
            Arc::new(|j: &Jet| j.q[0] * j.q[0]),
            Arc::new(|_: &Jet| SlotGradients::zero(1)),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InconsistentSlotGradient { slot: "dF/dq", .. }));
    }

    #[test]
    fn gradient_is_additive() {
        let pi = presets::so3();
        let g = Grid::semi_free(128).unwrap();
        let a = bumpy_path(g);
        let f = constraint_functional(&pi, 0, &Profile::sine_series(&[1.0]), g.kind()).unwrap();
        let h = casimir_functional(&Polynomial::variable(3, 2).unwrap()).unwrap();
        let sum = f.add(&h).unwrap().gradient(&a).unwrap();
        let (gf, gh) = (f.gradient(&a).unwrap(), h.gradient(&a).unwrap());
        for i in 0..g.len() {
            for k in 0..3 {
                assert!((sum.a[i][k] - gf.a[i][k] - gh.a[i][k]).abs() <= 1e-12);
                assert!((sum.b[i][k] - gf.b[i][k] - gh.b[i][k]).abs() <= 1e-12);
            }
        }
        assert!((sum.alpha1[2] - gh.alpha1[2] - gf.alpha1[2]).abs() <= 1e-15);
    }

    #[test]
    fn profiles() {
        let g = Grid::semi_free(512).unwrap();
        for d in [4, 8, 16, 32] {
            let f = Profile::dirac(d, 0.5, &g).unwrap();
            let s = f.sample(&g);
            assert!((g.integrate(&s).unwrap() - 1.0).abs() <= 1e-12);
            for (i, v) in s.iter().enumerate() {
                if (g.time(i) - 0.5).abs() >= 1.0 / d as f64 {
                    assert_eq!(*v, 0.0);
                }
            }
        }
        assert!(Profile::dirac(2, 0.25, &g).is_err());
        assert!(Profile::dirac(0, 0.5, &g).is_err());

        let p = Profile::plateau();
        assert_eq!(p.eval(0.5), 1.0);
        assert_eq!(p.eval(0.375), 1.0);
        assert_eq!(p.eval(0.2), 0.0);
        assert_eq!(p.eval(0.8), 0.0);
        assert!(p.eval(0.3) > 0.0 && p.eval(0.3) < 1.0);

        for prof in [p, Profile::bumped_fourier(0.3, &[1.0], &[0.5]), Profile::sine_series(&[1.0, -2.0])] {
            for t in [0.1, 0.3, 0.55, 0.7] {
                let h = 1e-6;
                let fd = (prof.eval(t + h) - prof.eval(t - h)) / (2.0 * h);
                assert!((fd - prof.derivative(t)).abs() <= 1e-6 * fd.abs().max(1.0));
            }
        }
    }
}
