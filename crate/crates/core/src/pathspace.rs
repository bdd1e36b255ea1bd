//! Sampled paths and loops in `T*M = M x R^n` on uniform grids.
//!
//! Semi-free paths live on `[0, 1]` with nodes `t_i = i/N`, `i = 0..=N`;
//! loops live on the circle with nodes `i = 0..N`. Differentiation is
//! spectral on loops and sixth-order finite differences on intervals;
//! quadrature is the rectangle rule on loops and composite Simpson on
//! intervals.

use std::f64::consts::PI;

use serde::Serialize;

use crate::bivector::BivectorField;
use crate::error::{Error, Result};

/// Bound on the leading sampled differences (orders 1 to 4) at the endpoints
/// of semi-free data, relative to the data scale.
pub const SEMI_FREE_FLATNESS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    SemiFree,
    Periodic,
}

impl std::fmt::Display for BoundaryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundaryKind::SemiFree => write!(f, "semifree"),
            BoundaryKind::Periodic => write!(f, "periodic"),
        }
    }
}

impl std::str::FromStr for BoundaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "semifree" | "semi-free" | "semi_free" => Ok(BoundaryKind::SemiFree),
            "periodic" => Ok(BoundaryKind::Periodic),
            other => Err(Error::InvalidGrid(format!("unknown boundary kind `{other}`"))),
        }
    }
}

/// A uniform grid on `[0, 1]` or on the circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Grid {
    intervals: usize,
    kind: BoundaryKind,
}

impl Grid {
    pub fn new(intervals: usize, kind: BoundaryKind) -> Result<Self> {
        if intervals < 8 || intervals % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "need an even number of intervals >= 8, got {intervals}"
            )));
        }
        Ok(Self { intervals, kind })
    }

    pub fn semi_free(intervals: usize) -> Result<Self> {
        Self::new(intervals, BoundaryKind::SemiFree)
    }

    pub fn periodic(intervals: usize) -> Result<Self> {
        Self::new(intervals, BoundaryKind::Periodic)
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn kind(&self) -> BoundaryKind {
        self.kind
    }

    pub fn is_periodic(&self) -> bool {
        self.kind == BoundaryKind::Periodic
    }

    /// Number of stored nodes.
    pub fn len(&self) -> usize {
        match self.kind {
            BoundaryKind::SemiFree => self.intervals + 1,
            BoundaryKind::Periodic => self.intervals,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        1.0 / self.intervals as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 / self.intervals as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    /// Index of the node at `t = 1/2` (exists because `N` is even).
    pub fn midpoint_index(&self) -> usize {
        self.intervals / 2
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: len,
            });
        }
        Ok(())
    }

    /// Quadrature weights for [`Grid::integrate`].
    pub fn weights(&self) -> Vec<f64> {
        let h = self.step();
        match self.kind {
            BoundaryKind::Periodic => vec![h; self.len()],
            BoundaryKind::SemiFree => {
                let last = self.intervals;
                (0..=last)
                    .map(|i| {
                        let w = if i == 0 || i == last {
                            1.0
                        } else if i % 2 == 1 {
                            4.0
                        } else {
                            2.0
                        };
                        w * h / 3.0
                    })
                    .collect()
            }
        }
    }

    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        self.check_len(values.len())?;
        Ok(self.integrate_unchecked(values))
    }

    pub(crate) fn integrate_unchecked(&self, values: &[f64]) -> f64 {
        match self.kind {
            BoundaryKind::Periodic => self.step() * values.iter().sum::<f64>(),
            BoundaryKind::SemiFree => {
                let last = self.intervals;
                let mut odd = 0.0;
                let mut even = 0.0;
                for (i, v) in values.iter().enumerate().take(last).skip(1) {
                    if i % 2 == 1 {
                        odd += v;
                    } else {
                        even += v;
                    }
                }
                self.step() / 3.0 * (values[0] + values[last] + 4.0 * odd + 2.0 * even)
            }
        }
    }

    pub fn differentiate(&self, values: &[f64]) -> Result<Vec<f64>> {
        self.check_len(values.len())?;
        Ok(self.differentiate_unchecked(values))
    }

    pub(crate) fn differentiate_unchecked(&self, values: &[f64]) -> Vec<f64> {
        match self.kind {
            BoundaryKind::Periodic => spectral_derivative(values),
            BoundaryKind::SemiFree => sixth_order_derivative(values, self.step()),
        }
    }

    /// Differentiates per-node vectors componentwise.
    pub fn differentiate_vectors(&self, values: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        self.check_len(values.len())?;
        let n = values.first().map_or(0, Vec::len);
        let columns: Vec<Vec<f64>> = (0..n)
            .map(|c| self.differentiate_unchecked(&column(values, c)))
            .collect();
        Ok(transpose(&columns, values.len()))
    }

    /// Values at the cell midpoints `t_i + h/2`, one per cell.
    ///
    /// Loops use the band-limited interpolant; intervals use six-point
    /// Lagrange interpolation.
    pub(crate) fn half_step_values(&self, values: &[f64]) -> Vec<f64> {
        match self.kind {
            BoundaryKind::Periodic => {
                let n = values.len();
                let weights: Vec<f64> = (0..n)
                    .map(|m| {
                        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                        sign / (n as f64 * (PI * (m as f64 + 0.5) / n as f64).tan())
                    })
                    .collect();
                (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|m| weights[m] * values[(i + n - m) % n])
                            .sum()
                    })
                    .collect()
            }
            BoundaryKind::SemiFree => {
                let cells = self.intervals;
                (0..cells)
                    .map(|i| {
                        // stencil of 6 nodes around the midpoint, shifted inside
                        let start = (i as isize - 2).clamp(0, cells as isize - 5) as usize;
                        let x = i as f64 + 0.5;
                        lagrange_eval(values, start, 6, x)
                    })
                    .collect()
            }
        }
    }
}

fn lagrange_eval(values: &[f64], start: usize, width: usize, x: f64) -> f64 {
    let mut acc = 0.0;
    for a in start..start + width {
        let mut w = 1.0;
        for b in start..start + width {
            if a != b {
                w *= (x - b as f64) / (a as f64 - b as f64);
            }
        }
        acc += w * values[a];
    }
    acc
}

/// Fourier differentiation on the periodic grid with period 1.
///
/// Uses the circulant differentiation matrix with entries
/// `pi (-1)^m cot(pi m / N)`, which is exact for trigonometric polynomials
/// of degree below `N/2`.
fn spectral_derivative(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let coeffs: Vec<f64> = (0..n)
        .map(|m| {
            if m == 0 {
                0.0
            } else {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                sign * PI / (PI * m as f64 / n as f64).tan()
            }
        })
        .collect();
    (0..n)
        .map(|i| (0..n).map(|m| coeffs[m] * values[(i + n - m) % n]).sum())
        .collect()
}

/// First-derivative weights at `x0` for the Lagrange interpolant through `xs`.
fn lagrange_derivative_weights(x0: f64, xs: &[f64]) -> Vec<f64> {
    (0..xs.len())
        .map(|j| {
            let mut total = 0.0;
            for m in (0..xs.len()).filter(|&m| m != j) {
                let mut term = 1.0 / (xs[j] - xs[m]);
                for l in (0..xs.len()).filter(|&l| l != j && l != m) {
                    term *= (x0 - xs[l]) / (xs[j] - xs[l]);
                }
                total += term;
            }
            total
        })
        .collect()
}

/// Sixth-order finite differences: centered 7-point stencils in the interior,
/// shifted 7-point stencils on the three nodes nearest each end.
fn sixth_order_derivative(u: &[f64], h: f64) -> Vec<f64> {
    const INTERIOR: [f64; 7] = [-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0];
    let len = u.len();
    let last = len - 1;
    let mut d = vec![0.0; len];
    for i in 3..len - 3 {
        let acc: f64 = INTERIOR.iter().zip(&u[i - 3..=i + 3]).map(|(w, x)| w * x).sum();
        d[i] = acc / (60.0 * h);
    }
    let nodes: Vec<f64> = (0..7).map(|k| k as f64).collect();
    for i in 0..3 {
        let w = lagrange_derivative_weights(i as f64, &nodes);
        d[i] = w.iter().zip(&u[..7]).map(|(w, x)| w * x).sum::<f64>() / h;
        d[last - i] = -w.iter().zip(u[len - 7..].iter().rev()).map(|(w, x)| w * x).sum::<f64>() / h;
    }
    d
}

pub(crate) fn column(values: &[Vec<f64>], c: usize) -> Vec<f64> {
    values.iter().map(|v| v[c]).collect()
}

pub(crate) fn transpose(columns: &[Vec<f64>], len: usize) -> Vec<Vec<f64>> {
    (0..len)
        .map(|i| columns.iter().map(|col| col[i]).collect())
        .collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn sup_norm(values: &[Vec<f64>]) -> f64 {
    values
        .iter()
        .flat_map(|v| v.iter())
        .fold(0.0, |m, x| m.max(x.abs()))
}

/// Largest `|k-th forward difference|` (k = 1..=4) at either end of `values`.
fn endpoint_roughness(values: &[f64]) -> f64 {
    let mut worst = 0.0_f64;
    let ends: [Vec<f64>; 2] = [
        values.iter().take(5).copied().collect(),
        values.iter().rev().take(5).copied().collect(),
    ];
    for mut diff in ends {
        for _ in 1..=4 {
            diff = diff.windows(2).map(|w| w[1] - w[0]).collect();
            worst = worst.max(diff[0].abs());
        }
    }
    worst
}

fn check_node_vectors(grid: &Grid, n: usize, values: &[Vec<f64>], what: &str) -> Result<()> {
    grid.check_len(values.len())?;
    if let Some(bad) = values.iter().find(|v| v.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.len(),
        });
    }
    if values.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::BoundaryViolation(format!("{what} has non-finite samples")));
    }
    Ok(())
}

/// A sampled path `a = (q, p)`: base points `q(t_i)` and covectors `p(t_i)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSample {
    grid: Grid,
    n: usize,
    q: Vec<Vec<f64>>,
    p: Vec<Vec<f64>>,
}

impl PathSample {
    /// Validates lengths and, on semi-free grids, the endpoint conditions:
    /// `p` is exactly zero at both ends and the leading sampled differences
    /// of `q` and `p` are below [`SEMI_FREE_FLATNESS`].
    pub fn new(grid: Grid, q: Vec<Vec<f64>>, p: Vec<Vec<f64>>) -> Result<Self> {
        let n = q.first().map_or(0, Vec::len);
        if n == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        check_node_vectors(&grid, n, &q, "q")?;
        check_node_vectors(&grid, n, &p, "p")?;
        let path = Self { grid, n, q, p };
        if grid.kind() == BoundaryKind::SemiFree {
            path.check_semi_free()?;
        }
        Ok(path)
    }

    pub(crate) fn from_parts(grid: Grid, n: usize, q: Vec<Vec<f64>>, p: Vec<Vec<f64>>) -> Self {
        Self { grid, n, q, p }
    }

    /// A path sitting at `q0` with zero covector.
    pub fn constant(grid: Grid, q0: &[f64]) -> Result<Self> {
        let len = grid.len();
        Self::new(grid, vec![q0.to_vec(); len], vec![vec![0.0; q0.len()]; len])
    }

    fn check_semi_free(&self) -> Result<()> {
        let last = self.grid.len() - 1;
        if self.p[0].iter().chain(&self.p[last]).any(|&x| x != 0.0) {
            return Err(Error::BoundaryViolation(
                "semi-free path must have p(0) = p(1) = 0".into(),
            ));
        }
        let scale = 1.0_f64.max(sup_norm(&self.q)).max(sup_norm(&self.p));
        for (name, values) in [("q", &self.q), ("p", &self.p)] {
            for c in 0..self.n {
                let rough = endpoint_roughness(&column(values, c));
                if rough > SEMI_FREE_FLATNESS * scale {
                    return Err(Error::BoundaryViolation(format!(
                        "{name}_{} is not flat at the endpoints (sampled difference {rough:e})",
                        c + 1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> &[Vec<f64>] {
        &self.q
    }

    pub fn p(&self) -> &[Vec<f64>] {
        &self.p
    }

    pub fn q_prime(&self) -> Vec<Vec<f64>> {
        self.grid
            .differentiate_vectors(&self.q)
            .expect("lengths checked at construction")
    }

    pub fn p_prime(&self) -> Vec<Vec<f64>> {
        self.grid
            .differentiate_vectors(&self.p)
            .expect("lengths checked at construction")
    }

    /// `a + eps * d` without boundary validation.
    pub(crate) fn displaced(&self, d: &TangentVector, eps: f64) -> PathSample {
        let shift = |base: &[Vec<f64>], delta: &[Vec<f64>]| -> Vec<Vec<f64>> {
            base.iter()
                .zip(delta)
                .map(|(b, x)| b.iter().zip(x).map(|(b, x)| b + eps * x).collect())
                .collect()
        };
        PathSample::from_parts(self.grid, self.n, shift(&self.q, &d.dq), shift(&self.p, &d.dp))
    }

    /// Tolerance scale `max(1, sup|p|, sup |pi_ij(q(t))|)`.
    pub fn scale_for(&self, pi: &BivectorField) -> f64 {
        1.0_f64
            .max(sup_norm(&self.p))
            .max(pi.coefficient_sup(self.q.iter().map(Vec::as_slice)))
    }

    /// CSV with columns `t, q1..qn, p1..pn`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for i in 1..=self.n {
            out.push_str(&format!(",q{i}"));
        }
        for i in 1..=self.n {
            out.push_str(&format!(",p{i}"));
        }
        out.push('\n');
        for (i, (q, p)) in self.q.iter().zip(&self.p).enumerate() {
            out.push_str(&format!("{}", self.grid.time(i)));
            for x in q.iter().chain(p) {
                out.push_str(&format!(",{x:.17e}"));
            }
            out.push('\n');
        }
        out
    }
}

/// A tangent vector `(dq, dp)` at a sampled path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TangentVector {
    grid: Grid,
    n: usize,
    dq: Vec<Vec<f64>>,
    dp: Vec<Vec<f64>>,
}

impl TangentVector {
    /// On semi-free grids `dp` must vanish at both ends and `dq`, `dp` must
    /// be flat there (`dq` itself may be nonzero at the endpoints).
    pub fn new(grid: Grid, dq: Vec<Vec<f64>>, dp: Vec<Vec<f64>>) -> Result<Self> {
        let n = dq.first().map_or(0, Vec::len);
        if n == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        check_node_vectors(&grid, n, &dq, "dq")?;
        check_node_vectors(&grid, n, &dp, "dp")?;
        if grid.kind() == BoundaryKind::SemiFree {
            let last = grid.len() - 1;
            let scale = 1.0_f64.max(sup_norm(&dq)).max(sup_norm(&dp));
            let end_dp = dp[0].iter().chain(&dp[last]).fold(0.0_f64, |m, x| m.max(x.abs()));
            if end_dp > SEMI_FREE_FLATNESS * scale {
                return Err(Error::BoundaryViolation(
                    "tangent dp must vanish at the endpoints".into(),
                ));
            }
            for values in [&dq, &dp] {
                for c in 0..n {
                    if endpoint_roughness(&column(values, c)) > SEMI_FREE_FLATNESS * scale {
                        return Err(Error::BoundaryViolation(
                            "tangent vector is not flat at the endpoints".into(),
                        ));
                    }
                }
            }
        }
        Ok(Self { grid, n, dq, dp })
    }

    pub(crate) fn from_parts(grid: Grid, n: usize, dq: Vec<Vec<f64>>, dp: Vec<Vec<f64>>) -> Self {
        Self { grid, n, dq, dp }
    }

    pub fn zero(grid: Grid, n: usize) -> Self {
        let len = grid.len();
        Self::from_parts(grid, n, vec![vec![0.0; n]; len], vec![vec![0.0; n]; len])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn dq(&self) -> &[Vec<f64>] {
        &self.dq
    }

    pub fn dp(&self) -> &[Vec<f64>] {
        &self.dp
    }

    pub(crate) fn check_compatible(&self, grid: &Grid, n: usize) -> Result<()> {
        if self.grid != *grid {
            return Err(Error::InvalidGrid("tangent vector lives on a different grid".into()));
        }
        if self.n != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.n,
            });
        }
        Ok(())
    }
}

/// The defect `q' - sharp(q, p)` at every node.
pub fn cotangent_defect(pi: &BivectorField, a: &PathSample) -> Result<Vec<Vec<f64>>> {
    if a.dim() != pi.dim() {
        return Err(Error::DimensionMismatch {
            expected: pi.dim(),
            found: a.dim(),
        });
    }
    let dq = a.q_prime();
    Ok(a.q
        .iter()
        .zip(&a.p)
        .zip(dq)
        .map(|((q, p), dq)| {
            let s = pi.at_unchecked(q).sharp(p);
            dq.iter().zip(s).map(|(d, s)| d - s).collect()
        })
        .collect())
}

/// Largest Euclidean norm of the cotangent defect over the nodes.
pub fn max_defect(pi: &BivectorField, a: &PathSample) -> Result<f64> {
    Ok(cotangent_defect(pi, a)?
        .iter()
        .map(|v| dot(v, v).sqrt())
        .fold(0.0, f64::max))
}

pub fn is_cotangent(pi: &BivectorField, a: &PathSample, tol: f64) -> Result<bool> {
    Ok(max_defect(pi, a)? <= tol)
}

/// `omega(d1, d2) = int <dp1, dq2> - <dp2, dq1> dt`.
pub fn omega(d1: &TangentVector, d2: &TangentVector) -> Result<f64> {
    d2.check_compatible(&d1.grid, d1.n)?;
    let integrand: Vec<f64> = (0..d1.grid.len())
        .map(|i| dot(&d1.dp[i], &d2.dq[i]) - dot(&d2.dp[i], &d1.dq[i]))
        .collect();
    Ok(d1.grid.integrate_unchecked(&integrand))
}

/// A reparametrization `psi` of the grid into a window around `1/2`, with
/// `psi(1/2) = 1/2` and `psi'(1/2) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reparam {
    pub psi: Vec<f64>,
    pub dpsi: Vec<f64>,
}

/// Builds the reparametrization used to squeeze a short cotangent arc into
/// a full path.
///
/// On intervals `psi'` is the flat bump `exp(sigma (4 - 1/(t(1-t))))`,
/// sharpened (`sigma >= 3/2`) until the image of `psi` fits in
/// `(1/2 - eps, 1/2 + eps)`; `psi` and all its derivatives are flat at the
/// endpoints. On loops `psi = 1/2 + sin(2 pi m (t - 1/2)) / (2 pi m)` with
/// the smallest frequency `m` that fits the window.
pub fn bump_reparam(eps: f64, grid: &Grid) -> Result<Reparam> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::ParameterOutOfRange {
            name: "eps",
            value: eps,
            expected: "0 < eps < 1/2",
        });
    }
    let times = grid.times();
    match grid.kind() {
        BoundaryKind::Periodic => {
            let m = (1.0 / (2.0 * PI * 0.9 * eps)).ceil().max(1.0);
            let w = 2.0 * PI * m;
            Ok(Reparam {
                psi: times.iter().map(|t| 0.5 + (w * (t - 0.5)).sin() / w).collect(),
                dpsi: times.iter().map(|t| (w * (t - 0.5)).cos()).collect(),
            })
        }
        BoundaryKind::SemiFree => {
            let sigma = (0.25 / eps).powi(2).max(1.5);
            let dpsi_at = move |t: f64| {
                if t <= 0.0 || t >= 1.0 {
                    0.0
                } else {
                    (sigma * (4.0 - 1.0 / (t * (1.0 - t)))).exp()
                }
            };
            let mid = grid.midpoint_index();
            let mut psi = vec![0.5; times.len()];
            for i in mid + 1..times.len() {
                psi[i] = psi[i - 1] + gauss_legendre(&dpsi_at, times[i - 1], times[i]);
            }
            for i in (0..mid).rev() {
                psi[i] = psi[i + 1] - gauss_legendre(&dpsi_at, times[i], times[i + 1]);
            }
            Ok(Reparam {
                psi,
                dpsi: times.iter().map(|&t| dpsi_at(t)).collect(),
            })
        }
    }
}

/// Composite 8-point Gauss-Legendre rule on 8 sub-panels.
pub(crate) fn gauss_legendre(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const NODES: [f64; 4] = [
        0.183_434_642_495_649_8,
        0.525_532_409_916_329,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_3,
    ];
    const WEIGHTS: [f64; 4] = [
        0.362_683_783_378_362,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_5,
        0.101_228_536_290_376_3,
    ];
    const PANELS: usize = 8;
    let width = (b - a) / PANELS as f64;
    let mut total = 0.0;
    for k in 0..PANELS {
        let lo = a + k as f64 * width;
        let mid = lo + 0.5 * width;
        let half = 0.5 * width;
        for (x, w) in NODES.iter().zip(WEIGHTS) {
            total += w * half * (f(mid - half * x) + f(mid + half * x));
        }
    }
    total
}
