//! The canonical bracket `{F, G}(a) = int <A_F, B_G> - <A_G, B_F> dt` and
//! its closed form on pairs of constraint functionals.

use serde::Serialize;

use crate::bivector::BivectorField;
use crate::cotangent::shoot_through;
use crate::error::{Error, Result};
use crate::functionals::{constraint_functional, LocalFunctional, Profile};
use crate::pathspace::{dot, Grid, PathSample};

/// Grid used by the Dirac-limit experiment; fine enough to resolve the
/// narrowest bump (`d = 32`, 64 cells across its support).
pub const DIRAC_GRID_INTERVALS: usize = 1024;

/// Half-width of the shooting window used by the Dirac-limit experiment.
pub const DIRAC_SHOOT_EPS: f64 = 0.45;

pub fn lie_bracket(f: &LocalFunctional, g: &LocalFunctional, a: &PathSample) -> Result<f64> {
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            found: g.dim(),
        });
    }
    let gf = f.gradient(a)?;
    let gg = g.gradient(a)?;
    let integrand: Vec<f64> = (0..a.grid().len())
        .map(|i| dot(&gf.a[i], &gg.b[i]) - dot(&gg.a[i], &gf.b[i]))
        .collect();
    Ok(a.grid().integrate_unchecked(&integrand))
}

/// The two terms of the closed-form bracket of `F_{f,r}` and `G_{g,s}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedFormBracket {
    /// `int f g sum_k d_k pi_rs (q_k' - sum_j pi_kj p_j) dt`; vanishes on
    /// cotangent paths.
    pub defect_term: f64,
    /// `int f g sum_j J_rsj p_j dt`.
    pub jacobi_term: f64,
    /// `defect_term + jacobi_term`.
    pub total: f64,
}

/// Evaluates the closed form of `{F_{f,r}, G_{g,s}}(a)` directly from `pi`,
/// its partials and its Jacobiator, without gradients. `r`, `s` are 0-based.
pub fn constraint_bracket_closed_form(
    pi: &BivectorField,
    f: &Profile,
    r: usize,
    g: &Profile,
    s: usize,
    a: &PathSample,
) -> Result<ClosedFormBracket> {
    let n = pi.dim();
    for idx in [r, s] {
        if idx >= n {
            return Err(Error::IndexOutOfRange { index: idx, bound: n });
        }
    }
    if a.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.dim(),
        });
    }
    let kind = a.grid().kind();
    f.boundary_check(kind)?;
    g.boundary_check(kind)?;
    let grid = a.grid();
    let dq = a.q_prime();
    let mut defect = Vec::with_capacity(grid.len());
    let mut jacobi = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let at = pi.at_unchecked(&a.q()[i]);
        let p = &a.p()[i];
        let sharp = at.sharp(p);
        let weight = f.eval(grid.time(i)) * g.eval(grid.time(i));
        let d: f64 = (0..n).map(|k| at.dpi(r, s, k) * (dq[i][k] - sharp[k])).sum();
        defect.push(weight * d);
        jacobi.push(weight * at.jacobiator().contract(r, s, p));
    }
    let defect_term = grid.integrate_unchecked(&defect);
    let jacobi_term = grid.integrate_unchecked(&jacobi);
    Ok(ClosedFormBracket {
        defect_term,
        jacobi_term,
        total: defect_term + jacobi_term,
    })
}

/// Approximation of the Dirac mass at `center` by a normalized bump of
/// half-width `1/d`, sampled on `grid`.
pub fn dirac_family(d: u32, center: f64, grid: &Grid) -> Result<Vec<f64>> {
    Ok(Profile::dirac(d, center, grid)?.sample(grid))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiracLimit {
    pub d: Vec<u32>,
    /// `{F_{f_d, r}, G_{g, s}}(a)` for each `d`.
    pub values: Vec<f64>,
    /// `sum_j J_rsj(q) p_j` at the prescribed point.
    pub limit: f64,
    pub defect_max: f64,
    pub scale: f64,
}

/// Shoots a cotangent path through `(q, p)` and evaluates the bracket of
/// `F_{f_d, r}` with `G_{g, s}` for each `d`, where `f_d` concentrates at
/// `t = 1/2` and `g` is the plateau profile.
pub fn dirac_limit_bracket(
    pi: &BivectorField,
    r: usize,
    s: usize,
    q: &[f64],
    p: &[f64],
    d_list: &[u32],
    grid: &Grid,
) -> Result<DiracLimit> {
    let shot = shoot_through(pi, q, p, DIRAC_SHOOT_EPS, grid)?;
    let a = &shot.path;
    let kind = grid.kind();
    let plateau = Profile::plateau();
    let g = constraint_functional(pi, s, &plateau, kind)?;
    let values = d_list
        .iter()
        .map(|&d| {
            let f = constraint_functional(pi, r, &Profile::dirac(d, 0.5, grid)?, kind)?;
            lie_bracket(&f, &g, a)
        })
        .collect::<Result<Vec<_>>>()?;
    let limit = pi.jacobiator(q)?.contract(r, s, p);
    Ok(DiracLimit {
        d: d_list.to_vec(),
        values,
        limit,
        defect_max: shot.defect_max,
        scale: a.scale_for(pi),
    })
}
