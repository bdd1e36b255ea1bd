//! Seeded random generators for points, polynomials, fields, paths, tangent
//! vectors, profiles and functionals.
//!
//! Every generator takes the random source explicitly, so a run is fully
//! determined by its seed.

use rand::Rng;

use crate::algebra::Polynomial;
use crate::bivector::BivectorField;
use crate::error::Result;
use crate::functionals::{
    casimir_functional, constraint_functional, flat_bump, polynomial_functional, smooth_step,
    total_derivative_functional, trig_sum, LocalFunctional, Profile,
};
use crate::pathspace::{BoundaryKind, Grid, PathSample, TangentVector};

pub fn point<R: Rng + ?Sized>(rng: &mut R, n: usize, radius: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-radius..=radius)).collect()
}

pub fn points<R: Rng + ?Sized>(rng: &mut R, count: usize, n: usize, radius: f64) -> Vec<Vec<f64>> {
    (0..count).map(|_| point(rng, n, radius)).collect()
}

/// A polynomial with `terms` random monomials of total degree at most
/// `max_degree` and coefficients in `[-1, 1]`.
pub fn polynomial<R: Rng + ?Sized>(
    rng: &mut R,
    nvars: usize,
    max_degree: u32,
    terms: usize,
) -> Polynomial {
    let monomials = (0..terms).map(|_| {
        let mut exps = vec![0u32; nvars];
        let degree = rng.gen_range(0..=max_degree);
        for _ in 0..degree {
            exps[rng.gen_range(0..nvars)] += 1;
        }
        (rng.gen_range(-1.0..=1.0), exps)
    });
    Polynomial::from_terms(nvars, monomials.collect::<Vec<_>>()).expect("exponent lengths match")
}

/// A bivector field whose upper coefficients are random polynomials of
/// degree at most `max_degree`.
pub fn bivector<R: Rng + ?Sized>(rng: &mut R, n: usize, max_degree: u32) -> BivectorField {
    let mut entries = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            entries.push(((i, j), polynomial(rng, n, max_degree, 3)));
        }
    }
    BivectorField::from_upper(n, entries).expect("valid indices")
}

struct Series {
    c0: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl Series {
    fn random<R: Rng + ?Sized>(rng: &mut R, modes: usize, amplitude: f64) -> Self {
        let mut coef = || amplitude * rng.gen_range(-1.0..=1.0);
        Series {
            c0: coef(),
            cos: (0..modes).map(|_| coef()).collect(),
            sin: (0..modes).map(|_| coef()).collect(),
        }
    }

    fn eval(&self, t: f64) -> f64 {
        self.c0 + trig_sum(&self.cos, &self.sin, t)
    }
}

fn sample_vectors(grid: &Grid, series: &[Series], envelope: impl Fn(f64) -> f64) -> Vec<Vec<f64>> {
    grid.times()
        .into_iter()
        .map(|t| series.iter().map(|s| envelope(t) * s.eval(t)).collect())
        .collect()
}

/// A random smooth path. Loops are trigonometric polynomials with three
/// modes; semi-free paths are a random base point plus bump-damped series,
/// so every derivative vanishes at the ends and `p` starts and ends at zero.
pub fn path<R: Rng + ?Sized>(rng: &mut R, grid: &Grid, n: usize) -> Result<PathSample> {
    let qs: Vec<Series> = (0..n).map(|_| Series::random(rng, 3, 0.5)).collect();
    let ps: Vec<Series> = (0..n).map(|_| Series::random(rng, 3, 0.5)).collect();
    match grid.kind() {
        BoundaryKind::Periodic => {
            PathSample::new(*grid, sample_vectors(grid, &qs, |_| 1.0), sample_vectors(grid, &ps, |_| 1.0))
        }
        BoundaryKind::SemiFree => {
            let base = point(rng, n, 1.0);
            let q = sample_vectors(grid, &qs, flat_bump)
                .into_iter()
                .map(|v| v.iter().zip(&base).map(|(x, b)| x + b).collect())
                .collect();
            PathSample::new(*grid, q, sample_vectors(grid, &ps, flat_bump))
        }
    }
}

/// A random admissible tangent vector. On intervals `dq` moves between
/// independent random endpoint values through a flat step, so both boundary
/// terms of the gradient pairing are exercised.
pub fn tangent<R: Rng + ?Sized>(rng: &mut R, grid: &Grid, n: usize) -> Result<TangentVector> {
    let dqs: Vec<Series> = (0..n).map(|_| Series::random(rng, 3, 0.5)).collect();
    let dps: Vec<Series> = (0..n).map(|_| Series::random(rng, 3, 0.5)).collect();
    match grid.kind() {
        BoundaryKind::Periodic => TangentVector::new(
            *grid,
            sample_vectors(grid, &dqs, |_| 1.0),
            sample_vectors(grid, &dps, |_| 1.0),
        ),
        BoundaryKind::SemiFree => {
            let start = point(rng, n, 1.0);
            let end = point(rng, n, 1.0);
            let dq = sample_vectors(grid, &dqs, flat_bump)
                .into_iter()
                .zip(grid.times())
                .map(|(v, t)| {
                    let s = smooth_step(t);
                    (0..n).map(|c| v[c] + (1.0 - s) * start[c] + s * end[c]).collect()
                })
                .collect();
            TangentVector::new(*grid, dq, sample_vectors(grid, &dps, flat_bump))
        }
    }
}

/// A random profile admissible for constraint functionals of the given kind.
pub fn profile<R: Rng + ?Sized>(rng: &mut R, kind: BoundaryKind) -> Profile {
    let s = Series::random(rng, 2, 1.0);
    match kind {
        BoundaryKind::Periodic => Profile::fourier(s.c0, &s.cos, &s.sin),
        BoundaryKind::SemiFree => Profile::bumped_fourier(s.c0, &s.cos, &s.sin),
    }
}

/// A random functional, cycling through the constraint, jet-polynomial,
/// Casimir and total-derivative families by `index`.
pub fn functional<R: Rng + ?Sized>(
    rng: &mut R,
    pi: &BivectorField,
    kind: BoundaryKind,
    index: usize,
) -> Result<LocalFunctional> {
    let n = pi.dim();
    match index % 4 {
        0 => {
            let s = rng.gen_range(0..n);
            constraint_functional(pi, s, &profile(rng, kind), kind)
        }
        1 => {
            let weight = profile(rng, BoundaryKind::Periodic);
            polynomial_functional(&weight, &polynomial(rng, 4 * n, 3, 5))
        }
        2 => casimir_functional(&polynomial(rng, n, 3, 4)),
        _ => match kind {
            BoundaryKind::SemiFree => {
                // g = t (1 - t) h(t, q) vanishes at both ends
                let h = polynomial(rng, n + 1, 2, 3);
                let mut t_exp = vec![0; n + 1];
                t_exp[0] = 1;
                let t = Polynomial::monomial(1.0, t_exp.clone());
                t_exp[0] = 2;
                let bump = t.sub(&Polynomial::monomial(1.0, t_exp))?;
                total_derivative_functional(&bump.mul(&h)?)
            }
            BoundaryKind::Periodic => {
                let weight = profile(rng, BoundaryKind::Periodic);
                polynomial_functional(&weight, &polynomial(rng, 4 * n, 2, 6))
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generators_are_deterministic() {
        let g = Grid::semi_free(128).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(path(&mut a, &g, 3).unwrap(), path(&mut b, &g, 3).unwrap());
        assert_eq!(tangent(&mut a, &g, 3).unwrap(), tangent(&mut b, &g, 3).unwrap());
        assert_eq!(bivector(&mut a, 3, 2), bivector(&mut b, 3, 2));
    }

    #[test]
    fn semi_free_samples_are_admissible() {
        let g = Grid::semi_free(128).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            assert!(path(&mut rng, &g, 3).is_ok());
            assert!(tangent(&mut rng, &g, 3).is_ok());
            let f = profile(&mut rng, BoundaryKind::SemiFree);
            assert_eq!(f.eval(0.0), 0.0);
            assert_eq!(f.eval(1.0), 0.0);
        }
    }

    #[test]
    fn every_family_constructs() {
        let pi = crate::bivector::presets::so3();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for kind in [BoundaryKind::SemiFree, BoundaryKind::Periodic] {
            for k in 0..8 {
                functional(&mut rng, &pi, kind, k).unwrap();
            }
        }
    }
}
