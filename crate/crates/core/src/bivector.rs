//! Bivector fields on open subsets of `R^n` with polynomial coefficients.
//!
//! A field is stored by its upper-triangular coefficients `pi_ij` (`i < j`,
//! 0-based); the lower half is implied by skew-symmetry. All first partial
//! derivatives are formed once at construction, so every pointwise quantity
//! (the anchor map, its derivative, the Jacobiator, `dpi_star`) is computed
//! from exact derivatives.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::algebra::Polynomial;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BivectorField {
    n: usize,
    upper: BTreeMap<(usize, usize), Polynomial>,
    // dense skew matrix of coefficients, row-major
    dense: Vec<Polynomial>,
    // partials[(i * n + j) * n + k] = d pi_ij / d q_k
    partials: Vec<Polynomial>,
}

impl BivectorField {
    /// Builds a field from its strictly upper-triangular coefficients.
    pub fn from_upper<I>(n: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = ((usize, usize), Polynomial)>,
    {
        if n == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        let mut upper: BTreeMap<(usize, usize), Polynomial> = BTreeMap::new();
        for ((i, j), poly) in entries {
            if j >= n {
                return Err(Error::IndexOutOfRange { index: j, bound: n });
            }
            if i >= j {
                return Err(Error::IndexOutOfRange { index: i, bound: j });
            }
            if poly.nvars() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: poly.nvars(),
                });
            }
            let slot = upper.entry((i, j)).or_insert_with(|| Polynomial::zero(n));
            *slot = slot.add(&poly)?;
        }
        upper.retain(|_, p| !p.is_zero());

        let mut dense = vec![Polynomial::zero(n); n * n];
        for (&(i, j), poly) in &upper {
            dense[i * n + j] = poly.clone();
            dense[j * n + i] = poly.neg();
        }
        let mut partials = Vec::with_capacity(n * n * n);
        for poly in &dense {
            for k in 0..n {
                partials.push(poly.partial(k)?);
            }
        }
        Ok(Self {
            n,
            upper,
            dense,
            partials,
        })
    }

    /// The zero bivector on `R^n`.
    pub fn zero(n: usize) -> Result<Self> {
        Self::from_upper(n, std::iter::empty())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `pi_ij` for any `i, j` (skew-symmetric, zero on the diagonal).
    pub fn coefficient(&self, i: usize, j: usize) -> Result<&Polynomial> {
        self.check_index(i)?;
        self.check_index(j)?;
        Ok(&self.dense[i * self.n + j])
    }

    /// Stored upper-triangular entries, ordered by `(i, j)`.
    pub fn upper_entries(&self) -> impl Iterator<Item = ((usize, usize), &Polynomial)> {
        self.upper.iter().map(|(&k, p)| (k, p))
    }

    /// True when every coefficient partial vanishes identically.
    pub fn has_constant_coefficients(&self) -> bool {
        self.partials.iter().all(Polynomial::is_zero)
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange {
                index: i,
                bound: self.n,
            });
        }
        Ok(())
    }

    pub(crate) fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: v.len(),
            });
        }
        Ok(())
    }

    /// Evaluates the coefficient matrix and all of its first partials at `q`.
    pub fn at(&self, q: &[f64]) -> Result<BivectorAt> {
        self.check_len(q)?;
        Ok(self.at_unchecked(q))
    }

    pub(crate) fn at_unchecked(&self, q: &[f64]) -> BivectorAt {
        let n = self.n;
        let mut pi = vec![0.0; n * n];
        let mut dpi = vec![0.0; n * n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = self.dense[i * n + j].eval_unchecked(q);
                pi[i * n + j] = v;
                pi[j * n + i] = -v;
                for k in 0..n {
                    let d = self.partials[(i * n + j) * n + k].eval_unchecked(q);
                    dpi[(i * n + j) * n + k] = d;
                    dpi[(j * n + i) * n + k] = -d;
                }
            }
        }
        BivectorAt { n, pi, dpi }
    }

    /// The anchor map: component `s` is `sum_j pi_sj(q) p_j`.
    pub fn sharp(&self, q: &[f64], p: &[f64]) -> Result<Vec<f64>> {
        self.check_len(p)?;
        Ok(self.at(q)?.sharp(p))
    }

    /// Derivative of `q -> sharp(q, p)` in the direction `u`.
    pub fn sharp_derivative(&self, q: &[f64], u: &[f64], p: &[f64]) -> Result<Vec<f64>> {
        self.check_len(u)?;
        self.check_len(p)?;
        Ok(self.at(q)?.sharp_derivative(u, p))
    }

    pub fn jacobiator(&self, q: &[f64]) -> Result<Jacobiator> {
        Ok(self.at(q)?.jacobiator())
    }

    /// The covector defined by `<dpi_star(alpha, beta), u> = -<sharp_derivative(u, beta), alpha>`.
    pub fn dpi_star(&self, q: &[f64], alpha: &[f64], beta: &[f64]) -> Result<Vec<f64>> {
        self.check_len(alpha)?;
        self.check_len(beta)?;
        Ok(self.at(q)?.dpi_star(alpha, beta))
    }

    /// Sampling-based Poisson test: the largest Jacobiator entry over the
    /// sample points must not exceed `tol`.
    pub fn is_poisson(&self, samples: &[Vec<f64>], tol: f64) -> Result<PoissonVerdict> {
        if samples.is_empty() {
            return Err(Error::EmptySamples);
        }
        let mut max_abs_j = 0.0_f64;
        let mut argmax = &samples[0];
        for q in samples {
            let m = self.jacobiator(q)?.max_abs();
            if m > max_abs_j {
                max_abs_j = m;
                argmax = q;
            }
        }
        let poisson = max_abs_j <= tol;
        Ok(PoissonVerdict {
            poisson,
            max_abs_j,
            witness: (!poisson).then(|| argmax.clone()),
        })
    }

    /// Largest `|pi_ij(q)|` over the given points.
    pub fn coefficient_sup<'a, I>(&self, points: I) -> f64
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        points
            .into_iter()
            .map(|q| {
                self.upper
                    .values()
                    .map(|p| p.eval_unchecked(q).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let parsed: BivectorJson = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            match path.as_str() {
                "." | "?" => Error::Parse(e.into_inner().to_string()),
                _ => Error::Parse(format!("{path}: {}", e.into_inner())),
            }
        })?;
        parsed.into_field()
    }

    pub fn to_json(&self) -> BivectorJson {
        BivectorJson {
            n: self.n,
            terms: self
                .upper
                .iter()
                .map(|(&(i, j), poly)| TermJson {
                    i: i + 1,
                    j: j + 1,
                    poly: poly
                        .terms()
                        .map(|(exp, coef)| MonomialJson {
                            coef,
                            exp: exp.clone(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

/// Coefficients of a bivector and their first partials at one point.
#[derive(Debug, Clone)]
pub struct BivectorAt {
    n: usize,
    pi: Vec<f64>,
    dpi: Vec<f64>,
}

impl BivectorAt {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn pi(&self, i: usize, j: usize) -> f64 {
        self.pi[i * self.n + j]
    }

    /// `d pi_ij / d q_k`
    pub fn dpi(&self, i: usize, j: usize, k: usize) -> f64 {
        self.dpi[(i * self.n + j) * self.n + k]
    }

    pub fn sharp(&self, p: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|s| (0..self.n).map(|j| self.pi(s, j) * p[j]).sum())
            .collect()
    }

    pub fn sharp_derivative(&self, u: &[f64], p: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|s| {
                let mut acc = 0.0;
                for j in 0..n {
                    for k in 0..n {
                        acc += u[k] * self.dpi(s, j, k) * p[j];
                    }
                }
                acc
            })
            .collect()
    }

    pub fn dpi_star(&self, alpha: &[f64], beta: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|k| {
                let mut acc = 0.0;
                for s in 0..n {
                    for j in 0..n {
                        acc += alpha[s] * self.dpi(s, j, k) * beta[j];
                    }
                }
                -acc
            })
            .collect()
    }

    pub fn jacobiator(&self) -> Jacobiator {
        let n = self.n;
        let mut entries = vec![0.0; n * n * n];
        for r in 0..n {
            for s in 0..n {
                for j in 0..n {
                    let mut acc = 0.0;
                    for k in 0..n {
                        acc += self.dpi(r, s, k) * self.pi(k, j)
                            + self.dpi(s, j, k) * self.pi(k, r)
                            + self.dpi(j, r, k) * self.pi(k, s);
                    }
                    entries[(r * n + s) * n + j] = acc;
                }
            }
        }
        Jacobiator { n, entries }
    }
}

/// The Jacobiator 3-tensor `J_rsj` evaluated at a point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Jacobiator {
    n: usize,
    entries: Vec<f64>,
}

impl Jacobiator {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, r: usize, s: usize, j: usize) -> f64 {
        self.entries[(r * self.n + s) * self.n + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `sum_j J_rsj p_j`
    pub fn contract(&self, r: usize, s: usize, p: &[f64]) -> f64 {
        (0..self.n).map(|j| self.get(r, s, j) * p[j]).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoissonVerdict {
    pub poisson: bool,
    pub max_abs_j: f64,
    pub witness: Option<Vec<f64>>,
}

/// On-disk bivector format. Indices are 1-based with `i < j`; omitted pairs
/// are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BivectorJson {
    pub n: usize,
    pub terms: Vec<TermJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermJson {
    pub i: usize,
    pub j: usize,
    pub poly: Vec<MonomialJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonomialJson {
    pub coef: f64,
    pub exp: Vec<u32>,
}

impl BivectorJson {
    pub fn into_field(self) -> Result<BivectorField> {
        let n = self.n;
        if n == 0 {
            return Err(Error::Parse("n: must be at least 1".into()));
        }
        let mut entries = Vec::with_capacity(self.terms.len());
        for (t, term) in self.terms.into_iter().enumerate() {
            if term.i == 0 || term.j > n || term.i >= term.j {
                return Err(Error::Parse(format!(
                    "terms[{t}]: indices (i={}, j={}) must satisfy 1 <= i < j <= n = {n}",
                    term.i, term.j
                )));
            }
            let mut monomials = Vec::with_capacity(term.poly.len());
            for (m, mono) in term.poly.into_iter().enumerate() {
                if mono.exp.len() != n {
                    return Err(Error::Parse(format!(
                        "terms[{t}].poly[{m}].exp: expected {n} exponents, found {}",
                        mono.exp.len()
                    )));
                }
                if !mono.coef.is_finite() {
                    return Err(Error::Parse(format!(
                        "terms[{t}].poly[{m}].coef: must be finite"
                    )));
                }
                monomials.push((mono.coef, mono.exp));
            }
            let poly = Polynomial::from_terms(n, monomials)?;
            entries.push(((term.i - 1, term.j - 1), poly));
        }
        BivectorField::from_upper(n, entries)
    }
}

/// Bivector fields used throughout the tests, CLI fixtures and demo.
pub mod presets {
    use super::BivectorField;
    use crate::algebra::Polynomial;

    fn var(n: usize, i: usize) -> Polynomial {
        Polynomial::variable(n, i).expect("index in range")
    }

    /// Lie-Poisson structure of so(3): `pi_12 = q3, pi_23 = q1, pi_31 = q2`.
    pub fn so3() -> BivectorField {
        BivectorField::from_upper(
            3,
            [
                ((0, 1), var(3, 2)),
                ((1, 2), var(3, 0)),
                ((0, 2), var(3, 1).neg()),
            ],
        )
        .expect("valid so(3) bivector")
    }

    /// `pi_12 = q3, pi_23 = q2, pi_13 = 0`; not Poisson (`J_123 = -2` at `(0,0,2)`).
    pub fn non_poisson() -> BivectorField {
        BivectorField::from_upper(3, [((0, 1), var(3, 2)), ((1, 2), var(3, 1))])
            .expect("valid bivector")
    }

    /// `x d/dx ^ d/dy` on the plane.
    pub fn x_dx_dy() -> BivectorField {
        BivectorField::from_upper(2, [((0, 1), var(2, 0))]).expect("valid bivector")
    }

    /// The canonical symplectic structure on the plane, `pi_12 = 1`.
    pub fn symplectic_plane() -> BivectorField {
        BivectorField::from_upper(2, [((0, 1), Polynomial::constant(2, 1.0))])
            .expect("valid bivector")
    }

    /// Looks a preset up by the name used in the fixture files.
    pub fn by_name(name: &str) -> Option<BivectorField> {
        match name {
            "so3" => Some(so3()),
            "non_poisson" => Some(non_poisson()),
            "x_dx_dy" => Some(x_dx_dy()),
            "symplectic_plane" => Some(symplectic_plane()),
            _ => None,
        }
    }

    pub const NAMES: [&str; 4] = ["so3", "non_poisson", "x_dx_dy", "symplectic_plane"];
}
