//! Sparse multivariate polynomials with real coefficients.
//!
//! Terms are kept in canonical form: a map from exponent vectors to nonzero
//! coefficients. Only coefficients that are exactly `0.0` are dropped, so
//! arithmetic stays deterministic and equality is structural.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// Exponent vector of a monomial, one entry per variable.
pub type Exponents = Vec<u32>;

#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Exponents, f64>,
}

impl Polynomial {
    /// The zero polynomial in `nvars` variables.
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, value: f64) -> Self {
        let mut poly = Self::zero(nvars);
        poly.add_term(vec![0; nvars], value);
        poly
    }

    /// The coordinate function `q_var` (0-based).
    pub fn variable(nvars: usize, var: usize) -> Result<Self> {
        if var >= nvars {
            return Err(Error::IndexOutOfRange {
                index: var,
                bound: nvars,
            });
        }
        let mut exps = vec![0; nvars];
        exps[var] = 1;
        Ok(Self::monomial(1.0, exps))
    }

    /// A single term `coef * prod q_i^exps_i`.
    pub fn monomial(coef: f64, exps: Exponents) -> Self {
        let mut poly = Self::zero(exps.len());
        poly.add_term(exps, coef);
        poly
    }

    /// Builds a polynomial from `(coefficient, exponents)` pairs, summing
    /// repeated monomials.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, Exponents)>,
    {
        let mut poly = Self::zero(nvars);
        for (coef, exps) in terms {
            if exps.len() != nvars {
                return Err(Error::DimensionMismatch {
                    expected: nvars,
                    found: exps.len(),
                });
            }
            poly.add_term(exps, coef);
        }
        Ok(poly)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, f64)> {
        self.terms.iter().map(|(e, &c)| (e, c))
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    fn add_term(&mut self, exps: Exponents, coef: f64) {
        if coef == 0.0 {
            return;
        }
        match self.terms.entry(exps) {
            Entry::Vacant(slot) => {
                slot.insert(coef);
            }
            Entry::Occupied(mut slot) => {
                *slot.get_mut() += coef;
                if *slot.get() == 0.0 {
                    slot.remove();
                }
            }
        }
    }

    fn check_same_vars(&self, other: &Polynomial) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                found: other.nvars,
            });
        }
        Ok(())
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                found: point.len(),
            });
        }
        Ok(self.eval_unchecked(point))
    }

    pub(crate) fn eval_unchecked(&self, point: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(exps, &coef)| {
                exps.iter()
                    .zip(point)
                    .fold(coef, |acc, (&e, &x)| acc * x.powi(e as i32))
            })
            .sum()
    }

    /// Exact formal partial derivative with respect to variable `var` (0-based).
    pub fn partial(&self, var: usize) -> Result<Polynomial> {
        if var >= self.nvars {
            return Err(Error::IndexOutOfRange {
                index: var,
                bound: self.nvars,
            });
        }
        let mut out = Polynomial::zero(self.nvars);
        for (exps, &coef) in &self.terms {
            let e = exps[var];
            if e == 0 {
                continue;
            }
            let mut lowered = exps.clone();
            lowered[var] = e - 1;
            out.add_term(lowered, coef * e as f64);
        }
        Ok(out)
    }

    pub fn add(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_same_vars(other)?;
        let mut out = self.clone();
        for (exps, &coef) in &other.terms {
            out.add_term(exps.clone(), coef);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Polynomial) -> Result<Polynomial> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_same_vars(other)?;
        let mut out = Polynomial::zero(self.nvars);
        for (ea, &ca) in &self.terms {
            for (eb, &cb) in &other.terms {
                let exps = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(exps, ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, factor: f64) -> Polynomial {
        let mut out = Polynomial::zero(self.nvars);
        for (exps, &coef) in &self.terms {
            out.add_term(exps.clone(), coef * factor);
        }
        out
    }

    pub fn neg(&self) -> Polynomial {
        Polynomial {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, &c)| (e.clone(), -c)).collect(),
        }
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (exps, coef)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{coef}")?;
            for (i, &e) in exps.iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "*q{}", i + 1)?,
                    _ => write!(f, "*q{}^{}", i + 1, e)?,
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(nvars: usize, i: usize) -> Polynomial {
        Polynomial::variable(nvars, i).unwrap()
    }

    #[test]
    fn eval_examples() {
        let p = Polynomial::monomial(1.0, vec![2, 1]);
        assert_eq!(p.eval(&[2.0, 3.0]).unwrap(), 12.0);
        assert_eq!(Polynomial::zero(4).eval(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 0.0);
        assert_eq!(q(3, 2).eval(&[0.0, 0.0, 2.0]).unwrap(), 2.0);
    }

    #[test]
    fn eval_rejects_wrong_length() {
        let err = q(3, 0).eval(&[1.0, 2.0]).unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                expected: 3,
                found: 2
            }
        );
    }

    #[test]
    fn partial_examples() {
        let p = Polynomial::monomial(1.0, vec![2, 1]);
        assert_eq!(p.partial(0).unwrap(), Polynomial::monomial(2.0, vec![1, 1]));
        assert!(Polynomial::constant(2, 7.5).partial(0).unwrap().is_zero());
        assert_eq!(q(3, 2).partial(2).unwrap(), Polynomial::constant(3, 1.0));
        assert!(matches!(
            p.partial(2),
            Err(Error::IndexOutOfRange { index: 2, bound: 2 })
        ));
    }

    #[test]
    fn combine_examples() {
        let one = Polynomial::constant(1, 1.0);
        let x = q(1, 0);
        let prod = x.add(&one).unwrap().mul(&x.sub(&one).unwrap()).unwrap();
        let expected =
            Polynomial::from_terms(1, [(1.0, vec![2]), (-1.0, vec![0])]).unwrap();
        assert_eq!(prod, expected);

        let p = Polynomial::from_terms(2, [(1.5, vec![1, 0]), (-2.0, vec![0, 3])]).unwrap();
        assert!(p.add(&p.scale(-1.0)).unwrap().is_zero());

        assert_eq!(q(2, 1).scale(3.0), Polynomial::monomial(3.0, vec![0, 1]));
        assert!(q(2, 0).add(&q(3, 0)).is_err());
        assert!(q(2, 0).mul(&q(3, 0)).is_err());
    }

    #[test]
    fn canonical_form_drops_exact_zeros_only() {
        let p = Polynomial::from_terms(1, [(1e-300, vec![1]), (0.0, vec![2])]).unwrap();
        assert_eq!(p.num_terms(), 1);
        assert_eq!(p.degree(), Some(1));
        assert_eq!(Polynomial::zero(2).degree(), None);
    }

    #[test]
    fn display_is_readable() {
        let p = Polynomial::from_terms(2, [(2.0, vec![1, 2])]).unwrap();
        assert_eq!(p.to_string(), "2*q1*q2^2");
        assert_eq!(Polynomial::zero(1).to_string(), "0");
    }
}
