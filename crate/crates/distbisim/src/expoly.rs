//! Exact densities of the form `sum c . t^k . e^(-r t)` on `[0, inf)`.
//!
//! This class is closed under the operations the clock-race semantics
//! needs: mixing, scaling, and convolution with an exponential stage. The
//! functions `t^k e^(-r t)` are linearly independent, so equality of
//! canonical forms decides equality of the represented densities.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::exactlin::{format_rat, parse_rat, LinAlgError, Rat};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub coef: Rat,
    pub power: u32,
    pub rate: Rat,
}

/// Wire form of a term: rationals as literals.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermFile {
    pub coef: String,
    pub power: u32,
    pub rate: String,
}

impl From<&Term> for TermFile {
    fn from(t: &Term) -> Self {
        TermFile {
            coef: format_rat(&t.coef),
            power: t.power,
            rate: format_rat(&t.rate),
        }
    }
}

impl TryFrom<&TermFile> for Term {
    type Error = LinAlgError;

    fn try_from(t: &TermFile) -> Result<Self, LinAlgError> {
        Ok(Term {
            coef: parse_rat(&t.coef)?,
            power: t.power,
            rate: parse_rat(&t.rate)?,
        })
    }
}

/// Canonical term list: sorted by (rate, power), no duplicates, no zero
/// coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Expolynomial {
    terms: Vec<Term>,
}

fn factorial(p: u32) -> BigInt {
    (1..=p as u64).map(BigInt::from).product()
}

impl Expolynomial {
    pub fn zero() -> Self {
        Expolynomial { terms: Vec::new() }
    }

    pub fn term(coef: Rat, power: u32, rate: Rat) -> Self {
        let mut e = Expolynomial {
            terms: vec![Term { coef, power, rate }],
        };
        e.normalize();
        e
    }

    /// The density of an exponential with the given rate.
    pub fn exponential(rate: Rat) -> Self {
        Expolynomial::term(rate.clone(), 0, rate)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn to_file(&self) -> Vec<TermFile> {
        self.terms.iter().map(TermFile::from).collect()
    }

    pub fn from_file(terms: &[TermFile]) -> Result<Self, LinAlgError> {
        let mut e = Expolynomial {
            terms: terms
                .iter()
                .map(Term::try_from)
                .collect::<Result<_, _>>()?,
        };
        e.normalize();
        Ok(e)
    }

    fn normalize(&mut self) {
        self.terms
            .sort_by(|a, b| a.rate.cmp(&b.rate).then(a.power.cmp(&b.power)));
        let mut out: Vec<Term> = Vec::with_capacity(self.terms.len());
        for t in self.terms.drain(..) {
            match out.last_mut() {
                Some(last) if last.rate == t.rate && last.power == t.power => {
                    last.coef += t.coef;
                }
                _ => out.push(t),
            }
        }
        out.retain(|t| !t.coef.is_zero());
        self.terms = out;
    }

    pub fn add(&self, other: &Expolynomial) -> Expolynomial {
        let mut e = Expolynomial {
            terms: self.terms.iter().chain(&other.terms).cloned().collect(),
        };
        e.normalize();
        e
    }

    pub fn scale(&self, c: &Rat) -> Expolynomial {
        if c.is_zero() {
            return Expolynomial::zero();
        }
        Expolynomial {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coef: &t.coef * c,
                    power: t.power,
                    rate: t.rate.clone(),
                })
                .collect(),
        }
    }

    /// Convolution with the exponential density `lambda e^(-lambda t)`.
    /// Stays inside the class; equal rates raise the polynomial power.
    pub fn convolve_exp(&self, lambda: &Rat) -> Expolynomial {
        let mut out = Expolynomial::zero();
        for t in &self.terms {
            let piece = if t.rate == *lambda {
                // c t^p * lambda e^(-lambda t) convolves to
                // c lambda / (p+1) t^(p+1) e^(-lambda t)
                Expolynomial::term(
                    &t.coef * lambda / Rat::from_integer(BigInt::from(t.power + 1)),
                    t.power + 1,
                    lambda.clone(),
                )
            } else {
                let delta = &t.rate - lambda;
                let fact_p = Rat::from_integer(factorial(t.power));
                let k = &t.coef * lambda * &fact_p / pow_rat(&delta, t.power + 1);
                let mut piece = Expolynomial::term(k.clone(), 0, lambda.clone());
                let mut delta_pow = Rat::one();
                for j in 0..=t.power {
                    let c = -&k * &delta_pow / Rat::from_integer(factorial(j));
                    piece = piece.add(&Expolynomial::term(c, j, t.rate.clone()));
                    delta_pow *= &delta;
                }
                piece
            };
            out = out.add(&piece);
        }
        out
    }

    /// `integral over [0, inf)` via `int t^p e^(-r t) = p! / r^(p+1)`.
    pub fn integral(&self) -> Rat {
        self.terms
            .iter()
            .map(|t| {
                &t.coef * Rat::from_integer(factorial(t.power)) / pow_rat(&t.rate, t.power + 1)
            })
            .sum()
    }

    /// Floating-point evaluation, for validation against simulation only;
    /// never used on a decision path.
    pub fn eval_f64(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|term| {
                let c = rat_f64(&term.coef);
                let r = rat_f64(&term.rate);
                c * t.powi(term.power as i32) * (-r * t).exp()
            })
            .sum()
    }
}

fn pow_rat(r: &Rat, p: u32) -> Rat {
    let mut out = Rat::one();
    for _ in 0..p {
        out *= r;
    }
    out
}

pub fn rat_f64(r: &Rat) -> f64 {
    let num = r.numer().to_string().parse::<f64>().unwrap_or(f64::NAN);
    let den = r.denom().to_string().parse::<f64>().unwrap_or(f64::NAN);
    num / den
}

impl std::fmt::Display for Expolynomial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}", format_rat(&t.coef))?;
            if t.power > 0 {
                write!(f, "*t^{}", t.power)?;
            }
            write!(f, "*exp(-{}t)", format_rat(&t.rate))?;
        }
        Ok(())
    }
}
