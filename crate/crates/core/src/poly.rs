//! Multivariate polynomials with explicit coefficient tables.
//!
//! All built-in vector-field families have polynomial coefficients, so this
//! single representation gives exact evaluation, exact differentiation and a
//! rigorous sup bound on centered regions — enough to certify speed and
//! Lipschitz data without symbolic machinery.

use serde::{Deserialize, Serialize};

/// One term `coeff * x_1^p[0] * … * x_n^p[n-1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

/// Sparse polynomial in `n` variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub nvars: usize,
    pub terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial {
            nvars,
            terms: Vec::new(),
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        if c == 0.0 {
            return Self::zero(nvars);
        }
        Polynomial {
            nvars,
            terms: vec![Monomial {
                coeff: c,
                powers: vec![0; nvars],
            }],
        }
    }

    /// The coordinate monomial `c * x_k`.
    pub fn linear(nvars: usize, k: usize, c: f64) -> Self {
        let mut powers = vec![0; nvars];
        powers[k] = 1;
        Polynomial {
            nvars,
            terms: vec![Monomial { coeff: c, powers }],
        }
    }

    pub fn from_terms(nvars: usize, terms: Vec<(f64, Vec<u32>)>) -> Self {
        let terms = terms
            .into_iter()
            .filter(|(c, _)| *c != 0.0)
            .map(|(coeff, powers)| {
                assert_eq!(powers.len(), nvars, "monomial arity mismatch");
                Monomial { coeff, powers }
            })
            .collect();
        Polynomial { nvars, terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest total degree over the terms (0 for the zero polynomial).
    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|t| t.powers.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.nvars);
        let mut acc = 0.0;
        for t in &self.terms {
            let mut v = t.coeff;
            for (xi, &p) in x.iter().zip(&t.powers) {
                if p > 0 {
                    v *= xi.powi(p as i32);
                }
            }
            acc += v;
        }
        acc
    }

    /// Partial derivative with respect to variable `k`.
    pub fn derivative(&self, k: usize) -> Polynomial {
        let mut terms = Vec::new();
        for t in &self.terms {
            let p = t.powers[k];
            if p == 0 {
                continue;
            }
            let mut powers = t.powers.clone();
            powers[k] = p - 1;
            terms.push(Monomial {
                coeff: t.coeff * f64::from(p),
                powers,
            });
        }
        Polynomial {
            nvars: self.nvars,
            terms,
        }
    }

    /// `self + s * other`, merging identical multi-indices.
    pub fn add_scaled(&self, s: f64, other: &Polynomial) -> Polynomial {
        debug_assert_eq!(self.nvars, other.nvars);
        let mut terms: Vec<Monomial> = self.terms.clone();
        for t in &other.terms {
            if let Some(existing) = terms.iter_mut().find(|e| e.powers == t.powers) {
                existing.coeff += s * t.coeff;
            } else {
                terms.push(Monomial {
                    coeff: s * t.coeff,
                    powers: t.powers.clone(),
                });
            }
        }
        terms.retain(|t| t.coeff != 0.0);
        Polynomial {
            nvars: self.nvars,
            terms,
        }
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        Polynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|t| s * t.coeff != 0.0)
                .map(|t| Monomial {
                    coeff: s * t.coeff,
                    powers: t.powers.clone(),
                })
                .collect(),
        }
    }

    /// Rigorous bound on `sup |p(x)|` over the centered ball `|x| ≤ r`
    /// (also valid for the centered cube of half-width `r`): the triangle
    /// inequality term by term, `Σ |c_α| r^{|α|}`.
    pub fn sup_bound_centered(&self, r: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let total: u32 = t.powers.iter().sum();
                t.coeff.abs() * r.powi(total as i32)
            })
            .sum()
    }

    /// Product polynomial, merging identical multi-indices.
    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        debug_assert_eq!(self.nvars, other.nvars);
        let mut out = Polynomial::zero(self.nvars);
        for a in &self.terms {
            for b in &other.terms {
                let powers: Vec<u32> = a
                    .powers
                    .iter()
                    .zip(&b.powers)
                    .map(|(p, q)| p + q)
                    .collect();
                let coeff = a.coeff * b.coeff;
                if let Some(existing) = out.terms.iter_mut().find(|e| e.powers == powers) {
                    existing.coeff += coeff;
                } else {
                    out.terms.push(Monomial { coeff, powers });
                }
            }
        }
        out.terms.retain(|t| t.coeff != 0.0);
        out
    }

    /// Substitute `x_k -> s_k * x_k` (anisotropic dilation pullback).
    pub fn dilate(&self, scales: &[f64]) -> Polynomial {
        debug_assert_eq!(scales.len(), self.nvars);
        Polynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|t| {
                    let mut coeff = t.coeff;
                    for (&s, &p) in scales.iter().zip(&t.powers) {
                        if p > 0 {
                            coeff *= s.powi(p as i32);
                        }
                    }
                    Monomial {
                        coeff,
                        powers: t.powers.clone(),
                    }
                })
                .filter(|t| t.coeff != 0.0)
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_derive() {
        // p(x,y) = 3 x^2 y - y
        let p = Polynomial::from_terms(2, vec![(3.0, vec![2, 1]), (-1.0, vec![0, 1])]);
        assert_eq!(p.eval(&[2.0, 1.0]), 11.0);
        let px = p.derivative(0);
        assert_eq!(px.eval(&[2.0, 1.0]), 12.0);
        let py = p.derivative(1);
        assert_eq!(py.eval(&[2.0, 5.0]), 11.0);
    }

    #[test]
    fn sup_bound_is_rigorous_on_samples() {
        let p = Polynomial::from_terms(2, vec![(1.0, vec![1, 0]), (-0.5, vec![0, 2])]);
        let bound = p.sup_bound_centered(2.0);
        for i in -10..=10 {
            for j in -10..=10 {
                let x = [0.2 * f64::from(i), 0.2 * f64::from(j)];
                if x[0].hypot(x[1]) <= 2.0 {
                    assert!(p.eval(&x).abs() <= bound + 1e-12);
                }
            }
        }
    }

    #[test]
    fn add_scaled_merges_terms() {
        let p = Polynomial::linear(2, 0, 1.0);
        let q = Polynomial::linear(2, 0, 3.0);
        let r = p.add_scaled(2.0, &q);
        assert_eq!(r.terms.len(), 1);
        assert_eq!(r.eval(&[1.0, 0.0]), 7.0);
    }
}
