use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Sum of monomials `c_j ∏_k x_k^{e_jk}` with positive coefficients, stored
/// as `ln c_j` so that very small or large coefficients stay representable.
#[derive(Debug, Clone, PartialEq)]
pub struct Posynomial {
    n_vars: usize,
    ln_coef: Vec<f64>,
    exponents: Vec<Vec<f64>>,
}

impl Posynomial {
    pub fn new(n_vars: usize) -> Self {
        Self { n_vars, ln_coef: Vec::new(), exponents: Vec::new() }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_terms(&self) -> usize {
        self.ln_coef.len()
    }

    pub fn push(&mut self, ln_coef: f64, exponents: Vec<f64>) -> Result<()> {
        if exponents.len() != self.n_vars {
            return Err(Error::InvalidParameter(format!(
                "monomial has {} exponents for {} variables",
                exponents.len(),
                self.n_vars
            )));
        }
        if ln_coef.is_nan() || exponents.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidParameter("monomial coefficient or exponent not finite".into()));
        }
        self.ln_coef.push(ln_coef);
        self.exponents.push(exponents);
        Ok(())
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_vars || x.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::Domain(format!("posynomial needs {} positive variables, got {x:?}", self.n_vars)));
        }
        Ok(())
    }

    fn ln_terms(&self, x: &[f64]) -> Vec<f64> {
        let ln_x: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        self.ln_coef
            .iter()
            .zip(&self.exponents)
            .map(|(c, e)| c + e.iter().zip(&ln_x).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    }

    /// Natural log of the value, by log-sum-exp.
    pub fn ln_value(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        let t = self.ln_terms(x);
        let top = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return Ok(top);
        }
        Ok(top + t.iter().map(|v| (v - top).exp()).sum::<f64>().ln())
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.ln_value(x).map(f64::exp)
    }

    /// Value, gradient and Hessian of `e^{-shift}·p(x)`.
    pub fn scaled_derivatives(&self, x: &[f64], shift: f64) -> Result<(f64, DVector<f64>, DMatrix<f64>)> {
        self.check_point(x)?;
        let n = self.n_vars;
        let mut value = 0.0;
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        for (lt, e) in self.ln_terms(x).into_iter().zip(&self.exponents) {
            let t = (lt - shift).exp();
            value += t;
            for k in 0..n {
                let gk = e[k] / x[k];
                grad[k] += t * gk;
                hess[(k, k)] -= t * e[k] / (x[k] * x[k]);
                for l in 0..n {
                    hess[(k, l)] += t * gk * e[l] / x[l];
                }
            }
        }
        Ok((value, grad, hess))
    }
}
