//! Exact moments of the `np -> lambda` limit law.
//!
//! With `xi(lambda)` the sum of Poisson(lambda)-many uniforms and
//! `Y(lambda) = xi(lambda) + lambda X(lambda)` (independent summands), the
//! moments `P_n(lambda) = E[Y(lambda)^n]` are polynomials fixed by
//!
//! ```text
//! P_n(λ) = 2 ∫₀¹ uⁿ P_n(λu) du + ψ_n(λ)
//! ψ_n(λ) = Σ_{r+k+l=n, k<n, l<n} n!/(r! k! l!) g_r(λ) ∫₀¹ uᵏ(1-u)ˡ P_k(λu) P_l(λ(1-u)) du
//! ```
//!
//! where `g_r = E[xi^r]`. Coefficientwise the first equation reads
//! `[λᵏ]P_n = (n+k+1)/(n+k-1) [λᵏ]ψ_n`, with `P_1(0) = 0` closing the one
//! case `(n, k) = (1, 0)` the map leaves open. Peeling the binomial
//! expansion of `E[Y^m]` then yields `λᵐ E[X(λ)ᵐ]`.
//!
//! Everything is computed in arbitrary-precision rationals.

mod polynomial;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde_json::{json, Value};

pub use polynomial::{beta_integral, ratio, RationalPolynomial};

use crate::error::{invalid, Result};
use polynomial::factorial;

/// Highest moment order the engine accepts.
pub const MAX_ORDER: usize = 20;

fn check_order(n_max: usize) -> Result<()> {
    if n_max > MAX_ORDER {
        Err(invalid("n_max", format!("{n_max} exceeds {MAX_ORDER}")))
    } else {
        Ok(())
    }
}

fn int(n: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// `g_0..=g_{n_max}` with `g_r(λ) = E[xi(λ)^r]`.
///
/// Exponentiates `λ (s/2! + s²/3! + ...)` as a power series in `s` via
/// `G' = F' G`, i.e. `G_n = (1/n) Σ_j j F_j G_{n-j}`, then `g_r = r! G_r`.
pub fn g_moments(n_max: usize) -> Result<Vec<RationalPolynomial>> {
    check_order(n_max)?;
    let f: Vec<RationalPolynomial> = (0..=n_max)
        .map(|j| {
            if j == 0 {
                RationalPolynomial::zero()
            } else {
                RationalPolynomial::monomial(BigRational::new(BigInt::one(), factorial(j + 1)), 1)
            }
        })
        .collect();
    let mut series = vec![RationalPolynomial::one()];
    for n in 1..=n_max {
        let mut acc = RationalPolynomial::zero();
        for j in 1..=n {
            acc = &acc + &(&f[j] * &series[n - j]).scale(&int(j));
        }
        series.push(acc.scale(&BigRational::new(BigInt::one(), BigInt::from(n))));
    }
    Ok(series
        .into_iter()
        .enumerate()
        .map(|(r, s)| s.scale(&BigRational::from_integer(factorial(r))))
        .collect())
}

fn multinomial(n: usize, parts: [usize; 3]) -> BigRational {
    BigRational::new(
        factorial(n),
        parts.iter().map(|&k| factorial(k)).product::<BigInt>(),
    )
}

/// `ψ_n` from `P_0..P_{n-1}` (`lower`) and `g_0..g_n`.
pub fn psi_n(n: usize, lower: &[RationalPolynomial], g: &[RationalPolynomial]) -> RationalPolynomial {
    assert!(lower.len() >= n && g.len() > n, "need P_0..P_{{n-1}} and g_0..g_n");
    let mut psi = RationalPolynomial::zero();
    for r in 0..=n {
        for k in 0..=(n - r) {
            let l = n - r - k;
            if k == n || l == n {
                continue;
            }
            let integral = RationalPolynomial::product_beta_integral(k, &lower[k], l, &lower[l]);
            let term = (&g[r] * &integral).scale(&multinomial(n, [r, k, l]));
            psi = &psi + &term;
        }
    }
    psi
}

/// Solves `P_n(λ) = 2 ∫ uⁿ P_n(λu) du + ψ_n(λ)` coefficientwise.
pub fn p_from_psi(n: usize, psi: &RationalPolynomial) -> RationalPolynomial {
    assert!(n >= 1);
    let coeffs = psi
        .coeffs()
        .iter()
        .enumerate()
        .map(|(k, c)| {
            if n == 1 && k == 0 {
                // initial condition P_1(0) = 0
                BigRational::zero()
            } else {
                c * BigRational::new(BigInt::from(n + k + 1), BigInt::from(n + k - 1))
            }
        })
        .collect();
    RationalPolynomial::from_coeffs(coeffs)
}

/// The complete set of moment tables up to order `n_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentTables {
    /// `g_r(λ) = E[xi(λ)^r]`, `r = 0..=n_max`.
    pub g: Vec<RationalPolynomial>,
    /// `ψ_n`, `n = 0..=n_max` (entry 0 is the zero polynomial).
    pub psi: Vec<RationalPolynomial>,
    /// `P_n(λ) = E[Y(λ)^n]`, `P_0 = 1`.
    pub p: Vec<RationalPolynomial>,
    /// `λⁿ E[X(λ)ⁿ]`.
    pub x: Vec<RationalPolynomial>,
}

impl MomentTables {
    pub fn compute(n_max: usize) -> Result<Self> {
        let g = g_moments(n_max)?;
        let mut p = vec![RationalPolynomial::one()];
        let mut psi = vec![RationalPolynomial::zero()];
        for n in 1..=n_max {
            let s = psi_n(n, &p, &g);
            p.push(p_from_psi(n, &s));
            psi.push(s);
        }
        let mut x = vec![RationalPolynomial::one()];
        for m in 1..=n_max {
            let mut q = p[m].clone();
            for k in 0..m {
                let binom = BigRational::new(factorial(m), factorial(k) * factorial(m - k));
                q = &q - &(&g[m - k] * &x[k]).scale(&binom);
            }
            x.push(q);
        }
        Ok(MomentTables { g, psi, p, x })
    }

    pub fn order(&self) -> usize {
        self.g.len() - 1
    }

    /// `λ² Var[X(λ)]`.
    pub fn lambda_sq_variance(&self) -> Option<RationalPolynomial> {
        (self.order() >= 2).then(|| &self.x[2] - &(&self.x[1] * &self.x[1]))
    }

    /// `P_n - 2 ∫ uⁿ P_n(λu) du - ψ_n`; the zero polynomial when the tables are consistent.
    pub fn integral_equation_residual(&self, n: usize) -> RationalPolynomial {
        let integral = self.p[n].scaled_moment_integral(n).scale(&int(2));
        &(&self.p[n] - &integral) - &self.psi[n]
    }

    /// JSON tables with every coefficient as a `["numerator", "denominator"]` pair.
    pub fn to_json(&self) -> Value {
        let table = |polys: &[RationalPolynomial]| -> Value {
            Value::Array(polys.iter().map(polynomial_to_json).collect())
        };
        json!({
            "variable": "lambda",
            "max_order": self.order(),
            "g": table(&self.g),
            "psi": table(&self.psi),
            "P": table(&self.p),
            "lambda_pow_n_moment_X": table(&self.x),
        })
    }
}

pub fn polynomial_to_json(p: &RationalPolynomial) -> Value {
    Value::Array(
        p.coeffs()
            .iter()
            .map(|c| json!([c.numer().to_string(), c.denom().to_string()]))
            .collect(),
    )
}

/// `P_0..=P_{n_max}`.
pub fn p_polynomials(n_max: usize) -> Result<Vec<RationalPolynomial>> {
    Ok(MomentTables::compute(n_max)?.p)
}

/// `λⁿ E[X(λ)ⁿ]` for `n = 0..=n_max`.
pub fn x_lambda_moments(n_max: usize) -> Result<Vec<RationalPolynomial>> {
    Ok(MomentTables::compute(n_max)?.x)
}

/// `Σ_{k≥0} 2ᵏ / ((2ᵏ+2)(2ᵏ+3))`, summed until the geometric tail bound
/// `Σ_{j>k} 2^{-j} = 2^{-k}` falls below `tolerance / 2`.
pub fn mergesort_series(tolerance: f64) -> Result<f64> {
    if !(tolerance > 0.0) {
        return Err(invalid("tolerance", "must be positive"));
    }
    let mut sum = 0.0;
    let mut k = 0i32;
    loop {
        let t = 2f64.powi(k);
        sum += t / ((t + 2.0) * (t + 3.0));
        if 2f64.powi(-k) < tolerance / 2.0 {
            return Ok(sum);
        }
        k += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(pairs: &[(i64, i64)]) -> RationalPolynomial {
        RationalPolynomial::from_ratios(pairs)
    }

    #[test]
    fn low_order_g() {
        let g = g_moments(3).unwrap();
        assert_eq!(g[0], RationalPolynomial::one());
        assert_eq!(g[1], poly(&[(0, 1), (1, 2)]));
        assert_eq!(g[2], poly(&[(0, 1), (1, 3), (1, 4)]));
        assert_eq!(g[3], poly(&[(0, 1), (1, 4), (1, 2), (1, 8)]));
    }

    #[test]
    fn g_against_cumulant_recursion() {
        // Independent route: compound Poisson cumulants κ_j = λ E[U^j] = λ/(j+1),
        // moments m_n = Σ_{k=1}^{n} C(n-1, k-1) κ_k m_{n-k}.
        let n_max = 12;
        let g = g_moments(n_max).unwrap();
        let mut m = vec![RationalPolynomial::one()];
        for n in 1..=n_max {
            let mut acc = RationalPolynomial::zero();
            for k in 1..=n {
                let binom = BigRational::new(factorial(n - 1), factorial(k - 1) * factorial(n - k));
                let kappa = RationalPolynomial::monomial(ratio(1, k as i64 + 1), 1);
                acc = &acc + &(&kappa * &m[n - k]).scale(&binom);
            }
            m.push(acc);
        }
        assert_eq!(g, m);
    }

    #[test]
    fn g_structure() {
        let g = g_moments(MAX_ORDER).unwrap();
        for (r, gr) in g.iter().enumerate() {
            assert_eq!(gr.degree(), Some(r));
            assert!(gr.has_nonnegative_coeffs());
            if r >= 1 {
                assert!(gr.coeff(0).is_zero());
            }
        }
    }

    #[test]
    fn first_two_orders() {
        let t = MomentTables::compute(2).unwrap();
        assert_eq!(t.psi[1], poly(&[(0, 1), (1, 2)]));
        assert_eq!(t.p[1], poly(&[(0, 1), (3, 2)]));
        assert_eq!(t.psi[2], poly(&[(0, 1), (1, 3), (7, 5)]));
        assert_eq!(t.p[2], poly(&[(0, 1), (2, 3), (7, 3)]));
        assert_eq!(t.x[1], poly(&[(0, 1), (1, 1)]));
        assert_eq!(t.x[2], poly(&[(0, 1), (1, 3), (13, 12)]));
        assert_eq!(t.lambda_sq_variance().unwrap(), poly(&[(0, 1), (1, 3), (1, 12)]));
    }

    #[test]
    fn structural_properties() {
        let t = MomentTables::compute(MAX_ORDER).unwrap();
        for n in 1..=MAX_ORDER {
            assert_eq!(t.p[n].degree(), Some(n), "deg P_{n}");
            assert!(t.p[n].coeff(0).is_zero());
            assert!(t.psi[n].coeff(0).is_zero());
            assert_eq!(t.x[n].degree(), Some(n));
            assert!(t.x[n].coeff(0).is_zero());
        }
        for n in 1..=10 {
            assert!(t.integral_equation_residual(n).is_zero(), "n = {n}");
        }
    }

    #[test]
    fn moments_vanish_at_zero() {
        let t = MomentTables::compute(8).unwrap();
        for n in 1..=8 {
            let small = t.x[n].eval_f64(1e-6);
            assert!(small.abs() < 1e-5 && small > 0.0);
        }
    }

    #[test]
    fn rejects_large_orders() {
        assert!(g_moments(21).is_err());
        assert!(MomentTables::compute(21).is_err());
    }

    #[test]
    fn series() {
        let s = mergesort_series(1e-12).unwrap();
        assert!((s - 0.454674373).abs() < 1e-9, "{s}");
        assert!(s < 1.0);
        assert!(mergesort_series(0.0).is_err());
        let first = 1.0 / 12.0;
        assert!((mergesort_series(4.0).unwrap() - first).abs() < 1e-15);
    }

    #[test]
    fn json_pairs() {
        let t = MomentTables::compute(2).unwrap();
        let v = t.to_json();
        assert_eq!(v["psi"][2][2], json!(["7", "5"]));
        assert_eq!(v["g"][0][0], json!(["1", "1"]));
    }
}
