//! Samplers and closed forms for the three limit laws of `I(n,p)/(n^2 p)`.
//!
//! * `X_c` (`p -> c`): fixed point of
//!   `X = A X' + B X'' + T` with `A = ((1-2c)U+c)^2`, `B = ((2c-1)U+1-c)^2`,
//!   `T = (1-c)/2 (U^2+(1-U)^2) + c U(1-U)`. Sampled by population iteration.
//! * `X(lambda)` (`np -> lambda`): `(1/lambda) sum_k sum_{x in Pi_k} |x - Y_{k,J_k(x)}|`
//!   over independent Poisson(lambda) point sets `Pi_k` and a fragmentation tree.
//! * `Theta(lambda, u)` and `xi(t)`, the Poisson building blocks of `X(lambda)`.

use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive};
use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fragmentation::MAX_DEPTH;
use crate::harness::EmpiricalDistribution;
use crate::moments::RationalPolynomial;
use crate::rng::{par_draws, SeedPath};

/// Largest mean drawn by direct inversion; larger means are split into
/// independent pieces.
pub const POISSON_INVERSION_MAX: f64 = 30.0;

/// Smallest pool accepted by [`sample_xc_pool`].
pub const MIN_POOL_SIZE: usize = 1_000;

pub const DEFAULT_POOL_SIZE: usize = 100_000;
pub const DEFAULT_GENERATIONS: usize = 60;

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(invalid("lambda", format!("{lambda} is not a positive finite number")))
    }
}

fn check_c(c: f64) -> Result<()> {
    if (0.0..=1.0).contains(&c) {
        Ok(())
    } else {
        Err(invalid("c", format!("{c} is outside [0, 1]")))
    }
}

/// A Poisson(`mean`) draw. `mean` must be finite and nonnegative.
pub fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    debug_assert!(mean >= 0.0 && mean.is_finite());
    if mean > POISSON_INVERSION_MAX {
        let pieces = (mean / POISSON_INVERSION_MAX).ceil();
        return (0..pieces as u64).map(|_| poisson(mean / pieces, rng)).sum();
    }
    let u: f64 = rng.random();
    let mut prob = (-mean).exp();
    let mut cdf = prob;
    let mut k = 0u64;
    while u >= cdf {
        k += 1;
        prob *= mean / k as f64;
        if prob == 0.0 && k as f64 > mean {
            break;
        }
        cdf += prob;
    }
    k
}

/// `Theta(lambda, u) = (1/lambda) sum_{i <= N} |u - V_i|`, `N ~ Poisson(lambda)`.
pub fn sample_theta<R: Rng + ?Sized>(lambda: f64, u: f64, rng: &mut R) -> Result<f64> {
    check_lambda(lambda)?;
    if !(0.0..=1.0).contains(&u) {
        return Err(invalid("u", format!("{u} is outside [0, 1]")));
    }
    Ok(theta(lambda, u, rng))
}

fn theta<R: Rng + ?Sized>(lambda: f64, u: f64, rng: &mut R) -> f64 {
    let n = poisson(lambda, rng);
    let sum: f64 = (0..n).map(|_| (u - rng.random::<f64>()).abs()).sum();
    sum / lambda
}

/// `xi(t)`: the sum of Poisson(`t`)-many independent uniforms on `(0, 1]`.
pub fn sample_xi<R: Rng + ?Sized>(t: f64, rng: &mut R) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid("t", format!("{t} is not a nonnegative finite number")));
    }
    let n = poisson(t, rng);
    Ok((0..n).map(|_| 1.0 - rng.random::<f64>()).sum())
}

#[derive(Clone, Copy, Debug)]
struct Node {
    cut: f64,
    left: u32,
    right: u32,
}

impl Node {
    const FRESH: Node = Node {
        cut: f64::NAN,
        left: 0,
        right: 0,
    };
}

/// Reusable sampler for `X(lambda)` truncated at depth `K`.
///
/// The fragmentation tree is grown lazily: only intervals that contain a
/// Poisson point of a deeper level are ever split, so a draw costs about
/// `lambda K^2 / 2` node visits instead of `2^K`. The law is the same as
/// building the full tree first.
#[derive(Debug, Default)]
pub struct XLambdaSampler {
    nodes: Vec<Node>,
}

impl XLambdaSampler {
    pub fn new() -> Self {
        Self::default()
    }

    /// One draw of `X(lambda)` keeping levels `1..=depth`.
    ///
    /// Dropping the levels beyond `depth` lowers the mean by `(2/3)^depth`.
    pub fn sample<R: Rng + ?Sized>(&mut self, lambda: f64, depth: usize, rng: &mut R) -> Result<f64> {
        check_lambda(lambda)?;
        if depth > MAX_DEPTH {
            return Err(Error::DepthTooLarge { depth, max: MAX_DEPTH });
        }
        Ok(self.draw(lambda, depth, rng))
    }

    fn draw<R: Rng + ?Sized>(&mut self, lambda: f64, depth: usize, rng: &mut R) -> f64 {
        self.nodes.clear();
        self.nodes.push(Node::FRESH);
        let mut total = 0.0;
        for k in 1..=depth {
            for _ in 0..poisson(lambda, rng) {
                let x: f64 = rng.random();
                total += (x - self.cut_above(x, k - 1, rng)).abs();
            }
        }
        total / lambda
    }

    /// The cut inside the level-`level` interval that contains `x`.
    fn cut_above<R: Rng + ?Sized>(&mut self, x: f64, level: usize, rng: &mut R) -> f64 {
        let (mut lo, mut hi, mut idx) = (0.0, 1.0, 0usize);
        for _ in 0..level {
            let cut = self.ensure_cut(idx, lo, hi, rng);
            let next = if x < cut {
                hi = cut;
                self.nodes[idx].left
            } else {
                lo = cut;
                self.nodes[idx].right
            };
            idx = if next == 0 {
                let fresh = self.nodes.len();
                self.nodes.push(Node::FRESH);
                if x < cut {
                    self.nodes[idx].left = fresh as u32;
                } else {
                    self.nodes[idx].right = fresh as u32;
                }
                fresh
            } else {
                next as usize
            };
        }
        self.ensure_cut(idx, lo, hi, rng)
    }

    fn ensure_cut<R: Rng + ?Sized>(&mut self, idx: usize, lo: f64, hi: f64, rng: &mut R) -> f64 {
        let node = &mut self.nodes[idx];
        if node.cut.is_nan() {
            let u: f64 = rng.random();
            node.cut = lo + u * (hi - lo);
        }
        node.cut
    }

    /// `U^2 X(lambda U) + (1-U)^2 X~(lambda (1-U)) + Theta(lambda, U)` with
    /// the inner copies truncated one level shallower, so the result has the
    /// law of a depth-`depth` draw of `X(lambda)` when the one-step identity holds.
    pub fn one_step_composite<R: Rng + ?Sized>(&mut self, lambda: f64, depth: usize, rng: &mut R) -> Result<f64> {
        check_lambda(lambda)?;
        if depth == 0 || depth > MAX_DEPTH {
            return Err(invalid("depth", format!("{depth} outside 1..={MAX_DEPTH}")));
        }
        let u: f64 = rng.random();
        let mut inner = |scale: f64, rng: &mut R| {
            if scale > 0.0 {
                scale * scale * self.draw(lambda * scale, depth - 1, rng)
            } else {
                0.0
            }
        };
        let left = inner(u, rng);
        let right = inner(1.0 - u, rng);
        Ok(left + right + theta(lambda, u, rng))
    }
}

/// One draw of `X(lambda)` truncated at depth `depth`.
pub fn sample_x_lambda<R: Rng + ?Sized>(lambda: f64, depth: usize, rng: &mut R) -> Result<f64> {
    XLambdaSampler::new().sample(lambda, depth, rng)
}

/// `count` draws of `X(lambda)` on deterministic substreams of `seed`.
pub fn sample_x_lambda_many(lambda: f64, depth: usize, count: usize, seed: SeedPath) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    if depth > MAX_DEPTH {
        return Err(Error::DepthTooLarge { depth, max: MAX_DEPTH });
    }
    let mut out = vec![0.0; count];
    use rayon::prelude::*;
    out.par_chunks_mut(crate::rng::CHUNK)
        .enumerate()
        .for_each(|(c, chunk)| {
            let mut rng = seed.child(c as u64).stream();
            let mut sampler = XLambdaSampler::new();
            for slot in chunk {
                *slot = sampler.draw(lambda, depth, &mut rng);
            }
        });
    Ok(out)
}

/// A population of draws approximating a law.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SamplePool {
    samples: Vec<f64>,
    generation: usize,
}

impl SamplePool {
    pub fn new(samples: Vec<f64>, generation: usize) -> Result<Self> {
        if samples.len() < 2 {
            return Err(invalid("samples", "a pool needs at least two values"));
        }
        if let Some(&bad) = samples.iter().find(|x| !x.is_finite()) {
            return Err(Error::NonFinite(bad));
        }
        Ok(SamplePool { samples, generation })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn to_empirical(&self) -> EmpiricalDistribution {
        EmpiricalDistribution::new(self.samples.clone()).expect("pool values are finite")
    }

    /// Sorted values, one per line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for x in self.to_empirical().samples() {
            writeln!(out, "{x}")?;
        }
        Ok(())
    }
}

/// The random coefficients `(A^(1), ..., A^(I))` and toll `T` of a
/// distributional fixed-point equation `X = sum_i A^(i) X^(i) + T`.
pub trait CoefficientLaw {
    fn arity(&self) -> usize;

    /// Fills `a` with one joint draw of the coefficients and returns `T`.
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, a: &mut [f64]) -> f64;
}

/// The coefficients of `X_c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CaseOneLaw {
    c: f64,
}

impl CaseOneLaw {
    pub fn new(c: f64) -> Result<Self> {
        check_c(c)?;
        Ok(CaseOneLaw { c })
    }

    pub fn c(&self) -> f64 {
        self.c
    }
}

impl CoefficientLaw for CaseOneLaw {
    fn arity(&self) -> usize {
        2
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, a: &mut [f64]) -> f64 {
        let c = self.c;
        let u: f64 = rng.random();
        let left = (1.0 - 2.0 * c) * u + c;
        a[0] = left * left;
        a[1] = (1.0 - left) * (1.0 - left);
        (1.0 - c) / 2.0 * (u * u + (1.0 - u) * (1.0 - u)) + c * u * (1.0 - u)
    }
}

/// Population iteration of `x' = sum_i A^(i) x_i + T`, starting from the
/// point mass at 0. Each generation draws every `x_i` independently, with
/// replacement, from the previous generation only.
pub fn iterate_pool<L: CoefficientLaw + Sync>(
    law: &L,
    size: usize,
    generations: usize,
    seed: SeedPath,
) -> Result<SamplePool> {
    if size < 2 {
        return Err(invalid("pool_size", "must be at least 2"));
    }
    let arity = law.arity();
    let mut pool = vec![0.0; size];
    for g in 1..=generations {
        let prev = &pool;
        pool = par_draws(size, seed.child(g as u64), |rng| {
            let mut a = [0.0; 8];
            let mut heap;
            let coeffs: &mut [f64] = if arity <= a.len() {
                &mut a[..arity]
            } else {
                heap = vec![0.0; arity];
                &mut heap
            };
            let t = law.draw(rng, coeffs);
            coeffs
                .iter()
                .map(|&w| w * prev[rng.random_range(0..size)])
                .sum::<f64>()
                + t
        });
    }
    SamplePool::new(pool, generations)
}

/// A pool approximating `X_c` after `generations` contraction steps.
///
/// The Wasserstein-1 distance to `X_c` shrinks by at least `(2/3)(1-c+c^2)`
/// per generation, on top of the Monte Carlo error of the pool itself.
pub fn sample_xc_pool(c: f64, size: usize, generations: usize, seed: SeedPath) -> Result<SamplePool> {
    let law = CaseOneLaw::new(c)?;
    if size < MIN_POOL_SIZE {
        return Err(invalid("pool_size", format!("{size} is below {MIN_POOL_SIZE}")));
    }
    if generations == 0 {
        return Err(invalid("generations", "must be at least 1"));
    }
    iterate_pool(&law, size, generations, seed)
}

/// `d1` contraction factor of the `X_c` map.
pub fn xc_contraction_constant(c: f64) -> f64 {
    2.0 / 3.0 * (1.0 - c + c * c)
}

/// `(E[X_c], Var[X_c])` from the closed forms.
pub fn mean_var_xc(c: f64) -> Result<(f64, f64)> {
    check_c(c)?;
    let d = 1.0 + 2.0 * c - 2.0 * c * c;
    assert!(d > 0.0);
    let mean = (2.0 - c) / (2.0 * d);
    let q = 3.0 + 6.0 * c - 8.0 * c.powi(2) + 4.0 * c.powi(3) - 2.0 * c.powi(4);
    let var = (1.0 - c).powi(2) * (1.0 - 2.0 * c).powi(2) / (4.0 * d * d * q);
    Ok((mean, var))
}

/// [`mean_var_xc`] in exact arithmetic.
pub fn mean_var_xc_exact(c: &BigRational) -> Result<(BigRational, BigRational)> {
    if c.is_negative() || c > &BigRational::one() {
        return Err(invalid("c", format!("{c} is outside [0, 1]")));
    }
    let r = |n: i64| BigRational::from_integer(BigInt::from(n));
    let c2 = c * c;
    let c3 = &c2 * c;
    let c4 = &c3 * c;
    let d = r(1) + r(2) * c - r(2) * &c2;
    let mean = (r(2) - c) / (r(2) * &d);
    let q = r(3) + r(6) * c - r(8) * &c2 + r(4) * &c3 - r(2) * &c4;
    let one_minus = r(1) - c;
    let one_minus_two = r(1) - r(2) * c;
    let num = &one_minus * &one_minus * &one_minus_two * &one_minus_two;
    let var = num / (r(4) * &d * &d * q);
    Ok((mean, var))
}

/// The moment inputs of a fixed-point equation `X = sum_i A^(i) X^(i) + T`.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedPointMoments {
    /// `E[A^(i)]`.
    pub mean_a: Vec<BigRational>,
    /// `E[(A^(i))^2]`.
    pub mean_a_sq: Vec<BigRational>,
    pub mean_t: BigRational,
    pub mean_t_sq: BigRational,
    /// `E[T sum_i A^(i)]`.
    pub mean_t_sum_a: BigRational,
    /// `E[(sum_i A^(i))^2]`.
    pub mean_sum_a_sq: BigRational,
}

/// A coefficient law together with its exact moments.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedPointSystem<L> {
    pub law: L,
    pub moments: FixedPointMoments,
}

/// The `X_c` equation with every moment computed as an exact integral of a
/// polynomial in `U`.
pub fn case_one_system(c: &BigRational) -> Result<FixedPointSystem<CaseOneLaw>> {
    let law = CaseOneLaw::new(c.to_f64().unwrap_or(f64::NAN))?;
    let r = |n: i64| BigRational::from_integer(BigInt::from(n));
    let poly = |coeffs: Vec<BigRational>| RationalPolynomial::from_coeffs(coeffs);
    let one = r(1);
    // polynomials in U
    let left = poly(vec![c.clone(), &one - r(2) * c]);
    let right = poly(vec![&one - c, r(2) * c - &one]);
    let a = &left * &left;
    let b = &right * &right;
    let u = poly(vec![r(0), r(1)]);
    let one_minus_u = poly(vec![r(1), r(-1)]);
    let squares = &(&u * &u) + &(&one_minus_u * &one_minus_u);
    let t = &squares.scale(&((&one - c) / r(2))) + &(&u * &one_minus_u).scale(c);
    let sum_a = &a + &b;
    let moments = FixedPointMoments {
        mean_a: vec![a.integrate_unit(), b.integrate_unit()],
        mean_a_sq: vec![(&a * &a).integrate_unit(), (&b * &b).integrate_unit()],
        mean_t: t.integrate_unit(),
        mean_t_sq: (&t * &t).integrate_unit(),
        mean_t_sum_a: (&t * &sum_a).integrate_unit(),
        mean_sum_a_sq: (&sum_a * &sum_a).integrate_unit(),
    };
    Ok(FixedPointSystem { law, moments })
}

/// [`case_one_system`] at the exact binary value of `c`.
pub fn case_one_system_f64(c: f64) -> Result<FixedPointSystem<CaseOneLaw>> {
    check_c(c)?;
    let exact = BigRational::from_f64(c).ok_or(Error::NonFinite(c))?;
    case_one_system(&exact)
}

impl FixedPointMoments {
    /// Mean and variance of the fixed point:
    ///
    /// ```text
    /// E[X]   = E[T] / (1 - sum E[A])
    /// Var[X] = (E[T^2] + 2 E[X] E[T sum A] + (E[(sum A)^2] - 1) E[X]^2) / (1 - sum E[A^2])
    /// ```
    pub fn mean_variance(&self) -> Result<(BigRational, BigRational)> {
        if self.mean_a.len() != self.mean_a_sq.len() {
            return Err(invalid("moments", "E[A] and E[A^2] have different lengths"));
        }
        let one = BigRational::one();
        let sum_a: BigRational = self.mean_a.iter().sum();
        let sum_a_sq: BigRational = self.mean_a_sq.iter().sum();
        if sum_a >= one {
            return Err(Error::NotContracting(format!("sum E[A] = {sum_a} >= 1")));
        }
        if sum_a_sq >= one {
            return Err(Error::NotContracting(format!("sum E[A^2] = {sum_a_sq} >= 1")));
        }
        let mean = &self.mean_t / (&one - &sum_a);
        let two = BigRational::from_integer(BigInt::from(2));
        let num = &self.mean_t_sq + two * &mean * &self.mean_t_sum_a + (&self.mean_sum_a_sq - &one) * &mean * &mean;
        let var = num / (&one - &sum_a_sq);
        Ok((mean, var))
    }
}

pub fn fixed_point_moments<L>(system: &FixedPointSystem<L>) -> Result<(BigRational, BigRational)> {
    system.moments.mean_variance()
}

/// Lower end of the bracket isolating the larger root of `1/rho = -2e ln rho`.
pub const RHO_BRACKET: (f64, f64) = (0.5, 0.99);

/// `1/rho + 2e ln rho`, zero at the growth constant.
pub fn rho_residual(rho: f64) -> f64 {
    1.0 / rho + 2.0 * std::f64::consts::E * rho.ln()
}

/// The larger root of `1/rho = -2e ln rho` (about 0.792977), by bisection.
///
/// The residual is increasing on `(1/(2e), 1)`, so the bracket holds exactly one root.
pub fn solve_rho() -> f64 {
    let (mut lo, mut hi) = RHO_BRACKET;
    debug_assert!(rho_residual(lo) < 0.0 && rho_residual(hi) > 0.0);
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if rho_residual(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `(2/(1+alpha))^(1/alpha)`, the per-level decay bound on the largest width
/// obtained from the `F_{k,alpha}` martingale.
pub fn width_decay_rate(alpha: f64) -> f64 {
    (2.0 / (1.0 + alpha)).powf(1.0 / alpha)
}

/// `(1 + alpha*, rate)` minimizing [`width_decay_rate`], by golden-section search.
pub fn optimal_width_decay() -> (f64, f64) {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (1.5, 10.0);
    let f = |one_plus: f64| width_decay_rate(one_plus - 1.0);
    while b - a > 1e-10 {
        let x1 = b - phi * (b - a);
        let x2 = a + phi * (b - a);
        if f(x1) < f(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::ratio;
    use crate::rng::stream_from_seed;
    use num_traits::Zero;

    fn zero_toll_moments(
        mean_a: Vec<BigRational>,
        mean_a_sq: Vec<BigRational>,
        mean_sum_a_sq: BigRational,
    ) -> FixedPointMoments {
        FixedPointMoments {
            mean_a,
            mean_a_sq,
            mean_t: BigRational::zero(),
            mean_t_sq: BigRational::zero(),
            mean_t_sum_a: BigRational::zero(),
            mean_sum_a_sq,
        }
    }

    fn mean_and_se(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (v / n).sqrt())
    }

    #[test]
    fn poisson_moments() {
        let mut rng = stream_from_seed(1);
        for &mean in &[0.0, 0.3, 2.0, 29.0, 75.0] {
            let xs: Vec<f64> = (0..200_000).map(|_| poisson(mean, &mut rng) as f64).collect();
            let (m, se) = mean_and_se(&xs);
            let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
            assert!((m - mean).abs() <= 4.0 * se.max(1e-12), "mean {m} vs {mean}");
            if mean > 0.0 {
                assert!((v / mean - 1.0).abs() < 0.03, "var {v} vs {mean}");
            }
        }
    }

    #[test]
    fn poisson_zero_probability() {
        let mut rng = stream_from_seed(2);
        let zeros = (0..100_000).filter(|_| poisson(1.0, &mut rng) == 0).count() as f64 / 1e5;
        assert!((zeros - (-1.0f64).exp()).abs() < 0.006);
    }

    #[test]
    fn argument_checks() {
        let mut rng = stream_from_seed(0);
        assert!(sample_theta(0.0, 0.5, &mut rng).is_err());
        assert!(sample_theta(1.0, 1.5, &mut rng).is_err());
        assert!(sample_xi(-1.0, &mut rng).is_err());
        assert_eq!(sample_xi(0.0, &mut rng).unwrap(), 0.0);
        assert!(sample_x_lambda(-2.0, 5, &mut rng).is_err());
        assert!(sample_x_lambda(2.0, 31, &mut rng).is_err());
        assert!(sample_xc_pool(1.2, 1000, 1, SeedPath::new(0)).is_err());
        assert!(sample_xc_pool(0.5, 10, 1, SeedPath::new(0)).is_err());
        assert!(mean_var_xc(-0.1).is_err());
    }

    #[test]
    fn lazy_tree_is_consistent_within_a_draw() {
        let mut s = XLambdaSampler::new();
        let mut rng = stream_from_seed(3);
        s.nodes.push(Node::FRESH);
        let a = s.cut_above(0.3, 4, &mut rng);
        let b = s.cut_above(0.3, 4, &mut rng);
        assert_eq!(a, b);
        let root = s.cut_above(0.9, 0, &mut rng);
        assert_eq!(root, s.nodes[0].cut);
    }

    #[test]
    fn x_lambda_depth_zero_is_zero() {
        assert_eq!(sample_x_lambda(2.0, 0, &mut stream_from_seed(0)).unwrap(), 0.0);
    }

    #[test]
    fn x_lambda_mean_one() {
        let xs = sample_x_lambda_many(2.0, 25, 40_000, SeedPath::new(4)).unwrap();
        let (m, se) = mean_and_se(&xs);
        assert!((m - 1.0).abs() < 4.0 * se, "{m} ± {se}");
    }

    #[test]
    fn many_is_deterministic() {
        let a = sample_x_lambda_many(1.5, 10, 5000, SeedPath::new(5)).unwrap();
        let b = sample_x_lambda_many(1.5, 10, 5000, SeedPath::new(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn closed_forms_at_special_points() {
        assert_eq!(mean_var_xc(1.0).unwrap(), (0.5, 0.0));
        assert_eq!(mean_var_xc(0.5).unwrap(), (0.5, 0.0));
        let (m, v) = mean_var_xc(0.0).unwrap();
        assert_eq!(m, 1.0);
        assert!((v - 1.0 / 12.0).abs() < 1e-16);
        let (me, ve) = mean_var_xc_exact(&ratio(0, 1)).unwrap();
        assert_eq!((me, ve), (ratio(1, 1), ratio(1, 12)));
    }

    #[test]
    fn fixed_point_calculator_reproduces_closed_forms() {
        for c in [ratio(0, 1), ratio(3, 10), ratio(1, 2), ratio(1, 1), ratio(1, 4), ratio(3, 4)] {
            let system = case_one_system(&c).unwrap();
            assert_eq!(fixed_point_moments(&system).unwrap(), mean_var_xc_exact(&c).unwrap(), "c = {c}");
        }
    }

    #[test]
    fn fixed_point_edge_cases() {
        let m = zero_toll_moments(vec![ratio(1, 3), ratio(1, 3)], vec![ratio(1, 5), ratio(1, 5)], ratio(1, 2));
        assert_eq!(m.mean_variance().unwrap(), (ratio(0, 1), ratio(0, 1)));
        let bad = zero_toll_moments(vec![ratio(1, 2), ratio(1, 2)], vec![ratio(1, 3), ratio(1, 3)], ratio(1, 1));
        assert!(matches!(bad.mean_variance(), Err(Error::NotContracting(_))));
    }

    #[test]
    fn c_one_pool_is_degenerate() {
        let pool = sample_xc_pool(1.0, 2000, 60, SeedPath::new(6)).unwrap();
        let dev = pool.samples().iter().map(|x| (x - 0.5).abs()).sum::<f64>() / pool.len() as f64;
        assert!(dev < 1e-3, "{dev}");
        assert_eq!(pool.generation(), 60);
    }

    #[test]
    fn pool_is_deterministic_and_writes_sorted_csv() {
        let a = sample_xc_pool(0.25, 1000, 5, SeedPath::new(7)).unwrap();
        let b = sample_xc_pool(0.25, 1000, 5, SeedPath::new(7)).unwrap();
        assert_eq!(a, b);
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        let values: Vec<f64> = String::from_utf8(buf).unwrap().lines().map(|l| l.parse().unwrap()).collect();
        assert_eq!(values.len(), 1000);
        assert!(values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn rho() {
        let r = solve_rho();
        assert!((r - 0.792977).abs() < 1e-6, "{r}");
        assert!(rho_residual(r).abs() < 1e-8);
        let (x, rate) = optimal_width_decay();
        assert!((x - 4.311).abs() < 1e-3, "{x}");
        assert!((rate - r).abs() < 1e-6, "{rate} vs {r}");
    }

    #[test]
    fn contraction_constant() {
        assert!((xc_contraction_constant(0.0) - 2.0 / 3.0).abs() < 1e-16);
        assert!(xc_contraction_constant(0.5) < xc_contraction_constant(0.0));
    }
}
