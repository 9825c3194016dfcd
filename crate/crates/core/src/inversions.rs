//! Permutations, inversion counting and exact expectation oracles for tiny inputs.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest list length accepted by [`exact_expected_inversions`].
pub const ORACLE_MAX_N: usize = 7;

/// Largest list length accepted by [`exact_expected_toll`].
pub const TOLL_ORACLE_MAX_N: usize = 12;

/// An arrangement of `1..=n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct Permutation(Vec<u32>);

impl Permutation {
    /// Validates that `items` is a bijection of `1..=items.len()`.
    pub fn new(items: Vec<u32>) -> Result<Self> {
        let n = items.len();
        let mut seen = vec![false; n];
        for &x in &items {
            let i = x as usize;
            if i == 0 || i > n {
                return Err(Error::InvalidPermutation(format!("value {x} outside 1..={n}")));
            }
            if std::mem::replace(&mut seen[i - 1], true) {
                return Err(Error::InvalidPermutation(format!("value {x} repeated")));
            }
        }
        Ok(Permutation(items))
    }

    pub(crate) fn from_vec_unchecked(items: Vec<u32>) -> Self {
        debug_assert!(Permutation::new(items.clone()).is_ok());
        Permutation(items)
    }

    pub fn identity(n: usize) -> Self {
        Permutation((1..=n as u32).collect())
    }

    pub fn reversed(n: usize) -> Self {
        Permutation((1..=n as u32).rev().collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<u32> {
        self.0
    }

    pub fn inversions(&self) -> InversionCount {
        count_inversions(self)
    }

    pub fn is_sorted(&self) -> bool {
        self.0.windows(2).all(|w| w[0] < w[1])
    }
}

impl TryFrom<Vec<u32>> for Permutation {
    type Error = Error;

    fn try_from(items: Vec<u32>) -> Result<Self> {
        Permutation::new(items)
    }
}

impl From<Permutation> for Vec<u32> {
    fn from(p: Permutation) -> Self {
        p.0
    }
}

/// Number of pairs `i < j` with `y_i > y_j`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InversionCount(pub u64);

impl InversionCount {
    pub fn value(self) -> u64 {
        self.0
    }

    /// `n(n-1)/2`, the count of a strictly decreasing sequence.
    pub fn max_for(n: usize) -> u64 {
        let n = n as u64;
        n * n.saturating_sub(1) / 2
    }
}

pub fn count_inversions(seq: &Permutation) -> InversionCount {
    InversionCount(count_inversions_of(seq.as_slice()))
}

/// Inversion count of any slice of totally ordered values, `O(n log n)`.
pub fn count_inversions_of<T: Ord + Copy>(seq: &[T]) -> u64 {
    let mut work = seq.to_vec();
    let mut scratch = Vec::with_capacity(seq.len());
    sort_counting(&mut work, &mut scratch)
}

const RUN: usize = 24;

/// Sorts `a` in place and returns the number of inversions it had.
///
/// Bottom-up merge sort over insertion-sorted runs; `scratch` is reused
/// between calls to avoid allocation in hot loops.
pub fn sort_counting<T: Ord + Copy>(a: &mut [T], scratch: &mut Vec<T>) -> u64 {
    let n = a.len();
    let mut inv = 0u64;
    for chunk in a.chunks_mut(RUN) {
        for i in 1..chunk.len() {
            let x = chunk[i];
            let mut j = i;
            while j > 0 && chunk[j - 1] > x {
                chunk[j] = chunk[j - 1];
                j -= 1;
            }
            inv += (i - j) as u64;
            chunk[j] = x;
        }
    }
    if n <= RUN {
        return inv;
    }
    scratch.clear();
    scratch.extend_from_slice(a);
    // Alternate between `a` and `scratch`; `in_a` tracks where sorted runs live.
    let mut in_a = true;
    let mut width = RUN;
    while width < n {
        {
            let (src, dst): (&[T], &mut [T]) = if in_a {
                (&*a, scratch.as_mut_slice())
            } else {
                (scratch.as_slice(), &mut *a)
            };
            let mut lo = 0;
            while lo < n {
                let mid = (lo + width).min(n);
                let hi = (lo + 2 * width).min(n);
                inv += merge_runs(&src[lo..mid], &src[mid..hi], &mut dst[lo..hi]);
                lo = hi;
            }
        }
        in_a = !in_a;
        width *= 2;
    }
    if !in_a {
        a.copy_from_slice(scratch);
    }
    inv
}

fn merge_runs<T: Ord + Copy>(left: &[T], right: &[T], out: &mut [T]) -> u64 {
    let (mut i, mut j, mut k) = (0, 0, 0);
    let mut inv = 0u64;
    while i < left.len() && j < right.len() {
        if right[j] < left[i] {
            out[k] = right[j];
            inv += (left.len() - i) as u64;
            j += 1;
        } else {
            out[k] = left[i];
            i += 1;
        }
        k += 1;
    }
    out[k..k + left.len() - i].copy_from_slice(&left[i..]);
    k += left.len() - i;
    out[k..].copy_from_slice(&right[j..]);
    inv
}

/// Uniform permutation of `1..=n` by Fisher–Yates.
pub fn random_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Permutation {
    let mut items: Vec<u32> = (1..=n as u32).collect();
    shuffle(&mut items, rng);
    Permutation(items)
}

pub(crate) fn shuffle<T, R: Rng + ?Sized>(items: &mut [T], rng: &mut R) {
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i as u32) as usize;
        items.swap(i, j);
    }
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

fn rational_probability(p: &BigRational) -> Result<()> {
    if p < &BigRational::zero() || p > &BigRational::one() {
        return Err(Error::InvalidParameter {
            name: "p",
            reason: format!("{p} is outside [0, 1]"),
        });
    }
    Ok(())
}

/// Weights `p^e (1-p)^(m-e)` for `e = 0..=m`.
fn pattern_weights(p: &BigRational, m: usize) -> Vec<BigRational> {
    let q = BigRational::one() - p;
    (0..=m)
        .map(|e| num_traits::pow(p.clone(), e) * num_traits::pow(q.clone(), m - e))
        .collect()
}

struct Enumerator {
    weights: Vec<Vec<BigRational>>,
    memo: HashMap<Vec<u8>, BigRational>,
}

impl Enumerator {
    fn new(p: &BigRational, n: usize) -> Self {
        Enumerator {
            weights: (0..n).map(|m| pattern_weights(p, m)).collect(),
            memo: HashMap::new(),
        }
    }

    /// Expected output inversions of error-prone Quicksort run on `seq`
    /// (first element as pivot, stable partition), summed over every
    /// error pattern of every comparison.
    fn expected(&mut self, seq: &[u8]) -> BigRational {
        if seq.len() <= 1 {
            return BigRational::zero();
        }
        let key = normalize(seq);
        if let Some(v) = self.memo.get(&key) {
            return v.clone();
        }
        let pivot = key[0];
        let rest = &key[1..];
        let m = rest.len();
        let mut total = BigRational::zero();
        for mask in 0u32..(1 << m) {
            let errors = mask.count_ones() as usize;
            let w = self.weights[m][errors].clone();
            if w.is_zero() {
                continue;
            }
            let mut left = Vec::with_capacity(m);
            let mut right = Vec::with_capacity(m);
            for (i, &x) in rest.iter().enumerate() {
                let flipped = (mask >> i) & 1 == 1;
                if (x < pivot) != flipped {
                    left.push(x);
                } else {
                    right.push(x);
                }
            }
            let mut cross = left.iter().filter(|&&a| a > pivot).count() as u64
                + right.iter().filter(|&&b| b < pivot).count() as u64;
            for &a in &left {
                cross += right.iter().filter(|&&b| a > b).count() as u64;
            }
            let sub = self.expected(&left) + self.expected(&right);
            total += w * (sub + BigRational::from_integer(BigInt::from(cross)));
        }
        self.memo.insert(key, total.clone());
        total
    }
}

fn normalize(seq: &[u8]) -> Vec<u8> {
    seq.iter()
        .map(|&x| seq.iter().filter(|&&y| y < x).count() as u8)
        .collect()
}

/// Exact `E[I(n,p)]` over uniformly random inputs, by exhaustive weighted
/// enumeration of inputs and comparison outcomes.
pub fn exact_expected_inversions(n: usize, p: &BigRational) -> Result<BigRational> {
    if n > ORACLE_MAX_N {
        return Err(Error::BudgetExceeded { n, max: ORACLE_MAX_N });
    }
    rational_probability(p)?;
    if n <= 1 {
        return Ok(BigRational::zero());
    }
    let mut en = Enumerator::new(p, n);
    let mut perm: Vec<u8> = (0..n as u8).collect();
    let mut total = BigRational::zero();
    loop {
        total += en.expected(&perm);
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(total / BigRational::from_integer(factorial(n)))
}

/// Exact expectation of the first-step toll: inversions of
/// `sorted(left) ‖ pivot ‖ sorted(right)` after one noisy partition round.
pub fn exact_expected_toll(n: usize, p: &BigRational) -> Result<BigRational> {
    if n > TOLL_ORACLE_MAX_N {
        return Err(Error::BudgetExceeded { n, max: TOLL_ORACLE_MAX_N });
    }
    rational_probability(p)?;
    if n <= 1 {
        return Ok(BigRational::zero());
    }
    let weights = pattern_weights(p, n - 1);
    let mut total = BigRational::zero();
    for pivot in 1..=n as u32 {
        let others: Vec<u32> = (1..=n as u32).filter(|&x| x != pivot).collect();
        for mask in 0u32..(1 << (n - 1)) {
            let w = &weights[mask.count_ones() as usize];
            if w.is_zero() {
                continue;
            }
            let mut left = Vec::new();
            let mut right = Vec::new();
            for (i, &x) in others.iter().enumerate() {
                if (x < pivot) != ((mask >> i) & 1 == 1) {
                    left.push(x);
                } else {
                    right.push(x);
                }
            }
            left.sort_unstable();
            right.sort_unstable();
            let mut arranged = left;
            arranged.push(pivot);
            arranged.extend(right);
            let toll = pair_count_inversions(&arranged);
            total += w * BigRational::from_integer(BigInt::from(toll));
        }
    }
    Ok(total / BigRational::from_integer(BigInt::from(n)))
}

/// The first-step toll expectation `p(n-1)(n+1)/3 - p^2(n-1)(n-2)/6`.
pub fn toll_expectation_formula(n: usize, p: &BigRational) -> BigRational {
    let n = BigInt::from(n);
    let one = BigInt::one();
    let two = BigInt::from(2);
    let a = BigRational::new((&n - &one) * (&n + &one), BigInt::from(3));
    let b = BigRational::new((&n - &one) * (&n - &two), BigInt::from(6));
    p * a - p * p * b
}

fn pair_count_inversions(seq: &[u32]) -> u64 {
    let mut c = 0;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                c += 1;
            }
        }
    }
    c
}

/// Advances to the next lexicographic permutation; false once wrapped.
pub(crate) fn next_permutation<T: Ord>(a: &mut [T]) -> bool {
    if a.len() < 2 {
        return false;
    }
    let mut i = a.len() - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        a.reverse();
        return false;
    }
    let mut j = a.len() - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}
