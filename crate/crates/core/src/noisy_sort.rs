//! Quicksort (and, for exploration, merge sort) whose element comparisons err.
//!
//! Each element-vs-pivot comparison is flipped independently with
//! probability `p`. The pivot of every sublist is its first element and the
//! partition is stable: elements keep their encounter order inside the left
//! and right sublists, misrouted ones included. Index arithmetic never errs.
//!
//! [`noisy_quicksort`] returns a [`SortTrace`] that attributes every output
//! inversion to the partition round that first separated the pair. The
//! sampling entry points ([`QuicksortSampler`], [`sample_x_np`]) run the same
//! partition code without the bookkeeping.

use rand::Rng;
use serde::Serialize;

use crate::error::{check_probability, invalid, Result};
use crate::inversions::{shuffle, sort_counting, InversionCount, Permutation};

/// Independent comparison errors with a common probability `p`.
///
/// Small `p` is served by geometric skipping (one draw per error rather than
/// one per comparison); the law of the error pattern is unchanged.
#[derive(Clone, Debug)]
pub struct ErrorModel<R> {
    p: f64,
    rng: R,
    mode: CoinMode,
}

#[derive(Clone, Copy, Debug)]
enum CoinMode {
    Never,
    Always,
    Direct,
    /// `gap` clean comparisons remain before the next error.
    Skip { gap: u64, ln_q: f64 },
}

const SKIP_THRESHOLD: f64 = 0.2;

impl<R: Rng> ErrorModel<R> {
    pub fn new(p: f64, mut rng: R) -> Result<Self> {
        check_probability(p)?;
        let mode = if p == 0.0 {
            CoinMode::Never
        } else if p == 1.0 {
            CoinMode::Always
        } else if p >= SKIP_THRESHOLD {
            CoinMode::Direct
        } else {
            let ln_q = (-p).ln_1p();
            CoinMode::Skip {
                gap: geometric(&mut rng, ln_q),
                ln_q,
            }
        };
        Ok(ErrorModel { p, rng, mode })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Whether the next comparison errs.
    #[inline]
    pub fn comparison_errs(&mut self) -> bool {
        match &mut self.mode {
            CoinMode::Never => false,
            CoinMode::Always => true,
            CoinMode::Direct => self.rng.random::<f64>() < self.p,
            CoinMode::Skip { gap, ln_q } => {
                if *gap == 0 {
                    *gap = geometric(&mut self.rng, *ln_q);
                    true
                } else {
                    *gap -= 1;
                    false
                }
            }
        }
    }

    /// The comparison `a < b` as reported by the unreliable comparator.
    #[inline]
    pub fn less(&mut self, a: u32, b: u32) -> bool {
        (a < b) != self.comparison_errs()
    }

    /// The underlying stream, for drawing inputs from the same source.
    pub fn rng_mut(&mut self) -> &mut R {
        &mut self.rng
    }

    pub fn into_rng(self) -> R {
        self.rng
    }
}

/// Number of failures before the first success of Bernoulli(p) trials,
/// `ln_q = ln(1 - p)`.
fn geometric<R: Rng>(rng: &mut R, ln_q: f64) -> u64 {
    let u = 1.0 - rng.random::<f64>();
    let g = (u.ln() / ln_q).floor();
    if g >= u64::MAX as f64 {
        u64::MAX
    } else {
        g as u64
    }
}

/// Bookkeeping of the first partition round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FirstStep {
    /// Rank of the first pivot among all `n` values, in `1..=n`.
    pub pivot_rank: usize,
    /// Elements smaller than the pivot sent to the right sublist.
    pub s_ell: usize,
    /// Elements larger than the pivot sent to the left sublist.
    pub s_r: usize,
    /// Final 1-based position of the pivot: `pivot_rank - s_ell + s_r`.
    pub z: usize,
    /// Output inversions attributable to the first round.
    pub toll: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SortTrace {
    pub output: Permutation,
    /// Entry `k - 1` holds the inversions created at depth `k`.
    pub per_step_inversions: Vec<u64>,
    /// `None` when the input has fewer than two elements.
    pub first_step: Option<FirstStep>,
}

impl SortTrace {
    /// Inversions created at depth `k >= 1` (zero beyond the recursion depth).
    pub fn step_inversions(&self, k: usize) -> u64 {
        assert!(k >= 1, "depths start at 1");
        self.per_step_inversions.get(k - 1).copied().unwrap_or(0)
    }

    pub fn total_inversions(&self) -> InversionCount {
        InversionCount(self.per_step_inversions.iter().sum())
    }
}

/// One partition round: `a[lo..hi]` was split around the pivot now at `pivot_pos`.
#[derive(Clone, Copy, Debug)]
struct Round {
    lo: usize,
    pivot_pos: usize,
    hi: usize,
    depth: u32,
    s_ell: usize,
    s_r: usize,
}

/// Runs the erratic Quicksort in place with an explicit stack.
fn partition_rounds<R: Rng>(
    a: &mut [u32],
    model: &mut ErrorModel<R>,
    scratch: &mut Vec<u32>,
    stack: &mut Vec<(usize, usize, u32)>,
    mut on_round: impl FnMut(Round),
) {
    stack.clear();
    if a.len() >= 2 {
        stack.push((0, a.len(), 1));
    }
    while let Some((lo, hi, depth)) = stack.pop() {
        let pivot = a[lo];
        let mut write = lo;
        let (mut s_ell, mut s_r) = (0, 0);
        scratch.clear();
        for i in lo + 1..hi {
            let x = a[i];
            let smaller = x < pivot;
            let err = model.comparison_errs();
            if smaller != err {
                a[write] = x;
                write += 1;
                s_r += usize::from(err);
            } else {
                scratch.push(x);
                s_ell += usize::from(err);
            }
        }
        a[write] = pivot;
        a[write + 1..hi].copy_from_slice(scratch);
        on_round(Round {
            lo,
            pivot_pos: write,
            hi,
            depth,
            s_ell,
            s_r,
        });
        if hi - (write + 1) >= 2 {
            stack.push((write + 1, hi, depth + 1));
        }
        if write - lo >= 2 {
            stack.push((lo, write, depth + 1));
        }
    }
}

/// Sorts `input` with erring comparisons and attributes every output
/// inversion to the depth of the round that first separated the pair.
pub fn noisy_quicksort<R: Rng>(input: &Permutation, model: &mut ErrorModel<R>) -> SortTrace {
    let mut a = input.as_slice().to_vec();
    let mut scratch = Vec::with_capacity(a.len());
    let mut stack = Vec::new();
    let mut rounds = Vec::new();
    partition_rounds(&mut a, model, &mut scratch, &mut stack, |r| rounds.push(r));

    // Children are always recorded after their parent, so walking the rounds
    // backwards sees both sublists of a round already sorted in `sorted`.
    let mut sorted = a.clone();
    let mut per_step = vec![0u64; rounds.iter().map(|r| r.depth as usize).max().unwrap_or(0)];
    for r in rounds.iter().rev() {
        let v = sorted[r.pivot_pos];
        let (left, rest) = sorted[r.lo..r.hi].split_at(r.pivot_pos - r.lo);
        let right = &rest[1..];
        let mut cross = (left.len() - left.partition_point(|&x| x < v)) as u64
            + right.partition_point(|&x| x < v) as u64;
        let mut j = 0;
        for &x in left {
            while j < right.len() && right[j] < x {
                j += 1;
            }
            cross += j as u64;
        }
        per_step[r.depth as usize - 1] += cross;

        scratch.clear();
        let (mut i, mut j) = (0, 0);
        let mut placed = false;
        while i < left.len() || j < right.len() {
            let next = if j == right.len() || (i < left.len() && left[i] < right[j]) {
                i += 1;
                left[i - 1]
            } else {
                j += 1;
                right[j - 1]
            };
            if !placed && v < next {
                scratch.push(v);
                placed = true;
            }
            scratch.push(next);
        }
        if !placed {
            scratch.push(v);
        }
        sorted[r.lo..r.hi].copy_from_slice(&scratch);
    }

    let first_step = rounds.first().map(|r| {
        let pivot_rank = a[r.pivot_pos] as usize;
        FirstStep {
            pivot_rank,
            s_ell: r.s_ell,
            s_r: r.s_r,
            z: r.pivot_pos + 1,
            toll: per_step[0],
        }
    });
    SortTrace {
        output: Permutation::from_vec_unchecked(a),
        per_step_inversions: per_step,
        first_step,
    }
}

/// Reusable buffers for repeated draws of `I(n,p)`.
#[derive(Debug, Default)]
pub struct QuicksortSampler {
    items: Vec<u32>,
    scratch: Vec<u32>,
    stack: Vec<(usize, usize, u32)>,
}

impl QuicksortSampler {
    pub fn new() -> Self {
        Self::default()
    }

    /// One draw of `I(n,p)`: shuffle `1..=n` from `model`'s stream, sort it
    /// with erring comparisons and count the output inversions.
    pub fn inversions<R: Rng>(&mut self, n: usize, model: &mut ErrorModel<R>) -> u64 {
        self.items.clear();
        self.items.extend(1..=n as u32);
        shuffle(&mut self.items, model.rng_mut());
        partition_rounds(&mut self.items, model, &mut self.scratch, &mut self.stack, |_| {});
        sort_counting(&mut self.items, &mut self.scratch)
    }

    /// One draw of `X_{n,p} = I(n,p) / (n^2 p)`.
    pub fn x_np<R: Rng>(&mut self, n: usize, model: &mut ErrorModel<R>) -> f64 {
        let inv = self.inversions(n, model);
        normalized(inv, n, model.p())
    }
}

/// `I / (n^2 p)`.
pub fn normalized(inversions: u64, n: usize, p: f64) -> f64 {
    let n = n as f64;
    inversions as f64 / (n * n * p)
}

/// One draw of `X_{n,p}` from a fresh uniform input.
pub fn sample_x_np<R: Rng>(n: usize, p: f64, rng: R) -> Result<f64> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    check_probability(p)?;
    if p == 0.0 {
        return Err(invalid("p", "normalization by n^2 p is undefined at p = 0"));
    }
    let mut model = ErrorModel::new(p, rng)?;
    Ok(QuicksortSampler::new().x_np(n, &mut model))
}

/// Result of one isolated first partition round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TollDraw {
    pub s_ell: usize,
    pub s_r: usize,
    pub toll: u64,
}

/// Runs only the first round on a fresh uniform input, then sorts both
/// sublists perfectly and counts the inversions of `left ‖ pivot ‖ right`.
pub fn first_step_toll<R: Rng>(n: usize, p: f64, rng: R) -> Result<TollDraw> {
    if n < 2 {
        return Err(invalid("n", "the first step needs at least two elements"));
    }
    let mut model = ErrorModel::new(p, rng)?;
    let mut items: Vec<u32> = (1..=n as u32).collect();
    shuffle(&mut items, model.rng_mut());
    let pivot = items[0];
    let (mut left, mut right) = (Vec::new(), Vec::new());
    let (mut s_ell, mut s_r) = (0, 0);
    for &x in &items[1..] {
        let err = model.comparison_errs();
        if (x < pivot) != err {
            s_r += usize::from(err);
            left.push(x);
        } else {
            s_ell += usize::from(err);
            right.push(x);
        }
    }
    left.sort_unstable();
    right.sort_unstable();
    let mut arranged = left;
    arranged.push(pivot);
    arranged.extend(right);
    let mut scratch = Vec::new();
    let toll = sort_counting(&mut arranged, &mut scratch);
    Ok(TollDraw { s_ell, s_r, toll })
}

/// Draws `W_m = sum_i i*Y_i - S(S+1)/2` for i.i.d. Bernoulli(p) marks `Y_i`.
pub fn sample_w_m<R: Rng>(m: usize, p: f64, rng: &mut R) -> Result<u64> {
    check_probability(p)?;
    let (mut weighted, mut s) = (0u64, 0u64);
    for i in 1..=m as u64 {
        if rng.random::<f64>() < p {
            weighted += i;
            s += 1;
        }
    }
    Ok(weighted - s * (s + 1) / 2)
}

/// Bottom-up merge sort whose merge comparisons err independently.
pub fn noisy_mergesort<R: Rng>(input: &Permutation, model: &mut ErrorModel<R>) -> Permutation {
    let mut a = input.as_slice().to_vec();
    let mut buf = vec![0u32; a.len()];
    noisy_mergesort_in_place(&mut a, &mut buf, model);
    Permutation::from_vec_unchecked(a)
}

fn noisy_mergesort_in_place<R: Rng>(a: &mut [u32], buf: &mut [u32], model: &mut ErrorModel<R>) {
    let n = a.len();
    let mut width = 1;
    while width < n {
        let mut lo = 0;
        while lo < n {
            let mid = (lo + width).min(n);
            let hi = (lo + 2 * width).min(n);
            let (mut i, mut j) = (lo, mid);
            for slot in buf[lo..hi].iter_mut() {
                let take_left = if i == mid {
                    false
                } else if j == hi {
                    true
                } else {
                    model.less(a[i], a[j])
                };
                if take_left {
                    *slot = a[i];
                    i += 1;
                } else {
                    *slot = a[j];
                    j += 1;
                }
            }
            lo = hi;
        }
        a.copy_from_slice(buf);
        width *= 2;
    }
}

/// Inversions left by the erring merge sort on a fresh uniform input.
pub fn sample_mergesort_inversions<R: Rng>(n: usize, model: &mut ErrorModel<R>) -> u64 {
    let mut items: Vec<u32> = (1..=n as u32).collect();
    shuffle(&mut items, model.rng_mut());
    let mut buf = vec![0u32; n];
    noisy_mergesort_in_place(&mut items, &mut buf, model);
    let mut scratch = Vec::new();
    sort_counting(&mut items, &mut scratch)
}

/// One draw of `I/(n^2 p)` for the erring merge sort on a fresh uniform input.
pub fn sample_mergesort_x_np<R: Rng>(n: usize, model: &mut ErrorModel<R>) -> f64 {
    let inv = sample_mergesort_inversions(n, model);
    normalized(inv, n, model.p())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inversions::{count_inversions, random_permutation};
    use crate::rng::stream_from_seed;

    fn model(p: f64, seed: u64) -> ErrorModel<crate::rng::Stream> {
        ErrorModel::new(p, stream_from_seed(seed)).unwrap()
    }

    #[test]
    fn error_free_sorts() {
        let mut m = model(0.0, 1);
        for n in [0, 1, 2, 10, 257] {
            let input = random_permutation(n, m.rng_mut());
            let t = noisy_quicksort(&input, &mut m);
            assert!(t.output.is_sorted());
            assert_eq!(t.total_inversions().value(), 0);
        }
    }

    #[test]
    fn always_wrong_reverses() {
        let mut m = model(1.0, 2);
        for n in [2, 3, 17, 300] {
            let input = random_permutation(n, m.rng_mut());
            let t = noisy_quicksort(&input, &mut m);
            assert_eq!(t.output, Permutation::reversed(n));
            assert_eq!(t.total_inversions().value(), InversionCount::max_for(n));
        }
        let x = sample_x_np(40, 1.0, stream_from_seed(4)).unwrap();
        assert!((x - 39.0 / 80.0).abs() < 1e-15);
    }

    #[test]
    fn trace_invariants() {
        for (seed, p) in [(1, 0.05), (2, 0.3), (3, 0.5), (4, 0.9)] {
            let mut m = model(p, seed);
            for n in [2, 5, 64, 333] {
                let input = random_permutation(n, m.rng_mut());
                let t = noisy_quicksort(&input, &mut m);
                assert!(Permutation::new(t.output.clone().into_inner()).is_ok());
                assert_eq!(t.total_inversions(), count_inversions(&t.output));
                let f = t.first_step.unwrap();
                assert_eq!(f.pivot_rank, input.as_slice()[0] as usize);
                assert!(f.s_ell < f.pivot_rank);
                assert!(f.s_r <= n - f.pivot_rank);
                assert_eq!(f.z, f.pivot_rank - f.s_ell + f.s_r);
                assert_eq!(t.output.as_slice()[f.z - 1] as usize, f.pivot_rank);
            }
        }
    }

    #[test]
    fn first_round_toll_equals_isolated_toll_computation() {
        // The depth-1 attribution equals the toll of the first round measured
        // by sorting both sublists perfectly.
        let mut m = model(0.3, 77);
        for _ in 0..200 {
            let input = random_permutation(30, m.rng_mut());
            let copy = m.clone();
            let t = noisy_quicksort(&input, &mut m);
            let mut replay = copy;
            let pivot = input.as_slice()[0];
            let (mut l, mut r) = (vec![], vec![]);
            for &x in &input.as_slice()[1..] {
                if replay.less(x, pivot) {
                    l.push(x)
                } else {
                    r.push(x)
                }
            }
            l.sort();
            r.sort();
            l.push(pivot);
            l.extend(r);
            assert_eq!(t.step_inversions(1), crate::inversions::count_inversions_of(&l));
        }
    }

    #[test]
    fn sampler_agrees_with_traced_sort() {
        // Same stream, same partition code: identical inversion counts.
        for p in [0.01, 0.3, 0.7] {
            let mut a = model(p, 99);
            let mut b = model(p, 99);
            let mut sampler = QuicksortSampler::new();
            for _ in 0..20 {
                let fast = sampler.inversions(500, &mut a);
                let input = random_permutation(500, b.rng_mut());
                let t = noisy_quicksort(&input, &mut b);
                assert_eq!(fast, t.total_inversions().value());
            }
        }
    }

    #[test]
    fn sample_x_np_edges() {
        assert!(sample_x_np(10, 0.0, stream_from_seed(1)).is_err());
        assert!(sample_x_np(0, 0.5, stream_from_seed(1)).is_err());
        assert!(sample_x_np(10, 1.5, stream_from_seed(1)).is_err());
        for seed in 0..50 {
            let x = sample_x_np(2, 0.3, stream_from_seed(seed)).unwrap();
            assert!(x == 0.0 || (x - 1.0 / (4.0 * 0.3)).abs() < 1e-12);
        }
    }

    #[test]
    fn toll_edges() {
        assert!(first_step_toll(1, 0.5, stream_from_seed(0)).is_err());
        for seed in 0..20 {
            let d = first_step_toll(50, 0.0, stream_from_seed(seed)).unwrap();
            assert_eq!(d, TollDraw { s_ell: 0, s_r: 0, toll: 0 });
        }
        // the toll decomposition s_l s_r + s_l + s_r + W + W' is at least its first part
        for seed in 0..50 {
            let d = first_step_toll(40, 0.3, stream_from_seed(seed)).unwrap();
            let base = (d.s_ell * d.s_r + d.s_ell + d.s_r) as u64;
            assert!(d.toll >= base);
        }
    }

    #[test]
    fn w_m_edges() {
        let mut rng = stream_from_seed(1);
        assert_eq!(sample_w_m(0, 0.4, &mut rng).unwrap(), 0);
        assert_eq!(sample_w_m(37, 1.0, &mut rng).unwrap(), 0);
        assert_eq!(sample_w_m(37, 0.0, &mut rng).unwrap(), 0);
        assert!(sample_w_m(3, -0.1, &mut rng).is_err());
    }

    #[test]
    fn w_m_counts_inversions_of_black_white_sort() {
        // W_m equals the inversions of (sorted black indices) ‖ (sorted white indices).
        let mut rng = stream_from_seed(8);
        for _ in 0..200 {
            let m = 25;
            let marks: Vec<bool> = (0..m).map(|_| rng.random::<f64>() < 0.35).collect();
            let mut black: Vec<u32> = (1..=m as u32).filter(|&i| marks[i as usize - 1]).collect();
            let white: Vec<u32> = (1..=m as u32).filter(|&i| !marks[i as usize - 1]).collect();
            let s = black.len() as u64;
            let weighted: u64 = black.iter().map(|&i| i as u64).sum();
            black.extend(white);
            assert_eq!(weighted - s * (s + 1) / 2, crate::inversions::count_inversions_of(&black));
        }
    }

    #[test]
    fn mergesort_edges() {
        let mut m = model(0.0, 5);
        let input = random_permutation(64, m.rng_mut());
        assert!(noisy_mergesort(&input, &mut m).is_sorted());
        let mut m = model(1.0, 5);
        let out = noisy_mergesort(&Permutation::identity(2), &mut m);
        assert_eq!(out.as_slice(), &[2, 1]);
        let mut m = model(0.3, 6);
        let input = random_permutation(100, m.rng_mut());
        let out = noisy_mergesort(&input, &mut m);
        assert!(Permutation::new(out.into_inner()).is_ok());
    }

    #[test]
    fn error_rate_is_p() {
        for p in [0.001, 0.05, 0.25, 0.5] {
            let mut m = model(p, 123);
            let trials = 400_000;
            let hits = (0..trials).filter(|_| m.comparison_errs()).count() as f64;
            let se = (p * (1.0 - p) / trials as f64).sqrt();
            assert!((hits / trials as f64 - p).abs() < 4.0 * se, "p = {p}");
        }
    }
}
