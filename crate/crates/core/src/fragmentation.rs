//! Recursive uniform splitting of `[0, 1)`.
//!
//! Level `k` of a [`FragmentationTree`] holds the `2^k + 1` cut points
//! `Y_{k,0} = 0 <= ... <= Y_{k,2^k} = 1`. Level `k + 1` keeps every cut of
//! level `k` at even indices and inserts one uniform cut inside each interval:
//!
//! ```text
//! Y_{k+1,2j}   = Y_{k,j}
//! Y_{k+1,2j-1} = (1 - U_{k,j}) Y_{k,j-1} + U_{k,j} Y_{k,j}
//! ```

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest depth a tree may be built to (`2^30` cut points on the last level).
pub const MAX_DEPTH: usize = 30;

/// Default truncation depth; the omitted tail of the area has mean `2 (2/3)^25 < 10^-4`.
pub const DEFAULT_DEPTH: usize = 25;

/// Subtrees narrower than this are replaced by their conditional mean in
/// [`sample_x_hat`].
pub const DEFAULT_MIN_WIDTH: f64 = 1e-3;

fn check_depth(depth: usize) -> Result<()> {
    if depth > MAX_DEPTH {
        Err(Error::DepthTooLarge { depth, max: MAX_DEPTH })
    } else {
        Ok(())
    }
}

/// Cut points of every level down to `depth`, stored as flat sorted arrays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FragmentationTree {
    depth: usize,
    levels: Vec<Vec<f64>>,
}

impl FragmentationTree {
    pub fn build<R: Rng + ?Sized>(depth: usize, rng: &mut R) -> Result<Self> {
        check_depth(depth)?;
        let mut levels = Vec::with_capacity(depth + 1);
        levels.push(vec![0.0, 1.0]);
        for k in 0..depth {
            let prev: &Vec<f64> = &levels[k];
            let mut next = Vec::with_capacity(2 * prev.len() - 1);
            next.push(0.0);
            for pair in prev.windows(2) {
                let u: f64 = rng.random();
                next.push((1.0 - u) * pair[0] + u * pair[1]);
                next.push(pair[1]);
            }
            levels.push(next);
        }
        Ok(FragmentationTree { depth, levels })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Cut points `Y_{k,0..=2^k}`.
    pub fn level(&self, k: usize) -> &[f64] {
        &self.levels[k]
    }

    /// Widths `w_{k,j} = Y_{k,j} - Y_{k,j-1}`, `j = 1..=2^k`.
    pub fn widths(&self, k: usize) -> impl Iterator<Item = f64> + '_ {
        self.levels[k].windows(2).map(|w| w[1] - w[0])
    }

    /// `M_k`, the widest interval of level `k`.
    pub fn max_width(&self, k: usize) -> f64 {
        self.widths(k).fold(0.0, f64::max)
    }

    pub fn sum_width_powers(&self, k: usize, alpha: f64) -> f64 {
        self.widths(k).map(|w| w.powf(alpha)).sum()
    }

    /// `F_{k,alpha} = ((1 + alpha)/2)^k sum_j w_{k,j}^alpha`, a unit-mean martingale in `k`.
    pub fn martingale_f(&self, k: usize, alpha: f64) -> Result<f64> {
        if k > self.depth {
            return Err(invalid("k", format!("level {k} exceeds tree depth {}", self.depth)));
        }
        if alpha <= 0.0 {
            return Err(invalid("alpha", "must be positive"));
        }
        Ok(((1.0 + alpha) / 2.0).powi(k as i32) * self.sum_width_powers(k, alpha))
    }

    /// `sum_{k=1}^{K} sum_j w_{k,j}^2`, the area under the FIND process
    /// `Z(t) = sum_{k>=1,j} |I_{k,j}| 1{t in I_{k,j}}` truncated at depth `K`.
    ///
    /// The omitted tail has mean `2 (2/3)^K`.
    pub fn find_area(&self) -> f64 {
        (1..=self.depth).map(|k| self.sum_width_powers(k, 2.0)).sum()
    }

    /// Half the FIND area: one truncated draw of the limit law with mean 1
    /// and variance 1/12.
    pub fn x_hat(&self) -> f64 {
        0.5 * self.find_area()
    }

    /// The level-`k` cut of the level-`(k-1)` interval containing `x`,
    /// i.e. `Y_{k, J_k(x)}` with `J_k(x) = 2j - 1` when
    /// `Y_{k-1,j-1} <= x < Y_{k-1,j}`.
    pub fn locate_cut(&self, k: usize, x: f64) -> Result<f64> {
        if k == 0 || k > self.depth {
            return Err(invalid("k", format!("level {k} outside 1..={}", self.depth)));
        }
        if !(0.0..1.0).contains(&x) {
            return Err(invalid("x", format!("{x} outside [0, 1)")));
        }
        let parent = &self.levels[k - 1];
        let j = parent.partition_point(|&y| y <= x).clamp(1, parent.len() - 1);
        Ok(self.levels[k][2 * j - 1])
    }
}

/// One draw of `(1/2) sum_{k=1}^{K} sum_j w_{k,j}^2` from a fresh tree.
pub fn sample_x_hat<R: Rng + ?Sized>(depth: usize, rng: &mut R) -> Result<f64> {
    sample_x_hat_with(depth, DEFAULT_MIN_WIDTH, rng)
}

/// Depth-first version of [`sample_x_hat`] that never materializes a level.
///
/// An interval of width `w < min_width` at depth `d` is not split further;
/// its descendants down to depth `K` are replaced by their conditional mean
/// `w^2 * 2 (1 - (2/3)^(K-d))`. This keeps the mean of the truncated sum
/// exact and only removes variance of order `min_width^2`. `min_width = 0`
/// enumerates all `2^K` intervals.
pub fn sample_x_hat_with<R: Rng + ?Sized>(depth: usize, min_width: f64, rng: &mut R) -> Result<f64> {
    check_depth(depth)?;
    if !(min_width >= 0.0) {
        return Err(invalid("min_width", "must be nonnegative"));
    }
    let mut total = 0.0;
    let mut stack: Vec<(f64, usize)> = Vec::with_capacity(2 * depth + 2);
    if depth > 0 {
        stack.push((1.0, 0));
    }
    while let Some((w, d)) = stack.pop() {
        if w < min_width {
            let remaining = (depth - d) as i32;
            total += w * w * 2.0 * (1.0 - (2.0f64 / 3.0).powi(remaining));
            continue;
        }
        let u: f64 = rng.random();
        let (a, b) = (w * u, w * (1.0 - u));
        total += a * a + b * b;
        if d + 1 < depth {
            stack.push((b, d + 1));
            stack.push((a, d + 1));
        }
    }
    Ok(0.5 * total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_from_seed;

    #[test]
    fn depth_zero() {
        let t = FragmentationTree::build(0, &mut stream_from_seed(0)).unwrap();
        assert_eq!(t.level(0), &[0.0, 1.0]);
        assert_eq!(t.find_area(), 0.0);
        assert_eq!(t.martingale_f(0, 2.5).unwrap(), 1.0);
        assert_eq!(sample_x_hat(0, &mut stream_from_seed(0)).unwrap(), 0.0);
    }

    #[test]
    fn rejects_deep_trees() {
        assert!(matches!(
            FragmentationTree::build(31, &mut stream_from_seed(0)),
            Err(Error::DepthTooLarge { depth: 31, max: 30 })
        ));
        assert!(sample_x_hat(31, &mut stream_from_seed(0)).is_err());
    }

    #[test]
    fn structural_invariants() {
        let mut rng = stream_from_seed(17);
        for _ in 0..20 {
            let t = FragmentationTree::build(10, &mut rng).unwrap();
            for k in 0..=10 {
                let level = t.level(k);
                assert_eq!(level.len(), (1 << k) + 1);
                assert_eq!(level[0], 0.0);
                assert_eq!(*level.last().unwrap(), 1.0);
                assert!(level.windows(2).all(|w| w[0] <= w[1]));
                let sum: f64 = t.widths(k).sum();
                assert!((sum - 1.0).abs() < 1e-12);
                assert!((t.martingale_f(k, 1.0).unwrap() - 1.0).abs() < 1e-12);
                if k < 10 {
                    let next = t.level(k + 1);
                    for (j, &y) in level.iter().enumerate() {
                        assert_eq!(next[2 * j], y);
                    }
                }
            }
            assert!((t.find_area() - 2.0 * t.x_hat()).abs() < 1e-15);
            assert!(t.x_hat() > 0.0 && t.x_hat().is_finite());
        }
    }

    #[test]
    fn locate_cut_matches_linear_scan() {
        let mut rng = stream_from_seed(5);
        let t = FragmentationTree::build(12, &mut rng).unwrap();
        assert_eq!(t.locate_cut(1, 0.3).unwrap(), t.level(1)[1]);
        let y11 = t.level(1)[1];
        assert_eq!(t.locate_cut(2, y11 / 2.0).unwrap(), t.level(2)[1]);
        for _ in 0..10_000 {
            let k = rng.random_range(1..=12usize);
            let x: f64 = rng.random();
            let parent = t.level(k - 1);
            let mut j = 1;
            while !(parent[j - 1] <= x && x < parent[j]) {
                j += 1;
            }
            assert_eq!(t.locate_cut(k, x).unwrap(), t.level(k)[2 * j - 1]);
        }
        assert!(t.locate_cut(0, 0.5).is_err());
        assert!(t.locate_cut(13, 0.5).is_err());
        assert!(t.locate_cut(3, 1.0).is_err());
    }

    #[test]
    fn martingale_rejects_bad_arguments() {
        let t = FragmentationTree::build(3, &mut stream_from_seed(1)).unwrap();
        assert!(t.martingale_f(4, 2.0).is_err());
        assert!(t.martingale_f(2, 0.0).is_err());
    }

    #[test]
    fn unpruned_sampler_equals_full_tree_sum_in_law() {
        // min_width = 0 enumerates every interval; compare means at depth 8
        // against the exact truncated mean 1 - (2/3)^8.
        let mut rng = stream_from_seed(21);
        let draws = 20_000;
        let xs: Vec<f64> = (0..draws).map(|_| sample_x_hat_with(8, 0.0, &mut rng).unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / draws as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
        let target = 1.0 - (2.0f64 / 3.0).powi(8);
        assert!((mean - target).abs() < 4.0 * (var / draws as f64).sqrt(), "{mean} vs {target}");
    }

    #[test]
    fn sampler_is_positive_and_finite() {
        let mut rng = stream_from_seed(2);
        for _ in 0..100 {
            let x = sample_x_hat(DEFAULT_DEPTH, &mut rng).unwrap();
            assert!(x > 0.0 && x.is_finite());
        }
        assert!(sample_x_hat_with(5, -1.0, &mut rng).is_err());
    }

    #[test]
    fn json_dump_roundtrip() {
        let t = FragmentationTree::build(4, &mut stream_from_seed(3)).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        let back: FragmentationTree = serde_json::from_str(&s).unwrap();
        assert_eq!(t, back);
    }
}
