//! Scalar abstraction and the small numeric kernels everything else leans on.
//!
//! The kernels are generic over [`Scalar`] so they work at `f32` or `f64`;
//! the pipeline itself fixes [`crate::Score`] = `f64` because the persisted
//! index format and the documented tolerances are defined at that width.

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar usable by the numeric kernels.
pub trait Scalar: Float + FromPrimitive + std::fmt::Debug + Send + Sync + 'static {}

impl<T> Scalar for T where T: Float + FromPrimitive + std::fmt::Debug + Send + Sync + 'static {}

/// Arithmetic mean. `None` on empty input.
pub fn mean<F: Scalar>(xs: &[F]) -> Option<F> {
    if xs.is_empty() {
        return None;
    }
    let n = F::from_usize(xs.len())?;
    Some(xs.iter().fold(F::zero(), |a, &x| a + x) / n)
}

/// Population standard deviation (divides by n). `None` on empty input.
pub fn population_std<F: Scalar>(xs: &[F]) -> Option<F> {
    let m = mean(xs)?;
    let n = F::from_usize(xs.len())?;
    let var = xs
        .iter()
        .fold(F::zero(), |a, &x| a + (x - m) * (x - m))
        / n;
    Some(var.sqrt())
}

/// Coefficient of variation: population s.d. over |mean|.
///
/// Undefined (`None`) for fewer than two samples or a zero mean.
pub fn coefficient_of_variation<F: Scalar>(xs: &[F]) -> Option<F> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs)?;
    if m == F::zero() {
        return None;
    }
    Some(population_std(xs)? / m.abs())
}

/// Sample Pearson correlation. `None` when lengths differ, fewer than two
/// pairs are given, or either side is constant.
pub fn pearson<F: Scalar>(xs: &[F], ys: &[F]) -> Option<F> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let mx = mean(xs)?;
    let my = mean(ys)?;
    let mut sxy = F::zero();
    let mut sxx = F::zero();
    let mut syy = F::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    if sxx == F::zero() || syy == F::zero() {
        return None;
    }
    Some(sxy / (sxx.sqrt() * syy.sqrt()))
}

/// Empirical quantile with linear interpolation at rank `h = (n-1)q`.
///
/// `values` must already be sorted ascending; `q` is clamped to `[0, 1]`.
/// `None` on empty input.
pub fn quantile<F: Scalar>(sorted: &[F], q: F) -> Option<F> {
    if sorted.is_empty() {
        return None;
    }
    let q = q.max(F::zero()).min(F::one());
    let n = sorted.len();
    let h = F::from_usize(n - 1)? * q;
    let lo = h.floor();
    let i = lo.to_usize()?;
    if i + 1 >= n {
        return Some(sorted[n - 1]);
    }
    let frac = h - lo;
    Some(sorted[i] + frac * (sorted[i + 1] - sorted[i]))
}

/// Cosine similarity of two equal-length vectors; 0 when either has zero norm.
pub fn cosine<F: Scalar>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    let mut dot = F::zero();
    let mut na = F::zero();
    let mut nb = F::zero();
    for (&x, &y) in a.iter().zip(b) {
        dot = dot + x * y;
        na = na + x * x;
        nb = nb + y * y;
    }
    if na == F::zero() || nb == F::zero() {
        return F::zero();
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// Area under the ROC curve via the rank statistic, with average ranks for
/// ties (a tie between a positive and a negative contributes 1/2).
///
/// `None` when either class is empty.
pub fn auc<F: Scalar>(positives: &[F], negatives: &[F]) -> Option<F> {
    if positives.is_empty() || negatives.is_empty() {
        return None;
    }
    let mut scored: Vec<(F, bool)> = positives
        .iter()
        .map(|&s| (s, true))
        .chain(negatives.iter().map(|&s| (s, false)))
        .collect();
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("scores must be orderable"));

    let mut rank_sum_pos = F::zero();
    let mut i = 0;
    while i < scored.len() {
        let mut j = i;
        while j < scored.len() && scored[j].0 == scored[i].0 {
            j += 1;
        }
        // ranks are 1-based; everything in [i, j) shares the average rank
        let avg = F::from_usize(i + 1 + j)? / F::from_usize(2)?;
        for item in &scored[i..j] {
            if item.1 {
                rank_sum_pos = rank_sum_pos + avg;
            }
        }
        i = j;
    }
    let np = F::from_usize(positives.len())?;
    let nn = F::from_usize(negatives.len())?;
    let two = F::from_usize(2)?;
    Some((rank_sum_pos - np * (np + F::one()) / two) / (np * nn))
}
