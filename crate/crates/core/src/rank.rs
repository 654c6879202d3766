//! Average-tie ranking shared by cross-sectional ranks and rank correlation.

use crate::scalar::Scalar;

/// 1-based ranks with ties receiving the mean of the ranks they span.
pub fn average_ranks<F: Scalar>(values: &[F]) -> Vec<F> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .partial_cmp(&values[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut ranks = vec![F::zero(); values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j share rank mean((i+1)..=(j+1))
        let r = F::from_usize_lossy(i + j + 2) / F::lit(2.0);
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation; `None` if either side has zero variance or fewer than two points.
pub fn pearson<F: Scalar>(x: &[F], y: &[F]) -> Option<F> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return None;
    }
    let nf = F::from_usize_lossy(n);
    let mx = x.iter().copied().sum::<F>() / nf;
    let my = y.iter().copied().sum::<F>() / nf;
    let (mut sxy, mut sxx, mut syy) = (F::zero(), F::zero(), F::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy = sxy + da * db;
        sxx = sxx + da * da;
        syy = syy + db * db;
    }
    if sxx <= F::zero() || syy <= F::zero() {
        return None;
    }
    let r = sxy / (sxx * syy).sqrt();
    Some(r.max(-F::one()).min(F::one()))
}

/// Spearman rank correlation with average-tie ranks.
pub fn spearman<F: Scalar>(x: &[F], y: &[F]) -> Option<F> {
    pearson(&average_ranks(x), &average_ranks(y))
}
