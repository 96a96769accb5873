//! Dense vector helpers shared by the engine and the metrics.
//!
//! Reductions over nodes go through [`pairwise_sum`] so that every average
//! has a fixed association order that does not depend on scheduling.

/// Pairwise (cascade) summation in ascending index order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 8;
    if values.len() <= BLOCK {
        let mut acc = 0.0;
        for v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm; rescales by the largest entry when the squares overflow.
pub fn norm(a: &[f64]) -> f64 {
    let plain = dot(a, a).sqrt();
    if plain.is_finite() || !all_finite(a) {
        return plain;
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scaled: Vec<f64> = a.iter().map(|v| v / scale).collect();
    scale * dot(&scaled, &scaled).sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff)
}

/// Threshold below which a direction is treated as zero when normalizing.
pub const NORMALIZE_FLOOR: f64 = 1e-30;

/// `u / ‖u‖`, or the zero vector when `‖u‖ <= 1e-30`.
pub fn safe_normalize(u: &[f64]) -> Vec<f64> {
    let n = norm(u);
    if n > NORMALIZE_FLOOR {
        u.iter().map(|x| x / n).collect()
    } else {
        vec![0.0; u.len()]
    }
}

/// Coordinate-wise average of a set of equal-length vectors, each coordinate
/// reduced with [`pairwise_sum`] over ascending vector index.
pub fn mean_of<'a, I>(vectors: I, dim: usize) -> Vec<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let rows: Vec<&[f64]> = vectors.into_iter().collect();
    let n = rows.len();
    if n == 0 {
        return vec![0.0; dim];
    }
    let mut column = vec![0.0; n];
    (0..dim)
        .map(|k| {
            for (slot, row) in column.iter_mut().zip(&rows) {
                *slot = row[k];
            }
            pairwise_sum(&column) / n as f64
        })
        .collect()
}

/// Mean of scalars with pairwise summation.
pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    pairwise_sum(values) / values.len() as f64
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}
