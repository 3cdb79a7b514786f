use super::DenseMatrix;
use crate::error::{Error, Result};

/// Median of a slice, reordering it. Even counts use the mean of the two
/// central order statistics.
pub fn median_in_place(values: &mut [f64]) -> Result<f64> {
    let n = values.len();
    if n == 0 {
        return Err(Error::Degenerate("median of an empty set".into()));
    }
    let mid = n / 2;
    let (lower, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        return Ok(upper);
    }
    let lower_max = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(0.5 * (lower_max + upper))
}

/// Median over all entries of `m`.
pub fn median_all(m: &DenseMatrix) -> Result<f64> {
    let mut values: Vec<f64> = m.iter().copied().collect();
    median_in_place(&mut values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(values: &[f64]) -> DenseMatrix {
        DenseMatrix::from_row_major(1, values.len(), values.to_vec()).unwrap()
    }

    #[test]
    fn odd_count() {
        assert_eq!(median_all(&row(&[1., 2., 3., 4., 100.])).unwrap(), 3.0);
    }

    #[test]
    fn even_count_mid_mean() {
        assert_eq!(median_all(&row(&[4., 1., 3., 2.])).unwrap(), 2.5);
    }

    #[test]
    fn constant() {
        let m = DenseMatrix::from_fn(3, 4, |_, _| -1.25).unwrap();
        assert_eq!(median_all(&m).unwrap(), -1.25);
    }

    #[test]
    fn empty_is_degenerate() {
        assert!(matches!(median_all(&DenseMatrix::zeros(0, 3)), Err(Error::Degenerate(_))));
    }

    proptest! {
        #[test]
        fn permutation_invariant(mut v in prop::collection::vec(-1e6f64..1e6, 1..60), seed in any::<u64>()) {
            let before = median_all(&row(&v)).unwrap();
            // Fisher-Yates with a cheap LCG keyed on the proptest seed.
            let mut s = seed;
            for i in (1..v.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let j = (s >> 33) as usize % (i + 1);
                v.swap(i, j);
            }
            prop_assert_eq!(before, median_all(&row(&v)).unwrap());
        }

        #[test]
        fn matches_sorted_definition(v in prop::collection::vec(-1e3f64..1e3, 1..40)) {
            let mut sorted = v.clone();
            sorted.sort_by(f64::total_cmp);
            let n = sorted.len();
            let expected = if n % 2 == 1 { sorted[n / 2] } else { 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]) };
            prop_assert_eq!(median_all(&row(&v)).unwrap(), expected);
        }
    }
}
