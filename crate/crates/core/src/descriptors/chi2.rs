use super::DescriptorError;

/// χ² distance `½ Σ (a−b)² / (a+b)`; bins empty in both inputs contribute 0.
pub fn chi2_distance(a: &[f64], b: &[f64]) -> Result<f64, DescriptorError> {
    if a.len() != b.len() {
        return Err(DescriptorError::LengthMismatch(a.len(), b.len()));
    }
    if let Some(i) = a.iter().chain(b).position(|&v| v < 0.0) {
        return Err(DescriptorError::NegativeEntry(i % a.len().max(1)));
    }
    Ok(chi2_unchecked(a, b))
}

/// [`chi2_distance`] without validation, for hot loops over trusted data.
#[inline]
pub fn chi2_unchecked(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let s = x + y;
        let d = x - y;
        // d is zero whenever s is, so the guard only avoids 0/0
        acc += d * d / s.max(f64::MIN_POSITIVE);
    }
    0.5 * acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_is_zero() {
        let x = vec![0.1, 0.0, 0.4, 0.5];
        assert_eq!(chi2_distance(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn disjoint_support_is_one() {
        let a = vec![0.25, 0.75, 0.0, 0.0];
        let b = vec![0.0, 0.0, 0.5, 0.5];
        // direct summation: each term contributes its own mass
        let direct: f64 = 0.5 * (0.25 + 0.75 + 0.5 + 0.5);
        assert_eq!(chi2_distance(&a, &b).unwrap(), direct);
        assert_eq!(direct, 1.0);
    }

    #[test]
    fn rejects_negative_and_mismatched() {
        assert_eq!(
            chi2_distance(&[0.5, -0.1], &[0.5, 0.1]),
            Err(DescriptorError::NegativeEntry(1))
        );
        assert!(matches!(
            chi2_distance(&[0.5], &[0.5, 0.1]),
            Err(DescriptorError::LengthMismatch(1, 2))
        ));
    }

    fn normalized(v: Vec<f64>) -> Vec<f64> {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    }

    proptest! {
        #[test]
        fn metric_properties(
            a in proptest::collection::vec(0.0f64..10.0, 1..64),
            seed in proptest::collection::vec(0.0f64..10.0, 64),
        ) {
            let n = a.len();
            let mut a = a;
            a[0] += 1.0;
            let a = normalized(a);
            let mut b: Vec<f64> = seed[..n].to_vec();
            b[n - 1] += 1.0;
            let b = normalized(b);
            let ab = chi2_distance(&a, &b).unwrap();
            let ba = chi2_distance(&b, &a).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert!((ab - ba).abs() <= 1e-12);
            prop_assert!(chi2_distance(&a, &a).unwrap().abs() <= 1e-12);
            prop_assert!(ab <= 1.0 + 1e-12);
        }
    }
}
