use crate::error::{Error, Result};
use crate::linalg::{RMatrix, C64};

/// Amplitudes onto `[0, 1]` entrywise.
pub fn project_amplitude(x: &RMatrix) -> RMatrix {
    RMatrix {
        rows: x.rows,
        cols: x.cols,
        data: x.data.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
    }
}

/// Entrywise `z / |z|` over the block support of `F_A`.
pub fn project_unit_modulus(x: &[C64]) -> Result<Vec<C64>> {
    x.iter()
        .enumerate()
        .map(|(index, z)| {
            let r = z.norm();
            if r < 1e-15 {
                Err(Error::ZeroEntry { index })
            } else {
                Ok(z / r)
            }
        })
        .collect()
}

/// Like [`project_unit_modulus`] but keeps `previous[i]` wherever the
/// input entry vanishes.
pub fn project_unit_modulus_or(x: &[C64], previous: &[C64]) -> Vec<C64> {
    x.iter()
        .zip(previous)
        .map(|(z, p)| {
            let r = z.norm();
            if r < 1e-15 {
                *p
            } else {
                z / r
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn amplitude_examples() {
        let x = RMatrix { rows: 1, cols: 3, data: vec![1.5, -0.2, 0.37] };
        assert_eq!(project_amplitude(&x).data, vec![1.0, 0.0, 0.37]);
    }

    #[test]
    fn unit_modulus_examples() {
        let y = project_unit_modulus(&[C64::new(3.0, 4.0), C64::new(2.0, 0.0)]).unwrap();
        assert!((y[0] - C64::new(0.6, 0.8)).norm() < 1e-15);
        assert_eq!(y[1], C64::new(1.0, 0.0));
        let err = project_unit_modulus(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        assert!(matches!(err, Err(Error::ZeroEntry { index: 1 })));
        let prev = [C64::new(0.0, 1.0)];
        assert_eq!(project_unit_modulus_or(&[C64::new(0.0, 0.0)], &prev), prev.to_vec());
    }

    proptest! {
        #[test]
        fn amplitude_projection_idempotent(v in proptest::collection::vec(-5.0f64..5.0, 1..64)) {
            let x = RMatrix { rows: 1, cols: v.len(), data: v };
            let once = project_amplitude(&x);
            prop_assert!(once.data.iter().all(|a| (0.0..=1.0).contains(a)));
            prop_assert_eq!(project_amplitude(&once), once);
        }

        #[test]
        fn unit_modulus_projection_idempotent(
            v in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..64)
        ) {
            let x: Vec<C64> = v.into_iter().map(|(a, b)| C64::new(a, b) + C64::new(1e-6, 0.0)).collect();
            let once = project_unit_modulus(&x).unwrap();
            prop_assert!(once.iter().all(|z| (z.norm() - 1.0).abs() < 1e-15));
            let twice = project_unit_modulus(&once).unwrap();
            for (a, b) in once.iter().zip(&twice) {
                prop_assert!((a - b).norm() < 1e-15);
            }
        }
    }
}
