//! Difference penalties on spline coefficients.
//!
//! The smoothing parameters are listed in objective order: the first one
//! belongs to the trend, then one cosine/sine pair per frequency
//! (`tau_{2k}` for the cosine amplitude, `tau_{2k+1}` for the sine amplitude).
//! The penalty matrix itself is laid out in coefficient order, where all
//! cosine blocks precede all sine blocks, so [`PenaltySpec::tau_for_block`]
//! does the translation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `(J - r) x J` matrix of `r`-th order differences.
pub fn difference_matrix(order: usize, basis_size: usize) -> Result<DMatrix<f64>> {
    if order == 0 {
        return Err(Error::InvalidParameter("penalty order must be positive".into()));
    }
    if order >= basis_size {
        return Err(Error::OrderTooHigh {
            order,
            basis_size,
        });
    }
    let mut d = DMatrix::<f64>::identity(basis_size, basis_size);
    for _ in 0..order {
        let rows = d.nrows() - 1;
        let mut next = DMatrix::<f64>::zeros(rows, basis_size);
        for i in 0..rows {
            for j in 0..basis_size {
                next[(i, j)] = d[(i + 1, j)] - d[(i, j)];
            }
        }
        d = next;
    }
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub order: usize,
    /// `2K + 1` smoothing parameters in objective order.
    pub taus: Vec<f64>,
    pub basis_size: usize,
}

impl PenaltySpec {
    pub fn new(order: usize, taus: Vec<f64>, basis_size: usize) -> Result<Self> {
        let spec = Self {
            order,
            taus,
            basis_size,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.taus.is_empty() || self.taus.len() % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "need 2K+1 smoothing parameters, got {}",
                self.taus.len()
            )));
        }
        if let Some(t) = self.taus.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "smoothing parameters must be finite and non-negative, got {t}"
            )));
        }
        if self.order == 0 {
            return Err(Error::InvalidParameter("penalty order must be positive".into()));
        }
        if self.order >= self.basis_size {
            return Err(Error::OrderTooHigh {
                order: self.order,
                basis_size: self.basis_size,
            });
        }
        Ok(())
    }

    /// Number of frequencies `K` implied by the parameter count.
    pub fn harmonics(&self) -> usize {
        (self.taus.len() - 1) / 2
    }

    pub fn blocks(&self) -> usize {
        self.taus.len()
    }

    /// Smoothing parameter of coefficient block `b` (0-based, coefficient
    /// order: trend, cos_1..cos_K, sin_1..sin_K).
    pub fn tau_for_block(&self, block: usize) -> f64 {
        let k_total = self.harmonics();
        if block == 0 {
            self.taus[0]
        } else if block <= k_total {
            // cosine amplitude of frequency k -> tau_{2k}
            self.taus[2 * block - 1]
        } else {
            // sine amplitude of frequency k -> tau_{2k+1}
            self.taus[2 * (block - k_total)]
        }
    }

    /// True when every block is unpenalized.
    pub fn is_unpenalized(&self) -> bool {
        self.taus.iter().all(|&t| t == 0.0)
    }
}

/// Block-diagonal penalty `P` whose `b`-th `J x J` block is
/// `tau_b * D_r^T D_r`.
pub fn penalty_block(spec: &PenaltySpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let j = spec.basis_size;
    let d = difference_matrix(spec.order, j)?;
    let dtd = d.transpose() * &d;
    let blocks = spec.blocks();
    let c = j * blocks;
    let mut p = DMatrix::<f64>::zeros(c, c);
    for b in 0..blocks {
        let tau = spec.tau_for_block(b);
        if tau == 0.0 {
            continue;
        }
        p.view_mut((b * j, b * j), (j, j)).copy_from(&(&dtd * tau));
    }
    Ok(p)
}

/// `sum_b tau_b * ||D_r theta_b||^2`, the penalty term of the objective.
pub fn penalty_value(spec: &PenaltySpec, theta: &DVector<f64>) -> Result<f64> {
    let j = spec.basis_size;
    if theta.len() != j * spec.blocks() {
        return Err(Error::ShapeMismatch(format!(
            "theta has length {}, expected {}",
            theta.len(),
            j * spec.blocks()
        )));
    }
    let d = difference_matrix(spec.order, j)?;
    let mut total = 0.0;
    for b in 0..spec.blocks() {
        let block = theta.rows(b * j, j);
        total += spec.tau_for_block(b) * (&d * block).norm_squared();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn apply(d: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
        (d * DVector::from_column_slice(v)).iter().copied().collect()
    }

    #[test]
    fn first_differences() {
        let d = difference_matrix(1, 3).unwrap();
        assert_eq!(apply(&d, &[1.0, 2.0, 4.0]), vec![1.0, 2.0]);
    }

    #[test]
    fn second_differences() {
        let d = difference_matrix(2, 4).unwrap();
        assert_eq!(apply(&d, &[1.0, 2.0, 4.0, 8.0]), vec![1.0, 2.0]);
    }

    #[test]
    fn second_differences_annihilate_affine() {
        let d = difference_matrix(2, 5).unwrap();
        assert_eq!(apply(&d, &[1.0, 2.0, 3.0, 4.0, 5.0]), vec![0.0; 3]);
        assert_eq!(apply(&d, &[7.0; 5]), vec![0.0; 3]);
    }

    #[test]
    fn order_too_high() {
        assert_eq!(
            difference_matrix(3, 3).unwrap_err(),
            Error::OrderTooHigh { order: 3, basis_size: 3 }
        );
        assert!(PenaltySpec::new(4, vec![1.0], 4).is_err());
    }

    #[test]
    fn zero_taus_give_zero_matrix() {
        let spec = PenaltySpec::new(2, vec![0.0; 5], 6).unwrap();
        let p = penalty_block(&spec).unwrap();
        assert_eq!(p.shape(), (30, 30));
        assert!(p.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_taus_repeat_block() {
        let spec = PenaltySpec::new(2, vec![1.0; 3], 5).unwrap();
        let p = penalty_block(&spec).unwrap();
        let d = difference_matrix(2, 5).unwrap();
        let dtd = d.transpose() * &d;
        for b in 0..3 {
            assert_eq!(p.view((b * 5, b * 5), (5, 5)).clone_owned(), dtd);
        }
        assert_eq!(p.view((0, 5), (5, 5)).iter().filter(|&&v| v != 0.0).count(), 0);
    }

    #[test]
    fn block_order_follows_coefficients() {
        // K = 2: objective order (alpha, beta1, gamma1, beta2, gamma2)
        let spec = PenaltySpec::new(1, vec![1.0, 2.0, 3.0, 4.0, 5.0], 3).unwrap();
        let got: Vec<f64> = (0..5).map(|b| spec.tau_for_block(b)).collect();
        // coefficient order (alpha, beta1, beta2, gamma1, gamma2)
        assert_eq!(got, vec![1.0, 2.0, 4.0, 3.0, 5.0]);
    }

    #[test]
    fn rejects_even_or_negative_taus() {
        assert!(PenaltySpec::new(1, vec![1.0, 1.0], 4).is_err());
        assert!(PenaltySpec::new(1, vec![-1.0], 4).is_err());
    }

    proptest! {
        #[test]
        fn quadratic_form_matches_blockwise_differences(
            k in 0usize..4,
            j in 4usize..9,
            r in 1usize..4,
            seed in proptest::collection::vec(-3.0f64..3.0, 64),
            taus in proptest::collection::vec(0.0f64..50.0, 9),
        ) {
            prop_assume!(r < j);
            let taus: Vec<f64> = taus[..2 * k + 1].to_vec();
            let spec = PenaltySpec::new(r, taus.clone(), j).unwrap();
            let c = j * (2 * k + 1);
            let theta = DVector::from_iterator(c, (0..c).map(|i| seed[i % seed.len()] * (1.0 + i as f64 * 0.01)));
            let p = penalty_block(&spec).unwrap();
            let quad = (theta.transpose() * &p * &theta)[(0, 0)];

            // brute force: objective order, differences by explicit loops
            let block = |b: usize| -> Vec<f64> { (0..j).map(|i| theta[b * j + i]).collect() };
            let diff_sq = |mut v: Vec<f64>| -> f64 {
                for _ in 0..r {
                    v = v.windows(2).map(|w| w[1] - w[0]).collect();
                }
                v.iter().map(|x| x * x).sum()
            };
            let mut brute = taus[0] * diff_sq(block(0));
            for kk in 1..=k {
                brute += taus[2 * kk - 1] * diff_sq(block(kk));
                brute += taus[2 * kk] * diff_sq(block(k + kk));
            }
            prop_assert!((quad - brute).abs() <= 1e-12 * (1.0 + brute.abs()), "{} vs {}", quad, brute);
            prop_assert!((penalty_value(&spec, &theta).unwrap() - brute).abs() <= 1e-12 * (1.0 + brute.abs()));

            // symmetric and positive semidefinite
            prop_assert_eq!(p.transpose(), p.clone());
            prop_assert!(quad >= -1e-12);
        }

        #[test]
        fn null_space_is_low_degree_polynomials(r in 1usize..5, j in 6usize..12, coefs in proptest::collection::vec(-2.0f64..2.0, 5)) {
            prop_assume!(r < j);
            let d = difference_matrix(r, j).unwrap();
            // polynomial of degree r-1 in the index
            let v: Vec<f64> = (0..j).map(|i| {
                let x = i as f64;
                (0..r).map(|p| coefs[p] * x.powi(p as i32)).sum()
            }).collect();
            let out = apply(&d, &v);
            let scale: f64 = v.iter().map(|x| x.abs()).fold(1.0, f64::max);
            prop_assert!(out.iter().all(|x| x.abs() <= 1e-9 * scale * (1 << r) as f64));
        }
    }
}
