//! Halton low-discrepancy sequences.
//!
//! Each coordinate of a Halton point is the radical inverse of the point
//! index in a distinct prime base. Indices start at 1; index 0 maps to the
//! origin and is never emitted.

use crate::error::{Error, Result};

/// Base-`p` radical inverse of `k`: the digits of `k` in base `p`, mirrored
/// around the radix point.
pub fn radical_inverse(k: u64, p: u64) -> Result<f64> {
    if k == 0 {
        return Err(Error::config("radical inverse index must be >= 1"));
    }
    if !is_prime(p) {
        return Err(Error::config(format!("radical inverse base {p} is not a prime")));
    }
    Ok(radical_inverse_unchecked(k, p))
}

fn radical_inverse_unchecked(mut k: u64, p: u64) -> f64 {
    let inv_base = 1.0 / p as f64;
    let mut scale = inv_base;
    let mut value = 0.0;
    while k > 0 {
        value += (k % p) as f64 * scale;
        k /= p;
        scale *= inv_base;
    }
    value
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// The first `n` primes in increasing order.
pub fn first_primes(n: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(n);
    let mut candidate = 2;
    while primes.len() < n {
        if is_prime(candidate) {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes
}

/// Stateful Halton generator over `d` dimensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HaltonState {
    bases: Vec<u64>,
    counter: u64,
}

impl HaltonState {
    /// Generator over the first `dimension` primes starting at index 1.
    pub fn new(dimension: usize) -> Result<Self> {
        Self::with_offset(dimension, 0)
    }

    /// Generator whose first emitted index is `1 + offset`.
    pub fn with_offset(dimension: usize, offset: u64) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::config("Halton dimension must be >= 1"));
        }
        Ok(Self {
            bases: first_primes(dimension),
            counter: 1 + offset,
        })
    }

    pub fn dimension(&self) -> usize {
        self.bases.len()
    }

    pub fn bases(&self) -> &[u64] {
        &self.bases
    }

    /// Index of the next point to be emitted.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Next point of the sequence in the unit hypercube `[0,1)^d`.
    pub fn next_unit(&mut self) -> Vec<f64> {
        let k = self.counter;
        self.counter += 1;
        self.bases.iter().map(|&p| radical_inverse_unchecked(k, p)).collect()
    }

    /// Next point scaled into the box `[lower, upper]`.
    pub fn next_point(&mut self, lower: &[f64], upper: &[f64]) -> Result<Vec<f64>> {
        if lower.len() != self.dimension() || upper.len() != self.dimension() {
            return Err(Error::config(format!(
                "Halton generator has {} dimensions but bounds have {}/{}",
                self.dimension(),
                lower.len(),
                upper.len()
            )));
        }
        let unit = self.next_unit();
        Ok(unit
            .iter()
            .zip(lower.iter().zip(upper))
            .map(|(e, (lo, hi))| lo + (hi - lo) * e)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn radical_inverse_small_cases() {
        assert_eq!(radical_inverse(1, 2).unwrap(), 0.5);
        assert_eq!(radical_inverse(3, 2).unwrap(), 0.75);
        assert!((radical_inverse(5, 3).unwrap() - 7.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_zero_index_and_composite_base() {
        assert!(radical_inverse(0, 2).is_err());
        assert!(radical_inverse(3, 4).is_err());
        assert!(radical_inverse(3, 1).is_err());
    }

    #[test]
    fn scaled_points() {
        let mut h = HaltonState::new(1).unwrap();
        assert_eq!(h.next_point(&[0.0], &[30.0]).unwrap(), vec![15.0]);

        let mut h = HaltonState::new(2).unwrap();
        let p = h.next_point(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_eq!(p[0], 0.5);
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(h.counter(), 2);
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let mut h = HaltonState::new(2).unwrap();
        assert!(h.next_point(&[0.0], &[1.0]).is_err());
    }

    #[test]
    fn first_eight_base_two_points_fill_eighths() {
        let mut h = HaltonState::new(1).unwrap();
        let mut hits = [0usize; 8];
        for _ in 0..8 {
            let x = h.next_point(&[0.0], &[1.0]).unwrap()[0];
            hits[(x * 8.0).floor() as usize] += 1;
        }
        assert_eq!(hits, [1; 8]);
    }

    #[test]
    fn bases_are_increasing_primes() {
        let h = HaltonState::new(6).unwrap();
        assert_eq!(h.bases(), &[2, 3, 5, 7, 11, 13]);
    }

    proptest! {
        #[test]
        fn unit_and_scaled_points_stay_inside(
            dim in 1usize..8,
            offset in 0u64..10_000,
            lo in -100.0f64..100.0,
            width in 1e-3f64..50.0,
        ) {
            let mut h = HaltonState::with_offset(dim, offset).unwrap();
            let lower = vec![lo; dim];
            let upper = vec![lo + width; dim];
            for _ in 0..16 {
                let p = h.next_point(&lower, &upper).unwrap();
                for x in p {
                    prop_assert!(x >= lo && x <= lo + width);
                }
            }
            let mut h = HaltonState::with_offset(dim, offset).unwrap();
            for e in h.next_unit() {
                prop_assert!((0.0..1.0).contains(&e));
            }
        }

        #[test]
        fn equal_states_emit_identical_sequences(dim in 1usize..6, offset in 0u64..1000) {
            let mut a = HaltonState::with_offset(dim, offset).unwrap();
            let mut b = a.clone();
            for _ in 0..32 {
                let pa = a.next_unit();
                let pb = b.next_unit();
                prop_assert_eq!(pa.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
                                pb.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
            }
        }
    }
}
