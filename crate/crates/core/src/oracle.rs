//! Cost-function oracles: anything that can be queried at a parameter point.

use crate::error::{Error, Result};
use crate::trigpoly::TrigPoly;

/// A (possibly noisy) cost function on `[0, 2π)^d`.
///
/// `stream` identifies the query so noisy oracles can derive an independent,
/// reproducible random stream per point. Exact oracles ignore it.
pub trait Oracle: Sync {
    fn dims(&self) -> usize;

    fn value(&self, theta: &[f64], stream: u64) -> Result<f64>;

    /// Shots per query, `None` for an exact oracle.
    fn shots(&self) -> Option<u64> {
        None
    }
}

impl<O: Oracle + ?Sized> Oracle for &O {
    fn dims(&self) -> usize {
        (**self).dims()
    }

    fn value(&self, theta: &[f64], stream: u64) -> Result<f64> {
        (**self).value(theta, stream)
    }

    fn shots(&self) -> Option<u64> {
        (**self).shots()
    }
}

/// Wraps a closure of fixed arity.
pub struct FnOracle<F> {
    dims: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnOracle<F> {
    pub fn new(dims: usize, f: F) -> Self {
        Self { dims, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Oracle for FnOracle<F> {
    fn dims(&self) -> usize {
        self.dims
    }

    fn value(&self, theta: &[f64], _stream: u64) -> Result<f64> {
        check_dims(self.dims, theta)?;
        Ok((self.f)(theta))
    }
}

impl Oracle for TrigPoly {
    fn dims(&self) -> usize {
        TrigPoly::dims(self)
    }

    fn value(&self, theta: &[f64], _stream: u64) -> Result<f64> {
        self.eval(theta)
    }
}

/// `-C(θ)`: turns a maximisation landscape into a minimisation one.
pub struct Negated<O>(pub O);

impl<O: Oracle> Oracle for Negated<O> {
    fn dims(&self) -> usize {
        self.0.dims()
    }

    fn value(&self, theta: &[f64], stream: u64) -> Result<f64> {
        Ok(-self.0.value(theta, stream)?)
    }

    fn shots(&self) -> Option<u64> {
        self.0.shots()
    }
}

pub(crate) fn check_dims(expected: usize, theta: &[f64]) -> Result<()> {
    if theta.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: theta.len(),
        });
    }
    Ok(())
}

/// Mixes a master seed with a stream index (SplitMix64 finaliser).
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ_per_stream() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|s| derive_seed(7, s)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
        assert_eq!(derive_seed(3, 4), derive_seed(3, 4));
    }

    #[test]
    fn fn_oracle_checks_arity() {
        let o = FnOracle::new(2, |t: &[f64]| t[0] + t[1]);
        assert_eq!(o.value(&[1.0, 2.0], 0).unwrap(), 3.0);
        assert!(o.value(&[1.0], 0).is_err());
        assert_eq!(Negated(&o).value(&[1.0, 2.0], 0).unwrap(), -3.0);
    }
}
