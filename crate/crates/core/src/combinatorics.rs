//! Integer partitions and Faà di Bruno coefficients.
//!
//! The `j`-th derivative of a composition `g ∘ f` is a sum over the integer
//! partitions `τ` of `j`:
//!
//! ```text
//! (g ∘ f)^(j) = Σ_τ B_j^τ · g^(#τ)(f) · Π_i f^(τ_i)
//! ```
//!
//! where `B_j^τ` counts the ways of splitting `j` labelled elements into
//! unlabelled blocks with sizes `τ`.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest integer accepted by [`partitions`]; p(64) is roughly 1.7 million.
pub const MAX_PARTITION_ORDER: usize = 64;

/// A non-increasing list of positive parts. The empty partition stands for 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    parts: Vec<usize>,
}

impl Partition {
    /// Builds a partition, checking that the parts are positive and
    /// non-increasing.
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.contains(&0) {
            return Err(Error::InvalidPartition(format!("zero part in {parts:?}")));
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidPartition(format!("parts {parts:?} are not non-increasing")));
        }
        Ok(Self { parts })
    }

    pub fn empty() -> Self {
        Self { parts: Vec::new() }
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    /// Number of parts, `#τ`.
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// The integer being partitioned.
    pub fn total(&self) -> usize {
        self.parts.iter().sum()
    }

    /// `(part size, multiplicity)` pairs, largest part first.
    pub fn multiplicities(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for &p in &self.parts {
            match out.last_mut() {
                Some((size, count)) if *size == p => *count += 1,
                _ => out.push((p, 1)),
            }
        }
        out
    }
}

/// All partitions of `j` in reverse-lexicographic order (`[j]` first,
/// `[1, …, 1]` last). For `j = 0` this is the single empty partition.
pub fn partitions(j: usize) -> Result<Vec<Partition>> {
    if j > MAX_PARTITION_ORDER {
        return Err(Error::SizeLimit(format!("partitions of {j} requested, limit is {MAX_PARTITION_ORDER}")));
    }
    let mut out = Vec::new();
    if j == 0 {
        out.push(Partition::empty());
        return Ok(out);
    }
    let mut current = vec![j];
    loop {
        out.push(Partition { parts: current.clone() });
        // Strip trailing ones, then decrement the last part larger than one
        // and refill greedily with the freed amount.
        let mut freed = 0;
        while current.last() == Some(&1) {
            current.pop();
            freed += 1;
        }
        let Some(last) = current.last_mut() else {
            break;
        };
        *last -= 1;
        let cap = *last;
        freed += 1;
        while freed > 0 {
            let take = freed.min(cap);
            current.push(take);
            freed -= take;
        }
    }
    Ok(out)
}

fn factorial(k: usize) -> BigUint {
    (1..=k).fold(BigUint::from(1u32), |acc, i| acc * BigUint::from(i))
}

/// `B_j^τ = j! / (Π τ_i! · Π_m mult_m!)`, exact.
pub fn fdb_coefficient_big(j: usize, tau: &Partition) -> Result<BigUint> {
    if tau.total() != j {
        return Err(Error::InvalidPartition(format!("{:?} sums to {}, expected {j}", tau.parts(), tau.total())));
    }
    let mut denom = BigUint::from(1u32);
    for &p in tau.parts() {
        denom *= factorial(p);
    }
    for (_, mult) in tau.multiplicities() {
        denom *= factorial(mult);
    }
    Ok(factorial(j) / denom)
}

/// [`fdb_coefficient_big`] narrowed to `u128`.
pub fn fdb_coefficient(j: usize, tau: &Partition) -> Result<u128> {
    let big = fdb_coefficient_big(j, tau)?;
    u128::try_from(&big).map_err(|_| Error::Overflow(format!("B_{j}^{:?} exceeds u128", tau.parts())))
}

fn fdb_coefficient_f64(j: usize, tau: &Partition) -> Result<f64> {
    // Every partition handled here comes from `partitions`, so the sum check
    // cannot fail; the f64 conversion saturates only far beyond j = 64.
    let big = fdb_coefficient_big(j, tau)?;
    Ok(big.to_string().parse::<f64>().unwrap_or(f64::INFINITY))
}

/// `order`-th derivative of `g ∘ f`.
///
/// `outer[k - 1]` is `g^(k)` evaluated at `f(x)` and `inner[k - 1]` is
/// `f^(k)(x)`, for `k = 1..=order`.
pub fn compose_derivatives(outer: &[f64], inner: &[f64], order: usize) -> Result<f64> {
    if order == 0 {
        return Err(Error::InsufficientData(
            "order 0 needs g(f(x)) itself, which is not part of the derivative lists".into(),
        ));
    }
    if outer.len() < order || inner.len() < order {
        return Err(Error::InsufficientData(format!(
            "order {order} needs {order} derivatives, got outer={} inner={}",
            outer.len(),
            inner.len()
        )));
    }
    let mut total = 0.0;
    for tau in partitions(order)? {
        let coeff = fdb_coefficient_f64(order, &tau)?;
        let product: f64 = tau.parts().iter().map(|&p| inner[p - 1]).product();
        total += coeff * outer[tau.len() - 1] * product;
    }
    Ok(total)
}
