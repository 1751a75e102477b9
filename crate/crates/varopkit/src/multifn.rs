//! Complex functions on `G^k`, stored as flat row-major tables.
//!
//! All integrals are against normalized Haar measure, so the pairing of two
//! functions on `G^k` is `(1/|G|^k) Σ_{x⃗} u(x⃗) conj(v(x⃗))` and `‖1‖₂ = 1`.

use crate::group::{build_group, FiniteGroup, GroupDescriptor, TupleIndex};
use crate::{c64, cx, Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// A function `G^k → ℂ` over a shared group table.
#[derive(Clone, Debug)]
pub struct MultiFn {
    group: Arc<FiniteGroup>,
    arity: usize,
    values: Vec<c64>,
}

impl MultiFn {
    pub fn new(group: Arc<FiniteGroup>, arity: usize, values: Vec<c64>) -> Result<MultiFn> {
        let expect = TupleIndex::new(group.order(), arity).len();
        if values.len() != expect {
            return Err(Error::ShapeMismatch(format!(
                "value table has length {}, arity {arity} over order {} needs {expect}",
                values.len(),
                group.order()
            )));
        }
        Ok(MultiFn {
            group,
            arity,
            values,
        })
    }

    pub fn from_fn(
        group: Arc<FiniteGroup>,
        arity: usize,
        mut f: impl FnMut(&[usize]) -> c64,
    ) -> MultiFn {
        let idx = TupleIndex::new(group.order(), arity);
        let values = idx.iter().map(|t| f(&t)).collect();
        MultiFn {
            group,
            arity,
            values,
        }
    }

    pub fn zero(group: Arc<FiniteGroup>, arity: usize) -> MultiFn {
        let len = TupleIndex::new(group.order(), arity).len();
        MultiFn {
            group,
            arity,
            values: vec![cx(0.0, 0.0); len],
        }
    }

    pub fn constant(group: Arc<FiniteGroup>, arity: usize, value: c64) -> MultiFn {
        let len = TupleIndex::new(group.order(), arity).len();
        MultiFn {
            group,
            arity,
            values: vec![value; len],
        }
    }

    /// Point mass: `1` at `tuple`, `0` elsewhere.
    pub fn delta(group: Arc<FiniteGroup>, tuple: &[usize]) -> Result<MultiFn> {
        let idx = TupleIndex::new(group.order(), tuple.len());
        let flat = idx.to_flat(tuple)?;
        let mut values = vec![cx(0.0, 0.0); idx.len()];
        values[flat] = cx(1.0, 0.0);
        Ok(MultiFn {
            group,
            arity: tuple.len(),
            values,
        })
    }

    /// Independent standard complex Gaussian values.
    pub fn random(group: Arc<FiniteGroup>, arity: usize, rng: &mut impl Rng) -> MultiFn {
        let len = TupleIndex::new(group.order(), arity).len();
        let values = (0..len)
            .map(|_| crate::la::randn_c(rng))
            .collect();
        MultiFn {
            group,
            arity,
            values,
        }
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn tuple_index(&self) -> TupleIndex {
        TupleIndex::new(self.group.order(), self.arity)
    }

    pub fn values(&self) -> &[c64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [c64] {
        &mut self.values
    }

    #[inline]
    pub fn at_flat(&self, flat: usize) -> c64 {
        self.values[flat]
    }

    pub fn at(&self, tuple: &[usize]) -> Result<c64> {
        Ok(self.values[self.tuple_index().to_flat(tuple)?])
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Haar-normalized `ℓ²` norm: `((1/|G|^k) Σ |u|²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.values.len() as f64).sqrt()
    }

    pub fn conj(&self) -> MultiFn {
        let values = self.values.iter().map(|v| v.conj()).collect();
        MultiFn {
            group: self.group.clone(),
            arity: self.arity,
            values,
        }
    }

    pub fn scale(&self, s: c64) -> MultiFn {
        let values = self.values.iter().map(|v| v * s).collect();
        MultiFn {
            group: self.group.clone(),
            arity: self.arity,
            values,
        }
    }

    fn check_compatible(&self, other: &MultiFn) -> Result<()> {
        if !self.group.same_group(&other.group) {
            return Err(Error::GroupMismatch);
        }
        if self.arity != other.arity {
            return Err(Error::ArityMismatch(format!(
                "arity {} vs {}",
                self.arity, other.arity
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &MultiFn) -> Result<MultiFn> {
        self.check_compatible(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Ok(MultiFn {
            group: self.group.clone(),
            arity: self.arity,
            values,
        })
    }

    pub fn sub(&self, other: &MultiFn) -> Result<MultiFn> {
        self.check_compatible(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(MultiFn {
            group: self.group.clone(),
            arity: self.arity,
            values,
        })
    }

    /// Pointwise product.
    pub fn mul(&self, other: &MultiFn) -> Result<MultiFn> {
        self.check_compatible(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        Ok(MultiFn {
            group: self.group.clone(),
            arity: self.arity,
            values,
        })
    }

    /// Flat indices where `|u|` exceeds `threshold`.
    pub fn support(&self, threshold: f64) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.norm() > threshold)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn max_deviation(&self, other: &MultiFn) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Bitwise equality of value tables (same group, arity, and `f64` bits).
    pub fn bit_eq(&self, other: &MultiFn) -> bool {
        self.group.same_group(&other.group)
            && self.arity == other.arity
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits())
    }

    pub fn to_json(&self) -> MultiFnJson {
        MultiFnJson {
            group: self.group.descriptor().clone(),
            arity: self.arity,
            values: self.values.iter().map(|v| [v.re, v.im]).collect(),
        }
    }

    pub fn from_json(json: &MultiFnJson) -> Result<MultiFn> {
        let group = Arc::new(build_group(&json.group)?);
        let values = json.values.iter().map(|[re, im]| cx(*re, *im)).collect();
        MultiFn::new(group, json.arity, values)
    }
}

/// Serialization form: descriptor, arity, and the flat row-major value table
/// as `[re, im]` pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MultiFnJson {
    pub group: GroupDescriptor,
    pub arity: usize,
    pub values: Vec<[f64; 2]>,
}

/// Haar pairing on `G^k`: `(1/|G|^k) Σ u(x⃗) conj(v(x⃗))`.
pub fn haar_pair(u: &MultiFn, v: &MultiFn) -> Result<c64> {
    u.check_compatible(v)?;
    let sum: c64 = u
        .values
        .iter()
        .zip(&v.values)
        .map(|(a, b)| a * b.conj())
        .sum();
    Ok(sum / cx(u.values.len() as f64, 0.0))
}
