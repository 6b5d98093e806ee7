//! Scalar fields ℝ, ℂ, ℍ and the complex representation used for all matrix
//! algebra.
//!
//! A quaternion `q0 + q1 i + q2 j + q3 k` is stored as four reals and acts on
//! matrices through the 2×2 complex block
//! `[[q0 + i q1, q2 + i q3], [-q2 + i q3, q0 - i q1]]`.
//! An r×r quaternion matrix therefore becomes a 2r×2r complex matrix whose
//! eigenvalues come in identical (Kramers) pairs.

use crate::error::{domain, Error, Result};
use crate::linalg::cmat::{CMat, C64};
use serde::{Deserialize, Serialize};

/// The scalar field of an ensemble, or a bare β for scalar (r=1) contexts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum FieldTag {
    Real,
    Complex,
    Quaternion,
    /// Any β > 0; only valid where no matrix entries are field-valued.
    GeneralBeta(f64),
}

impl FieldTag {
    /// Map β ∈ {1, 2, 4} onto its field and any other positive β onto
    /// `GeneralBeta`.
    pub fn from_beta(beta: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return domain(format!("beta must be positive and finite, got {beta}"));
        }
        Ok(if beta == 1.0 {
            FieldTag::Real
        } else if beta == 2.0 {
            FieldTag::Complex
        } else if beta == 4.0 {
            FieldTag::Quaternion
        } else {
            FieldTag::GeneralBeta(beta)
        })
    }

    /// Like [`FieldTag::from_beta`] but rejects β outside {1, 2, 4}.
    pub fn field_from_beta(beta: f64) -> Result<Self> {
        match Self::from_beta(beta)? {
            FieldTag::GeneralBeta(b) => domain(format!("matrix-valued constructions need beta in {{1, 2, 4}}, got {b}")),
            f => Ok(f),
        }
    }

    #[must_use]
    pub fn beta(self) -> f64 {
        match self {
            FieldTag::Real => 1.0,
            FieldTag::Complex => 2.0,
            FieldTag::Quaternion => 4.0,
            FieldTag::GeneralBeta(b) => b,
        }
    }

    #[must_use]
    pub fn is_field(self) -> bool {
        !matches!(self, FieldTag::GeneralBeta(_))
    }

    /// Number of real components of a field element.
    pub fn real_dim(self) -> Result<usize> {
        match self {
            FieldTag::Real => Ok(1),
            FieldTag::Complex => Ok(2),
            FieldTag::Quaternion => Ok(4),
            FieldTag::GeneralBeta(b) => Err(Error::Domain(format!("no field elements exist for general beta {b}"))),
        }
    }

    /// Side length of the complex block representing one field element.
    #[must_use]
    pub fn embed_dim(self) -> usize {
        if self == FieldTag::Quaternion {
            2
        } else {
            1
        }
    }
}

/// A field element as up to four real components `(1, i, j, k)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FieldElement(pub [f64; 4]);

impl FieldElement {
    #[must_use]
    pub fn real(x: f64) -> Self {
        Self([x, 0.0, 0.0, 0.0])
    }

    #[must_use]
    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum()
    }

    #[must_use]
    pub fn scale(self, s: f64) -> Self {
        Self(self.0.map(|c| c * s))
    }
}

/// An r×r field-valued matrix held in its complex representation
/// (`r·embed_dim` square).
#[derive(Clone, Debug, PartialEq)]
pub struct FieldMatrix {
    pub field: FieldTag,
    pub r: usize,
    pub mat: CMat,
}

impl FieldMatrix {
    #[must_use]
    pub fn zeros(field: FieldTag, r: usize) -> Self {
        let e = field.embed_dim();
        Self { field, r, mat: CMat::zeros(r * e, r * e) }
    }

    #[must_use]
    pub fn identity(field: FieldTag, r: usize) -> Self {
        let e = field.embed_dim();
        Self { field, r, mat: CMat::identity(r * e) }
    }

    pub fn set(&mut self, i: usize, j: usize, q: FieldElement) {
        write_entry(&mut self.mat, self.field, i, j, q);
    }

    #[must_use]
    pub fn get(&self, i: usize, j: usize) -> FieldElement {
        read_entry(&self.mat, self.field, i, j)
    }
}

/// Write field element `q` at logical position (i, j) of a complex
/// representation.
pub fn write_entry(m: &mut CMat, field: FieldTag, i: usize, j: usize, q: FieldElement) {
    let [q0, q1, q2, q3] = q.0;
    match field {
        FieldTag::Quaternion => {
            let (r, c) = (2 * i, 2 * j);
            m[(r, c)] = C64::new(q0, q1);
            m[(r, c + 1)] = C64::new(q2, q3);
            m[(r + 1, c)] = C64::new(-q2, q3);
            m[(r + 1, c + 1)] = C64::new(q0, -q1);
        }
        FieldTag::Complex => m[(i, j)] = C64::new(q0, q1),
        _ => m[(i, j)] = C64::new(q0, 0.0),
    }
}

/// Read the field element at logical position (i, j).
#[must_use]
pub fn read_entry(m: &CMat, field: FieldTag, i: usize, j: usize) -> FieldElement {
    match field {
        FieldTag::Quaternion => {
            let a = m[(2 * i, 2 * j)];
            let b = m[(2 * i, 2 * j + 1)];
            FieldElement([a.re, a.im, b.re, b.im])
        }
        FieldTag::Complex => {
            let z = m[(i, j)];
            FieldElement([z.re, z.im, 0.0, 0.0])
        }
        _ => FieldElement::real(m[(i, j)].re),
    }
}

/// Collapse the doubled spectrum of a quaternion matrix's complex
/// representation: sorted input, pairs matched greedily, relative tolerance
/// `rel_tol`.
pub fn dedup_kramers(sorted: &[f64], rel_tol: f64) -> Result<Vec<f64>> {
    if !sorted.len().is_multiple_of(2) {
        return Err(Error::Internal(format!("odd number ({}) of eigenvalues in a quaternion spectrum", sorted.len())));
    }
    let mut out = Vec::with_capacity(sorted.len() / 2);
    for pair in sorted.chunks(2) {
        let (x, y) = (pair[0], pair[1]);
        let scale = x.abs().max(y.abs()).max(f64::MIN_POSITIVE);
        if (x - y).abs() > rel_tol * scale {
            return Err(Error::Internal(format!("Kramers pair mismatch: {x} vs {y} (relative {})", (x - y).abs() / scale)));
        }
        out.push(0.5 * (x + y));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quat_mul(p: [f64; 4], q: [f64; 4]) -> [f64; 4] {
        let [a1, b1, c1, d1] = p;
        let [a2, b2, c2, d2] = q;
        [
            a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
            a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
            a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
        ]
    }

    #[test]
    fn embedding_is_multiplicative() {
        let p = [0.3, -1.2, 0.7, 2.0];
        let q = [1.1, 0.4, -0.5, 0.25];
        let mut mp = CMat::zeros(2, 2);
        let mut mq = CMat::zeros(2, 2);
        write_entry(&mut mp, FieldTag::Quaternion, 0, 0, FieldElement(p));
        write_entry(&mut mq, FieldTag::Quaternion, 0, 0, FieldElement(q));
        let prod = read_entry(&mp.mul(&mq), FieldTag::Quaternion, 0, 0);
        let want = quat_mul(p, q);
        for (x, y) in prod.0.iter().zip(want) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn embedding_adjoint_is_conjugate() {
        let q = FieldElement([0.3, -1.2, 0.7, 2.0]);
        let mut m = CMat::zeros(2, 2);
        write_entry(&mut m, FieldTag::Quaternion, 0, 0, q);
        let adj = read_entry(&m.adjoint(), FieldTag::Quaternion, 0, 0);
        assert_eq!(adj.0, [0.3, 1.2, -0.7, -2.0]);
    }

    #[test]
    fn beta_mapping() {
        assert_eq!(FieldTag::from_beta(4.0).unwrap(), FieldTag::Quaternion);
        assert_eq!(FieldTag::from_beta(3.0).unwrap(), FieldTag::GeneralBeta(3.0));
        assert!(FieldTag::from_beta(0.0).is_err());
        assert!(FieldTag::field_from_beta(3.0).is_err());
    }

    #[test]
    fn dedup_rejects_unpaired() {
        assert!(dedup_kramers(&[1.0, 1.0, 2.0, 2.0 + 1e-12], 1e-8).is_ok());
        assert!(dedup_kramers(&[1.0, 1.5], 1e-8).is_err());
    }
}
