//! Structured linear algebra: small complex blocks, factored (block)
//! tridiagonal eigenvalue counts, Gauss–Legendre nodes.

pub mod block_tridiag;
pub mod cmat;
pub mod quadrature;
pub mod tridiag;
