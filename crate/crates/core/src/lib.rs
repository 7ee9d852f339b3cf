//! Modular q-series arithmetic and partition congruence experiments.
//!
//! Everything is computed over `Z/MZ` for a caller-chosen modulus `M`:
//! truncated q-expansions with fractional (24th-integral) exponents, eta
//! quotients and lattice theta series, Hecke operators of integral and
//! half-integral weight, the Shimura correspondence, twist constructions of
//! cusp forms, and the census/search drivers used to probe Newman-style
//! residue distribution questions at desk scale.
//!
//! The crate is `no_std` (with `alloc`); IO, file formats, and the command
//! line front end live in the companion `newman-cli` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod cusps;
pub mod hecke;
pub mod newman;
pub mod numtheory;
pub mod partitions;
pub mod qseries;
