//! Exact computation in iterated differential polynomial rings
//! `F[x1, d1, ..., xn, dn]` over the rationals and prime fields.

pub mod cli;
pub mod coeff;
pub mod gb;
pub mod ideal;
pub mod invariant;
pub mod lie;
pub mod ring;
