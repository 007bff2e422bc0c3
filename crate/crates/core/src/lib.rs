// SPDX-License-Identifier: Apache-2.0

//! Collision rates and non-Markovian decoherence of a massive test particle
//! with internal structure moving through a dilute thermal gas.

pub mod channels;
pub mod dynamics;
pub mod rates;
pub mod scattering;
pub mod error;
pub mod figures;
pub mod io;
pub mod exec;
pub mod quadrature;
pub mod units;
pub mod visibility;

pub use error::{Error, Result};
pub use units::{PhysicalConstants, Vec3};
