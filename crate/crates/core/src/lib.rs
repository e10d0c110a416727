//! Group-theoretic tools for cyclic isogenies and the local-global principle:
//! arithmetic mod prime powers, subgroups of `GL_2`, exceptional-group search,
//! modular-curve genera, CM Cartan analysis and Frobenius witnesses.

pub mod cm;
pub mod error;
pub mod exceptional;
pub mod fixtures;
pub mod frobdata;
pub mod genus;
pub mod grp;
pub mod mat2;
pub mod modring;
pub mod verify;

pub use error::{Error, Result};
pub use grp::MatGroup;
pub use mat2::{LineClass, Mat2};
pub use modring::{PrimePowerModulus, Residue};
