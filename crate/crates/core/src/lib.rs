//! Numerical verification of stratified Lê-Greuel, Gauss-Bonnet and
//! infinitesimal kinematic identities on explicit polynomial germs.

pub mod cli;
pub mod integrate;
pub mod linalg;
pub mod poly;
pub mod solver;
pub mod strata;
pub mod topo;
pub mod verify;
