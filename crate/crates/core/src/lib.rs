//! Planning and synchronization of robot teams under LTL missions.

pub mod ltl;
pub mod model;
pub mod planfile;
pub mod team;
pub mod optimal;
pub mod sync;
pub mod sim;
pub mod io;
