//! Equilibrium learning in imperfect-information extensive-form games from
//! bandit feedback, with balanced exploration.

pub mod game;
pub mod balanced;
pub mod equilibrium;
pub mod simplex;
pub mod omd;
pub mod cfr;
pub mod games;
pub mod harness;
