pub mod circuits;
pub mod dense;
pub mod clifford2;
pub mod gaussian;
pub mod harness;
pub mod theory;
pub mod stabilizer;
