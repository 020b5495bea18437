pub mod dirichlet;
pub mod eigensolve;
pub mod error;
pub mod grid;
pub mod io;
pub mod problem;
pub mod radial;
pub mod symfun;
pub mod variational;
pub mod verify;
