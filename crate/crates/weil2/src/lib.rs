//! Exact arithmetic over the ring R of length-two Witt vectors of a binary
//! field, and the finite representation theory built on top of it: Heisenberg
//! groups with R-valued centers, function models attached to enhanced
//! lagrangians, intertwining operators and their composition constants, Gauss
//! sums of R-valued quadratic forms, Maslov kernels of lagrangian tuples, and
//! the lattice-quotient reduction of the 2-adic picture.
//!
//! Everything is computed with exact integers (Gaussian integers for
//! character sums), so every identity checked by the test suites is an exact
//! equality.

pub mod heisenberg;
pub mod intertwine;
pub mod maslov;
pub mod padic;
pub mod qforms;
pub mod rmodlin;
pub mod symplectic;
pub mod veritool;
pub mod witt;
