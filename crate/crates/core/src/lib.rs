//! Contiguous trilateration orders (DMDGP orders) for undirected graphs.
//!
//! Given a graph `G` and a dimension `K`, a DMDGP order is a permutation of
//! the vertices in which any two vertices at most `K` positions apart are
//! adjacent. The crate provides:
//!
//! - [`graph`]: the immutable graph type and its structural queries,
//! - [`oracle`]: order verification and brute-force enumeration,
//! - [`preprocess`]: infeasibility checks, rank-domain reduction, symmetry
//!   breaking and stable-set valid inequalities,
//! - [`solver`]: a backtracking propagation engine over rank, position or
//!   channelled variables,
//! - [`instance_io`]: the `p ctop` text format, seeded generators and the
//!   bundled fixture graphs.
//!
//! ```
//! use ctop_core::{instance_io, oracle::Instance, solver};
//!
//! let g = instance_io::gen_wheel(7).unwrap();
//! let inst = Instance::new(g, 2).unwrap();
//! let out = solver::solve(&inst, &solver::SolveConfig::default()).unwrap();
//! assert_eq!(out.status, solver::Status::Infeasible);
//! ```

pub mod error;
pub mod graph;
pub mod instance_io;
pub mod oracle;
pub mod preprocess;
pub mod solver;

pub use error::Error;
pub use graph::{Graph, VertexSet};
pub use oracle::{DmdgpOrder, Instance};
