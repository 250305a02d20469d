//! Lowest-order virtual element method for the two-dimensional linear
//! elasticity eigenvalue problem on polygonal meshes whose cells may have
//! arbitrarily small (even collinear) edges.

pub mod mesh;
pub mod vem;
pub mod assembly;
pub mod eigsolve;
pub mod study;
pub mod vtk;
pub mod cli;
