//! Instance generators.

pub mod affine;
pub mod lasso;

pub use affine::{gen_affine_vi, gen_affine_vi_with, random_affine_vi, AffineSet, AffineVi, AffineViInstance};
pub use lasso::{gen_lasso, lasso_mapping, lasso_objective, LassoInstance, LassoProblem, LassoSpec, NoiseMode, TPolicy};
