//! Small dense linear algebra and a reproducible random stream.
//!
//! Nothing here aims at generality: vectors and matrices are at most a few
//! dozen entries on a side, and eigenvalues are only ever needed for the
//! per-mode 1x1 to 3x3 update matrices.

mod eigen;
mod linalg;
mod qr;
mod rng;

pub use eigen::small_spectral_radius;
pub use linalg::{solve_spd, DenseMatrix, DenseVector};
pub use qr::random_orthogonal;
pub use rng::{derive_seed, mix64, standard_normal, SeededRng};
