//! Information geometry of multivariate normals: Fisher-Rao distances and
//! geodesics, Hilbert projective geometry on the SPD cone, and clustering
//! and quantization of Gaussian mixtures built on top of them.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cluster;
pub mod error;
pub mod fisherrao;
pub mod gaussian;
pub mod hilbert;
pub mod matcore;

pub use cluster::{Clustering, Distance, Geodesic, MetricSpace, Miniball, Quantization, VpTree};
pub use error::{GeoError, Result};
pub use fisherrao::{ApproxConfig, ApproxResult, FrGeodesic, GeodesicSample, Midpoint, StepDivergence};
pub use gaussian::{AffineMap, Gmm, Mvn, TangentVector};
pub use hilbert::{HilbertGeodesicCoeffs, HilbertMethod};
pub use matcore::{AhmTrace, EigenDecomposition, Matrix, SpdMatrix, SymFunc, SymMatrix, Vector};
