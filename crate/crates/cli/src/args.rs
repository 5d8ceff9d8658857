//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug, Clone)]
#[command(name = "gaussgeo", version, about = "Fisher-Rao and Hilbert geometry of multivariate normals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Add wall-clock seconds to the report (makes output run-dependent).
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Distance between two normals of a dataset.
    Distance(DistanceArgs),
    /// Sample a curve between two normals into a CSV file.
    Geodesic(GeodesicArgs),
    /// k-center or k-medioid clustering of the normals of a dataset.
    Cluster(ClusterArgs),
    /// Shared-codebook quantization of a set of mixtures.
    Quantize(QuantizeArgs),
    /// Approximate minimax center of the normals of a dataset.
    Miniball(MiniballArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceMethod {
    /// Guaranteed (1+ε) approximation.
    #[value(name = "fr-approx")]
    FrApprox,
    /// Sum of √Jeffreys over T geodesic steps.
    #[value(name = "fr-T")]
    FrT,
    /// Length of the exact geodesic.
    Fr,
    JeffreysSqrt,
    /// Lower bound through the cone embedding.
    CalvoOller,
    Hilbert,
    /// Kullback-Leibler divergence KL(N_i : N_j).
    Kl,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum MidpointArg {
    Geodesic,
    Ahm,
}

#[derive(Args, Debug, Clone)]
pub struct DistanceArgs {
    /// Dataset file with an "mvns" list.
    pub input: PathBuf,
    /// Index of the first normal.
    #[arg(long, default_value_t = 0)]
    pub i: usize,
    /// Index of the second normal.
    #[arg(long, default_value_t = 1)]
    pub j: usize,
    #[arg(long, value_enum, default_value_t = DistanceMethod::FrApprox)]
    pub method: DistanceMethod,
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    /// Bisection midpoint rule for fr-approx.
    #[arg(long, value_enum, default_value_t = MidpointArg::Geodesic)]
    pub midpoint: MidpointArg,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveArg {
    FisherRao,
    Mixture,
    Exponential,
    Hilbert,
}

#[derive(Args, Debug, Clone)]
pub struct GeodesicArgs {
    pub input: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub i: usize,
    #[arg(long, default_value_t = 1)]
    pub j: usize,
    #[arg(long, value_enum, default_value_t = CurveArg::FisherRao)]
    pub curve: CurveArg,
    /// Number of samples at t = k/(n-1).
    #[arg(long, default_value_t = 101)]
    pub samples: usize,
    /// CSV destination for the sampled curve.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional CSV destination for covariance ellipses of the first two coordinates.
    #[arg(long)]
    pub ellipses: Option<PathBuf>,
    /// Polyline vertices per ellipse.
    #[arg(long, default_value_t = 64)]
    pub ellipse_vertices: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricArg {
    /// Exact geodesic length.
    Fr,
    #[value(name = "fr-approx")]
    FrApprox,
    #[value(name = "fr-T")]
    FrT,
    Hilbert,
    /// Hilbert distance with power-iteration eigenvalues.
    HilbertPower,
    JeffreysSqrt,
    CalvoOller,
}

#[derive(Args, Debug, Clone)]
pub struct MetricOpts {
    #[arg(long, value_enum, default_value_t = MetricArg::Hilbert)]
    pub metric: MetricArg,
    /// ε for fr-approx.
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    /// T for fr-T.
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    /// Iterations for hilbert-power.
    #[arg(long, default_value_t = 200)]
    pub power_iterations: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterAlgo {
    Kcenter,
    Kmedioid,
}

#[derive(Args, Debug, Clone)]
pub struct ClusterArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = ClusterAlgo::Kcenter)]
    pub algo: ClusterAlgo,
    #[command(flatten)]
    pub metric: MetricOpts,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone)]
pub struct QuantizeArgs {
    /// Dataset file with a "gmms" list.
    pub input: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[command(flatten)]
    pub metric: MetricOpts,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum MiniballAlgo {
    /// Walk along geodesics of the chosen metric.
    Direct,
    /// Walk in the embedding cone, then project back.
    Embedded,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeodesicArg {
    FisherRao,
    Hilbert,
    Mixture,
}

#[derive(Args, Debug, Clone)]
pub struct MiniballArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub metric: MetricOpts,
    /// Curve walked by the direct algorithm; defaults to the metric's own geodesic.
    #[arg(long, value_enum)]
    pub geodesic: Option<GeodesicArg>,
    #[arg(long, default_value_t = 1000)]
    pub iters: usize,
    #[arg(long, value_enum, default_value_t = MiniballAlgo::Direct)]
    pub algo: MiniballAlgo,
    /// Recorded in the report; the walk itself is deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
