//! Exact desk-scale computations in Lipschitz and Hölder function spaces
//! over finite pointed metric spaces.
//!
//! The crate has five layers:
//!
//! - [`metric`]: validated finite metric spaces, snowflake transforms
//!   (`d -> d^alpha`), and positive pair gauges with their minimal
//!   gauge-to-distance ratios.
//! - [`lip`]: vector-valued functions vanishing at the base point, exact
//!   Lipschitz norms and gauge seminorms by pair scans, bounded-ratio class
//!   membership, seeded sampling, and inf-convolution extension.
//! - [`porosity`]: escape certificates. For a class member `f` and a pair
//!   with small gauge-to-distance ratio `r`, the perturbation
//!   `f + sqrt(r) * witness` is the center of a Lipschitz-norm ball that
//!   provably misses the whole class; certificates store every quantity and
//!   re-verify from their fields.
//! - [`free`]: molecules (zero-sum weights) with their transport norm via a
//!   minimum-cost-flow primal and an independent Lipschitz-1 dual program,
//!   lifted operators of point maps, and adjoint composition/preimage.
//! - [`convex`]: symmetric polyhedral gauges on `R^dim`, support values with
//!   explicit unboundedness, barrier-cone and polar membership, recession
//!   directions, and norming constants of finite dual sets.
//!
//! [`experiments`] packages reproducible experiment families over these
//! layers with JSON/CSV/SVG reports; the `lipkit` binary exposes them on the
//! command line.

pub mod convex;
pub mod experiments;
pub mod free;
pub mod lip;
mod lp;
pub mod metric;
pub mod porosity;

pub use lip::{ClassParams, NormKind, PointFunction, TargetSpace};
pub use metric::{dyadic_chain, random_space, FiniteMetricSpace, GaugePair};
pub use porosity::{CertificateDocument, CheckReport, EscapeCertificate};
