//! Supervised multi-dimensional scaling: fit linear projections of activation
//! vectors onto hypothesised label manifolds and compare hypotheses by
//! cross-validated stress.

pub mod bundle;
pub mod correlation;
pub mod error;
pub mod geometry;
pub mod intervention;
pub mod io;
pub mod linalg;
pub mod mds;
pub mod projection;
pub mod prompts;
pub mod selection;
pub mod stress;
pub mod synth;

pub use bundle::{BundleMeta, Dtype, LabelKind, LabeledActivations};
pub use correlation::{rank_correlation, CorrelationReport};
pub use error::{Result, SmdsError};
pub use geometry::{
    distance, normalize_labels, pairwise_distance_matrix, DistanceKind, DistanceSpec, GeoPoint,
    Label, LabelRange, RawLabel,
};
pub use io::{list_bundles, read_bundle, read_projection, write_bundle, write_projection};
pub use mds::{classical_mds, Embedding};
pub use projection::{
    fit_projection, fit_smds, project, Projection, Provenance, DEFAULT_ALPHA, DEFAULT_M,
};
pub use selection::{
    control_shuffle, cross_validated_stress, sweep, ControlReport, CvConfig, SweepResult,
};
pub use stress::{stress_score, StressReport};
pub use synth::{embed_manifold, Shape, SyntheticSpec};
