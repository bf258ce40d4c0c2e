//! Core of the AI trading incident database: the public record schema,
//! redaction of internal reports, the significance gate, a deterministic
//! synthesizer and the two analytics engines (two-way ANOVA and
//! K-means/PCA trading-zone clustering).

pub mod anova;
pub mod cluster;
pub mod confidentiality;
pub mod fixtures;
pub mod linalg;
pub mod model;
pub mod rng;
pub mod significance;
pub mod stats;
pub mod synth;
