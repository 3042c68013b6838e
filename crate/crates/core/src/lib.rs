//! Mutual compressibility of paired symbol-sequence datasets, estimated by
//! prequential coding with replay streams, applied to orthography and
//! phonology lexicons.

pub mod corpus;
pub mod decompose;
pub mod digest;
pub mod scalar;
pub mod seeding;
pub mod prequential;
pub mod seqmodel;
pub mod stats;
pub mod synthetic;

pub use scalar::Scalar;

/// The convolutional model in single precision, used for measurements.
pub type ConvSeq2SeqF32 = seqmodel::ConvSeq2Seq<f32>;
/// The convolutional model in double precision, used for gradient checks.
pub type ConvSeq2SeqF64 = seqmodel::ConvSeq2Seq<f64>;
