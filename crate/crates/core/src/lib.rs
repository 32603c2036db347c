//! Grammatical error correction over n-best lists: edit extraction,
//! edit classification, reranking, edit selection and M2-style scoring.

pub mod annotate;
pub mod corpus;
pub mod cw;
pub mod decision;
pub mod edit;
pub mod error;
pub mod eval;
pub mod features;
pub mod lm;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
