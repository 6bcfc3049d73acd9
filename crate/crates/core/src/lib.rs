//! Author name disambiguation over heterogeneous bibliographic networks.
//!
//! Papers filed under one ambiguous name are linked to their co-authors,
//! institutes, venues and fields of study. Content and relation vectors are
//! learned per paper, then refined by an adversarial pair: a discriminator
//! that scores whether two papers share an author (self-trained on its own
//! top-scored pairs) and a generator that proposes homogeneous papers by
//! walking a maximum-weight spanning tree of the paper network. The final
//! discriminator and generator vectors are clustered with average-linkage
//! HAC and evaluated with pairwise precision, recall and F1.
//!
//! Pipeline stages map onto modules:
//!
//! | stage | module |
//! |---|---|
//! | ingest, blocking, network | [`corpus`] |
//! | content vectors | [`content`] |
//! | relation vectors | [`relation`] |
//! | discriminator | [`discriminator`] |
//! | generator | [`generator`] |
//! | adversarial loop | [`trainer`] |
//! | clustering and metrics | [`cluster`] |
//! | config, artifacts, stages | [`pipeline`] |
//! | planted benchmark | [`synthetic`] |

pub mod benchmark;
pub mod cluster;
pub mod content;
pub mod corpus;
pub mod discriminator;
pub mod embedding;
pub mod error;
pub mod generator;
pub mod pipeline;
pub mod relation;
pub mod seed;
pub mod sgns;
pub mod synthetic;
pub mod trainer;

pub use error::{Error, Result};
