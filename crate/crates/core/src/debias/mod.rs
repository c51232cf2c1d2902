//! Hard debiasing of word embeddings: bias-subspace identification from
//! equality sets, neutralization, equalization and the plain-text embedding
//! format.

mod embedding;
mod ops;
mod sets;
mod subspace;

pub use embedding::{load_embeddings, save_embeddings, EmbeddingMatrix};
pub use ops::{
    equalize, hard_debias, hard_debias_with_subspace, name_degenerate_member, neutralize, project, DebiasOutcome,
    DebiasReport, NeutralPolicy, DEFAULT_EPS,
};
pub use sets::{EqualitySets, ResolvedSets};
pub use subspace::{identify_subspace, BiasSubspace};
