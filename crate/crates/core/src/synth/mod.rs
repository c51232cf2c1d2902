//! Seeded generators: group-structured prediction cohorts, multilabel score
//! matrices and embeddings with planted bias directions.

mod cohort;
mod embeddings;

pub use cohort::{
    generate_cohort, generate_multilabel, sample_id, Attribute, Cohort, CohortConfig, CohortTruth, GroupSpec,
    InformativeMask, LogitModel, ModalitySpec, MultilabelConfig, DEFAULT_PREVALENCE, DEFAULT_SAMPLES,
};
pub use embeddings::{generate_embeddings, EmbeddingPlantConfig, PlantSets, PlantedEmbeddings};
