use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::debias::{BiasSubspace, EmbeddingMatrix, EqualitySets};
use crate::error::{invalid, Result};

/// Equality sets to plant: generated tokens or caller-supplied words.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlantSets {
    /// `count` sets named `c<k>_<set>`.
    Generated { count: usize },
    /// Every set must have one word per class.
    Explicit(EqualitySets),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingPlantConfig {
    /// Total number of tokens, equality words included.
    pub vocab_size: usize,
    pub dim: usize,
    /// Number of classes; `classes - 1` bias directions are planted.
    pub classes: usize,
    pub sets: PlantSets,
    pub sigma: f64,
    /// Size of the planted-subspace component added to neutral words.
    #[serde(default)]
    pub leakage: f64,
    pub seed: u64,
}

impl Default for EmbeddingPlantConfig {
    fn default() -> Self {
        EmbeddingPlantConfig {
            vocab_size: 200,
            dim: 50,
            classes: 2,
            sets: PlantSets::Generated { count: 10 },
            sigma: 0.0,
            leakage: 0.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlantedEmbeddings {
    pub embeddings: EmbeddingMatrix,
    pub sets: EqualitySets,
    pub subspace: BiasSubspace,
    /// Tokens outside every equality set.
    pub neutral_words: Vec<String>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

/// Removes the components along each (orthonormal) vector in `basis`, twice
/// for numerical stability.
fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = dot(v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    (0..dim).map(|_| n.sample(rng)).collect()
}

/// Unit vector orthogonal to `basis`.
fn random_orthogonal(rng: &mut ChaCha8Rng, dim: usize, basis: &[Vec<f64>]) -> Vec<f64> {
    loop {
        let mut v = gaussian(rng, dim);
        orthogonalize(&mut v, basis);
        if dot(&v, &v) > 1e-6 {
            normalize(&mut v);
            return v;
        }
    }
}

/// Coordinates of a regular simplex with `c` unit-norm vertices centred at
/// the origin, in `c - 1` dimensions.
fn simplex(c: usize) -> Vec<Vec<f64>> {
    let centred: Vec<Vec<f64>> =
        (0..c).map(|j| (0..c).map(|i| if i == j { 1.0 } else { 0.0 } - 1.0 / c as f64).collect()).collect();
    let mut h: Vec<Vec<f64>> = Vec::with_capacity(c - 1);
    for u in centred.iter().take(c - 1) {
        let mut v = u.clone();
        orthogonalize(&mut v, &h);
        normalize(&mut v);
        h.push(v);
    }
    centred
        .iter()
        .map(|u| {
            let n = dot(u, u).sqrt();
            h.iter().map(|b| dot(u, b) / n).collect()
        })
        .collect()
}

/// Builds an embedding matrix with `classes - 1` planted bias directions.
///
/// Word `j` of every equality set sits at `(vertex_j + topic) / sqrt(2)`,
/// where the vertices form a regular simplex inside the planted subspace and
/// `topic` is a per-set direction orthogonal to it. Neutral words are random
/// directions orthogonal to the subspace, plus `leakage` along it. Isotropic
/// noise of scale `sigma` is added before unit normalization.
pub fn generate_embeddings(cfg: &EmbeddingPlantConfig) -> Result<PlantedEmbeddings> {
    if cfg.classes < 2 {
        return Err(invalid("need at least two classes"));
    }
    if cfg.dim < cfg.classes {
        return Err(invalid(format!("dimension {} cannot hold {} planted directions plus one", cfg.dim, cfg.classes - 1)));
    }
    if !(cfg.sigma >= 0.0 && cfg.sigma.is_finite()) || !(cfg.leakage >= 0.0 && cfg.leakage.is_finite()) {
        return Err(invalid("sigma and leakage must be non-negative"));
    }
    let sets = match &cfg.sets {
        PlantSets::Generated { count } => {
            if *count == 0 {
                return Err(invalid("need at least one equality set"));
            }
            EqualitySets::new((0..*count).map(|s| (0..cfg.classes).map(|k| format!("c{k}_{s}")).collect()).collect())?
        }
        PlantSets::Explicit(sets) => {
            if sets.is_empty() || sets.iter().any(|s| s.len() != cfg.classes) {
                return Err(invalid(format!("every planted set needs exactly {} words", cfg.classes)));
            }
            sets.clone()
        }
    };
    let set_words: Vec<String> = sets.iter().flatten().cloned().collect();
    if set_words.len() > cfg.vocab_size {
        return Err(invalid("vocabulary is smaller than the equality sets"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut planted: Vec<Vec<f64>> = Vec::with_capacity(cfg.classes - 1);
    for _ in 0..cfg.classes - 1 {
        let v = random_orthogonal(&mut rng, cfg.dim, &planted);
        planted.push(v);
    }
    let vertices: Vec<Vec<f64>> = simplex(cfg.classes)
        .iter()
        .map(|coords| {
            let mut v = vec![0.0; cfg.dim];
            for (c, b) in coords.iter().zip(&planted) {
                v.iter_mut().zip(b).for_each(|(x, y)| *x += c * y);
            }
            v
        })
        .collect();

    let noise = Normal::new(0.0, 1.0).expect("standard normal");
    let add_noise = |v: &mut Vec<f64>, rng: &mut ChaCha8Rng| {
        if cfg.sigma > 0.0 {
            v.iter_mut().for_each(|x| *x += cfg.sigma * noise.sample(rng));
        }
        normalize(v);
    };

    let mut vocab = Vec::with_capacity(cfg.vocab_size);
    let mut vectors = Vec::with_capacity(cfg.vocab_size);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for set in sets.iter() {
        let topic = random_orthogonal(&mut rng, cfg.dim, &planted);
        for (word, vertex) in set.iter().zip(&vertices) {
            let mut v: Vec<f64> = vertex.iter().zip(&topic).map(|(a, b)| r * (a + b)).collect();
            add_noise(&mut v, &mut rng);
            vocab.push(word.clone());
            vectors.push(v);
        }
    }
    let width = (cfg.vocab_size.max(1) as f64).log10().ceil() as usize + 1;
    let mut neutral_words = Vec::with_capacity(cfg.vocab_size - set_words.len());
    let mut k = 0;
    while vocab.len() < cfg.vocab_size {
        let word = format!("w{k:0width$}");
        k += 1;
        if set_words.contains(&word) {
            continue;
        }
        let mut v = random_orthogonal(&mut rng, cfg.dim, &planted);
        if cfg.leakage > 0.0 {
            for b in &planted {
                let c = cfg.leakage * noise.sample(&mut rng);
                v.iter_mut().zip(b).for_each(|(x, y)| *x += c * y);
            }
        }
        add_noise(&mut v, &mut rng);
        neutral_words.push(word.clone());
        vocab.push(word);
        vectors.push(v);
    }

    Ok(PlantedEmbeddings {
        embeddings: EmbeddingMatrix::new(vocab, vectors)?,
        sets,
        subspace: BiasSubspace::new(planted)?,
        neutral_words,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_vertices_are_regular() {
        for c in 2..6 {
            let v = simplex(c);
            for i in 0..c {
                assert!((dot(&v[i], &v[i]) - 1.0).abs() < 1e-12);
                for j in 0..i {
                    assert!((dot(&v[i], &v[j]) + 1.0 / (c as f64 - 1.0)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn neutral_words_avoid_the_planted_subspace() {
        let p = generate_embeddings(&EmbeddingPlantConfig::default()).unwrap();
        assert_eq!(p.embeddings.len(), 200);
        for w in &p.neutral_words {
            let c = p.subspace.coordinates(p.embeddings.get(w).unwrap()).unwrap();
            assert!(c[0].abs() < 1e-12);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = EmbeddingPlantConfig { sigma: 0.05, leakage: 0.2, seed: 4, ..Default::default() };
        assert_eq!(generate_embeddings(&cfg).unwrap(), generate_embeddings(&cfg).unwrap());
    }

    #[test]
    fn config_validation() {
        let bad = [
            EmbeddingPlantConfig { classes: 1, ..Default::default() },
            EmbeddingPlantConfig { dim: 3, classes: 4, ..Default::default() },
            EmbeddingPlantConfig { sigma: -1.0, ..Default::default() },
            EmbeddingPlantConfig { vocab_size: 5, ..Default::default() },
        ];
        for cfg in bad {
            assert!(generate_embeddings(&cfg).is_err());
        }
    }
}
