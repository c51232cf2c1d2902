use serde::{Deserialize, Serialize};

use super::EmbeddingMatrix;
use crate::error::{invalid, Result};

const GENDER_JSON: &str = include_str!("../../presets/gender.json");
const RACE_JSON: &str = include_str!("../../presets/race.json");

/// Tuples of attribute-specific words; position `j` of every tuple names the
/// same attribute class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EqualitySets(pub Vec<Vec<String>>);

/// Result of looking the sets up in a vocabulary.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResolvedSets {
    /// Row indices of each usable set, in input order.
    pub sets: Vec<Vec<usize>>,
    /// Tokens absent from the vocabulary.
    pub missing_tokens: Vec<String>,
    /// Input positions of sets left with fewer than two known words.
    pub dropped_sets: Vec<usize>,
}

impl EqualitySets {
    pub fn new(sets: Vec<Vec<String>>) -> Result<Self> {
        if let Some(s) = sets.iter().find(|s| s.len() < 2) {
            return Err(invalid(format!("equality set {s:?} has fewer than two words")));
        }
        Ok(Self(sets))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::new(serde_json::from_str(text)?)
    }

    /// Gender pairs (he/she, his/hers, ...).
    pub fn gender() -> Self {
        Self::from_json(GENDER_JSON).expect("bundled preset is valid")
    }

    /// Four-way race/ethnicity tuples (black/caucasian/asian/hispanics, ...).
    pub fn race() -> Self {
        Self::from_json(RACE_JSON).expect("bundled preset is valid")
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "gender" => Some(Self::gender()),
            "race" => Some(Self::race()),
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<String>> {
        self.0.iter()
    }

    /// Every distinct token in first-appearance order.
    pub fn tokens(&self) -> Vec<&str> {
        let mut seen = std::collections::HashSet::new();
        self.0
            .iter()
            .flatten()
            .map(String::as_str)
            .filter(|t| seen.insert(*t))
            .collect()
    }

    /// Maps tokens to rows. Unknown tokens are skipped; a set with fewer
    /// than two known words is dropped.
    pub fn resolve(&self, emb: &EmbeddingMatrix) -> ResolvedSets {
        let mut out = ResolvedSets::default();
        for (pos, set) in self.0.iter().enumerate() {
            let mut rows = Vec::with_capacity(set.len());
            for t in set {
                match emb.index_of(t) {
                    Some(i) => rows.push(i),
                    None => {
                        if !out.missing_tokens.contains(t) {
                            out.missing_tokens.push(t.clone());
                        }
                    }
                }
            }
            if rows.len() >= 2 {
                out.sets.push(rows);
            } else {
                out.dropped_sets.push(pos);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_have_expected_shapes() {
        let g = EqualitySets::gender();
        assert_eq!(g.len(), 7);
        assert!(g.iter().all(|s| s.len() == 2));
        assert_eq!(g.0[0], vec!["he", "she"]);
        let r = EqualitySets::race();
        assert_eq!(r.len(), 18);
        assert!(r.iter().all(|s| s.len() == 4));
        assert!(EqualitySets::preset("insurance").is_none());
    }

    #[test]
    fn resolve_skips_missing_words() {
        let emb = EmbeddingMatrix::new(
            vec!["he".into(), "she".into(), "boy".into()],
            vec![vec![1.0], vec![-1.0], vec![0.5]],
        )
        .unwrap();
        let r = EqualitySets::gender().resolve(&emb);
        assert_eq!(r.sets, vec![vec![0, 1]]);
        assert_eq!(r.dropped_sets.len(), 6);
        assert!(r.missing_tokens.contains(&"girl".to_string()));
    }

    #[test]
    fn singleton_set_rejected() {
        assert!(EqualitySets::from_json(r#"[["a"]]"#).is_err());
    }
}
