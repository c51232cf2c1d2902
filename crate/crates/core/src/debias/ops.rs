use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::subspace::{dot, norm};
use super::{identify_subspace, BiasSubspace, EmbeddingMatrix, EqualitySets};
use crate::error::{invalid, Error, Result};
use crate::par::{self, Execution};

/// Residual norms below this are treated as zero.
pub const DEFAULT_EPS: f64 = 1e-8;

/// `w_B = sum_i <w, b_i> b_i`.
pub fn project(w: &[f64], subspace: &BiasSubspace) -> Result<Vec<f64>> {
    subspace.project(w)
}

/// `(w - w_B) / |w - w_B|`.
pub fn neutralize(w: &[f64], subspace: &BiasSubspace) -> Result<Vec<f64>> {
    let wb = subspace.project(w)?;
    let resid: Vec<f64> = w.iter().zip(&wb).map(|(a, b)| a - b).collect();
    let n = norm(&resid);
    if n <= DEFAULT_EPS {
        return Err(Error::Degenerate("vector lies inside the bias subspace".into()));
    }
    Ok(resid.iter().map(|x| x / n).collect())
}

/// Equalizes one set of unit vectors: each member becomes
/// `nu + sqrt(1 - |nu|^2) * (w_B - mu_B) / |w_B - mu_B|` with `mu` the set
/// mean and `nu = mu - mu_B`, so all members share the off-subspace part
/// `nu` and have unit norm.
///
/// A member whose projection equals the mean projection fails with
/// [`Error::DegenerateMember`] carrying its position.
pub fn equalize(members: &[Vec<f64>], subspace: &BiasSubspace) -> Result<Vec<Vec<f64>>> {
    let d = subspace.dim();
    if members.len() < 2 {
        return Err(invalid("an equality set needs at least two members"));
    }
    if let Some(m) = members.iter().find(|m| m.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, found: m.len() });
    }
    let mut mu = vec![0.0; d];
    for m in members {
        for (a, x) in mu.iter_mut().zip(m) {
            *a += x / members.len() as f64;
        }
    }
    let mu_b = subspace.project(&mu)?;
    let nu: Vec<f64> = mu.iter().zip(&mu_b).map(|(a, b)| a - b).collect();
    let nu_sq = dot(&nu, &nu);
    if nu_sq > 1.0 + 1e-12 {
        return Err(invalid("equality-set mean is longer than one; members must be unit vectors"));
    }
    let scale = (1.0 - nu_sq).max(0.0).sqrt();

    members
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let wb = subspace.project(m)?;
            let dir: Vec<f64> = wb.iter().zip(&mu_b).map(|(a, b)| a - b).collect();
            let n = norm(&dir);
            if n <= DEFAULT_EPS {
                return Err(Error::DegenerateMember(format!("#{i}")));
            }
            Ok(nu.iter().zip(&dir).map(|(v, x)| v + scale * x / n).collect())
        })
        .collect()
}

/// Which words get neutralized.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NeutralPolicy {
    /// Every word that is not in an equality set.
    #[default]
    AllExceptEqualitySets,
    /// Only the listed words (unknown ones are ignored).
    Only(Vec<String>),
    /// Nothing; only equalization runs.
    None,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DebiasReport {
    pub missing_tokens: Vec<String>,
    pub dropped_sets: Vec<usize>,
    /// Words that could not be neutralized because they lie in the subspace.
    pub degenerate_words: Vec<String>,
    /// Sets skipped during equalization, with the offending token.
    pub degenerate_sets: Vec<(usize, String)>,
    pub neutralized: usize,
    pub equalized_sets: usize,
    pub untouched: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DebiasOutcome {
    pub embeddings: EmbeddingMatrix,
    pub subspace: BiasSubspace,
    pub report: DebiasReport,
}

/// Identifies a `k`-dimensional bias subspace from `sets`, then neutralizes
/// and equalizes.
pub fn hard_debias(
    emb: &EmbeddingMatrix,
    sets: &EqualitySets,
    policy: &NeutralPolicy,
    k: usize,
) -> Result<DebiasOutcome> {
    let subspace = identify_subspace(emb, sets, k)?;
    hard_debias_with_subspace(emb, sets, policy, &subspace, Execution::default())
}

/// Neutralize-then-equalize against a given subspace. The input is not
/// modified; degenerate words and sets are listed in the report instead of
/// aborting.
///
/// Sets are equalized in order against the current vectors, so a word that
/// belongs to several sets ends with the position assigned by the last one.
pub fn hard_debias_with_subspace(
    emb: &EmbeddingMatrix,
    sets: &EqualitySets,
    policy: &NeutralPolicy,
    subspace: &BiasSubspace,
    exec: Execution,
) -> Result<DebiasOutcome> {
    if emb.dim() != subspace.dim() {
        return Err(Error::DimensionMismatch { expected: subspace.dim(), found: emb.dim() });
    }
    let resolved = sets.resolve(emb);
    let set_words: HashSet<usize> = resolved.sets.iter().flatten().copied().collect();
    let neutral: Vec<usize> = match policy {
        NeutralPolicy::AllExceptEqualitySets => (0..emb.len()).filter(|i| !set_words.contains(i)).collect(),
        NeutralPolicy::Only(words) => {
            let mut rows: Vec<usize> = words.iter().filter_map(|w| emb.index_of(w)).collect();
            rows.sort_unstable();
            rows.dedup();
            rows
        }
        NeutralPolicy::None => Vec::new(),
    };

    let mut out = emb.clone();
    let mut report = DebiasReport {
        missing_tokens: resolved.missing_tokens.clone(),
        dropped_sets: resolved.dropped_sets.clone(),
        ..DebiasReport::default()
    };

    let neutralized = par::map_range(neutral.len(), exec, |j| neutralize(emb.row(neutral[j]), subspace));
    for (&row, result) in neutral.iter().zip(neutralized) {
        match result {
            Ok(v) => {
                out.set_row(row, &v);
                report.neutralized += 1;
            }
            Err(Error::Degenerate(_)) => report.degenerate_words.push(emb.vocab()[row].clone()),
            Err(e) => return Err(e),
        }
    }

    let mut touched: HashSet<usize> = neutral.iter().copied().collect();
    for (pos, set) in resolved.sets.iter().enumerate() {
        let members: Vec<Vec<f64>> = set
            .iter()
            .map(|&i| {
                let v = out.row(i);
                let n = norm(v);
                v.iter().map(|x| x / n).collect()
            })
            .collect();
        match equalize(&members, subspace) {
            Ok(eq) => {
                for (&row, v) in set.iter().zip(&eq) {
                    out.set_row(row, v);
                    touched.insert(row);
                }
                report.equalized_sets += 1;
            }
            Err(Error::DegenerateMember(m)) => {
                let idx: usize = m.trim_start_matches('#').parse().unwrap_or(0);
                report.degenerate_sets.push((pos, emb.vocab()[set[idx]].clone()));
            }
            Err(e) => return Err(e),
        }
    }
    report.untouched = emb.len() - touched.len();

    Ok(DebiasOutcome { embeddings: out, subspace: subspace.clone(), report })
}

/// Renames a positional degenerate-member error after the token it refers to.
pub fn name_degenerate_member(err: Error, tokens: &[String]) -> Error {
    match err {
        Error::DegenerateMember(m) => {
            let name = m
                .trim_start_matches('#')
                .parse::<usize>()
                .ok()
                .and_then(|i| tokens.get(i).cloned())
                .unwrap_or(m);
            Error::DegenerateMember(name)
        }
        Error::Degenerate(_) if tokens.len() == 1 => Error::DegenerateWord(tokens[0].clone()),
        other => other,
    }
}
