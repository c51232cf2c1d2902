use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{invalid, Error, Result};

/// Vocabulary-indexed word vectors of a common dimension, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn new(vocab: Vec<String>, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if vocab.len() != vectors.len() {
            return Err(invalid("vocabulary and vector counts differ"));
        }
        let dim = vectors.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(dim * vectors.len());
        for v in &vectors {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
            }
            data.extend_from_slice(v);
        }
        Self::from_flat(vocab, dim, data)
    }

    fn from_flat(vocab: Vec<String>, dim: usize, data: Vec<f64>) -> Result<Self> {
        let mut index = HashMap::with_capacity(vocab.len());
        for (i, w) in vocab.iter().enumerate() {
            if w.is_empty() || w.chars().any(char::is_whitespace) {
                return Err(invalid(format!("token {w:?} is empty or contains whitespace")));
            }
            if index.insert(w.clone(), i).is_some() {
                return Err(invalid(format!("duplicate token `{w}`")));
            }
        }
        Ok(Self { vocab, index, dim, data })
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index_of(token).map(|i| self.row(i))
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.vocab.iter().map(String::as_str).zip(self.data.chunks(self.dim.max(1)))
    }

    /// Replaces row `i` in place.
    pub(crate) fn set_row(&mut self, i: usize, v: &[f64]) {
        self.data[i * self.dim..(i + 1) * self.dim].copy_from_slice(v);
    }

    /// Parses the plain-text layout: a `<count> <dim>` header, then one
    /// `<token> <v_1> ... <v_dim>` line per word.
    pub fn read_text<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse { line: 1, message: "missing header".into() })??;
        let mut parts = header.split(' ');
        let parse_usize = |s: Option<&str>| s.and_then(|s| s.trim().parse::<usize>().ok());
        let (count, dim) = match (parse_usize(parts.next()), parse_usize(parts.next()), parts.next()) {
            (Some(c), Some(d), None) => (c, d),
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("malformed header {header:?}, expected `<vocab_size> <dimension>`"),
                })
            }
        };

        let mut vocab = Vec::with_capacity(count);
        let mut data = Vec::with_capacity(count * dim);
        for (offset, line) in lines.enumerate() {
            let line_no = offset + 2;
            let line = line?;
            if line.is_empty() && vocab.len() == count {
                continue;
            }
            let mut fields = line.split(' ');
            let token = fields.next().unwrap_or_default();
            let values: Vec<&str> = fields.collect();
            if values.len() != dim {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {dim} components, found {}", values.len()),
                });
            }
            for v in values {
                let x: f64 = v.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("invalid number {v:?}"),
                })?;
                data.push(x);
            }
            vocab.push(token.to_string());
        }
        if vocab.len() != count {
            return Err(Error::Parse {
                line: vocab.len() + 2,
                message: format!("header declares {count} words, found {}", vocab.len()),
            });
        }
        Self::from_flat(vocab, dim, data).map_err(|e| match e {
            Error::InvalidInput(m) => Error::Parse { line: 0, message: m },
            other => other,
        })
    }

    /// Writes the plain-text layout with shortest round-trip decimals.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {}", self.len(), self.dim)?;
        let mut line = String::new();
        for (token, v) in self.rows() {
            line.clear();
            line.push_str(token);
            for x in v {
                write!(line, " {x}").expect("writing to a String");
            }
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    EmbeddingMatrix::read_text(BufReader::new(File::open(path)?))
}

pub fn save_embeddings(emb: &EmbeddingMatrix, path: impl AsRef<Path>) -> Result<()> {
    emb.write_text(BufWriter::new(File::create(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parses_small_file() {
        let text = "2 3\nhe 0.1 -0.2 3e-5\nshe 1 0 -1\n";
        let emb = EmbeddingMatrix::read_text(text.as_bytes()).unwrap();
        assert_eq!(emb.len(), 2);
        assert_eq!(emb.dim(), 3);
        assert_eq!(emb.get("he").unwrap(), &[0.1, -0.2, 3e-5]);
        assert_eq!(emb.get("she").unwrap(), &[1.0, 0.0, -1.0]);
    }

    #[test]
    fn wrong_row_dimension_names_the_line() {
        let text = "2 3\nhe 0.1 0.2 0.3\nshe 1 0\n";
        match EmbeddingMatrix::read_text(text.as_bytes()) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("expected 3"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_header_and_duplicates() {
        assert!(matches!(
            EmbeddingMatrix::read_text("two 3\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(EmbeddingMatrix::read_text("2 1\na 1\na 2\n".as_bytes())
            .unwrap_err()
            .to_string()
            .contains("duplicate"));
        assert!(EmbeddingMatrix::read_text("3 1\na 1\nb 2\n".as_bytes()).is_err());
    }

    #[test]
    fn round_trip_is_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let vocab: Vec<String> = (0..1000).map(|i| format!("w{i}")).collect();
        let vectors: Vec<Vec<f64>> =
            (0..1000).map(|_| (0..16).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let emb = EmbeddingMatrix::new(vocab, vectors).unwrap();
        let mut first = Vec::new();
        emb.write_text(&mut first).unwrap();
        let back = EmbeddingMatrix::read_text(first.as_slice()).unwrap();
        assert_eq!(back, emb);
        let mut second = Vec::new();
        back.write_text(&mut second).unwrap();
        assert_eq!(first, second);
    }
}
