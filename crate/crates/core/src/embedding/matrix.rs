//! Trained embedding matrices: similarity queries and the text format.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};

use super::vocab::Vocabulary;
use super::EmbeddingError;

/// Input and output vectors for every vocabulary entry, row-major.
///
/// The input row is a category's published vector; output rows are the
/// context weights, retained for inspection and resumed analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    vocabulary: Vocabulary,
    dimension: usize,
    input: Vec<f64>,
    output: Vec<f64>,
}

impl EmbeddingMatrix {
    pub(crate) fn from_parts(
        vocabulary: Vocabulary,
        dimension: usize,
        input: Vec<f64>,
        output: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(input.len(), vocabulary.len() * dimension);
        debug_assert_eq!(output.len(), vocabulary.len() * dimension);
        EmbeddingMatrix {
            vocabulary,
            dimension,
            input,
            output,
        }
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocabulary.is_empty()
    }

    /// The published (input) vector of a category, if it is in vocabulary.
    pub fn vector(&self, category: &str) -> Option<&[f64]> {
        self.vocabulary.get(category).map(|i| self.vector_at(i))
    }

    pub fn vector_at(&self, index: usize) -> &[f64] {
        &self.input[index * self.dimension..(index + 1) * self.dimension]
    }

    pub fn output_at(&self, index: usize) -> &[f64] {
        &self.output[index * self.dimension..(index + 1) * self.dimension]
    }

    pub fn input_flat(&self) -> &[f64] {
        &self.input
    }

    pub fn output_flat(&self) -> &[f64] {
        &self.output
    }

    /// Writes the published vectors as text: a `<n> <k>` header line, then
    /// `<name> <f1> ... <fk>` per category in index order. Values use the
    /// shortest decimal form that parses back to the same bits. Names
    /// containing whitespace are rejected.
    pub fn export(&self, writer: impl Write) -> Result<(), EmbeddingError> {
        let mut w = BufWriter::new(writer);
        writeln!(w, "{} {}", self.len(), self.dimension)?;
        for (i, name, _) in self.vocabulary.iter() {
            if name.chars().any(char::is_whitespace) {
                return Err(EmbeddingError::WhitespaceInName(name.to_string()));
            }
            w.write_all(name.as_bytes())?;
            for v in self.vector_at(i) {
                write!(w, " {v}")?;
            }
            writeln!(w)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a matrix written by [`Self::export`]. Frequencies are unknown
    /// after a round trip and read as zero; output vectors read as zero.
    pub fn import(reader: impl Read) -> Result<Self, EmbeddingError> {
        let mut lines = BufReader::new(reader).lines();
        let header = lines
            .next()
            .ok_or_else(|| EmbeddingError::MalformedFile {
                line: 1,
                reason: "empty file".into(),
            })??;
        let mut parts = header.split_whitespace();
        let n: usize = parse_field(parts.next(), 1, "row count")?;
        let k: usize = parse_field(parts.next(), 1, "dimension")?;
        if parts.next().is_some() {
            return Err(EmbeddingError::MalformedFile {
                line: 1,
                reason: "header must be \"<n> <k>\"".into(),
            });
        }
        if k == 0 {
            return Err(EmbeddingError::MalformedFile {
                line: 1,
                reason: "dimension must be positive".into(),
            });
        }

        let mut names = Vec::with_capacity(n);
        let mut input = Vec::with_capacity(n * k);
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            let line = line?;
            if i >= n {
                return Err(EmbeddingError::MalformedFile {
                    line: line_no,
                    reason: format!("more than the declared {n} rows"),
                });
            }
            let mut fields = line.split_whitespace();
            let name = fields.next().ok_or_else(|| EmbeddingError::MalformedFile {
                line: line_no,
                reason: "blank row".into(),
            })?;
            names.push(name.to_string());
            let mut count = 0;
            for field in fields {
                let value: f64 = field.parse().map_err(|_| EmbeddingError::MalformedFile {
                    line: line_no,
                    reason: format!("bad value {field:?}"),
                })?;
                if !value.is_finite() {
                    return Err(EmbeddingError::MalformedFile {
                        line: line_no,
                        reason: format!("non-finite value {value}"),
                    });
                }
                input.push(value);
                count += 1;
            }
            if count != k {
                return Err(EmbeddingError::MalformedFile {
                    line: line_no,
                    reason: format!("expected {k} values, got {count}"),
                });
            }
        }
        if names.len() != n {
            return Err(EmbeddingError::MalformedFile {
                line: names.len() + 1,
                reason: format!("expected {n} rows, got {}", names.len()),
            });
        }
        let vocabulary =
            Vocabulary::from_ordered_names(names).map_err(|dup| EmbeddingError::MalformedFile {
                line: 0,
                reason: format!("duplicate category {dup:?}"),
            })?;
        let output = vec![0.0; n * k];
        Ok(EmbeddingMatrix {
            vocabulary,
            dimension: k,
            input,
            output,
        })
    }
}

fn parse_field<T: std::str::FromStr>(
    field: Option<&str>,
    line: usize,
    what: &str,
) -> Result<T, EmbeddingError> {
    field
        .and_then(|f| f.parse().ok())
        .ok_or_else(|| EmbeddingError::MalformedFile {
            line,
            reason: format!("missing or invalid {what}"),
        })
}

/// Cosine of the angle between two nonzero vectors, clamped to [-1, 1].
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, EmbeddingError> {
    if a.len() != b.len() {
        return Err(EmbeddingError::LengthMismatch {
            a: a.len(),
            b: b.len(),
        });
    }
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(EmbeddingError::ZeroNorm);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

/// The `top_k` most similar categories to `category`, excluding itself,
/// sorted by descending cosine with ties broken by vocabulary index.
/// Zero-norm rows (possible only in hand-built files) are skipped.
pub fn nearest_neighbors(
    matrix: &EmbeddingMatrix,
    category: &str,
    top_k: usize,
) -> Result<Vec<(String, f64)>, EmbeddingError> {
    let query_idx = matrix
        .vocabulary()
        .get(category)
        .ok_or_else(|| EmbeddingError::UnknownCategory(category.to_string()))?;
    let query = matrix.vector_at(query_idx);
    if query.iter().all(|&v| v == 0.0) {
        return Err(EmbeddingError::ZeroNorm);
    }

    let mut scored: Vec<(usize, f64)> = Vec::with_capacity(matrix.len().saturating_sub(1));
    for i in 0..matrix.len() {
        if i == query_idx {
            continue;
        }
        match cosine_similarity(query, matrix.vector_at(i)) {
            Ok(sim) => scored.push((i, sim)),
            Err(EmbeddingError::ZeroNorm) => continue,
            Err(e) => return Err(e),
        }
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(top_k);
    Ok(scored
        .into_iter()
        .map(|(i, sim)| (matrix.vocabulary().name(i).to_string(), sim))
        .collect())
}
