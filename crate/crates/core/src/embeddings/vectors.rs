use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{check_dim, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::textproc::Vocabulary;

/// Vectors keyed by id (token, question, candidate or summary id), all of
/// one dimension.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VectorTable {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl VectorTable {
    pub fn new(dim: usize) -> Self {
        VectorTable {
            dim,
            vectors: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.vectors.get(id).map(Vec::as_slice)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.vectors.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Adds a vector; the first insert into an empty table of dim 0 fixes
    /// the dimension.
    pub fn insert(&mut self, id: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        let id = id.into();
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            return Err(Error::InvalidArgument(format!(
                "id `{id}` is empty or contains whitespace"
            )));
        }
        if self.dim == 0 && self.vectors.is_empty() {
            self.dim = vector.len();
        }
        check_dim(self.dim, &vector)?;
        if self.vectors.contains_key(&id) {
            return Err(Error::InvalidArgument(format!("duplicate id `{id}`")));
        }
        self.vectors.insert(id, vector);
        Ok(())
    }

    /// Word vectors of a trained matrix keyed by token.
    pub fn from_matrix(matrix: &EmbeddingMatrix, vocab: &Vocabulary) -> Result<Self> {
        if matrix.rows() != vocab.len() {
            return Err(Error::DimensionMismatch {
                expected: vocab.len(),
                found: matrix.rows(),
            });
        }
        let mut table = VectorTable::new(matrix.dim());
        for (i, token) in vocab.tokens().iter().enumerate() {
            table.insert(token.clone(), matrix.row(i).to_vec())?;
        }
        Ok(table)
    }

    /// Header `<count> <dim>`, then `<id> <v1> ... <v_dim>` per line.
    pub fn write(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(out, "{} {}", self.vectors.len(), self.dim).map_err(io)?;
        for (id, vector) in &self.vectors {
            write!(out, "{id}").map_err(io)?;
            for v in vector {
                // `{:?}` prints the shortest string that round-trips
                write!(out, " {v:?}").map_err(io)?;
            }
            writeln!(out).map_err(io)?;
        }
        out.flush().map_err(io)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let parse_err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };

        let header = match lines.next() {
            None => return Ok(VectorTable::default()),
            Some(line) => line.map_err(|e| Error::io(path, e))?,
        };
        let fields: Vec<&str> = header.split_whitespace().collect();
        let (count, dim) = match fields.as_slice() {
            [] => return Ok(VectorTable::default()),
            [count, dim] => (
                count
                    .parse::<usize>()
                    .map_err(|e| parse_err(1, format!("bad entry count: {e}")))?,
                dim.parse::<usize>()
                    .map_err(|e| parse_err(1, format!("bad dimension: {e}")))?,
            ),
            _ => return Err(parse_err(1, "header must be `<count> <dim>`".into())),
        };

        let mut table = VectorTable::new(dim);
        let mut last_line = 1;
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            last_line = lineno;
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(' ').filter(|s| !s.is_empty());
            let id = parts.next().expect("non-empty line has a field").to_owned();
            let vector = parts
                .map(|s| {
                    s.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| parse_err(lineno, format!("`{s}` is not a finite number")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if vector.len() != dim {
                return Err(Error::InconsistentDimension {
                    path: path.to_path_buf(),
                    line: lineno,
                    expected: dim,
                    found: vector.len(),
                });
            }
            if table.vectors.contains_key(&id) {
                return Err(Error::DuplicateId {
                    path: path.to_path_buf(),
                    line: lineno,
                    id,
                });
            }
            table.vectors.insert(id, vector);
        }
        if table.len() != count {
            return Err(parse_err(
                last_line + 1,
                format!("header announces {count} entries, found {}", table.len()),
            ));
        }
        Ok(table)
    }
}

/// Reads an embedding file produced by the exporter (or any writer of the
/// same format).
pub fn load_external_embeddings(path: &Path) -> Result<VectorTable> {
    VectorTable::read(path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentenceVector {
    pub values: Vec<f64>,
    /// Fraction of tokens found in the vocabulary.
    pub coverage: f64,
}

/// Mean of the in-vocabulary token vectors. No known token gives a zero
/// vector with coverage 0.
pub fn pool_sentence<S: AsRef<str>>(
    tokens: &[S],
    matrix: &EmbeddingMatrix,
    vocab: &Vocabulary,
) -> SentenceVector {
    let mut values = vec![0.0; matrix.dim()];
    let mut found = 0usize;
    for index in vocab.encode(tokens.iter()).flatten() {
        for (acc, v) in values.iter_mut().zip(matrix.row(index)) {
            *acc += v;
        }
        found += 1;
    }
    if found > 0 {
        values.iter_mut().for_each(|v| *v /= found as f64);
    }
    let coverage = if tokens.is_empty() {
        0.0
    } else {
        found as f64 / tokens.len() as f64
    };
    SentenceVector { values, coverage }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::EmbeddingSource;
    use crate::textproc::build_vocab;

    fn file_with(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn reads_well_formed_file() {
        let f = file_with("2 3\nq1 0.5 -1 2e-3\nq1-a00 1 2 3\n");
        let table = load_external_embeddings(f.path()).unwrap();
        assert_eq!(table.dim(), 3);
        assert_eq!(table.get("q1"), Some(&[0.5, -1.0, 0.002][..]));
    }

    #[test]
    fn empty_file_is_empty_table() {
        let f = file_with("");
        assert!(load_external_embeddings(f.path()).unwrap().is_empty());
        let f = file_with("0 1536\n");
        let table = load_external_embeddings(f.path()).unwrap();
        assert!(table.is_empty());
        assert_eq!(table.dim(), 1536);
    }

    #[test]
    fn inconsistent_dims_fail() {
        let f = file_with("2 5\na 1 2 3 4 5\nb 1 2 3 4 5 6\n");
        match load_external_embeddings(f.path()) {
            Err(Error::InconsistentDimension { line, expected, found, .. }) => {
                assert_eq!((line, expected, found), (3, 5, 6));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_and_non_numeric_fail() {
        let f = file_with("2 1\na 1\na 2\n");
        assert!(matches!(
            load_external_embeddings(f.path()),
            Err(Error::DuplicateId { line: 3, .. })
        ));
        let f = file_with("1 2\na 1 x\n");
        assert!(matches!(
            load_external_embeddings(f.path()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn truncated_file_fails_with_line() {
        let f = file_with("3 2\na 1 2\nb 3 4\n");
        assert!(matches!(
            load_external_embeddings(f.path()),
            Err(Error::Parse { line: 4, .. })
        ));
        let f = file_with("2 2\na 1 2\nb 3");
        assert!(matches!(
            load_external_embeddings(f.path()),
            Err(Error::InconsistentDimension { line: 3, .. })
        ));
    }

    #[test]
    fn write_read_round_trip() {
        let mut table = VectorTable::new(0);
        table.insert("x", vec![0.1, 1.0 / 3.0]).unwrap();
        table.insert("y", vec![-2.5, 1e-300]).unwrap();
        assert!(table.insert("z", vec![1.0]).is_err());
        assert!(table.insert("has space", vec![1.0, 2.0]).is_err());
        let f = tempfile::NamedTempFile::new().unwrap();
        table.write(f.path()).unwrap();
        assert_eq!(VectorTable::read(f.path()).unwrap(), table);
    }

    #[test]
    fn pooling_cases() {
        let corpus = vec![vec!["a", "b", "c"]];
        let vocab = build_vocab(&corpus, 1).unwrap();
        // vocab order is a, b, c (all frequency 1)
        let m = EmbeddingMatrix::new(
            2,
            vec![1.0, 2.0, 3.0, 4.0, 5.0, 9.0],
            EmbeddingSource::Word2vec,
        )
        .unwrap();

        let one = pool_sentence(&["b"], &m, &vocab);
        assert_eq!(one.values, vec![3.0, 4.0]);
        assert_eq!(one.coverage, 1.0);

        let none = pool_sentence(&["x", "y"], &m, &vocab);
        assert_eq!(none.values, vec![0.0, 0.0]);
        assert_eq!(none.coverage, 0.0);

        let three = pool_sentence(&["a", "zz", "b", "c"], &m, &vocab);
        assert_eq!(three.coverage, 0.75);
        assert!((three.values[0] - 3.0).abs() < 1e-12);
        assert!((three.values[1] - 5.0).abs() < 1e-12);
    }
}
