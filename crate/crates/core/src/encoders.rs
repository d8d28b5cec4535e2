//! Fixed-width name and text vectors, and assembly of the two model inputs.
//!
//! The built-in encoders are feature-hashing encoders: deterministic, with
//! no learned weights. Pretrained vectors can be supplied through an
//! embedding table file, which falls back to the built-in encoder on keys
//! it does not contain.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const NAME_DIM: usize = 200;
pub const TEXT_DIM: usize = 768;

/// Maps a string to a fixed-width vector.
pub trait Encoder<T: Real>: Send + Sync {
    fn dim(&self) -> usize;
    fn encode(&self, text: &str) -> Vec<T>;
}

/// 64-bit FNV-1a. Stable across platforms and runs, unlike `std`'s hasher.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn signed_bucket(feature: &str, salt: u8, dim: usize) -> (usize, f64) {
    let mut bytes = Vec::with_capacity(feature.len() + 1);
    bytes.push(salt);
    bytes.extend_from_slice(feature.as_bytes());
    let h = fnv1a(&bytes);
    let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
    ((h % dim as u64) as usize, sign)
}

fn l2_normalized<T: Real>(acc: Vec<f64>) -> Vec<T> {
    let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return vec![T::zero(); acc.len()];
    }
    acc.into_iter().map(|v| T::from_f64_lossy(v / norm)).collect()
}

/// Character n-grams (n = 1..=3) of each lowercased word wrapped in `<` `>`
/// markers, hashed into signed buckets and L2-normalized.
#[derive(Clone, Debug)]
pub struct HashedNameEncoder {
    dim: usize,
}

impl HashedNameEncoder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "encoder dimension must be positive");
        HashedNameEncoder { dim }
    }
}

impl Default for HashedNameEncoder {
    fn default() -> Self {
        Self::new(NAME_DIM)
    }
}

impl<T: Real> Encoder<T> for HashedNameEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, text: &str) -> Vec<T> {
        let mut acc = vec![0.0f64; self.dim];
        let lower = text.to_lowercase();
        let mut gram = String::new();
        for word in lower.split_whitespace() {
            let chars: Vec<char> = std::iter::once('<')
                .chain(word.chars())
                .chain(std::iter::once('>'))
                .collect();
            for n in 1..=3usize {
                for w in chars.windows(n) {
                    gram.clear();
                    gram.extend(w.iter());
                    let (b, s) = signed_bucket(&gram, n as u8, self.dim);
                    acc[b] += s;
                }
            }
        }
        l2_normalized(acc)
    }
}

/// Lowercased alphanumeric tokens, each hashed to one signed bucket,
/// mean-pooled and L2-normalized. Word order is not represented.
#[derive(Clone, Debug)]
pub struct HashedTextEncoder {
    dim: usize,
}

impl HashedTextEncoder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "encoder dimension must be positive");
        HashedTextEncoder { dim }
    }
}

impl Default for HashedTextEncoder {
    fn default() -> Self {
        Self::new(TEXT_DIM)
    }
}

impl<T: Real> Encoder<T> for HashedTextEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, text: &str) -> Vec<T> {
        let mut acc = vec![0.0f64; self.dim];
        let lower = text.to_lowercase();
        let mut n = 0usize;
        for tok in lower.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
            let (b, s) = signed_bucket(tok, 0, self.dim);
            acc[b] += s;
            n += 1;
        }
        if n > 0 {
            acc.iter_mut().for_each(|v| *v /= n as f64);
        }
        l2_normalized(acc)
    }
}

/// Precomputed vectors keyed by exact string, with a fallback encoder.
pub struct TableEncoder<T: Real> {
    table: HashMap<String, Vec<T>>,
    fallback: Box<dyn Encoder<T>>,
    misses: AtomicUsize,
}

impl<T: Real> TableEncoder<T> {
    pub fn new(table: HashMap<String, Vec<T>>, fallback: Box<dyn Encoder<T>>) -> Result<Self> {
        let dim = fallback.dim();
        if let Some(v) = table.values().find(|v| v.len() != dim) {
            return Err(Error::Dimension {
                expected: dim,
                actual: v.len(),
            });
        }
        Ok(TableEncoder {
            table,
            fallback,
            misses: AtomicUsize::new(0),
        })
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Lookups answered by the fallback so far.
    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }
}

impl<T: Real> Encoder<T> for TableEncoder<T> {
    fn dim(&self) -> usize {
        self.fallback.dim()
    }

    fn encode(&self, text: &str) -> Vec<T> {
        match self.table.get(text) {
            Some(v) => v.clone(),
            None => {
                self.misses.fetch_add(1, Ordering::Relaxed);
                self.fallback.encode(text)
            }
        }
    }
}

/// Reads a `key<TAB>v1 v2 ... vd` table. The fallback fixes the expected width.
pub fn load_embedding_table<T: Real>(path: impl AsRef<Path>, fallback: Box<dyn Encoder<T>>) -> Result<TableEncoder<T>> {
    let path = path.as_ref();
    let expected = fallback.dim();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let format = |line: usize, message: String| Error::Format {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut table = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let (key, values) = line
            .split_once('\t')
            .ok_or_else(|| format(lineno, "missing tab separator".into()))?;
        let vec = values
            .split_whitespace()
            .map(|v| v.parse::<f64>().map(T::from_f64_lossy))
            .collect::<std::result::Result<Vec<T>, _>>()
            .map_err(|e| format(lineno, e.to_string()))?;
        if vec.len() != expected {
            return Err(format(
                lineno,
                format!("expected {expected} values, found {}", vec.len()),
            ));
        }
        if vec.iter().any(|v| !v.is_finite()) {
            return Err(format(lineno, "non-finite value".into()));
        }
        if table.insert(key.to_string(), vec).is_some() {
            return Err(format(lineno, format!("duplicate key `{key}`")));
        }
    }
    TableEncoder::new(table, fallback)
}

/// Writes a table readable by [`load_embedding_table`]. Values use Rust's
/// shortest round-trip decimal form, so reloading is exact.
pub fn write_embedding_table<'a, T: Real, W: Write>(
    out: &mut W,
    entries: impl IntoIterator<Item = (&'a str, &'a [T])>,
) -> std::io::Result<()> {
    for (key, values) in entries {
        write!(out, "{key}\t")?;
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                out.write_all(b" ")?;
            }
            write!(out, "{}", v.to_f64_exact())?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// The name and text encoders a block model was trained with.
pub struct Encoders<T: Real> {
    pub name: Box<dyn Encoder<T>>,
    pub text: Box<dyn Encoder<T>>,
}

impl<T: Real> Encoders<T> {
    pub fn new(name: Box<dyn Encoder<T>>, text: Box<dyn Encoder<T>>) -> Self {
        Encoders { name, text }
    }

    pub fn builtin() -> Self {
        Encoders::new(
            Box::new(HashedNameEncoder::default()),
            Box::new(HashedTextEncoder::default()),
        )
    }

    /// Width of the first model input.
    pub fn x1_dim(&self) -> usize {
        2 * self.name.dim()
    }

    pub fn x2_dim(&self) -> usize {
        self.text.dim()
    }
}

impl<T: Real> Default for Encoders<T> {
    fn default() -> Self {
        Self::builtin()
    }
}

/// The two model inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVectorPair<T> {
    /// Target first name, then the mean of the two co-author names.
    pub x1: Vec<T>,
    /// Mean of the title and source vectors.
    pub x2: Vec<T>,
}

fn mean_of<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    let half = T::lit(0.5);
    a.iter().zip(b).map(|(&x, &y)| half * (x + y)).collect()
}

/// Joins already-encoded parts into the two inputs.
pub fn combine<T: Real>(first: &[T], p: &[T], j: &[T], title: &[T], source: &[T]) -> FeatureVectorPair<T> {
    let mut x1 = Vec::with_capacity(first.len() + p.len());
    x1.extend_from_slice(first);
    x1.extend(mean_of(p, j));
    FeatureVectorPair {
        x1,
        x2: mean_of(title, source),
    }
}

/// Encodes one sample. An empty co-author name is the "no co-author"
/// sentinel and encodes to zeros.
pub fn assemble_features<T: Real>(
    target_first_name: &str,
    coauthor_p: &str,
    coauthor_j: &str,
    title: &str,
    source: &str,
    name_encoder: &dyn Encoder<T>,
    text_encoder: &dyn Encoder<T>,
) -> FeatureVectorPair<T> {
    combine(
        &name_encoder.encode(target_first_name),
        &name_encoder.encode(coauthor_p),
        &name_encoder.encode(coauthor_j),
        &text_encoder.encode(title),
        &text_encoder.encode(source),
    )
}

/// Memoizes encoder output per distinct string.
pub struct EncodingCache<'a, T: Real> {
    encoders: &'a Encoders<T>,
    names: HashMap<String, Vec<T>>,
    texts: HashMap<String, Vec<T>>,
}

impl<'a, T: Real> EncodingCache<'a, T> {
    pub fn new(encoders: &'a Encoders<T>) -> Self {
        EncodingCache {
            encoders,
            names: HashMap::new(),
            texts: HashMap::new(),
        }
    }

    pub fn x1_dim(&self) -> usize {
        self.encoders.x1_dim()
    }

    pub fn x2_dim(&self) -> usize {
        self.encoders.x2_dim()
    }

    fn name(&mut self, s: &str) -> &[T] {
        if !self.names.contains_key(s) {
            let v = self.encoders.name.encode(s);
            self.names.insert(s.to_string(), v);
        }
        &self.names[s]
    }

    fn text(&mut self, s: &str) -> &[T] {
        if !self.texts.contains_key(s) {
            let v = self.encoders.text.encode(s);
            self.texts.insert(s.to_string(), v);
        }
        &self.texts[s]
    }

    pub fn features(&mut self, first: &str, p: &str, j: &str, title: &str, source: &str) -> FeatureVectorPair<T> {
        let first = self.name(first).to_vec();
        let p = self.name(p).to_vec();
        let j = self.name(j).to_vec();
        let title = self.text(title).to_vec();
        let source = self.text(source);
        combine(&first, &p, &j, &title, source)
    }
}
