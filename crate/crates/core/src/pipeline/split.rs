use std::fmt;
use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::blocking::Block;
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "TRAIN",
            Split::Val => "VAL",
            Split::Test => "TEST",
        })
    }
}

/// One split label per block entry, i.e. per (record, target author).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitAssignment {
    pub labels: Vec<Split>,
}

/// Set sizes for an author with `n` records: train first, then validation,
/// then test.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    if n == 0 {
        return (0, 0, 0);
    }
    let train = ((0.7 * n as f64).round() as usize).clamp(1, n);
    let rest = n - train;
    let mut val = ((0.15 * n as f64).round() as usize).min(rest);
    if rest >= 2 {
        val = val.max(1);
    }
    (train, val, rest - val)
}

/// Shuffles each author's entries with a per-class stream of `seed` and
/// cuts them by [`split_sizes`].
pub fn split_per_author(block: &Block, seed: u64) -> SplitAssignment {
    let mut labels = vec![Split::Train; block.entries.len()];
    for (class, mut entries) in block.entries_by_class().into_iter().enumerate() {
        entries.shuffle(&mut seed::rng_indexed(seed, "split", class as u64));
        let (train, val, _) = split_sizes(entries.len());
        for (k, &e) in entries.iter().enumerate() {
            labels[e] = if k < train {
                Split::Train
            } else if k < train + val {
                Split::Val
            } else {
                Split::Test
            };
        }
    }
    SplitAssignment { labels }
}

impl SplitAssignment {
    /// Entry indices in `split`, in entry order.
    pub fn entries(&self, split: Split) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == split).collect()
    }

    /// Per-class entry counts in `split`.
    pub fn class_counts(&self, block: &Block, split: Split) -> Vec<usize> {
        let mut counts = vec![0; block.n_classes()];
        for (e, l) in block.entries.iter().zip(&self.labels) {
            if *l == split {
                counts[e.class] += 1;
            }
        }
        counts
    }

    /// Writes `record_key<TAB>author<TAB>split` lines in entry order.
    pub fn export<W: Write>(&self, block: &Block, out: &mut W) -> std::io::Result<()> {
        for (e, l) in block.entries.iter().zip(&self.labels) {
            let rec = block.record_of(e);
            writeln!(out, "{}\t{}\t{}", rec.record_key, block.authors[e.class], l)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocking::build_block;
    use crate::corpus::{AuthorMention, BibRecord, RecordKind};
    use crate::names::build_author_registry;
    use proptest::prelude::*;

    fn block(per_author: &[usize]) -> Block {
        let mut corpus = Vec::new();
        for (a, &n) in per_author.iter().enumerate() {
            for r in 0..n {
                corpus.push(BibRecord {
                    record_key: format!("r/{a}/{r}"),
                    kind: RecordKind::Article,
                    title: "t".into(),
                    source: String::new(),
                    year: None,
                    authors: vec![AuthorMention::parse(&format!("Yi Chen {:04}", a + 1))],
                });
            }
        }
        let registry = build_author_registry(&corpus);
        build_block(&corpus, &registry, "Y Chen").unwrap()
    }

    #[test]
    fn size_rule() {
        assert_eq!(split_sizes(1), (1, 0, 0));
        assert_eq!(split_sizes(2), (1, 0, 1));
        assert_eq!(split_sizes(6), (4, 1, 1));
        assert_eq!(split_sizes(20), (14, 3, 3));
        assert_eq!(split_sizes(40), (28, 6, 6));
    }

    #[test]
    fn single_record_goes_to_train() {
        let b = block(&[1]);
        assert_eq!(split_per_author(&b, 3).labels, vec![Split::Train]);
    }

    #[test]
    fn twenty_records() {
        let b = block(&[20]);
        let s = split_per_author(&b, 3);
        assert_eq!(s.class_counts(&b, Split::Train), vec![14]);
        assert_eq!(s.class_counts(&b, Split::Val), vec![3]);
        assert_eq!(s.class_counts(&b, Split::Test), vec![3]);
    }

    #[test]
    fn export_lines() {
        let b = block(&[2]);
        let mut out = Vec::new();
        split_per_author(&b, 0).export(&b, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().all(|l| l.split('\t').nth(1) == Some("Yi Chen 0001")));
    }

    proptest! {
        #[test]
        fn partition_with_train_priority(sizes in proptest::collection::vec(1usize..30, 1..6), seed in any::<u64>()) {
            let b = block(&sizes);
            let s = split_per_author(&b, seed);
            prop_assert_eq!(s.labels.len(), b.entries.len());
            let train = s.class_counts(&b, Split::Train);
            let val = s.class_counts(&b, Split::Val);
            let test = s.class_counts(&b, Split::Test);
            for c in 0..b.n_classes() {
                prop_assert!(train[c] >= 1);
                prop_assert_eq!(train[c] + val[c] + test[c], sizes[c]);
            }
            prop_assert_eq!(split_per_author(&b, seed), s);
        }
    }
}
