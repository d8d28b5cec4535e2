//! Per-variate sub-collections and their statistics.
//!
//! A block gathers every (record, author position) pair whose author has a
//! given atomic name variate. The block's authors become the classes of its
//! model, numbered in order of first appearance in the corpus.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::corpus::{AuthorId, BibRecord};
use crate::error::{Error, Result};
use crate::names::{atomic_variate, normalize_name, AuthorRegistry};

/// One training/evaluation target: an author slot inside a block record.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockEntry {
    /// Index into [`Block::records`].
    pub record: usize,
    /// Author position inside that record.
    pub position: usize,
    pub class: usize,
}

#[derive(Clone, Debug)]
pub struct Block {
    /// Rendered atomic variate, e.g. "Y Chen".
    pub variate_key: String,
    pub records: Vec<BibRecord>,
    pub entries: Vec<BlockEntry>,
    /// Class index to author; `authors[c]` is class `c`.
    pub authors: Vec<AuthorId>,
    class_of: HashMap<AuthorId, usize>,
}

impl Block {
    pub fn n_classes(&self) -> usize {
        self.authors.len()
    }

    pub fn class_of(&self, id: &AuthorId) -> Option<usize> {
        self.class_of.get(id).copied()
    }

    pub fn record_of(&self, entry: &BlockEntry) -> &BibRecord {
        &self.records[entry.record]
    }

    /// Entries grouped by class, in entry order.
    pub fn entries_by_class(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_classes()];
        for (i, e) in self.entries.iter().enumerate() {
            out[e.class].push(i);
        }
        out
    }
}

/// Folded atomic-variate key of any name, if it normalizes.
pub fn atomic_key(raw: &str) -> Option<String> {
    normalize_name(raw).ok().map(|n| atomic_variate(&n).key())
}

/// Builds the block of `variate_key`. Any name may be passed; it is reduced
/// to its atomic variate first, so "Yi Chen" selects the "Y Chen" block.
pub fn build_block(corpus: &[BibRecord], registry: &AuthorRegistry, variate_key: &str) -> Result<Block> {
    let name = normalize_name(variate_key).map_err(|_| Error::EmptyBlock(variate_key.to_string()))?;
    let atomic = atomic_variate(&name);
    let key = atomic.key();
    if registry.authors_with_key(&key).is_none_or(|s| s.is_empty()) {
        return Err(Error::EmptyBlock(atomic.render()));
    }

    let mut block = Block {
        variate_key: atomic.render(),
        records: Vec::new(),
        entries: Vec::new(),
        authors: Vec::new(),
        class_of: HashMap::new(),
    };
    for rec in corpus {
        let mut slot = None;
        for (pos, m) in rec.authors.iter().enumerate() {
            let Some(info) = registry.author(&m.author_id) else {
                continue;
            };
            if info.atomic.key() != key {
                continue;
            }
            let record = *slot.get_or_insert_with(|| {
                block.records.push(rec.clone());
                block.records.len() - 1
            });
            let next = block.authors.len();
            let class = *block.class_of.entry(m.author_id.clone()).or_insert(next);
            if class == next {
                block.authors.push(m.author_id.clone());
            }
            block.entries.push(BlockEntry {
                record,
                position: pos,
                class,
            });
        }
    }
    if block.entries.is_empty() {
        return Err(Error::EmptyBlock(block.variate_key));
    }
    Ok(block)
}

/// Counters of one block, named after the columns of the usual
/// sub-collection table.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct BlockStats {
    /// Unique target authors.
    pub uta: usize,
    /// Distinct records.
    pub rcd: usize,
    /// Unique co-author full names (non-target slots).
    pub uca: usize,
    /// Unique full names among the target authors.
    pub uan: usize,
    /// Records whose largest group of authors sharing an atomic variate has size 2.
    pub r2a: usize,
    /// Records whose largest such group has size 3 or more.
    pub r3a: usize,
}

pub fn block_stats(block: &Block) -> BlockStats {
    let mut target_slots: HashSet<(usize, usize)> = HashSet::new();
    let mut target_names = HashSet::new();
    for e in &block.entries {
        target_slots.insert((e.record, e.position));
    }
    for id in &block.authors {
        let key = normalize_name(&id.base_name)
            .map(|n| n.key())
            .unwrap_or_else(|_| id.base_name.to_lowercase());
        target_names.insert(key);
    }

    let mut coauthors = HashSet::new();
    let (mut r2a, mut r3a) = (0, 0);
    for (ri, rec) in block.records.iter().enumerate() {
        let mut groups: BTreeMap<String, usize> = BTreeMap::new();
        for (pos, m) in rec.authors.iter().enumerate() {
            let Ok(full) = normalize_name(&m.author_id.base_name) else {
                continue;
            };
            *groups.entry(atomic_variate(&full).key()).or_default() += 1;
            if !target_slots.contains(&(ri, pos)) {
                coauthors.insert(full.key());
            }
        }
        match groups.values().max().copied().unwrap_or(0) {
            2 => r2a += 1,
            n if n >= 3 => r3a += 1,
            _ => {}
        }
    }

    BlockStats {
        uta: block.n_classes(),
        rcd: block.records.len(),
        uca: coauthors.len(),
        uan: target_names.len(),
        r2a,
        r3a,
    }
}

/// Corpus-wide counters: records, unique authors, unique names, unique atomic variates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct CorpusStats {
    pub records: usize,
    pub mentions: usize,
    pub authors: usize,
    pub names: usize,
    pub variates: usize,
}

pub fn corpus_stats(corpus: &[BibRecord], registry: &AuthorRegistry) -> CorpusStats {
    CorpusStats {
        records: corpus.len(),
        mentions: corpus.iter().map(|r| r.authors.len()).sum(),
        authors: registry.author_count(),
        names: registry.name_count(),
        variates: registry.variate_count(),
    }
}

/// Atomic-variate keys with their author counts, largest first.
pub fn largest_blocks(registry: &AuthorRegistry, top: usize) -> Vec<(String, usize)> {
    let mut counts: BTreeMap<String, (String, usize)> = BTreeMap::new();
    for (_, info) in registry.authors() {
        let e = counts
            .entry(info.atomic.key())
            .or_insert_with(|| (info.atomic.render(), 0));
        e.1 += 1;
    }
    let mut v: Vec<(String, usize)> = counts.into_values().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v.truncate(top);
    v
}
