//! Synthetic homonym corpora that are separable by construction.
//!
//! Every author shares one atomic name variate, owns a private clique of
//! co-authors and (unless shared) a private title vocabulary. Co-author last
//! names are unique, so no co-author collides with another's variate or with
//! the shared one.

use std::collections::HashSet;
use std::io::Write;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{AuthorId, AuthorMention, BibRecord, RecordKind};
use crate::error::{Error, Result};
use crate::names::{atomic_variate, normalize_name};
use crate::seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_authors: usize,
    pub variate_key: String,
    pub clique_size: usize,
    pub records_per_author: usize,
    pub vocab_size: usize,
    pub seed: u64,
    pub title_words: usize,
    pub venues: usize,
    /// All authors carry one full name, told apart by homonym suffixes.
    pub same_full_name: bool,
    /// Titles draw from one vocabulary common to all authors.
    pub shared_vocab: bool,
}

impl SynthConfig {
    pub fn new(
        n_authors: usize,
        variate_key: &str,
        clique_size: usize,
        records_per_author: usize,
        vocab_size: usize,
        seed: u64,
    ) -> Self {
        SynthConfig {
            n_authors,
            variate_key: variate_key.to_string(),
            clique_size,
            records_per_author,
            vocab_size,
            seed,
            title_words: 6,
            venues: 8,
            same_full_name: false,
            shared_vocab: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.n_authors < 2 {
            return bad("n_authors must be at least 2");
        }
        if self.clique_size == 0
            || self.records_per_author == 0
            || self.vocab_size == 0
            || self.title_words == 0
            || self.venues == 0
        {
            return bad("clique_size, records_per_author, vocab_size, title_words and venues must be positive");
        }
        if self.n_authors > 10_000 || self.clique_size > 1000 || self.vocab_size > 100_000 {
            return bad("synthetic corpus parameters too large");
        }
        let name = normalize_name(&self.variate_key).map_err(|_| Error::Config("empty variate key".into()))?;
        if !atomic_variate(&name).initial.chars().all(|c| c.is_alphabetic()) {
            return bad("variate key must start with a letter");
        }
        Ok(())
    }
}

/// A generated corpus and the author behind each record's target slot.
#[derive(Clone, Debug)]
pub struct SynthCorpus {
    pub records: Vec<BibRecord>,
    /// `(record_key, author)` in record order.
    pub truth: Vec<(String, AuthorId)>,
}

impl SynthCorpus {
    /// Writes `record_key<TAB>author` lines.
    pub fn write_truth<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        for (key, id) in &self.truth {
            writeln!(out, "{key}\t{id}")?;
        }
        Ok(())
    }
}

const ONSETS: [&str; 16] = [
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "sh", "th",
];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

/// Pronounceable word for `n`, distinct for distinct `n`.
fn word(mut n: usize, min_syllables: usize) -> String {
    let base = ONSETS.len() * VOWELS.len();
    let mut out = String::new();
    let mut syllables = 0;
    while syllables < min_syllables || n > 0 {
        let s = n % base;
        n /= base;
        out.push_str(ONSETS[s / VOWELS.len()]);
        out.push_str(VOWELS[s % VOWELS.len()]);
        syllables += 1;
    }
    out
}

fn capitalized(s: &str) -> String {
    let mut c = s.chars();
    c.next()
        .map(|f| f.to_uppercase().chain(c).collect())
        .unwrap_or_default()
}

/// Distinct first names starting with `initial`.
fn first_names(initial: &str, n: usize) -> Vec<String> {
    (0..n)
        .map(|i| match i / VOWELS.len() {
            0 => format!("{initial}{}", VOWELS[i]),
            k => format!("{initial}{}{}", VOWELS[i % VOWELS.len()], word(k - 1, 1)),
        })
        .collect()
}

pub fn gen_synth(config: &SynthConfig) -> Result<SynthCorpus> {
    config.validate()?;
    let shared = atomic_variate(&normalize_name(&config.variate_key)?);
    let mut rng = seed::rng(config.seed, "synth");

    let first = first_names(&shared.initial, config.n_authors);
    let targets: Vec<AuthorId> = (0..config.n_authors)
        .map(|a| {
            if config.same_full_name {
                AuthorId::new(format!("{} {}", first[0], shared.last), a as u32 + 1)
            } else {
                AuthorId::new(format!("{} {}", first[a], shared.last), 0)
            }
        })
        .collect();

    // Co-author names draw last names from one counter so none repeat.
    let mut counter = 0usize;
    let mut last_names = HashSet::new();
    let mut fresh_last = || loop {
        let w = capitalized(&word(counter, 3));
        counter += 1;
        if !w.eq_ignore_ascii_case(&shared.last) && last_names.insert(w.clone()) {
            return w;
        }
    };
    let cliques: Vec<Vec<String>> = (0..config.n_authors)
        .map(|a| {
            (0..config.clique_size)
                .map(|m| format!("{} {}", capitalized(&word(a * config.clique_size + m, 2)), fresh_last()))
                .collect()
        })
        .collect();

    let vocab_of = |a: usize| -> Vec<String> {
        let offset = if config.shared_vocab { 0 } else { a * config.vocab_size };
        (0..config.vocab_size).map(|v| word(offset + v, 2)).collect()
    };
    let venues: Vec<String> = (0..config.venues)
        .map(|v| format!("Journal of {}", capitalized(&word(v, 3))))
        .collect();

    let mut records = Vec::with_capacity(config.n_authors * config.records_per_author);
    let mut truth = Vec::with_capacity(records.capacity());
    for a in 0..config.n_authors {
        let vocab = vocab_of(a);
        let clique = &cliques[a];
        for r in 0..config.records_per_author {
            let mut names = vec![clique[r % clique.len()].clone()];
            if clique.len() > 1 {
                let other = (r % clique.len() + rng.random_range(1..clique.len())) % clique.len();
                names.push(clique[other].clone());
            }
            let target = targets[a].render();
            let at = rng.random_range(0..=names.len());
            names.insert(at, target);

            let title: Vec<&str> = (0..config.title_words)
                .map(|_| vocab.choose(&mut rng).expect("vocabulary is non-empty").as_str())
                .collect();
            let key = format!("synth/{a}/{r}");
            records.push(BibRecord {
                record_key: key.clone(),
                kind: RecordKind::Article,
                title: capitalized(&title.join(" ")),
                source: venues.choose(&mut rng).expect("venues are non-empty").clone(),
                year: Some(2000 + (r % 20) as i32),
                authors: names.iter().map(|n| AuthorMention::parse(n)).collect(),
            });
            truth.push((key, targets[a].clone()));
        }
    }
    Ok(SynthCorpus { records, truth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocking::{block_stats, build_block};
    use crate::corpus::write_records;
    use crate::names::build_author_registry;

    fn standard() -> SynthConfig {
        SynthConfig::new(20, "Y Chen", 5, 40, 30, 7)
    }

    #[test]
    fn counts_follow_parameters() {
        let c = gen_synth(&standard()).unwrap();
        assert_eq!(c.records.len(), 800);
        let reg = build_author_registry(&c.records);
        let block = build_block(&c.records, &reg, "Y Chen").unwrap();
        assert_eq!(block.n_classes(), 20);
        let stats = block_stats(&block);
        assert_eq!(stats.uta, 20);
        assert_eq!(stats.uca, 20 * 5);
        assert_eq!(stats.rcd, 800);
    }

    #[test]
    fn byte_identical_for_same_seed() {
        let bytes = |cfg: &SynthConfig| {
            let mut out = Vec::new();
            write_records(&mut out, &gen_synth(cfg).unwrap().records).unwrap();
            out
        };
        assert_eq!(bytes(&standard()), bytes(&standard()));
        let mut other = standard();
        other.seed = 8;
        assert_ne!(bytes(&standard()), bytes(&other));
    }

    #[test]
    fn same_full_name_variant() {
        let mut cfg = SynthConfig::new(2, "Y Chen", 5, 10, 30, 1);
        cfg.same_full_name = true;
        cfg.shared_vocab = true;
        let c = gen_synth(&cfg).unwrap();
        let reg = build_author_registry(&c.records);
        assert_eq!(reg.resolve("Ya Chen").count, 2);
        let block = build_block(&c.records, &reg, "Y Chen").unwrap();
        assert_eq!(block.n_classes(), 2);
        assert_eq!(block_stats(&block).uca, 10);
    }

    #[test]
    fn truth_matches_target_slot() {
        let c = gen_synth(&SynthConfig::new(3, "L Wang", 2, 4, 5, 3)).unwrap();
        for (rec, (key, id)) in c.records.iter().zip(&c.truth) {
            assert_eq!(&rec.record_key, key);
            assert!(rec.authors.iter().any(|m| &m.author_id == id));
            rec.validate().unwrap();
        }
        let mut out = Vec::new();
        c.write_truth(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap().lines().next(),
            Some("synth/0/0\tLa Wang")
        );
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(gen_synth(&SynthConfig::new(1, "Y Chen", 5, 40, 30, 7)).is_err());
        assert!(gen_synth(&SynthConfig::new(3, "Y Chen", 0, 40, 30, 7)).is_err());
        assert!(gen_synth(&SynthConfig::new(3, "", 5, 40, 30, 7)).is_err());
    }

    #[test]
    fn words_are_distinct() {
        let words: HashSet<String> = (0..5000).map(|n| word(n, 2)).collect();
        assert_eq!(words.len(), 5000);
    }
}
