//! Author name normalization, atomic name variates, and the author registry.
//!
//! Every author is indexed under two name variates: its full normalized
//! name ("Rachid Deriche") and its atomic variate, the first-name initial
//! followed by the last name ("R Deriche"). Lookups are case-insensitive.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;

use unicode_normalization::UnicodeNormalization;

use crate::corpus::{AuthorId, BibRecord};
use crate::error::{Error, Result};

/// A name split into clean tokens: no periods, no hyphens, single spaces.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NormalizedName {
    tokens: Vec<String>,
}

impl NormalizedName {
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn render(&self) -> String {
        self.tokens.join(" ")
    }

    /// Case-folded rendering used for all comparisons.
    pub fn key(&self) -> String {
        fold(&self.render())
    }

    pub fn last(&self) -> &str {
        self.tokens.last().expect("normalized names are non-empty")
    }

    /// Every token but the last. A single-token name is its own first name.
    pub fn first_name(&self) -> String {
        match self.tokens.len() {
            1 => self.tokens[0].clone(),
            n => self.tokens[..n - 1].join(" "),
        }
    }
}

impl fmt::Display for NormalizedName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

fn fold(s: &str) -> String {
    s.to_lowercase()
}

/// Normalizes a raw author string.
///
/// The string is NFC-composed, a DBLP homonym suffix is dropped, periods and
/// hyphens become token separators, and whitespace is collapsed.
pub fn normalize_name(raw: &str) -> Result<NormalizedName> {
    let base = AuthorId::parse(raw).base_name;
    let composed: String = base
        .nfc()
        .map(|c| match c {
            '.' | '-' | '\u{2010}' | '\u{2011}' => ' ',
            c => c,
        })
        .collect();
    let tokens: Vec<String> = composed.split_whitespace().map(str::to_string).collect();
    if tokens.is_empty() {
        return Err(Error::EmptyName(raw.to_string()));
    }
    Ok(NormalizedName { tokens })
}

/// First-name initial plus last name.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomicVariate {
    pub initial: String,
    pub last: String,
}

impl AtomicVariate {
    pub fn render(&self) -> String {
        format!("{} {}", self.initial, self.last)
    }

    pub fn key(&self) -> String {
        fold(&self.render())
    }

    pub fn to_name(&self) -> NormalizedName {
        NormalizedName {
            tokens: vec![self.initial.clone(), self.last.clone()],
        }
    }
}

impl fmt::Display for AtomicVariate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.initial, self.last)
    }
}

pub fn atomic_variate(name: &NormalizedName) -> AtomicVariate {
    let first = name.tokens[0].chars().next().expect("tokens are non-empty");
    let initial = first.to_uppercase().next().unwrap_or(first).to_string();
    AtomicVariate {
        initial,
        last: name.last().to_string(),
    }
}

/// The full name and its atomic variate, deduplicated case-insensitively.
pub fn name_variates(name: &NormalizedName) -> Vec<String> {
    let full = name.render();
    let atomic = atomic_variate(name).render();
    if fold(&full) == fold(&atomic) {
        vec![full]
    } else {
        vec![full, atomic]
    }
}

/// How many registry authors a name matches.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RaResult {
    pub count: usize,
    pub candidates: BTreeSet<AuthorId>,
}

#[derive(Clone, Debug)]
pub struct AuthorInfo {
    pub full: NormalizedName,
    pub atomic: AtomicVariate,
}

#[derive(Clone, Debug, Default)]
struct VariateEntry {
    display: String,
    authors: BTreeSet<AuthorId>,
}

/// Index from name variates to the authors that carry them.
#[derive(Clone, Debug, Default)]
pub struct AuthorRegistry {
    by_variate: BTreeMap<String, VariateEntry>,
    authors: BTreeMap<AuthorId, AuthorInfo>,
    names: BTreeSet<String>,
    atomics: BTreeSet<String>,
    /// Mentions whose name normalized to nothing.
    pub unnormalizable: usize,
}

impl AuthorRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Distinct authors, L.
    pub fn author_count(&self) -> usize {
        self.authors.len()
    }

    /// Distinct full names, M.
    pub fn name_count(&self) -> usize {
        self.names.len()
    }

    /// Distinct atomic variates, K.
    pub fn variate_count(&self) -> usize {
        self.atomics.len()
    }

    pub fn author(&self, id: &AuthorId) -> Option<&AuthorInfo> {
        self.authors.get(id)
    }

    pub fn authors(&self) -> impl Iterator<Item = (&AuthorId, &AuthorInfo)> {
        self.authors.iter()
    }

    /// Registers one author under both of its variates.
    pub fn insert(&mut self, id: &AuthorId) {
        if self.authors.contains_key(id) {
            return;
        }
        let full = match normalize_name(&id.base_name) {
            Ok(n) => n,
            Err(_) => {
                self.unnormalizable += 1;
                return;
            }
        };
        let atomic = atomic_variate(&full);
        for variate in name_variates(&full) {
            let entry = self.by_variate.entry(fold(&variate)).or_default();
            if entry.display.is_empty() {
                entry.display = variate;
            }
            entry.authors.insert(id.clone());
        }
        self.names.insert(full.key());
        self.atomics.insert(atomic.key());
        self.authors.insert(id.clone(), AuthorInfo { full, atomic });
    }

    pub fn insert_record(&mut self, record: &BibRecord) {
        for m in &record.authors {
            self.insert(&m.author_id);
        }
    }

    /// Authors filed under the variate with this case-folded key.
    pub fn authors_with_key(&self, key: &str) -> Option<&BTreeSet<AuthorId>> {
        self.by_variate.get(key).map(|e| &e.authors)
    }

    pub fn resolve(&self, raw_name: &str) -> RaResult {
        let candidates = normalize_name(raw_name)
            .ok()
            .and_then(|n| self.authors_with_key(&n.key()).cloned())
            .unwrap_or_default();
        RaResult {
            count: candidates.len(),
            candidates,
        }
    }

    /// Writes `variate<TAB>id; id; ...` lines in key order.
    pub fn export<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        for entry in self.by_variate.values() {
            let ids: Vec<String> = entry.authors.iter().map(AuthorId::render).collect();
            writeln!(out, "{}\t{}", entry.display, ids.join("; "))?;
        }
        Ok(())
    }
}

pub fn build_author_registry(corpus: &[BibRecord]) -> AuthorRegistry {
    let mut reg = AuthorRegistry::new();
    for rec in corpus {
        reg.insert_record(rec);
    }
    reg
}

pub fn resolve_name(registry: &AuthorRegistry, raw_name: &str) -> RaResult {
    registry.resolve(raw_name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{AuthorMention, RecordKind};
    use proptest::prelude::*;

    fn toks(raw: &str) -> Vec<String> {
        normalize_name(raw).unwrap().tokens
    }

    fn record(key: &str, authors: &[&str]) -> BibRecord {
        BibRecord {
            record_key: key.into(),
            kind: RecordKind::Article,
            title: "t".into(),
            source: "s".into(),
            year: None,
            authors: authors.iter().map(|a| AuthorMention::parse(a)).collect(),
        }
    }

    #[test]
    fn normalization_examples() {
        assert_eq!(toks("J. Lee"), ["J", "Lee"]);
        assert_eq!(toks("Lei  Wang "), ["Lei", "Wang"]);
        assert_eq!(toks("Jang-Myung Lee"), ["Jang", "Myung", "Lee"]);
        assert_eq!(toks("Bing Li 0001"), ["Bing", "Li"]);
        assert_eq!(toks("J.Lee"), ["J", "Lee"]);
        assert_eq!(toks("Jose\u{301} Garci\u{301}a"), ["José", "García"]);
        assert!(matches!(normalize_name(" . - "), Err(Error::EmptyName(_))));
    }

    #[test]
    fn atomic_examples() {
        let av = |s: &str| atomic_variate(&normalize_name(s).unwrap()).render();
        assert_eq!(av("Lei Wang"), "L Wang");
        assert_eq!(av("R Deriche"), "R Deriche");
        assert_eq!(av("R. Deriche"), "R Deriche");
        assert_eq!(av("Madonna"), "M Madonna");
        assert_eq!(av("lei wang"), "L wang");
        assert_eq!(av("M Madonna"), "M Madonna");
    }

    #[test]
    fn variate_sets() {
        let v = |s: &str| name_variates(&normalize_name(s).unwrap());
        assert_eq!(v("Rachid Deriche"), ["Rachid Deriche", "R Deriche"]);
        assert_eq!(v("L Wang"), ["L Wang"]);
        assert_eq!(v("Jang Myung Lee"), ["Jang Myung Lee", "J Lee"]);
    }

    #[test]
    fn first_name_rule() {
        assert_eq!(normalize_name("Jang Myung Lee").unwrap().first_name(), "Jang Myung");
        assert_eq!(normalize_name("Madonna").unwrap().first_name(), "Madonna");
    }

    #[test]
    fn registry_homonyms() {
        let corpus = vec![
            record("a", &["Bing Li 0001", "Wei Chen"]),
            record("b", &["Bing Li 0002"]),
            record("c", &["B. Li", "Rachid Deriche"]),
        ];
        let reg = build_author_registry(&corpus);
        assert_eq!(reg.resolve("Bing Li").count, 2);
        assert_eq!(reg.resolve("bing li").count, 2);
        // "B Li" is both a full name and the atomic variate of the Bing Lis.
        assert_eq!(reg.resolve("B Li").count, 3);
        assert_eq!(reg.resolve("Wei Chen").count, 1);
        assert_eq!(reg.resolve("R. Deriche").count, 1);
        assert_eq!(reg.resolve("Nobody Here").count, 0);
        assert_eq!(reg.author_count(), 5);
        assert_eq!(reg.name_count(), 4);
        assert_eq!(reg.variate_count(), 3);
    }

    #[test]
    fn empty_registry() {
        let reg = build_author_registry(&[]);
        assert_eq!((reg.author_count(), reg.name_count(), reg.variate_count()), (0, 0, 0));
    }

    #[test]
    fn export_table() {
        let reg = build_author_registry(&[record("a", &["Bing Li 0001", "Bing Li 0002"])]);
        let mut out = Vec::new();
        reg.export(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "B Li\tBing Li 0001; Bing Li 0002\nBing Li\tBing Li 0001; Bing Li 0002\n"
        );
    }

    proptest! {
        #[test]
        fn normalize_idempotent(raw in "[A-Za-zÀ-ÿ .\\-]{1,30}") {
            if let Ok(n) = normalize_name(&raw) {
                prop_assert_eq!(normalize_name(&n.render()).unwrap(), n.clone());
                let a = atomic_variate(&n);
                prop_assert_eq!(atomic_variate(&normalize_name(&a.render()).unwrap()), a);
            }
        }

        #[test]
        fn full_name_candidates_within_atomic(names in proptest::collection::vec("[A-C][a-c]{0,2} [X-Z][a-b]{0,1}( 000[1-3])?", 1..12)) {
            let corpus: Vec<BibRecord> = names
                .chunks(3)
                .enumerate()
                .map(|(i, c)| record(&i.to_string(), &c.iter().map(String::as_str).collect::<Vec<_>>()))
                .collect();
            let mut reg = AuthorRegistry::new();
            let mut prev: Vec<usize> = Vec::new();
            for rec in &corpus {
                reg.insert_record(rec);
                let now: Vec<usize> = names.iter().map(|n| reg.resolve(n).count).collect();
                if !prev.is_empty() {
                    for (a, b) in prev.iter().zip(&now) {
                        prop_assert!(b >= a);
                    }
                }
                prev = now;
            }
            for (_, info) in reg.authors() {
                let full = reg.resolve(&info.full.render()).candidates;
                let atomic = reg.resolve(&info.atomic.render()).candidates;
                prop_assert!(full.is_subset(&atomic));
            }
        }
    }
}
