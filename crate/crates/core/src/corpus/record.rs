use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Publication kinds present in the DBLP dump.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    Article,
    Inproceedings,
    Proceedings,
    Book,
    Incollection,
    Phdthesis,
    Mastersthesis,
    Www,
}

impl RecordKind {
    pub const ALL: [RecordKind; 8] = [
        RecordKind::Article,
        RecordKind::Inproceedings,
        RecordKind::Proceedings,
        RecordKind::Book,
        RecordKind::Incollection,
        RecordKind::Phdthesis,
        RecordKind::Mastersthesis,
        RecordKind::Www,
    ];

    /// Journal articles and proceedings papers.
    pub const DEFAULT: [RecordKind; 2] = [RecordKind::Article, RecordKind::Inproceedings];

    pub fn as_str(self) -> &'static str {
        match self {
            RecordKind::Article => "article",
            RecordKind::Inproceedings => "inproceedings",
            RecordKind::Proceedings => "proceedings",
            RecordKind::Book => "book",
            RecordKind::Incollection => "incollection",
            RecordKind::Phdthesis => "phdthesis",
            RecordKind::Mastersthesis => "mastersthesis",
            RecordKind::Www => "www",
        }
    }

    pub(crate) fn from_element(name: &str) -> Option<RecordKind> {
        RecordKind::ALL.into_iter().find(|k| k.as_str() == name)
    }

    /// Child element holding the venue.
    pub(crate) fn source_element(self) -> &'static str {
        match self {
            RecordKind::Article => "journal",
            RecordKind::Phdthesis | RecordKind::Mastersthesis => "school",
            RecordKind::Book | RecordKind::Proceedings => "publisher",
            _ => "booktitle",
        }
    }
}

impl fmt::Display for RecordKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RecordKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RecordKind::from_element(s.trim()).ok_or_else(|| Error::Config(format!("unknown record kind `{s}`")))
    }
}

/// Identity of a real-world author: the DBLP name without its homonym suffix
/// plus the suffix number (0 when the name carries none).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AuthorId {
    pub base_name: String,
    pub homonym_index: u32,
}

impl AuthorId {
    pub fn new(base_name: impl Into<String>, homonym_index: u32) -> Self {
        AuthorId {
            base_name: base_name.into(),
            homonym_index,
        }
    }

    /// Splits a trailing ` NNNN` homonym suffix off a raw DBLP author string.
    ///
    /// `0000` is not a DBLP suffix and is kept as part of the name, so that
    /// rendering stays the inverse of parsing.
    pub fn parse(raw: &str) -> AuthorId {
        let raw = raw.trim();
        let bytes = raw.as_bytes();
        if bytes.len() > 5 && raw.is_char_boundary(raw.len() - 5) {
            let (head, tail) = raw.split_at(raw.len() - 5);
            let tail = tail.as_bytes();
            if tail[0] == b' '
                && tail[1..].iter().all(u8::is_ascii_digit)
                && &tail[1..] != b"0000"
                && !head.trim_end().is_empty()
            {
                let n = std::str::from_utf8(&tail[1..]).unwrap().parse().unwrap();
                return AuthorId::new(head.trim_end(), n);
            }
        }
        AuthorId::new(raw, 0)
    }

    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for AuthorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.homonym_index == 0 {
            f.write_str(&self.base_name)
        } else {
            write!(f, "{} {:04}", self.base_name, self.homonym_index)
        }
    }
}

/// One author slot of a record.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorMention {
    pub display_name: String,
    pub author_id: AuthorId,
}

impl AuthorMention {
    pub fn parse(raw: &str) -> AuthorMention {
        let display_name = raw.trim().to_string();
        let author_id = AuthorId::parse(&display_name);
        AuthorMention {
            display_name,
            author_id,
        }
    }
}

/// One publication.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BibRecord {
    pub record_key: String,
    pub kind: RecordKind,
    pub title: String,
    pub source: String,
    pub year: Option<i32>,
    pub authors: Vec<AuthorMention>,
}

impl BibRecord {
    /// Number of author slots.
    pub fn omega(&self) -> usize {
        self.authors.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |message: &str| Error::InvalidRecord {
            key: self.record_key.clone(),
            message: message.to_string(),
        };
        if self.record_key.is_empty() {
            return Err(bad("empty record key"));
        }
        if self.title.trim().is_empty() {
            return Err(bad("empty title"));
        }
        if self.authors.is_empty() {
            return Err(bad("no authors"));
        }
        if self.authors.iter().any(|a| a.display_name.trim().is_empty()) {
            return Err(bad("empty author name"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn homonym_suffix() {
        assert_eq!(AuthorId::parse("Bing Li 0001"), AuthorId::new("Bing Li", 1));
        assert_eq!(AuthorId::parse("Bing Li 0002"), AuthorId::new("Bing Li", 2));
        assert_eq!(AuthorId::parse("Wei Chen"), AuthorId::new("Wei Chen", 0));
        assert_eq!(AuthorId::parse("Wei Chen 12"), AuthorId::new("Wei Chen 12", 0));
        assert_eq!(AuthorId::parse("Wei Chen 12345"), AuthorId::new("Wei Chen 12345", 0));
        assert_eq!(AuthorId::parse("Wei Chen 0000"), AuthorId::new("Wei Chen 0000", 0));
        assert_eq!(AuthorId::parse(" 0001"), AuthorId::new("0001", 0));
        assert_eq!(AuthorId::new("Bing Li", 1).render(), "Bing Li 0001");
    }

    #[test]
    fn kinds_parse() {
        assert_eq!("article".parse::<RecordKind>().unwrap(), RecordKind::Article);
        assert!("thesis".parse::<RecordKind>().is_err());
    }

    proptest! {
        #[test]
        fn suffix_render_reparses(base in "[A-Za-z][A-Za-z ]{0,20}[a-z]", n in 1u32..10000) {
            let id = AuthorId::new(base, n);
            prop_assert_eq!(AuthorId::parse(&id.render()), id);
        }

        #[test]
        fn unsuffixed_render_reparses(raw in "[A-Za-z][A-Za-z0-9 ]{0,20}[A-Za-z]") {
            let id = AuthorId::parse(&raw);
            prop_assert_eq!(AuthorId::parse(&id.render()), id);
        }
    }
}
