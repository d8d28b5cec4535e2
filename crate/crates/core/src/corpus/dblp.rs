//! Streaming reader for the DBLP XML dump.
//!
//! The dump is a single `<dblp>` root holding one element per publication.
//! Records are produced one at a time; the reader never holds more than the
//! publication element it is currently assembling.

use std::io::BufRead;

use quick_xml::escape::resolve_html5_entity;
use quick_xml::events::{BytesStart, Event};
use quick_xml::{Reader, XmlVersion};

use super::record::{AuthorMention, BibRecord, RecordKind};
use crate::error::{Error, Result};

/// What the parser saw besides the records it produced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct ParseCounters {
    pub records: usize,
    /// Publications of a kind outside the filter, and non-publication elements.
    pub skipped_kind: usize,
    pub skipped_no_title: usize,
    pub skipped_no_authors: usize,
    /// Entity references with no known expansion, kept verbatim.
    pub unknown_entities: usize,
}

impl ParseCounters {
    pub fn skipped(&self) -> usize {
        self.skipped_no_title + self.skipped_no_authors
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Field {
    Author,
    Title,
    Source,
    Year,
}

#[derive(Default)]
struct Draft {
    key: String,
    title: String,
    source: String,
    year: String,
    authors: Vec<String>,
}

/// Iterator over the publications of a DBLP document.
pub struct DblpRecords<R: BufRead> {
    reader: Reader<R>,
    buf: Vec<u8>,
    kinds: Vec<RecordKind>,
    counters: ParseCounters,
    depth: usize,
    done: bool,
}

/// Starts a lazy parse of `input`, yielding the publications whose kind is
/// in `kinds` in document order.
pub fn parse_dblp_stream<R: BufRead>(input: R, kinds: &[RecordKind]) -> DblpRecords<R> {
    let mut reader = Reader::from_reader(input);
    let config = reader.config_mut();
    config.trim_text(false);
    config.check_end_names = true;
    DblpRecords {
        reader,
        buf: Vec::with_capacity(4096),
        kinds: kinds.to_vec(),
        counters: ParseCounters::default(),
        depth: 0,
        done: false,
    }
}

impl<R: BufRead> DblpRecords<R> {
    pub fn counters(&self) -> ParseCounters {
        self.counters
    }

    fn xml_error(&self, message: impl ToString) -> Error {
        Error::Xml {
            offset: self.reader.error_position(),
            message: message.to_string(),
        }
    }

    fn key_attr(start: &BytesStart<'_>) -> String {
        start
            .attributes()
            .flatten()
            .find(|a| a.key.as_ref() == "key")
            .and_then(|a| a.normalized_value(XmlVersion::Implicit1_0).ok().map(|v| v.into_owned()))
            .unwrap_or_default()
    }

    /// Reads the body of one publication element whose start tag was just consumed.
    fn read_publication(&mut self, kind: RecordKind, key: String) -> Result<Option<BibRecord>> {
        let mut draft = Draft {
            key,
            ..Draft::default()
        };
        let source_tag = kind.source_element();
        // (field, depth at which the field element was opened)
        let mut capture: Option<(Field, usize)> = None;
        let mut text = String::new();
        let pub_depth = self.depth;

        loop {
            self.buf.clear();
            let event = match self.reader.read_event_into(&mut self.buf) {
                Ok(ev) => ev,
                Err(e) => return Err(self.xml_error(e)),
            };
            match event {
                Event::Start(e) => {
                    self.depth += 1;
                    if capture.is_none() && self.depth == pub_depth + 1 {
                        let name = e.name();
                        let field = match name.as_ref() {
                            "author" => Some(Field::Author),
                            "title" => Some(Field::Title),
                            "year" => Some(Field::Year),
                            n if n == source_tag => Some(Field::Source),
                            _ => None,
                        };
                        if let Some(f) = field {
                            capture = Some((f, self.depth));
                            text.clear();
                        }
                    }
                }
                Event::Text(t) => {
                    if capture.is_some() {
                        text.push_str(&t.xml10_content());
                    }
                }
                Event::CData(t) => {
                    if capture.is_some() {
                        text.push_str(&t.xml10_content());
                    }
                }
                Event::GeneralRef(r) => {
                    if capture.is_some() {
                        match r.resolve_char_ref() {
                            Ok(Some(c)) => text.push(c),
                            Ok(None) => match resolve_html5_entity(&r) {
                                Some(s) => text.push_str(s),
                                None => {
                                    self.counters.unknown_entities += 1;
                                    text.push('&');
                                    text.push_str(&r);
                                    text.push(';');
                                }
                            },
                            Err(e) => return Err(self.xml_error(e)),
                        }
                    }
                }
                Event::End(_) => {
                    if let Some((field, d)) = capture {
                        if d == self.depth {
                            let value = collapse_ws(&text);
                            match field {
                                Field::Author => {
                                    if !value.is_empty() {
                                        draft.authors.push(value);
                                    }
                                }
                                Field::Title => draft.title = value,
                                Field::Source => {
                                    if draft.source.is_empty() {
                                        draft.source = value;
                                    }
                                }
                                Field::Year => draft.year = value,
                            }
                            capture = None;
                        }
                    }
                    self.depth -= 1;
                    if self.depth < pub_depth {
                        break;
                    }
                }
                Event::Eof => return Err(self.xml_error("unexpected end of document inside a publication")),
                _ => {}
            }
        }

        if draft.title.is_empty() {
            self.counters.skipped_no_title += 1;
            return Ok(None);
        }
        if draft.authors.is_empty() {
            self.counters.skipped_no_authors += 1;
            return Ok(None);
        }
        Ok(Some(BibRecord {
            record_key: draft.key,
            kind,
            title: draft.title,
            source: draft.source,
            year: draft.year.parse().ok(),
            authors: draft.authors.iter().map(|a| AuthorMention::parse(a)).collect(),
        }))
    }

    fn advance(&mut self) -> Result<Option<BibRecord>> {
        loop {
            self.buf.clear();
            let event = match self.reader.read_event_into(&mut self.buf) {
                Ok(ev) => ev,
                Err(e) => return Err(self.xml_error(e)),
            };
            match event {
                Event::Start(e) => {
                    self.depth += 1;
                    if self.depth == 2 {
                        let kind = RecordKind::from_element(e.name().as_ref());
                        match kind {
                            Some(kind) if self.kinds.contains(&kind) => {
                                let key = Self::key_attr(&e);
                                if let Some(rec) = self.read_publication(kind, key)? {
                                    self.counters.records += 1;
                                    return Ok(Some(rec));
                                }
                            }
                            _ => {
                                let end = e.to_end().into_owned();
                                self.counters.skipped_kind += 1;
                                let mut skip = Vec::new();
                                if let Err(err) = self.reader.read_to_end_into(end.name(), &mut skip) {
                                    return Err(self.xml_error(err));
                                }
                                self.depth -= 1;
                            }
                        }
                    }
                }
                Event::Empty(e) => {
                    if self.depth == 1 {
                        match RecordKind::from_element(e.name().as_ref()) {
                            Some(kind) if self.kinds.contains(&kind) => self.counters.skipped_no_title += 1,
                            _ => self.counters.skipped_kind += 1,
                        }
                    }
                }
                Event::End(_) => self.depth -= 1,
                Event::Eof => {
                    if self.depth > 0 {
                        return Err(self.xml_error("unexpected end of document"));
                    }
                    return Ok(None);
                }
                _ => {}
            }
        }
    }
}

impl<R: BufRead> Iterator for DblpRecords<R> {
    type Item = Result<BibRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.advance() {
            Ok(Some(rec)) => Some(Ok(rec)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
