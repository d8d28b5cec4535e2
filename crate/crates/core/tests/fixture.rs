//! The 50-record DBLP fixture against expectations rendered independently
//! by `fixtures/make_fixture.py`.

use std::fs;
use std::io::BufReader;
use std::path::PathBuf;

use namesake::corpus::{parse_dblp_stream, write_records, ParseCounters};
use namesake::names::build_author_registry;
use namesake::{block_stats, build_block, AuthorId, BibRecord, RecordKind};
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn parse() -> (Vec<BibRecord>, ParseCounters) {
    let xml = fs::File::open(fixture("dblp50.xml")).unwrap();
    let mut parser = parse_dblp_stream(BufReader::new(xml), &RecordKind::DEFAULT);
    let records = parser.by_ref().collect::<Result<Vec<_>, _>>().unwrap();
    (records, parser.counters())
}

fn expected() -> Value {
    serde_json::from_str(&fs::read_to_string(fixture("dblp50.expected.json")).unwrap()).unwrap()
}

#[test]
fn records_match_line_by_line() {
    let (records, _) = parse();
    let mut out = Vec::new();
    write_records(&mut out, &records).unwrap();
    let got = String::from_utf8(out).unwrap();
    let want = fs::read_to_string(fixture("dblp50.expected.nd")).unwrap();
    for (i, (g, w)) in got.lines().zip(want.lines()).enumerate() {
        assert_eq!(g, w, "store line {}", i + 1);
    }
    assert_eq!(got.lines().count(), want.lines().count());
}

#[test]
fn counters() {
    let (records, c) = parse();
    let want = &expected()["parse"];
    assert_eq!(want["records"], c.records);
    assert_eq!(want["skipped_kind"], c.skipped_kind);
    assert_eq!(want["skipped_no_title"], c.skipped_no_title);
    assert_eq!(want["skipped_no_authors"], c.skipped_no_authors);
    assert_eq!(want["unknown_entities"], c.unknown_entities);
    let mentions: usize = records.iter().map(|r| r.authors.len()).sum();
    assert_eq!(expected()["mentions"], mentions);
}

#[test]
fn entities_and_markup_are_decoded() {
    let (records, _) = parse();
    let names: Vec<&str> = records
        .iter()
        .flat_map(|r| &r.authors)
        .map(|m| m.display_name.as_str())
        .collect();
    assert!(names.contains(&"Jörg Müller"));
    assert!(names.contains(&"José García"));
    let titles: Vec<&str> = records.iter().map(|r| r.title.as_str()).collect();
    assert!(titles.contains(&"Entropy ≤ Capacity, Again"));
    assert!(titles.contains(&"Ray Tracing À la Carte"));
    assert!(titles
        .iter()
        .all(|t| !t.contains('<') && !t.contains("&amp;") && !t.contains("  ")));
}

#[test]
fn homonym_suffixes() {
    let (records, _) = parse();
    let ids: Vec<&AuthorId> = records.iter().flat_map(|r| &r.authors).map(|m| &m.author_id).collect();
    assert!(ids.contains(&&AuthorId::new("Bing Li", 1)));
    assert!(ids.contains(&&AuthorId::new("Bing Li", 2)));
    assert!(ids.contains(&&AuthorId::new("Yu Wang", 2)));
}

#[test]
fn registry_counts() {
    let (records, _) = parse();
    let reg = build_author_registry(&records);
    let want = &expected()["registry"];
    assert_eq!(want["authors"], reg.author_count());
    assert_eq!(want["names"], reg.name_count());
    assert_eq!(want["variates"], reg.variate_count());
}

fn check_block(key: &str, field: &str) {
    let (records, _) = parse();
    let reg = build_author_registry(&records);
    let block = build_block(&records, &reg, key).unwrap();
    let want = &expected()[field];
    let classes: Vec<String> = block.authors.iter().map(AuthorId::render).collect();
    assert_eq!(want["classes"], serde_json::json!(classes));
    assert_eq!(want["entries"], block.entries.len());
    let s = block_stats(&block);
    for (name, got) in [
        ("uta", s.uta),
        ("rcd", s.rcd),
        ("uca", s.uca),
        ("uan", s.uan),
        ("r2a", s.r2a),
        ("r3a", s.r3a),
    ] {
        assert_eq!(want[name], got, "{key}: {name}");
    }
}

#[test]
fn y_wang_block() {
    check_block("Y Wang", "block_y_wang");
}

#[test]
fn b_li_block() {
    check_block("B Li", "block_b_li");
}
