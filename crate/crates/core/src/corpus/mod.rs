//! Bibliographic records: DBLP ingestion and the line-delimited corpus store.

mod dblp;
mod record;
mod store;

pub use dblp::{parse_dblp_stream, DblpRecords, ParseCounters};
pub use record::{AuthorId, AuthorMention, BibRecord, RecordKind};
pub use store::{read_corpus_store, write_corpus_store, write_records, StoreSummary, STORE_HEADER};
