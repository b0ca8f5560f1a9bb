//! Record ingestion and the raw relations of a knowledge context.
//!
//! A record file is line oriented:
//!
//! ```text
//! #krc 1
//! r1<TAB>k1,k2<TAB>s1
//! r2<TAB>k2<TAB>r1
//! ```
//!
//! From it we materialize the record set `R`, the keyword set `K`, the cited
//! documents `S`, the citing records `R'` and the citation document set
//! `D = R' ∪ S`, together with the keyword–record incidence (stored as two
//! inverted lists) and the citation relation (out- and in-lists over `D`).
//! All identifiers are interned lexicographically so every derived matrix is
//! reproducible.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const RECORD_FILE_HEADER: &str = "#krc 1";

macro_rules! index_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub struct $name(pub usize);

        impl $name {
            pub fn index(self) -> usize {
                self.0
            }
        }
    };
}

index_newtype!(
    /// Dense index of a record in `R`.
    RecordId
);
index_newtype!(
    /// Dense index of a keyword in `K`.
    KeywordId
);
index_newtype!(
    /// Dense index of a document in `D`.
    DocumentId
);

/// One line of a record file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    pub keywords: Vec<String>,
    pub citations: Vec<String>,
    pub title: Option<String>,
}

impl Record {
    pub fn new<K, C>(id: &str, keywords: K, citations: C) -> Self
    where
        K: IntoIterator,
        K::Item: Into<String>,
        C: IntoIterator,
        C::Item: Into<String>,
    {
        Self {
            id: id.to_string(),
            keywords: keywords.into_iter().map(Into::into).collect(),
            citations: citations.into_iter().map(Into::into).collect(),
            title: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestOptions {
    /// Keywords qualifying fewer records than this are dropped.
    pub min_keyword_frequency: usize,
    /// Apply English suffix stripping to every keyword token.
    pub stem: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            min_keyword_frequency: 2,
            stem: false,
        }
    }
}

/// Bijection between identifiers and contiguous indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Interner {
    names: Vec<String>,
    lookup: HashMap<String, usize>,
}

impl Interner {
    /// Interns `names` in the given order; duplicates are ignored.
    pub fn from_names<I: IntoIterator<Item = String>>(names: I) -> Self {
        let mut interner = Self::default();
        for name in names {
            interner.intern(name);
        }
        interner
    }

    pub fn intern(&mut self, name: String) -> usize {
        if let Some(&ix) = self.lookup.get(&name) {
            return ix;
        }
        let ix = self.names.len();
        self.lookup.insert(name.clone(), ix);
        self.names.push(name);
        ix
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.lookup.get(name).copied()
    }

    pub fn name(&self, ix: usize) -> &str {
        &self.names[ix]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

fn is_identifier(s: &str) -> bool {
    !s.is_empty()
        && s
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b':' | b'-'))
}

fn parse_id_list(field: &str, line: usize, what: &str) -> Result<Vec<String>> {
    if field.is_empty() {
        return Ok(Vec::new());
    }
    field
        .split(',')
        .map(|id| {
            if is_identifier(id) {
                Ok(id.to_string())
            } else {
                Err(Error::Malformed {
                    line,
                    message: format!("invalid {what} identifier `{id}`"),
                })
            }
        })
        .collect()
}

/// Parses the text of a record file. Line numbers in errors are 1-based.
pub fn parse_record_file(text: &str) -> Result<Vec<Record>> {
    let mut lines = text.split('\n');
    match lines.next() {
        Some(first) if first.trim_end_matches('\r') == RECORD_FILE_HEADER => {}
        Some("") | None => return Err(Error::EmptyCorpus),
        Some(other) => {
            return Err(Error::Malformed {
                line: 1,
                message: format!("expected header `{RECORD_FILE_HEADER}`, found `{other}`"),
            })
        }
    }

    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    let body: Vec<&str> = lines.collect();
    let last = body.len();
    for (offset, raw) in body.into_iter().enumerate() {
        let line_no = offset + 2;
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            if offset + 1 == last {
                break;
            }
            return Err(Error::Malformed {
                line: line_no,
                message: "blank line".into(),
            });
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Malformed {
                line: line_no,
                message: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        if !is_identifier(fields[0]) {
            return Err(Error::Malformed {
                line: line_no,
                message: format!("invalid record identifier `{}`", fields[0]),
            });
        }
        let id = fields[0].to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateRecord(id));
        }
        let mut keywords = parse_id_list(fields[1], line_no, "keyword")?;
        let mut citations = parse_id_list(fields[2], line_no, "citation")?;
        dedup_preserving_order(&mut keywords);
        dedup_preserving_order(&mut citations);
        records.push(Record {
            id,
            keywords,
            citations,
            title: None,
        });
    }
    if records.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(records)
}

fn dedup_preserving_order(ids: &mut Vec<String>) {
    let mut seen = BTreeSet::new();
    ids.retain(|id| seen.insert(id.clone()));
}

pub fn write_record_file(records: &[Record]) -> String {
    let mut out = String::new();
    out.push_str(RECORD_FILE_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{}\t{}\t{}",
            r.id,
            r.keywords.join(","),
            r.citations.join(",")
        );
    }
    out
}

/// Lowercases the keyword and stems each `_`-separated token.
pub fn stem_keyword(keyword: &str) -> String {
    let stemmer = Stemmer::create(Algorithm::English);
    keyword
        .split('_')
        .map(|token| stemmer.stem(&token.to_ascii_lowercase()).into_owned())
        .collect::<Vec<_>>()
        .join("_")
}

/// The relational substrate of one information resource.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KnowledgeContext {
    records: Interner,
    keywords: Interner,
    documents: Interner,
    record_keywords: Vec<Vec<usize>>,
    keyword_records: Vec<Vec<usize>>,
    cites: Vec<Vec<usize>>,
    cited_by: Vec<Vec<usize>>,
    record_document: Vec<Option<usize>>,
    document_record: Vec<Option<usize>>,
    cited: Vec<usize>,
    citing_records: Vec<usize>,
    base_keywords: usize,
    options: IngestOptions,
}

pub fn ingest(path: impl AsRef<Path>, options: IngestOptions) -> Result<KnowledgeContext> {
    let text = std::fs::read_to_string(path)?;
    let records = parse_record_file(&text)?;
    KnowledgeContext::from_records(records, options)
}

impl KnowledgeContext {
    pub fn from_records(records: Vec<Record>, options: IngestOptions) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut by_id: BTreeMap<String, Record> = BTreeMap::new();
        for mut record in records {
            if options.stem {
                record.keywords = record.keywords.iter().map(|k| stem_keyword(k)).collect();
                dedup_preserving_order(&mut record.keywords);
            }
            if by_id.contains_key(&record.id) {
                return Err(Error::DuplicateRecord(record.id));
            }
            by_id.insert(record.id.clone(), record);
        }

        let mut frequency: BTreeMap<&str, usize> = BTreeMap::new();
        for r in by_id.values() {
            for k in &r.keywords {
                *frequency.entry(k.as_str()).or_default() += 1;
            }
        }
        let keywords = Interner::from_names(
            frequency
                .iter()
                .filter(|(_, &n)| n >= options.min_keyword_frequency)
                .map(|(k, _)| k.to_string()),
        );
        let records_ix = Interner::from_names(by_id.keys().cloned());

        // R' are records on either end of a citation; S everything cited.
        let mut cited_names: BTreeSet<&str> = BTreeSet::new();
        let mut participating: BTreeSet<&str> = BTreeSet::new();
        for r in by_id.values() {
            if !r.citations.is_empty() {
                participating.insert(r.id.as_str());
            }
            for c in &r.citations {
                cited_names.insert(c.as_str());
                if by_id.contains_key(c) {
                    participating.insert(c.as_str());
                }
            }
        }
        let doc_names: BTreeSet<&str> = participating.union(&cited_names).copied().collect();
        let documents = Interner::from_names(doc_names.iter().map(|s| s.to_string()));

        let m = records_ix.len();
        let n = keywords.len();
        let p = documents.len();
        let mut record_keywords = vec![Vec::new(); m];
        let mut keyword_records = vec![Vec::new(); n];
        let mut cites = vec![Vec::new(); p];
        let mut cited_by = vec![Vec::new(); p];
        let mut record_document = vec![None; m];
        let mut document_record = vec![None; p];

        for (rix, r) in by_id.values().enumerate() {
            let mut kws: Vec<usize> = r.keywords.iter().filter_map(|k| keywords.get(k)).collect();
            kws.sort_unstable();
            for &k in &kws {
                keyword_records[k].push(rix);
            }
            record_keywords[rix] = kws;
            if let Some(d) = documents.get(&r.id) {
                record_document[rix] = Some(d);
                document_record[d] = Some(rix);
                let mut out: Vec<usize> = r
                    .citations
                    .iter()
                    .map(|c| documents.get(c).expect("cited documents are in D"))
                    .collect();
                out.sort_unstable();
                for &t in &out {
                    cited_by[t].push(d);
                }
                cites[d] = out;
            }
        }
        for list in &mut cited_by {
            list.sort_unstable();
        }

        let cited = cited_names
            .iter()
            .map(|c| documents.get(c).expect("cited documents are in D"))
            .collect();
        let citing_records = participating
            .iter()
            .filter_map(|r| records_ix.get(r))
            .collect();

        Ok(Self {
            records: records_ix,
            base_keywords: n,
            keywords,
            documents,
            record_keywords,
            keyword_records,
            cites,
            cited_by,
            record_document,
            document_record,
            cited,
            citing_records,
            options,
        })
    }

    pub fn options(&self) -> IngestOptions {
        self.options
    }

    /// `m = |R|`
    pub fn record_count(&self) -> usize {
        self.records.len()
    }

    /// `n = |K|`, including keywords added after ingestion.
    pub fn keyword_count(&self) -> usize {
        self.keywords.len()
    }

    /// `o = |S|`
    pub fn cited_count(&self) -> usize {
        self.cited.len()
    }

    /// `p = |D|`
    pub fn document_count(&self) -> usize {
        self.documents.len()
    }

    pub fn records(&self) -> &Interner {
        &self.records
    }

    pub fn keywords(&self) -> &Interner {
        &self.keywords
    }

    pub fn documents(&self) -> &Interner {
        &self.documents
    }

    pub fn record_id(&self, name: &str) -> Option<RecordId> {
        self.records.get(name).map(RecordId)
    }

    pub fn keyword_id(&self, name: &str) -> Option<KeywordId> {
        self.keywords.get(name).map(KeywordId)
    }

    pub fn document_id(&self, name: &str) -> Option<DocumentId> {
        self.documents.get(name).map(DocumentId)
    }

    /// Documents in `S`, ascending.
    pub fn cited_documents(&self) -> impl Iterator<Item = DocumentId> + '_ {
        self.cited.iter().map(|&d| DocumentId(d))
    }

    /// Records in `R'`, ascending.
    pub fn citing_records(&self) -> impl Iterator<Item = RecordId> + '_ {
        self.citing_records.iter().map(|&r| RecordId(r))
    }

    /// Records qualified by keyword `k` (row `k` of `A`).
    pub fn records_of_keyword(&self, k: KeywordId) -> &[usize] {
        &self.keyword_records[k.0]
    }

    /// Keywords qualifying record `r` (column `r` of `A`).
    pub fn keywords_of_record(&self, r: RecordId) -> &[usize] {
        &self.record_keywords[r.0]
    }

    /// Whether `a_{kr} = 1`.
    pub fn qualifies(&self, k: KeywordId, r: RecordId) -> bool {
        self.keyword_records[k.0].binary_search(&r.0).is_ok()
    }

    /// Documents cited by `d` (row `d` of `C`).
    pub fn cites(&self, d: DocumentId) -> &[usize] {
        &self.cites[d.0]
    }

    /// Documents citing `d` (column `d` of `C`).
    pub fn cited_by(&self, d: DocumentId) -> &[usize] {
        &self.cited_by[d.0]
    }

    pub fn is_cited(&self, from: DocumentId, to: DocumentId) -> bool {
        self.cites[from.0].binary_search(&to.0).is_ok()
    }

    pub fn document_of_record(&self, r: RecordId) -> Option<DocumentId> {
        self.record_document[r.0].map(DocumentId)
    }

    pub fn record_of_document(&self, d: DocumentId) -> Option<RecordId> {
        self.document_record[d.0].map(RecordId)
    }

    pub fn keyword_records(&self) -> &[Vec<usize>] {
        &self.keyword_records
    }

    pub fn record_keywords(&self) -> &[Vec<usize>] {
        &self.record_keywords
    }

    pub fn citation_out_lists(&self) -> &[Vec<usize>] {
        &self.cites
    }

    pub fn citation_in_lists(&self) -> &[Vec<usize>] {
        &self.cited_by
    }

    pub fn citation_count(&self) -> usize {
        self.cites.iter().map(Vec::len).sum()
    }

    /// `N(k)`: number of records keyword `k` qualifies.
    pub fn keyword_frequency(&self, k: KeywordId) -> Result<usize> {
        self.keyword_records
            .get(k.0)
            .map(Vec::len)
            .ok_or_else(|| Error::UnknownKeyword(format!("#{}", k.0)))
    }

    pub fn keyword_frequency_by_name(&self, name: &str) -> Result<usize> {
        let k = self
            .keyword_id(name)
            .ok_or_else(|| Error::UnknownKeyword(name.to_string()))?;
        self.keyword_frequency(k)
    }

    /// Adds a keyword that qualifies no record. Returns the existing index if
    /// the keyword is already known.
    pub fn add_keyword(&mut self, name: &str) -> (KeywordId, bool) {
        if let Some(k) = self.keywords.get(name) {
            return (KeywordId(k), false);
        }
        let k = self.keywords.intern(name.to_string());
        self.keyword_records.push(Vec::new());
        (KeywordId(k), true)
    }

    /// Keywords appended after ingestion, in insertion order.
    pub fn added_keywords(&self) -> &[String] {
        &self.keywords.names()[self.base_keywords..]
    }

    /// Reconstructs the record lines for the retained relations. Keywords that
    /// fell under the frequency floor are not included.
    pub fn to_records(&self) -> Vec<Record> {
        (0..self.record_count())
            .map(|r| {
                let citations = match self.record_document[r] {
                    Some(d) => self.cites[d]
                        .iter()
                        .map(|&t| self.documents.name(t).to_string())
                        .collect(),
                    None => Vec::new(),
                };
                Record {
                    id: self.records.name(r).to_string(),
                    keywords: self.record_keywords[r]
                        .iter()
                        .map(|&k| self.keywords.name(k).to_string())
                        .collect(),
                    citations,
                    title: None,
                }
            })
            .collect()
    }
}
