//! Documents, topics and the on-disk corpus store.

mod text;
mod topic;
mod warc;

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

pub use text::{collapse_whitespace, html_title, html_to_text, tokenize, TokenStream};
pub use topic::{load_topics, Stance, Topic};

const STORE_FORMAT: &str = "healthrank-corpus/1";
const STORE_META: &str = "meta.json";
const STORE_DOCS: &str = "documents.jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub url: String,
    pub domain: String,
    pub title: String,
    pub html: String,
    pub text: String,
}

impl Document {
    /// Builds a document from raw fields, deriving `domain` and `text`.
    ///
    /// An empty `title` is filled from the page's `<title>` element.
    pub fn from_raw(
        doc_id: String,
        url: String,
        title: Option<String>,
        html: String,
    ) -> Result<Self> {
        let domain =
            domain_of(&url).ok_or_else(|| Error::Invalid(format!("unparseable url {url:?}")))?;
        let title = match title {
            Some(t) if !t.is_empty() => t,
            _ => html_title(&html),
        };
        let text = html_to_text(&html);
        Ok(Document {
            doc_id,
            url,
            domain,
            title,
            html,
            text,
        })
    }
}

/// Lowercase host of `url` with any leading `www.` removed.
pub fn domain_of(url: &str) -> Option<String> {
    let parsed = url::Url::parse(url.trim()).ok()?;
    let host = parsed.host_str()?.to_ascii_lowercase();
    let host = host.strip_prefix("www.").unwrap_or(&host);
    if host.is_empty() {
        return None;
    }
    Some(host.to_string())
}

/// Normalizes a bare domain the same way [`domain_of`] normalizes hosts.
pub fn normalize_domain(domain: &str) -> String {
    let d = domain.trim().trim_end_matches('.').to_ascii_lowercase();
    d.strip_prefix("www.").map(str::to_string).unwrap_or(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceFormat {
    Jsonl,
    WarcSubset,
}

impl std::str::FromStr for SourceFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(SourceFormat::Jsonl),
            "warc" | "warc_subset" => Ok(SourceFormat::WarcSubset),
            other => Err(Error::Format {
                found: other.to_string(),
                expected: "jsonl | warc_subset".to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    /// 1-based line (JSONL) or record (WARC) number.
    pub record: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub records: usize,
    pub accepted: usize,
    pub rejected: Vec<Rejection>,
}

impl std::fmt::Display for IngestReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} accepted, {} rejected",
            self.accepted,
            self.rejected.len()
        )
    }
}

/// Raw record as read from a source, before validation.
#[derive(Debug, Default, Deserialize)]
pub(crate) struct RawDocument {
    pub(crate) doc_id: Option<String>,
    pub(crate) url: Option<String>,
    pub(crate) title: Option<String>,
    pub(crate) html: Option<String>,
}

impl RawDocument {
    fn to_document(&self) -> std::result::Result<Document, String> {
        let non_empty = |f: &Option<String>| f.clone().filter(|s| !s.is_empty());
        let doc_id = non_empty(&self.doc_id).ok_or("missing doc_id")?;
        let url = non_empty(&self.url).ok_or("missing url")?;
        let html = self.html.clone().ok_or("missing html")?;
        Document::from_raw(doc_id, url, self.title.clone(), html)
            .map_err(|_| "unparseable url".to_string())
    }
}

/// An immutable set of documents ordered by `doc_id`.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    docs: Vec<Document>,
    by_id: HashMap<String, usize>,
}

impl Corpus {
    /// Builds a corpus, failing on the first duplicate id in input order.
    pub fn from_documents(docs: Vec<Document>) -> Result<Self> {
        let mut seen = HashMap::with_capacity(docs.len());
        for d in &docs {
            if seen.insert(d.doc_id.clone(), ()).is_some() {
                return Err(Error::DuplicateDocument(d.doc_id.clone()));
            }
        }
        let mut docs = docs;
        docs.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        let by_id = docs
            .iter()
            .enumerate()
            .map(|(i, d)| (d.doc_id.clone(), i))
            .collect();
        Ok(Corpus { docs, by_id })
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn documents(&self) -> &[Document] {
        &self.docs
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.by_id.get(doc_id).map(|&i| &self.docs[i])
    }

    /// doc_id → domain for every document.
    pub fn domains(&self) -> HashMap<String, String> {
        self.docs
            .iter()
            .map(|d| (d.doc_id.clone(), d.domain.clone()))
            .collect()
    }

    /// Writes `meta.json` and `documents.jsonl` under `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let meta = StoreMeta {
            format: STORE_FORMAT.to_string(),
            documents: self.docs.len(),
        };
        let meta_path = dir.join(STORE_META);
        fs::write(&meta_path, serde_json::to_string_pretty(&meta)? + "\n")
            .map_err(|e| Error::io(&meta_path, e))?;

        let docs_path = dir.join(STORE_DOCS);
        let file = fs::File::create(&docs_path).map_err(|e| Error::io(&docs_path, e))?;
        let mut w = BufWriter::new(file);
        for d in &self.docs {
            serde_json::to_writer(&mut w, d)?;
            w.write_all(b"\n").map_err(|e| Error::io(&docs_path, e))?;
        }
        w.flush().map_err(|e| Error::io(&docs_path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta_path = dir.join(STORE_META);
        let raw = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta: StoreMeta = serde_json::from_str(&raw)?;
        if meta.format != STORE_FORMAT {
            return Err(Error::Format {
                found: meta.format,
                expected: STORE_FORMAT.to_string(),
            });
        }
        let docs_path = dir.join(STORE_DOCS);
        let file = fs::File::open(&docs_path).map_err(|e| Error::io(&docs_path, e))?;
        let mut docs = Vec::with_capacity(meta.documents);
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(&docs_path, e))?;
            let doc: Document = serde_json::from_str(&line)
                .map_err(|e| Error::parse(&docs_path, i + 1, e.to_string()))?;
            docs.push(doc);
        }
        if docs.len() != meta.documents {
            return Err(Error::Invalid(format!(
                "corpus store lists {} documents but holds {}",
                meta.documents,
                docs.len()
            )));
        }
        Corpus::from_documents(docs)
    }
}

#[derive(Serialize, Deserialize)]
struct StoreMeta {
    format: String,
    documents: usize,
}

/// Reads documents from `path`, extracting text and domains.
///
/// Malformed records are skipped and listed in the report; a duplicate
/// doc_id among accepted records is a hard error.
pub fn ingest_documents(path: &Path, format: SourceFormat) -> Result<(Corpus, IngestReport)> {
    let records: Vec<std::result::Result<RawDocument, String>> = match format {
        SourceFormat::Jsonl => read_jsonl_records(path)?,
        SourceFormat::WarcSubset => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            warc::parse_records(&bytes).map_err(|(rec, msg)| Error::parse(path, rec, msg))?
        }
    };

    let processed = par::map(&records, |r| {
        r.as_ref()
            .map_err(Clone::clone)
            .and_then(RawDocument::to_document)
    });

    let mut report = IngestReport {
        records: processed.len(),
        ..Default::default()
    };
    let mut docs = Vec::with_capacity(processed.len());
    for (i, item) in processed.into_iter().enumerate() {
        match item {
            Ok(doc) => docs.push(doc),
            Err(reason) => {
                log::warn!("{}: record {} rejected: {reason}", path.display(), i + 1);
                report.rejected.push(Rejection {
                    record: i + 1,
                    reason,
                });
            }
        }
    }
    report.accepted = docs.len();
    let corpus = Corpus::from_documents(docs)?;
    Ok((corpus, report))
}

fn read_jsonl_records(path: &Path) -> Result<Vec<std::result::Result<RawDocument, String>>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str::<RawDocument>(&line).map_err(|e| format!("invalid json: {e}")),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn domain_strips_www_and_lowercases() {
        assert_eq!(
            domain_of("https://WWW.Mayo-Clinic.org/path?q=1").as_deref(),
            Some("mayo-clinic.org")
        );
        assert_eq!(domain_of("http://nhs.uk").as_deref(), Some("nhs.uk"));
        assert_eq!(domain_of("not a url"), None);
        assert_eq!(domain_of("mailto:a@b.c"), None);
    }

    #[test]
    fn ingest_all_valid() {
        let f = write_tmp(concat!(
            r#"{"doc_id":"d1","url":"http://a.org/1","title":"A","html":"<p>one</p>"}"#,
            "\n",
            r#"{"doc_id":"d2","url":"http://b.org/2","title":"B","html":"<p>two</p>"}"#,
            "\n",
            r#"{"doc_id":"d3","url":"http://c.org/3","title":"C","html":"<p>three</p>"}"#,
            "\n",
        ));
        let (corpus, report) = ingest_documents(f.path(), SourceFormat::Jsonl).unwrap();
        assert_eq!(corpus.len(), 3);
        assert_eq!(report.to_string(), "3 accepted, 0 rejected");
    }

    #[test]
    fn ingest_rejects_missing_url_and_counts_it() {
        let f = write_tmp(concat!(
            r#"{"doc_id":"d1","url":"http://a.org/1","html":"<p>one</p>"}"#,
            "\n",
            r#"{"doc_id":"d2","html":"<p>two</p>"}"#,
            "\n",
            r#"{"doc_id":"d3","url":"::bad::","html":"x"}"#,
            "\n",
            "{not json\n",
        ));
        let (corpus, report) = ingest_documents(f.path(), SourceFormat::Jsonl).unwrap();
        assert_eq!(corpus.len(), 1);
        assert_eq!(report.records, 4);
        assert_eq!(report.accepted + report.rejected.len(), report.records);
        assert_eq!(
            report.rejected[0],
            Rejection {
                record: 2,
                reason: "missing url".into()
            }
        );
        assert_eq!(report.rejected[1].reason, "unparseable url");
        assert!(report.rejected[2].reason.starts_with("invalid json"));
    }

    #[test]
    fn ingest_duplicate_is_hard_error() {
        let f = write_tmp(concat!(
            r#"{"doc_id":"d1","url":"http://a.org/1","html":""}"#,
            "\n",
            r#"{"doc_id":"d1","url":"http://a.org/2","html":""}"#,
            "\n",
        ));
        let err = ingest_documents(f.path(), SourceFormat::Jsonl).unwrap_err();
        assert!(
            matches!(err, Error::DuplicateDocument(ref id) if id == "d1"),
            "{err}"
        );
    }

    #[test]
    fn title_falls_back_to_html() {
        let d = Document::from_raw(
            "x".into(),
            "http://a.org".into(),
            None,
            "<title>Hi</title><p>b</p>".into(),
        )
        .unwrap();
        assert_eq!(d.title, "Hi");
        assert_eq!(d.text, "b");
    }

    #[test]
    fn store_round_trip() {
        let docs = vec![
            Document::from_raw(
                "b".into(),
                "http://www.x.org".into(),
                Some("t".into()),
                "<p>Hé  <i>llo</i></p>".into(),
            )
            .unwrap(),
            Document::from_raw("a".into(), "http://y.org".into(), None, "<p>z</p>".into()).unwrap(),
        ];
        let corpus = Corpus::from_documents(docs).unwrap();
        let dir = tempfile::tempdir().unwrap();
        corpus.save(dir.path()).unwrap();
        let back = Corpus::load(dir.path()).unwrap();
        assert_eq!(back.documents(), corpus.documents());
        assert_eq!(back.documents()[0].doc_id, "a");
        assert_eq!(back.get("b").unwrap().domain, "x.org");
        assert_eq!(back.get("b").unwrap().text, "Hé llo");
    }
}
