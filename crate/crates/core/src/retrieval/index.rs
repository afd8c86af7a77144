use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, Corpus};
use crate::error::{Error, Result};
use crate::par;

const INDEX_FORMAT: &str = "healthrank-index/1";
const INDEX_FILE: &str = "index.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    /// Position of the document in [`InvertedIndex::doc_ids`].
    pub doc: u32,
    pub tf: u32,
}

/// Term → postings, with per-document lengths.
///
/// Documents are numbered in ascending doc_id order; every posting list is
/// sorted by that number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvertedIndex {
    format: String,
    doc_ids: Vec<String>,
    doc_lengths: Vec<u32>,
    avg_doc_length: f64,
    postings: BTreeMap<String, Vec<Posting>>,
    #[serde(skip)]
    by_id: HashMap<String, u32>,
}

impl InvertedIndex {
    /// Indexes `(doc_id, text)` pairs. Duplicate ids are rejected.
    pub fn from_texts<S: AsRef<str> + Sync>(docs: &[(S, S)]) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::Invalid("cannot index an empty corpus".into()));
        }
        let mut order: Vec<usize> = (0..docs.len()).collect();
        order.sort_by(|&a, &b| docs[a].0.as_ref().cmp(docs[b].0.as_ref()));
        if let Some(w) = order
            .windows(2)
            .find(|w| docs[w[0]].0.as_ref() == docs[w[1]].0.as_ref())
        {
            return Err(Error::DuplicateDocument(docs[w[0]].0.as_ref().to_string()));
        }

        let counted = par::map(&order, |&i| {
            let tokens = tokenize(docs[i].1.as_ref()).tokens;
            let len = tokens.len() as u32;
            let mut tf: HashMap<String, u32> = HashMap::new();
            for t in tokens {
                *tf.entry(t).or_default() += 1;
            }
            (len, tf)
        });

        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut doc_lengths = Vec::with_capacity(docs.len());
        for (doc, (len, tf)) in counted.into_iter().enumerate() {
            doc_lengths.push(len);
            for (term, tf) in tf {
                postings.entry(term).or_default().push(Posting {
                    doc: doc as u32,
                    tf,
                });
            }
        }
        let doc_ids: Vec<String> = order
            .iter()
            .map(|&i| docs[i].0.as_ref().to_string())
            .collect();
        let total: u64 = doc_lengths.iter().map(|&l| l as u64).sum();
        let mut index = InvertedIndex {
            format: INDEX_FORMAT.to_string(),
            avg_doc_length: total as f64 / doc_lengths.len() as f64,
            doc_ids,
            doc_lengths,
            postings,
            by_id: HashMap::new(),
        };
        index.rebuild_lookup();
        Ok(index)
    }

    fn rebuild_lookup(&mut self) {
        self.by_id = self
            .doc_ids
            .iter()
            .enumerate()
            .map(|(i, d)| (d.clone(), i as u32))
            .collect();
    }

    pub fn num_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn doc_number(&self, doc_id: &str) -> Option<u32> {
        self.by_id.get(doc_id).copied()
    }

    pub fn doc_id(&self, doc: u32) -> &str {
        &self.doc_ids[doc as usize]
    }

    pub fn doc_length(&self, doc_id: &str) -> Option<u32> {
        self.doc_number(doc_id)
            .map(|d| self.doc_lengths[d as usize])
    }

    pub(crate) fn length_of(&self, doc: u32) -> u32 {
        self.doc_lengths[doc as usize]
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings(term).len()
    }

    pub fn term_freq(&self, term: &str, doc: u32) -> u32 {
        let list = self.postings(term);
        list.binary_search_by_key(&doc, |p| p.doc)
            .map(|i| list[i].tf)
            .unwrap_or(0)
    }

    pub fn num_terms(&self) -> usize {
        self.postings.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, &[Posting])> + '_ {
        self.postings
            .iter()
            .map(|(t, p)| (t.as_str(), p.as_slice()))
    }

    /// Writes `index.json` under `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(INDEX_FILE);
        let bytes = serde_json::to_vec(self)?;
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(INDEX_FILE);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let mut index: InvertedIndex = serde_json::from_slice(&bytes)?;
        if index.format != INDEX_FORMAT {
            return Err(Error::Format {
                found: index.format,
                expected: INDEX_FORMAT.to_string(),
            });
        }
        if index.doc_ids.len() != index.doc_lengths.len() {
            return Err(Error::Invalid(
                "index doc table and length table disagree".into(),
            ));
        }
        index.rebuild_lookup();
        Ok(index)
    }
}

/// Indexes the extracted text of every corpus document.
pub fn build_index(corpus: &Corpus) -> Result<InvertedIndex> {
    let pairs: Vec<(&str, &str)> = corpus
        .documents()
        .iter()
        .map(|d| (d.doc_id.as_str(), d.text.as_str()))
        .collect();
    InvertedIndex::from_texts(&pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tiny_index() {
        let idx = InvertedIndex::from_texts(&[("d1", "a b a")]).unwrap();
        assert_eq!(idx.postings("a"), [Posting { doc: 0, tf: 2 }]);
        assert_eq!(idx.postings("b"), [Posting { doc: 0, tf: 1 }]);
        assert_eq!(idx.doc_length("d1"), Some(3));
        assert_eq!(idx.num_docs(), 1);
    }

    #[test]
    fn empty_corpus_is_error() {
        let none: [(&str, &str); 0] = [];
        assert!(InvertedIndex::from_texts(&none).is_err());
        assert!(build_index(&Corpus::default()).is_err());
    }

    #[test]
    fn average_length() {
        let idx =
            InvertedIndex::from_texts(&[("x", "one two"), ("y", "one two three four")]).unwrap();
        assert_eq!(idx.avg_doc_length(), 3.0);
    }

    #[test]
    fn save_load_is_byte_stable() {
        let idx =
            InvertedIndex::from_texts(&[("b", "zinc cold zinc"), ("a", "cold remedy")]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        idx.save(dir.path()).unwrap();
        let first = fs::read(dir.path().join(INDEX_FILE)).unwrap();
        let back = InvertedIndex::load(dir.path()).unwrap();
        assert_eq!(back, idx);
        assert_eq!(back.doc_number("b"), Some(1));
        back.save(dir.path()).unwrap();
        assert_eq!(fs::read(dir.path().join(INDEX_FILE)).unwrap(), first);
    }

    proptest! {
        #[test]
        fn index_invariants(texts in prop::collection::vec("[a-e ]{0,40}", 1..15)) {
            let docs: Vec<(String, String)> =
                texts.into_iter().enumerate().map(|(i, t)| (format!("doc{i:02}"), t)).collect();
            let idx = InvertedIndex::from_texts(&docs).unwrap();
            prop_assert_eq!(idx.num_docs(), docs.len());
            let mut sums = vec![0u32; idx.num_docs()];
            for (_, list) in idx.terms() {
                prop_assert!(list.windows(2).all(|w| w[0].doc < w[1].doc));
                for p in list {
                    sums[p.doc as usize] += p.tf;
                }
            }
            for (doc, sum) in sums.iter().enumerate() {
                prop_assert_eq!(*sum, idx.length_of(doc as u32));
            }
            let mean = sums.iter().map(|&s| s as f64).sum::<f64>() / sums.len() as f64;
            prop_assert!((idx.avg_doc_length() - mean).abs() < 1e-12);
            // rebuild determinism
            let again = InvertedIndex::from_texts(&docs).unwrap();
            prop_assert_eq!(serde_json::to_vec(&again).unwrap(), serde_json::to_vec(&idx).unwrap());
        }
    }
}
