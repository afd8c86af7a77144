//! Tokenization and markup stripping shared by indexing and readability.

use scraper::{Html, Node};

/// Lowercase alphanumeric tokens with sentence boundaries.
///
/// `sentence_ends[i]` is the exclusive token index at which sentence `i`
/// ends, so sentence `i` spans `sentence_ends[i - 1]..sentence_ends[i]`.
/// Sentences never contain zero tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenStream {
    pub tokens: Vec<String>,
    pub sentence_ends: Vec<usize>,
}

impl TokenStream {
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn sentence_count(&self) -> usize {
        self.sentence_ends.len()
    }

    pub fn sentences(&self) -> impl Iterator<Item = &[String]> + '_ {
        let mut start = 0;
        self.sentence_ends.iter().map(move |&end| {
            let s = &self.tokens[start..end];
            start = end;
            s
        })
    }
}

/// Splits `text` into lowercase alphanumeric tokens.
///
/// Any non-alphanumeric character separates tokens. A sentence ends at `.`,
/// `?` or `!` followed by whitespace or the end of the text; trailing tokens
/// after the last terminator form a final sentence.
pub fn tokenize(text: &str) -> TokenStream {
    let mut stream = TokenStream::default();
    let mut current = String::new();
    let mut last_end = 0;
    let mut chars = text.chars().peekable();

    while let Some(c) = chars.next() {
        if c.is_alphanumeric() {
            // Lowercasing can emit combining marks (e.g. U+0130); keep only
            // the alphanumeric part so re-tokenizing is a fixed point.
            current.extend(c.to_lowercase().filter(|l| l.is_alphanumeric()));
            continue;
        }
        flush(&mut current, &mut stream.tokens);
        let terminator = matches!(c, '.' | '?' | '!');
        if terminator && chars.peek().is_none_or(|n| n.is_whitespace()) {
            close_sentence(&mut stream, &mut last_end);
        }
    }
    flush(&mut current, &mut stream.tokens);
    close_sentence(&mut stream, &mut last_end);
    stream
}

fn flush(current: &mut String, tokens: &mut Vec<String>) {
    if !current.is_empty() {
        tokens.push(std::mem::take(current));
    }
}

fn close_sentence(stream: &mut TokenStream, last_end: &mut usize) {
    if stream.tokens.len() > *last_end {
        *last_end = stream.tokens.len();
        stream.sentence_ends.push(*last_end);
    }
}

const SKIPPED: &[&str] = &["script", "style", "noscript", "template", "head"];

const BLOCK: &[&str] = &[
    "address",
    "article",
    "aside",
    "blockquote",
    "br",
    "dd",
    "div",
    "dl",
    "dt",
    "figcaption",
    "figure",
    "footer",
    "form",
    "h1",
    "h2",
    "h3",
    "h4",
    "h5",
    "h6",
    "header",
    "hr",
    "li",
    "main",
    "nav",
    "ol",
    "p",
    "pre",
    "section",
    "table",
    "td",
    "th",
    "title",
    "tr",
    "ul",
];

/// Plain text of an HTML document.
///
/// Drops `<script>`, `<style>`, `<noscript>`, `<template>` and `<head>`
/// content, separates block-level elements by a space, decodes entities and
/// collapses whitespace runs to single spaces.
pub fn html_to_text(html: &str) -> String {
    let doc = Html::parse_document(html);
    let mut buf = String::with_capacity(html.len() / 2);
    collect_text(doc.tree.root(), &mut buf);
    collapse_whitespace(&buf)
}

fn collect_text(node: ego_tree::NodeRef<'_, Node>, buf: &mut String) {
    for child in node.children() {
        match child.value() {
            Node::Text(t) => buf.push_str(t),
            Node::Element(e) => {
                let name = e.name();
                if SKIPPED.contains(&name) {
                    continue;
                }
                let block = BLOCK.contains(&name);
                if block {
                    buf.push(' ');
                }
                collect_text(child, buf);
                if block {
                    buf.push(' ');
                }
            }
            _ => collect_text(child, buf),
        }
    }
}

/// Text of the first `<title>` element, whitespace-collapsed.
pub fn html_title(html: &str) -> String {
    let doc = Html::parse_document(html);
    let selector = scraper::Selector::parse("title").expect("static selector");
    doc.select(&selector)
        .next()
        .map(|t| collapse_whitespace(&t.text().collect::<String>()))
        .unwrap_or_default()
}

pub fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_text_is_empty_stream() {
        let s = tokenize("");
        assert!(s.is_empty());
        assert_eq!(s.sentence_count(), 0);
    }

    #[test]
    fn single_sentence() {
        let s = tokenize("Achilles tendonitis.");
        assert_eq!(s.tokens, ["achilles", "tendonitis"]);
        assert_eq!(s.sentence_ends, [2]);
    }

    #[test]
    fn three_terminators_three_sentences() {
        let s = tokenize("A? B! C.");
        assert_eq!(s.tokens, ["a", "b", "c"]);
        assert_eq!(s.sentence_ends, [1, 2, 3]);
        let sentences: Vec<_> = s.sentences().collect();
        assert_eq!(sentences[1], ["b".to_string()]);
    }

    #[test]
    fn terminator_inside_token_does_not_split() {
        let s = tokenize("Version 2.5 works well. Yes");
        assert_eq!(s.tokens, ["version", "2", "5", "works", "well", "yes"]);
        assert_eq!(s.sentence_ends, [5, 6]);
    }

    #[test]
    fn punctuation_only_yields_no_sentences() {
        let s = tokenize("... !! ?");
        assert!(s.is_empty());
        assert_eq!(s.sentence_count(), 0);
    }

    #[test]
    fn strips_inline_markup() {
        assert_eq!(html_to_text("<p>Hello <b>world</b></p>"), "Hello world");
    }

    #[test]
    fn drops_script_and_style_and_separates_blocks() {
        let html = "<html><head><title>T</title><style>p{color:red}</style></head>\
                    <body><p>one</p><p>two</p><script>var x = 1;</script>\
                    <div>three&amp;four</div></body></html>";
        assert_eq!(html_to_text(html), "one two three&four");
        assert_eq!(html_title(html), "T");
    }

    proptest! {
        #[test]
        fn retokenizing_joined_tokens_is_identity(text in "\\PC{0,200}") {
            let first = tokenize(&text);
            let again = tokenize(&first.tokens.join(" "));
            prop_assert_eq!(first.tokens, again.tokens);
        }

        #[test]
        fn tokenize_is_deterministic(text in "[a-zA-Z .?!,\\n]{0,120}") {
            prop_assert_eq!(tokenize(&text), tokenize(&text));
        }

        #[test]
        fn extracted_text_has_no_tags(body in "[a-z <>/=\"]{0,80}") {
            let html = format!("<html><body><p>{body}</p><b>x</b></body></html>");
            let text = html_to_text(&html);
            prop_assert!(!text.contains("<b>") && !text.contains("</p>"));
        }
    }
}
