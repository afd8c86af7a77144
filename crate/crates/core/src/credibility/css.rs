//! Counting CSS style definitions as a page-design effort signal.

use scraper::{Html, Selector};

/// Style rules in `<style>` blocks, plus `style="…"` attributes, plus
/// `<link rel="stylesheet">` elements.
pub fn count_css_rules(html: &str) -> usize {
    let doc = Html::parse_document(html);
    let style = Selector::parse("style").expect("static selector");
    let inline = Selector::parse("[style]").expect("static selector");
    let link = Selector::parse("link[rel]").expect("static selector");

    let blocks: usize = doc
        .select(&style)
        .map(|el| count_rule_blocks(&el.text().collect::<String>()))
        .sum();
    let inline = doc.select(&inline).count();
    let links = doc
        .select(&link)
        .filter(|el| {
            el.value().attr("rel").is_some_and(|rel| {
                rel.split_ascii_whitespace()
                    .any(|t| t.eq_ignore_ascii_case("stylesheet"))
            })
        })
        .count();
    blocks + inline + links
}

/// Counts innermost `{ … }` blocks, so `@media { a {} b {} }` is two rules.
/// Comments are skipped; unbalanced braces are tolerated.
pub fn count_rule_blocks(css: &str) -> usize {
    let bytes = css.as_bytes();
    let mut has_child: Vec<bool> = Vec::new();
    let mut rules = 0;
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'/' if bytes.get(i + 1) == Some(&b'*') => {
                i = css[i + 2..]
                    .find("*/")
                    .map_or(bytes.len(), |p| i + 2 + p + 2);
                continue;
            }
            b'{' => {
                if let Some(parent) = has_child.last_mut() {
                    *parent = true;
                }
                has_child.push(false);
            }
            b'}' => {
                if let Some(child) = has_child.pop() {
                    if !child {
                        rules += 1;
                    }
                }
            }
            _ => {}
        }
        i += 1;
    }
    rules
}
