//! Minimal WARC reader: `response` and `resource` records only.

use super::RawDocument;

type Record = Result<RawDocument, String>;

/// Splits a WARC file into document records.
///
/// A structurally broken file (bad version line, truncated block) is an
/// error carrying the 1-based record number. Records lacking the fields a
/// document needs are returned as per-record rejections.
pub(crate) fn parse_records(bytes: &[u8]) -> Result<Vec<Record>, (usize, String)> {
    let mut out = Vec::new();
    let mut pos = 0;
    let mut n = 0;
    while pos < bytes.len() {
        // skip inter-record CRLFs
        while pos < bytes.len() && (bytes[pos] == b'\r' || bytes[pos] == b'\n') {
            pos += 1;
        }
        if pos >= bytes.len() {
            break;
        }
        n += 1;
        let (headers, body_start) =
            read_headers(bytes, pos).ok_or((n, "truncated WARC header".to_string()))?;
        let version = headers.first().map(|(k, _)| k.as_str()).unwrap_or_default();
        if !version.starts_with("WARC/") {
            return Err((n, format!("expected WARC version line, found {version:?}")));
        }
        let get = |name: &str| {
            headers
                .iter()
                .find(|(k, _)| k.eq_ignore_ascii_case(name))
                .map(|(_, v)| v.clone())
        };
        let len: usize = get("Content-Length")
            .and_then(|v| v.parse().ok())
            .ok_or((n, "missing Content-Length".to_string()))?;
        let end = body_start + len;
        if end > bytes.len() {
            return Err((n, "truncated WARC block".to_string()));
        }
        let block = &bytes[body_start..end];
        pos = end;

        let kind = get("WARC-Type").unwrap_or_default().to_ascii_lowercase();
        if kind != "response" && kind != "resource" {
            n -= 1;
            continue;
        }
        let doc_id = get("WARC-TREC-ID").or_else(|| {
            get("WARC-Record-ID").map(|id| {
                id.trim_start_matches('<')
                    .trim_end_matches('>')
                    .trim_start_matches("urn:uuid:")
                    .to_string()
            })
        });
        let payload = if kind == "response" {
            strip_http_headers(block)
        } else {
            block
        };
        out.push(Ok(RawDocument {
            doc_id,
            url: get("WARC-Target-URI"),
            title: None,
            html: Some(String::from_utf8_lossy(payload).into_owned()),
        }));
    }
    Ok(out)
}

/// Returns header lines (the first entry holds the version line as key) and
/// the offset just past the blank line.
fn read_headers(bytes: &[u8], mut pos: usize) -> Option<(Vec<(String, String)>, usize)> {
    let mut headers = Vec::new();
    loop {
        let rel = bytes[pos..].iter().position(|&b| b == b'\n')?;
        let line = String::from_utf8_lossy(&bytes[pos..pos + rel]);
        let line = line.trim_end_matches('\r');
        pos += rel + 1;
        if line.is_empty() {
            return Some((headers, pos));
        }
        if headers.is_empty() {
            headers.push((line.to_string(), String::new()));
        } else if let Some((k, v)) = line.split_once(':') {
            headers.push((k.trim().to_string(), v.trim().to_string()));
        }
    }
}

fn strip_http_headers(block: &[u8]) -> &[u8] {
    if !block.starts_with(b"HTTP/") {
        return block;
    }
    let crlf = block
        .windows(4)
        .position(|w| w == b"\r\n\r\n")
        .map(|i| i + 4);
    let lf = block.windows(2).position(|w| w == b"\n\n").map(|i| i + 2);
    match (crlf, lf) {
        (Some(a), Some(b)) => &block[a.min(b)..],
        (Some(a), None) | (None, Some(a)) => &block[a..],
        (None, None) => &[],
    }
}
