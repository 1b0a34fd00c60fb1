//! Locating `key = value` and `key="value"` spans inside metadata text.
//!
//! All spans are byte ranges `(start, len)` relative to the scanned slice.

use quick_xml::events::Event;
use quick_xml::Reader;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Found {
    pub key: String,
    pub start: usize,
    pub len: usize,
}

fn trim_span(text: &[u8], mut start: usize, mut end: usize) -> (usize, usize) {
    while start < end && text[start].is_ascii_whitespace() {
        start += 1;
    }
    while end > start && text[end - 1].is_ascii_whitespace() {
        end -= 1;
    }
    (start, end)
}

/// Scans segments delimited by any byte in `separators` for `key = value`
/// pairs whose key is one of `keys`. Whitespace around `=` is optional.
pub fn delimited_pairs(text: &[u8], separators: &[u8], keys: &[&str]) -> Vec<Found> {
    let mut out = Vec::new();
    let mut seg_start = 0;
    for i in 0..=text.len() {
        if i < text.len() && !separators.contains(&text[i]) {
            continue;
        }
        let seg = &text[seg_start..i];
        if let Some(eq) = seg.iter().position(|&b| b == b'=') {
            let (ks, ke) = trim_span(text, seg_start, seg_start + eq);
            let key = &text[ks..ke];
            if let Some(k) = keys.iter().find(|k| k.as_bytes() == key) {
                let (vs, ve) = trim_span(text, seg_start + eq + 1, i);
                if ve > vs {
                    out.push(Found {
                        key: k.to_string(),
                        start: vs,
                        len: ve - vs,
                    });
                }
            }
        }
        seg_start = i + 1;
    }
    out
}

/// Aperio-style description: `header|key = value|key = value`.
pub fn pipe_pairs(text: &[u8], keys: &[&str]) -> Vec<Found> {
    delimited_pairs(text, b"|", keys)
}

/// Line-oriented `key=value` properties.
pub fn line_pairs(text: &[u8], keys: &[&str]) -> Vec<Found> {
    delimited_pairs(text, b"\r\n\0", keys)
}

/// Raw scan for `key="value"` (or single quotes) without parsing the XML.
pub fn raw_xml_attributes(text: &[u8], keys: &[&str]) -> Vec<Found> {
    let mut out = Vec::new();
    for key in keys {
        let k = key.as_bytes();
        let mut from = 0;
        while let Some(rel) = crate::format::find(&text[from..], k) {
            let at = from + rel;
            from = at + 1;
            let boundary = at == 0 || {
                let b = text[at - 1];
                b.is_ascii_whitespace() || b == b'<'
            };
            if !boundary {
                continue;
            }
            let mut p = at + k.len();
            while p < text.len() && text[p].is_ascii_whitespace() {
                p += 1;
            }
            if text.get(p) != Some(&b'=') {
                continue;
            }
            p += 1;
            while p < text.len() && text[p].is_ascii_whitespace() {
                p += 1;
            }
            let quote = match text.get(p) {
                Some(&q @ (b'"' | b'\'')) => q,
                _ => continue,
            };
            let vs = p + 1;
            if let Some(vlen) = text[vs..].iter().position(|&b| b == quote) {
                if vlen > 0 {
                    out.push(Found {
                        key: key.to_string(),
                        start: vs,
                        len: vlen,
                    });
                }
            }
        }
    }
    out.sort_by_key(|f| f.start);
    out
}

/// Parses `text` as XML and returns the spans of attribute values whose
/// name is in `keys`. Fails on malformed markup.
pub fn xml_attributes(text: &[u8], keys: &[&str]) -> Result<Vec<Found>, String> {
    let base = text.as_ptr() as usize;
    let mut reader = Reader::from_reader(text);
    reader.config_mut().check_end_names = true;
    let mut out = Vec::new();
    let mut depth = 0i64;
    loop {
        let ev = reader.read_event().map_err(|e| e.to_string())?;
        let start = match &ev {
            Event::Start(s) => {
                depth += 1;
                Some(s)
            }
            Event::Empty(s) => Some(s),
            Event::End(_) => {
                depth -= 1;
                None
            }
            Event::Eof => break,
            _ => None,
        };
        if let Some(s) = start {
            for attr in s.attributes() {
                let attr = attr.map_err(|e| e.to_string())?;
                let name = attr.key.as_ref();
                let Some(k) = keys.iter().find(|k| k.as_bytes() == name) else {
                    continue;
                };
                let value: &[u8] = attr.value.as_ref();
                let offset = value.as_ptr() as usize;
                if value.is_empty() || offset < base || offset + value.len() > base + text.len() {
                    continue;
                }
                out.push(Found {
                    key: k.to_string(),
                    start: offset - base,
                    len: value.len(),
                });
            }
        }
    }
    if depth != 0 {
        return Err("unbalanced elements".into());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn values<'a>(text: &'a [u8], found: &[Found]) -> Vec<(&'a str, String)> {
        found
            .iter()
            .map(|f| {
                (
                    std::str::from_utf8(&text[f.start..f.start + f.len]).unwrap(),
                    f.key.clone(),
                )
            })
            .collect()
    }

    #[test]
    fn pipe_pairs_spaced_and_unspaced() {
        let t = b"Aperio Image Library v12\r\n100x100 JPEG|ScanScope ID = SS1302|Date=12/20/21|AppMag = 20|User =  m.franz |";
        let f = pipe_pairs(t, &["ScanScope ID", "Date", "User"]);
        assert_eq!(
            values(t, &f),
            vec![
                ("SS1302", "ScanScope ID".to_string()),
                ("12/20/21", "Date".to_string()),
                ("m.franz", "User".to_string()),
            ]
        );
    }

    #[test]
    fn pipe_pairs_ignore_unknown_and_empty() {
        let t = b"x|User = |Filename = a=b|Other = secret";
        let f = pipe_pairs(t, &["User", "Filename"]);
        assert_eq!(values(t, &f), vec![("a=b", "Filename".to_string())]);
    }

    #[test]
    fn line_pairs_crlf() {
        let t = b"Created=2021-05-01\r\nNDP.S/N=NDP-771\r\nUpdated = 2021-05-02\n";
        let f = line_pairs(t, &["Created", "NDP.S/N", "Updated"]);
        let v = values(t, &f);
        assert_eq!(v[0].0, "2021-05-01");
        assert_eq!(v[1].0, "NDP-771");
        assert_eq!(v[2].0, "2021-05-02");
    }

    #[test]
    fn xml_attribute_spans_match_raw_scan() {
        let t = br#"<?xml version="1.0"?><Metadata><iScan UserName="jdoe" Barcode1D="0042-77" Other="x"/><AOI BaseName = 'slide_7'/></Metadata>"#;
        let keys = ["UserName", "Barcode1D", "BaseName"];
        let parsed = xml_attributes(t, &keys).unwrap();
        let raw = raw_xml_attributes(t, &keys);
        assert_eq!(parsed, raw);
        assert_eq!(
            values(t, &parsed),
            vec![
                ("jdoe", "UserName".to_string()),
                ("0042-77", "Barcode1D".to_string()),
                ("slide_7", "BaseName".to_string()),
            ]
        );
    }

    #[test]
    fn raw_scan_respects_word_boundaries() {
        let t = br#"<a XUserName="no" UserName="yes"/>"#;
        let f = raw_xml_attributes(t, &["UserName"]);
        assert_eq!(values(t, &f), vec![("yes", "UserName".to_string())]);
    }

    #[test]
    fn malformed_xml_is_an_error() {
        assert!(xml_attributes(b"<a><b UserName=\"x\"></a>", &["UserName"]).is_err());
        assert!(xml_attributes(b"<a UserName=\"x\">", &["UserName"]).is_err());
    }
}
