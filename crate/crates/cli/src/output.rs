//! Output documents: a header block (code version, config hash, seeds,
//! config) followed by a CSV table or a JSON body.

use serde::Serialize;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, Serialize)]
pub struct Header {
    pub version: String,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub config: serde_json::Value,
}

impl Header {
    pub fn new(config: serde_json::Value, seeds: Vec<u64>) -> Self {
        let config_hash = crate::cache::sha256_hex(config.to_string().as_bytes());
        Header { version: env!("CARGO_PKG_VERSION").to_string(), config_hash, seeds, config }
    }

    fn csv_block(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# gll {}", self.version);
        let _ = writeln!(s, "# config-hash: {}", self.config_hash);
        let seeds: Vec<String> = self.seeds.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(s, "# seeds: {}", seeds.join(","));
        let _ = writeln!(s, "# config: {}", self.config);
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: vec![] }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Clone, Debug)]
pub enum Body {
    Csv(Table),
    Json(serde_json::Value),
}

#[derive(Clone, Debug)]
pub struct Document {
    /// File stem, e.g. `pants-table` or `volume-bound-closings`.
    pub name: String,
    pub body: Body,
}

/// Decimal with at most 15 significant digits.
pub fn num(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let y: f64 = format!("{x:.14e}").parse().unwrap_or(x);
    let a = y.abs();
    if y == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{y}")
    } else {
        format!("{y:e}")
    }
}

pub fn render(header: &Header, doc: &Document) -> io::Result<Vec<u8>> {
    match &doc.body {
        Body::Csv(t) => {
            let mut out = header.csv_block().into_bytes();
            {
                let mut w = csv::Writer::from_writer(&mut out);
                w.write_record(&t.columns)?;
                for r in &t.rows {
                    w.write_record(r)?;
                }
                w.flush()?;
            }
            Ok(out)
        }
        Body::Json(v) => {
            // a struct keeps the header ahead of the body
            #[derive(Serialize)]
            struct Doc<'a> {
                header: &'a Header,
                body: &'a serde_json::Value,
            }
            let mut out = serde_json::to_vec_pretty(&Doc { header, body: v })?;
            out.push(b'\n');
            Ok(out)
        }
    }
}

/// The part of a rendered document after its header block.
pub fn body_bytes(rendered: &[u8]) -> &[u8] {
    if rendered.starts_with(b"{") {
        // JSON: everything from the body key on
        let needle = b"\"body\"";
        match rendered.windows(needle.len()).position(|w| w == needle) {
            Some(i) => &rendered[i..],
            None => rendered,
        }
    } else {
        let mut i = 0;
        while rendered[i..].starts_with(b"#") {
            match rendered[i..].iter().position(|&b| b == b'\n') {
                Some(j) => i += j + 1,
                None => return &[],
            }
        }
        &rendered[i..]
    }
}

pub fn extension(doc: &Document) -> &'static str {
    match doc.body {
        Body::Csv(_) => "csv",
        Body::Json(_) => "json",
    }
}

/// Write documents into `dir`, or to `stdout` when no directory is given.
pub fn emit(header: &Header, docs: &[Document], dir: Option<&Path>, stdout: &mut dyn Write) -> io::Result<Vec<String>> {
    let mut written = Vec::new();
    for doc in docs {
        let bytes = render(header, doc)?;
        match dir {
            Some(d) => {
                std::fs::create_dir_all(d)?;
                let p = d.join(format!("{}.{}", doc.name, extension(doc)));
                std::fs::write(&p, &bytes)?;
                written.push(p.display().to_string());
            }
            None => {
                stdout.write_all(&bytes)?;
            }
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_digits() {
        assert_eq!(num(1.5), "1.5");
        assert_eq!(num(0.1 + 0.2), "0.3");
        assert_eq!(num(std::f64::consts::PI), "3.14159265358979");
        assert_eq!(num(1.0e-9), "1e-9");
        assert_eq!(num(-2.5e20), "-2.5e20");
        assert_eq!(num(0.0), "0");
        for x in [std::f64::consts::E, 1.0 / 3.0, 12345.678901234567, 3.3e-7] {
            let back: f64 = num(x).parse().unwrap();
            assert!(((back - x) / x).abs() < 1e-14);
        }
    }

    #[test]
    fn header_and_body_split() {
        let h = Header::new(serde_json::json!({"a": 1}), vec![1, 2]);
        let mut t = Table::new(&["x", "y"]);
        t.push(vec!["1".into(), "2".into()]);
        let doc = Document { name: "t".into(), body: Body::Csv(t) };
        let r = render(&h, &doc).unwrap();
        let text = String::from_utf8(r.clone()).unwrap();
        assert!(text.starts_with("# gll "));
        assert!(text.contains("# seeds: 1,2\n"));
        assert_eq!(body_bytes(&r), b"x,y\n1,2\n");
        let j = render(&h, &Document { name: "t".into(), body: Body::Json(serde_json::json!([1])) }).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&j).unwrap();
        assert_eq!(v["header"]["config_hash"], h.config_hash);
        assert!(body_bytes(&j).starts_with(b"\"body\""));
    }
}
