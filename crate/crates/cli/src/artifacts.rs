//! Plot-ready CSV and JSON outputs, each stamped with its provenance.

use std::io;
use std::path::Path;

use idbm::stats::TestReport;
use serde::Serialize;

pub const VERSION: &str = concat!("idbm ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub version: &'static str,
}

impl Provenance {
    fn comment(&self) -> String {
        format!(
            "# config_hash={} seed={} version={}\n",
            self.config_hash, self.seed, self.version
        )
    }
}

/// A CSV table with a `#` provenance line above the header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: impl Into<String>, header: &[&'static str]) -> Self {
        Self {
            file: file.into(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Artifact {
    Csv(Table),
    Json { file: String, value: serde_json::Value },
}

impl Artifact {
    pub fn file(&self) -> &str {
        match self {
            Artifact::Csv(t) => &t.file,
            Artifact::Json { file, .. } => file,
        }
    }

    pub fn render(&self, prov: &Provenance) -> Vec<u8> {
        match self {
            Artifact::Csv(t) => {
                let mut out = prov.comment().into_bytes();
                let mut w = csv::Writer::from_writer(&mut out);
                w.write_record(&t.header).expect("in-memory write");
                for row in &t.rows {
                    w.write_record(row).expect("in-memory write");
                }
                w.flush().expect("in-memory write");
                drop(w);
                out
            }
            Artifact::Json { value, .. } => {
                let doc = serde_json::json!({ "provenance": prov, "data": value });
                let mut out = serde_json::to_vec_pretty(&doc).expect("json serializes");
                out.push(b'\n');
                out
            }
        }
    }
}

/// Shortest round-trip form, switching to exponent notation at the extremes.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// One report per line, provenance fields alongside.
pub fn render_reports(reports: &[TestReport], prov: &Provenance) -> Vec<u8> {
    #[derive(Serialize)]
    struct Line<'a> {
        #[serde(flatten)]
        report: &'a TestReport,
        #[serde(flatten)]
        provenance: &'a Provenance,
    }
    let mut out = Vec::new();
    for report in reports {
        serde_json::to_writer(&mut out, &Line { report, provenance: prov }).expect("report serializes");
        out.push(b'\n');
    }
    out
}

pub fn write_all(dir: &Path, files: &[(String, Vec<u8>)]) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, bytes) in files {
        std::fs::write(dir.join(name), bytes)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prov() -> Provenance {
        Provenance {
            config_hash: "abc".into(),
            seed: 7,
            version: VERSION,
        }
    }

    #[test]
    fn csv_starts_with_provenance() {
        let mut t = Table::new("x.csv", &["a", "b"]);
        t.push(vec![num(0.1), num(1e-300)]);
        let text = String::from_utf8(Artifact::Csv(t).render(&prov())).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], format!("# config_hash=abc seed=7 version={VERSION}"));
        assert_eq!(lines[1..], ["a,b", "0.1,1e-300"]);
    }

    #[test]
    fn json_wraps_data() {
        let a = Artifact::Json {
            file: "s.json".into(),
            value: serde_json::json!([1, 2]),
        };
        let v: serde_json::Value = serde_json::from_slice(&a.render(&prov())).unwrap();
        assert_eq!(v["provenance"]["seed"], 7);
        assert_eq!(v["data"][1], 2);
    }
}
