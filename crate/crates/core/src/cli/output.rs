use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{Map, Value};

/// Pretty JSON with every float written at 17 significant digits.
struct Fixed17<'a>(PrettyFormatter<'a>);

impl Formatter for Fixed17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(float(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

/// 17 significant digits in exponent notation, e.g. `7.0710678118654746e-1`.
pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_json_string(value: &Value) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Fixed17(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf)?)
}

pub fn value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

/// The result document of one run.
pub struct Document {
    pub config: Value,
    pub results: Map<String, Value>,
    pub diagnostics: Map<String, Value>,
    /// Filled only on request, so identical configs give identical bytes.
    pub timing: Option<Map<String, Value>>,
}

impl Document {
    pub fn new(config: Value) -> Self {
        Document {
            config,
            results: Map::new(),
            diagnostics: Map::new(),
            timing: None,
        }
    }

    pub fn result(&mut self, key: &str, v: impl Serialize) {
        self.results.insert(key.into(), value(&v));
    }

    pub fn diagnostic(&mut self, key: &str, v: impl Serialize) {
        self.diagnostics.insert(key.into(), value(&v));
    }

    pub fn to_value(&self) -> Value {
        let mut top = Map::new();
        top.insert("config".into(), self.config.clone());
        top.insert("results".into(), Value::Object(self.results.clone()));
        top.insert("diagnostics".into(), Value::Object(self.diagnostics.clone()));
        top.insert("timing".into(), self.timing.clone().map_or(Value::Null, Value::Object));
        top.insert("version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
        Value::Object(top)
    }
}

/// Column-major table written as CSV.
pub struct Table {
    pub header: Vec<&'static str>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>, columns: Vec<Vec<f64>>) -> Self {
        debug_assert_eq!(header.len(), columns.len());
        Table { header, columns }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        let rows = self.columns.iter().map(Vec::len).max().unwrap_or(0);
        for i in 0..rows {
            let row: Vec<String> = self
                .columns
                .iter()
                .map(|c| c.get(i).map(|v| csv_float(*v)).unwrap_or_default())
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn csv_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        float(v)
    }
}

/// Two columns (log10 r, log10 u) separated by a space; nonpositive values
/// are skipped.
pub fn plot_data(radii: &[f64], values: &[f64]) -> String {
    let mut out = String::from("# log10(r) log10(u)\n");
    for (r, u) in radii.iter().zip(values) {
        if *r > 0.0 && *u > 0.0 {
            out.push_str(&format!("{} {}\n", float(r.log10()), float(u.log10())));
        }
    }
    out
}

pub struct Sink {
    pub dir: PathBuf,
    pub stem: String,
    pub written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(dir: &Path, stem: &str) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Sink {
            dir: dir.to_path_buf(),
            stem: stem.to_string(),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: String, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }

    pub fn json(&mut self, doc: &Document) -> Result<()> {
        let text = to_json_string(&doc.to_value())?;
        self.write(format!("{}.json", self.stem), &text)
    }

    pub fn csv(&mut self, table: &Table) -> Result<()> {
        self.write(format!("{}.csv", self.stem), &table.to_csv())
    }

    pub fn plot(&mut self, label: &str, radii: &[f64], values: &[f64]) -> Result<()> {
        self.write(format!("{}.{label}.dat", self.stem), &plot_data(radii, values))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(float(0.5f64.sqrt()), "7.0710678118654757e-1");
        assert_eq!(float(1.0), "1.0000000000000000e0");
        assert_eq!(float(0.0), "0.0000000000000000e0");
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23] {
            assert_eq!(float(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn json_is_valid_and_fixed() {
        let mut d = Document::new(serde_json::json!({ "n": 3, "s": 0.5 }));
        d.result("x", 1.0 / 3.0);
        d.result("nan", f64::NAN);
        let text = to_json_string(&d.to_value()).unwrap();
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["results"]["x"].as_f64().unwrap(), 1.0 / 3.0);
        assert!(back["results"]["nan"].is_null());
        assert!(back["timing"].is_null());
        assert!(text.contains("3.3333333333333331e-1"));
        let keys: Vec<&String> = back.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["config", "results", "diagnostics", "timing", "version"]);
    }

    #[test]
    fn csv_layout() {
        let t = Table::new(vec!["r", "u"], vec![vec![1.0, 2.0], vec![3.0, f64::NAN]]);
        assert_eq!(
            t.to_csv(),
            "r,u\n1.0000000000000000e0,3.0000000000000000e0\n2.0000000000000000e0,nan\n"
        );
    }
}
