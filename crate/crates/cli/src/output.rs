//! Output plumbing: reproducibility header, JSON and CSV writers, file loading.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use archegraph::{load_edge_list, Graph};
use serde::Serialize;
use serde_json::{json, Value};

use crate::InputError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, Serialize)]
pub struct Header {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub params: Value,
}

impl Header {
    pub fn new<P: Serialize>(command: &str, seed: u64, params: &P) -> Header {
        Header {
            tool: "archegraph",
            version: VERSION,
            command: command.to_string(),
            seed,
            params: serde_json::to_value(params).expect("params serialize"),
        }
    }

    /// The header as `# key: value` comment lines.
    pub fn comment_lines(&self) -> String {
        format!(
            "# tool: {} {}\n# command: {}\n# seed: {}\n# params: {}\n",
            self.tool, self.version, self.command, self.seed, self.params
        )
    }
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(
            fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

pub fn write_json<T: Serialize>(path: Option<&Path>, header: &Header, result: &T) -> Result<()> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, &json!({ "header": header, "result": result }))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn write_csv<T: Serialize>(path: Option<&Path>, header: &Header, rows: &[T]) -> Result<()> {
    let mut w = sink(path)?;
    w.write_all(header.comment_lines().as_bytes())?;
    let mut c = csv::Writer::from_writer(w);
    for r in rows {
        c.serialize(r)?;
    }
    c.flush()?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn read_input(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(|e| InputError(format!("{e:#}")).into())
}

pub fn load_graph(path: &Path) -> Result<Graph> {
    let text = read_input(path)?;
    load_edge_list(&text).map_err(|e| InputError(format!("{}: {e}", path.display())).into())
}

pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}
