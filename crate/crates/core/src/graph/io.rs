use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};

/// Locations of the three dataset files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphFiles {
    pub edges: PathBuf,
    pub features: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
}

impl GraphFiles {
    /// `edges.tsv`, `features.csv` and `labels.txt` inside `dir`.
    pub fn in_dir(dir: &Path) -> Self {
        GraphFiles {
            edges: dir.join("edges.tsv"),
            features: dir.join("features.csv"),
            labels: Some(dir.join("labels.txt")),
        }
    }
}

/// Reads a graph from a tab-separated edge list, a feature CSV (header row
/// of feature names, one row per node in id order) and an optional label
/// file (one class id per line).
pub fn load_graph(edges: &Path, features: &Path, labels: Option<&Path>) -> Result<Graph> {
    let (names, matrix) = read_features(features)?;
    let node_count = matrix.nrows();
    let pairs = read_edges(edges, node_count)?;
    let labels = labels.map(|p| read_labels(p, node_count)).transpose()?;
    Graph::new(matrix, pairs, labels)?.with_feature_names(names)
}

/// Writes the graph in canonical form: edges `u<TAB>v` with `u < v` in
/// ascending order, features with shortest round-trip decimal formatting.
pub fn save_graph(graph: &Graph, files: &GraphFiles) -> Result<()> {
    let mut edges = String::new();
    for &(u, v) in graph.edges() {
        edges.push_str(&format!("{u}\t{v}\n"));
    }
    write_atomic(&files.edges, edges.as_bytes())?;

    let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
    let header: Vec<String> = (0..graph.feature_count())
        .map(|j| graph.feature_name(j))
        .collect();
    writer
        .write_record(&header)
        .map_err(|e| Error::invalid(e.to_string()))?;
    for row in graph.features().rows() {
        writer
            .write_record(row.iter().map(|x| format!("{x}")))
            .map_err(|e| Error::invalid(e.to_string()))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::invalid(e.to_string()))?;
    write_atomic(&files.features, &bytes)?;

    if let (Some(path), Some(labels)) = (&files.labels, graph.labels()) {
        let mut text = String::new();
        for label in labels {
            text.push_str(&format!("{label}\n"));
        }
        write_atomic(path, text.as_bytes())?;
    }
    Ok(())
}

/// Writes through a sibling temp file and renames it into place.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    let mut file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    file.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    file.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|e| Error::io(path, e))
}

fn read_features(path: &Path) -> Result<(Vec<String>, Array2<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(open(path)?);
    let csv_err = |e: csv::Error| {
        let line = e.position().map_or(0, |p| p.line() as usize);
        Error::Parse {
            path: path.to_path_buf(),
            line,
            message: e.to_string(),
        }
    };
    let names: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if names.is_empty() || (names.len() == 1 && names[0].is_empty()) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "missing header row".into(),
        });
    }
    let d = names.len();
    let mut values = Vec::new();
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != d {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("expected {d} fields, found {}", record.len()),
            });
        }
        for field in record.iter() {
            let x: f64 = field.trim().parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("not a number: {field:?}"),
            })?;
            values.push(x);
        }
        rows += 1;
    }
    let matrix = Array2::from_shape_vec((rows, d), values)
        .expect("row-major buffer matches the counted shape");
    Ok((names, matrix))
}

fn read_edges(path: &Path, node_count: usize) -> Result<Vec<(usize, usize)>> {
    let reader = BufReader::new(open(path)?);
    let mut pairs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        let mut fields = trimmed.split('\t');
        let (src, dst) = match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), None) => (a.trim(), b.trim()),
            _ => return Err(parse_err(format!("expected `src<TAB>dst`, found {trimmed:?}"))),
        };
        let parse_id = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| parse_err(format!("not a node id: {s:?}")))
        };
        let (u, v) = (parse_id(src)?, parse_id(dst)?);
        for id in [u, v] {
            if id >= node_count {
                return Err(Error::Bounds { id, node_count });
            }
        }
        pairs.push((u, v));
    }
    Ok(pairs)
}

fn read_labels(path: &Path, node_count: usize) -> Result<Vec<usize>> {
    let reader = BufReader::new(open(path)?);
    let mut labels = Vec::with_capacity(node_count);
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let label = trimmed.parse::<usize>().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message: format!("not a class id: {trimmed:?}"),
        })?;
        labels.push(label);
    }
    if labels.len() != node_count {
        return Err(Error::Consistency(format!(
            "{} has {} labels but the feature file has {} rows",
            path.display(),
            labels.len(),
            node_count
        )));
    }
    Ok(labels)
}
