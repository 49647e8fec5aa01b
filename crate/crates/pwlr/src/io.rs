//! TU Dortmund benchmark text format: parsing, serialization, feature
//! encoding, and distance-weight preprocessing.
//!
//! A dataset `NAME` in directory `root` consists of:
//! - `NAME_A.txt` (required): one directed edge `i, j` per line, 1-indexed
//!   global node ids; undirected edges normally appear in both directions.
//! - `NAME_graph_indicator.txt` (required): for node line `n`, the 1-indexed
//!   graph it belongs to.
//! - `NAME_graph_labels.txt` (optional): one class label per graph.
//! - `NAME_node_labels.txt` (optional): one integer label per node.
//! - `NAME_node_attributes.txt` (optional): comma-separated reals per node.
//! - `NAME_edge_attributes.txt` (optional): comma-separated reals per edge
//!   line; a single column is interpreted as the edge weight.
//!
//! Whitespace around commas is tolerated everywhere.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use thiserror::Error;

use crate::diffusion::FeatureMatrix;
use crate::graph::{Edge, Graph, GraphDataset, GraphError};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("missing required file {}", path.display())]
    MissingFile { path: PathBuf },
    #[error("{file}:{line}: {msg}")]
    Parse { file: String, line: usize, msg: String },
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("validation: {0}")]
    Validation(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Which node features to encode into the initial feature matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMode {
    Discrete,
    Continuous,
    Both,
}

impl std::fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FeatureMode::Discrete => write!(f, "discrete"),
            FeatureMode::Continuous => write!(f, "continuous"),
            FeatureMode::Both => write!(f, "both"),
        }
    }
}

impl std::str::FromStr for FeatureMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "discrete" => Ok(FeatureMode::Discrete),
            "continuous" => Ok(FeatureMode::Continuous),
            "both" => Ok(FeatureMode::Both),
            other => Err(format!(
                "unknown feature mode '{other}' (expected discrete, continuous, or both)"
            )),
        }
    }
}

fn read_lines(path: &Path, required: bool) -> Result<Option<Vec<String>>, DatasetError> {
    match fs::read_to_string(path) {
        Ok(text) => Ok(Some(
            text.lines()
                .map(|l| l.trim().to_string())
                .filter(|l| !l.is_empty())
                .collect(),
        )),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            if required {
                Err(DatasetError::MissingFile { path: path.to_path_buf() })
            } else {
                Ok(None)
            }
        }
        Err(e) => Err(DatasetError::Io { path: path.to_path_buf(), source: e }),
    }
}

fn parse_int(file: &str, line: usize, field: &str) -> Result<i64, DatasetError> {
    field.trim().parse::<i64>().map_err(|_| DatasetError::Parse {
        file: file.to_string(),
        line,
        msg: format!("non-numeric field '{}'", field.trim()),
    })
}

fn parse_real(file: &str, line: usize, field: &str) -> Result<f64, DatasetError> {
    field.trim().parse::<f64>().map_err(|_| DatasetError::Parse {
        file: file.to_string(),
        line,
        msg: format!("non-numeric field '{}'", field.trim()),
    })
}

struct EdgeDraft {
    weight: f64,
    attrs: Option<Vec<f64>>,
}

/// Parses a TU-format dataset from `root`, remapping 1-indexed global node
/// ids to per-graph 0-indexed nodes and collapsing the two directed listings
/// of each undirected edge into one. A single-column `_edge_attributes.txt`
/// supplies edge weights; wider attribute rows are carried unused. When the
/// two directions of an edge disagree on attributes, the first occurrence
/// wins and a warning is logged.
pub fn parse_tu_dataset(root: &Path, name: &str) -> Result<GraphDataset, DatasetError> {
    let file = |suffix: &str| root.join(format!("{name}_{suffix}.txt"));

    let indicator_path = file("graph_indicator");
    let indicator_file = indicator_path.to_string_lossy().to_string();
    let indicator = read_lines(&indicator_path, true)?.expect("required");
    let a_path = file("A");
    let a_file = a_path.to_string_lossy().to_string();
    let a_lines = read_lines(&a_path, true)?.expect("required");

    // Node -> graph assignment and per-graph local indices, in file order.
    let mut graph_of_node: Vec<usize> = Vec::with_capacity(indicator.len());
    let mut graph_count = 0usize;
    for (i, line) in indicator.iter().enumerate() {
        let gid = parse_int(&indicator_file, i + 1, line)?;
        if gid < 1 {
            return Err(DatasetError::Parse {
                file: indicator_file.clone(),
                line: i + 1,
                msg: format!("graph id {gid} out of range (ids are 1-indexed)"),
            });
        }
        let gid = gid as usize;
        graph_count = graph_count.max(gid);
        graph_of_node.push(gid - 1);
    }
    let node_total = graph_of_node.len();
    let mut local_index: Vec<usize> = vec![0; node_total];
    let mut node_counts: Vec<usize> = vec![0; graph_count];
    for (node, &g) in graph_of_node.iter().enumerate() {
        local_index[node] = node_counts[g];
        node_counts[g] += 1;
    }

    // Optional per-edge attribute rows, parallel to _A.txt lines.
    let attr_path = file("edge_attributes");
    let attr_file = attr_path.to_string_lossy().to_string();
    let edge_attr_lines = read_lines(&attr_path, false)?;
    let mut edge_attr_width = 0usize;
    if let Some(lines) = &edge_attr_lines {
        if lines.len() != a_lines.len() {
            return Err(DatasetError::Validation(format!(
                "{} has {} rows but {} has {} edges",
                attr_file,
                lines.len(),
                a_file,
                a_lines.len()
            )));
        }
    }

    // Collapse directed pairs into canonical undirected edges per graph.
    let mut drafts: Vec<BTreeMap<(usize, usize), EdgeDraft>> =
        (0..graph_count).map(|_| BTreeMap::new()).collect();
    for (i, line) in a_lines.iter().enumerate() {
        let lineno = i + 1;
        let mut parts = line.split(',');
        let (raw_i, raw_j) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(DatasetError::Parse {
                    file: a_file.clone(),
                    line: lineno,
                    msg: format!("expected 'i, j', got '{line}'"),
                })
            }
        };
        let gi = parse_int(&a_file, lineno, raw_i)?;
        let gj = parse_int(&a_file, lineno, raw_j)?;
        if gi < 1 || gj < 1 || gi as usize > node_total || gj as usize > node_total {
            return Err(DatasetError::Parse {
                file: a_file.clone(),
                line: lineno,
                msg: format!("node id out of range 1..={node_total} in '{line}'"),
            });
        }
        let (ni, nj) = (gi as usize - 1, gj as usize - 1);
        if ni == nj {
            return Err(DatasetError::Parse {
                file: a_file.clone(),
                line: lineno,
                msg: format!("self-loop on node {gi}"),
            });
        }
        if graph_of_node[ni] != graph_of_node[nj] {
            return Err(DatasetError::Parse {
                file: a_file.clone(),
                line: lineno,
                msg: format!("edge '{line}' joins nodes of different graphs"),
            });
        }
        let g = graph_of_node[ni];
        let (u, v) = {
            let (a, b) = (local_index[ni], local_index[nj]);
            if a < b { (a, b) } else { (b, a) }
        };

        let (weight, attrs) = match &edge_attr_lines {
            None => (1.0, None),
            Some(lines) => {
                let fields: Vec<&str> = lines[i].split(',').collect();
                if edge_attr_width == 0 {
                    edge_attr_width = fields.len();
                } else if fields.len() != edge_attr_width {
                    return Err(DatasetError::Validation(format!(
                        "{attr_file}:{lineno}: attribute width {} differs from {}",
                        fields.len(),
                        edge_attr_width
                    )));
                }
                let values: Vec<f64> = fields
                    .iter()
                    .map(|f| parse_real(&attr_file, lineno, f))
                    .collect::<Result<_, _>>()?;
                if edge_attr_width == 1 {
                    (values[0], None)
                } else {
                    (1.0, Some(values))
                }
            }
        };

        match drafts[g].entry((u, v)) {
            std::collections::btree_map::Entry::Vacant(slot) => {
                slot.insert(EdgeDraft { weight, attrs });
            }
            std::collections::btree_map::Entry::Occupied(existing) => {
                let prev = existing.get();
                let same = prev.weight == weight && prev.attrs == attrs;
                if !same {
                    log::warn!(
                        "{a_file}:{lineno}: duplicate edge ({gi}, {gj}) with differing \
                         attributes; keeping the first occurrence"
                    );
                }
            }
        }
    }

    // Optional per-node labels and attributes.
    let label_path = file("node_labels");
    let label_file = label_path.to_string_lossy().to_string();
    let node_labels: Option<Vec<i64>> = match read_lines(&label_path, false)? {
        None => None,
        Some(lines) => {
            if lines.len() != node_total {
                return Err(DatasetError::Validation(format!(
                    "{} has {} rows but {} nodes exist",
                    label_file,
                    lines.len(),
                    node_total
                )));
            }
            Some(
                lines
                    .iter()
                    .enumerate()
                    .map(|(i, l)| parse_int(&label_file, i + 1, l))
                    .collect::<Result<_, _>>()?,
            )
        }
    };

    let nattr_path = file("node_attributes");
    let nattr_file = nattr_path.to_string_lossy().to_string();
    let node_attrs: Option<Vec<Vec<f64>>> = match read_lines(&nattr_path, false)? {
        None => None,
        Some(lines) => {
            if lines.len() != node_total {
                return Err(DatasetError::Validation(format!(
                    "{} has {} rows but {} nodes exist",
                    nattr_file,
                    lines.len(),
                    node_total
                )));
            }
            let mut rows = Vec::with_capacity(lines.len());
            let mut width: Option<usize> = None;
            for (i, l) in lines.iter().enumerate() {
                let row: Vec<f64> = l
                    .split(',')
                    .map(|f| parse_real(&nattr_file, i + 1, f))
                    .collect::<Result<_, _>>()?;
                match width {
                    None => width = Some(row.len()),
                    Some(w) if w != row.len() => {
                        return Err(DatasetError::Validation(format!(
                            "{}:{}: attribute width {} differs from {}",
                            nattr_file,
                            i + 1,
                            row.len(),
                            w
                        )))
                    }
                    _ => {}
                }
                rows.push(row);
            }
            Some(rows)
        }
    };

    let glabel_path = file("graph_labels");
    let glabel_file = glabel_path.to_string_lossy().to_string();
    let graph_labels: Vec<i64> = match read_lines(&glabel_path, false)? {
        None => vec![0; graph_count],
        Some(lines) => {
            if lines.len() != graph_count {
                return Err(DatasetError::Validation(format!(
                    "{} has {} rows but {} graphs exist",
                    glabel_file,
                    lines.len(),
                    graph_count
                )));
            }
            lines
                .iter()
                .enumerate()
                .map(|(i, l)| parse_int(&glabel_file, i + 1, l))
                .collect::<Result<_, _>>()?
        }
    };

    // Assemble per-graph structures.
    let mut per_graph_nodes: Vec<Vec<usize>> = vec![Vec::new(); graph_count];
    for (node, &g) in graph_of_node.iter().enumerate() {
        per_graph_nodes[g].push(node);
    }
    let mut graphs = Vec::with_capacity(graph_count);
    for g in 0..graph_count {
        let draft = std::mem::take(&mut drafts[g]);
        let mut edges = Vec::with_capacity(draft.len());
        let mut attrs: Vec<Vec<f64>> = Vec::new();
        let mut any_attrs = false;
        for ((u, v), d) in draft {
            edges.push(Edge { u, v, weight: d.weight });
            if let Some(a) = d.attrs {
                any_attrs = true;
                attrs.push(a);
            } else {
                attrs.push(Vec::new());
            }
        }
        let mut graph = Graph::new(node_counts[g], edges)?;
        if any_attrs {
            graph = graph.with_edge_attrs(attrs)?;
        }
        if let Some(labels) = &node_labels {
            graph = graph
                .with_discrete_labels(per_graph_nodes[g].iter().map(|&n| labels[n]).collect())?;
        }
        if let Some(rows) = &node_attrs {
            graph = graph
                .with_continuous_attrs(per_graph_nodes[g].iter().map(|&n| rows[n].clone()).collect())?;
        }
        graphs.push(graph.with_label(graph_labels[g]));
    }

    Ok(GraphDataset::new(name, graphs)?)
}

fn format_real(x: f64) -> String {
    // 17 significant digits: lossless f64 round-trip in decimal.
    format!("{x:.16e}")
}

/// Serializes a dataset back to the TU text format. Each undirected edge is
/// written in both directions, graphs in order, nodes renumbered globally
/// from 1. Parsing the result reproduces the dataset exactly.
pub fn write_tu_dataset(ds: &GraphDataset, root: &Path) -> Result<(), DatasetError> {
    let write = |suffix: &str, contents: String| -> Result<(), DatasetError> {
        let path = root.join(format!("{}_{}.txt", ds.name(), suffix));
        fs::write(&path, contents).map_err(|e| DatasetError::Io { path, source: e })
    };

    let mut indicator = String::new();
    let mut a = String::new();
    let mut edge_attrs = String::new();
    let mut node_labels = String::new();
    let mut node_attrs = String::new();
    let mut graph_labels = String::new();
    let mut any_edge_attr = false;
    let mut any_nondefault_weight = false;

    let mut base = 0usize;
    for (gi, g) in ds.graphs().iter().enumerate() {
        for local in 0..g.node_count() {
            let _ = writeln!(indicator, "{}", gi + 1);
            if let Some(labels) = g.discrete_labels() {
                let _ = writeln!(node_labels, "{}", labels[local]);
            }
            if let Some(attrs) = g.continuous_attrs() {
                let row: Vec<String> = attrs[local].iter().map(|&x| format_real(x)).collect();
                let _ = writeln!(node_attrs, "{}", row.join(", "));
            }
        }
        for (idx, e) in g.edges().iter().enumerate() {
            let (gu, gv) = (base + e.u + 1, base + e.v + 1);
            let _ = writeln!(a, "{gu}, {gv}");
            let _ = writeln!(a, "{gv}, {gu}");
            if e.weight != 1.0 {
                any_nondefault_weight = true;
            }
            match g.edge_attrs() {
                Some(rows) if !rows[idx].is_empty() => {
                    any_edge_attr = true;
                    let row: Vec<String> = rows[idx].iter().map(|&x| format_real(x)).collect();
                    let line = row.join(", ");
                    let _ = writeln!(edge_attrs, "{line}");
                    let _ = writeln!(edge_attrs, "{line}");
                }
                _ => {
                    let line = format_real(e.weight);
                    let _ = writeln!(edge_attrs, "{line}");
                    let _ = writeln!(edge_attrs, "{line}");
                }
            }
        }
        let _ = writeln!(graph_labels, "{}", g.graph_label());
        base += g.node_count();
    }

    write("A", a)?;
    write("graph_indicator", indicator)?;
    write("graph_labels", graph_labels)?;
    if ds.graphs().iter().any(|g| g.discrete_labels().is_some()) {
        write("node_labels", node_labels)?;
    }
    if ds.attr_width() > 0 {
        write("node_attributes", node_attrs)?;
    }
    if any_edge_attr || any_nondefault_weight {
        write("edge_attributes", edge_attrs)?;
    }
    Ok(())
}

/// Encodes initial node features for every graph: one-hot rows over the
/// dataset-global label vocabulary, raw continuous attributes, or their
/// column-wise concatenation `[one-hot | attributes]`. Node-major output.
pub fn encode_features(
    ds: &GraphDataset,
    mode: FeatureMode,
) -> Result<Vec<FeatureMatrix>, DatasetError> {
    let want_discrete = matches!(mode, FeatureMode::Discrete | FeatureMode::Both);
    let want_continuous = matches!(mode, FeatureMode::Continuous | FeatureMode::Both);
    if want_discrete && ds.label_vocabulary().is_empty() {
        return Err(DatasetError::Validation(format!(
            "feature mode '{mode}' requested but dataset '{}' has no discrete node labels",
            ds.name()
        )));
    }
    if want_continuous && ds.attr_width() == 0 {
        return Err(DatasetError::Validation(format!(
            "feature mode '{mode}' requested but dataset '{}' has no continuous node attributes",
            ds.name()
        )));
    }
    let vocab = ds.label_vocabulary();
    let onehot_width = if want_discrete { vocab.len() } else { 0 };
    let attr_width = if want_continuous { ds.attr_width() } else { 0 };
    let width = onehot_width + attr_width;

    let mut out = Vec::with_capacity(ds.len());
    for g in ds.graphs() {
        let mut x = Array2::<f64>::zeros((g.node_count(), width));
        if want_discrete {
            let labels = g.discrete_labels().expect("dataset guarantees labels");
            for (node, &label) in labels.iter().enumerate() {
                let col = vocab
                    .binary_search(&label)
                    .expect("vocabulary is the union of labels");
                x[(node, col)] = 1.0;
            }
        }
        if want_continuous {
            let attrs = g.continuous_attrs().expect("dataset guarantees attributes");
            for (node, row) in attrs.iter().enumerate() {
                for (j, &val) in row.iter().enumerate() {
                    x[(node, onehot_width + j)] = val;
                }
            }
        }
        out.push(FeatureMatrix::node_major(x));
    }
    Ok(out)
}

/// Distance-weight preprocessing for datasets whose edge "weights" are raw
/// distances: drops edges with weight exactly 0 (disconnected endpoints) and
/// replaces each remaining weight by its reciprocal, so closer endpoints
/// couple more strongly. Runs before any degree computation by construction,
/// since the returned graph simply does not contain the dropped edges.
pub fn preprocess_md(g: &Graph) -> Graph {
    let mut edges = Vec::with_capacity(g.edge_count());
    let mut attrs = Vec::new();
    for (idx, e) in g.edges().iter().enumerate() {
        if e.weight == 0.0 {
            continue;
        }
        edges.push(Edge { u: e.u, v: e.v, weight: 1.0 / e.weight });
        if let Some(rows) = g.edge_attrs() {
            attrs.push(rows[idx].clone());
        }
    }
    let mut out = Graph::new(g.node_count(), edges).expect("filtered edges stay valid");
    if g.edge_attrs().is_some() {
        out = out.with_edge_attrs(attrs).expect("attr rows stay aligned");
    }
    if let Some(labels) = g.discrete_labels() {
        out = out.with_discrete_labels(labels.to_vec()).expect("unchanged");
    }
    if let Some(a) = g.continuous_attrs() {
        out = out.with_continuous_attrs(a.to_vec()).expect("unchanged");
    }
    out.with_label(g.graph_label())
}
