//! Plain-text file formats: edge lists, point clouds, label and score tables.
//!
//! Floats are written with 17 significant digits so that files round-trip
//! exactly.

use std::fs;
use std::path::Path;

use crate::classify::{predict, ClassifierSolution, LabelVector};
use crate::error::{Error, Result};
use crate::graph::{PointCloud, WeightedGraph};
use crate::oos::GridCell;

/// Format with 17 significant digits; non-finite values become `nan`/`inf`/`-inf`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        let msg = if e.kind() == std::io::ErrorKind::NotFound {
            std::io::Error::new(e.kind(), "file not found")
        } else {
            e
        };
        Error::io(path.display().to_string(), msg)
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Raw contents of an edge-list file.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeList {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl EdgeList {
    pub fn to_graph(&self) -> Result<WeightedGraph> {
        WeightedGraph::from_edge_list(self.n, &self.edges)
    }
}

/// Parse `i<TAB>j<TAB>w` lines. Any whitespace separates fields. `#` starts a
/// comment, and an `n=<int>` line fixes the node count (otherwise max index + 1).
pub fn parse_edge_list(text: &str, source: &str) -> Result<EdgeList> {
    let err = |line: usize, msg: String| Error::Parse {
        path: source.to_string(),
        line,
        msg,
    };
    let mut declared = None;
    let mut edges = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(v) = line.strip_prefix("n=") {
            let n = v
                .trim()
                .parse::<usize>()
                .map_err(|_| err(line_no, format!("bad node count header `{line}`")))?;
            declared = Some(n);
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(err(line_no, format!("expected 3 fields `i j w`, found {}", fields.len())));
        }
        let idx = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| err(line_no, format!("bad node index `{s}`")))
        };
        let i = idx(fields[0])?;
        let j = idx(fields[1])?;
        let w = fields[2]
            .parse::<f64>()
            .map_err(|_| err(line_no, format!("bad weight `{}`", fields[2])))?;
        edges.push((i, j, w));
    }
    let inferred = edges.iter().map(|&(i, j, _)| i.max(j) + 1).max().unwrap_or(0);
    let n = match declared {
        Some(n) if n < inferred => {
            return Err(Error::NodeOutOfRange { index: inferred - 1, n });
        }
        Some(n) => n,
        None => inferred,
    };
    Ok(EdgeList { n, edges })
}

pub fn read_edge_list(path: &Path) -> Result<EdgeList> {
    parse_edge_list(&read_text(path)?, &path.display().to_string())
}

/// Edge list text with an `n=` header; each undirected edge once with `i <= j`.
pub fn format_edge_list(graph: &WeightedGraph) -> String {
    let mut out = format!("n={}\n", graph.n());
    for (i, j, w) in graph.edges() {
        out.push_str(&format!("{i}\t{j}\t{}\n", fmt_f64(w)));
    }
    out
}

pub fn write_edge_list(path: &Path, graph: &WeightedGraph) -> Result<()> {
    write_text(path, &format_edge_list(graph))
}

/// Points with optional labels in `{-1, 0, +1}`.
#[derive(Debug, Clone)]
pub struct PointFile {
    pub points: PointCloud,
    pub labels: Option<Vec<i8>>,
}

/// Parse a numeric CSV. A non-numeric first line is treated as a header; if its
/// last column is `label`, that column is read as labels.
pub fn parse_points(text: &str, source: &str) -> Result<PointFile> {
    let err = |line: usize, msg: String| Error::Parse {
        path: source.to_string(),
        line,
        msg,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .peekable();
    let mut has_label = false;
    if let Some(&(_, first)) = lines.peek() {
        let cols: Vec<&str> = first.split(',').map(str::trim).collect();
        if cols.iter().any(|c| c.parse::<f64>().is_err()) {
            has_label = cols.last() == Some(&"label");
            lines.next();
        }
    }
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for (k, line) in lines {
        let mut vals = line
            .split(',')
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|_| err(k + 1, format!("non-numeric field `{}`", c.trim())))
            })
            .collect::<Result<Vec<f64>>>()?;
        if *width.get_or_insert(vals.len()) != vals.len() {
            return Err(err(k + 1, format!("expected {} columns, found {}", width.unwrap(), vals.len())));
        }
        if has_label {
            let l = vals.pop().unwrap_or(f64::NAN);
            if ![-1.0, 0.0, 1.0].contains(&l) {
                return Err(err(k + 1, format!("label {l} not in {{-1, 0, 1}}")));
            }
            labels.push(l as i8);
        }
        rows.push(vals);
    }
    if rows.is_empty() {
        return Err(err(0, "no points".into()));
    }
    Ok(PointFile {
        points: PointCloud::from_rows(&rows)?,
        labels: has_label.then_some(labels),
    })
}

pub fn read_points(path: &Path) -> Result<PointFile> {
    parse_points(&read_text(path)?, &path.display().to_string())
}

pub fn format_points(points: &PointCloud, labels: Option<&[i8]>) -> String {
    let mut header: Vec<String> = (0..points.dim()).map(|d| format!("x{d}")).collect();
    if labels.is_some() {
        header.push("label".into());
    }
    let mut out = header.join(",") + "\n";
    for (i, p) in points.iter().enumerate() {
        let mut row: Vec<String> = p.iter().map(|&v| fmt_f64(v)).collect();
        if let Some(l) = labels {
            row.push(l[i].to_string());
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Parse a `node,label` table; unlisted nodes are unlabelled.
pub fn parse_labels(text: &str, source: &str, n: usize) -> Result<LabelVector> {
    let err = |line: usize, msg: String| Error::Parse {
        path: source.to_string(),
        line,
        msg,
    };
    let mut pairs = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || (k == 0 && line.starts_with("node")) {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 2 {
            return Err(err(k + 1, format!("expected `node,label`, found {} fields", f.len())));
        }
        let node = f[0]
            .parse::<usize>()
            .map_err(|_| err(k + 1, format!("bad node `{}`", f[0])))?;
        let label = f[1]
            .parse::<i8>()
            .ok()
            .filter(|l| (-1..=1).contains(l))
            .ok_or_else(|| err(k + 1, format!("label `{}` not in {{-1, 0, 1}}", f[1])))?;
        if label != 0 {
            pairs.push((node, label));
        }
    }
    LabelVector::from_labelled(n, &pairs)
}

pub fn read_labels(path: &Path, n: usize) -> Result<LabelVector> {
    parse_labels(&read_text(path)?, &path.display().to_string(), n)
}

/// `node,label` rows for labelled nodes only.
pub fn format_labels(labels: &LabelVector) -> String {
    let mut out = String::from("node,label\n");
    for i in labels.labelled() {
        out.push_str(&format!("{i},{}\n", labels.values()[i]));
    }
    out
}

pub fn format_scores(sol: &ClassifierSolution) -> String {
    let mut out = String::from("node,score,label\n");
    for (i, (s, l)) in sol.scores.iter().zip(predict(sol)).enumerate() {
        out.push_str(&format!("{i},{},{l}\n", fmt_f64(*s)));
    }
    out
}

/// Grid table `x0,x1,score,label`; out-of-range cells carry `nan` and label 0.
pub fn format_grid(cells: &[GridCell]) -> String {
    let mut out = String::from("x0,x1,score,label\n");
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(c.x0),
            fmt_f64(c.x1),
            fmt_f64(c.score.unwrap_or(f64::NAN)),
            c.label
        ));
    }
    out
}
