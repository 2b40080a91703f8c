//! Interchange of datasets, explanations, lens vectors, graphs, diagrams and
//! distance matrices.
//!
//! Tables are plain comma-separated files with a mandatory header row.
//! Numbers are written in the shortest decimal form that parses back to the
//! identical `f64`, so every save/load cycle is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagdist::DistanceMatrix;
use crate::error::{GaleError, Result};
use crate::mapper::{MapperGraph, MapperNode};
use crate::matrix::Matrix;
use crate::persistence::PersistenceDiagram;

/// Row `i` is the local explanation of observation `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplanationMatrix {
    values: Matrix,
    column_names: Vec<String>,
}

impl ExplanationMatrix {
    pub fn new(values: Matrix, column_names: Vec<String>) -> Result<Self> {
        if values.rows() < 2 {
            return Err(GaleError::Data(format!(
                "explanation matrix needs at least 2 rows, got {}",
                values.rows()
            )));
        }
        if values.cols() < 1 {
            return Err(GaleError::Data("explanation matrix has no columns".into()));
        }
        if column_names.len() != values.cols() {
            return Err(GaleError::Shape(format!(
                "{} column names for {} columns",
                column_names.len(),
                values.cols()
            )));
        }
        if !values.all_finite() {
            return Err(GaleError::Data("explanation matrix has non-finite entries".into()));
        }
        Ok(ExplanationMatrix {
            values,
            column_names,
        })
    }

    /// Columns named `e0`, `e1`, ...
    pub fn with_default_names(values: Matrix) -> Result<Self> {
        let names = (0..values.cols()).map(|j| format!("e{j}")).collect();
        Self::new(values, names)
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn n(&self) -> usize {
        self.values.rows()
    }

    pub fn d(&self) -> usize {
        self.values.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }
}

/// Predicted class-1 probabilities, index-aligned with an explanation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LensVector(Vec<f64>);

impl LensVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (i, &v) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(GaleError::Range { row: i + 1, value: v });
            }
        }
        Ok(LensVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn select(&self, idx: &[usize]) -> LensVector {
        LensVector(idx.iter().map(|&i| self.0[i]).collect())
    }

    /// Fails when the lens cannot be paired with `e` row for row.
    pub fn check_paired(&self, e: &ExplanationMatrix) -> Result<()> {
        if self.len() != e.n() {
            return Err(GaleError::Shape(format!(
                "lens has {} values but explanation matrix has {} rows",
                self.len(),
                e.n()
            )));
        }
        Ok(())
    }
}

/// Feature matrix with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub x: Matrix,
    pub y: Vec<u8>,
    pub feature_names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(x: Matrix, y: Vec<u8>, feature_names: Vec<String>) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(GaleError::Shape(format!(
                "{} feature rows but {} labels",
                x.rows(),
                y.len()
            )));
        }
        if feature_names.len() != x.cols() {
            return Err(GaleError::Shape(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                x.cols()
            )));
        }
        if !x.all_finite() {
            return Err(GaleError::Data("dataset has non-finite features".into()));
        }
        if let Some(bad) = y.iter().find(|&&v| v > 1) {
            return Err(GaleError::Data(format!("label {bad} is not binary")));
        }
        Ok(LabeledDataset { x, y, feature_names })
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn d(&self) -> usize {
        self.x.cols()
    }

    /// Classifiers need both classes; generators may legitimately produce one.
    pub fn require_both_classes(&self) -> Result<()> {
        let pos = self.y.iter().filter(|&&v| v == 1).count();
        if pos == 0 || pos == self.y.len() {
            return Err(GaleError::Data("dataset contains a single class".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    Explanations,
    Lens,
    Dataset,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Table {
    Explanations(ExplanationMatrix),
    Lens(LensVector),
    Dataset(LabeledDataset),
}

/// Formats a number so that parsing it back yields the identical `f64`.
pub fn fmt_num(v: f64) -> String {
    format!("{v:?}")
}

struct RawTable {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

fn read_raw(path: &Path) -> Result<RawTable> {
    let text = fs::read_to_string(path).map_err(|e| GaleError::io(path, e))?;
    parse_raw(&text)
}

fn parse_raw(text: &str) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| GaleError::Format(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(GaleError::Format("missing header row".into()));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| GaleError::Parse {
            row: i + 1,
            column: 0,
            message: e.to_string(),
        })?;
        if rec.len() != header.len() {
            return Err(GaleError::Parse {
                row: i + 1,
                column: rec.len(),
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        let row = rec
            .iter()
            .enumerate()
            .map(|(j, s)| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| GaleError::Parse {
                        row: i + 1,
                        column: j + 1,
                        message: format!("'{s}' is not a finite number"),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(RawTable { header, rows })
}

fn explanations_from_raw(raw: RawTable) -> Result<ExplanationMatrix> {
    let m = Matrix::from_rows(&raw.rows)?;
    let m = if raw.rows.is_empty() {
        Matrix::zeros(0, raw.header.len())
    } else {
        m
    };
    ExplanationMatrix::new(m, raw.header)
}

fn lens_from_raw(raw: RawTable) -> Result<LensVector> {
    if raw.header.len() != 1 {
        return Err(GaleError::Format(format!(
            "lens file must have exactly one column, found {}",
            raw.header.len()
        )));
    }
    LensVector::new(raw.rows.into_iter().map(|r| r[0]).collect())
}

fn dataset_from_raw(raw: RawTable) -> Result<LabeledDataset> {
    if raw.header.len() < 2 {
        return Err(GaleError::Format(
            "dataset needs at least one feature column and a label column".into(),
        ));
    }
    let label_col = raw
        .header
        .iter()
        .position(|h| h == "y" || h == "label")
        .unwrap_or(raw.header.len() - 1);
    let mut y = Vec::with_capacity(raw.rows.len());
    let mut feats = Vec::with_capacity(raw.rows.len());
    for (i, r) in raw.rows.iter().enumerate() {
        let v = r[label_col];
        y.push(match v {
            v if v == 0.0 => 0,
            v if v == 1.0 => 1,
            _ => {
                return Err(GaleError::Parse {
                    row: i + 1,
                    column: label_col + 1,
                    message: format!("label {v} is not 0 or 1"),
                })
            }
        });
        feats.push(
            r.iter()
                .enumerate()
                .filter(|&(j, _)| j != label_col)
                .map(|(_, &v)| v)
                .collect::<Vec<_>>(),
        );
    }
    let names: Vec<String> = raw
        .header
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != label_col)
        .map(|(_, h)| h.clone())
        .collect();
    let x = if feats.is_empty() {
        Matrix::zeros(0, names.len())
    } else {
        Matrix::from_rows(&feats)?
    };
    LabeledDataset::new(x, y, names)
}

pub fn load_table(path: &Path, kind: TableKind) -> Result<Table> {
    let raw = read_raw(path)?;
    Ok(match kind {
        TableKind::Explanations => Table::Explanations(explanations_from_raw(raw)?),
        TableKind::Lens => Table::Lens(lens_from_raw(raw)?),
        TableKind::Dataset => Table::Dataset(dataset_from_raw(raw)?),
    })
}

pub fn load_explanations(path: &Path) -> Result<ExplanationMatrix> {
    explanations_from_raw(read_raw(path)?)
}

pub fn load_lens(path: &Path) -> Result<LensVector> {
    lens_from_raw(read_raw(path)?)
}

pub fn load_dataset(path: &Path) -> Result<LabeledDataset> {
    dataset_from_raw(read_raw(path)?)
}

pub fn parse_explanations(text: &str) -> Result<ExplanationMatrix> {
    explanations_from_raw(parse_raw(text)?)
}

pub fn parse_lens(text: &str) -> Result<LensVector> {
    lens_from_raw(parse_raw(text)?)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| GaleError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| GaleError::io(path, e))
}

fn matrix_csv(header: &[String], m: &Matrix) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in m.row_iter() {
        let line: Vec<String> = r.iter().map(|&v| fmt_num(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn explanations_to_csv(e: &ExplanationMatrix) -> String {
    matrix_csv(e.column_names(), e.values())
}

pub fn save_explanations(e: &ExplanationMatrix, path: &Path) -> Result<()> {
    write_text(path, &explanations_to_csv(e))
}

pub fn lens_to_csv(lens: &LensVector) -> String {
    let mut out = String::from("p\n");
    for &v in lens.values() {
        out.push_str(&fmt_num(v));
        out.push('\n');
    }
    out
}

pub fn save_lens(lens: &LensVector, path: &Path) -> Result<()> {
    write_text(path, &lens_to_csv(lens))
}

pub fn dataset_to_csv(ds: &LabeledDataset) -> String {
    let mut out = ds.feature_names.join(",");
    out.push_str(",y\n");
    for (r, y) in ds.x.row_iter().zip(&ds.y) {
        for v in r {
            out.push_str(&fmt_num(*v));
            out.push(',');
        }
        let _ = writeln!(out, "{y}");
    }
    out
}

pub fn save_dataset(ds: &LabeledDataset, path: &Path) -> Result<()> {
    write_text(path, &dataset_to_csv(ds))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    Json,
    Dot,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    nodes: Vec<MapperNode>,
    edges: Vec<[usize; 2]>,
}

pub fn graph_to_json(g: &MapperGraph) -> String {
    let mut nodes = g.nodes().to_vec();
    nodes.sort_by_key(|n| n.id);
    let mut edges: Vec<[usize; 2]> = g
        .edges()
        .iter()
        .map(|&(u, v)| [u.min(v), u.max(v)])
        .collect();
    edges.sort_unstable();
    serde_json::to_string(&GraphFile { nodes, edges }).expect("graph serializes")
}

pub fn graph_to_dot(g: &MapperGraph) -> String {
    let mut out = String::from("graph g {\n");
    for n in g.nodes() {
        let _ = writeln!(out, "  {} [label=\"{:.3}\"];", n.id, n.lens_mean);
    }
    let mut edges: Vec<(usize, usize)> = g.edges().iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
    edges.sort_unstable();
    for (u, v) in edges {
        let _ = writeln!(out, "  {u} -- {v};");
    }
    out.push_str("}\n");
    out
}

pub fn save_graph(g: &MapperGraph, format: GraphFormat, path: &Path) -> Result<()> {
    let text = match format {
        GraphFormat::Json => graph_to_json(g),
        GraphFormat::Dot => graph_to_dot(g),
    };
    write_text(path, &text)
}

pub fn graph_from_json(text: &str) -> Result<MapperGraph> {
    let file: GraphFile =
        serde_json::from_str(text).map_err(|e| GaleError::Format(format!("graph json: {e}")))?;
    let edges = file.edges.into_iter().map(|[u, v]| (u, v)).collect();
    MapperGraph::from_parts(file.nodes, edges)
}

pub fn load_graph(path: &Path) -> Result<MapperGraph> {
    let text = fs::read_to_string(path).map_err(|e| GaleError::io(path, e))?;
    graph_from_json(&text)
}

pub fn diagram_to_json(dg: &PersistenceDiagram) -> String {
    serde_json::to_string(dg.points()).expect("diagram serializes")
}

pub fn diagram_from_json(text: &str) -> Result<PersistenceDiagram> {
    let points = serde_json::from_str(text)
        .map_err(|e| GaleError::Format(format!("diagram json: {e}")))?;
    PersistenceDiagram::from_points(points)
}

pub fn save_diagram(dg: &PersistenceDiagram, path: &Path) -> Result<()> {
    write_text(path, &diagram_to_json(dg))
}

pub fn load_diagram(path: &Path) -> Result<PersistenceDiagram> {
    let text = fs::read_to_string(path).map_err(|e| GaleError::io(path, e))?;
    diagram_from_json(&text)
}

/// Label header row and label first column.
pub fn distance_matrix_to_csv(m: &DistanceMatrix) -> String {
    let mut out = String::from("label");
    for l in m.labels() {
        out.push(',');
        out.push_str(l);
    }
    out.push('\n');
    for (i, l) in m.labels().iter().enumerate() {
        out.push_str(l);
        for j in 0..m.len() {
            out.push(',');
            out.push_str(&fmt_num(m.get(i, j)));
        }
        out.push('\n');
    }
    out
}

pub fn save_distance_matrix(m: &DistanceMatrix, path: &Path) -> Result<()> {
    write_text(path, &distance_matrix_to_csv(m))
}

pub fn distance_matrix_from_csv(text: &str) -> Result<DistanceMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| GaleError::Format(e.to_string()))?
        .iter()
        .skip(1)
        .map(str::to_string)
        .collect();
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| GaleError::Format(e.to_string()))?;
        let row = rec
            .iter()
            .skip(1)
            .enumerate()
            .map(|(j, s)| {
                s.parse::<f64>().map_err(|_| GaleError::Parse {
                    row: i + 1,
                    column: j + 2,
                    message: format!("'{s}' is not a number"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        values.push(row);
    }
    DistanceMatrix::new(header, values)
}

pub fn load_distance_matrix(path: &Path) -> Result<DistanceMatrix> {
    let text = fs::read_to_string(path).map_err(|e| GaleError::io(path, e))?;
    distance_matrix_from_csv(&text)
}

/// Writes any serializable value as pretty JSON.
pub fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| GaleError::Format(format!("json: {e}")))?;
    write_text(path, &text)
}

pub fn write_string(path: &Path, text: &str) -> Result<()> {
    write_text(path, text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::persistence::{DiagramPoint, PointClass};

    #[test]
    fn explanation_table_parses() {
        let e = parse_explanations("a,b\n0.1,0.2\n0.3,0.4\n0.5,0.6").unwrap();
        assert_eq!((e.n(), e.d()), (3, 2));
        assert_eq!(e.row(2), &[0.5, 0.6]);
        assert_eq!(e.column_names(), &["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn lens_table_parses_and_checks_range() {
        let l = parse_lens("p\n0.0\n1.0").unwrap();
        assert_eq!(l.values(), &[0.0, 1.0]);
        match parse_lens("p\n0.2\n1.5") {
            Err(GaleError::Range { row, value }) => {
                assert_eq!(row, 2);
                assert_eq!(value, 1.5);
            }
            other => panic!("expected range error, got {other:?}"),
        }
        assert!(matches!(parse_lens("p,q\n0.1,0.2"), Err(GaleError::Format(_))));
    }

    #[test]
    fn malformed_number_reports_position() {
        match parse_explanations("a,b\n0.1,0.2\n0.3,zz\n") {
            Err(GaleError::Parse { row, column, .. }) => assert_eq!((row, column), (2, 2)),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn row_count_is_preserved() {
        let text = "x\n".to_string() + &"0.5\n".repeat(37);
        assert_eq!(parse_lens(&text).unwrap().len(), 37);
    }

    #[test]
    fn dataset_label_column() {
        let raw = parse_raw("f0,y,f1\n1,0,2\n3,1,4\n").unwrap();
        let ds = dataset_from_raw(raw).unwrap();
        assert_eq!(ds.y, vec![0, 1]);
        assert_eq!(ds.x.row(1), &[3.0, 4.0]);
        assert_eq!(ds.feature_names, vec!["f0", "f1"]);
    }

    #[test]
    fn empty_graph_json() {
        let g = MapperGraph::from_parts(vec![], vec![]).unwrap();
        assert_eq!(graph_to_json(&g), r#"{"nodes":[],"edges":[]}"#);
    }

    #[test]
    fn single_node_graph_round_trips() {
        let g = MapperGraph::from_parts(
            vec![MapperNode {
                id: 0,
                members: vec![0, 1],
                lens_mean: 0.5,
            }],
            vec![],
        )
        .unwrap();
        let text = graph_to_json(&g);
        assert_eq!(text, r#"{"nodes":[{"id":0,"members":[0,1],"lens_mean":0.5}],"edges":[]}"#);
        assert_eq!(graph_from_json(&text).unwrap(), g);
    }

    #[test]
    fn dot_counts_statements() {
        let g = MapperGraph::from_parts(
            vec![
                MapperNode {
                    id: 0,
                    members: vec![0, 1],
                    lens_mean: 0.12345,
                },
                MapperNode {
                    id: 1,
                    members: vec![1, 2],
                    lens_mean: 0.5,
                },
            ],
            vec![(1, 0)],
        )
        .unwrap();
        let dot = graph_to_dot(&g);
        assert!(dot.starts_with("graph g {"));
        assert_eq!(dot.matches("[label=").count(), 2);
        assert_eq!(dot.matches(" -- ").count(), 1);
        assert!(dot.contains("label=\"0.123\""));
        assert!(dot.contains("0 -- 1;"));
    }

    #[test]
    fn diagram_json_round_trips_with_multiplicity() {
        let empty = PersistenceDiagram::from_points(vec![]).unwrap();
        assert_eq!(diagram_to_json(&empty), "[]");
        assert_eq!(diagram_from_json("[]").unwrap(), empty);

        let one = PersistenceDiagram::from_points(vec![DiagramPoint::new(0.2, 0.5, PointClass::Ord0)]).unwrap();
        let text = diagram_to_json(&one);
        assert_eq!(text, r#"[{"birth":0.2,"death":0.5,"class":"ord0"}]"#);
        assert_eq!(diagram_from_json(&text).unwrap(), one);

        let dup = PersistenceDiagram::from_points(vec![
            DiagramPoint::new(0.0, 1.0, PointClass::Ext0),
            DiagramPoint::new(0.0, 1.0, PointClass::Ext0),
        ])
        .unwrap();
        let back = diagram_from_json(&diagram_to_json(&dup)).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back, dup);
    }

    #[test]
    fn unknown_class_tag_is_format_error() {
        let r = diagram_from_json(r#"[{"birth":0.0,"death":1.0,"class":"ord7"}]"#);
        assert!(matches!(r, Err(GaleError::Format(_))));
    }

    #[test]
    fn distance_matrix_csv_round_trips() {
        let m = DistanceMatrix::new(
            vec!["a".into(), "b".into()],
            vec![vec![0.0, 0.1], vec![0.1, 0.0]],
        )
        .unwrap();
        let text = distance_matrix_to_csv(&m);
        assert_eq!(text, "label,a,b\na,0.0,0.1\nb,0.1,0.0\n");
        assert_eq!(distance_matrix_from_csv(&text).unwrap(), m);
    }
}
