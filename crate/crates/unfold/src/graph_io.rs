//! Graph CSVs (`vertices.csv`, `edges.csv`) and `manifest.json`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use unfold_core::discretize::{ConeGrid, GraphBuilder, VertexData};
use unfold_core::{Length, MetricGraph, VertexFlags};

use crate::error::CliError;
use crate::write_file;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub label: String,
    pub ambient_dim: usize,
    pub intrinsic_dim: usize,
    pub chart_dim: usize,
    pub vertices: usize,
    pub edges: usize,
    pub h: f64,
    pub has_sigma: bool,
    pub totally_geodesic: bool,
    pub near_sigma_ring: usize,
    pub outer_truncation: usize,
    pub cone_grid: Option<ConeGrid>,
}

impl Manifest {
    pub fn of(graph: &MetricGraph) -> Self {
        Manifest {
            label: graph.label().into(),
            ambient_dim: graph.ambient_dim(),
            intrinsic_dim: graph.intrinsic_dim(),
            chart_dim: graph.chart_coords(0).len(),
            vertices: graph.vertex_count(),
            edges: graph.edge_count(),
            h: graph.h(),
            has_sigma: graph.has_sigma(),
            totally_geodesic: graph.totally_geodesic(),
            near_sigma_ring: graph.vertices_with(VertexFlags::NEAR_SIGMA_RING).len(),
            outer_truncation: graph.vertices_with(VertexFlags::OUTER_TRUNCATION).len(),
            cone_grid: graph.cone_grid().copied(),
        }
    }
}

const FLAG_NAMES: [(VertexFlags, &str); 2] = [(VertexFlags::NEAR_SIGMA_RING, "near_sigma_ring"), (VertexFlags::OUTER_TRUNCATION, "outer_truncation")];

pub fn flags_to_str(flags: VertexFlags) -> String {
    FLAG_NAMES.iter().filter(|(f, _)| flags.contains(*f)).map(|(_, n)| *n).collect::<Vec<_>>().join("|")
}

pub fn flags_from_str(s: &str) -> Option<VertexFlags> {
    let mut out = VertexFlags::empty();
    for part in s.split('|').filter(|p| !p.is_empty()) {
        out |= FLAG_NAMES.iter().find(|(_, n)| *n == part)?.0;
    }
    Some(out)
}

pub fn length_to_str(l: Length) -> String {
    match l {
        Length::Finite(v) => v.to_string(),
        Length::Infinite => "inf".into(),
    }
}

pub fn length_from_str(s: &str) -> Option<Length> {
    if s == "inf" {
        Some(Length::Infinite)
    } else {
        s.parse().ok().map(Length::Finite)
    }
}

fn csv_bytes(header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn vertices_csv(graph: &MetricGraph) -> Vec<u8> {
    let chart_dim = graph.chart_coords(0).len();
    let mut header = vec!["index".to_string()];
    header.extend((0..graph.ambient_dim()).map(|i| format!("x{i}")));
    header.extend((0..chart_dim).map(|i| format!("c{i}")));
    for h in ["a", "a_reliable", "dist_sigma", "dist_sigma_model", "flags", "area", "sigma_offset"] {
        header.push(h.into());
    }
    let mut offset = vec![None; graph.vertex_count()];
    for &(v, off) in graph.sigma_sources() {
        offset[v] = Some(off);
    }
    let rows = (0..graph.vertex_count()).map(|v| {
        let mut r = vec![v.to_string()];
        r.extend(graph.position(v).iter().map(f64::to_string));
        r.extend(graph.chart_coords(v).iter().map(f64::to_string));
        r.push(graph.a(v).to_string());
        r.push(graph.a_reliable(v).to_string());
        r.push(length_to_str(graph.dist_sigma(v)));
        r.push(length_to_str(graph.dist_sigma_model(v)));
        r.push(flags_to_str(graph.flags(v)));
        r.push(graph.area(v).to_string());
        r.push(offset[v].map(|o| o.to_string()).unwrap_or_default());
        r
    });
    csv_bytes(&header, rows)
}

pub fn edges_csv(graph: &MetricGraph) -> Vec<u8> {
    let header = ["i", "j", "length"].map(String::from);
    csv_bytes(&header, graph.edges().map(|(u, v, len)| vec![u.to_string(), v.to_string(), len.to_string()]))
}

pub fn write_graph(dir: &Path, graph: &MetricGraph) -> Result<(), CliError> {
    write_file(&dir.join("vertices.csv"), &vertices_csv(graph))?;
    write_file(&dir.join("edges.csv"), &edges_csv(graph))?;
    write_file(&dir.join("manifest.json"), &crate::json_bytes(&Manifest::of(graph)))
}

fn read_csv(path: &Path) -> Result<(csv::StringRecord, Vec<csv::StringRecord>), CliError> {
    let text = fs::read(path).map_err(CliError::io(path))?;
    let mut r = csv::Reader::from_reader(text.as_slice());
    let header = r.headers().map_err(|e| CliError::parse(path, e))?.clone();
    let rows = r.records().collect::<Result<Vec<_>, _>>().map_err(|e| CliError::parse(path, e))?;
    Ok((header, rows))
}

fn field<'r>(path: &Path, row: &'r csv::StringRecord, i: usize, line: usize) -> Result<&'r str, CliError> {
    row.get(i).ok_or_else(|| CliError::parse(path, format!("row {line}: missing column {i}")))
}

fn num(path: &Path, s: &str, line: usize, what: &str) -> Result<f64, CliError> {
    s.parse().map_err(|_| CliError::parse(path, format!("row {line}: bad {what} `{s}`")))
}

/// Rebuilds a graph written by [`write_graph`]. `dist_sigma` is recomputed
/// from the stored offsets.
pub fn read_graph(dir: &Path) -> Result<MetricGraph, CliError> {
    let mpath = dir.join("manifest.json");
    let text = fs::read_to_string(&mpath).map_err(CliError::io(&mpath))?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| CliError::parse(&mpath, e))?;

    let vpath = dir.join("vertices.csv");
    let (header, rows) = read_csv(&vpath)?;
    let expected = 1 + m.ambient_dim + m.chart_dim + 7;
    if header.len() != expected {
        return Err(CliError::parse(&vpath, format!("expected {expected} columns, found {}", header.len())));
    }
    if rows.len() != m.vertices {
        return Err(CliError::parse(&vpath, format!("manifest lists {} vertices, file has {}", m.vertices, rows.len())));
    }
    let mut b = GraphBuilder::new(m.label.clone(), m.ambient_dim, m.intrinsic_dim, m.chart_dim);
    let base = 1 + m.ambient_dim + m.chart_dim;
    for (line, row) in rows.iter().enumerate() {
        let line = line + 2;
        let get = |i: usize| field(&vpath, row, i, line);
        let index: usize = get(0)?.parse().map_err(|_| CliError::parse(&vpath, format!("row {line}: bad index")))?;
        if index != line - 2 {
            return Err(CliError::parse(&vpath, format!("row {line}: index {index} out of order")));
        }
        let position = (1..1 + m.ambient_dim).map(|i| num(&vpath, get(i)?, line, "coordinate")).collect::<Result<Vec<_>, _>>()?;
        let chart = (1 + m.ambient_dim..base).map(|i| num(&vpath, get(i)?, line, "chart coordinate")).collect::<Result<Vec<_>, _>>()?;
        let a = num(&vpath, get(base)?, line, "a")?;
        let a_reliable = get(base + 1)?.parse().map_err(|_| CliError::parse(&vpath, format!("row {line}: bad a_reliable")))?;
        let dist_sigma = length_from_str(get(base + 3)?).ok_or_else(|| CliError::parse(&vpath, format!("row {line}: bad dist_sigma_model")))?;
        let flags = flags_from_str(get(base + 4)?).ok_or_else(|| CliError::parse(&vpath, format!("row {line}: bad flags")))?;
        let area = num(&vpath, get(base + 5)?, line, "area")?;
        let off = get(base + 6)?;
        let sigma_offset = if off.is_empty() { None } else { Some(num(&vpath, off, line, "sigma_offset")?) };
        b.add_vertex(VertexData { position: &position, chart: &chart, a, a_reliable, dist_sigma, flags, area, sigma_offset });
    }

    let epath = dir.join("edges.csv");
    let (_, rows) = read_csv(&epath)?;
    for (line, row) in rows.iter().enumerate() {
        let line = line + 2;
        let idx = |i: usize| -> Result<usize, CliError> {
            field(&epath, row, i, line)?.parse().map_err(|_| CliError::parse(&epath, format!("row {line}: bad vertex index")))
        };
        b.add_edge(idx(0)?, idx(1)?, num(&epath, field(&epath, row, 2, line)?, line, "length")?);
    }
    if let Some(cg) = m.cone_grid {
        b.set_cone_grid(cg);
    }
    Ok(b.finish()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use unfold_core::discretize::{build_graph, GridSpec};
    use unfold_core::models::simons_cone;

    #[test]
    fn flag_names_round_trip() {
        for f in [VertexFlags::empty(), VertexFlags::NEAR_SIGMA_RING, VertexFlags::all()] {
            assert_eq!(flags_from_str(&flags_to_str(f)), Some(f));
        }
        assert_eq!(flags_from_str("bogus"), None);
    }

    #[test]
    fn graph_round_trip() {
        let g = build_graph(&simons_cone(0.1, 10.0).unwrap(), &GridSpec::with_resolution(16)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_graph(dir.path(), &g).unwrap();
        let back = read_graph(dir.path()).unwrap();
        assert_eq!(back.vertex_count(), g.vertex_count());
        assert_eq!(back.edge_count(), g.edge_count());
        assert_eq!(back.a_values(), g.a_values());
        assert_eq!(back.lengths(), g.lengths());
        assert_eq!(back.cone_grid(), g.cone_grid());
        for v in 0..g.vertex_count() {
            assert_eq!(back.dist_sigma(v), g.dist_sigma(v));
            assert_eq!(back.flags(v), g.flags(v));
        }
        assert_eq!(vertices_csv(&back), vertices_csv(&g));
    }
}
