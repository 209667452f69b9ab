//! Field CSVs: `sigma.csv`, `cover.csv`, `smoothed.csv`, `profile.csv`.

use std::fs;
use std::path::Path;

use unfold_core::sigma::{SigmaField, SigmaProvenance};
use unfold_core::whitney::{SigmaCover, SmoothedField};
use unfold_core::MetricGraph;

use crate::error::CliError;
use crate::graph_io::length_to_str;

fn csv_bytes<const N: usize>(header: [&str; N], rows: impl Iterator<Item = [String; N]>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// `# {provenance}` on the first line, then `vertex,b,delta`.
pub fn sigma_csv(field: &SigmaField) -> Vec<u8> {
    let mut out = format!("# {}\n", serde_json::to_string(&field.provenance()).expect("provenance serializes")).into_bytes();
    out.extend(csv_bytes(["vertex", "b", "delta"], (0..field.len()).map(|v| [v.to_string(), field.b(v).to_string(), length_to_str(field.delta(v))])));
    out
}

pub fn read_sigma(path: &Path) -> Result<SigmaField, CliError> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    let (first, rest) = text.split_once('\n').ok_or_else(|| CliError::parse(path, "empty file"))?;
    let json = first.strip_prefix("# ").ok_or_else(|| CliError::parse(path, "missing `# {provenance}` line"))?;
    let provenance: SigmaProvenance = serde_json::from_str(json).map_err(|e| CliError::parse(path, e))?;
    let mut r = csv::Reader::from_reader(rest.as_bytes());
    let mut b = Vec::new();
    for (i, row) in r.records().enumerate() {
        let row = row.map_err(|e| CliError::parse(path, e))?;
        let line = i + 3;
        let v: usize = row.get(0).and_then(|s| s.parse().ok()).ok_or_else(|| CliError::parse(path, format!("line {line}: bad vertex")))?;
        if v != i {
            return Err(CliError::parse(path, format!("line {line}: vertex {v} out of order")));
        }
        let bv: f64 = row.get(1).and_then(|s| s.parse().ok()).ok_or_else(|| CliError::parse(path, format!("line {line}: bad b")))?;
        b.push(bv);
    }
    Ok(SigmaField::from_parts(provenance, b)?)
}

pub fn cover_csv(cover: &SigmaCover) -> Vec<u8> {
    csv_bytes(
        ["center", "theta", "family"],
        cover.centers.iter().zip(&cover.radii).zip(&cover.families).map(|((c, r), f)| [c.to_string(), r.to_string(), f.to_string()]),
    )
}

pub fn smoothed_csv(field: &SigmaField, s: &SmoothedField, cover: Option<&SigmaCover>) -> Vec<u8> {
    csv_bytes(
        ["vertex", "delta", "delta_star", "b_star", "aleph_1", "aleph_10"],
        (0..field.len()).map(|v| {
            let (a1, a10) = cover.map_or((String::new(), String::new()), |c| (c.aleph_1[v].to_string(), c.aleph_10[v].to_string()));
            [v.to_string(), length_to_str(field.delta(v)), length_to_str(s.delta_star[v]), s.b_star[v].to_string(), a1, a10]
        }),
    )
}

/// Per-vertex `a`, `b`, `delta` against distance to the singular set, sorted by distance.
pub fn profile_csv(graph: &MetricGraph, field: &SigmaField) -> Vec<u8> {
    let mut order: Vec<usize> = (0..graph.vertex_count()).collect();
    order.sort_by(|&u, &v| graph.dist_sigma(u).to_f64().total_cmp(&graph.dist_sigma(v).to_f64()).then(u.cmp(&v)));
    csv_bytes(
        ["vertex", "dist_sigma", "a", "b", "delta"],
        order.into_iter().map(|v| {
            [v.to_string(), length_to_str(graph.dist_sigma(v)), graph.a(v).to_string(), field.b(v).to_string(), length_to_str(field.delta(v))]
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use unfold_core::discretize::path_graph;
    use unfold_core::sigma::{compute_sigma_field, LadderSpec};

    #[test]
    fn sigma_round_trip() {
        let g = path_graph(30, 0.5).unwrap();
        let f = compute_sigma_field(&g, 1.5, &LadderSpec::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sigma.csv");
        fs::write(&p, sigma_csv(&f)).unwrap();
        let back = read_sigma(&p).unwrap();
        assert_eq!(back.b_values(), f.b_values());
        assert_eq!(back.provenance(), f.provenance());
    }

    #[test]
    fn missing_provenance_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sigma.csv");
        fs::write(&p, "vertex,b,delta\n0,1,1\n").unwrap();
        assert!(matches!(read_sigma(&p), Err(CliError::Parse { .. })));
    }
}
