//! Text formats: graph edge lists and the CSV schemas.

use std::io::{BufRead, Read, Write};

use crate::affinity::AffinityMatrix;
use crate::error::{Error, Result};
use crate::forces::{ForceField, ForcefulColoring, SinkAssignment};
use crate::graph::{Graph, GraphKind};
use crate::meanfield::{DiscreteMeasure, RadialMeasure};
use crate::tsne::Embedding;

pub const EMBEDDING_HEADER: [&str; 3] = ["index", "x", "y"];
pub const AFFINITY_HEADER: [&str; 3] = ["i", "j", "p"];
pub const PLANAR_MEASURE_HEADER: [&str; 3] = ["x", "y", "weight"];
pub const RADIAL_MEASURE_HEADER: [&str; 2] = ["r", "weight"];
pub const FEATURE_HEADER: [&str; 11] = [
    "index",
    "x",
    "y",
    "ax",
    "ay",
    "rx",
    "ry",
    "magnitude",
    "direction",
    "sink_label",
    "homogeneity",
];

/// Header `n k seed` (or `n p seed`), then one `u v` line per edge.
pub fn write_edge_list<W: Write>(g: &Graph, mut w: W) -> Result<()> {
    let param = match g.kind() {
        GraphKind::KRegular { k } => k.to_string(),
        GraphKind::ErdosRenyi { p } => format_p(p),
    };
    writeln!(w, "{} {} {}", g.n(), param, g.seed())?;
    for &(u, v) in g.edges() {
        writeln!(w, "{u} {v}")?;
    }
    w.flush()?;
    Ok(())
}

/// Renders `p` so that it never reads back as an integer.
fn format_p(p: f64) -> String {
    let s = p.to_string();
    if s.contains('.') || s.contains('e') {
        s
    } else {
        format!("{s}.0")
    }
}

fn parse_err(line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        line,
        reason: reason.into(),
    }
}

pub fn read_edge_list<R: BufRead>(r: R) -> Result<Graph> {
    let mut lines = r.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let header = header?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(parse_err(1, "header must be `n k|p seed`"));
    }
    let n: usize = fields[0].parse().map_err(|_| parse_err(1, "bad vertex count"))?;
    let kind = match fields[1].parse::<usize>() {
        Ok(k) => GraphKind::KRegular { k },
        Err(_) => GraphKind::ErdosRenyi {
            p: fields[1].parse().map_err(|_| parse_err(1, "bad k or p"))?,
        },
    };
    let seed: u64 = fields[2].parse().map_err(|_| parse_err(1, "bad seed"))?;
    let mut edges = Vec::new();
    for (i, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let mut it = t.split_whitespace();
        let mut next = || -> Result<usize> {
            it.next()
                .ok_or_else(|| parse_err(i + 1, "expected `u v`"))?
                .parse()
                .map_err(|_| parse_err(i + 1, "bad vertex id"))
        };
        let (u, v) = (next()?, next()?);
        if it.next().is_some() {
            return Err(parse_err(i + 1, "expected exactly two ids"));
        }
        edges.push((u, v));
    }
    Graph::from_edges(n, edges, kind, seed)
}

fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(r)
}

/// Numeric CSV rows; a non-numeric first row is taken as a header.
fn read_numeric_rows<R: Read>(r: R) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (i, rec) in csv_reader(r).records().enumerate() {
        let rec = rec?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => rows.push(v),
            Err(_) if i == 0 => continue,
            Err(_) => return Err(parse_err(i + 1, "non-numeric field")),
        }
    }
    Ok(rows)
}

/// Point cloud, one row per point.
pub fn read_points_csv<R: Read>(r: R) -> Result<Vec<Vec<f64>>> {
    let rows = read_numeric_rows(r)?;
    if let Some(first) = rows.first() {
        if let Some(i) = rows.iter().position(|row| row.len() != first.len()) {
            return Err(parse_err(i + 1, "inconsistent column count"));
        }
    }
    Ok(rows)
}

fn write_csv<W: Write>(w: W, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    for row in rows {
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_embedding_csv<W: Write>(e: &Embedding, w: W) -> Result<()> {
    write_csv(
        w,
        &EMBEDDING_HEADER,
        e.coords()
            .iter()
            .enumerate()
            .map(|(i, y)| vec![i.to_string(), y[0].to_string(), y[1].to_string()]),
    )
}

/// Reads `index,x,y`; indices must run `0..n` in order.
pub fn read_embedding_csv<R: Read>(r: R) -> Result<Embedding> {
    let rows = read_numeric_rows(r)?;
    let mut coords = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        if row.len() != 3 {
            return Err(parse_err(i + 2, "expected index,x,y"));
        }
        if row[0] != i as f64 {
            return Err(parse_err(i + 2, format!("expected index {i}")));
        }
        coords.push([row[1], row[2]]);
    }
    Embedding::new(coords)
}

pub fn write_affinity_csv<W: Write>(p: &AffinityMatrix, w: W) -> Result<()> {
    write_csv(
        w,
        &AFFINITY_HEADER,
        p.triplets()
            .map(|(i, j, v)| vec![i.to_string(), j.to_string(), v.to_string()]),
    )
}

pub fn read_affinity_csv<R: Read>(r: R, n: usize) -> Result<AffinityMatrix> {
    let rows = read_numeric_rows(r)?;
    let mut triplets = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        if row.len() != 3 || row[0] < 0.0 || row[1] < 0.0 || row[0].fract() != 0.0 || row[1].fract() != 0.0 {
            return Err(parse_err(i + 2, "expected i,j,p with integer indices"));
        }
        triplets.push((row[0] as usize, row[1] as usize, row[2]));
    }
    AffinityMatrix::from_triplets(n, triplets)
}

pub fn write_planar_measure<W: Write>(mu: &DiscreteMeasure, w: W) -> Result<()> {
    write_csv(
        w,
        &PLANAR_MEASURE_HEADER,
        mu.support()
            .iter()
            .zip(mu.weights())
            .map(|(x, m)| vec![x[0].to_string(), x[1].to_string(), m.to_string()]),
    )
}

pub fn read_planar_measure<R: Read>(r: R) -> Result<DiscreteMeasure> {
    let rows = read_numeric_rows(r)?;
    if rows.iter().any(|row| row.len() != 3) {
        return Err(Error::param("measure", "expected x,y,weight columns"));
    }
    DiscreteMeasure::new(
        rows.iter().map(|r| [r[0], r[1]]).collect(),
        rows.iter().map(|r| r[2]).collect(),
    )
}

pub fn write_radial_measure<W: Write>(nu: &RadialMeasure, w: W) -> Result<()> {
    write_csv(
        w,
        &RADIAL_MEASURE_HEADER,
        nu.radii()
            .iter()
            .zip(nu.weights())
            .map(|(r, m)| vec![r.to_string(), m.to_string()]),
    )
}

pub fn read_radial_measure<R: Read>(r: R) -> Result<RadialMeasure> {
    let rows = read_numeric_rows(r)?;
    if rows.iter().any(|row| row.len() != 2) {
        return Err(Error::param("measure", "expected r,weight columns"));
    }
    RadialMeasure::new(rows.iter().map(|r| r[0]).collect(), rows.iter().map(|r| r[1]).collect())
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// Per-point force features; undefined values are empty fields.
pub fn write_features_csv<W: Write>(
    e: &Embedding,
    f: &ForceField,
    coloring: &ForcefulColoring,
    sinks: &SinkAssignment,
    homogeneity: &[Option<f64>],
    w: W,
) -> Result<()> {
    let n = e.n();
    if f.n() != n || coloring.magnitude.len() != n || sinks.labels.len() != n || homogeneity.len() != n {
        return Err(Error::DimensionMismatch("feature columns differ in length".into()));
    }
    write_csv(
        w,
        &FEATURE_HEADER,
        (0..n).map(|i| {
            let y = e.coords()[i];
            vec![
                i.to_string(),
                y[0].to_string(),
                y[1].to_string(),
                f.attract[i][0].to_string(),
                f.attract[i][1].to_string(),
                f.repulse[i][0].to_string(),
                f.repulse[i][1].to_string(),
                coloring.magnitude[i].to_string(),
                opt(coloring.direction[i]),
                opt(sinks.labels[i]),
                opt(homogeneity[i]),
            ]
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_erdos_renyi, gen_k_regular};

    #[test]
    fn edge_list_round_trip() {
        for g in [gen_k_regular(10, 3, 4).unwrap(), gen_erdos_renyi(12, 0.3, 2).unwrap()] {
            let mut buf = Vec::new();
            write_edge_list(&g, &mut buf).unwrap();
            let back = read_edge_list(&buf[..]).unwrap();
            assert_eq!(back, g);
        }
    }

    #[test]
    fn header_is_checked() {
        assert!(read_edge_list(&b"4 2\n0 1\n"[..]).is_err());
        assert!(read_edge_list(&b""[..]).is_err());
        assert!(read_edge_list(&b"4 1 0\n0 1\n2 x\n"[..]).is_err());
    }

    #[test]
    fn points_with_and_without_header() {
        let a = read_points_csv(&b"a,b\n1,2\n3,4\n"[..]).unwrap();
        let b = read_points_csv(&b"1,2\n3,4\n"[..]).unwrap();
        assert_eq!(a, b);
        assert!(read_points_csv(&b"1,2\n3\n"[..]).is_err());
    }

    #[test]
    fn embedding_round_trip() {
        let e = Embedding::new(vec![[0.1, -2.0], [1e-300, 3.5]]).unwrap();
        let mut buf = Vec::new();
        write_embedding_csv(&e, &mut buf).unwrap();
        assert!(buf.starts_with(b"index,x,y\n"));
        assert_eq!(read_embedding_csv(&buf[..]).unwrap(), e);
    }

    #[test]
    fn measure_round_trip() {
        let mu = DiscreteMeasure::two_dirac(0.3);
        let mut buf = Vec::new();
        write_planar_measure(&mu, &mut buf).unwrap();
        assert_eq!(read_planar_measure(&buf[..]).unwrap(), mu);
        let nu = RadialMeasure::new(vec![0.0, 1.0], vec![0.25, 0.75]).unwrap();
        let mut buf = Vec::new();
        write_radial_measure(&nu, &mut buf).unwrap();
        assert_eq!(read_radial_measure(&buf[..]).unwrap(), nu);
    }
}
