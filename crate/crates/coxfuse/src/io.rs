//! CSV file formats.
//!
//! - regions: `region_id,area,offset,count`
//! - covariates: `region_id,x1,...,xp`; the header names the covariates
//! - edges: `region_i,region_j[,weight]`; a missing or blank weight is 1
//!
//! Columns of the region and edge files may appear in any order. Regions are
//! ordered lexicographically by id. Floats are written with 17 significant
//! digits so that files round-trip exactly.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::path::{Path, PathBuf};

use coxfuse_core::linalg::Matrix;
use coxfuse_core::simulate::Latent;
use coxfuse_core::{Dataset, GraphError, ModelError, RegionGraph, Scenario};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("cannot open {path}: {source}")]
    Open { path: PathBuf, source: std::io::Error },
    #[error("malformed CSV in {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}, line {line}: `{value}` in column `{column}` is not a number")]
    InvalidNumber {
        path: PathBuf,
        line: u64,
        column: String,
        value: String,
    },
    #[error("region `{region}`: count `{value}` is not a non-negative integer")]
    NonIntegerCount { region: String, value: String },
    #[error("{path}: duplicate region id `{id}`")]
    DuplicateRegion { path: PathBuf, id: String },
    #[error("region `{0}` has no row in the covariate file")]
    MissingCovariates(String),
    #[error("covariate file lists region `{0}`, which is not in the region file")]
    UnknownCovariateRegion(String),
    #[error("{path}: edge endpoint `{id}` is not a known region")]
    OrphanEdge { path: PathBuf, id: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One row of the region file.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionRow {
    pub id: String,
    pub area: f64,
    pub offset: f64,
    pub count: u64,
}

/// Covariate rows keyed by region id.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariateTable {
    pub names: Vec<String>,
    pub rows: BTreeMap<String, Vec<f64>>,
}

/// Writes `v` with 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn open_reader(path: &Path) -> Result<csv::Reader<File>, IoError> {
    let file = File::open(path).map_err(|source| IoError::Open {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> IoError + '_ {
    move |source| IoError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn column(path: &Path, headers: &csv::StringRecord, name: &str) -> Result<usize, IoError> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| IoError::MissingColumn {
            path: path.to_path_buf(),
            column: name.to_string(),
        })
}

fn number(path: &Path, rec: &csv::StringRecord, col: usize, name: &str) -> Result<f64, IoError> {
    let raw = rec.get(col).unwrap_or("");
    raw.parse::<f64>().map_err(|_| IoError::InvalidNumber {
        path: path.to_path_buf(),
        line: rec.position().map_or(0, |p| p.line()),
        column: name.to_string(),
        value: raw.to_string(),
    })
}

fn parse_count(region: &str, raw: &str) -> Result<u64, IoError> {
    if let Ok(c) = raw.parse::<u64>() {
        return Ok(c);
    }
    // Integral values written in float notation are accepted.
    match raw.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < 9.007_199_254_740_992e15 => Ok(v as u64),
        _ => Err(IoError::NonIntegerCount {
            region: region.to_string(),
            value: raw.to_string(),
        }),
    }
}

/// Reads the region file, sorted by id.
pub fn read_regions(path: &Path) -> Result<Vec<RegionRow>, IoError> {
    let mut rdr = open_reader(path)?;
    let headers = rdr.headers().map_err(csv_err(path))?.clone();
    let c_id = column(path, &headers, "region_id")?;
    let c_area = column(path, &headers, "area")?;
    let c_offset = column(path, &headers, "offset")?;
    let c_count = column(path, &headers, "count")?;
    let mut rows = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err(path))?;
        let id = rec.get(c_id).unwrap_or("").to_string();
        let row = RegionRow {
            area: number(path, &rec, c_area, "area")?,
            offset: number(path, &rec, c_offset, "offset")?,
            count: parse_count(&id, rec.get(c_count).unwrap_or(""))?,
            id: id.clone(),
        };
        if rows.insert(id.clone(), row).is_some() {
            return Err(IoError::DuplicateRegion {
                path: path.to_path_buf(),
                id,
            });
        }
    }
    Ok(rows.into_values().collect())
}

/// Reads the covariate file. The first column must be `region_id`.
pub fn read_covariates(path: &Path) -> Result<CovariateTable, IoError> {
    let mut rdr = open_reader(path)?;
    let headers = rdr.headers().map_err(csv_err(path))?.clone();
    if headers.get(0) != Some("region_id") {
        return Err(IoError::MissingColumn {
            path: path.to_path_buf(),
            column: String::from("region_id"),
        });
    }
    let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut rows = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err(path))?;
        let id = rec.get(0).unwrap_or("").to_string();
        let values = names
            .iter()
            .enumerate()
            .map(|(k, name)| number(path, &rec, k + 1, name))
            .collect::<Result<Vec<_>, _>>()?;
        if rows.insert(id.clone(), values).is_some() {
            return Err(IoError::DuplicateRegion {
                path: path.to_path_buf(),
                id,
            });
        }
    }
    Ok(CovariateTable { names, rows })
}

/// Reads the edge file as `(region_i, region_j, weight)` triples.
pub fn read_edges(path: &Path) -> Result<Vec<(String, String, f64)>, IoError> {
    let mut rdr = open_reader(path)?;
    let headers = rdr.headers().map_err(csv_err(path))?.clone();
    let c_i = column(path, &headers, "region_i")?;
    let c_j = column(path, &headers, "region_j")?;
    let c_w = headers.iter().position(|h| h == "weight");
    let mut edges = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err(path))?;
        let w = match c_w {
            Some(c) if !rec.get(c).unwrap_or("").is_empty() => number(path, &rec, c, "weight")?,
            _ => 1.0,
        };
        edges.push((
            rec.get(c_i).unwrap_or("").to_string(),
            rec.get(c_j).unwrap_or("").to_string(),
            w,
        ));
    }
    Ok(edges)
}

/// Joins region rows and covariates into a dataset ordered like `regions`.
pub fn assemble_dataset(regions: &[RegionRow], cov: &CovariateTable) -> Result<Dataset, IoError> {
    let known: BTreeSet<&str> = regions.iter().map(|r| r.id.as_str()).collect();
    if let Some(extra) = cov.rows.keys().find(|id| !known.contains(id.as_str())) {
        return Err(IoError::UnknownCovariateRegion(extra.clone()));
    }
    let p = cov.names.len();
    let mut x = Matrix::zeros(regions.len(), p);
    for (i, r) in regions.iter().enumerate() {
        let row = cov
            .rows
            .get(&r.id)
            .ok_or_else(|| IoError::MissingCovariates(r.id.clone()))?;
        x.row_mut(i).copy_from_slice(row);
    }
    let d = Dataset::new(
        regions.iter().map(|r| r.count).collect(),
        regions.iter().map(|r| r.offset).collect(),
        regions.iter().map(|r| r.area).collect(),
        x,
    )?
    .with_covariate_names(cov.names.clone())?;
    Ok(d)
}

/// Builds the graph over `ids`, rejecting edges with unknown endpoints.
pub fn assemble_graph(ids: &[String], edges: &[(String, String, f64)], path: &Path) -> Result<RegionGraph, IoError> {
    let known: BTreeSet<&str> = ids.iter().map(String::as_str).collect();
    for (a, b, _) in edges {
        for id in [a, b] {
            if !known.contains(id.as_str()) {
                return Err(IoError::OrphanEdge {
                    path: path.to_path_buf(),
                    id: id.clone(),
                });
            }
        }
    }
    Ok(RegionGraph::build(ids, edges)?)
}

/// Loads the three input files into an aligned dataset and graph.
pub fn load_dataset(regions: &Path, covariates: &Path, edges: &Path) -> Result<(Dataset, RegionGraph), IoError> {
    let rows = read_regions(regions)?;
    let cov = read_covariates(covariates)?;
    let d = assemble_dataset(&rows, &cov)?;
    let ids: Vec<String> = rows.into_iter().map(|r| r.id).collect();
    let g = assemble_graph(&ids, &read_edges(edges)?, edges)?;
    Ok((d, g))
}

fn create_writer(path: &Path) -> Result<csv::Writer<File>, IoError> {
    let file = File::create(path).map_err(|source| IoError::Open {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::Writer::from_writer(file))
}

fn write_rows<I, R>(path: &Path, header: &[String], rows: I) -> Result<(), IoError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = create_writer(path)?;
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        w.write_record(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| IoError::Open {
        path: path.to_path_buf(),
        source,
    })
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

pub fn write_regions(path: &Path, d: &Dataset, ids: &[String]) -> Result<(), IoError> {
    let rows = (0..d.n()).map(|i| {
        vec![
            ids[i].clone(),
            format_float(d.area()[i]),
            format_float(d.offset()[i]),
            d.counts()[i].to_string(),
        ]
    });
    write_rows(path, &strings(&["region_id", "area", "offset", "count"]), rows)
}

pub fn write_covariates(path: &Path, d: &Dataset, ids: &[String]) -> Result<(), IoError> {
    let mut header = vec![String::from("region_id")];
    header.extend(d.covariate_names().iter().cloned());
    let rows = (0..d.n()).map(|i| {
        let mut r = vec![ids[i].clone()];
        r.extend(d.x().row(i).iter().map(|&v| format_float(v)));
        r
    });
    write_rows(path, &header, rows)
}

pub fn write_edges(path: &Path, g: &RegionGraph) -> Result<(), IoError> {
    let ids = g.region_ids();
    let rows = g
        .edges()
        .iter()
        .map(|e| vec![ids[e.i].clone(), ids[e.j].clone(), format_float(e.weight)]);
    write_rows(path, &strings(&["region_i", "region_j", "weight"]), rows)
}

/// Per-fine-cell sidecar of a simulated replicate.
pub fn write_latent(path: &Path, sc: &Scenario, latent: &Latent, ids: &[String]) -> Result<(), IoError> {
    let header = strings(&[
        "fine_cell",
        "region_id",
        "s1",
        "s2",
        "baseline",
        "structured",
        "unstructured",
        "unstructured_variance",
        "region_lambda",
    ]);
    let rows = sc.fine_points().into_iter().enumerate().map(|(k, s)| {
        let cell = sc.unit_cell_of(k);
        vec![
            k.to_string(),
            ids[cell].clone(),
            format_float(s.0),
            format_float(s.1),
            format_float(sc.baseline_at(s)),
            format_float(latent.structured[k]),
            format_float(latent.unstructured[k]),
            format_float(latent.unstructured_variance[k]),
            format_float(latent.lambda[cell]),
        ]
    });
    write_rows(path, &header, rows)
}

/// Writes a plain table of named float columns.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), IoError> {
    write_rows(path, &strings(header), rows.iter().cloned())
}
