//! Text serialization of projections and solve traces.
//!
//! Projection file layout:
//!
//! ```text
//! # s3fse projection
//! views=3
//! names=spectral,texture,dmp
//! dims=30,20,25
//! d=10
//! alpha=1            <- config echo, one key per line
//! ...
//! seed=0
//! ---
//! <m lines of d comma-separated values>
//! ```
//!
//! Values use Rust's shortest round-trip formatting, so reading back is exact.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use super::{ProjectionMatrix, S3fseConfig, SolveTrace};
use crate::error::{Error, Result};
use crate::io::parse_key_values;

const MAGIC: &str = "# s3fse projection";
const SEPARATOR: &str = "---";

pub fn write_projection(
    path: &Path,
    p: &ProjectionMatrix,
    cfg: Option<&S3fseConfig>,
) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "{MAGIC}")?;
    writeln!(f, "views={}", p.n_views())?;
    writeln!(f, "names={}", p.view_names().join(","))?;
    writeln!(
        f,
        "dims={}",
        p.dims()
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(",")
    )?;
    writeln!(f, "d={}", p.d())?;
    if let Some(cfg) = cfg {
        for (k, v) in cfg.entries() {
            if k != "d" {
                writeln!(f, "{k}={v}")?;
            }
        }
    }
    writeln!(f, "{SEPARATOR}")?;
    for row in p.total().row_iter() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(f, "{}", line.join(","))?;
    }
    f.flush()?;
    Ok(())
}

/// Reads a projection file; also returns the full header as key/value pairs.
pub fn read_projection(path: &Path) -> Result<(ProjectionMatrix, BTreeMap<String, String>)> {
    let context = path.display().to_string();
    let text = fs::read_to_string(path)?;
    let (head, body) = text
        .split_once(&format!("\n{SEPARATOR}\n"))
        .ok_or_else(|| Error::parse(&context, "missing '---' separator"))?;
    if !head.starts_with(MAGIC) {
        return Err(Error::parse(&context, "not a projection file"));
    }
    let header = parse_key_values(head, &context)?;
    let get = |k: &str| {
        header
            .get(k)
            .ok_or_else(|| Error::parse(&context, format!("missing header key '{k}'")))
    };
    let dims: Vec<usize> = get("dims")?
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::parse(&context, format!("dims: {e}")))?;
    let names: Vec<String> = get("names")?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let d: usize = get("d")?
        .parse()
        .map_err(|e| Error::parse(&context, format!("d: {e}")))?;
    let mut values = Vec::new();
    let mut rows = 0;
    for line in body.lines().filter(|l| !l.trim().is_empty()) {
        let row: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::parse(&context, format!("row {}: {e}", rows + 1)))?;
        if row.len() != d {
            return Err(Error::parse(
                &context,
                format!("row {} has {} values, expected {d}", rows + 1, row.len()),
            ));
        }
        values.extend(row);
        rows += 1;
    }
    let total = DMatrix::from_row_slice(rows, d, &values);
    Ok((ProjectionMatrix::new(names, dims, total)?, header))
}

/// `iteration,objective,sparsity,seconds`, iterations numbered from 1.
pub fn write_trace_csv(path: &Path, trace: &SolveTrace) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["iteration", "objective", "sparsity", "seconds"])?;
    for i in 0..trace.objective.len() {
        w.write_record([
            (i + 1).to_string(),
            trace.objective[i].to_string(),
            trace.sparsity[i].to_string(),
            trace.seconds[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
