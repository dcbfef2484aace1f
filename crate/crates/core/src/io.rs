//! File formats: cube header + raw f32 raster, label lists, CSV views and
//! binary PGM maps.
//!
//! Cube header (`key=value` per line, `#` comments allowed):
//!
//! ```text
//! width=64
//! height=48
//! bands=102
//! dtype=f32le
//! interleave=bsq
//! data=scene.raw      # optional, defaults to the header path with .raw
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::data::{HyperspectralCube, ViewKind, ViewMatrix};
use crate::error::{Error, Result};

/// Parses `key=value` lines. Blank lines and `#` comments are skipped.
pub fn parse_key_values(text: &str, context: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::parse(context, format!("line {}: expected key=value", lineno + 1))
        })?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn header_usize(map: &BTreeMap<String, String>, key: &str, context: &str) -> Result<usize> {
    map.get(key)
        .ok_or_else(|| Error::parse(context, format!("missing key '{key}'")))?
        .parse()
        .map_err(|e| Error::parse(context, format!("key '{key}': {e}")))
}

fn raw_path_for(header: &Path, map: &BTreeMap<String, String>) -> PathBuf {
    match map.get("data") {
        Some(name) => header.parent().unwrap_or(Path::new(".")).join(name),
        None => header.with_extension("raw"),
    }
}

pub fn read_cube(header: &Path) -> Result<HyperspectralCube> {
    let context = header.display().to_string();
    let map = parse_key_values(&fs::read_to_string(header)?, &context)?;
    let width = header_usize(&map, "width", &context)?;
    let height = header_usize(&map, "height", &context)?;
    let bands = header_usize(&map, "bands", &context)?;
    match map.get("dtype").map(String::as_str) {
        Some("f32le") => {}
        other => {
            return Err(Error::parse(
                &context,
                format!("unsupported dtype {other:?}, expected f32le"),
            ))
        }
    }
    match map.get("interleave").map(String::as_str) {
        Some("bsq") => {}
        other => {
            return Err(Error::parse(
                &context,
                format!("unsupported interleave {other:?}, expected bsq"),
            ))
        }
    }
    let raw_path = raw_path_for(header, &map);
    let bytes = fs::read(&raw_path)?;
    let expected = width * height * bands * 4;
    if bytes.len() != expected {
        return Err(Error::parse(
            raw_path.display().to_string(),
            format!(
                "raw file has {} bytes, header implies {expected}",
                bytes.len()
            ),
        ));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    HyperspectralCube::new(width, height, bands, data)
}

/// Writes `header` and its sibling `.raw` file. Values are narrowed to f32.
pub fn write_cube(header: &Path, cube: &HyperspectralCube) -> Result<()> {
    let raw_path = header.with_extension("raw");
    let raw_name = raw_path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let text = format!(
        "width={}\nheight={}\nbands={}\ndtype=f32le\ninterleave=bsq\ndata={raw_name}\n",
        cube.width(),
        cube.height(),
        cube.bands()
    );
    fs::write(header, text)?;
    let mut bytes = Vec::with_capacity(cube.data().len() * 4);
    for &v in cube.data() {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(raw_path, bytes)?;
    Ok(())
}

/// One integer per line; `0` marks an unlabeled pixel.
pub fn read_labels(path: &Path) -> Result<Vec<i64>> {
    let context = path.display().to_string();
    let reader = BufReader::new(fs::File::open(path)?);
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        out.push(
            line.parse()
                .map_err(|e| Error::parse(&context, format!("line {}: {e}", lineno + 1)))?,
        );
    }
    Ok(out)
}

pub fn write_labels(path: &Path, labels: &[i64]) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    for l in labels {
        writeln!(f, "{l}")?;
    }
    f.flush()?;
    Ok(())
}

/// Reads a view from CSV with a header row of column names.
pub fn read_view_csv(path: &Path, kind: ViewKind) -> Result<ViewMatrix> {
    let context = path.display().to_string();
    let mut reader = csv::Reader::from_path(path)?;
    let ncols = reader.headers()?.len();
    let mut data = Vec::new();
    let mut nrows = 0;
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != ncols {
            return Err(Error::parse(
                &context,
                format!("row {} has {} fields", r + 1, record.len()),
            ));
        }
        for field in record.iter() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|e| Error::parse(&context, format!("row {}: '{field}': {e}", r + 1)))?;
            data.push(v);
        }
        nrows += 1;
    }
    ViewMatrix::new(kind, DMatrix::from_row_slice(nrows, ncols, &data))
}

/// Writes a view as CSV with columns `<name>_<j>`.
pub fn write_view_csv(path: &Path, view: &ViewMatrix) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record((0..view.dim()).map(|j| format!("{}_{j}", view.name())))?;
    for row in view.values().row_iter() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Binary (P5) 8-bit grayscale map, row-major.
pub fn write_pgm(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    if pixels.len() != width * height {
        return Err(Error::invalid(format!(
            "pgm buffer has {} pixels, expected {width}x{height}",
            pixels.len()
        )));
    }
    let mut f = fs::File::create(path)?;
    write!(f, "P5\n{width} {height}\n255\n")?;
    f.write_all(pixels)?;
    Ok(())
}

/// Reads a P5 map written by [`write_pgm`]. Returns `(width, height, pixels)`.
pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let context = path.display().to_string();
    let bytes = fs::read(path)?;
    let mut tokens = Vec::new();
    let mut pos = 0;
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::parse(&context, "truncated header"));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if tokens[0] != "P5" {
        return Err(Error::parse(&context, "not a P5 file"));
    }
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|e| Error::parse(&context, e.to_string()))
    };
    let (w, h) = (parse(&tokens[1])?, parse(&tokens[2])?);
    let pixels = bytes[pos + 1..].to_vec();
    if pixels.len() != w * h {
        return Err(Error::parse(&context, "pixel count mismatch"));
    }
    Ok((w, h, pixels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let data: Vec<f64> = (0..24).map(|i| i as f64 * 0.5).collect();
        let cube = HyperspectralCube::new(3, 2, 4, data).unwrap();
        let hdr = dir.path().join("c.hdr");
        write_cube(&hdr, &cube).unwrap();
        assert_eq!(read_cube(&hdr).unwrap(), cube);
    }

    #[test]
    fn cube_rejects_bad_dtype_and_size() {
        let dir = tempfile::tempdir().unwrap();
        let hdr = dir.path().join("c.hdr");
        fs::write(
            &hdr,
            "width=2\nheight=2\nbands=1\ndtype=u8\ninterleave=bsq\n",
        )
        .unwrap();
        assert!(read_cube(&hdr).is_err());
        fs::write(
            &hdr,
            "width=2\nheight=2\nbands=1\ndtype=f32le\ninterleave=bsq\n",
        )
        .unwrap();
        fs::write(dir.path().join("c.raw"), [0u8; 12]).unwrap();
        assert!(read_cube(&hdr).is_err());
    }

    #[test]
    fn labels_and_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("labels.txt");
        write_labels(&p, &[0, 3, 1]).unwrap();
        assert_eq!(read_labels(&p).unwrap(), vec![0, 3, 1]);

        let view = ViewMatrix::new(
            ViewKind::Texture,
            DMatrix::from_row_slice(2, 3, &[0.1, -2.5, 1e-300, 4.0, 5.0, 6.125]),
        )
        .unwrap();
        let p = dir.path().join("v.csv");
        write_view_csv(&p, &view).unwrap();
        assert_eq!(read_view_csv(&p, ViewKind::Texture).unwrap(), view);
    }

    #[test]
    fn pgm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.pgm");
        let px: Vec<u8> = (0..12).map(|i| (i * 20) as u8).collect();
        write_pgm(&p, 4, 3, &px).unwrap();
        assert_eq!(read_pgm(&p).unwrap(), (4, 3, px));
        assert!(write_pgm(&p, 5, 3, &[0; 12]).is_err());
    }
}
