//! The `mfield-json v1` field file format.
//!
//! ```json
//! {"data": [[re, im], ...], "geometry": {"sizes": [N1, N2], "type": "torus"},
//!  "hermitian": true, "matrix_dim": 2, "version": 1}
//! ```
//!
//! `data` holds one m·m block per grid point in lexicographic order, each
//! block row-major. Floats are written in shortest round-trip form and parsed
//! with correct rounding, so write → read is bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::field::MatrixField;
use super::grid::TorusGrid;
use crate::error::{Error, Result};
use crate::C64;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Geometry {
    #[serde(rename = "type")]
    kind: String,
    sizes: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct FieldFile {
    version: u32,
    geometry: Geometry,
    matrix_dim: usize,
    hermitian: bool,
    data: Vec<[f64; 2]>,
}

pub fn to_json_string(field: &MatrixField) -> Result<String> {
    let file = FieldFile {
        version: FORMAT_VERSION,
        geometry: Geometry {
            kind: "torus".into(),
            sizes: field.grid().sizes().to_vec(),
        },
        matrix_dim: field.m(),
        hermitian: field.is_hermitian(),
        data: field.data().iter().map(|z| [z.re, z.im]).collect(),
    };
    // going through Value sorts the keys
    Ok(serde_json::to_string(&serde_json::to_value(file)?)?)
}

pub fn from_json_str(text: &str) -> Result<MatrixField> {
    let file: FieldFile = serde_json::from_str(text)?;
    if file.version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {}", file.version)));
    }
    if file.geometry.kind != "torus" {
        return Err(Error::Format(format!(
            "unsupported geometry type {:?}",
            file.geometry.kind
        )));
    }
    let grid = TorusGrid::new(&file.geometry.sizes)?;
    let data = file.data.iter().map(|&[re, im]| C64::new(re, im)).collect();
    MatrixField::new(grid, file.matrix_dim, data, file.hermitian)
}

pub fn write_field(field: &MatrixField, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_json_string(field)?)?;
    Ok(())
}

pub fn read_field(path: impl AsRef<Path>) -> Result<MatrixField> {
    from_json_str(&fs::read_to_string(path)?)
}
