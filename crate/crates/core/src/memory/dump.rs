use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::explorer::Explorer;
use super::maps::CellState;

/// Sidecar describing a set of map layers written by [`dump_maps`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSidecar {
    pub rows: usize,
    pub cols: usize,
    pub resolution: f64,
    pub origin: [f64; 2],
    /// Layer name to file name, relative to the sidecar.
    pub layers: Vec<(String, String)>,
    /// How grey levels map back to values, per layer.
    pub encoding: Vec<(String, String)>,
}

/// Writes a binary (P5) portable graymap, one byte per pixel, row-major.
pub fn write_pgm(path: &Path, rows: usize, cols: usize, pixels: &[u8]) -> std::io::Result<()> {
    assert_eq!(pixels.len(), rows * cols);
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(f, "P5\n{cols} {rows}\n255\n")?;
    f.write_all(pixels)?;
    f.flush()
}

/// Reads back a P5 graymap written by [`write_pgm`].
pub fn read_pgm(path: &Path) -> std::io::Result<(usize, usize, Vec<u8>)> {
    let bytes = std::fs::read(path)?;
    let bad = || std::io::Error::new(std::io::ErrorKind::InvalidData, "not a P5 graymap");
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad());
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "P5" {
        return Err(bad());
    }
    let cols: usize = fields[1].parse().map_err(|_| bad())?;
    let rows: usize = fields[2].parse().map_err(|_| bad())?;
    let data = bytes.get(pos..pos + rows * cols).ok_or_else(bad)?.to_vec();
    Ok((rows, cols, data))
}

fn unit_to_byte(x: f64) -> u8 {
    (x.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Writes the obstacle, value, value-confidence and feature-confidence
/// layers as `<prefix>_<layer>.pgm` plus `<prefix>.json`. Returns the
/// sidecar path.
pub fn dump_maps(dir: &Path, prefix: &str, explorer: &Explorer) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let obs = explorer.obstacles();
    let (rows, cols) = (obs.rows(), obs.cols());
    let cells: Vec<_> = obs.cells().collect();
    let layers: Vec<(&str, Vec<u8>, &str)> = vec![
        (
            "obstacle",
            cells
                .iter()
                .map(|&c| match obs.get(c) {
                    CellState::Unknown => 128,
                    CellState::Free => 255,
                    CellState::Occupied => 0,
                })
                .collect(),
            "0 occupied, 128 unknown, 255 free",
        ),
        (
            "value",
            explorer.values().values().iter().map(|&v| unit_to_byte(v)).collect(),
            "grey / 255",
        ),
        (
            "value_confidence",
            explorer
                .values()
                .confidences()
                .iter()
                .map(|&v| unit_to_byte(v))
                .collect(),
            "grey / 255",
        ),
        (
            "feature_confidence",
            cells
                .iter()
                .map(|&c| unit_to_byte(explorer.features().confidence(c)))
                .collect(),
            "grey / 255",
        ),
    ];
    let mut sidecar = MapSidecar {
        rows,
        cols,
        resolution: obs.resolution(),
        origin: [obs.origin().x, obs.origin().y],
        layers: Vec::new(),
        encoding: Vec::new(),
    };
    for (name, pixels, encoding) in layers {
        let file = format!("{prefix}_{name}.pgm");
        write_pgm(&dir.join(&file), rows, cols, &pixels)?;
        sidecar.layers.push((name.to_string(), file));
        sidecar.encoding.push((name.to_string(), encoding.to_string()));
    }
    let path = dir.join(format!("{prefix}.json"));
    std::fs::write(
        &path,
        serde_json::to_string_pretty(&sidecar).expect("sidecar serializes"),
    )?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.pgm");
        write_pgm(&path, 2, 3, &[0, 10, 20, 30, 40, 255]).unwrap();
        assert_eq!(read_pgm(&path).unwrap(), (2, 3, vec![0, 10, 20, 30, 40, 255]));
    }
}
