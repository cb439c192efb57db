use std::path::Path;

use serde::Deserialize;

use super::{AffineIfs, AffineMap2};
use crate::error::{Error, Result};
use crate::projective::Mat2;

#[derive(Deserialize)]
struct IfsFile {
    system: SystemSection,
    #[serde(rename = "map", default)]
    maps: Vec<MapSection>,
}

#[derive(Deserialize)]
struct SystemSection {
    alphabet: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MapSection {
    #[serde(rename = "A")]
    a: [f64; 4],
    t: [f64; 2],
    p: f64,
}

/// Parses
///
/// ```toml
/// [system]
/// alphabet = 2
/// [[map]]
/// A = [0.5, 0.0, 0.0, 0.25]
/// t = [0.0, 0.0]
/// p = 0.5
/// ```
pub fn parse_ifs_toml(src: &str) -> Result<AffineIfs> {
    let file: IfsFile = toml::from_str(src).map_err(|e| Error::Config(e.to_string()))?;
    if file.maps.len() != file.system.alphabet {
        return Err(Error::Config(format!(
            "alphabet = {} but {} [[map]] tables",
            file.system.alphabet,
            file.maps.len()
        )));
    }
    let maps = file
        .maps
        .iter()
        .map(|m| AffineMap2::new(Mat2::from_row_major(m.a), m.t))
        .collect();
    let probs = file.maps.iter().map(|m| m.p).collect();
    AffineIfs::new(maps, probs)
}

pub fn load_ifs_toml(path: impl AsRef<Path>) -> Result<AffineIfs> {
    let path = path.as_ref();
    let src = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_ifs_toml(&src)
}

impl AffineIfs {
    pub fn to_toml(&self) -> String {
        let mut s = format!("[system]\nalphabet = {}\n", self.len());
        for (f, p) in self.maps.iter().zip(&self.probs) {
            let a = f.linear.to_row_major();
            s.push_str(&format!(
                "\n[[map]]\nA = [{:?}, {:?}, {:?}, {:?}]\nt = [{:?}, {:?}]\np = {:?}\n",
                a[0], a[1], a[2], a[3], f.translation[0], f.translation[1], p
            ));
        }
        s
    }
}
