//! Portable parameter container: a JSON manifest plus named arrays with
//! shapes.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::MlpLayout;

pub const FORMAT: &str = "diffcarl-checkpoint/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    /// Producing algorithm tag.
    pub kind: String,
    pub manifest: serde_json::Value,
    pub arrays: Vec<NamedArray>,
}

impl Checkpoint {
    pub fn new(kind: &str, manifest: &impl Serialize) -> Result<Self> {
        Ok(Self {
            format: FORMAT.to_string(),
            kind: kind.to_string(),
            manifest: serde_json::to_value(manifest)?,
            arrays: Vec::new(),
        })
    }

    pub fn manifest<T: DeserializeOwned>(&self) -> Result<T> {
        Ok(serde_json::from_value(self.manifest.clone())?)
    }

    /// Stores a flat parameter vector split into the layout's tensors.
    pub fn push_layout(&mut self, prefix: &str, layout: &MlpLayout, params: &[f64]) {
        self.push_tensors(layout.tensors(prefix), params);
    }

    pub fn push_tensors(
        &mut self,
        tensors: Vec<(String, Vec<usize>, std::ops::Range<usize>)>,
        params: &[f64],
    ) {
        for (name, shape, range) in tensors {
            self.arrays.push(NamedArray {
                name,
                shape,
                data: params[range].to_vec(),
            });
        }
    }

    /// Reassembles a flat parameter vector of length `len` from tensors.
    pub fn read_tensors(
        &self,
        tensors: Vec<(String, Vec<usize>, std::ops::Range<usize>)>,
        len: usize,
    ) -> Result<Vec<f64>> {
        let mut out = vec![0.0; len];
        for (name, shape, range) in tensors {
            let arr = self
                .arrays
                .iter()
                .find(|a| a.name == name)
                .ok_or_else(|| Error::Config(format!("checkpoint lacks array {name}")))?;
            if arr.shape != shape || arr.data.len() != range.len() {
                return Err(Error::Shape {
                    expected: range.len(),
                    actual: arr.data.len(),
                });
            }
            out[range].copy_from_slice(&arr.data);
        }
        Ok(out)
    }

    pub fn read_layout(&self, prefix: &str, layout: &MlpLayout) -> Result<Vec<f64>> {
        self.read_tensors(layout.tensors(prefix), layout.num_params())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(BufWriter::new(f), self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let ck: Self = serde_json::from_reader(BufReader::new(f))?;
        if ck.format != FORMAT {
            return Err(Error::Config(format!(
                "unsupported checkpoint format {}",
                ck.format
            )));
        }
        Ok(ck)
    }
}
