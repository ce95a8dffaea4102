use std::path::Path;

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::io::json_real as real_value;

/// A contiguous block of the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamSlot {
    pub offset: usize,
    pub len: usize,
}

impl ParamSlot {
    pub fn view<'a, T>(&self, params: &'a [T]) -> &'a [T] {
        &params[self.offset..self.offset + self.len]
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub slot: ParamSlot,
}

/// Named, shaped views over one flat `f64` vector. Models hold
/// [`ParamSlot`]s and read their parameters from whatever scalar slice
/// they are handed, so the same store feeds plain evaluation and taped
/// training.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    entries: Vec<ParamEntry>,
    data: Vec<f64>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, shape: &[usize], values: Vec<f64>) -> Result<ParamSlot> {
        if self.entries.iter().any(|e| e.name == name) {
            return Err(Error::Format(format!("duplicate parameter name {name}")));
        }
        let len: usize = shape.iter().product();
        if len != values.len() {
            return Err(Error::shape(format!(
                "parameter {name}: shape {shape:?} vs {} values",
                values.len()
            )));
        }
        let slot = ParamSlot {
            offset: self.data.len(),
            len,
        };
        self.data.extend(values);
        self.entries.push(ParamEntry {
            name: name.to_string(),
            shape: shape.to_vec(),
            slot,
        });
        Ok(slot)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn set_values(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.data.len() {
            return Err(Error::shape("parameter vector length mismatch"));
        }
        self.data.copy_from_slice(values);
        Ok(())
    }

    pub fn entries(&self) -> &[ParamEntry] {
        &self.entries
    }

    pub fn get(&self, name: &str) -> Option<&ParamEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// `{name: {shape, data}}` with every real written to 17 significant digits.
    pub fn to_json(&self) -> Value {
        let mut root = Map::new();
        for e in &self.entries {
            let data = e.slot.view(&self.data).iter().map(|&x| real_value(x)).collect();
            let mut obj = Map::new();
            obj.insert(
                "shape".into(),
                Value::Array(e.shape.iter().map(|&d| Value::from(d as u64)).collect()),
            );
            obj.insert("data".into(), Value::Array(data));
            root.insert(e.name.clone(), Value::Object(obj));
        }
        Value::Object(root)
    }

    /// Overwrites values from a checkpoint whose names and shapes must
    /// match this store exactly.
    pub fn load_json(&mut self, json: &Value) -> Result<()> {
        let root = json
            .as_object()
            .ok_or_else(|| Error::Format("checkpoint must be a JSON object".into()))?;
        if root.len() != self.entries.len() {
            return Err(Error::Format(format!(
                "checkpoint has {} parameters, model expects {}",
                root.len(),
                self.entries.len()
            )));
        }
        for e in &self.entries {
            let (shape, data) = parse_entry(root.get(&e.name), &e.name)?;
            if shape != e.shape {
                return Err(Error::Format(format!(
                    "parameter {}: checkpoint shape {shape:?}, expected {:?}",
                    e.name, e.shape
                )));
            }
            self.data[e.slot.range()].copy_from_slice(&data);
        }
        Ok(())
    }

    /// Builds a store from a checkpoint, preserving its (sorted) name order.
    pub fn from_json(json: &Value) -> Result<Self> {
        let root = json
            .as_object()
            .ok_or_else(|| Error::Format("checkpoint must be a JSON object".into()))?;
        let mut store = ParamStore::new();
        for (name, entry) in root {
            let (shape, data) = parse_entry(Some(entry), name)?;
            store.add(name, &shape, data)?;
        }
        Ok(store)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(&self.to_json())?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.load_json(&serde_json::from_str(&text)?)
    }
}

fn parse_entry(entry: Option<&Value>, name: &str) -> Result<(Vec<usize>, Vec<f64>)> {
    let bad = || Error::Format(format!("checkpoint entry {name} is malformed"));
    let obj = entry.and_then(Value::as_object).ok_or_else(bad)?;
    let shape = obj
        .get("shape")
        .and_then(Value::as_array)
        .ok_or_else(bad)?
        .iter()
        .map(|v| v.as_u64().map(|d| d as usize).ok_or_else(bad))
        .collect::<Result<Vec<_>>>()?;
    let data = obj
        .get("data")
        .and_then(Value::as_array)
        .ok_or_else(bad)?
        .iter()
        .map(|v| v.as_f64().ok_or_else(bad))
        .collect::<Result<Vec<_>>>()?;
    if shape.iter().product::<usize>() != data.len() {
        return Err(bad());
    }
    Ok((shape, data))
}
