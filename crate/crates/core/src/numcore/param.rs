use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::array::RealArray;
use crate::error::{Error, Result};

/// A learnable array with its gradient accumulator.
#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub value: RealArray,
    pub grad: RealArray,
}

impl Param {
    pub fn new(value: RealArray) -> Self {
        let grad = RealArray::zeros(value.shape());
        Self { value, grad }
    }
}

/// Named learnable arrays, kept in insertion order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamSet {
    entries: Vec<(String, Param)>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, value: RealArray) -> Result<()> {
        if self.entries.iter().any(|(n, _)| n == name) {
            return Err(Error::invalid(format!("duplicate parameter name `{name}`")));
        }
        self.entries.push((name.to_string(), Param::new(value)));
        Ok(())
    }

    pub(crate) fn with(mut self, name: &str, value: RealArray) -> Self {
        self.insert(name, value).expect("unique parameter names");
        self
    }

    pub fn get(&self, name: &str) -> Option<&Param> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, p)| p)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Param> {
        self.entries.iter_mut().find(|(n, _)| n == name).map(|(_, p)| p)
    }

    /// Panics on unknown names; modules only ask for the names they created.
    pub(crate) fn value(&self, name: &str) -> &RealArray {
        &self.get(name).unwrap_or_else(|| panic!("no parameter `{name}`")).value
    }

    pub(crate) fn grad_mut(&mut self, name: &str) -> &mut RealArray {
        &mut self
            .get_mut(name)
            .unwrap_or_else(|| panic!("no parameter `{name}`"))
            .grad
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Param)> {
        self.entries.iter().map(|(n, p)| (n.as_str(), p))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Param)> {
        self.entries.iter_mut().map(|(n, p)| (n.as_str(), p))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn zero_grad(&mut self) {
        for (_, p) in &mut self.entries {
            p.grad.fill(0.0);
        }
    }

    /// Replaces values from a loaded document, checking names and shapes.
    pub fn load_values(&mut self, values: &Map<String, Value>) -> Result<()> {
        for (name, p) in &mut self.entries {
            let raw = values
                .get(name.as_str())
                .ok_or_else(|| Error::Format(format!("missing parameter `{name}`")))?;
            let v = RealArray::deserialize(raw)?;
            if v.shape() != p.value.shape() {
                return Err(Error::Format(format!(
                    "parameter `{name}` has shape {:?}, expected {:?}",
                    v.shape(),
                    p.value.shape()
                )));
            }
            p.value = v;
        }
        Ok(())
    }

    pub fn values_json(&self) -> Map<String, Value> {
        self.entries
            .iter()
            .map(|(n, p)| (n.clone(), serde_json::to_value(&p.value).expect("finite arrays")))
            .collect()
    }
}

impl Serialize for ParamSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.values_json().serialize(s)
    }
}
