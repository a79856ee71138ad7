//! JSON layout shared by every serializable module.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::numcore::{Activation, ParamSet};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    #[default]
    Up,
    Low,
}

impl Side {
    pub fn flip(self) -> Self {
        match self {
            Side::Up => Side::Low,
            Side::Low => Side::Up,
        }
    }

    /// `Up, Low, Up, ...` starting from `Up` at index 0.
    pub fn alternating(i: usize) -> Self {
        if i.is_multiple_of(2) {
            Side::Up
        } else {
            Side::Low
        }
    }
}

/// `{type, side?, activation?, dims, params}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModuleDoc {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<Side>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activation: Option<Activation>,
    pub dims: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub params: Map<String, Value>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub children: BTreeMap<String, Value>,
}

impl ModuleDoc {
    pub fn new(kind: &str) -> Self {
        Self {
            kind: kind.to_string(),
            side: None,
            activation: None,
            dims: BTreeMap::new(),
            params: Map::new(),
            children: BTreeMap::new(),
        }
    }

    pub fn dim(mut self, name: &str, value: usize) -> Self {
        self.dims.insert(name.to_string(), value);
        self
    }

    pub fn side(mut self, side: Side) -> Self {
        self.side = Some(side);
        self
    }

    pub fn activation(mut self, act: Activation) -> Self {
        self.activation = Some(act);
        self
    }

    pub fn params(mut self, ps: &ParamSet) -> Self {
        self.params = ps.values_json();
        self
    }

    pub fn child(mut self, name: &str, value: Value) -> Self {
        self.children.insert(name.to_string(), value);
        self
    }

    pub fn expect_kind(&self, kind: &str) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::Format(format!(
                "expected module type `{kind}`, found `{}`",
                self.kind
            )))
        }
    }

    pub fn get_dim(&self, name: &str) -> Result<usize> {
        self.dims
            .get(name)
            .copied()
            .ok_or_else(|| Error::Format(format!("`{}` module missing dim `{name}`", self.kind)))
    }

    pub fn get_side(&self) -> Result<Side> {
        self.side
            .ok_or_else(|| Error::Format(format!("`{}` module missing side", self.kind)))
    }

    pub fn get_child(&self, name: &str) -> Result<&Value> {
        self.children
            .get(name)
            .ok_or_else(|| Error::Format(format!("`{}` module missing `{name}`", self.kind)))
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("module documents serialize")
    }

    pub fn from_value(v: &Value) -> Result<Self> {
        Ok(Self::deserialize(v)?)
    }
}
