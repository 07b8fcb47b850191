//! Named strategy registries: variants behind a common trait, selected at
//! runtime from configuration.

use crate::error::{Error, Result};

/// Constructors of type `F` keyed by name, in registration order.
#[derive(Clone)]
pub struct Registry<F> {
    kind: &'static str,
    entries: Vec<(&'static str, F)>,
}

impl<F> Registry<F> {
    pub fn new(kind: &'static str) -> Self {
        Registry {
            kind,
            entries: Vec::new(),
        }
    }

    /// Add a constructor; a later entry with the same name replaces the earlier one.
    pub fn register(mut self, name: &'static str, constructor: F) -> Self {
        self.entries.retain(|(n, _)| *n != name);
        self.entries.push((name, constructor));
        self
    }

    pub fn get(&self, name: &str) -> Result<&F> {
        self.entries
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, f)| f)
            .ok_or_else(|| Error::UnknownStrategy {
                registry: self.kind,
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }

    pub fn kind(&self) -> &'static str {
        self.kind
    }
}
