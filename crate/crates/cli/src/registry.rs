//! Name-keyed strategy families.
//!
//! Experiment kinds, interval maps, delay systems and covariance kernels are
//! each a family of interchangeable strategies, registered under the names a
//! config uses to select them.

use std::collections::BTreeMap;

use ddlab_core::dde_engine::DdeField;
use ddlab_core::gaussian_analytic::CovKernel;
use ddlab_core::map_density::MapSpec;

use crate::config::{KeySpec, RunConfig, Section};
use crate::kinds;
use crate::run::{Outputs, RunError};

/// One experiment kind: its config schema and how to set it up.
pub trait Experiment: Send + Sync {
    fn kind(&self) -> &'static str;

    fn about(&self) -> &'static str;

    /// `(section, key)` whose value picks a strategy family member, if any.
    fn selector(&self) -> Option<(&'static str, &'static str)> {
        None
    }

    /// Accepted keys given the selected family member (`None` when absent
    /// or unreadable). Errors name an unknown member.
    fn schema(&self, member: Option<&str>) -> Result<Vec<KeySpec>, String>;

    /// Builds and validates everything the run needs without computing.
    fn prepare(&self, cfg: &RunConfig) -> Result<Box<dyn Job>, RunError>;
}

/// A prepared, validated run.
pub trait Job: Send + Sync {
    fn run(&self, out: &mut Outputs) -> Result<(), RunError>;
}

/// A named constructor within a family.
pub trait Strategy<T>: Send + Sync {
    fn name(&self) -> &'static str;

    /// Keys the constructor reads, all in `[params]`.
    fn keys(&self) -> &'static [KeySpec];

    fn build(&self, params: Section<'_>) -> Result<T, RunError>;
}

struct Named<T> {
    name: &'static str,
    keys: &'static [KeySpec],
    build: fn(Section<'_>) -> Result<T, RunError>,
}

impl<T> Strategy<T> for Named<T> {
    fn name(&self) -> &'static str {
        self.name
    }

    fn keys(&self) -> &'static [KeySpec] {
        self.keys
    }

    fn build(&self, params: Section<'_>) -> Result<T, RunError> {
        (self.build)(params)
    }
}

pub struct Family<T> {
    what: &'static str,
    members: BTreeMap<&'static str, Box<dyn Strategy<T>>>,
}

impl<T: 'static> Family<T> {
    pub fn new(what: &'static str) -> Self {
        Self {
            what,
            members: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, s: Box<dyn Strategy<T>>) {
        self.members.insert(s.name(), s);
    }

    pub fn register_fn(
        &mut self,
        name: &'static str,
        keys: &'static [KeySpec],
        build: fn(Section<'_>) -> Result<T, RunError>,
    ) {
        self.register(Box::new(Named { name, keys, build }));
    }

    pub fn get(&self, name: &str) -> Result<&dyn Strategy<T>, String> {
        self.members.get(name).map(|b| b.as_ref()).ok_or_else(|| {
            format!(
                "unknown {} `{name}`; expected one of {}",
                self.what,
                self.names().join(", ")
            )
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.members.keys().copied().collect()
    }

    /// `base` plus the keys of member `name`, if it is known.
    pub fn schema(&self, base: &[KeySpec], name: Option<&str>) -> Result<Vec<KeySpec>, String> {
        let mut keys = base.to_vec();
        if let Some(name) = name {
            keys.extend_from_slice(self.get(name)?.keys());
        }
        Ok(keys)
    }

    pub fn build(&self, name: &str, params: Section<'_>) -> Result<T, RunError> {
        self.get(name).map_err(RunError::invalid)?.build(params)
    }
}

pub struct Registry {
    experiments: BTreeMap<&'static str, Box<dyn Experiment>>,
}

impl Registry {
    pub fn empty() -> Self {
        Self {
            experiments: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, e: Box<dyn Experiment>) {
        self.experiments.insert(e.kind(), e);
    }

    pub fn experiment(&self, kind: &str) -> Option<&dyn Experiment> {
        self.experiments.get(kind).map(|b| b.as_ref())
    }

    pub fn kinds(&self) -> Vec<&'static str> {
        self.experiments.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Experiment> {
        self.experiments.values().map(|b| b.as_ref())
    }
}

/// All shipped experiment kinds.
pub fn builtin() -> Registry {
    let mut r = Registry::empty();
    r.register(Box::new(kinds::MapIterate));
    r.register(Box::new(kinds::DdeEnsemble));
    r.register(Box::new(kinds::Gaussian));
    r.register(Box::new(kinds::Brownian));
    r.register(Box::new(kinds::Kicked));
    r.register(Box::new(kinds::Compare));
    r
}

pub fn maps() -> Family<MapSpec> {
    kinds::families::maps()
}

pub fn systems() -> Family<DdeField> {
    kinds::families::systems()
}

pub fn kernels() -> Family<CovKernel> {
    kinds::families::kernels()
}
