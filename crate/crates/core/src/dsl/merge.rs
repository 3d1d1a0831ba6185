//! Piggyback merging: sector extensions applied over a core specification.
//!
//! Extensions may add new requirements or refine existing ones; a
//! refinement may only tighten a threshold relative to the binding's base
//! value (the value it carried when first introduced) or add new bindings.
//! Loosening, deletion and comparator changes are rejected, which keeps
//! every effective requirement traceable to the horizontal core. When
//! several refinements touch one binding, the tightest value wins, so the
//! merged meaning does not depend on refinement order.

use super::ast::*;
use super::error::MergeError;

/// Where a requirement in the effective table came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Core,
    Extension(String),
}

impl Origin {
    pub fn name(&self) -> &str {
        match self {
            Origin::Core => "core",
            Origin::Extension(name) => name,
        }
    }
}

/// A binding in the effective table. `base` is the threshold the binding
/// was introduced with and is the reference point for loosening checks;
/// `threshold` is the tightest value seen so far.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveBinding {
    pub metric_id: String,
    pub comparator: Comparator,
    pub threshold: Threshold,
    base: Threshold,
}

impl EffectiveBinding {
    pub fn base(&self) -> &Threshold {
        &self.base
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveRequirement {
    pub id: String,
    pub label: Option<String>,
    pub origin: Origin,
    pub bindings: Vec<EffectiveBinding>,
    pub unbound: bool,
}

/// The merged requirement table: core order first, then additions in
/// application order.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveSpec {
    pub core: SandboxSpec,
    pub applied_extensions: Vec<String>,
    pub requirements: Vec<EffectiveRequirement>,
}

impl EffectiveSpec {
    /// Effective table of a core specification with no extensions applied.
    pub fn new(core: SandboxSpec) -> Self {
        let requirements = core
            .requirements
            .iter()
            .map(|req| EffectiveRequirement {
                id: req.id.clone(),
                label: req.label.clone(),
                origin: Origin::Core,
                bindings: req
                    .bindings
                    .iter()
                    .map(|b| EffectiveBinding {
                        metric_id: b.metric_id.clone(),
                        comparator: b.comparator,
                        threshold: b.threshold.clone(),
                        base: b.threshold.clone(),
                    })
                    .collect(),
                unbound: req.unbound,
            })
            .collect();
        EffectiveSpec { core, applied_extensions: Vec::new(), requirements }
    }

    /// Apply one extension to the current table. Merging a list of
    /// extensions is exactly the left fold of this step.
    pub fn apply(&mut self, ext: &SpecExtension) -> Result<(), MergeError> {
        if ext.extends_name != self.core.name || ext.extends_version != self.core.version {
            return Err(MergeError::ExtendsMismatch {
                extension: ext.name.clone(),
                declared_name: ext.extends_name.clone(),
                declared_version: ext.extends_version.to_string(),
                core_name: self.core.name.clone(),
                core_version: self.core.version.to_string(),
            });
        }

        for addition in &ext.additions {
            if self.requirements.iter().any(|r| r.id == addition.id) {
                return Err(MergeError::DuplicateAdd {
                    extension: ext.name.clone(),
                    id: addition.id.clone(),
                });
            }
            self.requirements.push(EffectiveRequirement {
                id: addition.id.clone(),
                label: addition.label.clone(),
                origin: Origin::Extension(ext.name.clone()),
                bindings: addition
                    .bindings
                    .iter()
                    .map(|b| EffectiveBinding {
                        metric_id: b.metric_id.clone(),
                        comparator: b.comparator,
                        threshold: b.threshold.clone(),
                        base: b.threshold.clone(),
                    })
                    .collect(),
                unbound: addition.unbound,
            });
        }

        for refinement in &ext.refinements {
            let entry = self
                .requirements
                .iter_mut()
                .find(|r| r.id == refinement.id)
                .ok_or_else(|| MergeError::RefineUnknown {
                    extension: ext.name.clone(),
                    id: refinement.id.clone(),
                })?;

            for binding in &refinement.bindings {
                match entry.bindings.iter_mut().find(|b| b.metric_id == binding.metric_id) {
                    None => {
                        // a refinement may extend a requirement with a new
                        // binding, which then becomes its own base
                        entry.bindings.push(EffectiveBinding {
                            metric_id: binding.metric_id.clone(),
                            comparator: binding.comparator,
                            threshold: binding.threshold.clone(),
                            base: binding.threshold.clone(),
                        });
                        entry.unbound = false;
                    }
                    Some(existing) => {
                        if existing.comparator != binding.comparator {
                            return Err(MergeError::ComparatorChanged {
                                extension: ext.name.clone(),
                                requirement_id: refinement.id.clone(),
                                metric_id: binding.metric_id.clone(),
                            });
                        }
                        let cmp = existing.comparator;
                        if cmp.looser(binding.threshold.value(), existing.base.value()) {
                            return Err(MergeError::LoosenedThreshold {
                                extension: ext.name.clone(),
                                requirement_id: refinement.id.clone(),
                                metric_id: binding.metric_id.clone(),
                                comparator: cmp.token(),
                                base: existing.base.text().to_string(),
                                refined: binding.threshold.text().to_string(),
                            });
                        }
                        // tightest threshold wins, independent of order
                        if cmp.tighter(binding.threshold.value(), existing.threshold.value()) {
                            existing.threshold = binding.threshold.clone();
                        }
                    }
                }
            }
        }

        self.applied_extensions.push(ext.name.clone());
        Ok(())
    }

    pub fn requirement(&self, id: &str) -> Option<&EffectiveRequirement> {
        self.requirements.iter().find(|r| r.id == id)
    }
}

/// Merge a core specification with extensions applied in list order.
pub fn merge(core: SandboxSpec, extensions: &[SpecExtension]) -> Result<EffectiveSpec, MergeError> {
    let mut eff = EffectiveSpec::new(core);
    for ext in extensions {
        eff.apply(ext)?;
    }
    Ok(eff)
}
