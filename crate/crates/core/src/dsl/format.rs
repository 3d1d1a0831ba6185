//! Canonical formatter: the printable normal form behind spec hashing.
//!
//! Fixed two-space indentation, one declaration per line, comments
//! dropped, requirement and binding order preserved from the tree.
//! Re-parsing a formatted spec reproduces the tree exactly.

use std::fmt::Write;

use super::ast::*;
use super::merge::EffectiveSpec;
use crate::canonical::sha256_hex;

pub fn format_spec(spec: &SandboxSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "sandbox \"{}\" version \"{}\" {{", spec.name, spec.version);
    let _ = writeln!(out, "  system_type {}", spec.system_type);
    let _ = writeln!(out, "  risk_class {}", spec.risk_class.as_str());
    for req in &spec.requirements {
        write_requirement(&mut out, req, None);
    }
    out.push_str("}\n");
    out
}

pub fn format_extension(ext: &SpecExtension) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "extension \"{}\" extends \"{}\" version \"{}\" {{",
        ext.name, ext.extends_name, ext.extends_version
    );
    for req in &ext.additions {
        write_requirement(&mut out, req, Some("add"));
    }
    for req in &ext.refinements {
        write_requirement(&mut out, req, Some("refine"));
    }
    out.push_str("}\n");
    out
}

/// Canonical text of a merged specification: the flattened requirement
/// table under the core header, preceded by one header line naming the
/// applied extensions in application order. The header is omitted when no
/// extensions were applied, so an extension-free merge hashes like its
/// core.
pub fn format_effective(eff: &EffectiveSpec) -> String {
    let mut out = String::new();
    if !eff.applied_extensions.is_empty() {
        let _ = writeln!(out, "# extensions: {}", eff.applied_extensions.join(" "));
    }
    let _ = writeln!(out, "sandbox \"{}\" version \"{}\" {{", eff.core.name, eff.core.version);
    let _ = writeln!(out, "  system_type {}", eff.core.system_type);
    let _ = writeln!(out, "  risk_class {}", eff.core.risk_class.as_str());
    for req in &eff.requirements {
        write_requirement(&mut out, &req.as_requirement(), None);
    }
    out.push_str("}\n");
    out
}

fn write_requirement(out: &mut String, req: &Requirement, verb: Option<&str>) {
    out.push_str("  ");
    if let Some(verb) = verb {
        out.push_str(verb);
        out.push(' ');
    }
    let _ = write!(out, "requirement {}", req.id);
    if let Some(label) = &req.label {
        let _ = write!(out, " \"{label}\"");
    }
    if req.unbound {
        out.push_str(" unbound\n");
        return;
    }
    out.push_str(" {\n");
    for binding in &req.bindings {
        let _ = writeln!(
            out,
            "    metric {} {} {}",
            binding.metric_id,
            binding.comparator.token(),
            binding.threshold
        );
    }
    out.push_str("  }\n");
}

/// Lowercase hex SHA-256 of the canonical text of a core specification.
pub fn spec_hash(spec: &SandboxSpec) -> String {
    sha256_hex(format_spec(spec).as_bytes())
}

/// Lowercase hex SHA-256 of the canonical text of a merged specification.
pub fn effective_spec_hash(eff: &EffectiveSpec) -> String {
    sha256_hex(format_effective(eff).as_bytes())
}
