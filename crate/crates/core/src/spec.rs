//! Decision space declaration and expansion into universes.
//!
//! A [`MultiverseSpec`] is an ordered list of decision points, each with an
//! ordered list of values, plus a set of forbidden co-occurrences. Expansion
//! enumerates the Cartesian product in mixed-radix order (the last declared
//! decision varies fastest). A universe's id is its mixed-radix index in the
//! *unconstrained* product, so ids stay stable when constraints change.
//!
//! The on-disk format is TOML; see `specs/default.toml` for the grammar.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum SpecError {
    #[error("multiverse spec declares no decision points")]
    EmptySpec,
    #[error("malformed constraint: {0}")]
    MalformedConstraint(String),
    #[error("invalid decision point `{id}`: {reason}")]
    InvalidDecision { id: String, reason: String },
    #[error("decision space has more than 2^64 universes")]
    SpaceTooLarge,
    #[error("cannot parse spec: {0}")]
    Parse(String),
    #[error("cannot parse universe digest `{0}`")]
    BadDigest(String),
    #[error("spec has no decision of kind `{0}`")]
    MissingKind(DecisionKind),
    #[error("spec has more than one decision of kind `{0}`")]
    DuplicateKind(DecisionKind),
    #[error("universe id {0} is not part of the expanded spec")]
    UnknownUniverse(u64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// What a decision point controls. The kind fixes which value shapes are legal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecisionKind {
    Count,
    DurationDays,
    ExclusionWindow,
    Scaling,
    Averaging,
    Rounding,
    VifThreshold,
    FittingFlag,
}

impl DecisionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DecisionKind::Count => "count",
            DecisionKind::DurationDays => "duration-days",
            DecisionKind::ExclusionWindow => "exclusion-window",
            DecisionKind::Scaling => "scaling",
            DecisionKind::Averaging => "averaging",
            DecisionKind::Rounding => "rounding",
            DecisionKind::VifThreshold => "vif-threshold",
            DecisionKind::FittingFlag => "fitting-flag",
        }
    }
}

impl fmt::Display for DecisionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One value of a decision point.
#[derive(Debug, Clone, PartialEq)]
pub enum DecisionValue {
    Int(i64),
    Real(f64),
    Pair(f64, f64),
    Symbol(String),
}

fn fmt_real(x: f64) -> String {
    // `{:?}` is the shortest round-trip form and always marks non-integers
    // (`15.0`, `3.5`, `1e-7`), so digests never confuse Real with Int.
    format!("{x:?}")
}

impl fmt::Display for DecisionValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecisionValue::Int(v) => write!(f, "{v}"),
            DecisionValue::Real(v) => f.write_str(&fmt_real(*v)),
            DecisionValue::Pair(a, b) => write!(f, "({},{})", fmt_real(*a), fmt_real(*b)),
            DecisionValue::Symbol(s) => f.write_str(s),
        }
    }
}

impl DecisionValue {
    /// Inverse of `Display`.
    pub fn parse(text: &str) -> Option<DecisionValue> {
        let text = text.trim();
        if let Some(inner) = text.strip_prefix('(').and_then(|t| t.strip_suffix(')')) {
            let (a, b) = inner.split_once(',')?;
            return Some(DecisionValue::Pair(a.trim().parse().ok()?, b.trim().parse().ok()?));
        }
        if let Ok(v) = text.parse::<i64>() {
            return Some(DecisionValue::Int(v));
        }
        if let Ok(v) = text.parse::<f64>() {
            if v.is_finite() {
                return Some(DecisionValue::Real(v));
            }
        }
        if is_identifier(text) {
            return Some(DecisionValue::Symbol(text.to_string()));
        }
        None
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            DecisionValue::Int(v) => Some(*v as f64),
            DecisionValue::Real(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            DecisionValue::Symbol(s) => Some(s),
            _ => None,
        }
    }

    /// Converts a TOML value into a decision value of the given kind.
    fn from_toml(kind: DecisionKind, value: &toml::Value) -> Result<DecisionValue, String> {
        use toml::Value as T;
        let number = |v: &T| match v {
            T::Integer(i) => Some(*i as f64),
            T::Float(f) => Some(*f),
            _ => None,
        };
        let symbol = |v: &T| v.as_str().map(|s| DecisionValue::Symbol(s.to_string()));
        let parsed = match kind {
            DecisionKind::Count => value.as_integer().map(DecisionValue::Int),
            DecisionKind::DurationDays | DecisionKind::VifThreshold => {
                number(value).map(DecisionValue::Real)
            }
            DecisionKind::ExclusionWindow => match value.as_array().map(Vec::as_slice) {
                Some([a, b]) => match (number(a), number(b)) {
                    (Some(a), Some(b)) => Some(DecisionValue::Pair(a, b)),
                    _ => None,
                },
                _ => None,
            },
            DecisionKind::Scaling | DecisionKind::Averaging => symbol(value),
            DecisionKind::Rounding => match value {
                T::Integer(i) => Some(DecisionValue::Int(*i)),
                other => symbol(other),
            },
            DecisionKind::FittingFlag => match value {
                T::Boolean(b) => Some(DecisionValue::Symbol(b.to_string())),
                other => symbol(other),
            },
        };
        parsed.ok_or_else(|| format!("value `{value}` has the wrong shape for kind `{kind}`"))
    }

    fn check(&self, kind: DecisionKind) -> Result<(), String> {
        let ok = match (kind, self) {
            (DecisionKind::Count, DecisionValue::Int(v)) => *v >= 2 && v % 2 == 0,
            (DecisionKind::DurationDays, DecisionValue::Real(v)) => v.is_finite() && *v > 0.0,
            (DecisionKind::ExclusionWindow, DecisionValue::Pair(a, b)) => {
                a.is_finite() && b.is_finite() && *a >= 0.0 && *b >= 0.0
            }
            (DecisionKind::Scaling, DecisionValue::Symbol(s)) => {
                matches!(s.as_str(), "original" | "ln" | "log10")
            }
            (DecisionKind::Averaging, DecisionValue::Symbol(s)) => {
                matches!(s.as_str(), "mean" | "median")
            }
            (DecisionKind::Rounding, DecisionValue::Symbol(s)) => s == "unmodified",
            (DecisionKind::Rounding, DecisionValue::Int(v)) => (0..=15).contains(v),
            (DecisionKind::VifThreshold, DecisionValue::Real(v)) => v.is_finite() && *v > 1.0,
            (DecisionKind::FittingFlag, DecisionValue::Symbol(s)) => {
                matches!(s.as_str(), "true" | "false")
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(format!("value `{self}` is not valid for kind `{kind}`"))
        }
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionPoint {
    pub id: String,
    pub kind: DecisionKind,
    pub values: Vec<DecisionValue>,
}

impl DecisionPoint {
    pub fn new(id: impl Into<String>, kind: DecisionKind, values: Vec<DecisionValue>) -> Self {
        DecisionPoint { id: id.into(), kind, values }
    }

    pub fn position(&self, value: &DecisionValue) -> Option<usize> {
        self.values.iter().position(|v| v == value)
    }
}

/// A set of (decision, value) pairs that may not all appear in one universe.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub forbidden: Vec<(String, DecisionValue)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiverseSpec {
    decisions: Vec<DecisionPoint>,
    constraints: Vec<Constraint>,
    // per constraint: (decision index, value index)
    resolved: Vec<Vec<(usize, usize)>>,
}

/// Assignment of one value to every decision, in declared order.
#[derive(Debug, Clone, PartialEq)]
pub struct UniverseSpec {
    pub id: u64,
    /// Value index per decision, aligned with [`MultiverseSpec::decisions`].
    pub indices: Vec<usize>,
    pub assignment: Vec<(String, DecisionValue)>,
}

impl UniverseSpec {
    pub fn value(&self, decision_id: &str) -> Option<&DecisionValue> {
        self.assignment.iter().find(|(id, _)| id == decision_id).map(|(_, v)| v)
    }

    pub fn digest(&self) -> String {
        universe_digest(&self.assignment)
    }
}

/// Canonical `id=value;id=value` text, sorted by decision id.
pub fn universe_digest(assignment: &[(String, DecisionValue)]) -> String {
    let mut parts: Vec<_> = assignment.iter().map(|(id, v)| format!("{id}={v}")).collect();
    parts.sort();
    parts.join(";")
}

/// Parses a digest back into a sorted assignment map.
pub fn parse_digest(digest: &str) -> Result<BTreeMap<String, DecisionValue>, SpecError> {
    let bad = || SpecError::BadDigest(digest.to_string());
    let mut out = BTreeMap::new();
    if digest.is_empty() {
        return Ok(out);
    }
    for part in split_digest(digest) {
        let (id, value) = part.split_once('=').ok_or_else(bad)?;
        let value = DecisionValue::parse(value).ok_or_else(bad)?;
        if out.insert(id.to_string(), value).is_some() {
            return Err(bad());
        }
    }
    Ok(out)
}

// Splits on ';' outside parentheses.
fn split_digest(digest: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, c) in digest.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ';' if depth == 0 => {
                parts.push(&digest[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&digest[start..]);
    parts
}

impl MultiverseSpec {
    pub fn new(
        decisions: Vec<DecisionPoint>,
        constraints: Vec<Constraint>,
    ) -> Result<MultiverseSpec, SpecError> {
        if decisions.is_empty() {
            return Err(SpecError::EmptySpec);
        }
        for (i, d) in decisions.iter().enumerate() {
            let invalid = |reason: String| SpecError::InvalidDecision { id: d.id.clone(), reason };
            if !is_identifier(&d.id) {
                return Err(invalid("id must be an identifier".into()));
            }
            if decisions[..i].iter().any(|other| other.id == d.id) {
                return Err(invalid("duplicate decision id".into()));
            }
            if d.values.is_empty() {
                return Err(invalid("value list is empty".into()));
            }
            for (j, v) in d.values.iter().enumerate() {
                v.check(d.kind).map_err(invalid)?;
                if d.values[..j].contains(v) {
                    return Err(invalid(format!("duplicate value `{v}`")));
                }
            }
        }
        let mut resolved = Vec::with_capacity(constraints.len());
        for c in &constraints {
            if c.forbidden.is_empty() {
                return Err(SpecError::MalformedConstraint("empty forbidden set".into()));
            }
            let mut pairs = Vec::with_capacity(c.forbidden.len());
            for (id, value) in &c.forbidden {
                let di = decisions.iter().position(|d| &d.id == id).ok_or_else(|| {
                    SpecError::MalformedConstraint(format!("unknown decision `{id}`"))
                })?;
                let vi = decisions[di].position(value).ok_or_else(|| {
                    SpecError::MalformedConstraint(format!(
                        "value `{value}` is not declared for decision `{id}`"
                    ))
                })?;
                if pairs.iter().any(|&(d, _)| d == di) {
                    return Err(SpecError::MalformedConstraint(format!(
                        "decision `{id}` appears twice in one constraint"
                    )));
                }
                pairs.push((di, vi));
            }
            resolved.push(pairs);
        }
        let spec = MultiverseSpec { decisions, constraints, resolved };
        spec.product_size()?;
        Ok(spec)
    }

    pub fn decisions(&self) -> &[DecisionPoint] {
        &self.decisions
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn decision(&self, id: &str) -> Option<&DecisionPoint> {
        self.decisions.iter().find(|d| d.id == id)
    }

    pub fn decision_of_kind(&self, kind: DecisionKind) -> Result<(usize, &DecisionPoint), SpecError> {
        let mut found = self.decisions.iter().enumerate().filter(|(_, d)| d.kind == kind);
        let first = found.next().ok_or(SpecError::MissingKind(kind))?;
        if found.next().is_some() {
            return Err(SpecError::DuplicateKind(kind));
        }
        Ok(first)
    }

    /// Size of the unconstrained Cartesian product.
    pub fn product_size(&self) -> Result<u64, SpecError> {
        self.decisions.iter().try_fold(1u64, |acc, d| {
            acc.checked_mul(d.values.len() as u64).ok_or(SpecError::SpaceTooLarge)
        })
    }

    pub fn with_constraints(&self, extra: Vec<Constraint>) -> Result<MultiverseSpec, SpecError> {
        let mut constraints = self.constraints.clone();
        constraints.extend(extra);
        MultiverseSpec::new(self.decisions.clone(), constraints)
    }

    fn violates(&self, indices: &[usize]) -> bool {
        self.resolved.iter().any(|pairs| pairs.iter().all(|&(d, v)| indices[d] == v))
    }

    fn decode(&self, mut id: u64, indices: &mut [usize]) {
        for (slot, d) in indices.iter_mut().zip(&self.decisions).rev() {
            let radix = d.values.len() as u64;
            *slot = (id % radix) as usize;
            id /= radix;
        }
    }

    /// Mixed-radix id of a value-index vector.
    pub fn encode(&self, indices: &[usize]) -> u64 {
        indices
            .iter()
            .zip(&self.decisions)
            .fold(0u64, |acc, (&i, d)| acc * d.values.len() as u64 + i as u64)
    }

    fn universe_from_indices(&self, id: u64, indices: Vec<usize>) -> UniverseSpec {
        let assignment = self
            .decisions
            .iter()
            .zip(&indices)
            .map(|(d, &i)| (d.id.clone(), d.values[i].clone()))
            .collect();
        UniverseSpec { id, indices, assignment }
    }

    /// Every constraint-satisfying assignment, ordered by universe id.
    pub fn expand(&self) -> Result<Vec<UniverseSpec>, SpecError> {
        let total = self.product_size()?;
        let mut indices = vec![0usize; self.decisions.len()];
        let mut out = Vec::new();
        for id in 0..total {
            self.decode(id, &mut indices);
            if !self.violates(&indices) {
                out.push(self.universe_from_indices(id, indices.clone()));
            }
        }
        Ok(out)
    }

    /// Number of universes `expand` would return.
    pub fn universe_count(&self) -> Result<u64, SpecError> {
        let total = self.product_size()?;
        if self.resolved.is_empty() {
            return Ok(total);
        }
        let mut indices = vec![0usize; self.decisions.len()];
        let mut count = 0;
        for id in 0..total {
            self.decode(id, &mut indices);
            if !self.violates(&indices) {
                count += 1;
            }
        }
        Ok(count)
    }

    pub fn universe(&self, id: u64) -> Result<UniverseSpec, SpecError> {
        if id >= self.product_size()? {
            return Err(SpecError::UnknownUniverse(id));
        }
        let mut indices = vec![0usize; self.decisions.len()];
        self.decode(id, &mut indices);
        if self.violates(&indices) {
            return Err(SpecError::UnknownUniverse(id));
        }
        Ok(self.universe_from_indices(id, indices))
    }

    /// Canonical text of the decision space; stable across formatting of the source file.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        for d in &self.decisions {
            let values: Vec<_> = d.values.iter().map(ToString::to_string).collect();
            out.push_str(&format!("{}:{}=[{}]\n", d.id, d.kind, values.join("|")));
        }
        for c in &self.constraints {
            out.push_str(&format!("forbid:{}\n", universe_digest(&c.forbidden)));
        }
        out
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_text().as_bytes()))
    }

    pub fn parse(text: &str) -> Result<MultiverseSpec, SpecError> {
        let file: SpecFile = toml::from_str(text).map_err(|e| SpecError::Parse(e.to_string()))?;
        let decisions = file
            .decision
            .into_iter()
            .map(|raw| {
                let values = raw
                    .values
                    .iter()
                    .map(|v| DecisionValue::from_toml(raw.kind, v))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|reason| SpecError::InvalidDecision { id: raw.id.clone(), reason })?;
                Ok(DecisionPoint::new(raw.id, raw.kind, values))
            })
            .collect::<Result<Vec<_>, SpecError>>()?;
        let constraints = resolve_constraint_tables(&decisions, file.constraints.forbid)?;
        MultiverseSpec::new(decisions, constraints)
    }

    /// Parses a file holding only a `[constraints]` section and adds it to this spec.
    pub fn add_constraints_text(&self, text: &str) -> Result<MultiverseSpec, SpecError> {
        let file: ConstraintsOnly =
            toml::from_str(text).map_err(|e| SpecError::Parse(e.to_string()))?;
        let extra = resolve_constraint_tables(&self.decisions, file.constraints.forbid)?;
        self.with_constraints(extra)
    }

    pub fn load(path: &Path) -> Result<MultiverseSpec, SpecError> {
        MultiverseSpec::parse(&std::fs::read_to_string(path)?)
    }
}

fn resolve_constraint_tables(
    decisions: &[DecisionPoint],
    tables: Vec<toml::Table>,
) -> Result<Vec<Constraint>, SpecError> {
    tables
        .into_iter()
        .map(|table| {
            let forbidden = table
                .into_iter()
                .map(|(id, value)| {
                    let kind = decisions.iter().find(|d| d.id == id).map(|d| d.kind).ok_or_else(
                        || SpecError::MalformedConstraint(format!("unknown decision `{id}`")),
                    )?;
                    let value =
                        DecisionValue::from_toml(kind, &value).map_err(SpecError::MalformedConstraint)?;
                    Ok((id, value))
                })
                .collect::<Result<Vec<_>, SpecError>>()?;
            Ok(Constraint { forbidden })
        })
        .collect()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    decision: Vec<RawDecision>,
    #[serde(default)]
    constraints: ConstraintSection,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDecision {
    id: String,
    kind: DecisionKind,
    values: Vec<toml::Value>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ConstraintSection {
    #[serde(default)]
    forbid: Vec<toml::Table>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintsOnly {
    constraints: ConstraintSection,
}

/// The shipped default spec (all values of the original decision tables, unconstrained).
pub const DEFAULT_SPEC: &str = include_str!("../specs/default.toml");

/// Constraint file that drops two of the six scaling × averaging combinations.
pub const CONSTRAINTS_3072: &str = include_str!("../specs/constraints_3072.toml");

pub fn default_spec() -> MultiverseSpec {
    MultiverseSpec::parse(DEFAULT_SPEC).expect("shipped default spec is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use DecisionValue::*;

    fn sym(s: &str) -> DecisionValue {
        Symbol(s.into())
    }

    fn ab_spec() -> MultiverseSpec {
        MultiverseSpec::new(
            vec![
                DecisionPoint::new("A", DecisionKind::Count, vec![Int(2), Int(4)]),
                DecisionPoint::new("B", DecisionKind::Averaging, vec![sym("mean")]),
            ],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn two_value_product() {
        let us = ab_spec().expand().unwrap();
        assert_eq!(us.len(), 2);
        assert_eq!(us[0].value("A"), Some(&Int(2)));
        assert_eq!(us[1].value("A"), Some(&Int(4)));
        assert_eq!(us[0].value("B"), Some(&sym("mean")));
        assert_eq!((us[0].id, us[1].id), (0, 1));
    }

    #[test]
    fn default_spec_product() {
        let spec = default_spec();
        assert_eq!(spec.decisions().len(), 8);
        assert_eq!(spec.expand().unwrap().len(), 4 * 4 * 4 * 3 * 2 * 3 * 2 * 2);
        let constrained = spec.add_constraints_text(CONSTRAINTS_3072).unwrap();
        let us = constrained.expand().unwrap();
        assert_eq!(us.len(), 3072);
        assert_eq!(constrained.universe_count().unwrap(), 3072);
        // ids are skipped, not renumbered
        assert!(constrained.universe(4607).is_err());
        assert!(us.windows(2).any(|w| w[1].id > w[0].id + 1));
        assert!(us.iter().all(|u| constrained.encode(&u.indices) == u.id));
    }

    #[test]
    fn empty_spec_rejected() {
        assert!(matches!(MultiverseSpec::new(vec![], vec![]), Err(SpecError::EmptySpec)));
    }

    #[test]
    fn dangling_constraint_rejected() {
        let spec = ab_spec();
        let bad = Constraint { forbidden: vec![("C".into(), Int(2))] };
        assert!(matches!(spec.with_constraints(vec![bad]), Err(SpecError::MalformedConstraint(_))));
        let bad = Constraint { forbidden: vec![("A".into(), Int(6))] };
        assert!(matches!(spec.with_constraints(vec![bad]), Err(SpecError::MalformedConstraint(_))));
    }

    #[test]
    fn invalid_values_rejected() {
        let odd = DecisionPoint::new("P", DecisionKind::Count, vec![Int(3)]);
        assert!(MultiverseSpec::new(vec![odd], vec![]).is_err());
        let dup = DecisionPoint::new("P", DecisionKind::Count, vec![Int(2), Int(2)]);
        assert!(MultiverseSpec::new(vec![dup], vec![]).is_err());
        let neg = DecisionPoint::new("E", DecisionKind::ExclusionWindow, vec![Pair(-1.0, 0.0)]);
        assert!(MultiverseSpec::new(vec![neg], vec![]).is_err());
    }

    #[test]
    fn digest_order_independent_and_injective() {
        let a = vec![("B".to_string(), sym("x")), ("A".to_string(), Int(1))];
        let b = vec![("A".to_string(), Int(1)), ("B".to_string(), sym("x"))];
        assert_eq!(universe_digest(&a), universe_digest(&b));
        assert_eq!(universe_digest(&b), "A=1;B=x");
        let c = vec![("A".to_string(), Int(2))];
        assert_ne!(universe_digest(&b[..1]), universe_digest(&c));
    }

    #[test]
    fn digest_round_trip_on_default_spec() {
        let spec = default_spec();
        for u in spec.expand().unwrap().iter().step_by(97) {
            let parsed = parse_digest(&u.digest()).unwrap();
            let expected: BTreeMap<_, _> = u.assignment.iter().cloned().collect();
            assert_eq!(parsed, expected);
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = "[[decision]]\nid = \"a\"\nkind = \"count\"\nvalues = [2]\nextra = 1\n";
        assert!(matches!(MultiverseSpec::parse(text), Err(SpecError::Parse(_))));
        let text = "[[decision]]\nid = \"a\"\nkind = \"count\"\nvalues = [2]\n[other]\n";
        assert!(matches!(MultiverseSpec::parse(text), Err(SpecError::Parse(_))));
    }

    #[test]
    fn universe_lookup_matches_expansion() {
        let spec = default_spec().add_constraints_text(CONSTRAINTS_3072).unwrap();
        for u in spec.expand().unwrap().iter().step_by(131) {
            assert_eq!(&spec.universe(u.id).unwrap(), u);
            assert_eq!(spec.encode(&u.indices), u.id);
        }
        assert!(spec.universe(1_000_000).is_err());
    }
}
