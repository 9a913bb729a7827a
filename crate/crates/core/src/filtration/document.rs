//! JSON input documents.
//!
//! Two shapes are accepted:
//!
//! ```json
//! {"dyadic": {"depth": 2, "weights": {"w": [1, 2, 3, 4]}}}
//! {"tree": {"id": "r", "children": [{"id": "a", "mass": 0.5}, {"id": "b", "mass": 0.5}]},
//!  "weights": {"w": {"a": 1, "b": 3}}}
//! ```
//!
//! Internal nodes may carry a `mass`; when present it must equal the sum of
//! the children's masses. Leaf masses are normalized to total one.

use std::collections::HashSet;
use std::ops::Range;

use serde_json::{Map, Value};

use super::{Filtration, Weight, IDENTITY_TOL};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf {
        id: String,
        mass: f64,
    },
    Internal {
        id: String,
        mass: Option<f64>,
        children: Vec<Node>,
    },
}

#[derive(Debug, Clone)]
pub struct Document {
    pub filtration: Filtration,
    pub weights: Vec<Weight>,
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::Malformed(msg.into())
}

pub fn parse_document(text: &str) -> Result<Document> {
    let value: Value = serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| malformed("top level must be an object"))?;

    if let Some(d) = obj.get("dyadic") {
        return parse_dyadic(d);
    }
    if let Some(t) = obj.get("tree") {
        let root = parse_node(t)?;
        let filtration = Filtration::from_tree(&root)?;
        let weights = match obj.get("weights") {
            None => Vec::new(),
            Some(w) => parse_keyed_weights(&filtration, w)?,
        };
        return Ok(Document {
            filtration,
            weights,
        });
    }
    Err(malformed("expected a `dyadic` or `tree` key"))
}

fn parse_dyadic(d: &Value) -> Result<Document> {
    let d = d
        .as_object()
        .ok_or_else(|| malformed("`dyadic` must be an object"))?;
    let depth = d
        .get("depth")
        .and_then(Value::as_u64)
        .ok_or_else(|| malformed("`dyadic.depth` must be a non-negative integer"))?;
    let filtration = Filtration::dyadic(depth as usize)?;
    let mut weights = Vec::new();
    if let Some(w) = d.get("weights") {
        for (name, vals) in object(w, "dyadic.weights")? {
            let arr = vals
                .as_array()
                .ok_or_else(|| malformed(format!("weight `{name}` must be an array")))?;
            if arr.len() != filtration.leaf_count() {
                return Err(Error::LengthMismatch {
                    expected: filtration.leaf_count(),
                    got: arr.len(),
                });
            }
            let values = arr
                .iter()
                .map(|v| number(v, name))
                .collect::<Result<Vec<_>>>()?;
            weights.push(named_weight(&filtration, name, values)?);
        }
    }
    Ok(Document {
        filtration,
        weights,
    })
}

fn parse_keyed_weights(f: &Filtration, w: &Value) -> Result<Vec<Weight>> {
    let mut out = Vec::new();
    for (name, vals) in object(w, "weights")? {
        let map = object(vals, name)?;
        let mut values = vec![f64::NAN; f.leaf_count()];
        for (key, v) in map {
            let i = f.leaf_index(key).ok_or_else(|| Error::UnknownLeaf {
                weight: name.clone(),
                key: key.clone(),
            })?;
            values[i] = number(v, name)?;
        }
        if let Some(i) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::MissingLeaf {
                weight: name.clone(),
                leaf: f.leaf_ids()[i].clone(),
            });
        }
        out.push(named_weight(f, name, values)?);
    }
    Ok(out)
}

fn named_weight(f: &Filtration, name: &str, values: Vec<f64>) -> Result<Weight> {
    Weight::new(name, values).map_err(|e| match e {
        Error::NonPositiveWeight {
            weight,
            leaf,
            value,
        } => {
            let leaf = leaf
                .parse::<usize>()
                .ok()
                .and_then(|i| f.leaf_ids().get(i).cloned())
                .unwrap_or(leaf);
            Error::NonPositiveWeight {
                weight,
                leaf,
                value,
            }
        }
        other => other,
    })
}

fn object<'a>(v: &'a Value, what: &str) -> Result<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| malformed(format!("`{what}` must be an object")))
}

fn number(v: &Value, what: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| malformed(format!("non-numeric value in `{what}`")))
}

fn parse_node(v: &Value) -> Result<Node> {
    let obj = object(v, "node")?;
    let id = obj
        .get("id")
        .and_then(Value::as_str)
        .ok_or_else(|| malformed("every node needs a string `id`"))?
        .to_string();
    let mass = match obj.get("mass") {
        None => None,
        Some(m) => Some(number(m, &id)?),
    };
    match obj.get("children") {
        None => {
            let mass = mass.ok_or_else(|| malformed(format!("leaf `{id}` needs a `mass`")))?;
            Ok(Node::Leaf { id, mass })
        }
        Some(c) => {
            let arr = c
                .as_array()
                .ok_or_else(|| malformed(format!("`children` of `{id}` must be an array")))?;
            if arr.is_empty() {
                return Err(malformed(format!(
                    "node `{id}` has an empty `children` list"
                )));
            }
            let children = arr.iter().map(parse_node).collect::<Result<Vec<_>>>()?;
            Ok(Node::Internal { id, mass, children })
        }
    }
}

impl Node {
    fn id(&self) -> &str {
        match self {
            Node::Leaf { id, .. } | Node::Internal { id, .. } => id,
        }
    }

    fn height(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Internal { children, .. } => {
                1 + children.iter().map(Node::height).max().unwrap_or(0)
            }
        }
    }

    /// Validates masses bottom-up and returns the subtree mass.
    fn checked_mass(&self) -> Result<f64> {
        match self {
            Node::Leaf { id, mass } => {
                if !(*mass > 0.0 && mass.is_finite()) {
                    return Err(Error::NonPositiveMass {
                        id: id.clone(),
                        mass: *mass,
                    });
                }
                Ok(*mass)
            }
            Node::Internal { id, mass, children } => {
                let sum = children
                    .iter()
                    .map(Node::checked_mass)
                    .sum::<Result<f64>>()?;
                if let Some(m) = *mass {
                    if !(m > 0.0 && m.is_finite()) {
                        return Err(Error::NonPositiveMass {
                            id: id.clone(),
                            mass: m,
                        });
                    }
                    if (m - sum).abs() > IDENTITY_TOL * m.max(sum) {
                        return Err(Error::NotPartition {
                            id: id.clone(),
                            parent: m,
                            children: sum,
                        });
                    }
                }
                Ok(sum)
            }
        }
    }

    fn collect_leaves(&self, ids: &mut Vec<String>, masses: &mut Vec<f64>) {
        match self {
            Node::Leaf { id, mass } => {
                ids.push(id.clone());
                masses.push(*mass);
            }
            Node::Internal { children, .. } => {
                for c in children {
                    c.collect_leaves(ids, masses);
                }
            }
        }
    }

    fn leaf_count(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Internal { children, .. } => children.iter().map(Node::leaf_count).sum(),
        }
    }

    /// Emits the leaf ranges of the level-`target` partition below this node.
    fn level_ranges(&self, depth: usize, target: usize, start: usize, out: &mut Vec<Range<usize>>) {
        let len = self.leaf_count();
        match self {
            Node::Internal { children, .. } if depth < target => {
                let mut s = start;
                for c in children {
                    c.level_ranges(depth + 1, target, s, out);
                    s += c.leaf_count();
                }
            }
            _ => out.push(start..start + len),
        }
    }

    fn collect_ids<'a>(&'a self, seen: &mut HashSet<&'a str>) -> Result<()> {
        if !seen.insert(self.id()) {
            return Err(Error::DuplicateLeaf(self.id().to_string()));
        }
        if let Node::Internal { children, .. } = self {
            for c in children {
                c.collect_ids(seen)?;
            }
        }
        Ok(())
    }
}

impl Filtration {
    /// Builds a filtration from an explicit atom tree.
    pub fn from_tree(root: &Node) -> Result<Self> {
        root.collect_ids(&mut HashSet::new())?;
        root.checked_mass()?;
        let mut ids = Vec::new();
        let mut masses = Vec::new();
        root.collect_leaves(&mut ids, &mut masses);
        let depth = root.height();
        let ranges = (0..=depth)
            .map(|n| {
                let mut out = Vec::new();
                root.level_ranges(0, n, 0, &mut out);
                out
            })
            .collect();
        Filtration::from_ranges(ids, masses, ranges)
    }
}
