//! Single-file JSON model format.
//!
//! ```text
//! { "format": "crashlab-ensemble", "version": 1, "kind": "gbt_regularized",
//!   "learning_rate": .., "base_score": .., "hyperparameters": {..},
//!   "feature_names": [..], "feature_gain": [..],
//!   "trees": [ { "feature": [..], "threshold": [..], "left": [..],
//!                "right": [..], "value": [..], "gain": [..] }, .. ] }
//! ```
//! Tree arrays are indexed by node; `feature == -1` marks a leaf.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::ensemble::{Ensemble, EnsembleKind};
use crate::error::{MlError, Result};
use crate::tree::{Node, Tree};

pub const FORMAT_NAME: &str = "crashlab-ensemble";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct FlatTree {
    feature: Vec<i64>,
    threshold: Vec<f64>,
    left: Vec<i64>,
    right: Vec<i64>,
    value: Vec<f64>,
    gain: Vec<f64>,
    feature_gain: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    kind: EnsembleKind,
    learning_rate: f64,
    base_score: f64,
    hyperparameters: BTreeMap<String, f64>,
    feature_names: Vec<String>,
    feature_gain: Vec<f64>,
    trees: Vec<FlatTree>,
}

fn flatten(t: &Tree) -> FlatTree {
    let mut f = FlatTree {
        feature: Vec::with_capacity(t.nodes.len()),
        threshold: Vec::new(),
        left: Vec::new(),
        right: Vec::new(),
        value: Vec::new(),
        gain: Vec::new(),
        feature_gain: t.feature_gain.clone(),
    };
    for node in &t.nodes {
        match *node {
            Node::Leaf { value } => {
                f.feature.push(-1);
                f.threshold.push(0.0);
                f.left.push(-1);
                f.right.push(-1);
                f.value.push(value);
                f.gain.push(0.0);
            }
            Node::Split {
                feature,
                threshold,
                gain,
                left,
                right,
            } => {
                f.feature.push(feature as i64);
                f.threshold.push(threshold);
                f.left.push(left as i64);
                f.right.push(right as i64);
                f.value.push(0.0);
                f.gain.push(gain);
            }
        }
    }
    f
}

fn unflatten(f: FlatTree, n_features: usize) -> Result<Tree> {
    let n = f.feature.len();
    let lens = [
        f.threshold.len(),
        f.left.len(),
        f.right.len(),
        f.value.len(),
        f.gain.len(),
    ];
    if n == 0 || lens.iter().any(|&l| l != n) {
        return Err(MlError::Format("tree arrays have mismatched lengths".into()));
    }
    let child = |c: i64, at: usize| -> Result<usize> {
        if c > at as i64 && (c as usize) < n {
            Ok(c as usize)
        } else {
            Err(MlError::Format(format!("node {at} has invalid child {c}")))
        }
    };
    let mut nodes = Vec::with_capacity(n);
    for i in 0..n {
        nodes.push(if f.feature[i] < 0 {
            Node::Leaf { value: f.value[i] }
        } else {
            let feature = f.feature[i] as usize;
            if feature >= n_features {
                return Err(MlError::Format(format!("node {i} splits on unknown feature {feature}")));
            }
            Node::Split {
                feature,
                threshold: f.threshold[i],
                gain: f.gain[i],
                left: child(f.left[i], i)?,
                right: child(f.right[i], i)?,
            }
        });
    }
    Ok(Tree {
        nodes,
        feature_gain: f.feature_gain,
    })
}

pub fn save_model<W: Write>(m: &Ensemble, feature_names: &[String], sink: W) -> Result<()> {
    let file = ModelFile {
        format: FORMAT_NAME.into(),
        version: FORMAT_VERSION,
        kind: m.kind,
        learning_rate: m.learning_rate,
        base_score: m.base_score,
        hyperparameters: m.hyperparameters.clone(),
        feature_names: feature_names.to_vec(),
        feature_gain: m.feature_gain.clone(),
        trees: m.trees.iter().map(flatten).collect(),
    };
    serde_json::to_writer(sink, &file).map_err(|e| MlError::Format(e.to_string()))
}

/// Loads a model and the feature names it was trained on.
pub fn load_model<R: Read>(source: R) -> Result<(Ensemble, Vec<String>)> {
    let file: ModelFile = serde_json::from_reader(source).map_err(|e| MlError::Format(e.to_string()))?;
    if file.format != FORMAT_NAME {
        return Err(MlError::Format(format!("not a model file (format `{}`)", file.format)));
    }
    if file.version != FORMAT_VERSION {
        return Err(MlError::Format(format!("unsupported model version {}", file.version)));
    }
    if file.trees.is_empty() {
        return Err(MlError::Format("model has no trees".into()));
    }
    let p = file.feature_gain.len();
    let trees = file
        .trees
        .into_iter()
        .map(|t| unflatten(t, p))
        .collect::<Result<Vec<_>>>()?;
    Ok((
        Ensemble {
            kind: file.kind,
            trees,
            learning_rate: file.learning_rate,
            base_score: file.base_score,
            hyperparameters: file.hyperparameters,
            feature_gain: file.feature_gain,
        },
        file.feature_names,
    ))
}
