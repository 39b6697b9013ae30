use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use super::{JointAction, Policy, MAX_ACCEL};
use crate::math;
use crate::scenegraph::{EdgeFeatures, ObservationGraph, RelationKind, SceneConfig};

pub const VERTEX_INPUTS: usize = 4;
/// Relation one-hot (3), distance, receiver priority, receiver and sender
/// distance to the conflict.
pub const EDGE_INPUTS: usize = 7;
pub const MESSAGE_LAYERS: usize = 3;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Option<Self> {
        (rows * cols == data.len() && rows > 0 && cols > 0).then_some(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    /// `self · x + bias`, rectified.
    fn affine_relu(&self, bias: &Matrix, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for r in 0..self.rows {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let z: f64 = row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + bias.data[r];
            out.push(z.max(0.0));
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightsError {
    Missing(String),
    Unexpected(String),
    Shape {
        name: String,
        expected: (usize, usize),
        found: (usize, usize),
    },
    NonFinite(String),
}

impl fmt::Display for WeightsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightsError::Missing(n) => write!(f, "missing tensor `{n}`"),
            WeightsError::Unexpected(n) => write!(f, "unexpected tensor `{n}`"),
            WeightsError::Shape { name, expected, found } => write!(
                f,
                "tensor `{name}` has shape {}x{}, expected {}x{}",
                found.0, found.1, expected.0, expected.1
            ),
            WeightsError::NonFinite(n) => write!(f, "tensor `{n}` contains a non-finite value"),
        }
    }
}

/// Validated parameters of the graph network.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyWeights {
    hidden: usize,
    tensors: BTreeMap<String, Matrix>,
}

impl PolicyWeights {
    /// Tensor names with their shapes for hidden width `h`.
    pub fn layout(hidden: usize) -> Vec<(String, (usize, usize))> {
        let h = hidden;
        let mut out = vec![
            ("vertex_encoder.weight".to_string(), (h, VERTEX_INPUTS)),
            ("vertex_encoder.bias".to_string(), (h, 1)),
            ("edge_encoder.weight".to_string(), (h, EDGE_INPUTS)),
            ("edge_encoder.bias".to_string(), (h, 1)),
        ];
        for k in 0..MESSAGE_LAYERS {
            out.push((format!("layer{k}.message.weight"), (h, 2 * h)));
            out.push((format!("layer{k}.message.bias"), (h, 1)));
            out.push((format!("layer{k}.update.weight"), (h, 2 * h)));
            out.push((format!("layer{k}.update.bias"), (h, 1)));
        }
        out.push(("decoder.weight".to_string(), (1, h)));
        out.push(("decoder.bias".to_string(), (1, 1)));
        out
    }

    /// Checks names and shapes; the hidden width is read from the vertex encoder.
    pub fn new(tensors: BTreeMap<String, Matrix>) -> Result<Self, WeightsError> {
        let enc = tensors
            .get("vertex_encoder.weight")
            .ok_or_else(|| WeightsError::Missing("vertex_encoder.weight".to_string()))?;
        let hidden = enc.rows;
        let layout = Self::layout(hidden);
        for (name, shape) in &layout {
            let t = tensors.get(name).ok_or_else(|| WeightsError::Missing(name.clone()))?;
            if (t.rows, t.cols) != *shape {
                return Err(WeightsError::Shape {
                    name: name.clone(),
                    expected: *shape,
                    found: (t.rows, t.cols),
                });
            }
            if t.data.iter().any(|x| !x.is_finite()) {
                return Err(WeightsError::NonFinite(name.clone()));
            }
        }
        if let Some(extra) = tensors.keys().find(|k| !layout.iter().any(|(n, _)| n == *k)) {
            return Err(WeightsError::Unexpected(extra.clone()));
        }
        Ok(Self { hidden, tensors })
    }

    /// Fills every tensor from `f(name, row, col)`.
    pub fn from_fn(hidden: usize, mut f: impl FnMut(&str, usize, usize) -> f64) -> Self {
        let tensors = Self::layout(hidden)
            .into_iter()
            .map(|(name, (r, c))| {
                let mut data = Vec::with_capacity(r * c);
                for i in 0..r {
                    for j in 0..c {
                        data.push(f(&name, i, j));
                    }
                }
                let m = Matrix::new(r, c, data).unwrap();
                (name, m)
            })
            .collect();
        Self::new(tensors).expect("layout is consistent")
    }

    pub fn zeros(hidden: usize) -> Self {
        Self::from_fn(hidden, |_, _, _| 0.0)
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn tensors(&self) -> &BTreeMap<String, Matrix> {
        &self.tensors
    }

    pub fn tensor(&self, name: &str) -> &Matrix {
        &self.tensors[name]
    }
}

/// Edge input vector; `f` must be seen from the receiving vertex.
pub fn edge_inputs(f: &EdgeFeatures, cfg: &SceneConfig) -> [f64; EDGE_INPUTS] {
    let kind = match f.kind {
        RelationKind::Crossing => [1.0, 0.0, 0.0],
        RelationKind::Merging => [0.0, 1.0, 0.0],
        RelationKind::Following => [0.0, 0.0, 1.0],
    };
    let s = |x: f64| (x / cfg.position_scale).clamp(-1.0, 1.0);
    [
        kind[0],
        kind[1],
        kind[2],
        s(f.distance),
        f64::from(f.priority),
        s(f.source_to_conflict),
        s(f.target_to_conflict),
    ]
}

/// Message-passing network: vertex and edge encoders, three rounds of
/// summed edge-conditioned messages with a vertex update, and a tanh decoder
/// scaled to the action bound.
#[derive(Debug, Clone, PartialEq)]
pub struct GnnPolicy {
    weights: PolicyWeights,
    scene: SceneConfig,
}

impl GnnPolicy {
    pub fn new(weights: PolicyWeights) -> Self {
        Self {
            weights,
            scene: SceneConfig::default(),
        }
    }

    pub fn with_scene_config(mut self, scene: SceneConfig) -> Self {
        self.scene = scene;
        self
    }

    pub fn weights(&self) -> &PolicyWeights {
        &self.weights
    }

    pub fn forward(&self, obs: &ObservationGraph) -> Vec<f64> {
        let w = &self.weights;
        let h = w.hidden;
        let n = obs.vertices().len();
        let mut state: Vec<Vec<f64>> = obs
            .vertices()
            .iter()
            .map(|v| {
                let mut out = Vec::with_capacity(h);
                w.tensor("vertex_encoder.weight").affine_relu(
                    w.tensor("vertex_encoder.bias"),
                    &v.normalized(&self.scene),
                    &mut out,
                );
                out
            })
            .collect();

        // Each undirected edge carries one message in each direction.
        let mut directed: Vec<(usize, usize, Vec<f64>)> = Vec::with_capacity(2 * obs.edges().len());
        for e in obs.edges() {
            let s = obs.vertex_index(e.source).unwrap();
            let t = obs.vertex_index(e.target).unwrap();
            for (sender, receiver, seen) in [(s, t, e.features.reversed()), (t, s, e.features)] {
                let mut enc = Vec::with_capacity(h);
                w.tensor("edge_encoder.weight").affine_relu(
                    w.tensor("edge_encoder.bias"),
                    &edge_inputs(&seen, &self.scene),
                    &mut enc,
                );
                directed.push((sender, receiver, enc));
            }
        }

        let mut input = Vec::with_capacity(2 * h);
        let mut msg = Vec::with_capacity(h);
        for k in 0..MESSAGE_LAYERS {
            let mw = w.tensor(&format!("layer{k}.message.weight"));
            let mb = w.tensor(&format!("layer{k}.message.bias"));
            let uw = w.tensor(&format!("layer{k}.update.weight"));
            let ub = w.tensor(&format!("layer{k}.update.bias"));
            let mut agg = vec![vec![0.0; h]; n];
            for (sender, receiver, enc) in &directed {
                input.clear();
                input.extend_from_slice(&state[*sender]);
                input.extend_from_slice(enc);
                mw.affine_relu(mb, &input, &mut msg);
                for (a, m) in agg[*receiver].iter_mut().zip(&msg) {
                    *a += m;
                }
            }
            for (hv, av) in state.iter_mut().zip(&agg) {
                input.clear();
                input.extend_from_slice(hv);
                input.extend_from_slice(av);
                let mut next = Vec::with_capacity(h);
                uw.affine_relu(ub, &input, &mut next);
                *hv = next;
            }
        }

        let dw = w.tensor("decoder.weight");
        let db = w.tensor("decoder.bias").get(0, 0);
        state
            .iter()
            .map(|hv| {
                let z: f64 = dw.data.iter().zip(hv).map(|(a, b)| a * b).sum::<f64>() + db;
                MAX_ACCEL * math::tanh(z)
            })
            .collect()
    }
}

impl Policy for GnnPolicy {
    fn select_action(&self, obs: &ObservationGraph) -> JointAction {
        let out = self.forward(obs);
        JointAction::new(obs.vertices().iter().map(|v| v.id).zip(out).collect())
    }
}
