//! The recursive variational autoencoder.
//!
//! Leaves are embedded into `n`-dimensional codes; each of the seven spatial
//! relations owns one encoder MLP that merges two child codes plus their
//! relative position into a parent code, and one decoder MLP that splits a
//! parent code back. A node classifier decides during decoding whether a code
//! is a leaf or which decoder to apply next.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{LabeledBox, Rect};
use crate::hierarchy::{LayoutTree, RelativePosition, SpatialRelation, NUM_RELATIONS};
use crate::nn::{argmax, sigmoid, Activation, Dense, Mlp, Tensor};

/// Classifier output index meaning "this code is a leaf".
pub const LEAF_CLASS: usize = NUM_RELATIONS;
pub const NUM_CLASSES: usize = NUM_RELATIONS + 1;
pub const DEFAULT_MAX_NODES: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Code (and latent) size.
    pub code_size: usize,
    /// Hidden width of every one-hidden-layer MLP.
    pub hidden: usize,
    pub num_labels: usize,
}

impl ModelConfig {
    pub fn new(num_labels: usize) -> Self {
        Self {
            code_size: 300,
            hidden: 512,
            num_labels,
        }
    }

    pub fn feature_size(&self) -> usize {
        2 + self.num_labels
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub leaf_embedder: Dense,
    pub sre: Vec<Mlp>,
    pub srd: Vec<Mlp>,
    pub classifier: Mlp,
    pub leaf_projector: Dense,
    pub vae_mu: Dense,
    pub vae_logvar: Dense,
    pub vae_expand: Dense,
}

/// Decoded leaf: box size in `(0, 1)` and label scores.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafEstimate {
    pub w: f64,
    pub h: f64,
    pub label_logits: Vec<f64>,
}

impl LeafEstimate {
    pub fn label(&self) -> usize {
        argmax(&self.label_logits)
    }
}

/// Output of one decoder step.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitCode {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub rel_pos: RelativePosition,
}

/// Reparameterized latent sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Latent {
    pub z: Vec<f64>,
    pub mu: Vec<f64>,
    pub logvar: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedTree {
    pub tree: LayoutTree,
    /// The leaf budget forced at least one internal prediction into a leaf.
    pub truncated: bool,
}

/// `[w, h, one-hot label]` for a leaf box.
pub fn leaf_feature(b: &LabeledBox, num_labels: usize) -> Vec<f64> {
    let mut f = vec![0.0; 2 + num_labels];
    f[0] = b.rect.w;
    f[1] = b.rect.h;
    f[2 + b.label] = 1.0;
    f
}

impl ModelParams {
    /// All-zero parameters of the right shapes.
    pub fn zeros(config: ModelConfig) -> Self {
        let n = config.code_size;
        let h = config.hidden;
        let f = config.feature_size();
        Self {
            config,
            leaf_embedder: Dense::zeros(f, n),
            sre: (0..NUM_RELATIONS).map(|_| Mlp::zeros(2 * n + 2, h, n)).collect(),
            srd: (0..NUM_RELATIONS).map(|_| Mlp::zeros(n, h, 2 * n + 2)).collect(),
            classifier: Mlp::zeros(n, h, NUM_CLASSES),
            leaf_projector: Dense::zeros(n, f),
            vae_mu: Dense::zeros(n, n),
            vae_logvar: Dense::zeros(n, n),
            vae_expand: Dense::zeros(n, n),
        }
    }

    /// Gaussian initialization, std `1/sqrt(fan_in)` per weight tensor, zero biases.
    pub fn init<R: Rng + ?Sized>(config: ModelConfig, rng: &mut R) -> Self {
        let mut p = Self::zeros(config);
        p.leaf_embedder.init(rng);
        for m in p.sre.iter_mut().chain(p.srd.iter_mut()) {
            m.init(rng);
        }
        p.classifier.init(rng);
        p.leaf_projector.init(rng);
        p.vae_mu.init(rng);
        p.vae_logvar.init(rng);
        p.vae_expand.init(rng);
        p
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.config)
    }

    /// Every tensor with its checkpoint name, in a fixed order.
    pub fn tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out: Vec<(String, &Tensor)> = Vec::new();
        out.push(("leaf_embedder.W".into(), &self.leaf_embedder.w));
        out.push(("leaf_embedder.b".into(), &self.leaf_embedder.b));
        for (group, mlps) in [("sre", &self.sre), ("srd", &self.srd)] {
            for (i, m) in mlps.iter().enumerate() {
                out.push((format!("{group}.{i}.W1"), &m.hidden.w));
                out.push((format!("{group}.{i}.b1"), &m.hidden.b));
                out.push((format!("{group}.{i}.W2"), &m.output.w));
                out.push((format!("{group}.{i}.b2"), &m.output.b));
            }
        }
        out.push(("classifier.W1".into(), &self.classifier.hidden.w));
        out.push(("classifier.b1".into(), &self.classifier.hidden.b));
        out.push(("classifier.W2".into(), &self.classifier.output.w));
        out.push(("classifier.b2".into(), &self.classifier.output.b));
        out.push(("leaf_projector.W".into(), &self.leaf_projector.w));
        out.push(("leaf_projector.b".into(), &self.leaf_projector.b));
        out.push(("vae.mu.W".into(), &self.vae_mu.w));
        out.push(("vae.mu.b".into(), &self.vae_mu.b));
        out.push(("vae.logvar.W".into(), &self.vae_logvar.w));
        out.push(("vae.logvar.b".into(), &self.vae_logvar.b));
        out.push(("vae.expand.W".into(), &self.vae_expand.w));
        out.push(("vae.expand.b".into(), &self.vae_expand.b));
        out
    }

    /// Mutable counterpart of [`tensors`](Self::tensors), same order.
    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out: Vec<&mut Tensor> = Vec::new();
        out.push(&mut self.leaf_embedder.w);
        out.push(&mut self.leaf_embedder.b);
        for m in self.sre.iter_mut().chain(self.srd.iter_mut()) {
            out.push(&mut m.hidden.w);
            out.push(&mut m.hidden.b);
            out.push(&mut m.output.w);
            out.push(&mut m.output.b);
        }
        out.push(&mut self.classifier.hidden.w);
        out.push(&mut self.classifier.hidden.b);
        out.push(&mut self.classifier.output.w);
        out.push(&mut self.classifier.output.b);
        out.push(&mut self.leaf_projector.w);
        out.push(&mut self.leaf_projector.b);
        out.push(&mut self.vae_mu.w);
        out.push(&mut self.vae_mu.b);
        out.push(&mut self.vae_logvar.w);
        out.push(&mut self.vae_logvar.b);
        out.push(&mut self.vae_expand.w);
        out.push(&mut self.vae_expand.b);
        out
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.is_finite())
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &ModelParams, scale: f64) {
        let src: Vec<&Tensor> = other.tensors().into_iter().map(|(_, t)| t).collect();
        for (dst, src) in self.tensors_mut().into_iter().zip(src) {
            for (d, s) in dst.data.iter_mut().zip(&src.data) {
                *d += scale * s;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for t in self.tensors_mut() {
            t.data.iter_mut().for_each(|v| *v *= s);
        }
    }

    pub fn embed_leaf(&self, feature: &[f64]) -> Vec<f64> {
        self.leaf_embedder.forward(feature, Activation::Tanh)
    }

    pub fn encode_node(
        &self,
        relation: SpatialRelation,
        left: &[f64],
        right: &[f64],
        rel_pos: RelativePosition,
    ) -> Vec<f64> {
        self.sre[relation.index()]
            .forward(encoder_input(left, right, rel_pos), Activation::Tanh)
            .output
    }

    pub fn decode_node(&self, relation: SpatialRelation, code: &[f64]) -> SplitCode {
        let out = self.srd[relation.index()]
            .forward(code.to_vec(), Activation::Tanh)
            .output;
        split_decoder_output(&out, self.config.code_size)
    }

    /// Eight raw logits: the seven relation indices then [`LEAF_CLASS`].
    pub fn classify_node(&self, code: &[f64]) -> Vec<f64> {
        self.classifier
            .forward(code.to_vec(), Activation::Identity)
            .output
    }

    pub fn project_leaf(&self, code: &[f64]) -> LeafEstimate {
        let out = self.leaf_projector.forward(code, Activation::Identity);
        LeafEstimate {
            w: sigmoid(out[0]),
            h: sigmoid(out[1]),
            label_logits: out[2..].to_vec(),
        }
    }

    /// Bottom-up code of a whole hierarchy.
    pub fn encode_tree(&self, tree: &LayoutTree) -> Vec<f64> {
        match tree {
            LayoutTree::Leaf(b) => self.embed_leaf(&leaf_feature(b, self.config.num_labels)),
            LayoutTree::Internal(n) => {
                let l = self.encode_tree(&n.left);
                let r = self.encode_tree(&n.right);
                self.encode_node(n.relation, &l, &r, n.rel_pos)
            }
        }
    }

    pub fn reparameterize(&self, root: &[f64], noise: &[f64]) -> Latent {
        let mu = self.vae_mu.forward(root, Activation::Identity);
        let logvar = self.vae_logvar.forward(root, Activation::Identity);
        let z = mu
            .iter()
            .zip(&logvar)
            .zip(noise)
            .map(|((m, lv), e)| m + libm::exp(0.5 * lv) * e)
            .collect();
        Latent { z, mu, logvar }
    }

    pub fn decode_root(&self, z: &[f64]) -> Vec<f64> {
        self.vae_expand.forward(z, Activation::Tanh)
    }

    /// Free-running decode of a root code into a hierarchy with at most
    /// `max_nodes` leaves.
    ///
    /// A node is expanded only while the budget can still cover every pending
    /// node plus the two new children; otherwise it is projected as a leaf and
    /// the result is marked truncated.
    pub fn decode_tree(&self, root: &[f64], max_nodes: usize) -> DecodedTree {
        let max_nodes = max_nodes.max(1);
        let mut arena: Vec<Decoded> = Vec::new();
        let mut stack: Vec<(usize, Vec<f64>)> = vec![(0, root.to_vec())];
        arena.push(Decoded::Pending);
        let mut leaves = 0usize;
        let mut truncated = false;

        while let Some((slot, code)) = stack.pop() {
            let class = argmax(&self.classify_node(&code));
            if class != LEAF_CLASS && leaves + stack.len() + 2 <= max_nodes {
                let relation = SpatialRelation::from_index(class).unwrap();
                let split = self.decode_node(relation, &code);
                let (l, r) = (arena.len(), arena.len() + 1);
                arena.push(Decoded::Pending);
                arena.push(Decoded::Pending);
                arena[slot] = Decoded::Internal {
                    relation,
                    rel_pos: split.rel_pos,
                    left: l,
                    right: r,
                };
                stack.push((r, split.right));
                stack.push((l, split.left));
            } else {
                truncated |= class != LEAF_CLASS;
                let est = self.project_leaf(&code);
                arena[slot] = Decoded::Leaf(LabeledBox {
                    label: est.label(),
                    rect: Rect::new(0.0, 0.0, est.w, est.h),
                });
                leaves += 1;
            }
        }
        DecodedTree {
            tree: build(&arena, 0),
            truncated,
        }
    }
}

enum Decoded {
    Pending,
    Leaf(LabeledBox),
    Internal {
        relation: SpatialRelation,
        rel_pos: RelativePosition,
        left: usize,
        right: usize,
    },
}

fn build(arena: &[Decoded], slot: usize) -> LayoutTree {
    match &arena[slot] {
        Decoded::Leaf(b) => LayoutTree::Leaf(*b),
        Decoded::Internal {
            relation,
            rel_pos,
            left,
            right,
        } => LayoutTree::compose(*relation, *rel_pos, build(arena, *left), build(arena, *right)),
        Decoded::Pending => unreachable!("every slot is resolved before building"),
    }
}

pub(crate) fn encoder_input(left: &[f64], right: &[f64], rel_pos: RelativePosition) -> Vec<f64> {
    let mut v = Vec::with_capacity(left.len() + right.len() + 2);
    v.extend_from_slice(left);
    v.extend_from_slice(right);
    v.push(rel_pos.dx);
    v.push(rel_pos.dy);
    v
}

pub(crate) fn split_decoder_output(out: &[f64], n: usize) -> SplitCode {
    SplitCode {
        left: out[..n].to_vec(),
        right: out[n..2 * n].to_vec(),
        rel_pos: RelativePosition::new(out[2 * n], out[2 * n + 1]),
    }
}
