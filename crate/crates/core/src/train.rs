//! Loss, exact gradients, Adam and the training loop.
//!
//! Training decodes with teacher forcing: the decoder follows the ground-truth
//! tree, invoking the true relation's decoder at every internal node, so each
//! decoded leaf code and relative position has an encoder-side counterpart.
//!
//! The loss has four terms:
//!
//! * `leaf`: mean over leaves of `||x'_k - x_k||^2`, decoder leaf code against
//!   encoder leaf embedding;
//! * `pos`: mean over internal nodes of `||r' - r||^2`;
//! * `ce`: mean over all nodes of the classifier's negative log-likelihood of
//!   the true class (relation index, or leaf);
//! * `kl`: KL divergence of `N(mu, exp(logvar))` from the standard normal.
//!
//! On top of these, `aux` supervises the leaf projector (squared error on the
//! sigmoid width and height plus label cross-entropy, averaged over leaves); it
//! shares the leaf weight. Without it the projector would never see a gradient.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DocumentLayout;
use crate::hierarchy::{extract_hierarchy, LayoutTree, RelativePosition, SpatialRelation};
use crate::model::{
    encoder_input, leaf_feature, split_decoder_output, ModelConfig, ModelParams, LEAF_CLASS,
};
use crate::nn::{log_softmax, sigmoid, softmax, Activation, MlpCache, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub leaf: f64,
    pub pos: f64,
    pub ce: f64,
    pub kl: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            leaf: 1.0,
            pos: 1.0,
            ce: 1.0,
            kl: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub leaf: f64,
    pub pos: f64,
    pub ce: f64,
    pub kl: f64,
    pub aux: f64,
    /// `w.leaf * (leaf + aux) + w.pos * pos + w.ce * ce + w.kl * kl`
    pub total: f64,
}

impl LossBreakdown {
    fn accumulate(&mut self, other: &LossBreakdown) {
        self.leaf += other.leaf;
        self.pos += other.pos;
        self.ce += other.ce;
        self.kl += other.kl;
        self.aux += other.aux;
        self.total += other.total;
    }

    fn scaled(mut self, s: f64) -> Self {
        self.leaf *= s;
        self.pos *= s;
        self.ce *= s;
        self.kl *= s;
        self.aux *= s;
        self.total *= s;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitScale {
    /// Standard deviation `1/sqrt(fan_in)` per weight tensor.
    FanIn,
    /// The same standard deviation for every weight tensor.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub weights: LossWeights,
    pub code_size: usize,
    pub hidden: usize,
    pub max_nodes: usize,
    pub init_scale: InitScale,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 3e-4,
            batch_size: 128,
            epochs: 100,
            seed: 0,
            weights: LossWeights::default(),
            code_size: 300,
            hidden: 512,
            max_nodes: crate::model::DEFAULT_MAX_NODES,
            init_scale: InitScale::FanIn,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        use alloc::string::ToString;
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidInput("learning_rate must be positive".to_string()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidInput("batch_size must be at least 1".to_string()));
        }
        if self.code_size == 0 || self.hidden == 0 {
            return Err(Error::InvalidInput("code_size and hidden must be positive".to_string()));
        }
        let w = self.weights;
        if [w.leaf, w.pos, w.ce, w.kl].iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidInput("loss weights must be finite and >= 0".to_string()));
        }
        Ok(())
    }
}

/// Pre-order flattening of a tree; children always follow their parent.
#[derive(Debug, Clone)]
pub struct FlatTree {
    nodes: Vec<FlatNode>,
    num_leaves: usize,
}

#[derive(Debug, Clone)]
enum FlatNode {
    Leaf {
        feature: Vec<f64>,
        label: usize,
    },
    Internal {
        relation: SpatialRelation,
        rel_pos: RelativePosition,
        left: usize,
        right: usize,
    },
}

impl FlatTree {
    pub fn new(tree: &LayoutTree, num_labels: usize) -> Result<Self> {
        let mut nodes = Vec::new();
        let mut num_leaves = 0;
        // Explicit stack; (node, parent slot to patch, is_right)
        let mut stack: Vec<(&LayoutTree, Option<(usize, bool)>)> = vec![(tree, None)];
        while let Some((t, parent)) = stack.pop() {
            let slot = nodes.len();
            if let Some((p, is_right)) = parent {
                if let FlatNode::Internal { left, right, .. } = &mut nodes[p] {
                    if is_right {
                        *right = slot;
                    } else {
                        *left = slot;
                    }
                }
            }
            match t {
                LayoutTree::Leaf(b) => {
                    if b.label >= num_labels {
                        return Err(Error::UnknownLabel(alloc::format!("#{}", b.label)));
                    }
                    num_leaves += 1;
                    nodes.push(FlatNode::Leaf {
                        feature: leaf_feature(b, num_labels),
                        label: b.label,
                    });
                }
                LayoutTree::Internal(n) => {
                    nodes.push(FlatNode::Internal {
                        relation: n.relation,
                        rel_pos: n.rel_pos,
                        left: 0,
                        right: 0,
                    });
                    stack.push((&n.right, Some((slot, true))));
                    stack.push((&n.left, Some((slot, false))));
                }
            }
        }
        Ok(Self { nodes, num_leaves })
    }

    pub fn num_leaves(&self) -> usize {
        self.num_leaves
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    fn target_class(&self, i: usize) -> usize {
        match &self.nodes[i] {
            FlatNode::Leaf { .. } => LEAF_CLASS,
            FlatNode::Internal { relation, .. } => relation.index(),
        }
    }
}

/// Everything the reverse pass needs from one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardState {
    enc: Vec<EncCache>,
    root: Vec<f64>,
    noise: Vec<f64>,
    mu: Vec<f64>,
    logvar: Vec<f64>,
    z: Vec<f64>,
    dec_code: Vec<Vec<f64>>,
    cls: Vec<MlpCache>,
    dec: Vec<DecCache>,
}

#[derive(Debug, Clone)]
enum EncCache {
    Leaf { code: Vec<f64> },
    Internal(MlpCache),
}

impl EncCache {
    fn code(&self) -> &[f64] {
        match self {
            EncCache::Leaf { code } => code,
            EncCache::Internal(c) => &c.output,
        }
    }
}

#[derive(Debug, Clone)]
enum DecCache {
    Leaf { projected: Vec<f64> },
    Internal { mlp: MlpCache, rel_pos: RelativePosition },
}

fn check_finite(values: &[f64], node: usize, what: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NumericalFailure { node, what })
    }
}

/// Teacher-forced forward pass and loss for one tree.
pub fn compute_loss(
    params: &ModelParams,
    tree: &FlatTree,
    noise: &[f64],
    weights: &LossWeights,
) -> Result<(LossBreakdown, ForwardState)> {
    let n = params.config.code_size;
    if noise.len() != n {
        return Err(Error::ShapeMismatch {
            name: "noise".into(),
            expected: vec![n],
            found: vec![noise.len()],
        });
    }
    let m = tree.nodes.len();

    // Encoder, children before parents.
    let mut enc: Vec<Option<EncCache>> = (0..m).map(|_| None).collect();
    for i in (0..m).rev() {
        let cache = match &tree.nodes[i] {
            FlatNode::Leaf { feature, .. } => EncCache::Leaf {
                code: params.embed_leaf(feature),
            },
            FlatNode::Internal {
                relation,
                rel_pos,
                left,
                right,
            } => {
                let input = encoder_input(
                    enc[*left].as_ref().unwrap().code(),
                    enc[*right].as_ref().unwrap().code(),
                    *rel_pos,
                );
                EncCache::Internal(params.sre[relation.index()].forward(input, Activation::Tanh))
            }
        };
        check_finite(cache.code(), i, "encoder code")?;
        enc[i] = Some(cache);
    }
    let enc: Vec<EncCache> = enc.into_iter().map(Option::unwrap).collect();
    let root = enc[0].code().to_vec();

    let latent = params.reparameterize(&root, noise);
    check_finite(&latent.z, 0, "latent")?;
    let d_root = params.decode_root(&latent.z);

    // Decoder, parents before children.
    let mut dec_code: Vec<Vec<f64>> = vec![Vec::new(); m];
    dec_code[0] = d_root;
    let mut cls = Vec::with_capacity(m);
    let mut dec = Vec::with_capacity(m);
    let mut loss = LossBreakdown::default();
    let n_leaves = tree.num_leaves as f64;

    for i in 0..m {
        check_finite(&dec_code[i], i, "decoder code")?;
        let c = params
            .classifier
            .forward(dec_code[i].clone(), Activation::Identity);
        let lsm = log_softmax(&c.output);
        loss.ce -= lsm[tree.target_class(i)];
        cls.push(c);

        match &tree.nodes[i] {
            FlatNode::Leaf { feature, label } => {
                let diff_sq: f64 = dec_code[i]
                    .iter()
                    .zip(enc[i].code())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                loss.leaf += diff_sq;
                let projected = params
                    .leaf_projector
                    .forward(&dec_code[i], Activation::Identity);
                let (w, h) = (sigmoid(projected[0]), sigmoid(projected[1]));
                let label_lsm = log_softmax(&projected[2..]);
                loss.aux += (w - feature[0]) * (w - feature[0])
                    + (h - feature[1]) * (h - feature[1])
                    - label_lsm[*label];
                dec.push(DecCache::Leaf { projected });
            }
            FlatNode::Internal {
                relation,
                rel_pos,
                left,
                right,
            } => {
                let mlp = params.srd[relation.index()]
                    .forward(dec_code[i].clone(), Activation::Tanh);
                let split = split_decoder_output(&mlp.output, n);
                let (ex, ey) = (split.rel_pos.dx - rel_pos.dx, split.rel_pos.dy - rel_pos.dy);
                loss.pos += ex * ex + ey * ey;
                dec_code[*left] = split.left;
                dec_code[*right] = split.right;
                dec.push(DecCache::Internal {
                    mlp,
                    rel_pos: *rel_pos,
                });
            }
        }
    }

    loss.leaf /= n_leaves;
    loss.aux /= n_leaves;
    loss.pos = if tree.num_leaves > 1 {
        loss.pos / (n_leaves - 1.0)
    } else {
        0.0
    };
    loss.ce /= m as f64;
    loss.kl = -0.5
        * latent
            .mu
            .iter()
            .zip(&latent.logvar)
            .map(|(mu, lv)| 1.0 + lv - mu * mu - libm::exp(*lv))
            .sum::<f64>();
    loss.total = weights.leaf * (loss.leaf + loss.aux)
        + weights.pos * loss.pos
        + weights.ce * loss.ce
        + weights.kl * loss.kl;
    if !loss.total.is_finite() {
        return Err(Error::NumericalFailure {
            node: 0,
            what: "loss",
        });
    }

    Ok((
        loss,
        ForwardState {
            enc,
            root,
            noise: noise.to_vec(),
            mu: latent.mu,
            logvar: latent.logvar,
            z: latent.z,
            dec_code,
            cls,
            dec,
        },
    ))
}

/// Reverse pass: adds `d total / d params` for one tree into `grads`.
pub fn backward_into(
    params: &ModelParams,
    tree: &FlatTree,
    state: &ForwardState,
    weights: &LossWeights,
    grads: &mut ModelParams,
) -> Result<()> {
    let n = params.config.code_size;
    let m = tree.nodes.len();
    let n_leaves = tree.num_leaves as f64;
    let ce_scale = weights.ce / m as f64;
    let leaf_scale = weights.leaf / n_leaves;
    let pos_scale = if tree.num_leaves > 1 {
        weights.pos / (n_leaves - 1.0)
    } else {
        0.0
    };

    let mut dec_grad: Vec<Vec<f64>> = (0..m).map(|_| vec![0.0; n]).collect();
    let mut enc_grad: Vec<Vec<f64>> = (0..m).map(|_| vec![0.0; n]).collect();

    for i in (0..m).rev() {
        // Classifier head.
        let c = &state.cls[i];
        let mut dlogits = softmax(&c.output);
        dlogits[tree.target_class(i)] -= 1.0;
        dlogits.iter_mut().for_each(|v| *v *= ce_scale);
        let dx = params
            .classifier
            .backward(c, &dlogits, Activation::Identity, &mut grads.classifier);
        add_into(&mut dec_grad[i], &dx);

        match (&tree.nodes[i], &state.dec[i]) {
            (FlatNode::Leaf { feature, label }, DecCache::Leaf { projected }) => {
                for ((dg, eg), (a, b)) in dec_grad[i]
                    .iter_mut()
                    .zip(enc_grad[i].iter_mut())
                    .zip(state.dec_code[i].iter().zip(state.enc[i].code()))
                {
                    let g = 2.0 * leaf_scale * (a - b);
                    *dg += g;
                    *eg -= g;
                }
                let mut dproj = vec![0.0; projected.len()];
                for k in 0..2 {
                    let s = sigmoid(projected[k]);
                    dproj[k] = leaf_scale * 2.0 * (s - feature[k]) * s * (1.0 - s);
                }
                let p = softmax(&projected[2..]);
                for (j, pj) in p.iter().enumerate() {
                    let t = if j == *label { 1.0 } else { 0.0 };
                    dproj[2 + j] = leaf_scale * (pj - t);
                }
                let dx = params.leaf_projector.backward(
                    &state.dec_code[i],
                    projected,
                    &dproj,
                    Activation::Identity,
                    &mut grads.leaf_projector,
                );
                add_into(&mut dec_grad[i], &dx);
            }
            (
                FlatNode::Internal {
                    relation,
                    left,
                    right,
                    ..
                },
                DecCache::Internal { mlp, rel_pos },
            ) => {
                let mut dout = Vec::with_capacity(2 * n + 2);
                dout.extend_from_slice(&dec_grad[*left]);
                dout.extend_from_slice(&dec_grad[*right]);
                dout.push(2.0 * pos_scale * (mlp.output[2 * n] - rel_pos.dx));
                dout.push(2.0 * pos_scale * (mlp.output[2 * n + 1] - rel_pos.dy));
                let r = relation.index();
                let dx = params.srd[r].backward(mlp, &dout, Activation::Tanh, &mut grads.srd[r]);
                add_into(&mut dec_grad[i], &dx);
            }
            _ => unreachable!("decoder cache mirrors the tree"),
        }
        check_finite(&dec_grad[i], i, "decoder gradient")?;
    }

    // Latent path.
    let dz = params.vae_expand.backward(
        &state.z,
        &state.dec_code[0],
        &dec_grad[0],
        Activation::Tanh,
        &mut grads.vae_expand,
    );
    let mut dmu = vec![0.0; n];
    let mut dlogvar = vec![0.0; n];
    for j in 0..n {
        let sd = libm::exp(0.5 * state.logvar[j]);
        dmu[j] = dz[j] + weights.kl * state.mu[j];
        dlogvar[j] = dz[j] * state.noise[j] * 0.5 * sd + weights.kl * 0.5 * (sd * sd - 1.0);
    }
    let dr_mu = params.vae_mu.backward(
        &state.root,
        &state.mu,
        &dmu,
        Activation::Identity,
        &mut grads.vae_mu,
    );
    let dr_lv = params.vae_logvar.backward(
        &state.root,
        &state.logvar,
        &dlogvar,
        Activation::Identity,
        &mut grads.vae_logvar,
    );
    add_into(&mut enc_grad[0], &dr_mu);
    add_into(&mut enc_grad[0], &dr_lv);

    // Encoder, parents before children.
    for i in 0..m {
        check_finite(&enc_grad[i], i, "encoder gradient")?;
        match (&tree.nodes[i], &state.enc[i]) {
            (FlatNode::Leaf { feature, .. }, EncCache::Leaf { code }) => {
                params.leaf_embedder.backward(
                    feature,
                    code,
                    &enc_grad[i],
                    Activation::Tanh,
                    &mut grads.leaf_embedder,
                );
            }
            (
                FlatNode::Internal {
                    relation,
                    left,
                    right,
                    ..
                },
                EncCache::Internal(cache),
            ) => {
                let r = relation.index();
                let dy = core::mem::take(&mut enc_grad[i]);
                let dx = params.sre[r].backward(cache, &dy, Activation::Tanh, &mut grads.sre[r]);
                add_into(&mut enc_grad[*left], &dx[..n]);
                add_into(&mut enc_grad[*right], &dx[n..2 * n]);
            }
            _ => unreachable!("encoder cache mirrors the tree"),
        }
    }
    Ok(())
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

/// Loss and exact gradient of `total` for one tree.
pub fn grad(
    params: &ModelParams,
    tree: &FlatTree,
    noise: &[f64],
    weights: &LossWeights,
) -> Result<(LossBreakdown, ModelParams)> {
    let (loss, state) = compute_loss(params, tree, noise, weights)?;
    let mut grads = params.zeros_like();
    backward_into(params, tree, &state, weights, &mut grads)?;
    Ok((loss, grads))
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: ModelParams,
    pub v: ModelParams,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(params: &mut ModelParams, grads: &ModelParams, state: &mut AdamState, lr: f64) {
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - libm::pow(ADAM_BETA1, t as f64);
    let c2 = 1.0 - libm::pow(ADAM_BETA2, t as f64);
    let g: Vec<&Tensor> = grads.tensors().into_iter().map(|(_, t)| t).collect();
    let ms = state.m.tensors_mut();
    let vs = state.v.tensors_mut();
    for (((p, g), m), v) in params.tensors_mut().into_iter().zip(g).zip(ms).zip(vs) {
        for (((p, &g), m), v) in p
            .data
            .iter_mut()
            .zip(&g.data)
            .zip(m.data.iter_mut())
            .zip(v.data.iter_mut())
        {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            let mhat = *m / c1;
            let vhat = *v / c2;
            *p -= lr * mhat / (libm::sqrt(vhat) + ADAM_EPS);
        }
    }
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Model state plus per-epoch mean losses.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub history: Vec<LossBreakdown>,
}

/// Checks labels and extracts every training hierarchy once.
pub fn prepare_corpus(corpus: &[DocumentLayout], num_labels: usize) -> Result<Vec<FlatTree>> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    for doc in corpus {
        if let Some(b) = doc.boxes.iter().find(|b| b.label >= num_labels) {
            return Err(Error::UnknownLabel(alloc::format!(
                "#{} in {}",
                b.label,
                doc.source_id
            )));
        }
    }
    corpus
        .iter()
        .map(|d| FlatTree::new(&extract_hierarchy(d)?, num_labels))
        .collect()
}

pub fn train(
    corpus: &[DocumentLayout],
    num_labels: usize,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    train_with(corpus, num_labels, config, |_, _| {})
}

/// Runs training, calling `on_epoch(epoch, mean_loss)` after every epoch.
///
/// Batches are processed serially in a fixed order, so the result depends only
/// on the corpus, the config and its seed.
pub fn train_with(
    corpus: &[DocumentLayout],
    num_labels: usize,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(usize, &LossBreakdown),
) -> Result<TrainOutcome> {
    config.validate()?;
    let trees = prepare_corpus(corpus, num_labels)?;
    let model_config = ModelConfig {
        code_size: config.code_size,
        hidden: config.hidden,
        num_labels,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = ModelParams::init(model_config, &mut rng);
    if let InitScale::Fixed(std) = config.init_scale {
        for t in params.tensors_mut() {
            if t.shape.len() == 2 {
                t.fill_gaussian(&mut rng, std);
            }
        }
    }
    let mut adam = AdamState::new(&params);
    let mut grads = params.zeros_like();
    let mut order: Vec<usize> = (0..trees.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = LossBreakdown::default();
        for batch in order.chunks(config.batch_size) {
            grads.scale(0.0);
            for &i in batch {
                let noise = standard_normal(&mut rng, config.code_size);
                let (loss, state) = compute_loss(&params, &trees[i], &noise, &config.weights)?;
                backward_into(&params, &trees[i], &state, &config.weights, &mut grads)?;
                epoch_loss.accumulate(&loss);
            }
            grads.scale(1.0 / batch.len() as f64);
            adam_step(&mut params, &grads, &mut adam, config.learning_rate);
        }
        let mean = epoch_loss.scaled(1.0 / trees.len() as f64);
        on_epoch(epoch, &mean);
        history.push(mean);
    }
    if !params.is_finite() {
        return Err(Error::NumericalFailure {
            node: 0,
            what: "parameters",
        });
    }
    Ok(TrainOutcome { params, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::LabeledBox;
    use crate::nn::Dense;

    fn cfg() -> ModelConfig {
        ModelConfig {
            code_size: 6,
            hidden: 8,
            num_labels: 3,
        }
    }

    fn doc3() -> DocumentLayout {
        DocumentLayout::unit(
            "d",
            vec![
                LabeledBox::new(0, 0.1, 0.1, 0.2, 0.1),
                LabeledBox::new(1, 0.5, 0.1, 0.2, 0.1),
                LabeledBox::new(2, 0.1, 0.4, 0.6, 0.2),
            ],
        )
    }

    fn flat(d: &DocumentLayout) -> FlatTree {
        FlatTree::new(&extract_hierarchy(d).unwrap(), 3).unwrap()
    }

    #[test]
    fn flat_tree_shape() {
        let t = flat(&doc3());
        assert_eq!(t.num_leaves(), 3);
        assert_eq!(t.num_nodes(), 5);
    }

    #[test]
    fn single_leaf_loss() {
        let d = DocumentLayout::unit("d", vec![LabeledBox::new(0, 0.1, 0.1, 0.2, 0.1)]);
        let p = ModelParams::init(cfg(), &mut ChaCha8Rng::seed_from_u64(1));
        let (l, _) = compute_loss(&p, &flat(&d), &[0.0; 6], &LossWeights::default()).unwrap();
        assert_eq!(l.pos, 0.0);
        assert!(l.leaf > 0.0 && l.ce > 0.0);
    }

    #[test]
    fn kl_closed_forms() {
        let d = DocumentLayout::unit("d", vec![LabeledBox::new(0, 0.1, 0.1, 0.2, 0.1)]);
        let mut p = ModelParams::zeros(cfg());
        let (l, _) = compute_loss(&p, &flat(&d), &[0.0; 6], &LossWeights::default()).unwrap();
        assert_eq!(l.kl, 0.0);
        // With everything zero the decoder reproduces the (zero) leaf code exactly.
        assert_eq!(l.leaf, 0.0);
        assert_eq!(l.pos, 0.0);
        p.vae_mu = Dense::zeros(6, 6);
        p.vae_mu.b.data[0] = 1.0;
        let (l, _) = compute_loss(&p, &flat(&d), &[0.0; 6], &LossWeights::default()).unwrap();
        assert!((l.kl - 0.5).abs() < 1e-15);
    }

    #[test]
    fn unused_decoder_gets_zero_gradient() {
        let p = ModelParams::init(cfg(), &mut ChaCha8Rng::seed_from_u64(2));
        let noise = [0.1, -0.2, 0.3, 0.0, 0.5, -1.0];
        let (_, g) = grad(&p, &flat(&doc3()), &noise, &LossWeights::default()).unwrap();
        let unused = SpatialRelation::Enclosed.index();
        assert!(g.srd[unused].hidden.w.data.iter().all(|&v| v == 0.0));
        assert!(g.sre[unused].output.b.data.iter().all(|&v| v == 0.0));
        assert!(g.srd[SpatialRelation::Right.index()].hidden.w.data.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn adam_zero_gradient_is_noop() {
        let mut p = ModelParams::init(cfg(), &mut ChaCha8Rng::seed_from_u64(3));
        let before = p.clone();
        let mut st = AdamState::new(&p);
        adam_step(&mut p, &before.zeros_like(), &mut st, 1e-3);
        assert_eq!(p, before);
        assert_eq!(st.t, 1);
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let mut p = ModelParams::zeros(cfg());
        let mut g = p.zeros_like();
        g.vae_mu.b.data[0] = 0.37;
        g.vae_mu.b.data[1] = -5.0;
        let mut st = AdamState::new(&p);
        adam_step(&mut p, &g, &mut st, 0.01);
        assert!((p.vae_mu.b.data[0] + 0.01).abs() < 1e-9);
        assert!((p.vae_mu.b.data[1] - 0.01).abs() < 1e-9);
    }

    #[test]
    fn training_is_reproducible() {
        let corpus = vec![doc3(), doc3()];
        let config = TrainConfig {
            epochs: 3,
            batch_size: 1,
            seed: 7,
            code_size: 6,
            hidden: 8,
            ..TrainConfig::default()
        };
        let a = train(&corpus, 3, &config).unwrap();
        let b = train(&corpus, 3, &config).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.history, b.history);
        assert!(a.history.iter().all(|l| l.total.is_finite()));
    }

    #[test]
    fn unknown_label_rejected_before_training() {
        let d = DocumentLayout::unit("d", vec![LabeledBox::new(9, 0.1, 0.1, 0.2, 0.1)]);
        let err = train(&[d], 3, &TrainConfig::default()).unwrap_err();
        assert!(matches!(err, Error::UnknownLabel(_)));
        assert_eq!(train(&[], 3, &TrainConfig::default()).unwrap_err(), Error::EmptyCorpus);
    }
}
