//! The Q-network: sinusoidal positional encoding over the temporal window,
//! a stack of post-norm Transformer encoder layers, pooling across time,
//! concatenation with the current scan and kinematics, and an MLP head
//! producing one Q-value per discrete action.

use crate::graph::{Graph, NodeId};
use crate::params::ParamSet;
use crate::tensor::{Elem, Tensor};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Aggregation across the temporal axis. Mean pooling is the default; max
/// and last-position exist for ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    #[default]
    Mean,
    Max,
    LastPosition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransqerConfig {
    /// Temporal perception length T.
    pub window_len: usize,
    /// Token feature dimension D (= number of lidar beams; tokens enter raw).
    pub token_dim: usize,
    /// Attention heads H.
    pub heads: usize,
    /// Encoder layers N_E.
    pub encoder_layers: usize,
    /// Width W of the feed-forward and MLP linear layers.
    pub width: usize,
    /// MLP layers N_P (hidden ReLU layers plus the final linear layer).
    pub mlp_layers: usize,
    pub n_actions: usize,
    pub kin_dim: usize,
    pub pooling: Pooling,
}

impl Default for TransqerConfig {
    fn default() -> Self {
        TransqerConfig {
            window_len: 10,
            token_dim: 24,
            heads: 8,
            encoder_layers: 3,
            width: 64,
            mlp_layers: 3,
            n_actions: 7,
            kin_dim: 8,
            pooling: Pooling::Mean,
        }
    }
}

impl TransqerConfig {
    /// A small instantiation exercising the identical code path; used by
    /// gradient checks and fast tests.
    pub fn tiny() -> Self {
        TransqerConfig {
            window_len: 3,
            token_dim: 8,
            heads: 2,
            encoder_layers: 1,
            width: 16,
            mlp_layers: 3,
            n_actions: 7,
            kin_dim: 8,
            pooling: Pooling::Mean,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.token_dim % self.heads != 0 {
            return Err(format!(
                "token_dim {} must be divisible by heads {}",
                self.token_dim, self.heads
            ));
        }
        if self.width < self.token_dim {
            return Err(format!(
                "width {} must be >= token_dim {}",
                self.width, self.token_dim
            ));
        }
        if self.window_len == 0 || self.encoder_layers == 0 || self.mlp_layers == 0 {
            return Err("window_len, encoder_layers and mlp_layers must be positive".into());
        }
        Ok(())
    }

    /// Input width of the MLP head: pooled window + current scan + kinematics.
    pub fn concat_dim(&self) -> usize {
        2 * self.token_dim + self.kin_dim
    }
}

/// Sinusoidal positional encoding: PE(pos, 2i) = sin(pos / 10000^(2i/D)),
/// PE(pos, 2i+1) = cos(pos / 10000^(2i/D)). Position 0 is the newest row.
pub fn positional_encoding<E: Elem>(window_len: usize, dim: usize) -> Tensor<E> {
    let mut data = Vec::with_capacity(window_len * dim);
    for pos in 0..window_len {
        for j in 0..dim {
            let i2 = (j / 2 * 2) as f64;
            let rate = (pos as f64) / 10000f64.powf(i2 / dim as f64);
            data.push(E::from_f64(if j % 2 == 0 { rate.sin() } else { rate.cos() }));
        }
    }
    Tensor::from_vec(&[window_len, dim], data)
}

fn uniform_fan_in<E: Elem>(rng: &mut ChaCha8Rng, shape: &[usize], fan_in: usize) -> Tensor<E> {
    let bound = 1.0 / (fan_in as f64).sqrt();
    let n = shape.iter().product();
    let data = (0..n)
        .map(|_| E::from_f64(rng.random_range(-bound..bound)))
        .collect();
    Tensor::from_vec(shape, data)
}

/// Fresh parameters: linear layers uniform in +-1/sqrt(fan_in), layer-norm
/// affine at (1, 0).
pub fn init_params<E: Elem>(config: &TransqerConfig, seed: u64) -> ParamSet<E> {
    config.validate().expect("invalid network config");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ParamSet::new();
    let d = config.token_dim;
    let w = config.width;
    let mut linear = |params: &mut ParamSet<E>, name: &str, fan_in: usize, fan_out: usize| {
        let weight = uniform_fan_in(&mut rng, &[fan_in, fan_out], fan_in);
        let bias = uniform_fan_in(&mut rng, &[fan_out], fan_in);
        params.insert(&format!("{name}.w"), weight);
        params.insert(&format!("{name}.b"), bias);
    };
    for l in 0..config.encoder_layers {
        for proj in ["wq", "wk", "wv", "wo"] {
            linear(&mut params, &format!("enc{l}.{proj}"), d, d);
        }
        linear(&mut params, &format!("enc{l}.ffn1"), d, w);
        linear(&mut params, &format!("enc{l}.ffn2"), w, d);
        for ln in ["ln1", "ln2"] {
            let mut gamma = Tensor::zeros(&[d]);
            gamma.fill(E::one());
            params.insert(&format!("enc{l}.{ln}.g"), gamma);
            params.insert(&format!("enc{l}.{ln}.b"), Tensor::zeros(&[d]));
        }
    }
    let mut fan_in = config.concat_dim();
    for l in 0..config.mlp_layers {
        let fan_out = if l + 1 == config.mlp_layers {
            config.n_actions
        } else {
            w
        };
        linear(&mut params, &format!("head{l}"), fan_in, fan_out);
        fan_in = fan_out;
    }
    params
}

fn linear_node<E: Elem>(
    g: &mut Graph<E>,
    params: &ParamSet<E>,
    x: NodeId,
    name: &str,
) -> NodeId {
    let w = g.param(params, &format!("{name}.w"));
    let b = g.param(params, &format!("{name}.b"));
    let y = g.matmul(x, w);
    g.add_bias(y, b)
}

/// Build the forward graph. `window` is [B, T, D] (newest row first),
/// `scan` is [B, D], `kin` is [B, kin_dim]; returns the graph and the
/// [B, n_actions] Q-value node.
pub fn forward<E: Elem>(
    config: &TransqerConfig,
    params: &ParamSet<E>,
    window: &Tensor<E>,
    scan: &Tensor<E>,
    kin: &Tensor<E>,
) -> (Graph<E>, NodeId) {
    let batch = window.shape()[0];
    assert_eq!(
        window.shape(),
        [batch, config.window_len, config.token_dim],
        "window shape mismatch"
    );
    assert_eq!(scan.shape(), [batch, config.token_dim], "scan shape mismatch");
    assert_eq!(kin.shape(), [batch, config.kin_dim], "kinematics shape mismatch");

    // Positional encoding is a constant; fold it into the input tokens.
    let pe = positional_encoding::<E>(config.window_len, config.token_dim);
    let mut encoded = window.clone();
    {
        let td = config.window_len * config.token_dim;
        for row in encoded.data_mut().chunks_exact_mut(td) {
            for (o, &p) in row.iter_mut().zip(pe.data()) {
                *o += p;
            }
        }
    }

    let mut g = Graph::new();
    let mut x = g.input(encoded);
    for l in 0..config.encoder_layers {
        let q = linear_node(&mut g, params, x, &format!("enc{l}.wq"));
        let k = linear_node(&mut g, params, x, &format!("enc{l}.wk"));
        let v = linear_node(&mut g, params, x, &format!("enc{l}.wv"));
        let att = g.scaled_dot_attention(q, k, v, config.heads);
        let proj = linear_node(&mut g, params, att, &format!("enc{l}.wo"));
        let res1 = g.add(x, proj);
        let g1 = g.param(params, &format!("enc{l}.ln1.g"));
        let b1 = g.param(params, &format!("enc{l}.ln1.b"));
        let x1 = g.layer_norm(res1, g1, b1);
        let h = linear_node(&mut g, params, x1, &format!("enc{l}.ffn1"));
        let h = g.relu(h);
        let ff = linear_node(&mut g, params, h, &format!("enc{l}.ffn2"));
        let res2 = g.add(x1, ff);
        let g2 = g.param(params, &format!("enc{l}.ln2.g"));
        let b2 = g.param(params, &format!("enc{l}.ln2.b"));
        x = g.layer_norm(res2, g2, b2);
    }
    let pooled = match config.pooling {
        Pooling::Mean => g.mean(x, 1),
        Pooling::Max => g.max_axis(x, 1),
        Pooling::LastPosition => g.select(x, 1, 0),
    };
    let scan_node = g.input(scan.clone());
    let kin_node = g.input(kin.clone());
    let mut h = g.concat(&[pooled, scan_node, kin_node], 1);
    for l in 0..config.mlp_layers {
        h = linear_node(&mut g, params, h, &format!("head{l}"));
        if l + 1 < config.mlp_layers {
            h = g.relu(h);
        }
    }
    (g, h)
}

/// Convenience inference call returning the [B, n_actions] Q-values.
pub fn q_values<E: Elem>(
    config: &TransqerConfig,
    params: &ParamSet<E>,
    window: &Tensor<E>,
    scan: &Tensor<E>,
    kin: &Tensor<E>,
) -> Tensor<E> {
    let (g, q) = forward(config, params, window, scan, kin);
    g.value(q).clone()
}

/// Greedy action with probability 1-epsilon, uniform otherwise. Ties break
/// to the lowest index.
pub fn act_epsilon_greedy<E: Elem, R: Rng>(q_row: &[E], epsilon: f64, rng: &mut R) -> usize {
    assert!((0.0..=1.0).contains(&epsilon), "epsilon out of [0,1]");
    assert!(!q_row.is_empty());
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        return rng.random_range(0..q_row.len());
    }
    argmax(q_row)
}

/// Lowest-index argmax.
pub fn argmax<E: Elem>(row: &[E]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}
