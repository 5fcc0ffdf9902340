use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal, Uniform};

use crate::config::NetConfig;

/// One message passing round.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    /// `(d_h + 1) × d_mu`: neighbor embedding plus edge weight to message.
    pub msg_w: Array2<f64>,
    /// `d_mu × d_mu`, applied to the node's own state.
    pub self_w: Array2<f64>,
    /// `d_mu × d_mu`, applied to the aggregated message.
    pub nbr_w: Array2<f64>,
}

/// Attention projections, `d_h × d_h` each; head `k` owns columns
/// `k*d_k .. (k+1)*d_k` of the query/key/value maps and the matching rows of
/// the output map.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    pub wq: Array2<f64>,
    pub wk: Array2<f64>,
    pub wv: Array2<f64>,
    pub wo: Array2<f64>,
}

/// All trainable tensors. Vectors are stored as single-row matrices. The
/// same type holds gradients and optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub input_w: Array2<f64>,
    pub input_b: Array2<f64>,
    pub layers: Vec<LayerParams>,
    /// One `2 × d_t` table per embedding level (`layers + 1` levels); row 0
    /// is the sensor type, row 1 the site type. Empty when disabled.
    pub type_emb: Vec<Array2<f64>>,
    pub attention: Option<AttentionParams>,
    pub head_w1: Array2<f64>,
    pub head_b1: Array2<f64>,
    pub head_w2: Array2<f64>,
    pub head_b2: Array2<f64>,
}

fn glorot<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let dist = Uniform::new_inclusive(-limit, limit).expect("valid range");
    Array2::from_shape_simple_fn((rows, cols), || dist.sample(rng))
}

impl Params {
    pub fn init<R: Rng + ?Sized>(config: &NetConfig, rng: &mut R) -> Params {
        let d_mu = config.d_mu;
        let d_h = config.d_h();
        let layers = (0..config.layers)
            .map(|_| LayerParams {
                msg_w: glorot(d_h + 1, d_mu, rng),
                self_w: glorot(d_mu, d_mu, rng),
                nbr_w: glorot(d_mu, d_mu, rng),
            })
            .collect();
        let type_emb = if config.use_type_embedding {
            let normal = Normal::new(0.0, 0.01).expect("valid normal");
            (0..=config.layers)
                .map(|_| Array2::from_shape_simple_fn((2, config.d_t), || normal.sample(rng)))
                .collect()
        } else {
            Vec::new()
        };
        let attention = config.use_feature_fusion.then(|| AttentionParams {
            wq: glorot(d_h, d_h, rng),
            wk: glorot(d_h, d_h, rng),
            wv: glorot(d_h, d_h, rng),
            wo: glorot(d_h, d_h, rng),
        });
        Params {
            input_w: glorot(config.input_dim, d_mu, rng),
            input_b: Array2::zeros((1, d_mu)),
            layers,
            type_emb,
            attention,
            head_w1: glorot(2 * d_h, config.hidden, rng),
            head_b1: Array2::zeros((1, config.hidden)),
            head_w2: glorot(config.hidden, 1, rng),
            head_b2: Array2::zeros((1, 1)),
        }
    }

    /// All-zero parameters with the layout implied by `config`.
    pub fn zeros(config: &NetConfig) -> Params {
        let mut p = Params::init(config, &mut rand_chacha::ChaCha8Rng::seed_from_u64(0));
        p.fill(0.0);
        p
    }

    /// Tensor names in declaration order, matching [`Params::tensors`].
    pub fn names(&self) -> Vec<String> {
        let mut names = vec!["input_w".to_string(), "input_b".to_string()];
        for l in 0..self.layers.len() {
            names.push(format!("layer{l}.msg_w"));
            names.push(format!("layer{l}.self_w"));
            names.push(format!("layer{l}.nbr_w"));
        }
        for l in 0..self.type_emb.len() {
            names.push(format!("type_emb{l}"));
        }
        if self.attention.is_some() {
            for n in ["attn.wq", "attn.wk", "attn.wv", "attn.wo"] {
                names.push(n.to_string());
            }
        }
        for n in ["head_w1", "head_b1", "head_w2", "head_b2"] {
            names.push(n.to_string());
        }
        names
    }

    pub fn tensors(&self) -> Vec<&Array2<f64>> {
        let mut out = vec![&self.input_w, &self.input_b];
        for l in &self.layers {
            out.extend([&l.msg_w, &l.self_w, &l.nbr_w]);
        }
        out.extend(self.type_emb.iter());
        if let Some(a) = &self.attention {
            out.extend([&a.wq, &a.wk, &a.wv, &a.wo]);
        }
        out.extend([&self.head_w1, &self.head_b1, &self.head_w2, &self.head_b2]);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Array2<f64>> {
        let mut out = vec![&mut self.input_w, &mut self.input_b];
        for l in &mut self.layers {
            out.extend([&mut l.msg_w, &mut l.self_w, &mut l.nbr_w]);
        }
        out.extend(self.type_emb.iter_mut());
        if let Some(a) = &mut self.attention {
            out.extend([&mut a.wq, &mut a.wk, &mut a.wv, &mut a.wo]);
        }
        out.extend([
            &mut self.head_w1,
            &mut self.head_b1,
            &mut self.head_w2,
            &mut self.head_b2,
        ]);
        out
    }

    pub fn zeros_like(&self) -> Params {
        let mut z = self.clone();
        z.fill(0.0);
        z
    }

    pub fn fill(&mut self, value: f64) {
        for t in self.tensors_mut() {
            t.fill(value);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.mapv_inplace(|v| v * factor);
        }
    }

    pub fn add_assign(&mut self, other: &Params) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            *a += b;
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.iter().all(|v| v.is_finite()))
    }

    pub fn max_abs(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|t| t.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// True when both sets have the same tensor names and shapes.
    pub fn same_layout(&self, other: &Params) -> bool {
        self.names() == other.names()
            && self
                .tensors()
                .iter()
                .zip(other.tensors())
                .all(|(a, b)| a.dim() == b.dim())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shapes_follow_config() {
        let cfg = NetConfig::default();
        let p = Params::init(&cfg, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(p.input_w.dim(), (5, 48));
        assert_eq!(p.layers.len(), 3);
        assert_eq!(p.layers[0].msg_w.dim(), (65, 48));
        assert_eq!(p.type_emb.len(), 4);
        assert_eq!(p.type_emb[0].dim(), (2, 16));
        assert_eq!(p.attention.as_ref().unwrap().wq.dim(), (64, 64));
        assert_eq!(p.head_w1.dim(), (128, 128));
        assert_eq!(p.names().len(), p.tensors().len());

        let plain = Params::init(
            &NetConfig::variant(false, false),
            &mut ChaCha8Rng::seed_from_u64(0),
        );
        assert!(plain.type_emb.is_empty());
        assert!(plain.attention.is_none());
        assert_eq!(plain.layers[0].msg_w.dim(), (65, 64));
    }

    #[test]
    fn glorot_bounds() {
        let cfg = NetConfig::default();
        let p = Params::init(&cfg, &mut ChaCha8Rng::seed_from_u64(1));
        let limit = (6.0f64 / (128.0 + 128.0)).sqrt();
        assert!(p.head_w1.iter().all(|v| v.abs() <= limit));
        assert!(p.input_b.iter().all(|&v| v == 0.0));
    }
}
