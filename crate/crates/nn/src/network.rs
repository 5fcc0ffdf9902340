use hgff_core::NodeKind;
use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use crate::config::NetConfig;
use crate::error::{NnError, Result};
use crate::graph::GraphInput;
use crate::params::{AttentionParams, Params};

#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    pub config: NetConfig,
    pub params: Params,
}

#[derive(Debug, Clone)]
struct LayerCache {
    /// Layer input `μ ∥ t`, `N × d_h`.
    h: Array2<f64>,
    /// Neighbor part of the message pre-activation, `N × d_mu`; an edge's
    /// pre-activation is `pm[u] + w * wrow`.
    pm: Array2<f64>,
    wrow: Vec<f64>,
    /// Aggregated messages, `N × d_mu`.
    msg: Array2<f64>,
    /// Update pre-activation, `N × d_mu`.
    z: Array2<f64>,
}

/// Intermediate values of one attention fusion pass.
#[derive(Debug, Clone)]
pub struct Attention {
    pub q: Array2<f64>,
    pub k: Array2<f64>,
    pub v: Array2<f64>,
    /// Attention weights per head, `sites × sensors`.
    pub weights: Vec<Array2<f64>>,
    /// Per-head outputs side by side, `sites × d_h`.
    pub heads_out: Array2<f64>,
    pub fused: Array2<f64>,
}

/// Everything the reverse pass needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    layers: Vec<LayerCache>,
    /// Final node embeddings, `N × d_h`.
    pub embeddings: Array2<f64>,
    site_emb: Array2<f64>,
    sensor_emb: Array2<f64>,
    pub attention: Option<Attention>,
    fused: Array2<f64>,
    head_in: Array2<f64>,
    head_pre: Array2<f64>,
    head_hidden: Array2<f64>,
    pub q: Vec<f64>,
}

impl ForwardCache {
    /// Input rows of the Q head: fused site embedding then pooled embedding.
    pub fn head_input(&self) -> &Array2<f64> {
        &self.head_in
    }

    /// Sign of every ReLU pre-activation, in a fixed order. Two passes with
    /// equal patterns lie on the same linear piece of the network.
    pub fn relu_pattern(&self, g: &GraphInput) -> Vec<bool> {
        let mut out = Vec::new();
        for lc in &self.layers {
            for v in 0..g.node_count() {
                for (u, w, _) in g.neighbors(v) {
                    out.extend(
                        lc.pm
                            .row(u)
                            .iter()
                            .zip(&lc.wrow)
                            .map(|(&p, &r)| p + w * r > 0.0),
                    );
                }
            }
            out.extend(lc.z.iter().map(|&v| v > 0.0));
        }
        out.extend(self.head_pre.iter().map(|&v| v > 0.0));
        out
    }
}

fn relu(x: &Array2<f64>) -> Array2<f64> {
    x.mapv(|v| v.max(0.0))
}

fn gather_rows(x: &Array2<f64>, rows: &[usize]) -> Array2<f64> {
    x.select(Axis(0), rows)
}

/// `μ ∥ t_kind` row by row, or `μ` itself without type embeddings.
fn with_type(mu: &Array2<f64>, table: Option<&Array2<f64>>, kinds: &[NodeKind]) -> Array2<f64> {
    let Some(table) = table else {
        return mu.clone();
    };
    let (n, d_mu) = mu.dim();
    let d_t = table.ncols();
    let mut h = Array2::zeros((n, d_mu + d_t));
    h.slice_mut(s![.., ..d_mu]).assign(mu);
    for (v, kind) in kinds.iter().enumerate() {
        h.slice_mut(s![v, d_mu..]).assign(&table.row(kind.index()));
    }
    h
}

fn scatter_type_grad(dh: ArrayView2<f64>, d_mu: usize, kinds: &[NodeKind], grad: &mut Array2<f64>) {
    for (v, kind) in kinds.iter().enumerate() {
        let mut row = grad.row_mut(kind.index());
        row += &dh.slice(s![v, d_mu..]);
    }
}

fn softmax_rows(u: &mut Array2<f64>) {
    for mut row in u.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
}

/// Multi-head attention where every site queries every sensor.
pub fn attention_fuse(
    sites: &Array2<f64>,
    sensors: &Array2<f64>,
    ap: &AttentionParams,
    heads: usize,
) -> Result<Attention> {
    if sensors.nrows() == 0 {
        return Err(NnError::Shape("attention needs at least one sensor".into()));
    }
    let d_h = sites.ncols();
    if sensors.ncols() != d_h || ap.wq.nrows() != d_h || !d_h.is_multiple_of(heads) {
        return Err(NnError::Shape(format!(
            "attention input width {} incompatible with projections of {} rows and {} heads",
            d_h,
            ap.wq.nrows(),
            heads
        )));
    }
    let dk = d_h / heads;
    let scale = 1.0 / (dk as f64).sqrt();
    let q = sites.dot(&ap.wq);
    let k = sensors.dot(&ap.wk);
    let v = sensors.dot(&ap.wv);
    let mut heads_out = Array2::zeros((sites.nrows(), d_h));
    let mut weights = Vec::with_capacity(heads);
    for hd in 0..heads {
        let cols = s![.., hd * dk..(hd + 1) * dk];
        let mut u = q.slice(cols).dot(&k.slice(cols).t());
        u *= scale;
        softmax_rows(&mut u);
        heads_out.slice_mut(cols).assign(&u.dot(&v.slice(cols)));
        weights.push(u);
    }
    let fused = heads_out.dot(&ap.wo);
    Ok(Attention {
        q,
        k,
        v,
        weights,
        heads_out,
        fused,
    })
}

impl QNetwork {
    pub fn new<R: Rng + ?Sized>(config: NetConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            params: Params::init(&config, rng),
        })
    }

    pub fn from_params(config: NetConfig, params: Params) -> Result<Self> {
        config.validate()?;
        let reference = Params::zeros(&config);
        if !reference.same_layout(&params) {
            return Err(NnError::Shape(
                "parameters do not match the configuration".into(),
            ));
        }
        Ok(Self { config, params })
    }

    fn type_table(&self, level: usize) -> Option<&Array2<f64>> {
        self.params.type_emb.get(level)
    }

    fn check_input(&self, g: &GraphInput) -> Result<()> {
        if g.features.ncols() != self.config.input_dim {
            return Err(NnError::Shape(format!(
                "feature width {} but the network expects {}",
                g.features.ncols(),
                self.config.input_dim
            )));
        }
        if g.sites().is_empty() {
            return Err(NnError::Shape("graph has no site nodes".into()));
        }
        if self.config.use_feature_fusion && g.sensors().is_empty() {
            return Err(NnError::Shape(
                "attention fusion needs at least one sensor".into(),
            ));
        }
        Ok(())
    }

    /// Node embeddings after the last message passing round, `N × d_h`.
    pub fn encode(&self, g: &GraphInput) -> Result<Array2<f64>> {
        Ok(self.forward(g)?.1.embeddings)
    }

    /// Q-value of every site, in site-node order.
    pub fn q_values(&self, g: &GraphInput) -> Result<Vec<f64>> {
        Ok(self.forward(g)?.0)
    }

    pub fn forward(&self, g: &GraphInput) -> Result<(Vec<f64>, ForwardCache)> {
        self.check_input(g)?;
        let cfg = &self.config;
        let p = &self.params;
        let d_mu = cfg.d_mu;
        let d_h = cfg.d_h();
        let n_nodes = g.node_count();

        let mut mu = g.features.dot(&p.input_w) + &p.input_b;
        let mut layers = Vec::with_capacity(cfg.layers);
        for (l, lp) in p.layers.iter().enumerate() {
            let h = with_type(&mu, self.type_table(l), &g.kinds);
            let pm = h.dot(&lp.msg_w.slice(s![..d_h, ..]));
            let wrow = lp.msg_w.row(d_h).to_vec();
            let mut msg = Array2::<f64>::zeros((n_nodes, d_mu));
            {
                let pm = pm.as_slice().expect("standard layout");
                let ms = msg.as_slice_mut().expect("standard layout");
                for v in 0..n_nodes {
                    let out = &mut ms[v * d_mu..(v + 1) * d_mu];
                    for (u, w, _) in g.neighbors(v) {
                        let src = &pm[u * d_mu..(u + 1) * d_mu];
                        for ((o, &p), &r) in out.iter_mut().zip(src).zip(&wrow) {
                            *o += (p + w * r).max(0.0);
                        }
                    }
                }
            }
            let mut z = mu.dot(&lp.self_w);
            general_mat_mul(1.0, &msg, &lp.nbr_w, 1.0, &mut z);
            mu = relu(&z);
            layers.push(LayerCache {
                h,
                pm,
                wrow,
                msg,
                z,
            });
        }
        let embeddings = with_type(&mu, self.type_table(cfg.layers), &g.kinds);

        let site_emb = gather_rows(&embeddings, g.sites());
        let sensor_emb = gather_rows(&embeddings, g.sensors());
        let attention = match &p.attention {
            Some(ap) => Some(attention_fuse(&site_emb, &sensor_emb, ap, cfg.heads)?),
            None => None,
        };
        let fused = match &attention {
            Some(a) => a.fused.clone(),
            None => site_emb.clone(),
        };

        let n_sites = fused.nrows();
        let pool = fused.mean_axis(Axis(0)).expect("at least one site");
        let mut head_in = Array2::zeros((n_sites, 2 * d_h));
        head_in.slice_mut(s![.., ..d_h]).assign(&fused);
        for mut row in head_in.slice_mut(s![.., d_h..]).rows_mut() {
            row.assign(&pool);
        }
        let head_pre = head_in.dot(&p.head_w1) + &p.head_b1;
        let head_hidden = relu(&head_pre);
        let q_col = head_hidden.dot(&p.head_w2) + &p.head_b2;
        let q: Vec<f64> = q_col.column(0).to_vec();

        if !q.iter().all(|v| v.is_finite()) {
            return Err(NnError::Numeric("Q-values".into()));
        }
        let cache = ForwardCache {
            layers,
            embeddings,
            site_emb,
            sensor_emb,
            attention,
            fused,
            head_in,
            head_pre,
            head_hidden,
            q: q.clone(),
        };
        Ok((q, cache))
    }

    /// Accumulate into `grads` the gradient of a loss whose derivative with
    /// respect to the site Q-values is `dq`.
    pub fn backward(
        &self,
        g: &GraphInput,
        cache: &ForwardCache,
        dq: &[f64],
        grads: &mut Params,
    ) -> Result<()> {
        let cfg = &self.config;
        let p = &self.params;
        let d_mu = cfg.d_mu;
        let d_h = cfg.d_h();
        let n_sites = cache.fused.nrows();
        if dq.len() != n_sites {
            return Err(NnError::Shape(format!(
                "{} Q gradients for {} sites",
                dq.len(),
                n_sites
            )));
        }

        // Q head.
        let dq_col = Array2::from_shape_vec((n_sites, 1), dq.to_vec()).expect("column shape");
        general_mat_mul(
            1.0,
            &cache.head_hidden.t(),
            &dq_col,
            1.0,
            &mut grads.head_w2,
        );
        grads.head_b2[[0, 0]] += dq.iter().sum::<f64>();
        let mut dpre = dq_col.dot(&p.head_w2.t());
        ndarray::Zip::from(&mut dpre)
            .and(&cache.head_pre)
            .for_each(|d, &x| {
                if x <= 0.0 {
                    *d = 0.0;
                }
            });
        general_mat_mul(1.0, &cache.head_in.t(), &dpre, 1.0, &mut grads.head_w1);
        grads.head_b1 += &dpre.sum_axis(Axis(0));
        let dhead_in = dpre.dot(&p.head_w1.t());
        let dpool: Array1<f64> = dhead_in.slice(s![.., d_h..]).sum_axis(Axis(0)) / n_sites as f64;
        let mut dfused = dhead_in.slice(s![.., ..d_h]).to_owned();
        dfused += &dpool;

        // Attention fusion.
        let (dsite, dsensor) = match (&p.attention, &cache.attention) {
            (Some(ap), Some(att)) => {
                let ag = grads
                    .attention
                    .as_mut()
                    .expect("gradient layout matches parameters");
                self.attention_backward(ap, att, &cache.site_emb, &cache.sensor_emb, &dfused, ag)
            }
            _ => (dfused, Array2::zeros((g.sensors().len(), d_h))),
        };

        let mut dh = Array2::<f64>::zeros((g.node_count(), d_h));
        for (r, &v) in g.sites().iter().enumerate() {
            dh.row_mut(v).assign(&dsite.row(r));
        }
        for (r, &v) in g.sensors().iter().enumerate() {
            dh.row_mut(v).assign(&dsensor.row(r));
        }
        if let Some(tg) = grads.type_emb.get_mut(cfg.layers) {
            scatter_type_grad(dh.view(), d_mu, &g.kinds, tg);
        }
        let mut dmu = dh.slice(s![.., ..d_mu]).to_owned();

        // Message passing rounds, last to first.
        for l in (0..cfg.layers).rev() {
            let lc = &cache.layers[l];
            let lp = &p.layers[l];
            let mut dz = dmu;
            ndarray::Zip::from(&mut dz).and(&lc.z).for_each(|d, &x| {
                if x <= 0.0 {
                    *d = 0.0;
                }
            });
            let mu_in = lc.h.slice(s![.., ..d_mu]);
            let lg = &mut grads.layers[l];
            general_mat_mul(1.0, &mu_in.t(), &dz, 1.0, &mut lg.self_w);
            general_mat_mul(1.0, &lc.msg.t(), &dz, 1.0, &mut lg.nbr_w);
            let mut dmu_in = dz.dot(&lp.self_w.t());
            let dmsg = dz.dot(&lp.nbr_w.t());

            let mut dpm = Array2::<f64>::zeros((g.node_count(), d_mu));
            let mut dwrow = vec![0.0; d_mu];
            {
                let dm = dmsg.as_slice().expect("standard layout");
                let pm = lc.pm.as_slice().expect("standard layout");
                let dp = dpm.as_slice_mut().expect("standard layout");
                for v in 0..g.node_count() {
                    let up = &dm[v * d_mu..(v + 1) * d_mu];
                    for (u, w, _) in g.neighbors(v) {
                        let src = &pm[u * d_mu..(u + 1) * d_mu];
                        let dst = &mut dp[u * d_mu..(u + 1) * d_mu];
                        // same expression as the forward pass, so the same sign
                        let lanes = dst
                            .iter_mut()
                            .zip(src)
                            .zip(&lc.wrow)
                            .zip(up.iter().zip(dwrow.iter_mut()));
                        for (((d, &p), &r), (&g, dw)) in lanes {
                            let gate = if p + w * r > 0.0 { g } else { 0.0 };
                            *d += gate;
                            *dw += w * gate;
                        }
                    }
                }
            }
            {
                let mut top = lg.msg_w.slice_mut(s![..d_h, ..]);
                general_mat_mul(1.0, &lc.h.t(), &dpm, 1.0, &mut top);
            }
            for (k, dw) in dwrow.iter().enumerate() {
                lg.msg_w[[d_h, k]] += dw;
            }
            let dh_in = dpm.dot(&lp.msg_w.slice(s![..d_h, ..]).t());
            dmu_in += &dh_in.slice(s![.., ..d_mu]);
            if let Some(tg) = grads.type_emb.get_mut(l) {
                scatter_type_grad(dh_in.view(), d_mu, &g.kinds, tg);
            }
            dmu = dmu_in;
        }

        general_mat_mul(1.0, &g.features.t(), &dmu, 1.0, &mut grads.input_w);
        grads.input_b += &dmu.sum_axis(Axis(0));
        Ok(())
    }

    /// Returns the gradients with respect to the site and sensor embeddings.
    fn attention_backward(
        &self,
        ap: &AttentionParams,
        att: &Attention,
        sites: &Array2<f64>,
        sensors: &Array2<f64>,
        dfused: &Array2<f64>,
        grads: &mut AttentionParams,
    ) -> (Array2<f64>, Array2<f64>) {
        let heads = self.config.heads;
        let d_h = sites.ncols();
        let dk = d_h / heads;
        let scale = 1.0 / (dk as f64).sqrt();

        general_mat_mul(1.0, &att.heads_out.t(), dfused, 1.0, &mut grads.wo);
        let dout = dfused.dot(&ap.wo.t());
        let mut dq = Array2::<f64>::zeros(att.q.dim());
        let mut dk_all = Array2::<f64>::zeros(att.k.dim());
        let mut dv = Array2::<f64>::zeros(att.v.dim());
        for hd in 0..heads {
            let cols = s![.., hd * dk..(hd + 1) * dk];
            let a = &att.weights[hd];
            let dout_h = dout.slice(cols);
            let da = dout_h.dot(&att.v.slice(cols).t());
            dv.slice_mut(cols).assign(&a.t().dot(&dout_h));
            // softmax Jacobian, row by row
            let mut du = a * &da;
            let rowdot = du.sum_axis(Axis(1));
            for (mut row, (arow, &rd)) in du
                .rows_mut()
                .into_iter()
                .zip(a.rows().into_iter().zip(&rowdot))
            {
                row.zip_mut_with(&arow, |x, &av| *x -= av * rd);
            }
            du *= scale;
            dq.slice_mut(cols).assign(&du.dot(&att.k.slice(cols)));
            dk_all
                .slice_mut(cols)
                .assign(&du.t().dot(&att.q.slice(cols)));
        }
        general_mat_mul(1.0, &sites.t(), &dq, 1.0, &mut grads.wq);
        general_mat_mul(1.0, &sensors.t(), &dk_all, 1.0, &mut grads.wk);
        general_mat_mul(1.0, &sensors.t(), &dv, 1.0, &mut grads.wv);
        let dsites = dq.dot(&ap.wq.t());
        let mut dsensors = dk_all.dot(&ap.wk.t());
        general_mat_mul(1.0, &dv, &ap.wv.t(), 1.0, &mut dsensors);
        (dsites, dsensors)
    }

    /// Index of the largest Q-value among allowed sites; ties go to the
    /// lowest index. `None` when nothing is allowed.
    pub fn masked_argmax(q: &[f64], mask: &[bool]) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, (&v, &ok)) in q.iter().zip(mask).enumerate() {
            if ok && best.is_none_or(|b| v > q[b]) {
                best = Some(i);
            }
        }
        best
    }
}
