//! The temporal fusion dataflow, shared by the classical and quantum models.
//!
//! Both forecasters run the same sequence of layers; they differ only in
//! which block implementation sits in each slot. Input embeddings and the
//! per-quantile output heads stay classical in every variant.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{ModelConfig, ModelKind};
use crate::error::{Error, Result};
use crate::forecasting::WindowedSample;
use crate::grad::{ParamStore, Tape, Var};
use crate::qtft::{QAttention, QGlu, QGrn, QLstmCell, QVariableSelection};
use crate::tft::{lstm_seq, Dense, Glu, Grn, InterpretableAttention, LstmCell, VariableSelection};

#[derive(Debug, Clone)]
enum GrnBlock {
    Classical(Grn),
    Quantum(QGrn),
}

impl GrnBlock {
    fn forward(&self, t: &mut Tape, p: &[Var], a: Var, c: Option<Var>) -> Result<Var> {
        match self {
            GrnBlock::Classical(g) => g.forward(t, p, a, c),
            GrnBlock::Quantum(g) => g.forward(t, p, a, c),
        }
    }
}

#[derive(Debug, Clone)]
enum GluBlock {
    Classical(Glu),
    Quantum(QGlu),
}

impl GluBlock {
    fn forward(&self, t: &mut Tape, p: &[Var], x: Var) -> Result<Var> {
        match self {
            GluBlock::Classical(g) => g.forward(t, p, x),
            GluBlock::Quantum(g) => g.forward(t, p, x),
        }
    }
}

#[derive(Debug, Clone)]
enum SelectBlock {
    Classical(VariableSelection),
    Quantum(QVariableSelection),
}

impl SelectBlock {
    fn forward(&self, t: &mut Tape, p: &[Var], e: &[Var], c: Option<Var>) -> Result<(Var, Var)> {
        match self {
            SelectBlock::Classical(v) => v.forward(t, p, e, c),
            SelectBlock::Quantum(v) => v.forward(t, p, e, c),
        }
    }
}

#[derive(Debug, Clone)]
enum AttentionBlock {
    Classical(InterpretableAttention),
    Quantum(QAttention),
}

#[derive(Debug, Clone)]
enum LstmBlock {
    Classical(LstmCell),
    Quantum(QLstmCell),
}

impl LstmBlock {
    fn step(&self, t: &mut Tape, p: &[Var], x: Var, h: Var, c: Var) -> Result<(Var, Var)> {
        match self {
            LstmBlock::Classical(l) => l.step(t, p, x, h, c),
            LstmBlock::Quantum(l) => l.step(t, p, x, h, c),
        }
    }
}

/// Intermediate values of one forward pass, kept for inspection.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// `[quantile]` → forecasts for steps `1..=τ_max`.
    pub forecasts: Vec<Var>,
    pub static_weights: Var,
    pub past_weights: Vec<Var>,
    pub future_weights: Vec<Var>,
    pub contexts: [Var; 4],
}

/// A temporal fusion forecaster (classical or hybrid).
#[derive(Debug, Clone)]
pub struct FusionModel {
    kind: ModelKind,
    config: ModelConfig,
    params: ParamStore,
    static_embed: Vec<Dense>,
    past_embed: Vec<Dense>,
    future_embed: Vec<Dense>,
    static_select: SelectBlock,
    past_select: SelectBlock,
    future_select: SelectBlock,
    /// Context encoders for `c_s, c_e, c_c, c_h`.
    encoders: Vec<GrnBlock>,
    encoder_lstm: LstmBlock,
    decoder_lstm: LstmBlock,
    post_lstm: GluBlock,
    enrichment: GrnBlock,
    attention: AttentionBlock,
    post_attention: GluBlock,
    positionwise: GrnBlock,
    final_gate: GluBlock,
    heads: Vec<Dense>,
}

impl FusionModel {
    /// Builds and initializes a model; all random draws come from `seed`.
    pub fn new(kind: ModelKind, config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rng = &mut rng;
        let mut store = ParamStore::new();
        let s = &mut store;
        let d = config.d_model;
        let eps = config.layer_norm_eps;
        let qc = config.quantum;
        let quantum = kind.is_quantum();

        let embed = |s: &mut ParamStore, rng: &mut ChaCha8Rng, group: &str, n: usize| -> Vec<Dense> {
            (0..n)
                .map(|j| Dense::new(s, rng, &format!("embed.{group}{j}"), 1, d, true))
                .collect()
        };
        let static_embed = embed(s, rng, "static", config.num_static);
        let past_embed = embed(s, rng, "past", config.num_past);
        let future_embed = embed(s, rng, "future", config.num_future);

        let shared = config.share_variable_grns;
        let select = |s: &mut ParamStore, rng: &mut ChaCha8Rng, name: &str, m: usize, ctx: Option<usize>| {
            Ok::<_, Error>(if quantum {
                SelectBlock::Quantum(QVariableSelection::new(s, rng, name, m, d, ctx, shared, &qc, eps)?)
            } else {
                SelectBlock::Classical(VariableSelection::new(s, rng, name, m, d, ctx, shared, eps))
            })
        };
        let grn = |s: &mut ParamStore, rng: &mut ChaCha8Rng, name: &str, ctx: Option<usize>| {
            Ok::<_, Error>(if quantum {
                GrnBlock::Quantum(QGrn::new(s, rng, name, d, ctx, &qc, eps)?)
            } else {
                GrnBlock::Classical(Grn::new(s, rng, name, d, ctx, eps))
            })
        };
        let glu = |s: &mut ParamStore, rng: &mut ChaCha8Rng, name: &str| {
            Ok::<_, Error>(if quantum {
                GluBlock::Quantum(QGlu::new(s, rng, name, d, &qc)?)
            } else {
                GluBlock::Classical(Glu::new(s, rng, name, d, d))
            })
        };
        let lstm = |s: &mut ParamStore, rng: &mut ChaCha8Rng, name: &str| {
            Ok::<_, Error>(if kind == ModelKind::QtftQlstm {
                LstmBlock::Quantum(QLstmCell::new(s, rng, name, d, d, &qc)?)
            } else {
                LstmBlock::Classical(LstmCell::new(s, rng, name, d, d))
            })
        };

        let static_select = select(s, rng, "select.static", config.num_static, None)?;
        let past_select = select(s, rng, "select.past", config.num_past, Some(d))?;
        let future_select = select(s, rng, "select.future", config.num_future, Some(d))?;
        let encoders = ["cs", "ce", "cc", "ch"]
            .iter()
            .map(|c| grn(s, rng, &format!("context.{c}"), None))
            .collect::<Result<_>>()?;
        let encoder_lstm = lstm(s, rng, "lstm.encoder")?;
        let decoder_lstm = lstm(s, rng, "lstm.decoder")?;
        let post_lstm = glu(s, rng, "post_lstm")?;
        let enrichment = grn(s, rng, "enrichment", Some(d))?;
        let attention = if quantum {
            AttentionBlock::Quantum(QAttention::new(s, rng, "attention", d, config.heads, config.causal_mask, &qc)?)
        } else {
            AttentionBlock::Classical(InterpretableAttention::new(
                s,
                rng,
                "attention",
                d,
                config.heads,
                config.d_attn(),
                config.causal_mask,
            ))
        };
        let post_attention = glu(s, rng, "post_attention")?;
        let positionwise = grn(s, rng, "positionwise", None)?;
        let final_gate = glu(s, rng, "final")?;
        let heads = (0..config.quantiles.len())
            .map(|q| Dense::new(s, rng, &format!("head.q{q}"), d, 1, true))
            .collect();

        Ok(Self {
            kind,
            config,
            params: store,
            static_embed,
            past_embed,
            future_embed,
            static_select,
            past_select,
            future_select,
            encoders,
            encoder_lstm,
            decoder_lstm,
            post_lstm,
            enrichment,
            attention,
            post_attention,
            positionwise,
            final_gate,
            heads,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    /// Trainable scalar count, summed over the parameter tree.
    pub fn num_parameters(&self) -> usize {
        self.params.num_scalars()
    }

    fn check_sample(&self, sample: &WindowedSample) -> Result<()> {
        let c = &self.config;
        let rows_ok = |rows: &[Vec<f64>], n: usize, m: usize| rows.len() == n && rows.iter().all(|r| r.len() == m);
        if !rows_ok(&sample.past, c.past_steps, c.num_past) {
            return Err(Error::Shape(format!(
                "past window must be {} × {}",
                c.past_steps, c.num_past
            )));
        }
        if !rows_ok(&sample.future_known, c.forecast_steps, c.num_future) {
            return Err(Error::Shape(format!(
                "known-future window must be {} × {}",
                c.forecast_steps, c.num_future
            )));
        }
        if sample.static_vars.len() != c.num_static {
            return Err(Error::Shape(format!(
                "expected {} static inputs, got {}",
                c.num_static,
                sample.static_vars.len()
            )));
        }
        Ok(())
    }

    fn embed(t: &mut Tape, p: &[Var], layers: &[Dense], values: &[f64]) -> Result<Vec<Var>> {
        layers
            .iter()
            .zip(values)
            .map(|(l, &v)| {
                let x = t.leaf(vec![v]);
                l.forward(t, p, x)
            })
            .collect()
    }

    /// Records a forward pass for `sample` on `t` using parameter leaves `p`.
    pub fn forward_trace(&self, t: &mut Tape, p: &[Var], sample: &WindowedSample) -> Result<ForwardTrace> {
        self.check_sample(sample)?;
        let eps = self.config.layer_norm_eps;

        let emb = Self::embed(t, p, &self.static_embed, &sample.static_vars)?;
        let (xi_static, static_weights) = self.static_select.forward(t, p, &emb, None)?;
        let mut ctx = Vec::with_capacity(4);
        for enc in &self.encoders {
            ctx.push(enc.forward(t, p, xi_static, None)?);
        }
        let [c_s, c_e, c_c, c_h] = [ctx[0], ctx[1], ctx[2], ctx[3]];

        let mut selected = Vec::with_capacity(self.config.positions());
        let mut past_weights = Vec::new();
        for row in &sample.past {
            let emb = Self::embed(t, p, &self.past_embed, row)?;
            let (xi, w) = self.past_select.forward(t, p, &emb, Some(c_s))?;
            selected.push(xi);
            past_weights.push(w);
        }
        let mut future_weights = Vec::new();
        for row in &sample.future_known {
            let emb = Self::embed(t, p, &self.future_embed, row)?;
            let (xi, w) = self.future_select.forward(t, p, &emb, Some(c_s))?;
            selected.push(xi);
            future_weights.push(w);
        }

        let k = self.config.past_steps;
        let (mut phi, h, c) = lstm_seq(t, &selected[..k], c_h, c_c, |t, x, h, c| {
            self.encoder_lstm.step(t, p, x, h, c)
        })?;
        let (dec, _, _) = lstm_seq(t, &selected[k..], h, c, |t, x, h, c| self.decoder_lstm.step(t, p, x, h, c))?;
        phi.extend(dec);

        let mut phi_tilde = Vec::with_capacity(phi.len());
        for (&xi, &ph) in selected.iter().zip(&phi) {
            let g = self.post_lstm.forward(t, p, ph)?;
            let r = t.add(xi, g)?;
            phi_tilde.push(t.layer_norm(r, eps)?);
        }

        let theta: Vec<Var> = phi_tilde
            .iter()
            .map(|&x| self.enrichment.forward(t, p, x, Some(c_e)))
            .collect::<Result<_>>()?;
        let beta = match &self.attention {
            AttentionBlock::Classical(a) => a.forward(t, p, &theta)?,
            AttentionBlock::Quantum(a) => a.forward(t, p, &theta)?,
        };

        let mut forecasts: Vec<Vec<Var>> = vec![Vec::new(); self.heads.len()];
        for n in 0..theta.len() {
            let g = self.post_attention.forward(t, p, beta[n])?;
            let r = t.add(theta[n], g)?;
            let delta = t.layer_norm(r, eps)?;
            let psi = self.positionwise.forward(t, p, delta, None)?;
            let g = self.final_gate.forward(t, p, psi)?;
            let r = t.add(phi_tilde[n], g)?;
            let psi_tilde = t.layer_norm(r, eps)?;
            if n >= k {
                for (out, head) in forecasts.iter_mut().zip(&self.heads) {
                    out.push(head.forward(t, p, psi_tilde)?);
                }
            }
        }
        let forecasts = forecasts.into_iter().map(|f| t.concat(&f)).collect();

        Ok(ForwardTrace {
            forecasts,
            static_weights,
            past_weights,
            future_weights,
            contexts: [c_s, c_e, c_c, c_h],
        })
    }

    /// Forecast nodes, one per quantile, each of length `τ_max`.
    pub fn forward(&self, t: &mut Tape, p: &[Var], sample: &WindowedSample) -> Result<Vec<Var>> {
        Ok(self.forward_trace(t, p, sample)?.forecasts)
    }

    /// `[quantile][step]` forecasts.
    pub fn predict(&self, sample: &WindowedSample) -> Result<Vec<Vec<f64>>> {
        let mut t = Tape::new();
        let p = self.params.bind(&mut t);
        let out = self.forward(&mut t, &p, sample)?;
        Ok(out.into_iter().map(|v| t.value(v).to_vec()).collect())
    }

    /// Pinball loss of one window, averaged over forecast steps and quantiles.
    pub fn sample_loss(&self, t: &mut Tape, p: &[Var], sample: &WindowedSample) -> Result<Var> {
        let out = self.forward(t, p, sample)?;
        let losses: Vec<Var> = out
            .iter()
            .zip(&self.config.quantiles)
            .map(|(&pred, &q)| t.pinball(pred, &sample.targets, q))
            .collect::<Result<_>>()?;
        let total = t.concat(&losses);
        t.mean(total)
    }

    /// Loss of one window and its gradient, flattened in parameter order.
    pub fn loss_and_grad(&self, sample: &WindowedSample) -> Result<(f64, Vec<f64>)> {
        let mut t = Tape::new();
        let p = self.params.bind(&mut t);
        let loss = self.sample_loss(&mut t, &p, sample)?;
        t.backward(loss)?;
        let grads = p.iter().flat_map(|&v| t.grad(v).iter().copied()).collect();
        Ok((t.value(loss)[0], grads))
    }

    pub fn loss(&self, sample: &WindowedSample) -> Result<f64> {
        let mut t = Tape::new();
        let p = self.params.bind(&mut t);
        let loss = self.sample_loss(&mut t, &p, sample)?;
        Ok(t.value(loss)[0])
    }
}
