use rand::Rng;

use crate::error::{Error, Result};
use crate::grad::{Init, ParamId, ParamStore, Tape, Var};

/// `W x + b` with `W` of shape `out × in`.
#[derive(Debug, Clone)]
pub struct Dense {
    pub w: ParamId,
    pub b: Option<ParamId>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Dense {
    pub fn new(
        store: &mut ParamStore,
        rng: &mut impl Rng,
        name: &str,
        in_dim: usize,
        out_dim: usize,
        bias: bool,
    ) -> Self {
        let w = store.add(format!("{name}.w"), &[out_dim, in_dim], Init::FanIn(in_dim), rng);
        let b = bias.then(|| store.add(format!("{name}.b"), &[out_dim], Init::FanIn(in_dim), rng));
        Self {
            w,
            b,
            in_dim,
            out_dim,
        }
    }

    pub fn forward(&self, t: &mut Tape, p: &[Var], x: Var) -> Result<Var> {
        if t.value(x).len() != self.in_dim {
            return Err(Error::Shape(format!(
                "dense layer expects input length {}, got {}",
                self.in_dim,
                t.value(x).len()
            )));
        }
        let y = t.matvec(p[self.w.index()], x)?;
        match self.b {
            Some(b) => t.add(y, p[b.index()]),
            None => Ok(y),
        }
    }
}

/// `σ(W4 x + b4) ⊙ (W5 x + b5)`.
#[derive(Debug, Clone)]
pub struct Glu {
    pub gate: Dense,
    pub lin: Dense,
}

impl Glu {
    pub fn new(store: &mut ParamStore, rng: &mut impl Rng, name: &str, in_dim: usize, out_dim: usize) -> Self {
        Self {
            gate: Dense::new(store, rng, &format!("{name}.gate"), in_dim, out_dim, true),
            lin: Dense::new(store, rng, &format!("{name}.lin"), in_dim, out_dim, true),
        }
    }

    pub fn forward(&self, t: &mut Tape, p: &[Var], x: Var) -> Result<Var> {
        let g = self.gate.forward(t, p, x)?;
        let g = t.sigmoid(g);
        let l = self.lin.forward(t, p, x)?;
        t.mul(g, l)
    }
}

/// Gated residual network `LayerNorm(a + GLU(W3·ELU(W1 a + W2 c + b12) + b3))`.
#[derive(Debug, Clone)]
pub struct Grn {
    pub primary: Dense,
    pub context: Option<Dense>,
    pub hidden: Dense,
    pub glu: Glu,
    pub eps: f64,
}

impl Grn {
    /// `context_dim` declares the optional context input; `None` means the
    /// GRN is never called with one.
    pub fn new(
        store: &mut ParamStore,
        rng: &mut impl Rng,
        name: &str,
        dim: usize,
        context_dim: Option<usize>,
        eps: f64,
    ) -> Self {
        Self {
            primary: Dense::new(store, rng, &format!("{name}.w1"), dim, dim, true),
            context: context_dim.map(|c| Dense::new(store, rng, &format!("{name}.w2"), c, dim, false)),
            hidden: Dense::new(store, rng, &format!("{name}.w3"), dim, dim, true),
            glu: Glu::new(store, rng, &format!("{name}.glu"), dim, dim),
            eps,
        }
    }

    pub fn forward(&self, t: &mut Tape, p: &[Var], a: Var, c: Option<Var>) -> Result<Var> {
        let mut pre = self.primary.forward(t, p, a)?;
        if let Some(c) = c {
            let ctx = self.context.as_ref().ok_or_else(|| {
                Error::Shape("context passed to a GRN built without a context input".into())
            })?;
            let cw = ctx.forward(t, p, c)?;
            pre = t.add(pre, cw)?;
        }
        let eta1 = t.elu(pre);
        let eta2 = self.hidden.forward(t, p, eta1)?;
        let eta3 = self.glu.forward(t, p, eta2)?;
        let res = t.add(a, eta3)?;
        t.layer_norm(res, self.eps)
    }
}

/// Standard LSTM cell; gates `i, f, g, o` from one affine map of `[x; h]`.
#[derive(Debug, Clone)]
pub struct LstmCell {
    pub gates: Dense,
    pub input_dim: usize,
    pub hidden: usize,
}

impl LstmCell {
    pub fn new(store: &mut ParamStore, rng: &mut impl Rng, name: &str, input_dim: usize, hidden: usize) -> Self {
        Self {
            gates: Dense::new(store, rng, &format!("{name}.gates"), input_dim + hidden, 4 * hidden, true),
            input_dim,
            hidden,
        }
    }

    pub fn step(&self, t: &mut Tape, p: &[Var], x: Var, h: Var, c: Var) -> Result<(Var, Var)> {
        let xh = t.concat(&[x, h]);
        let z = self.gates.forward(t, p, xh)?;
        let hs = self.hidden;
        let zi = t.slice(z, 0, hs)?;
        let zf = t.slice(z, hs, hs)?;
        let zg = t.slice(z, 2 * hs, hs)?;
        let zo = t.slice(z, 3 * hs, hs)?;
        let i = t.sigmoid(zi);
        let f = t.sigmoid(zf);
        let g = t.tanh(zg);
        let o = t.sigmoid(zo);
        lstm_update(t, i, f, g, o, c)
    }
}

/// `c' = f⊙c + i⊙g`, `h' = o⊙tanh(c')`.
pub(crate) fn lstm_update(t: &mut Tape, i: Var, f: Var, g: Var, o: Var, c: Var) -> Result<(Var, Var)> {
    let fc = t.mul(f, c)?;
    let ig = t.mul(i, g)?;
    let c_new = t.add(fc, ig)?;
    let tc = t.tanh(c_new);
    let h_new = t.mul(o, tc)?;
    Ok((h_new, c_new))
}

/// Runs a cell over a sequence; returns every hidden state and the final `(h, c)`.
pub fn lstm_seq<F>(t: &mut Tape, inputs: &[Var], h0: Var, c0: Var, mut step: F) -> Result<(Vec<Var>, Var, Var)>
where
    F: FnMut(&mut Tape, Var, Var, Var) -> Result<(Var, Var)>,
{
    if inputs.is_empty() {
        return Err(Error::Shape("LSTM over an empty sequence".into()));
    }
    let (mut h, mut c) = (h0, c0);
    let mut out = Vec::with_capacity(inputs.len());
    for &x in inputs {
        (h, c) = step(t, x, h, c)?;
        out.push(h);
    }
    Ok((out, h, c))
}

/// Scaled dot-product attention over rows: `softmax(QKᵀ/√d_attn) V`.
///
/// With `causal`, row `i` only attends to rows `j ≤ i`.
pub fn attention(
    t: &mut Tape,
    queries: &[Var],
    keys: &[Var],
    values: &[Var],
    d_attn: f64,
    causal: bool,
) -> Result<Vec<Var>> {
    if keys.len() != values.len() || keys.is_empty() {
        return Err(Error::Shape(format!(
            "attention over {} keys and {} values",
            keys.len(),
            values.len()
        )));
    }
    let scale = 1.0 / d_attn.sqrt();
    let mut out = Vec::with_capacity(queries.len());
    for (i, &q) in queries.iter().enumerate() {
        let visible = if causal { (i + 1).min(keys.len()) } else { keys.len() };
        let scores: Vec<Var> = keys[..visible]
            .iter()
            .map(|&k| t.dot(q, k))
            .collect::<Result<_>>()?;
        let s = t.concat(&scores);
        let s = t.scale(s, scale);
        let a = t.softmax(s)?;
        out.push(t.weighted_sum(a, &values[..visible])?);
    }
    Ok(out)
}

/// Value-level wrapper around [`attention`] for plain matrices.
pub fn attention_values(q: &[Vec<f64>], k: &[Vec<f64>], v: &[Vec<f64>], d_attn: f64) -> Result<Vec<Vec<f64>>> {
    let mut t = Tape::new();
    let qs: Vec<Var> = q.iter().map(|r| t.leaf(r.clone())).collect();
    let ks: Vec<Var> = k.iter().map(|r| t.leaf(r.clone())).collect();
    let vs: Vec<Var> = v.iter().map(|r| t.leaf(r.clone())).collect();
    let out = attention(&mut t, &qs, &ks, &vs, d_attn, false)?;
    Ok(out.into_iter().map(|o| t.value(o).to_vec()).collect())
}

/// Interpretable multi-head attention: per-head query/key projections, one
/// shared value projection, heads averaged, then `W_H̃`.
#[derive(Debug, Clone)]
pub struct InterpretableAttention {
    pub queries: Vec<Dense>,
    pub keys: Vec<Dense>,
    pub value: Dense,
    pub combine: Dense,
    pub d_attn: usize,
    pub causal: bool,
}

impl InterpretableAttention {
    pub fn new(
        store: &mut ParamStore,
        rng: &mut impl Rng,
        name: &str,
        d_model: usize,
        heads: usize,
        d_attn: usize,
        causal: bool,
    ) -> Self {
        let queries = (0..heads)
            .map(|h| Dense::new(store, rng, &format!("{name}.q{h}"), d_model, d_attn, false))
            .collect();
        let keys = (0..heads)
            .map(|h| Dense::new(store, rng, &format!("{name}.k{h}"), d_model, d_attn, false))
            .collect();
        Self {
            queries,
            keys,
            value: Dense::new(store, rng, &format!("{name}.v"), d_model, d_attn, false),
            combine: Dense::new(store, rng, &format!("{name}.out"), d_attn, d_model, false),
            d_attn,
            causal,
        }
    }

    /// Head-averaged attention before the output projection.
    pub fn heads_mean(&self, t: &mut Tape, p: &[Var], rows: &[Var]) -> Result<Vec<Var>> {
        let v: Vec<Var> = rows.iter().map(|&s| self.value.forward(t, p, s)).collect::<Result<_>>()?;
        let mut per_head = Vec::with_capacity(self.queries.len());
        for (wq, wk) in self.queries.iter().zip(&self.keys) {
            let q: Vec<Var> = rows.iter().map(|&s| wq.forward(t, p, s)).collect::<Result<_>>()?;
            let k: Vec<Var> = rows.iter().map(|&s| wk.forward(t, p, s)).collect::<Result<_>>()?;
            per_head.push(attention(t, &q, &k, &v, self.d_attn as f64, self.causal)?);
        }
        mean_heads(t, per_head)
    }

    pub fn forward(&self, t: &mut Tape, p: &[Var], rows: &[Var]) -> Result<Vec<Var>> {
        let h = self.heads_mean(t, p, rows)?;
        h.into_iter().map(|r| self.combine.forward(t, p, r)).collect()
    }
}

/// Row-wise mean of several heads' outputs. A single head is returned as is.
pub(crate) fn mean_heads(t: &mut Tape, mut per_head: Vec<Vec<Var>>) -> Result<Vec<Var>> {
    let m = per_head.len();
    if m == 1 {
        return Ok(per_head.pop().expect("one head"));
    }
    let rows = per_head[0].len();
    (0..rows)
        .map(|r| {
            let items: Vec<Var> = per_head.iter().map(|h| h[r]).collect();
            let s = t.sum(&items)?;
            Ok(t.scale(s, 1.0 / m as f64))
        })
        .collect()
}

/// Softmax-weighted combination of per-variable GRN outputs.
#[derive(Debug, Clone)]
pub struct VariableSelection {
    pub per_variable: Vec<Grn>,
    /// Flattened embeddings (`m·d_model`) → `m`, ahead of the weight GRN.
    pub flatten: Option<Dense>,
    pub weights: Option<Grn>,
    pub num_vars: usize,
}

impl VariableSelection {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        store: &mut ParamStore,
        rng: &mut impl Rng,
        name: &str,
        num_vars: usize,
        d_model: usize,
        context_dim: Option<usize>,
        shared: bool,
        eps: f64,
    ) -> Self {
        let per_variable = if shared {
            vec![Grn::new(store, rng, &format!("{name}.var"), d_model, None, eps)]
        } else {
            (0..num_vars)
                .map(|j| Grn::new(store, rng, &format!("{name}.var{j}"), d_model, None, eps))
                .collect()
        };
        let (flatten, weights) = if num_vars > 1 {
            (
                Some(Dense::new(store, rng, &format!("{name}.flat"), num_vars * d_model, num_vars, true)),
                Some(Grn::new(store, rng, &format!("{name}.weights"), num_vars, context_dim, eps)),
            )
        } else {
            (None, None)
        };
        Self {
            per_variable,
            flatten,
            weights,
            num_vars,
        }
    }

    /// Returns `(selected, weights)`.
    pub fn forward(&self, t: &mut Tape, p: &[Var], embeddings: &[Var], context: Option<Var>) -> Result<(Var, Var)> {
        if embeddings.len() != self.num_vars {
            return Err(Error::Shape(format!(
                "variable selection over {} variables got {}",
                self.num_vars,
                embeddings.len()
            )));
        }
        let processed: Vec<Var> = embeddings
            .iter()
            .enumerate()
            .map(|(j, &e)| self.per_variable[j.min(self.per_variable.len() - 1)].forward(t, p, e, None))
            .collect::<Result<_>>()?;
        let weights = match (&self.flatten, &self.weights) {
            (Some(flat), Some(grn)) => {
                let xi = t.concat(embeddings);
                let z = flat.forward(t, p, xi)?;
                let z = grn.forward(t, p, z, context)?;
                t.softmax(z)?
            }
            _ => t.leaf(vec![1.0]),
        };
        let selected = t.weighted_sum(weights, &processed)?;
        Ok((selected, weights))
    }
}
