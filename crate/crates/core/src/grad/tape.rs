//! Reverse-mode tape over real vectors.
//!
//! Nodes are appended in evaluation order, so the arena index is already a
//! topological order and [`Tape::backward`] simply walks it in reverse.

use std::sync::Arc;

use super::kernels;
use super::shift::circuit_jacobian;
use crate::error::{Error, Result};
use crate::quantum::{measure_all_z, ParameterizedCircuit};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    /// `W x` with `W` stored row-major.
    MatVec { w: Var, x: Var },
    Sigmoid(Var),
    Tanh(Var),
    Elu(Var),
    Softmax(Var),
    LayerNorm { x: Var, eps: f64 },
    Concat(Vec<Var>),
    Slice { x: Var, start: usize },
    Dot(Var, Var),
    Sum(Vec<Var>),
    WeightedSum { weights: Var, items: Vec<Var> },
    Mean(Var),
    Pinball { pred: Var, target: Vec<f64>, q: f64 },
    Quantum {
        circuit: Arc<ParameterizedCircuit>,
        features: Var,
        weights: Var,
    },
}

/// Records vector operations and replays them backwards.
#[derive(Debug, Default, Clone)]
pub struct Tape {
    values: Vec<Vec<f64>>,
    grads: Vec<Vec<f64>>,
    ops: Vec<Op>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn push(&mut self, value: Vec<f64>, op: Op) -> Var {
        self.grads.push(vec![0.0; value.len()]);
        self.values.push(value);
        self.ops.push(op);
        Var(self.values.len() - 1)
    }

    /// A leaf node: an input or a parameter.
    pub fn leaf(&mut self, value: Vec<f64>) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.values[v.0]
    }

    pub fn grad(&self, v: Var) -> &[f64] {
        &self.grads[v.0]
    }

    fn same_len(&self, a: Var, b: Var, what: &str) -> Result<usize> {
        let (la, lb) = (self.values[a.0].len(), self.values[b.0].len());
        if la != lb {
            return Err(Error::Shape(format!("{what}: lengths {la} and {lb}")));
        }
        Ok(la)
    }

    fn zip_map(&self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.values[a.0]
            .iter()
            .zip(&self.values[b.0])
            .map(|(x, y)| f(*x, *y))
            .collect()
    }

    fn map(&self, a: Var, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.values[a.0].iter().map(|x| f(*x)).collect()
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_len(a, b, "add")?;
        let v = self.zip_map(a, b, |x, y| x + y);
        Ok(self.push(v, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_len(a, b, "sub")?;
        let v = self.zip_map(a, b, |x, y| x - y);
        Ok(self.push(v, Op::Sub(a, b)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_len(a, b, "mul")?;
        let v = self.zip_map(a, b, |x, y| x * y);
        Ok(self.push(v, Op::Mul(a, b)))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let v = self.map(a, |x| c * x);
        self.push(v, Op::Scale(a, c))
    }

    /// `W x` where `W` holds `rows × x.len()` entries row-major.
    pub fn matvec(&mut self, w: Var, x: Var) -> Result<Var> {
        let cols = self.values[x.0].len();
        let wl = self.values[w.0].len();
        if cols == 0 || !wl.is_multiple_of(cols) {
            return Err(Error::Shape(format!(
                "matvec: {wl} weights do not tile an input of length {cols}"
            )));
        }
        let (wv, xv) = (&self.values[w.0], &self.values[x.0]);
        let v = wv
            .chunks(cols)
            .map(|row| row.iter().zip(xv).map(|(a, b)| a * b).sum())
            .collect();
        Ok(self.push(v, Op::MatVec { w, x }))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = self.map(a, kernels::sigmoid);
        self.push(v, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.map(a, f64::tanh);
        self.push(v, Op::Tanh(a))
    }

    pub fn elu(&mut self, a: Var) -> Var {
        let v = self.map(a, kernels::elu);
        self.push(v, Op::Elu(a))
    }

    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        if self.values[a.0].is_empty() {
            return Err(Error::Shape("softmax of an empty vector".into()));
        }
        let v = kernels::softmax(&self.values[a.0]);
        Ok(self.push(v, Op::Softmax(a)))
    }

    pub fn layer_norm(&mut self, a: Var, eps: f64) -> Result<Var> {
        if self.values[a.0].is_empty() {
            return Err(Error::Shape("layer norm of an empty vector".into()));
        }
        let v = kernels::layer_norm(&self.values[a.0], eps);
        Ok(self.push(v, Op::LayerNorm { x: a, eps }))
    }

    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let v = parts
            .iter()
            .flat_map(|p| self.values[p.0].iter().copied())
            .collect();
        self.push(v, Op::Concat(parts.to_vec()))
    }

    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let src = &self.values[a.0];
        if start + len > src.len() {
            return Err(Error::Shape(format!(
                "slice {start}..{} of a length-{} vector",
                start + len,
                src.len()
            )));
        }
        let v = src[start..start + len].to_vec();
        Ok(self.push(v, Op::Slice { x: a, start }))
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_len(a, b, "dot")?;
        let v = self.zip_map(a, b, |x, y| x * y).iter().sum();
        Ok(self.push(vec![v], Op::Dot(a, b)))
    }

    /// Elementwise sum of equal-length vectors.
    pub fn sum(&mut self, items: &[Var]) -> Result<Var> {
        let first = *items
            .first()
            .ok_or_else(|| Error::Shape("sum of zero vectors".into()))?;
        let mut v = vec![0.0; self.values[first.0].len()];
        for &it in items {
            self.same_len(first, it, "sum")?;
            for (acc, x) in v.iter_mut().zip(&self.values[it.0]) {
                *acc += x;
            }
        }
        Ok(self.push(v, Op::Sum(items.to_vec())))
    }

    /// `Σ_j weights[j] · items[j]`.
    pub fn weighted_sum(&mut self, weights: Var, items: &[Var]) -> Result<Var> {
        if self.values[weights.0].len() != items.len() || items.is_empty() {
            return Err(Error::Shape(format!(
                "weighted_sum: {} weights for {} items",
                self.values[weights.0].len(),
                items.len()
            )));
        }
        let mut v = vec![0.0; self.values[items[0].0].len()];
        for (j, &it) in items.iter().enumerate() {
            self.same_len(items[0], it, "weighted_sum")?;
            let wj = self.values[weights.0][j];
            for (acc, x) in v.iter_mut().zip(&self.values[it.0]) {
                *acc += wj * x;
            }
        }
        Ok(self.push(v, Op::WeightedSum {
            weights,
            items: items.to_vec(),
        }))
    }

    /// Scalar mean of a vector's entries.
    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let src = &self.values[a.0];
        if src.is_empty() {
            return Err(Error::Shape("mean of an empty vector".into()));
        }
        let m = src.iter().sum::<f64>() / src.len() as f64;
        Ok(self.push(vec![m], Op::Mean(a)))
    }

    /// Scalar mean pinball loss of `pred` against fixed targets.
    pub fn pinball(&mut self, pred: Var, target: &[f64], q: f64) -> Result<Var> {
        if self.values[pred.0].len() != target.len() || target.is_empty() {
            return Err(Error::Shape(format!(
                "pinball: {} predictions for {} targets",
                self.values[pred.0].len(),
                target.len()
            )));
        }
        let v = kernels::pinball(target, &self.values[pred.0], q);
        Ok(self.push(vec![v], Op::Pinball {
            pred,
            target: target.to_vec(),
            q,
        }))
    }

    /// Per-qubit `⟨Z⟩` of `circuit` bound to the given feature and weight nodes.
    pub fn quantum(
        &mut self,
        circuit: Arc<ParameterizedCircuit>,
        features: Var,
        weights: Var,
    ) -> Result<Var> {
        let state = circuit.run(&self.values[features.0], &self.values[weights.0])?;
        let v = measure_all_z(&state);
        Ok(self.push(v, Op::Quantum {
            circuit,
            features,
            weights,
        }))
    }

    /// Accumulates `d loss / d node` into every node reachable from `loss`.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        let len = self.values[loss.0].len();
        if len != 1 {
            return Err(Error::NonScalarLoss(len));
        }
        self.grads[loss.0][0] += 1.0;
        for i in (0..=loss.0).rev() {
            if self.grads[i].iter().all(|g| *g == 0.0) {
                continue;
            }
            let g = std::mem::take(&mut self.grads[i]);
            self.propagate(i, &g)?;
            self.grads[i] = g;
        }
        Ok(())
    }

    fn acc(&mut self, v: Var, contrib: impl IntoIterator<Item = f64>) {
        for (dst, c) in self.grads[v.0].iter_mut().zip(contrib) {
            *dst += c;
        }
    }

    fn propagate(&mut self, i: usize, g: &[f64]) -> Result<()> {
        // Ops are cloned out so parent grads can be borrowed mutably.
        let op = self.ops[i].clone();
        match op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                self.acc(a, g.iter().copied());
                self.acc(b, g.iter().copied());
            }
            Op::Sub(a, b) => {
                self.acc(a, g.iter().copied());
                self.acc(b, g.iter().map(|x| -x));
            }
            Op::Mul(a, b) => {
                let da: Vec<f64> = g.iter().zip(&self.values[b.0]).map(|(g, y)| g * y).collect();
                let db: Vec<f64> = g.iter().zip(&self.values[a.0]).map(|(g, x)| g * x).collect();
                self.acc(a, da);
                self.acc(b, db);
            }
            Op::Scale(a, c) => self.acc(a, g.iter().map(|x| c * x)),
            Op::MatVec { w, x } => {
                let cols = self.values[x.0].len();
                let mut dw = vec![0.0; self.values[w.0].len()];
                let mut dx = vec![0.0; cols];
                let (wv, xv) = (&self.values[w.0], &self.values[x.0]);
                for (r, gr) in g.iter().enumerate() {
                    let row = &wv[r * cols..(r + 1) * cols];
                    for c in 0..cols {
                        dw[r * cols + c] = gr * xv[c];
                        dx[c] += gr * row[c];
                    }
                }
                self.acc(w, dw);
                self.acc(x, dx);
            }
            Op::Sigmoid(a) => {
                let y = &self.values[i];
                let d: Vec<f64> = g.iter().zip(y).map(|(g, s)| g * s * (1.0 - s)).collect();
                self.acc(a, d);
            }
            Op::Tanh(a) => {
                let y = &self.values[i];
                let d: Vec<f64> = g.iter().zip(y).map(|(g, t)| g * (1.0 - t * t)).collect();
                self.acc(a, d);
            }
            Op::Elu(a) => {
                let x = &self.values[a.0];
                let d: Vec<f64> = g
                    .iter()
                    .zip(x)
                    .map(|(g, x)| g * kernels::elu_derivative(*x))
                    .collect();
                self.acc(a, d);
            }
            Op::Softmax(a) => {
                let y = &self.values[i];
                let inner: f64 = g.iter().zip(y).map(|(g, y)| g * y).sum();
                let d: Vec<f64> = g.iter().zip(y).map(|(g, y)| y * (g - inner)).collect();
                self.acc(a, d);
            }
            Op::LayerNorm { x, eps } => {
                let y = &self.values[i];
                let n = y.len() as f64;
                let inv = kernels::layer_norm_inv_std(&self.values[x.0], eps);
                let mean_g = g.iter().sum::<f64>() / n;
                let mean_gy = g.iter().zip(y).map(|(g, y)| g * y).sum::<f64>() / n;
                let d: Vec<f64> = g
                    .iter()
                    .zip(y)
                    .map(|(g, y)| inv * (g - mean_g - y * mean_gy))
                    .collect();
                self.acc(x, d);
            }
            Op::Concat(parts) => {
                let mut offset = 0;
                for p in parts {
                    let l = self.values[p.0].len();
                    self.acc(p, g[offset..offset + l].iter().copied());
                    offset += l;
                }
            }
            Op::Slice { x, start } => {
                let dst = &mut self.grads[x.0][start..start + g.len()];
                for (d, gi) in dst.iter_mut().zip(g) {
                    *d += gi;
                }
            }
            Op::Dot(a, b) => {
                let s = g[0];
                let da: Vec<f64> = self.values[b.0].iter().map(|y| s * y).collect();
                let db: Vec<f64> = self.values[a.0].iter().map(|x| s * x).collect();
                self.acc(a, da);
                self.acc(b, db);
            }
            Op::Sum(items) => {
                for it in items {
                    self.acc(it, g.iter().copied());
                }
            }
            Op::WeightedSum { weights, items } => {
                let dw: Vec<f64> = items
                    .iter()
                    .map(|it| g.iter().zip(&self.values[it.0]).map(|(g, x)| g * x).sum())
                    .collect();
                for (j, it) in items.iter().enumerate() {
                    let wj = self.values[weights.0][j];
                    self.acc(*it, g.iter().map(|x| wj * x));
                }
                self.acc(weights, dw);
            }
            Op::Mean(a) => {
                let n = self.values[a.0].len() as f64;
                let d = vec![g[0] / n; self.values[a.0].len()];
                self.acc(a, d);
            }
            Op::Pinball { pred, target, q } => {
                let n = target.len() as f64;
                // Subgradient at a kink: the q-branch (error ≥ 0) is taken.
                let d: Vec<f64> = self.values[pred.0]
                    .iter()
                    .zip(&target)
                    .map(|(p, t)| g[0] / n * if t - p >= 0.0 { -q } else { 1.0 - q })
                    .collect();
                self.acc(pred, d);
            }
            Op::Quantum {
                circuit,
                features,
                weights,
            } => {
                let jac =
                    circuit_jacobian(&circuit, &self.values[features.0], &self.values[weights.0])?;
                let (nf, nw) = (circuit.num_feature_slots(), circuit.num_weight_slots());
                let mut df = vec![0.0; nf];
                let mut dw = vec![0.0; nw];
                for (q, gq) in g.iter().enumerate() {
                    for s in 0..nf {
                        df[s] += gq * jac.features[q * nf + s];
                    }
                    for s in 0..nw {
                        dw[s] += gq * jac.weights[q * nw + s];
                    }
                }
                self.acc(features, df);
                self.acc(weights, dw);
            }
        }
        Ok(())
    }
}
