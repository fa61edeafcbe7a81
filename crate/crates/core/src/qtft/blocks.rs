use std::sync::Arc;

use rand::Rng;

use crate::config::{Ansatz, Encoding, QuantumConfig};
use crate::error::{Error, Result};
use crate::grad::{Init, ParamId, ParamStore, Tape, Var};
use crate::quantum::{angle_embedding, basic_entangler_layers, n_local, zz_feature_map, ParameterizedCircuit};
use crate::tft::{attention, lstm_update, mean_heads, Dense};

pub fn encoding_circuit(width: usize, encoding: Encoding) -> Result<ParameterizedCircuit> {
    match encoding {
        Encoding::Angle(r) => angle_embedding(width, r),
        Encoding::ZzFeatureMap { reps } => zz_feature_map(width, reps),
    }
}

pub fn ansatz_circuit(width: usize, ansatz: Ansatz, layers: usize) -> Result<ParameterizedCircuit> {
    match ansatz {
        Ansatz::BasicEntangler(r) => basic_entangler_layers(width, layers, r),
        Ansatz::NLocal => n_local(width, layers),
    }
}

fn check_width(t: &Tape, x: Var, width: usize, what: &str) -> Result<()> {
    let got = t.value(x).len();
    if got != width {
        return Err(Error::Shape(format!("{what} is {width} qubits wide, input has length {got}")));
    }
    Ok(())
}

/// Encoding followed by an ansatz, measured in Z on every qubit.
#[derive(Debug, Clone)]
pub struct VqcBlock {
    pub circuit: Arc<ParameterizedCircuit>,
    pub weights: ParamId,
    pub width: usize,
}

impl VqcBlock {
    pub fn new(
        store: &mut ParamStore,
        rng: &mut impl Rng,
        name: &str,
        width: usize,
        qc: &QuantumConfig,
    ) -> Result<Self> {
        let circuit = encoding_circuit(width, qc.encoding)?.then(&ansatz_circuit(width, qc.ansatz, qc.layers)?)?;
        let weights = store.add(format!("{name}.theta"), &[circuit.num_weight_slots()], Init::Angle, rng);
        Ok(Self {
            circuit: Arc::new(circuit),
            weights,
            width,
        })
    }

    pub fn forward(&self, t: &mut Tape, p: &[Var], x: Var) -> Result<Var> {
        check_width(t, x, self.width, "VQC block")?;
        t.quantum(self.circuit.clone(), x, p[self.weights.index()])
    }
}

/// Value-level `measure_all_z(run_circuit(encoding ∘ ansatz, x, weights))`.
pub fn vqc_apply(x: &[f64], circuit: &ParameterizedCircuit, weights: &[f64]) -> Result<Vec<f64>> {
    Ok(crate::quantum::measure_all_z(&circuit.run(x, weights)?))
}

/// Quantum GLU: two ansatz branches on the same encoded input, `σ(γ′) ⊙ γ″`.
#[derive(Debug, Clone)]
pub struct QGlu {
    pub gate: ParamId,
    pub lin: ParamId,
    /// Branch ansatz without encoding (for already-prepared inputs).
    pub ansatz: ParameterizedCircuit,
    /// Encoding then branch ansatz (for classical inputs).
    pub encoded: Arc<ParameterizedCircuit>,
    pub width: usize,
}

impl QGlu {
    pub fn new(
        store: &mut ParamStore,
        rng: &mut impl Rng,
        name: &str,
        width: usize,
        qc: &QuantumConfig,
    ) -> Result<Self> {
        let ansatz = ansatz_circuit(width, qc.ansatz, qc.layers)?;
        let encoded = encoding_circuit(width, qc.encoding)?.then(&ansatz)?;
        let n = ansatz.num_weight_slots();
        Ok(Self {
            gate: store.add(format!("{name}.gate.theta"), &[n], Init::Angle, rng),
            lin: store.add(format!("{name}.lin.theta"), &[n], Init::Angle, rng),
            ansatz,
            encoded: Arc::new(encoded),
            width,
        })
    }

    pub fn forward(&self, t: &mut Tape, p: &[Var], x: Var) -> Result<Var> {
        check_width(t, x, self.width, "QGLU")?;
        let g = t.quantum(self.encoded.clone(), x, p[self.gate.index()])?;
        let l = t.quantum(self.encoded.clone(), x, p[self.lin.index()])?;
        let g = t.sigmoid(g);
        t.mul(g, l)
    }

    /// QGLU on a state prepared by `prefix` (features `x`, weights `prefix_weights`).
    /// Each branch re-runs the prefix, then its own ansatz.
    pub(crate) fn forward_prepared(
        &self,
        t: &mut Tape,
        p: &[Var],
        circuits: &PreparedBranches,
        x: Var,
        prefix_weights: Var,
    ) -> Result<Var> {
        let gw = t.concat(&[prefix_weights, p[self.gate.index()]]);
        let lw = t.concat(&[prefix_weights, p[self.lin.index()]]);
        let g = t.quantum(circuits.gate.clone(), x, gw)?;
        let l = t.quantum(circuits.lin.clone(), x, lw)?;
        let g = t.sigmoid(g);
        t.mul(g, l)
    }
}

/// Full circuits for the two QGLU branches behind a shared prefix.
#[derive(Debug, Clone)]
pub(crate) struct PreparedBranches {
    gate: Arc<ParameterizedCircuit>,
    lin: Arc<ParameterizedCircuit>,
}

/// Quantum gated residual network.
///
/// `η1 = ELU(a″ + c″)` from two measured VQC blocks, then `η1` is re-encoded,
/// evolved by the `η2` ansatz without measurement, and fed to a QGLU.
#[derive(Debug, Clone)]
pub struct QGrn {
    pub vqc_a: VqcBlock,
    /// Optional classical projection of the context to the block width, then the context VQC.
    pub context: Option<(Option<Dense>, VqcBlock)>,
    pub eta2: ParamId,
    pub qglu: QGlu,
    branches: PreparedBranches,
    pub width: usize,
    pub eps: f64,
}

impl QGrn {
    pub fn new(
        store: &mut ParamStore,
        rng: &mut impl Rng,
        name: &str,
        width: usize,
        context_dim: Option<usize>,
        qc: &QuantumConfig,
        eps: f64,
    ) -> Result<Self> {
        let vqc_a = VqcBlock::new(store, rng, &format!("{name}.a"), width, qc)?;
        let context = match context_dim {
            None => None,
            Some(c) => {
                let proj = (c != width).then(|| Dense::new(store, rng, &format!("{name}.cproj"), c, width, true));
                Some((proj, VqcBlock::new(store, rng, &format!("{name}.c"), width, qc)?))
            }
        };
        let eta2_ansatz = ansatz_circuit(width, qc.ansatz, qc.layers)?;
        let eta2 = store.add(format!("{name}.eta2.theta"), &[eta2_ansatz.num_weight_slots()], Init::Angle, rng);
        let qglu = QGlu::new(store, rng, &format!("{name}.glu"), width, qc)?;
        let prefix = encoding_circuit(width, qc.encoding)?.then(&eta2_ansatz)?;
        let branches = PreparedBranches {
            gate: Arc::new(prefix.then(&qglu.ansatz)?),
            lin: Arc::new(prefix.then(&qglu.ansatz)?),
        };
        Ok(Self {
            vqc_a,
            context,
            eta2,
            qglu,
            branches,
            width,
            eps,
        })
    }

    /// Residual sum `a + QGLU(|η2⟩)` before normalization.
    pub fn pre_norm(&self, t: &mut Tape, p: &[Var], a: Var, c: Option<Var>) -> Result<Var> {
        let mut eta = self.vqc_a.forward(t, p, a)?;
        if let Some(c) = c {
            let (proj, vqc_c) = self.context.as_ref().ok_or_else(|| {
                Error::Shape("context passed to a QGRN built without a context input".into())
            })?;
            let c = match proj {
                Some(d) => d.forward(t, p, c)?,
                None => c,
            };
            let c2 = vqc_c.forward(t, p, c)?;
            eta = t.add(eta, c2)?;
        }
        let eta1 = t.elu(eta);
        let gated = self.qglu.forward_prepared(t, p, &self.branches, eta1, p[self.eta2.index()])?;
        t.add(a, gated)
    }

    pub fn forward(&self, t: &mut Tape, p: &[Var], a: Var, c: Option<Var>) -> Result<Var> {
        let r = self.pre_norm(t, p, a, c)?;
        t.layer_norm(r, self.eps)
    }
}

/// Quantum interpretable multi-head attention: VQC query/key circuits per
/// head, one shared value circuit, heads averaged, no output projection.
#[derive(Debug, Clone)]
pub struct QAttention {
    pub queries: Vec<VqcBlock>,
    pub keys: Vec<VqcBlock>,
    pub value: VqcBlock,
    pub causal: bool,
}

impl QAttention {
    pub fn new(
        store: &mut ParamStore,
        rng: &mut impl Rng,
        name: &str,
        width: usize,
        heads: usize,
        causal: bool,
        qc: &QuantumConfig,
    ) -> Result<Self> {
        let queries = (0..heads)
            .map(|h| VqcBlock::new(store, rng, &format!("{name}.q{h}"), width, qc))
            .collect::<Result<_>>()?;
        let keys = (0..heads)
            .map(|h| VqcBlock::new(store, rng, &format!("{name}.k{h}"), width, qc))
            .collect::<Result<_>>()?;
        Ok(Self {
            queries,
            keys,
            value: VqcBlock::new(store, rng, &format!("{name}.v"), width, qc)?,
            causal,
        })
    }

    pub fn forward(&self, t: &mut Tape, p: &[Var], rows: &[Var]) -> Result<Vec<Var>> {
        let width = self.value.width;
        let v: Vec<Var> = rows.iter().map(|&s| self.value.forward(t, p, s)).collect::<Result<_>>()?;
        let mut per_head = Vec::with_capacity(self.queries.len());
        for (wq, wk) in self.queries.iter().zip(&self.keys) {
            let q: Vec<Var> = rows.iter().map(|&s| wq.forward(t, p, s)).collect::<Result<_>>()?;
            let k: Vec<Var> = rows.iter().map(|&s| wk.forward(t, p, s)).collect::<Result<_>>()?;
            per_head.push(attention(t, &q, &k, &v, width as f64, self.causal)?);
        }
        mean_heads(t, per_head)
    }
}

/// LSTM cell whose four gate maps are `[x; h]` → classical projection → VQC.
#[derive(Debug, Clone)]
pub struct QLstmCell {
    pub proj: Dense,
    pub gates: [VqcBlock; 4],
    pub hidden: usize,
}

impl QLstmCell {
    pub fn new(
        store: &mut ParamStore,
        rng: &mut impl Rng,
        name: &str,
        input_dim: usize,
        hidden: usize,
        qc: &QuantumConfig,
    ) -> Result<Self> {
        let proj = Dense::new(store, rng, &format!("{name}.proj"), input_dim + hidden, hidden, true);
        let mut gate = |g: &str| VqcBlock::new(store, rng, &format!("{name}.{g}"), hidden, qc);
        let gates = [gate("i")?, gate("f")?, gate("g")?, gate("o")?];
        Ok(Self { proj, gates, hidden })
    }

    pub fn step(&self, t: &mut Tape, p: &[Var], x: Var, h: Var, c: Var) -> Result<(Var, Var)> {
        let xh = t.concat(&[x, h]);
        let z = self.proj.forward(t, p, xh)?;
        let zi = self.gates[0].forward(t, p, z)?;
        let zf = self.gates[1].forward(t, p, z)?;
        let zg = self.gates[2].forward(t, p, z)?;
        let zo = self.gates[3].forward(t, p, z)?;
        let i = t.sigmoid(zi);
        let f = t.sigmoid(zf);
        let g = t.tanh(zg);
        let o = t.sigmoid(zo);
        lstm_update(t, i, f, g, o, c)
    }
}

/// Quantum variable selection: QGRN per variable, and a classical
/// flattening map (`m·d → m`) in front of an `m`-qubit weight QGRN.
#[derive(Debug, Clone)]
pub struct QVariableSelection {
    pub per_variable: Vec<QGrn>,
    pub flatten: Option<Dense>,
    pub weights: Option<QGrn>,
    pub num_vars: usize,
}

impl QVariableSelection {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        store: &mut ParamStore,
        rng: &mut impl Rng,
        name: &str,
        num_vars: usize,
        d_model: usize,
        context_dim: Option<usize>,
        shared: bool,
        qc: &QuantumConfig,
        eps: f64,
    ) -> Result<Self> {
        let per_variable = if shared {
            vec![QGrn::new(store, rng, &format!("{name}.var"), d_model, None, qc, eps)?]
        } else {
            (0..num_vars)
                .map(|j| QGrn::new(store, rng, &format!("{name}.var{j}"), d_model, None, qc, eps))
                .collect::<Result<_>>()?
        };
        let (flatten, weights) = if num_vars > 1 {
            (
                Some(Dense::new(store, rng, &format!("{name}.flat"), num_vars * d_model, num_vars, true)),
                Some(QGrn::new(store, rng, &format!("{name}.weights"), num_vars, context_dim, qc, eps)?),
            )
        } else {
            (None, None)
        };
        Ok(Self {
            per_variable,
            flatten,
            weights,
            num_vars,
        })
    }

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
