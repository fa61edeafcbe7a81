//! Finite-difference checks of the reverse-mode gradients, block by block.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Ansatz, Encoding, ModelConfig, ModelKind, QuantumConfig};
use crate::error::Result;
use crate::forecasting::WindowedSample;
use crate::grad::{Init, ParamStore, Tape, Var};
use crate::model::FusionModel;
use crate::qtft::{QAttention, QGlu, QGrn, QLstmCell, VqcBlock};
use crate::tft::{lstm_seq, Glu, Grn, InterpretableAttention, LstmCell, VariableSelection};

pub const ABS_TOL: f64 = 1e-5;
pub const REL_TOL: f64 = 1e-4;
/// Central-difference step.
pub const STEP: f64 = 1e-5;

/// `|a − n| ≤ max(ABS_TOL, REL_TOL·|n|)`.
pub fn within_tolerance(analytic: f64, numeric: f64) -> bool {
    (analytic - numeric).abs() <= ABS_TOL.max(REL_TOL * numeric.abs())
}

/// Outcome of one block's check.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCheck {
    pub name: String,
    pub coordinates: usize,
    pub max_abs_deviation: f64,
    /// Coordinates outside tolerance.
    pub failures: usize,
    pub seconds: f64,
}

impl BlockCheck {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Compares `analytic` with central differences of `f` at `x0`.
///
/// A nonzero `fault` shifts `x0[0]` by that amount inside the numeric oracle
/// only, which must show up as a deviation.
pub fn compare_gradients(
    name: &str,
    x0: &[f64],
    analytic: &[f64],
    f: impl Fn(&[f64]) -> Result<f64>,
    fault: f64,
) -> Result<BlockCheck> {
    let start = Instant::now();
    let mut x = x0.to_vec();
    if let Some(first) = x.first_mut() {
        *first += fault;
    }
    let mut max_dev: f64 = 0.0;
    let mut failures = 0;
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + STEP;
        let up = f(&x)?;
        x[i] = orig - STEP;
        let down = f(&x)?;
        x[i] = orig;
        let numeric = (up - down) / (2.0 * STEP);
        max_dev = max_dev.max((analytic[i] - numeric).abs());
        if !within_tolerance(analytic[i], numeric) {
            failures += 1;
        }
    }
    Ok(BlockCheck {
        name: name.to_string(),
        coordinates: x.len(),
        max_abs_deviation: max_dev,
        failures,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Checks a scalar function of every value in `store`.
pub fn check_store(
    name: &str,
    store: &ParamStore,
    f: impl Fn(&mut Tape, &[Var]) -> Result<Var>,
    fault: f64,
) -> Result<BlockCheck> {
    let mut t = Tape::new();
    let p = store.bind(&mut t);
    let loss = f(&mut t, &p)?;
    t.backward(loss)?;
    let analytic: Vec<f64> = p.iter().flat_map(|&v| t.grad(v).iter().copied()).collect();
    let eval = |x: &[f64]| -> Result<f64> {
        let mut s = store.clone();
        s.set_flat_values(x)?;
        let mut t = Tape::new();
        let p = s.bind(&mut t);
        let loss = f(&mut t, &p)?;
        Ok(t.value(loss)[0])
    };
    compare_gradients(name, &store.flat_values(), &analytic, eval, fault)
}

/// Checks the full pinball loss of one window against every model parameter.
pub fn check_model(name: &str, model: &FusionModel, sample: &WindowedSample, fault: f64) -> Result<BlockCheck> {
    let (_, analytic) = model.loss_and_grad(sample)?;
    let eval = |x: &[f64]| -> Result<f64> {
        let mut m = model.clone();
        m.params_mut().set_flat_values(x)?;
        m.loss(sample)
    };
    compare_gradients(name, &model.params().flat_values(), &analytic, eval, fault)
}

/// Reduces a list of outputs to a scalar with fixed random weights, so that
/// normalizing layers do not produce identically zero gradients.
fn project(t: &mut Tape, rows: &[Var], seed: u64) -> Result<Var> {
    let all = t.concat(rows);
    let n = t.value(all).len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = t.leaf((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
    t.dot(all, r)
}

/// A small window matching [`ModelConfig::default`] shapes.
pub fn desk_sample(config: &ModelConfig, seed: u64) -> WindowedSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut row = |m: usize| (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
    WindowedSample {
        past: (0..config.past_steps).map(|_| row(config.num_past)).collect(),
        future_known: (0..config.forecast_steps).map(|_| row(config.num_future)).collect(),
        static_vars: row(config.num_static),
        targets: row(config.forecast_steps).iter().map(|v| 3.0 * v).collect(),
        anchor: config.past_steps - 1,
    }
}

/// Every block check, classical then quantum, then both full models.
pub fn run_suite(fault: f64) -> Result<Vec<BlockCheck>> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let d = 2;
    let eps = crate::grad::kernels::LAYER_NORM_EPS;
    let qc = QuantumConfig::default();
    let zz = QuantumConfig {
        encoding: Encoding::ZzFeatureMap { reps: 1 },
        ansatz: Ansatz::NLocal,
        layers: 2,
    };

    {
        let mut s = ParamStore::new();
        let x = s.add("x", &[d], Init::FanIn(1), &mut rng);
        let glu = Glu::new(&mut s, &mut rng, "glu", d, d);
        out.push(check_store("glu", &s, |t, p| {
            let y = glu.forward(t, p, p[x.index()])?;
            project(t, &[y], 1)
        }, fault)?);
    }
    {
        let mut s = ParamStore::new();
        let a = s.add("a", &[d], Init::FanIn(1), &mut rng);
        let c = s.add("c", &[d], Init::FanIn(1), &mut rng);
        let grn = Grn::new(&mut s, &mut rng, "grn", d, Some(d), eps);
        out.push(check_store("grn", &s, |t, p| {
            let y = grn.forward(t, p, p[a.index()], Some(p[c.index()]))?;
            project(t, &[y], 2)
        }, fault)?);
    }
    {
        let mut s = ParamStore::new();
        let e: Vec<_> = (0..3).map(|j| s.add(format!("e{j}"), &[d], Init::FanIn(1), &mut rng)).collect();
        let c = s.add("c", &[d], Init::FanIn(1), &mut rng);
        let vs = VariableSelection::new(&mut s, &mut rng, "vs", 3, d, Some(d), false, eps);
        out.push(check_store("variable_selection", &s, |t, p| {
            let emb: Vec<Var> = e.iter().map(|id| p[id.index()]).collect();
            let (y, w) = vs.forward(t, p, &emb, Some(p[c.index()]))?;
            project(t, &[y, w], 3)
        }, fault)?);
    }
    {
        let mut s = ParamStore::new();
        let rows: Vec<_> = (0..3).map(|j| s.add(format!("s{j}"), &[d], Init::FanIn(1), &mut rng)).collect();
        let att = InterpretableAttention::new(&mut s, &mut rng, "att", d, 2, d, false);
        out.push(check_store("attention", &s, |t, p| {
            let r: Vec<Var> = rows.iter().map(|id| p[id.index()]).collect();
            let y = att.forward(t, p, &r)?;
            project(t, &y, 4)
        }, fault)?);
    }
    {
        let mut s = ParamStore::new();
        let xs: Vec<_> = (0..2).map(|j| s.add(format!("x{j}"), &[d], Init::FanIn(1), &mut rng)).collect();
        let h0 = s.add("h0", &[d], Init::FanIn(1), &mut rng);
        let c0 = s.add("c0", &[d], Init::FanIn(1), &mut rng);
        let cell = LstmCell::new(&mut s, &mut rng, "lstm", d, d);
        out.push(check_store("lstm", &s, |t, p| {
            let inputs: Vec<Var> = xs.iter().map(|id| p[id.index()]).collect();
            let (hs, _, c) = lstm_seq(t, &inputs, p[h0.index()], p[c0.index()], |t, x, h, c| {
                cell.step(t, p, x, h, c)
            })?;
            let mut all = hs;
            all.push(c);
            project(t, &all, 5)
        }, fault)?);
    }
    for (label, cfg) in [("angle+bel", qc), ("zz+nlocal", zz)] {
        let mut s = ParamStore::new();
        let x = s.add("x", &[3], Init::Angle, &mut rng);
        let vqc = VqcBlock::new(&mut s, &mut rng, "vqc", 3, &cfg)?;
        out.push(check_store(&format!("vqc[{label}]"), &s, |t, p| {
            let y = vqc.forward(t, p, p[x.index()])?;
            project(t, &[y], 6)
        }, fault)?);
    }
    {
        let mut s = ParamStore::new();
        let x = s.add("x", &[d], Init::Angle, &mut rng);
        let glu = QGlu::new(&mut s, &mut rng, "qglu", d, &qc)?;
        out.push(check_store("qglu", &s, |t, p| {
            let y = glu.forward(t, p, p[x.index()])?;
            project(t, &[y], 7)
        }, fault)?);
    }
    for (label, cfg) in [("angle+bel", qc), ("zz+nlocal", zz)] {
        let mut s = ParamStore::new();
        let a = s.add("a", &[d], Init::FanIn(1), &mut rng);
        let c = s.add("c", &[d], Init::FanIn(1), &mut rng);
        let grn = QGrn::new(&mut s, &mut rng, "qgrn", d, Some(d), &cfg, eps)?;
        out.push(check_store(&format!("qgrn[{label}]"), &s, |t, p| {
            let y = grn.forward(t, p, p[a.index()], Some(p[c.index()]))?;
            project(t, &[y], 8)
        }, fault)?);
    }
    {
        let mut s = ParamStore::new();
        let rows: Vec<_> = (0..2).map(|j| s.add(format!("s{j}"), &[d], Init::FanIn(1), &mut rng)).collect();
        let att = QAttention::new(&mut s, &mut rng, "qatt", d, 1, false, &qc)?;
        out.push(check_store("q_attention", &s, |t, p| {
            let r: Vec<Var> = rows.iter().map(|id| p[id.index()]).collect();
            let y = att.forward(t, p, &r)?;
            project(t, &y, 9)
        }, fault)?);
    }
    {
        let mut s = ParamStore::new();
        let xs: Vec<_> = (0..2).map(|j| s.add(format!("x{j}"), &[d], Init::FanIn(1), &mut rng)).collect();
        let h0 = s.add("h0", &[d], Init::FanIn(1), &mut rng);
        let c0 = s.add("c0", &[d], Init::FanIn(1), &mut rng);
        let cell = QLstmCell::new(&mut s, &mut rng, "qlstm", d, d, &qc)?;
        out.push(check_store("qlstm", &s, |t, p| {
            let inputs: Vec<Var> = xs.iter().map(|id| p[id.index()]).collect();
            let (hs, _, c) = lstm_seq(t, &inputs, p[h0.index()], p[c0.index()], |t, x, h, c| {
                cell.step(t, p, x, h, c)
            })?;
            let mut all = hs;
            all.push(c);
            project(t, &all, 10)
        }, fault)?);
    }

    let desk = ModelConfig::default();
    let wider = ModelConfig {
        d_model: 3,
        heads: 2,
        ..ModelConfig::default()
    };
    for (label, config) in [("", desk), (",d3", wider)] {
        let sample = desk_sample(&config, 99);
        for kind in ModelKind::ALL {
            let model = FusionModel::new(kind, config.clone(), 5)?;
            out.push(check_model(&format!("model[{kind}{label}]"), &model, &sample, fault)?);
        }
    }
    Ok(out)
}
