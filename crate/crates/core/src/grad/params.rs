use std::fmt::Write as _;

use rand::Rng;

use super::tape::{Tape, Var};
use crate::error::{Error, Result};

/// Index of a tensor inside a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    /// Uniform on `[−1/√fan_in, 1/√fan_in]`.
    FanIn(usize),
    /// Uniform on `[−π, π)`, for circuit angles.
    Angle,
    Zeros,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub shape: Vec<usize>,
    pub value: Vec<f64>,
    pub grad: Vec<f64>,
}

/// Named trainable tensors of one model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    params: Vec<Param>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(
        &mut self,
        name: impl Into<String>,
        shape: &[usize],
        init: Init,
        rng: &mut impl Rng,
    ) -> ParamId {
        let len: usize = shape.iter().product();
        let value = match init {
            Init::FanIn(fan_in) => {
                let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
                (0..len).map(|_| rng.gen_range(-bound..=bound)).collect()
            }
            Init::Angle => {
                let pi = std::f64::consts::PI;
                (0..len).map(|_| rng.gen_range(-pi..pi)).collect()
            }
            Init::Zeros => vec![0.0; len],
        };
        self.params.push(Param {
            name: name.into(),
            shape: shape.to_vec(),
            grad: vec![0.0; len],
            value,
        });
        ParamId(self.params.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Param {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Param {
        &mut self.params[id.0]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param> {
        self.params.iter()
    }

    /// Total number of trainable scalars.
    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    /// Creates one tape leaf per tensor, indexed by [`ParamId`].
    pub fn bind(&self, tape: &mut Tape) -> Vec<Var> {
        self.params.iter().map(|p| tape.leaf(p.value.clone())).collect()
    }

    /// Adds the leaf gradients of a finished backward pass.
    pub fn accumulate(&mut self, tape: &Tape, leaves: &[Var]) {
        for (p, &v) in self.params.iter_mut().zip(leaves) {
            for (g, d) in p.grad.iter_mut().zip(tape.grad(v)) {
                *g += d;
            }
        }
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    pub fn flat_values(&self) -> Vec<f64> {
        self.params.iter().flat_map(|p| p.value.iter().copied()).collect()
    }

    pub fn flat_grads(&self) -> Vec<f64> {
        self.params.iter().flat_map(|p| p.grad.iter().copied()).collect()
    }

    pub fn set_flat_values(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.num_scalars() {
            return Err(Error::Shape(format!(
                "expected {} parameter values, got {}",
                self.num_scalars(),
                values.len()
            )));
        }
        let mut it = values.iter();
        for p in &mut self.params {
            for v in &mut p.value {
                *v = *it.next().expect("length checked");
            }
        }
        Ok(())
    }

    /// Overwrites every gradient from one flat vector in parameter order.
    pub fn set_flat_grads(&mut self, grads: &[f64]) -> Result<()> {
        if grads.len() != self.num_scalars() {
            return Err(Error::Shape(format!(
                "expected {} gradient entries, got {}",
                self.num_scalars(),
                grads.len()
            )));
        }
        let mut it = grads.iter();
        for p in &mut self.params {
            for g in &mut p.grad {
                *g = *it.next().expect("length checked");
            }
        }
        Ok(())
    }

    /// Name of the tensor holding flat scalar `index`, with the offset inside it.
    pub fn locate(&self, mut index: usize) -> Option<(&str, usize)> {
        for p in &self.params {
            if index < p.value.len() {
                return Some((&p.name, index));
            }
            index -= p.value.len();
        }
        None
    }

    /// Flat text form: one `name shape values…` line per tensor.
    pub fn to_snapshot(&self) -> String {
        let mut out = String::from("# qtft parameter snapshot\n");
        for p in &self.params {
            let shape: Vec<String> = p.shape.iter().map(|d| d.to_string()).collect();
            let _ = write!(out, "{} {}", p.name, shape.join("x"));
            for v in &p.value {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
        out
    }

    /// Restores values from [`to_snapshot`] output. Names and shapes must
    /// match this store exactly, in order.
    ///
    /// [`to_snapshot`]: ParamStore::to_snapshot
    pub fn load_snapshot(&mut self, text: &str) -> Result<()> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
        for p in &mut self.params {
            let (lineno, line) = lines.next().ok_or_else(|| {
                Error::Config(format!("snapshot ends before parameter {}", p.name))
            })?;
            let mut fields = line.split_whitespace();
            let name = fields.next().unwrap_or_default();
            let shape = fields.next().unwrap_or_default();
            let want: Vec<String> = p.shape.iter().map(|d| d.to_string()).collect();
            if name != p.name || shape != want.join("x") {
                return Err(Error::Config(format!(
                    "snapshot line {}: expected {} {}, found {name} {shape}",
                    lineno + 1,
                    p.name,
                    want.join("x")
                )));
            }
            let values: Vec<f64> = fields
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|e| Error::Config(format!("snapshot line {}: {e}", lineno + 1)))?;
            if values.len() != p.value.len() {
                return Err(Error::Config(format!(
                    "snapshot line {}: {} values for {}",
                    lineno + 1,
                    values.len(),
                    p.name
                )));
            }
            p.value = values;
        }
        if let Some((lineno, _)) = lines.next() {
            return Err(Error::Config(format!(
                "snapshot line {}: unexpected extra parameter",
                lineno + 1
            )));
        }
        Ok(())
    }
}

/// Plain gradient descent: `value ← value − lr·grad`, then grads are cleared.
pub fn sgd_step(params: &mut ParamStore, lr: f64) {
    for p in &mut params.params {
        for (v, g) in p.value.iter_mut().zip(&p.grad) {
            *v -= lr * g;
        }
    }
    params.zero_grad();
}
