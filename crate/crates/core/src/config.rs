//! Architecture configuration shared by the classical and quantum models.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grad::kernels::LAYER_NORM_EPS;
use crate::quantum::Rotation;

/// Which forecaster to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Tft,
    Qtft,
    QtftQlstm,
}

impl ModelKind {
    /// Row order of the comparison table.
    pub const ALL: [ModelKind; 3] = [ModelKind::Tft, ModelKind::Qtft, ModelKind::QtftQlstm];

    pub fn is_quantum(self) -> bool {
        !matches!(self, ModelKind::Tft)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Tft => "tft",
            ModelKind::Qtft => "qtft",
            ModelKind::QtftQlstm => "qtft-qlstm",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tft" => Ok(ModelKind::Tft),
            "qtft" => Ok(ModelKind::Qtft),
            "qtft-qlstm" => Ok(ModelKind::QtftQlstm),
            other => Err(Error::Config(format!("unknown model kind {other:?}"))),
        }
    }
}

/// Data-encoding circuit in front of every variational block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    Angle(Rotation),
    ZzFeatureMap { reps: usize },
}

/// Trainable circuit template.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ansatz {
    BasicEntangler(Rotation),
    NLocal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantumConfig {
    pub encoding: Encoding,
    pub ansatz: Ansatz,
    pub layers: usize,
}

impl Default for QuantumConfig {
    /// Angle embedding with RX, two basic-entangler layers with RX.
    fn default() -> Self {
        Self {
            encoding: Encoding::Angle(Rotation::X),
            ansatz: Ansatz::BasicEntangler(Rotation::X),
            layers: 2,
        }
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Encoding::Angle(r) => write!(f, "angle-{}", rotation_name(*r)),
            Encoding::ZzFeatureMap { reps } => write!(f, "zz-{reps}"),
        }
    }
}

impl FromStr for Encoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown encoding {s:?} (angle[-x|y|z] or zz[-reps])"));
        match s.split_once('-') {
            None if s == "angle" => Ok(Encoding::Angle(Rotation::X)),
            None if s == "zz" => Ok(Encoding::ZzFeatureMap { reps: 1 }),
            Some(("angle", r)) => Ok(Encoding::Angle(parse_rotation(r).ok_or_else(bad)?)),
            Some(("zz", n)) => match n.parse() {
                Ok(reps) if reps >= 1 => Ok(Encoding::ZzFeatureMap { reps }),
                _ => Err(bad()),
            },
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Ansatz {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ansatz::BasicEntangler(r) => write!(f, "bel-{}", rotation_name(*r)),
            Ansatz::NLocal => f.write_str("nlocal"),
        }
    }
}

impl FromStr for Ansatz {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown ansatz {s:?} (bel[-x|y|z] or nlocal)"));
        match s {
            "nlocal" => Ok(Ansatz::NLocal),
            "bel" => Ok(Ansatz::BasicEntangler(Rotation::X)),
            _ => match s.split_once('-') {
                Some(("bel", r)) => Ok(Ansatz::BasicEntangler(parse_rotation(r).ok_or_else(bad)?)),
                _ => Err(bad()),
            },
        }
    }
}

fn rotation_name(r: Rotation) -> &'static str {
    match r {
        Rotation::X => "x",
        Rotation::Y => "y",
        Rotation::Z => "z",
    }
}

fn parse_rotation(s: &str) -> Option<Rotation> {
    match s {
        "x" => Some(Rotation::X),
        "y" => Some(Rotation::Y),
        "z" => Some(Rotation::Z),
        _ => None,
    }
}

/// Shapes of one forecaster.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub d_model: usize,
    pub num_static: usize,
    pub num_past: usize,
    pub num_future: usize,
    pub past_steps: usize,
    pub forecast_steps: usize,
    pub heads: usize,
    pub quantiles: Vec<f64>,
    /// Restrict self-attention to earlier-or-equal positions.
    pub causal_mask: bool,
    /// One GRN shared by every variable of a selection network.
    pub share_variable_grns: bool,
    pub layer_norm_eps: f64,
    pub quantum: QuantumConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            d_model: 2,
            num_static: 1,
            num_past: 4,
            num_future: 1,
            past_steps: 2,
            forecast_steps: 2,
            heads: 1,
            quantiles: vec![0.5],
            causal_mask: false,
            share_variable_grns: false,
            layer_norm_eps: LAYER_NORM_EPS,
            quantum: QuantumConfig::default(),
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("d_model", self.d_model),
            ("num_static", self.num_static),
            ("num_past", self.num_past),
            ("num_future", self.num_future),
            ("past_steps", self.past_steps),
            ("forecast_steps", self.forecast_steps),
            ("heads", self.heads),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if self.quantiles.is_empty() {
            return Err(Error::Config("at least one quantile is required".into()));
        }
        if let Some(q) = self.quantiles.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
            return Err(Error::Config(format!("quantile {q} is outside (0, 1)")));
        }
        if self.quantum.layers == 0 && matches!(self.quantum.ansatz, Ansatz::BasicEntangler(_)) {
            return Err(Error::Config("the basic entangler needs at least one layer".into()));
        }
        Ok(())
    }

    /// Attention width of the classical model: `⌈d_model / heads⌉`, at least 1.
    pub fn d_attn(&self) -> usize {
        self.d_model.div_ceil(self.heads).max(1)
    }

    /// Number of positions attended over: past plus future steps.
    pub fn positions(&self) -> usize {
        self.past_steps + self.forecast_steps
    }
}
