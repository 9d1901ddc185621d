use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::eigensystems::bernoulli4;
use crate::error::{Error, Result};

/// The simulation examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExampleId {
    Ex1,
    Ex2,
    ExA1,
    ExA2,
    Additive10,
}

impl ExampleId {
    pub const ALL: [ExampleId; 5] = [
        ExampleId::Ex1,
        ExampleId::Ex2,
        ExampleId::ExA1,
        ExampleId::ExA2,
        ExampleId::Additive10,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExampleId::Ex1 => "ex1",
            ExampleId::Ex2 => "ex2",
            ExampleId::ExA1 => "exA1",
            ExampleId::ExA2 => "exA2",
            ExampleId::Additive10 => "additive10",
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            ExampleId::Additive10 => 10,
            _ => 1,
        }
    }

    /// `f_ρ(x)`.
    pub fn truth(&self, x: &[f64]) -> f64 {
        match self {
            ExampleId::Ex1 => bernoulli4(x[0]),
            ExampleId::Ex2 => wiggle(x[0]),
            ExampleId::ExA1 => {
                let x = x[0];
                1.0 + step(x, 0.5) * (x - 0.5) + 2.0 * step(x, 0.2) * (x - 0.2)
            }
            ExampleId::ExA2 => {
                let x = x[0];
                1.0 + wiggle(x) + 10.0 * step(x, 0.5) * (x - 0.5).powi(2)
            }
            ExampleId::Additive10 => x
                .iter()
                .enumerate()
                .map(|(i, &u)| doppler_component(i + 1, u))
                .sum(),
        }
    }
}

fn step(x: f64, at: f64) -> f64 {
    if x >= at {
        1.0
    } else {
        0.0
    }
}

fn wiggle(x: f64) -> f64 {
    let t = 12.0 * x - 6.0;
    (6.0 * x - 3.0) * t.sin() + t.cos().powi(2)
}

/// `sin(2π/(u+0.1)^{k/20}) − sin(2π/0.1^{k/20})`, zero at `u = 0`.
pub fn doppler_component(k: usize, u: f64) -> f64 {
    let e = k as f64 / 20.0;
    (2.0 * PI / (u + 0.1).powf(e)).sin() - (2.0 * PI / 0.1f64.powf(e)).sin()
}

pub fn regression_truth(example: ExampleId, x: &[f64]) -> Result<f64> {
    if x.len() != example.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: example.input_dim(),
            got: x.len(),
        });
    }
    Ok(example.truth(x))
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExampleId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExampleId::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown example `{s}`")))
    }
}
