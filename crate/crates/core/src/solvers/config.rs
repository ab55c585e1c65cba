use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::tv::TVConfig;
use crate::{Error, Result};

/// Reconstruction method. IGP variant names follow `igp-mrf-AB` where `A`
/// is autocalibration and `B` is matching at every iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Classical,
    Air,
    Igp { autocal: bool, match_every_iter: bool },
    Gfb,
}

impl Method {
    pub fn name(&self) -> String {
        match self {
            Method::Classical => "classical".into(),
            Method::Air => "air-mrf".into(),
            Method::Igp {
                autocal,
                match_every_iter,
            } => format!("igp-mrf-{}{}", *autocal as u8, *match_every_iter as u8),
            Method::Gfb => "gfb-mrf".into(),
        }
    }

    /// Step strategy paired with the method in the proposed-methods table.
    pub fn default_step(&self) -> StepStrategy {
        match self {
            Method::Igp {
                autocal: false,
                match_every_iter: true,
            }
            | Method::Igp {
                autocal: true,
                match_every_iter: true,
            } => StepStrategy::Fsz,
            _ => StepStrategy::Bt,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        let lower = s.trim().to_ascii_lowercase();
        let m = match lower.as_str() {
            "classical" | "classical-mrf" => Method::Classical,
            "air" | "air-mrf" => Method::Air,
            "gfb" | "gfb-mrf" => Method::Gfb,
            other => {
                let bits = other
                    .strip_prefix("igp-mrf-")
                    .filter(|b| b.len() == 2 && b.chars().all(|c| c == '0' || c == '1'))
                    .ok_or_else(|| Error::UnknownMethod(s.to_string()))?;
                let b = bits.as_bytes();
                Method::Igp {
                    autocal: b[0] == b'1',
                    match_every_iter: b[1] == b'1',
                }
            }
        };
        Ok(m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StepStrategy {
    /// Rescale at the first iteration, then keep the step fixed.
    Fsz,
    /// Rescale at the first iteration, then backtrack every iteration.
    Bt,
}

impl StepStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            StepStrategy::Fsz => "fsz",
            StepStrategy::Bt => "bt",
        }
    }
}

impl FromStr for StepStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<StepStrategy> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fsz" => Ok(StepStrategy::Fsz),
            "bt" => Ok(StepStrategy::Bt),
            _ => Err(Error::InvalidArgument(format!("unknown step strategy {s:?}"))),
        }
    }
}

/// Scaling applied to the measurements before iterating; maps are returned
/// in the original PD units.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DataScaling {
    None,
    /// Divide by the largest voxel-row norm of `G^H Y`.
    MaxAdjoint,
    /// Divide by the largest `|Y|`, so a noise level given relative to the
    /// peak sample is also the absolute noise std seen by `lambda`.
    MaxSample,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: Method,
    pub step: StepStrategy,
    pub lambda: f64,
    pub k_max: usize,
    /// Compression rank k.
    pub rank: usize,
    /// Dictionary rank r for autocalibration.
    pub dict_rank: usize,
    /// Inner TV settings; the weight is set per iteration to `alpha * lambda`.
    pub tv: TVConfig,
    pub seed: u64,
    /// Use the `>=` direction of the residual-decrease condition.
    pub literal_condb: bool,
    pub max_halvings: usize,
    pub divergence_factor: f64,
    pub scaling: DataScaling,
}

impl SolverConfig {
    pub fn new(method: Method) -> Self {
        SolverConfig {
            method,
            step: method.default_step(),
            lambda: 1e-4,
            k_max: 10,
            rank: 10,
            dict_rank: 50,
            tv: TVConfig::default(),
            seed: 0,
            literal_condb: false,
            max_halvings: 20,
            divergence_factor: 10.0,
            scaling: DataScaling::MaxAdjoint,
        }
    }

    pub fn with_step(mut self, step: StepStrategy) -> Self {
        self.step = step;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_k_max(mut self, k_max: usize) -> Self {
        self.k_max = k_max;
        self
    }

    /// `method` plus the step strategy, e.g. `igp-mrf-01-bt`.
    pub fn label(&self) -> String {
        match self.method {
            Method::Classical => self.method.name(),
            _ => format!("{}-{}", self.method.name(), self.step.name()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("lambda {} must be >= 0", self.lambda)));
        }
        if self.k_max == 0 {
            return Err(Error::InvalidArgument("k_max must be >= 1".into()));
        }
        if self.rank == 0 || self.rank > self.dict_rank {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= rank {} <= dict_rank {}",
                self.rank, self.dict_rank
            )));
        }
        if !(self.divergence_factor > 1.0) {
            return Err(Error::InvalidArgument("divergence factor must exceed 1".into()));
        }
        self.tv.with_weight(0.0).validate()
    }
}

/// The proposed-method variants with their table step strategies.
pub fn table_variants() -> Vec<(Method, StepStrategy)> {
    let igp = |a, m| Method::Igp {
        autocal: a,
        match_every_iter: m,
    };
    vec![
        (igp(false, true), StepStrategy::Fsz),
        (igp(false, true), StepStrategy::Bt),
        (igp(false, false), StepStrategy::Bt),
        (igp(true, false), StepStrategy::Bt),
        (igp(true, true), StepStrategy::Fsz),
        (Method::Gfb, StepStrategy::Bt),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for (m, _) in table_variants() {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        for m in [Method::Classical, Method::Air] {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!(matches!("nonsense".parse::<Method>(), Err(Error::UnknownMethod(_))));
        assert!("igp-mrf-2".parse::<Method>().is_err());
    }

    #[test]
    fn table_steps_and_labels() {
        let labels: Vec<String> = table_variants()
            .into_iter()
            .map(|(m, s)| SolverConfig::new(m).with_step(s).label())
            .collect();
        assert_eq!(
            labels,
            ["igp-mrf-01-fsz", "igp-mrf-01-bt", "igp-mrf-00-bt", "igp-mrf-10-bt", "igp-mrf-11-fsz", "gfb-mrf-bt"]
        );
        assert_eq!("igp-mrf-11".parse::<Method>().unwrap().default_step(), StepStrategy::Fsz);
        assert_eq!("igp-mrf-10".parse::<Method>().unwrap().default_step(), StepStrategy::Bt);
    }

    #[test]
    fn validation() {
        assert!(SolverConfig::new(Method::Gfb).validate().is_ok());
        assert!(SolverConfig::new(Method::Gfb).with_lambda(-1.0).validate().is_err());
        assert!(SolverConfig::new(Method::Gfb).with_k_max(0).validate().is_err());
    }
}
