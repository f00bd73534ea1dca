use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormChoice {
    Coefficient,
    L2,
}

/// Wall conditions of the controlled Test 2 dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Test2Bc {
    /// Same driven lid as the stationary target.
    Lid,
    /// Homogeneous walls; the control alone has to sustain the flow.
    Homogeneous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OfflineConfig {
    pub controls: Vec<f64>,
    pub substeps: usize,
    pub levels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub test: u8,
    pub n: usize,
    pub reynolds: f64,
    pub dt: f64,
    pub t_final: f64,
    pub tol: f64,
    /// Pruning threshold; `None` means `dt^2`.
    pub eps_t: Option<f64>,
    pub controls: Vec<f64>,
    pub offline: OfflineConfig,
    pub sweep: Vec<usize>,
    pub node_norm: NormChoice,
    pub test2_bc: Test2Bc,
    pub gamma_pen: f64,
    pub t_stationary: f64,
    pub vector_max_n: usize,
    pub timing_repeats: usize,
    pub out: PathBuf,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn preset(test: u8) -> CliResult<Self> {
        let base = Self {
            test,
            n: 41,
            reynolds: 100.0,
            dt: 0.1,
            t_final: 1.0,
            tol: 1e-3,
            eps_t: None,
            controls: vec![0.0, 1.0],
            offline: OfflineConfig { controls: vec![0.0, 0.5, 1.0], substeps: 2, levels: 5 },
            sweep: vec![],
            node_norm: NormChoice::Coefficient,
            test2_bc: Test2Bc::Lid,
            gamma_pen: 0.0,
            t_stationary: 20.0,
            vector_max_n: 64,
            timing_repeats: 3,
            out: PathBuf::from(format!("out/test{test}")),
            seed: 0,
        };
        match test {
            1 => Ok(Self { n: 64, dt: 0.05, t_final: 20.0, sweep: vec![64, 128, 256], controls: vec![0.0], ..base }),
            2 => Ok(Self { controls: vec![0.0, 0.5, 1.0], gamma_pen: 1e-3, ..base }),
            3 => Ok(Self {
                t_final: 2.0,
                node_norm: NormChoice::L2,
                offline: OfflineConfig { controls: vec![0.0, 0.5, 1.0], substeps: 4, levels: 5 },
                ..base
            }),
            4 => Ok(base),
            _ => Err(CliError::config(format!("unknown test {test}, expected 1..4"))),
        }
    }

    /// Parses a JSON document; keys not given fall back to the preset of its `test` (default 1).
    pub fn from_json(text: &str) -> CliResult<Self> {
        let doc: Value = serde_json::from_str(text)?;
        let Value::Object(map) = doc else {
            return Err(CliError::config("config must be a JSON object"));
        };
        let test = match map.get("test") {
            None => 1,
            Some(v) => v.as_u64().filter(|&t| t <= u8::MAX as u64).ok_or_else(|| CliError::config("test must be an integer"))? as u8,
        };
        let Value::Object(mut merged) = serde_json::to_value(Self::preset(test)?)? else {
            unreachable!("config serializes to an object")
        };
        merged.extend(map);
        let cfg: Self = serde_json::from_value(Value::Object(merged))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn n_t(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn eps(&self) -> f64 {
        self.eps_t.unwrap_or(self.dt * self.dt)
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::config(m));
        if !(1..=4).contains(&self.test) {
            return bad(format!("unknown test {}, expected 1..4", self.test));
        }
        if self.n < 3 {
            return bad(format!("n = {} is too small", self.n));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return bad(format!("t_final must be non-negative, got {}", self.t_final));
        }
        if ((self.t_final / self.dt).round() * self.dt - self.t_final).abs() > 1e-9 * self.t_final.max(1.0) {
            return bad(format!("t_final {} is not a multiple of dt {}", self.t_final, self.dt));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return bad(format!("tol must lie in (0, 1), got {}", self.tol));
        }
        if self.eps_t.is_some_and(|e| !(e >= 0.0 && e.is_finite())) {
            return bad("eps_t must be non-negative".into());
        }
        if self.reynolds <= 0.0 || !self.reynolds.is_finite() {
            return bad(format!("reynolds must be positive, got {}", self.reynolds));
        }
        if self.controls.is_empty() || self.controls.iter().any(|c| !c.is_finite()) {
            return bad("controls must be a non-empty list of finite values".into());
        }
        if self.offline.controls.is_empty() || self.offline.substeps == 0 || self.offline.levels == 0 {
            return bad("offline tree needs controls, substeps >= 1 and levels >= 1".into());
        }
        if self.sweep.iter().any(|&n| n < 3) {
            return bad("sweep sizes must be at least 3".into());
        }
        if self.gamma_pen < 0.0 || self.t_stationary < 0.0 {
            return bad("gamma_pen and t_stationary must be non-negative".into());
        }
        if self.timing_repeats == 0 {
            return bad("timing_repeats must be at least 1".into());
        }
        Ok(())
    }
}

/// Parses `0,0.5,1`.
pub fn parse_controls(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| CliError::config(format!("bad control value '{p}'"))))
        .collect()
}
