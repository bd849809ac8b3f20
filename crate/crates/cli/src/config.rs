//! Tolerance and budget knobs shared by every command.

use std::path::PathBuf;

use minpoly_core::minpoly;
use minpoly_core::solver::SolverParams;

/// One run's worth of configuration: the five tolerance knobs, the
/// correction-round budget, the splitting solver's iteration cap, the RNG
/// seed, and where artifacts go. Defaults match the benchmark settings.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub eps_m: f64,
    pub eps_g: f64,
    pub eps_f: f64,
    pub eps_c: f64,
    pub eps_mu: f64,
    pub eta_max: usize,
    pub max_iters: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let solver = SolverParams::default();
        Self {
            eps_m: solver.eps_m,
            eps_g: solver.eps_g,
            eps_f: solver.eps_f,
            eps_c: minpoly::DEFAULT_EPS_C,
            eps_mu: minpoly::DEFAULT_EPS_MU,
            eta_max: minpoly::DEFAULT_ETA_MAX,
            max_iters: solver.max_iters,
            seed: 0,
            out: None,
        }
    }
}

impl RunConfig {
    /// Lowers to the driver's own config type.
    pub fn to_core(&self) -> minpoly::Config {
        let mut cfg = minpoly::Config::default();
        cfg.solver.eps_m = self.eps_m;
        cfg.solver.eps_g = self.eps_g;
        cfg.solver.eps_f = self.eps_f;
        cfg.solver.max_iters = self.max_iters;
        cfg.eps_c = self.eps_c;
        cfg.eps_mu = self.eps_mu;
        cfg.eta_max = self.eta_max;
        cfg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_benchmark_settings() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.eps_m, 0.01);
        assert_eq!(cfg.eps_g, 0.01);
        assert_eq!(cfg.eps_f, 0.01);
        assert_eq!(cfg.eps_c, 1e-7);
        assert_eq!(cfg.eps_mu, 0.01);
    }

    #[test]
    fn lowering_carries_every_knob() {
        let cfg = RunConfig {
            eps_m: 0.5,
            eps_g: 0.25,
            eps_f: 0.125,
            eps_c: 1e-5,
            eps_mu: 0.02,
            eta_max: 7,
            max_iters: 123,
            ..RunConfig::default()
        };
        let core = cfg.to_core();
        assert_eq!(core.solver.eps_m, 0.5);
        assert_eq!(core.solver.eps_g, 0.25);
        assert_eq!(core.solver.eps_f, 0.125);
        assert_eq!(core.solver.max_iters, 123);
        assert_eq!(core.eps_c, 1e-5);
        assert_eq!(core.eps_mu, 0.02);
        assert_eq!(core.eta_max, 7);
    }
}
