use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tps::ChiProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Mobius,
    Tps,
    Moser,
}

/// Every knob of a run. Missing JSON fields take the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Integration samples per surface.
    pub samples: usize,
    /// Angular samples per extrema pair.
    pub angles: usize,
    pub max_extrema: usize,
    /// Target edge length of the disk mesh used by the Moser stage.
    pub fe_h: f64,
    /// RK4 steps of the Moser flow.
    pub n_steps: usize,
    /// Density floor relative to the mean density.
    pub eps_floor: f64,
    pub chi_profile: ChiProfile,
    pub stages: Vec<Stage>,
    /// Also compute the reverse direction and keep the smaller value.
    pub symmetrize: bool,
    /// Number of best Moebius-only candidates that get the TPS and Moser stages.
    pub screen_keep: usize,
    /// Golden-section refinement of the angle around the best screened candidates.
    pub refine_theta: bool,
    /// First vertex of farthest point sampling.
    pub seed_vertex: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            samples: 256,
            angles: 32,
            max_extrema: 8,
            fe_h: 0.05,
            n_steps: 32,
            eps_floor: 1e-3,
            chi_profile: ChiProfile::Atanh,
            stages: vec![Stage::Mobius, Stage::Tps, Stage::Moser],
            symmetrize: false,
            screen_keep: 8,
            refine_theta: false,
            seed_vertex: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.samples == 0 || self.angles == 0 || self.max_extrema == 0 || self.n_steps == 0 || self.screen_keep == 0 {
            return bad("samples, angles, max_extrema, n_steps and screen_keep must be positive");
        }
        if !(self.fe_h > 0.0 && self.fe_h < 1.0) {
            return bad("fe_h must lie in (0, 1)");
        }
        if !(self.eps_floor > 0.0) {
            return bad("eps_floor must be positive");
        }
        if self.stages.first() != Some(&Stage::Mobius) {
            return bad("stages must start with mobius");
        }
        if self.stages.windows(2).any(|w| w[0] >= w[1]) {
            return bad("stages must be ordered mobius, tps, moser without repeats");
        }
        Ok(())
    }

    pub fn has_stage(&self, s: Stage) -> bool {
        self.stages.contains(&s)
    }

    pub fn mobius_only(&self) -> Self {
        Self { stages: vec![Stage::Mobius], ..self.clone() }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }
}
