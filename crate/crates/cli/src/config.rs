// SPDX-License-Identifier: Apache-2.0

//! Pipeline configuration, one TOML file per run.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rcbev::camera::DepthBins;
use rcbev::dataset::ClassGroupConfig;
use rcbev::eval::{KittiConfig, NuscenesConfig};
use rcbev::head::{DecodeConfig, GaussianConfig};
use rcbev::radar::{PillarConfig, DEFAULT_MAX_PILLARS, DEFAULT_MAX_POINTS_PER_PILLAR};
use rcbev::GridConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadarSection {
    pub num_sweeps: usize,
    pub max_points_per_pillar: usize,
    pub max_pillars: usize,
    pub pointnet_channels: usize,
    /// `[feat_dim + 1, channels]` tensor, bias in the last row. Seeded random
    /// weights are used when absent.
    pub pointnet_weights: Option<PathBuf>,
}

impl Default for RadarSection {
    fn default() -> Self {
        Self {
            num_sweeps: 5,
            max_points_per_pillar: DEFAULT_MAX_POINTS_PER_PILLAR,
            max_pillars: DEFAULT_MAX_PILLARS,
            pointnet_channels: 64,
            pointnet_weights: None,
        }
    }
}

impl RadarSection {
    pub fn pillar_config(&self) -> PillarConfig {
        PillarConfig {
            max_points_per_pillar: self.max_points_per_pillar,
            max_pillars: self.max_pillars,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraSection {
    pub depth_bins: DepthBins,
    /// Channel count of the camera BEV map when a frame has no image features.
    pub feature_channels: usize,
}

impl Default for CameraSection {
    fn default() -> Self {
        Self {
            depth_bins: DepthBins::default(),
            feature_channels: 80,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeadSection {
    pub gaussian: GaussianConfig,
    pub decode: DecodeConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    #[default]
    Nuscenes,
    Kitti,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub protocol: Protocol,
    pub nuscenes: NuscenesConfig,
    pub kitti: KittiConfig,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub grid: GridConfig,
    pub radar: RadarSection,
    pub camera: CameraSection,
    pub head: HeadSection,
    pub eval: EvalSection,
    pub cbgs: ClassGroupConfig,
}

impl PipelineConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).context("parsing config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.radar;
        if r.num_sweeps == 0 {
            bail!("radar.num_sweeps must be at least 1");
        }
        if r.max_points_per_pillar == 0 || r.max_pillars == 0 || r.pointnet_channels == 0 {
            bail!("radar capacities and pointnet_channels must be positive");
        }
        self.camera.depth_bins.depths()?;
        if self.camera.feature_channels == 0 {
            bail!("camera.feature_channels must be positive");
        }
        let d = &self.head.decode;
        if d.nms_kernel % 2 == 0 || !(0.0..=1.0).contains(&d.score_threshold) {
            bail!("head.decode needs an odd nms_kernel and a score_threshold in [0, 1]");
        }
        if !(self.head.gaussian.min_overlap > 0.0 && self.head.gaussian.min_overlap < 1.0) {
            bail!("head.gaussian.min_overlap must be in (0, 1)");
        }
        let n = &self.eval.nuscenes;
        if n.distance_thresholds.is_empty() || n.distance_thresholds.iter().chain([&n.tp_threshold]).any(|t| !(*t > 0.0)) {
            bail!("eval.nuscenes thresholds must be positive and non-empty");
        }
        self.cbgs.validate()?;
        Ok(())
    }
}
