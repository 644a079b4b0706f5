use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use netrel::hazard::TruncExpMagnitude;
use netrel::scenario::{shipped, LOMA_PRIETA};
use netrel::Scenario;

use crate::CliError;

/// Optional JSON run configuration. Command-line flags take precedence.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub network: Option<PathBuf>,
    pub bridges: Option<PathBuf>,
    pub fragility: Option<PathBuf>,
    pub gmpe: Option<PathBuf>,
    pub epicenter: Option<[f64; 2]>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = read(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }

    /// Fill every field that `self` leaves unset from `base`.
    pub fn or(self, base: RunConfig) -> RunConfig {
        RunConfig {
            network: self.network.or(base.network),
            bridges: self.bridges.or(base.bridges),
            fragility: self.fragility.or(base.fragility),
            gmpe: self.gmpe.or(base.gmpe),
            epicenter: self.epicenter.or(base.epicenter),
            seed: self.seed.or(base.seed),
            workers: self.workers.or(base.workers),
            output_dir: self.output_dir.or(base.output_dir),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn workers(&self) -> Result<usize, CliError> {
        match self.workers.unwrap_or(1) {
            0 => Err(CliError::Usage("worker count must be >= 1".into())),
            w => Ok(w),
        }
    }

    pub fn output_dir(&self) -> Result<PathBuf, CliError> {
        let dir = self
            .output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(dir)
    }

    /// Scenario from the configured files; any file left unset falls back to
    /// the shipped synthetic corridor.
    pub fn scenario(&self) -> Result<Scenario, CliError> {
        let text = |p: &Option<PathBuf>, fallback: &str| -> Result<String, CliError> {
            match p {
                Some(path) => read(path),
                None => Ok(fallback.to_string()),
            }
        };
        let network = text(&self.network, shipped::NETWORK)?;
        let bridges = text(&self.bridges, shipped::BRIDGES)?;
        let fragility = text(&self.fragility, shipped::FRAGILITY)?;
        let gmpe = text(&self.gmpe, shipped::GMPE)?;
        let epicenter = self.epicenter.map(|[a, b]| (a, b)).unwrap_or(LOMA_PRIETA);
        Ok(Scenario::from_texts(
            &network, &bridges, &fragility, &gmpe, epicenter,
        )?)
    }
}

pub fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}

pub fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

pub fn load_magnitude_dist(path: &Path) -> Result<TruncExpMagnitude, CliError> {
    Ok(TruncExpMagnitude::from_json(&read(path)?)?)
}
