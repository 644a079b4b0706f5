//! Lognormal bridge fragility and roadway survival aggregation.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hazard::Site;
use crate::network::{BridgeId, TransportNetwork};

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DamageState {
    Slight,
    Moderate,
    Extensive,
    Complete,
}

impl DamageState {
    pub const ALL: [DamageState; 4] = [
        DamageState::Slight,
        DamageState::Moderate,
        DamageState::Extensive,
        DamageState::Complete,
    ];

    fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for DamageState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "slight" => Ok(DamageState::Slight),
            "moderate" => Ok(DamageState::Moderate),
            "extensive" => Ok(DamageState::Extensive),
            "complete" => Ok(DamageState::Complete),
            other => Err(Error::Parse(format!("unknown damage state {other:?}"))),
        }
    }
}

/// Intensity measure governing a fragility curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ImKind {
    #[serde(rename = "pga")]
    Pga,
    #[serde(rename = "sa0.3")]
    Sa03,
    #[serde(rename = "sa1.0")]
    Sa10,
}

impl ImKind {
    /// Spectral period in seconds; `None` for PGA.
    pub fn period(self) -> Option<f64> {
        match self {
            ImKind::Pga => None,
            ImKind::Sa03 => Some(0.3),
            ImKind::Sa10 => Some(1.0),
        }
    }
}

impl FromStr for ImKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pga" => Ok(ImKind::Pga),
            "sa0.3" | "sa03" | "sa(0.3)" => Ok(ImKind::Sa03),
            "sa1.0" | "sa10" | "sa(1.0)" => Ok(ImKind::Sa10),
            other => Err(Error::Parse(format!("unknown intensity measure {other:?}"))),
        }
    }
}

impl fmt::Display for ImKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ImKind::Pga => "pga",
            ImKind::Sa03 => "sa0.3",
            ImKind::Sa10 => "sa1.0",
        })
    }
}

/// Intensity measures at one site, in g. Absent entries are `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IntensityMeasures {
    pub pga: Option<f64>,
    pub sa03: Option<f64>,
    pub sa10: Option<f64>,
}

impl IntensityMeasures {
    pub fn get(&self, kind: ImKind) -> Option<f64> {
        match kind {
            ImKind::Pga => self.pga,
            ImKind::Sa03 => self.sa03,
            ImKind::Sa10 => self.sa10,
        }
    }

    /// A single measure.
    pub fn only(kind: ImKind, value: f64) -> Self {
        let mut ims = Self {
            pga: None,
            sa03: None,
            sa10: None,
        };
        match kind {
            ImKind::Pga => ims.pga = Some(value),
            ImKind::Sa03 => ims.sa03 = Some(value),
            ImKind::Sa10 => ims.sa10 = Some(value),
        }
        ims
    }

    /// Every measure multiplied by `factor` (a lognormal residual on PGA
    /// carries through to Sa = PGA · μ).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            pga: self.pga.map(|v| v * factor),
            sa03: self.sa03.map(|v| v * factor),
            sa10: self.sa10.map(|v| v * factor),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FragilityCurve {
    pub damage_state: DamageState,
    pub im_kind: ImKind,
    pub median_im: f64,
    pub beta_ln: f64,
}

impl FragilityCurve {
    pub fn new(
        damage_state: DamageState,
        im_kind: ImKind,
        median_im: f64,
        beta_ln: f64,
    ) -> Result<Self> {
        if !(median_im > 0.0) || !(beta_ln > 0.0) {
            return Err(Error::Validation(format!(
                "fragility curve needs positive median and dispersion, got {median_im} and {beta_ln}"
            )));
        }
        Ok(Self {
            damage_state,
            im_kind,
            median_im,
            beta_ln,
        })
    }

    /// P(damage ≥ state | im) = Φ(ln(im / median) / β).
    pub fn exceedance(&self, im: f64) -> Result<f64> {
        if !(im > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "intensity measure {im} must be positive"
            )));
        }
        Ok(normal_cdf((im / self.median_im).ln() / self.beta_ln))
    }
}

pub fn damage_exceedance_prob(curve: &FragilityCurve, im: f64) -> Result<f64> {
    curve.exceedance(im)
}

/// Curves for one bridge class, indexed by damage state.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassCurves([FragilityCurve; 4]);

impl ClassCurves {
    pub fn new(curves: [FragilityCurve; 4]) -> Result<Self> {
        for (i, c) in curves.iter().enumerate() {
            if c.damage_state.index() != i {
                return Err(Error::Validation(
                    "fragility curves out of damage-state order".into(),
                ));
            }
        }
        if curves.windows(2).any(|w| w[1].median_im < w[0].median_im) {
            return Err(Error::Validation(
                "fragility medians must be non-decreasing with damage severity".into(),
            ));
        }
        Ok(Self(curves))
    }

    pub fn curve(&self, state: DamageState) -> &FragilityCurve {
        &self.0[state.index()]
    }

    pub fn curves(&self) -> &[FragilityCurve; 4] {
        &self.0
    }
}

#[derive(Debug, Deserialize)]
struct FragilityRow {
    class: String,
    damage_state: String,
    im_kind: String,
    median_g: f64,
    beta_ln: f64,
}

/// Fragility curves keyed by bridge class.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FragilityTable {
    classes: BTreeMap<String, ClassCurves>,
}

impl FragilityTable {
    /// Parse CSV with header `class,damage_state,im_kind,median_g,beta_ln`.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader.headers()?.clone();
        let expected = ["class", "damage_state", "im_kind", "median_g", "beta_ln"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::Parse(format!(
                "fragility header must be {}, got {}",
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut partial: BTreeMap<String, [Option<FragilityCurve>; 4]> = BTreeMap::new();
        for row in reader.deserialize() {
            let row: FragilityRow = row?;
            let state: DamageState = row.damage_state.parse()?;
            let curve =
                FragilityCurve::new(state, row.im_kind.parse()?, row.median_g, row.beta_ln)?;
            let slot = &mut partial.entry(row.class.clone()).or_default()[state.index()];
            if slot.replace(curve).is_some() {
                return Err(Error::Validation(format!(
                    "class {} lists damage state {:?} twice",
                    row.class, state
                )));
            }
        }
        let mut classes = BTreeMap::new();
        for (class, slots) in partial {
            let mut curves = Vec::with_capacity(4);
            for (i, slot) in slots.into_iter().enumerate() {
                curves.push(slot.ok_or_else(|| {
                    Error::Validation(format!(
                        "class {class} is missing damage state {:?}",
                        DamageState::ALL[i]
                    ))
                })?);
            }
            let curves: [FragilityCurve; 4] = curves.try_into().expect("four curves");
            classes.insert(class, ClassCurves::new(curves)?);
        }
        Ok(Self { classes })
    }

    pub fn get(&self, class: &str) -> Option<&ClassCurves> {
        self.classes.get(class)
    }

    pub fn insert(&mut self, class: impl Into<String>, curves: ClassCurves) {
        self.classes.insert(class.into(), curves);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bridge {
    pub id: BridgeId,
    pub site: Site,
    pub bridge_class: String,
    pub curves: ClassCurves,
}

impl Bridge {
    /// IM kinds needed to evaluate this bridge's failure curve.
    pub fn required_im(&self) -> ImKind {
        self.curves.curve(DamageState::Extensive).im_kind
    }

    pub fn exceedance(&self, state: DamageState, ims: &IntensityMeasures) -> Result<f64> {
        let curve = self.curves.curve(state);
        let im = ims.get(curve.im_kind).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "bridge {} needs intensity measure {}",
                self.id, curve.im_kind
            ))
        })?;
        curve.exceedance(im)
    }
}

/// 1 − P(extensive or worse). A bridge stops functioning at the onset of
/// extensive damage.
pub fn bridge_survival_prob(bridge: &Bridge, ims: &IntensityMeasures) -> Result<f64> {
    Ok(1.0 - bridge.exceedance(DamageState::Extensive, ims)?)
}

#[derive(Debug, Deserialize)]
struct InventoryFile {
    bridges: Vec<InventoryRecord>,
}

#[derive(Debug, Deserialize)]
struct InventoryRecord {
    id: BridgeId,
    lat: f64,
    lon: f64,
    class: String,
    vs30: f64,
    basin_depth: f64,
}

/// Parse the bridge inventory JSON and attach each bridge's class curves.
pub fn load_bridges(inventory_json: &str, table: &FragilityTable) -> Result<Vec<Bridge>> {
    let file: InventoryFile = serde_json::from_str(inventory_json)?;
    let mut seen = std::collections::HashSet::new();
    let mut bridges = Vec::with_capacity(file.bridges.len());
    for rec in file.bridges {
        if !seen.insert(rec.id) {
            return Err(Error::Validation(format!("duplicate bridge id {}", rec.id)));
        }
        let site = Site {
            lat: rec.lat,
            lon: rec.lon,
            vs30: rec.vs30,
            basin_depth: rec.basin_depth,
        };
        site.validate()?;
        let curves = table
            .get(&rec.class)
            .ok_or_else(|| {
                Error::Validation(format!(
                    "bridge {} has unknown class {:?}",
                    rec.id, rec.class
                ))
            })?
            .clone();
        bridges.push(Bridge {
            id: rec.id,
            site,
            bridge_class: rec.class,
            curves,
        });
    }
    bridges.sort_by_key(|b| b.id);
    Ok(bridges)
}

/// Roadway survival probabilities: `ln p_i = Σ_j ln p_{i_j}` over the
/// roadway's bridges; bridgeless roadways get exactly 1.
pub fn roadway_survival_probs(
    net: &TransportNetwork,
    bridge_survivals: &HashMap<BridgeId, f64>,
) -> Result<Vec<f64>> {
    net.links()
        .iter()
        .map(|link| {
            let mut ln_p = 0.0;
            for id in &link.bridge_ids {
                let p = *bridge_survivals.get(id).ok_or_else(|| {
                    Error::Validation(format!("no survival probability for bridge {id}"))
                })?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::ProbabilityOutOfRange {
                        index: *id as usize,
                        value: p,
                    });
                }
                ln_p += p.ln();
            }
            Ok(ln_p.exp())
        })
        .collect()
}
