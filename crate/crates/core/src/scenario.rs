//! Hazard-to-roadway pipeline for one network exposed to earthquakes at a
//! fixed epicenter: magnitude → bridge intensity measures → bridge survival →
//! roadway survival probabilities.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::fragility::{
    bridge_survival_prob, load_bridges, Bridge, FragilityTable, IntensityMeasures,
};
use crate::hazard::{self, EarthquakeEvent, GmpeCoefficients, SiteTerms};
use crate::network::{BridgeId, TransportNetwork};
use crate::rng::{Domain, StreamRng};

/// Loma Prieta epicenter, degrees.
pub const LOMA_PRIETA: (f64, f64) = (37.04, -121.88);

pub mod shipped {
    //! Synthetic 12-node / 18-link stand-in for a regional corridor. Node
    //! layout, bridge positions, classes, and coefficients are invented; only
    //! the scale (12 nodes, 18 links, 14 with bridges, 39 bridges) follows
    //! the corridor it imitates.
    pub const NETWORK: &str = include_str!("../data/network.json");
    pub const BRIDGES: &str = include_str!("../data/bridges.json");
    pub const FRAGILITY: &str = include_str!("../data/fragility.csv");
    pub const GMPE: &str = include_str!("../data/gmpe.json");
    pub const MAGNITUDE: &str = include_str!("../data/magnitude.json");
}

#[derive(Debug, Clone)]
pub struct Scenario {
    network: TransportNetwork,
    bridges: Vec<Bridge>,
    gmpe: GmpeCoefficients,
    epicenter: EarthquakeEvent,
    distances_km: Vec<f64>,
    // per bridge, the fixed part of the measure its failure curve reads
    site_terms: Vec<SiteTerms>,
    // per link, positions into `bridges`
    link_bridges: Vec<Vec<usize>>,
}

impl Scenario {
    pub fn new(
        network: TransportNetwork,
        bridges: Vec<Bridge>,
        gmpe: GmpeCoefficients,
        epicenter: (f64, f64),
    ) -> Result<Self> {
        gmpe.validate()?;
        let epicenter = EarthquakeEvent::new(7.0, epicenter.0, epicenter.1)?;
        let position: HashMap<BridgeId, usize> =
            bridges.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
        if position.len() != bridges.len() {
            return Err(Error::Validation("duplicate bridge id in inventory".into()));
        }
        let mut used = HashSet::new();
        let link_bridges = network
            .links()
            .iter()
            .map(|link| {
                link.bridge_ids
                    .iter()
                    .map(|id| {
                        used.insert(*id);
                        position.get(id).copied().ok_or_else(|| {
                            Error::Validation(format!(
                                "link {} references unknown bridge {id}",
                                link.id
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        for b in &bridges {
            if !used.contains(&b.id) {
                log::warn!("bridge {} is not on any roadway", b.id);
            }
        }
        let distances_km = bridges
            .iter()
            .map(|b| hazard::source_distance(&b.site, &epicenter))
            .collect::<Result<Vec<_>>>()?;
        let site_terms = bridges
            .iter()
            .zip(&distances_km)
            .map(|(b, &r)| gmpe.site_terms(r, &b.site, b.required_im().period()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            network,
            bridges,
            gmpe,
            epicenter,
            distances_km,
            site_terms,
            link_bridges,
        })
    }

    /// Load from file contents.
    pub fn from_texts(
        network_json: &str,
        bridges_json: &str,
        fragility_csv: &str,
        gmpe_json: &str,
        epicenter: (f64, f64),
    ) -> Result<Self> {
        let network = TransportNetwork::from_json(network_json)?;
        let table = FragilityTable::from_csv(fragility_csv)?;
        let bridges = load_bridges(bridges_json, &table)?;
        let gmpe = GmpeCoefficients::from_json(gmpe_json)?;
        Self::new(network, bridges, gmpe, epicenter)
    }

    /// The synthetic corridor shipped with the crate, Loma Prieta epicenter.
    pub fn shipped() -> Self {
        Self::from_texts(
            shipped::NETWORK,
            shipped::BRIDGES,
            shipped::FRAGILITY,
            shipped::GMPE,
            LOMA_PRIETA,
        )
        .expect("shipped data is valid")
    }

    pub fn network(&self) -> &TransportNetwork {
        &self.network
    }

    pub fn bridges(&self) -> &[Bridge] {
        &self.bridges
    }

    pub fn gmpe(&self) -> &GmpeCoefficients {
        &self.gmpe
    }

    pub fn epicenter(&self) -> (f64, f64) {
        (self.epicenter.lat, self.epicenter.lon)
    }

    pub fn num_links(&self) -> usize {
        self.network.num_links()
    }

    pub fn with_gmpe(&self, gmpe: GmpeCoefficients) -> Result<Self> {
        Self::new(
            self.network.clone(),
            self.bridges.clone(),
            gmpe,
            self.epicenter(),
        )
    }

    /// Median PGA, Sa(0.3 s), Sa(1.0 s) at bridge `index` (position in
    /// [`Self::bridges`]).
    pub fn intensity_measures(&self, index: usize, magnitude: f64) -> Result<IntensityMeasures> {
        let site = &self.bridges[index].site;
        let r = self.distances_km[index];
        let pga = self.gmpe.median_pga(magnitude, r, site)?;
        let sa03 = pga * self.gmpe.spectral_shape(magnitude, r, site, 0.3)?;
        let sa10 = pga * self.gmpe.spectral_shape(magnitude, r, site, 1.0)?;
        Ok(IntensityMeasures {
            pga: Some(pga),
            sa03: Some(sa03),
            sa10: Some(sa10),
        })
    }

    /// Bridge survival probabilities in inventory order. With `residuals`,
    /// each bridge draws an independent lognormal residual from the stream
    /// `(seed, Residual, event, bridge id)`.
    pub fn bridge_survivals(
        &self,
        magnitude: f64,
        residuals: Option<ResidualStream>,
    ) -> Result<Vec<f64>> {
        let sigma = self.gmpe.sigma_ln_pga;
        self.bridges
            .iter()
            .enumerate()
            .map(|(i, bridge)| {
                let mut im = self.gmpe.median_im(magnitude, &self.site_terms[i])?;
                if let Some(rs) = residuals {
                    let mut rng =
                        StreamRng::nested(rs.seed, Domain::Residual, rs.event, bridge.id as u64);
                    // Sa = PGA · μ, so a residual on PGA scales Sa alike
                    im = hazard::sample_ground_motion(im, sigma, &mut rng)?;
                }
                bridge_survival_prob(bridge, &IntensityMeasures::only(bridge.required_im(), im))
            })
            .collect()
    }

    pub fn bridge_survival_map(&self, survivals: &[f64]) -> HashMap<BridgeId, f64> {
        self.bridges
            .iter()
            .zip(survivals)
            .map(|(b, &p)| (b.id, p))
            .collect()
    }

    /// Roadway survival probabilities from bridge survivals in inventory order.
    pub fn roadway_probs_from(&self, bridge_survivals: &[f64]) -> Vec<f64> {
        self.link_bridges
            .iter()
            .map(|ix| {
                ix.iter()
                    .map(|&i| bridge_survivals[i].ln())
                    .sum::<f64>()
                    .exp()
            })
            .collect()
    }

    pub fn roadway_probs(
        &self,
        magnitude: f64,
        residuals: Option<ResidualStream>,
    ) -> Result<Vec<f64>> {
        Ok(self.roadway_probs_from(&self.bridge_survivals(magnitude, residuals)?))
    }

    pub fn bridge_position(&self, id: BridgeId) -> Option<usize> {
        self.bridges.iter().position(|b| b.id == id)
    }
}

/// Address of the residual draws for one event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResidualStream {
    pub seed: u64,
    pub event: u64,
}
