//! Published model parameters for the two OEM profiles.

use std::fmt;

use crate::alphabet::{IntervalSet, SizeSet};
use crate::model::{ModelError, ModelMode, ModelSpec};

pub const VOLKSWAGEN_SIZES: [u32; 4] = [200, 300, 360, 455];
pub const RENAULT_SIZES: [u32; 5] = [200, 330, 480, 600, 800];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Oem {
    Volkswagen,
    Renault,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Urban,
    Suburban,
    Highway,
    Universal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Preset {
    pub oem: Oem,
    pub scenario: Scenario,
}

impl Preset {
    pub const fn new(oem: Oem, scenario: Scenario) -> Self {
        Preset { oem, scenario }
    }

    pub fn all() -> [Preset; 8] {
        use Oem::*;
        use Scenario::*;
        [
            Preset::new(Volkswagen, Urban),
            Preset::new(Volkswagen, Suburban),
            Preset::new(Volkswagen, Highway),
            Preset::new(Volkswagen, Universal),
            Preset::new(Renault, Urban),
            Preset::new(Renault, Suburban),
            Preset::new(Renault, Highway),
            Preset::new(Renault, Universal),
        ]
    }

    /// `vw-highway`, `renault-urban`, ...; a bare `vw` or `renault` means
    /// the universal scenario.
    pub fn by_name(name: &str) -> Option<Preset> {
        let name = name.to_ascii_lowercase();
        let (oem, scenario) = name.split_once('-').unwrap_or((&name, "universal"));
        let oem = match oem {
            "vw" | "volkswagen" => Oem::Volkswagen,
            "renault" => Oem::Renault,
            _ => return None,
        };
        let scenario = match scenario {
            "urban" => Scenario::Urban,
            "suburban" => Scenario::Suburban,
            "highway" => Scenario::Highway,
            "universal" => Scenario::Universal,
            _ => return None,
        };
        Some(Preset { oem, scenario })
    }

    pub fn name(&self) -> String {
        let oem = match self.oem {
            Oem::Volkswagen => "vw",
            Oem::Renault => "renault",
        };
        let scenario = match self.scenario {
            Scenario::Urban => "urban",
            Scenario::Suburban => "suburban",
            Scenario::Highway => "highway",
            Scenario::Universal => "universal",
        };
        format!("{oem}-{scenario}")
    }

    pub fn sizes(&self) -> SizeSet {
        let v = match self.oem {
            Oem::Volkswagen => VOLKSWAGEN_SIZES.to_vec(),
            Oem::Renault => RENAULT_SIZES.to_vec(),
        };
        SizeSet::new(v).expect("preset sizes are valid")
    }

    pub fn intervals(&self) -> IntervalSet {
        IntervalSet::etsi_default()
    }

    /// Jitter standard deviation in ms.
    pub fn jitter_std_ms(&self) -> f64 {
        use Oem::*;
        use Scenario::*;
        match (self.oem, self.scenario) {
            (Volkswagen, Urban) => 3.235,
            (Volkswagen, Suburban) => 3.814,
            (Volkswagen, Highway) => 3.444,
            (Volkswagen, Universal) => 3.553,
            (Renault, Urban) => 2.817,
            (Renault, Suburban) => 2.769,
            (Renault, Highway) => 2.711,
            (Renault, Universal) => 2.783,
        }
    }

    pub fn spec(&self, mode: ModelMode, order: usize) -> Result<ModelSpec, ModelError> {
        ModelSpec::complete(order, self.sizes(), self.intervals(), self.jitter_std_ms())?
            .project(mode)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_parameters() {
        let vw = Preset::by_name("vw-highway").unwrap();
        assert_eq!(vw.sizes().as_slice(), &[200, 300, 360, 455]);
        assert_eq!(vw.jitter_std_ms(), 3.444);
        assert_eq!(vw.spec(ModelMode::Complete, 5).unwrap().alphabet_len(), 40);
        let r = Preset::by_name("renault").unwrap();
        assert_eq!(r.scenario, Scenario::Universal);
        assert_eq!(r.sizes().as_slice(), &[200, 330, 480, 600, 800]);
        assert_eq!(r.spec(ModelMode::Complete, 1).unwrap().alphabet_len(), 50);
        assert_eq!(vw.intervals().as_slice(), &(1..=10).map(|k| k * 100).collect::<Vec<_>>()[..]);

        let sigmas: Vec<f64> = Preset::all().iter().map(Preset::jitter_std_ms).collect();
        assert_eq!(sigmas, [3.235, 3.814, 3.444, 3.553, 2.817, 2.769, 2.711, 2.783]);
    }

    #[test]
    fn names_round_trip() {
        for p in Preset::all() {
            assert_eq!(Preset::by_name(&p.name()), Some(p));
        }
        assert_eq!(Preset::by_name("bmw-urban"), None);
        assert_eq!(Preset::by_name("vw-rural"), None);
    }

    #[test]
    fn separate_projection_keeps_jitter_only_for_intervals() {
        let vw = Preset::by_name("vw-urban").unwrap();
        assert_eq!(vw.spec(ModelMode::SizeOnly, 1).unwrap().jitter_std_ms(), 0.0);
        assert_eq!(vw.spec(ModelMode::IntervalOnly, 1).unwrap().jitter_std_ms(), 3.235);
    }
}
