use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Bulk thermal properties of a surface material.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialProps {
    pub name: String,
    /// Conductivity, W/(m·K).
    pub k: f64,
    /// Density, kg/m³.
    pub rho: f64,
    /// Specific heat capacity, J/(kg·K).
    pub cp: f64,
    /// Thermal emissivity in `[0, 1]`.
    pub emissivity: f64,
}

impl MaterialProps {
    pub fn validate(&self) -> Result<()> {
        let positive = [("k", self.k), ("rho", self.rho), ("cp", self.cp)];
        if let Some((field, v)) = positive.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::input(format!(
                "material `{}`: {field} must be positive, got {v}",
                self.name
            )));
        }
        if !(0.0..=1.0).contains(&self.emissivity) {
            return Err(Error::input(format!(
                "material `{}`: emissivity must lie in [0, 1], got {}",
                self.name, self.emissivity
            )));
        }
        Ok(())
    }

    /// `α = k / (ρ·c_p)`, m²/s.
    pub fn diffusivity(&self) -> f64 {
        self.k / (self.rho * self.cp)
    }

    /// Volumetric heat capacity `ρ·c_p`, J/(m³·K).
    pub fn heat_capacity(&self) -> f64 {
        self.rho * self.cp
    }
}

/// Named material table, loaded from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialDb {
    #[serde(default)]
    pub source: String,
    pub materials: Vec<MaterialProps>,
}

const BUILTIN: &str = include_str!("../../data/materials.json");

impl MaterialDb {
    /// The table shipped with the crate.
    pub fn builtin() -> Self {
        serde_json::from_str(BUILTIN).expect("bundled material table parses")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let db: Self = serde_json::from_str(text).map_err(|e| Error::input(format!("materials JSON: {e}")))?;
        db.validate()?;
        Ok(db)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let db: Self = serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
        db.validate()?;
        Ok(db)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, m) in self.materials.iter().enumerate() {
            m.validate()?;
            if self.materials[..i].iter().any(|o| o.name == m.name) {
                return Err(Error::input(format!("duplicate material `{}`", m.name)));
            }
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&MaterialProps> {
        self.materials
            .iter()
            .find(|m| m.name == name)
            .ok_or_else(|| Error::input(format!("unknown material `{name}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_table_is_valid() {
        let db = MaterialDb::builtin();
        db.validate().unwrap();
        for name in ["plaster_dense", "copper", "polystyrene", "pvc", "sheep_wool", "concrete"] {
            db.get(name).unwrap();
        }
        let plaster = db.get("plaster_dense").unwrap();
        assert_eq!((plaster.k, plaster.rho), (0.5, 1300.0));
        assert!(db.get("unobtainium").is_err());
    }

    #[test]
    fn plaster_diffusivity() {
        let m = MaterialProps {
            name: "plaster".into(),
            k: 0.5,
            rho: 1300.0,
            cp: 1000.0,
            emissivity: 0.9,
        };
        // 0.5 / 1.3e6
        assert!((m.diffusivity() - 3.846_153_846_153_846e-7).abs() < 1e-20);
        let mut heavy = m.clone();
        heavy.rho *= 2.0;
        assert!((heavy.diffusivity() - m.diffusivity() / 2.0).abs() < 1e-22);
        let unit = MaterialProps { name: "u".into(), k: 1.0, rho: 1.0, cp: 1.0, emissivity: 1.0 };
        assert_eq!(unit.diffusivity(), 1.0);
    }

    #[test]
    fn invalid_materials_rejected() {
        let base = MaterialProps { name: "m".into(), k: 1.0, rho: 1.0, cp: 1.0, emissivity: 0.5 };
        for m in [
            MaterialProps { k: 0.0, ..base.clone() },
            MaterialProps { rho: -1.0, ..base.clone() },
            MaterialProps { cp: f64::NAN, ..base.clone() },
            MaterialProps { emissivity: 1.2, ..base.clone() },
        ] {
            assert!(m.validate().is_err());
        }
        let dup = r#"{"materials": [{"name":"a","k":1,"rho":1,"cp":1,"emissivity":0.5},
                                    {"name":"a","k":2,"rho":1,"cp":1,"emissivity":0.5}]}"#;
        assert!(MaterialDb::from_json(dup).is_err());
    }
}
