//! JSON instance files.
//!
//! ```json
//! {"char": 2, "ext_degree": 1, "vars": ["x", "y"],
//!  "generators": [{"poly": "x^2+y^3", "level": "2"}], "truncation": 12}
//! ```
//!
//! Optional keys: `horizon`, `points` (strings `c1,c2,..`), `groups`
//! (`{"limit": .., "members": [..]}`), `seed`, `modulus` (coefficients of the
//! defining polynomial, constant term first), `d_saturated` (trust the list
//! as already closed) and `max_denominator` (reject levels with larger
//! denominators). `char: 0` selects the rationals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, GaloisField, Rationals};
use crate::filtration::{format_level, parse_level, Generator, IdealisticFiltration};
use crate::invariants::NeighborhoodGroup;
use crate::jetring::{Point, RingContext};
use crate::leading::default_horizon;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub poly: String,
    pub level: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub limit: String,
    pub members: Vec<String>,
}

fn one() -> u32 {
    1
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(rename = "char")]
    pub characteristic: u64,
    #[serde(default = "one")]
    pub ext_degree: u32,
    pub vars: Vec<String>,
    pub generators: Vec<GeneratorSpec>,
    pub truncation: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub groups: Vec<GroupSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulus: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub d_saturated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_denominator: Option<i64>,
}

impl InstanceFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("instance: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn load(self) -> Result<AnyInstance> {
        if self.characteristic == 0 {
            if self.ext_degree != 1 || self.modulus.is_some() {
                return Err(Error::InvalidField(
                    "characteristic 0 takes no extension".into(),
                ));
            }
            Ok(AnyInstance::Rational(Instance::build(self, Rationals)?))
        } else {
            let field =
                GaloisField::new(self.characteristic, self.ext_degree, self.modulus.clone())?;
            Ok(AnyInstance::Finite(Instance::build(self, field)?))
        }
    }
}

/// A parsed instance over a concrete field, with its filtration saturated.
#[derive(Clone, Debug)]
pub struct Instance<K: Field> {
    pub file: InstanceFile,
    pub ring: RingContext<K>,
    pub filtration: IdealisticFiltration<K>,
    pub truncation: usize,
    pub horizon: u32,
    pub points: Vec<Point<K>>,
    pub groups: Vec<NeighborhoodGroup<K>>,
}

impl<K: Field> Instance<K> {
    pub fn build(file: InstanceFile, field: K) -> Result<Self> {
        let ring = RingContext::new(field, &file.vars)?;
        let mut gens = Vec::with_capacity(file.generators.len());
        for (i, g) in file.generators.iter().enumerate() {
            let poly = ring
                .parse_poly(&g.poly)
                .map_err(|e| Error::Parse(format!("generators[{i}].poly: {e}")))?;
            let level = parse_level(&g.level)
                .map_err(|e| Error::Parse(format!("generators[{i}].level: {e}")))?;
            if let Some(max) = file.max_denominator {
                if *level.denom() > max {
                    return Err(Error::Parse(format!(
                        "generators[{i}].level: denominator of {} exceeds {max}",
                        format_level(&level)
                    )));
                }
            }
            gens.push(Generator::new(poly, level));
        }
        let raw = IdealisticFiltration::generate(gens, ring.clone())?;
        let filtration = if file.d_saturated {
            raw.assume_d_saturated()
        } else {
            raw.d_saturate()
        };
        let point = |what: String, s: &str| {
            ring.parse_point(s)
                .map_err(|e| Error::Parse(format!("{what}: {e}")))
        };
        let points = file
            .points
            .iter()
            .enumerate()
            .map(|(i, s)| point(format!("points[{i}]"), s))
            .collect::<Result<Vec<_>>>()?;
        let groups = file
            .groups
            .iter()
            .enumerate()
            .map(|(i, g)| {
                Ok(NeighborhoodGroup {
                    limit: point(format!("groups[{i}].limit"), &g.limit)?,
                    members: g
                        .members
                        .iter()
                        .enumerate()
                        .map(|(j, s)| point(format!("groups[{i}].members[{j}]"), s))
                        .collect::<Result<_>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let truncation = file.truncation;
        let horizon = file
            .horizon
            .unwrap_or_else(|| default_horizon(ring.characteristic(), truncation));
        Ok(Instance {
            file,
            ring,
            filtration,
            truncation,
            horizon,
            points,
            groups,
        })
    }

    /// The first listed point, or the origin.
    pub fn base_point(&self) -> Point<K> {
        self.points
            .first()
            .cloned()
            .unwrap_or_else(|| self.ring.origin())
    }

    /// The saturated filtration written back as an instance file.
    pub fn saturated_file(&self) -> InstanceFile {
        let mut file = self.file.clone();
        file.generators = self
            .filtration
            .generators()
            .iter()
            .map(|g| GeneratorSpec {
                poly: self.ring.format_poly(&g.poly),
                level: format_level(&g.level),
            })
            .collect();
        file.d_saturated = true;
        file
    }
}

#[derive(Clone, Debug)]
pub enum AnyInstance {
    Finite(Instance<GaloisField>),
    Rational(Instance<Rationals>),
}

/// Runs a generic body against whichever field the instance uses.
#[macro_export]
macro_rules! with_instance {
    ($any:expr, $inst:ident => $body:expr) => {
        match $any {
            $crate::instance::AnyInstance::Finite($inst) => $body,
            $crate::instance::AnyInstance::Rational($inst) => $body,
        }
    };
}

pub fn load_str(text: &str) -> Result<AnyInstance> {
    InstanceFile::from_json(text)?.load()
}

#[cfg(test)]
mod tests {
    use super::*;

    const WORKED: &str = r#"{"char": 2, "ext_degree": 1, "vars": ["x","y"],
        "generators": [{"poly": "x^2+y^3", "level": "2"}], "truncation": 12}"#;

    #[test]
    fn worked_instance_loads_and_saturates() {
        let AnyInstance::Finite(inst) = load_str(WORKED).unwrap() else {
            panic!("expected a finite field");
        };
        assert_eq!(inst.horizon, 3);
        assert!(inst.filtration.is_d_saturated());
        let file = inst.saturated_file();
        let levels: Vec<(&str, &str)> = file
            .generators
            .iter()
            .map(|g| (g.poly.as_str(), g.level.as_str()))
            .collect();
        assert_eq!(levels, vec![("x^2+y^3", "2"), ("y^2", "1")]);
        assert_eq!(inst.base_point(), vec![0, 0]);
    }

    #[test]
    fn round_trip_and_dispatch() {
        let file = InstanceFile::from_json(WORKED).unwrap();
        assert_eq!(InstanceFile::from_json(&file.to_json()).unwrap(), file);
        let rational = r#"{"char": 0, "vars": ["x"], "generators": [{"poly": "1/3*x^2", "level": "3/2"}],
            "truncation": 4, "points": ["1/2"]}"#;
        let any = load_str(rational).unwrap();
        let n = with_instance!(&any, inst => inst.filtration.generators().len());
        assert_eq!(n, 2);
        assert!(matches!(any, AnyInstance::Rational(_)));
    }

    #[test]
    fn diagnostics_name_the_field() {
        let bad = WORKED.replace("x^2+y^3", "x^^2");
        let err = load_str(&bad).unwrap_err().to_string();
        assert!(err.contains("generators[0].poly"), "{err}");
        let bad = WORKED
            .replace("\"2\"", "\"1/7\"")
            .replace("}], ", "}], \"max_denominator\": 4, ");
        let err = load_str(&bad).unwrap_err().to_string();
        assert!(err.contains("denominator"), "{err}");
        let bad = WORKED.replace("\"truncation\"", "\"points\": [\"0,0,0\"], \"truncation\"");
        assert!(load_str(&bad).is_err());
        assert!(load_str("{").is_err());
    }
}
