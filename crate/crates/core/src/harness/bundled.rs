use super::scenario::ScenarioFile;
use crate::error::{Error, Result};

pub struct BundledScenario {
    pub name: &'static str,
    pub json: &'static str,
}

macro_rules! bundled {
    ($($name:literal),* $(,)?) => {
        &[$(BundledScenario {
            name: $name,
            json: include_str!(concat!("../../scenarios/", $name, ".json")),
        }),*]
    };
}

const BUNDLED: &[BundledScenario] = bundled![
    "q1",
    "q1_desk",
    "q2",
    "q2_desk",
    "q3",
    "q3_alpha3",
    "q3_desk",
    "q4",
    "q4_desk",
    "q5",
    "q5_desk",
];

pub fn bundled_scenarios() -> &'static [BundledScenario] {
    BUNDLED
}

/// Parses a bundled scenario by name; a trailing `.json` is ignored.
pub fn bundled_scenario(name: &str) -> Result<ScenarioFile> {
    let key = name.strip_suffix(".json").unwrap_or(name);
    let b = BUNDLED
        .iter()
        .find(|b| b.name == key)
        .ok_or_else(|| Error::invalid(format!("no bundled scenario named {name:?}")))?;
    ScenarioFile::from_json(b.json)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_bundled_file_validates() {
        for b in bundled_scenarios() {
            let f = bundled_scenario(b.name).unwrap_or_else(|e| panic!("{}: {e}", b.name));
            assert_eq!(f.name, b.name);
        }
    }
}
