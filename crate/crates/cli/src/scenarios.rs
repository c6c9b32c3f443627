//! Scenario files shipped with the binary.

use crate::config::{ConfigError, ScenarioConfig};

pub const BUILTIN: [(&str, &str); 5] = [
    ("fig2_time_parity", include_str!("../scenarios/fig2_time_parity.toml")),
    ("fig2_spatial_parity", include_str!("../scenarios/fig2_spatial_parity.toml")),
    ("fig2_galilean_boost", include_str!("../scenarios/fig2_galilean_boost.toml")),
    ("fig3_ca40", include_str!("../scenarios/fig3_ca40.toml")),
    ("fig4_be9", include_str!("../scenarios/fig4_be9.toml")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    BUILTIN.iter().map(|(n, _)| *n)
}

pub fn source(name: &str) -> Option<&'static str> {
    BUILTIN.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn load(name: &str) -> Option<Result<ScenarioConfig, ConfigError>> {
    source(name).map(ScenarioConfig::from_toml)
}

/// One line per scenario: name and description.
pub fn listing() -> String {
    let mut out = String::new();
    for (name, text) in BUILTIN {
        let desc = ScenarioConfig::from_toml(text)
            .map(|c| c.description)
            .unwrap_or_else(|e| format!("(invalid: {e})"));
        out.push_str(&format!("{name:<22} {desc}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_configs_validate() {
        for (name, text) in BUILTIN {
            let cfg = ScenarioConfig::from_toml(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(cfg.name, name);
        }
    }

    #[test]
    fn listing_names_the_figures() {
        let l = listing();
        for n in ["fig2_time_parity", "fig3_ca40", "fig4_be9"] {
            assert!(l.contains(n));
        }
        assert!(load("nope").is_none());
    }
}
