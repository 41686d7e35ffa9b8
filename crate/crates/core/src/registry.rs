//! Built-in example systems, compiled into the library from `systems/*.toml`.

use crate::config::{ConfigError, LoadedSystem, SystemConfig};

const SOURCES: [(&str, &str); 5] = [
    ("bouncing_ball", include_str!("../systems/bouncing_ball.toml")),
    ("timer", include_str!("../systems/timer.toml")),
    ("fta_scalar", include_str!("../systems/fta_scalar.toml")),
    ("firefly", include_str!("../systems/firefly.toml")),
    ("sgn_jump", include_str!("../systems/sgn_jump.toml")),
];

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    SOURCES.iter().map(|(name, _)| *name)
}

pub fn builtin_source(name: &str) -> Option<&'static str> {
    SOURCES.iter().find(|(n, _)| *n == name).map(|(_, src)| *src)
}

pub fn builtin_config(name: &str) -> Option<SystemConfig> {
    builtin_source(name).map(|src| SystemConfig::from_toml_str(src).expect("built-in config parses"))
}

pub fn builtin_examples() -> Vec<SystemConfig> {
    builtin_names().filter_map(builtin_config).collect()
}

/// Loads a built-in system with its default constants.
pub fn load_builtin(name: &str) -> Result<LoadedSystem, ConfigError> {
    builtin_config(name)
        .ok_or_else(|| {
            ConfigError::Invalid(format!(
                "unknown built-in system `{name}` (known: {})",
                builtin_names().collect::<Vec<_>>().join(", ")
            ))
        })?
        .load()
}
