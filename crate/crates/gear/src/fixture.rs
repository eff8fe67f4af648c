//! Landscape files.

use std::fs;
use std::path::Path;

use gear_core::harness::LandscapeSpec;

use crate::error::{GearError, Result};

/// Name accepted in place of a path for the built-in ladder landscape.
pub const BUILTIN_LADDER: &str = "ladder";

pub fn parse_landscape(text: &str, origin: &Path) -> Result<LandscapeSpec> {
    let spec: LandscapeSpec = toml::from_str(text).map_err(|e| GearError::config(origin, e.to_string()))?;
    spec.validate().map_err(|e| GearError::config(origin, e.to_string()))?;
    Ok(spec)
}

pub fn load_landscape(path: &Path) -> Result<LandscapeSpec> {
    let text = fs::read_to_string(path).map_err(|e| GearError::io(path, e))?;
    parse_landscape(&text, path)
}

/// `ladder` means the built-in landscape; anything else is a TOML file.
pub fn resolve_landscape(reference: &str, base_dir: Option<&Path>) -> Result<LandscapeSpec> {
    if reference == BUILTIN_LADDER {
        return Ok(LandscapeSpec::ladder());
    }
    let path = Path::new(reference);
    match base_dir {
        Some(dir) if path.is_relative() => load_landscape(&dir.join(path)),
        _ => load_landscape(path),
    }
}

pub fn landscape_to_toml(spec: &LandscapeSpec) -> Result<String> {
    toml::to_string(spec).map_err(|e| GearError::Usage(format!("cannot encode landscape: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_toml() {
        let ladder = LandscapeSpec::ladder();
        let text = landscape_to_toml(&ladder).unwrap();
        assert_eq!(parse_landscape(&text, Path::new("mem")).unwrap(), ladder);
    }

    #[test]
    fn rejects_unknown_fields_and_bad_tables() {
        let mut text = landscape_to_toml(&LandscapeSpec::ladder()).unwrap();
        text = text.replacen("name = \"ladder\"", "name = \"ladder\"\ncolour = \"red\"", 1);
        assert!(matches!(parse_landscape(&text, Path::new("mem")), Err(GearError::Config { .. })));
        let mut bad = LandscapeSpec::ladder();
        bad.knobs[1].bpb.pop();
        let text = landscape_to_toml(&bad).unwrap();
        assert!(parse_landscape(&text, Path::new("mem")).is_err());
    }
}
