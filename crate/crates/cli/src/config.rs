//! Flat `key = value` configuration with per-command key tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::CliError;

/// One documented key. An empty default marks a required key.
#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

const fn key(name: &'static str, default: &'static str, help: &'static str) -> KeySpec {
    KeySpec { name, default, help }
}

pub const SLE_SAMPLE: &[KeySpec] = &[
    key("kappa", "4", "diffusivity κ > 0"),
    key("force_x", "none", "force-point positions, comma separated, or none"),
    key("force_rho", "none", "force-point weights, one per position"),
    key("t_max_capacity", "1", "time horizon in half-plane capacity units"),
    key("n_steps", "1000", "steps per path"),
    key("n_paths", "100", "ensemble size"),
    key("seed", "1", "master seed"),
    key("swallow_policy", "halt", "halt | drop-point"),
    key("adaptive", "true", "refine steps near small |X - W|"),
    key("route", "force-points", "force-points | harmonic-current"),
    key("formats", "csv,json", "any of csv, json, svg"),
];

pub const TRACE: &[KeySpec] = &[
    key("input_driving", "", "driving path file (.csv or .json)"),
    key("round_trip", "true", "re-extract the driving function and report the sup error"),
    key("formats", "csv,json", "any of csv, json, svg"),
];

pub const ZIP: &[KeySpec] = &[
    key("input_curve", "", "curve file: trace CSV (t,re,im) or trace JSON"),
    key("reference_driving", "none", "driving path to compare against, or none"),
    key("n_min", "100", "refine steps with capacity above t_total/n_min; 0 disables"),
    key("max_refinements", "8", "refinement passes"),
    key("decimate", "false", "midpoint-decimate the curve once first"),
    key("formats", "csv,json", "any of csv, json, svg"),
];

pub const GFF: &[KeySpec] = &[
    key("radius_sites", "64", "half-disk radius in lattice spacings"),
    key("g", "1", "coupling g > 0"),
    key("jump_x_sites", "0", "boundary jump positions on the real axis, comma separated"),
    key("jump_q", "1", "jump sizes in units of λ*, one per position"),
    key("kappa_lat", "auto", "lattice constant, or auto to calibrate"),
    key("fluctuations", "true", "false gives the harmonic part only"),
    key("n_samples", "1", "number of field samples"),
    key("seed", "1", "master seed"),
    key("formats", "csv,json", "any of csv, json, svg"),
];

pub const LEVELLINE: &[KeySpec] = &[
    key("radius_sites", "64", "half-disk radius in lattice spacings"),
    key("g", "1", "coupling g > 0"),
    key("jump_x_sites", "0", "boundary jump positions on the real axis, comma separated"),
    key("jump_q", "1", "jump sizes in units of λ*, one per position"),
    key("kappa_lat", "auto", "lattice constant, or auto to calibrate"),
    key("fluctuations", "true", "false gives the harmonic part only"),
    key("level", "auto", "level, or auto for the midpoint of the boundary values at 0"),
    key("n_samples", "10", "number of field samples"),
    key("seed", "1", "master seed"),
    key("formats", "csv,json", "any of csv, json, svg"),
];

pub const EXPERIMENT_KAPPA: &[KeySpec] = &[
    key("experiment", "", "levelline-kappa | drift-consistency | jump-universality"),
    key("q", "1", "boundary jump in units of λ*"),
    key("g", "1", "coupling g > 0"),
    key("radius_sites", "128", "half-disk radius in lattice spacings"),
    key("n_samples", "500", "number of field samples"),
    key("seed", "1", "master seed"),
    key("kappa_band_low", "3.5", "lower end of the accepted κ̂ band"),
    key("kappa_band_high", "4.5", "upper end of the accepted κ̂ band"),
    key("n_boot", "200", "bootstrap resamples for the κ̂ stderr"),
    key("fluctuations", "true", "false gives a degenerate, deterministic run"),
    key("formats", "json,csv", "any of csv, json, svg"),
];

pub const EXPERIMENT_DRIFT: &[KeySpec] = &[
    key("experiment", "", "levelline-kappa | drift-consistency | jump-universality"),
    key("q", "1/2", "charge at the origin, rational"),
    key("spectators", "2:1", "x:q pairs, comma separated; x in curve units where R/2 maps to 2"),
    key("g", "1", "coupling g > 0"),
    key("radius_sites", "128", "half-disk radius in lattice spacings"),
    key("n_samples", "500", "number of field samples"),
    key("seed", "1", "master seed"),
    key("formats", "json,csv", "any of csv, json, svg"),
];

pub const EXPERIMENT_JUMP: &[KeySpec] = &[
    key("experiment", "", "levelline-kappa | drift-consistency | jump-universality"),
    key("q_list", "1,0.5", "jump sizes in units of λ*"),
    key("radii_sites", "64,128", "radii in lattice spacings, at least two"),
    key("g", "1", "coupling g > 0"),
    key("n_samples", "200", "field samples per (q, R)"),
    key("seed", "1", "master seed"),
    key("probes_sites", "1,2,4,8", "probe distances from the line in lattice spacings"),
    key("n_waypoints", "10", "waypoints per line"),
    key("tolerance", "0.15", "relative band around λ* for the unit-charge check"),
    key("formats", "json,csv", "any of csv, json, svg"),
];

pub const CFT_M2: &[KeySpec] = &[
    key("identity", "", "m2 | deformed-null | perturbed | all"),
    key("q", "1", "charge, rational"),
    key("k", "2", "U(1) level, rational"),
    key("alpha", "auto", "background coupling, rational, or auto for 1/q - q"),
];

pub const CFT_DEFORMED: &[KeySpec] = &[
    key("identity", "", "m2 | deformed-null | perturbed | all"),
    key("q_i", "1", "charge of the curve-generating operator, rational"),
    key("x_i", "0", "its position, rational"),
    key("spectators", "1:1", "x:q pairs, comma separated, rational"),
    key("rho", "auto", "override ρ per spectator, comma separated rationals, or auto"),
    key("n_random", "10", "random rational evaluation points"),
    key("seed", "1", "seed for the evaluation points"),
];

pub const CFT_PERTURBED: &[KeySpec] = &[
    key("identity", "", "m2 | deformed-null | perturbed | all"),
    key("q", "1", "charge, rational"),
    key("s", "1", "s = 1 + 4πu > 0, rational"),
];

pub const CFT_ALL: &[KeySpec] = &[
    key("identity", "", "m2 | deformed-null | perturbed | all"),
    key("seed", "1", "seed for the evaluation points"),
];

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Validation(format!("config line {}: expected key = value, got {raw:?}", n + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>, CliError> {
    args.iter()
        .map(|a| {
            a.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| CliError::Validation(format!("expected key=value, got {a:?}")))
        })
        .collect()
}

fn suggestion(name: &str, schema: &[KeySpec]) -> Option<&'static str> {
    schema
        .iter()
        .map(|k| (strsim::levenshtein(name, k.name), k.name))
        .filter(|(d, k)| *d <= 2.max(k.len() / 3))
        .min()
        .map(|(_, k)| k)
}

/// Fully resolved parameters: every schema key present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Params {
    pub values: BTreeMap<String, String>,
}

impl Params {
    /// Applies `pairs` in order over the schema defaults; later pairs win.
    pub fn resolve(schema: &[KeySpec], pairs: &[(String, String)]) -> Result<Self, CliError> {
        let mut values: BTreeMap<String, String> =
            schema.iter().map(|k| (k.name.to_string(), k.default.to_string())).collect();
        for (k, v) in pairs {
            if !values.contains_key(k) {
                let hint = suggestion(k, schema).map(|s| format!("; did you mean {s:?}?")).unwrap_or_default();
                return Err(CliError::Validation(format!("unknown key {k:?}{hint}")));
            }
            values.insert(k.clone(), v.clone());
        }
        if let Some(k) = schema.iter().find(|k| values[k.name].is_empty()) {
            return Err(CliError::Validation(format!("missing required key {:?} ({})", k.name, k.help)));
        }
        Ok(Self { values })
    }

    pub fn str(&self, k: &str) -> &str {
        self.values.get(k).map(String::as_str).unwrap_or_else(|| panic!("key {k} not in schema"))
    }

    /// `None` for the values `auto` and `none`.
    pub fn opt(&self, k: &str) -> Option<&str> {
        match self.str(k) {
            "auto" | "none" => None,
            v => Some(v),
        }
    }

    fn bad(&self, k: &str, what: &str) -> CliError {
        CliError::Validation(format!("key {k:?}: cannot parse {:?} as {what}", self.str(k)))
    }

    pub fn f64(&self, k: &str) -> Result<f64, CliError> {
        self.str(k).parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| self.bad(k, "a number"))
    }

    pub fn usize(&self, k: &str) -> Result<usize, CliError> {
        self.str(k).parse().map_err(|_| self.bad(k, "a non-negative integer"))
    }

    pub fn u64(&self, k: &str) -> Result<u64, CliError> {
        self.str(k).parse().map_err(|_| self.bad(k, "a non-negative integer"))
    }

    pub fn bool(&self, k: &str) -> Result<bool, CliError> {
        match self.str(k) {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(self.bad(k, "true or false")),
        }
    }

    pub fn list(&self, k: &str) -> Vec<String> {
        match self.opt(k) {
            None => Vec::new(),
            Some(v) => v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
        }
    }

    pub fn f64_list(&self, k: &str) -> Result<Vec<f64>, CliError> {
        self.list(k)
            .iter()
            .map(|s| s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| self.bad(k, "a list of numbers")))
            .collect()
    }

    pub fn usize_list(&self, k: &str) -> Result<Vec<usize>, CliError> {
        self.list(k).iter().map(|s| s.parse().map_err(|_| self.bad(k, "a list of integers"))).collect()
    }

    /// `x:q` pairs kept as strings.
    pub fn pairs(&self, k: &str) -> Result<Vec<(String, String)>, CliError> {
        self.list(k)
            .iter()
            .map(|p| {
                p.split_once(':')
                    .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
                    .ok_or_else(|| self.bad(k, "x:q pairs"))
            })
            .collect()
    }

    pub fn formats(&self) -> Result<Formats, CliError> {
        let mut f = Formats::default();
        for s in self.list("formats") {
            match s.as_str() {
                "csv" => f.csv = true,
                "json" => f.json = true,
                "svg" => f.svg = true,
                _ => return Err(self.bad("formats", "a list of csv, json, svg")),
            }
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
}

pub fn describe(schema: &[KeySpec]) -> String {
    let mut s = String::new();
    for k in schema {
        let d = if k.default.is_empty() { "(required)" } else { k.default };
        let _ = writeln!(s, "{:<20} {:<12} {}", k.name, d, k.help);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(v: &[(&str, &str)]) -> Vec<(String, String)> {
        v.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn defaults_and_overrides() {
        let p = Params::resolve(SLE_SAMPLE, &pairs(&[("kappa", "2"), ("kappa", "3")])).unwrap();
        assert_eq!(p.f64("kappa").unwrap(), 3.0);
        assert_eq!(p.usize("n_paths").unwrap(), 100);
        assert!(p.list("force_x").is_empty());
    }

    #[test]
    fn unknown_key_gets_a_suggestion() {
        let err = Params::resolve(SLE_SAMPLE, &pairs(&[("kapa", "4")])).unwrap_err();
        assert!(err.to_string().contains("did you mean \"kappa\""), "{err}");
        let err = Params::resolve(SLE_SAMPLE, &pairs(&[("zzzzzz", "4")])).unwrap_err();
        assert!(!err.to_string().contains("did you mean"));
    }

    #[test]
    fn required_keys() {
        assert!(Params::resolve(TRACE, &[]).is_err());
        assert!(Params::resolve(TRACE, &pairs(&[("input_driving", "w.csv")])).is_ok());
    }

    #[test]
    fn config_text() {
        let kv = parse_config_text("# comment\nkappa = 2.5  # trailing\n\nn_paths=7\n").unwrap();
        assert_eq!(kv, pairs(&[("kappa", "2.5"), ("n_paths", "7")]));
        assert!(parse_config_text("kappa 2").is_err());
    }

    #[test]
    fn typed_getters_reject_garbage() {
        let p = Params::resolve(SLE_SAMPLE, &pairs(&[("n_steps", "-3"), ("formats", "csv,png")])).unwrap();
        assert!(p.usize("n_steps").is_err());
        assert!(p.formats().is_err());
        let p = Params::resolve(EXPERIMENT_DRIFT, &pairs(&[("experiment", "drift-consistency"), ("spectators", "2:1, -2:1")])).unwrap();
        assert_eq!(p.pairs("spectators").unwrap().len(), 2);
    }
}
