//! Scenario configs: flat INI-style text with section headers.
//!
//! ```text
//! # comment                 ; also a comment
//! [scenario]
//! name = heat_d1
//! [coefficients]
//! builtin = heat            # constant | heat | ornstein_uhlenbeck |
//!                           # polynomial_drift | perturbed_identity | table
//! [initial]
//! kind = gaussian
//! variance = 1
//! [grid]
//! dim = 1
//! radius = 10
//! cells = 2048
//! dt = 2.5e-4
//! t_end = 0.9
//! [solver]
//! scheme = crank_nicolson
//! [check.thm21]
//! tau = 0.9
//! ```
//!
//! Check sections may carry a disambiguating tag (`[check.lemma32.alt]`) so
//! one check can run with several parameter sets. All keys are validated;
//! unknown sections, keys or check names are parse errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use fb_core::checks::{CheckRegistry, Params};
use fb_core::coeff::{self, CoefficientField};
use fb_core::error::{Error, Result};
use fb_core::field::MassMode;
use fb_core::grid::SpaceTimeGrid;
use fb_core::solver::{Positivity, Scheme, SolverConfig};

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub out_dir: Option<PathBuf>,
    pub dump_csv: bool,
    pub coefficients: CoeffSpec,
    pub initial: InitialSpec,
    pub grid: GridSpec,
    pub solver: SolverSpec,
    /// (registry name, display label, params) in config order.
    pub checks: Vec<(String, String, Params)>,
}

#[derive(Debug, Clone)]
pub struct CoeffSpec {
    pub builtin: String,
    pub params: BTreeMap<String, String>,
}

#[derive(Debug, Clone)]
pub struct InitialSpec {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub mass_mode: MassMode,
}

#[derive(Debug, Clone)]
pub struct GridSpec {
    pub dim: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub cells: usize,
    pub dt: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone)]
pub struct SolverSpec {
    pub config: SolverConfig,
    pub diagnostics: bool,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

type Section = (String, Vec<(String, String)>);

fn parse_sections(text: &str) -> Result<Vec<Section>> {
    let mut sections: Vec<Section> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find(['#', ';']) {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| bad(format!("line {}: unterminated section header", lineno + 1)))?;
            sections.push((name.trim().to_string(), Vec::new()));
        } else if let Some((key, value)) = line.split_once('=') {
            let section = sections
                .last_mut()
                .ok_or_else(|| bad(format!("line {}: key before any section", lineno + 1)))?;
            section
                .1
                .push((key.trim().to_string(), value.trim().to_string()));
        } else {
            return Err(bad(format!("line {}: expected 'key = value'", lineno + 1)));
        }
    }
    Ok(sections)
}

struct Kv(BTreeMap<String, String>);

impl Kv {
    fn from(entries: &[(String, String)]) -> Self {
        Kv(entries.iter().cloned().collect())
    }

    fn finish(self, section: &str, known: &[&str]) -> Result<BTreeMap<String, String>> {
        for key in self.0.keys() {
            if !known.contains(&key.as_str()) {
                return Err(bad(format!(
                    "section [{section}]: unknown key '{key}' (known: {})",
                    known.join(", ")
                )));
            }
        }
        Ok(self.0)
    }
}

fn get_f64(map: &BTreeMap<String, String>, key: &str, default: f64) -> Result<f64> {
    match map.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| bad(format!("{key}: bad number '{v}'"))),
    }
}

fn get_f64_required(map: &BTreeMap<String, String>, section: &str, key: &str) -> Result<f64> {
    map.get(key)
        .ok_or_else(|| bad(format!("section [{section}] needs '{key}'")))?
        .parse()
        .map_err(|_| bad(format!("{key}: not a number")))
}

fn get_list_f64(map: &BTreeMap<String, String>, key: &str, default: &[f64]) -> Result<Vec<f64>> {
    match map.get(key) {
        None => Ok(default.to_vec()),
        Some(v) => v
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| bad(format!("{key}: bad list entry '{s}'")))
            })
            .collect(),
    }
}

impl Scenario {
    pub fn from_ini(text: &str, registry: &CheckRegistry) -> Result<Scenario> {
        let sections = parse_sections(text)?;
        let mut name = String::from("scenario");
        let mut out_dir = None;
        let mut dump_csv = false;
        let mut coefficients = None;
        let mut initial = None;
        let mut grid: Option<GridSpec> = None;
        let mut solver = SolverSpec {
            config: SolverConfig::default(),
            diagnostics: false,
        };
        let mut checks: Vec<(String, String, Params)> = Vec::new();

        for (section, entries) in &sections {
            match section.as_str() {
                "scenario" => {
                    let kv = Kv::from(entries).finish(section, &["name", "out", "dump_csv"])?;
                    if let Some(n) = kv.get("name") {
                        name = n.clone();
                    }
                    out_dir = kv.get("out").map(PathBuf::from);
                    dump_csv = matches!(kv.get("dump_csv").map(String::as_str), Some("true"));
                }
                "coefficients" => {
                    let mut kv: BTreeMap<String, String> = entries.iter().cloned().collect();
                    let builtin = kv
                        .remove("builtin")
                        .ok_or_else(|| bad("section [coefficients] needs 'builtin'"))?;
                    coefficients = Some(CoeffSpec {
                        builtin,
                        params: kv,
                    });
                }
                "initial" => {
                    let kv = Kv::from(entries).finish(
                        section,
                        &[
                            "kind",
                            "mean",
                            "variance",
                            "mass_mode",
                            "mass_tol",
                            "mass_cap",
                        ],
                    )?;
                    match kv.get("kind").map(String::as_str) {
                        None | Some("gaussian") => {}
                        Some(other) => return Err(bad(format!("unknown initial kind '{other}'"))),
                    }
                    let mass_mode = match kv.get("mass_mode").map(String::as_str) {
                        None | Some("probability") => MassMode::Probability {
                            tol: get_f64(&kv, "mass_tol", 1e-3)?,
                        },
                        Some("bounded") => MassMode::Bounded {
                            cap: get_f64(&kv, "mass_cap", 10.0)?,
                        },
                        Some(other) => return Err(bad(format!("unknown mass_mode '{other}'"))),
                    };
                    initial = Some((
                        get_list_f64(&kv, "mean", &[0.0])?,
                        get_list_f64(&kv, "variance", &[1.0])?,
                        mass_mode,
                    ));
                }
                "grid" => {
                    let kv = Kv::from(entries).finish(
                        section,
                        &["dim", "radius", "lo", "hi", "cells", "dt", "t_end"],
                    )?;
                    let dim = get_f64(&kv, "dim", 1.0)? as usize;
                    let (lo, hi) = if kv.contains_key("radius") {
                        let r = get_f64_required(&kv, section, "radius")?;
                        (vec![-r; dim], vec![r; dim])
                    } else {
                        (get_list_f64(&kv, "lo", &[])?, get_list_f64(&kv, "hi", &[])?)
                    };
                    if lo.len() != dim || hi.len() != dim {
                        return Err(bad("grid box does not match dim"));
                    }
                    grid = Some(GridSpec {
                        dim,
                        lo,
                        hi,
                        cells: get_f64_required(&kv, section, "cells")? as usize,
                        dt: get_f64_required(&kv, section, "dt")?,
                        t_end: get_f64_required(&kv, section, "t_end")?,
                    });
                }
                "solver" => {
                    let kv = Kv::from(entries).finish(
                        section,
                        &["scheme", "cfl_safety", "positivity", "diagnostics"],
                    )?;
                    let scheme = match kv.get("scheme").map(String::as_str) {
                        None | Some("crank_nicolson") => Scheme::CrankNicolson,
                        Some("explicit") => Scheme::Explicit,
                        Some(other) => return Err(bad(format!("unknown scheme '{other}'"))),
                    };
                    let positivity = match kv.get("positivity").map(String::as_str) {
                        None | Some("clip_renormalize") => Positivity::ClipRenormalize,
                        Some("off") => Positivity::Off,
                        Some(other) => return Err(bad(format!("unknown positivity '{other}'"))),
                    };
                    let cfl_safety = get_f64(&kv, "cfl_safety", 0.9)?;
                    if !(cfl_safety > 0.0 && cfl_safety <= 1.0) {
                        return Err(bad("cfl_safety must be in (0, 1]"));
                    }
                    solver.config.scheme = scheme;
                    solver.config.positivity = positivity;
                    solver.config.cfl_safety = cfl_safety;
                    solver.diagnostics =
                        matches!(kv.get("diagnostics").map(String::as_str), Some("true"));
                }
                other => {
                    if let Some(rest) = other.strip_prefix("check.") {
                        let check_name = rest.split('.').next().unwrap_or(rest).to_string();
                        let params: Params = entries.iter().cloned().collect();
                        if registry.get(&check_name).is_none() {
                            return Err(bad(format!(
                                "unknown check '{check_name}' (known: {})",
                                registry.names().join(", ")
                            )));
                        }
                        checks.push((check_name, rest.to_string(), params));
                    } else {
                        return Err(bad(format!("unknown section [{other}]")));
                    }
                }
            }
        }

        let grid = grid.ok_or_else(|| bad("missing [grid] section"))?;
        let coefficients = coefficients.ok_or_else(|| bad("missing [coefficients] section"))?;
        let (mean, variance, mass_mode) = initial.unwrap_or((
            vec![0.0; grid.dim],
            vec![1.0; grid.dim],
            MassMode::Probability { tol: 1e-3 },
        ));
        let expand = |v: Vec<f64>| -> Result<Vec<f64>> {
            if v.len() == grid.dim {
                Ok(v)
            } else if v.len() == 1 {
                Ok(vec![v[0]; grid.dim])
            } else {
                Err(bad("initial mean/variance length must be 1 or dim"))
            }
        };
        let initial = InitialSpec {
            mean: expand(mean)?,
            variance: expand(variance)?,
            mass_mode,
        };
        solver.config.mass_mode = initial.mass_mode;

        let mut scenario = Scenario {
            name,
            out_dir,
            dump_csv,
            coefficients,
            initial,
            grid,
            solver,
            checks,
        };
        scenario.validate(registry)?;
        Ok(scenario)
    }

    fn validate(&mut self, registry: &CheckRegistry) -> Result<()> {
        self.build_grid()?;
        self.build_coefficients()?;
        let mut seen = std::collections::BTreeSet::new();
        for (check_name, label, params) in &self.checks {
            if !seen.insert(label.clone()) {
                return Err(bad(format!("duplicate check section [check.{label}]")));
            }
            registry
                .get(check_name)
                .expect("validated above")
                .validate(self.grid.dim, params)
                .map_err(|e| bad(format!("check {label}: {e}")))?;
        }
        Ok(())
    }

    pub fn build_grid(&self) -> Result<Arc<SpaceTimeGrid>> {
        let steps_f = self.grid.t_end / self.grid.dt;
        let steps = steps_f.round() as usize;
        if steps == 0 || (steps_f - steps as f64).abs() > 1e-6 {
            return Err(bad(format!(
                "t_end = {} is not an integer multiple of dt = {}",
                self.grid.t_end, self.grid.dt
            )));
        }
        Ok(Arc::new(SpaceTimeGrid::new(
            self.grid.lo.clone(),
            self.grid.hi.clone(),
            vec![self.grid.cells; self.grid.dim],
            self.grid.dt,
            steps,
        )?))
    }

    pub fn build_coefficients(&self) -> Result<CoefficientField> {
        let spec = &self.coefficients;
        let dim = self.grid.dim;
        let p = &spec.params;
        let known_meta = ["alpha", "lambda", "m_bound"];
        let check_keys = |known: &[&str]| -> Result<()> {
            for key in p.keys() {
                if !known.contains(&key.as_str()) && !known_meta.contains(&key.as_str()) {
                    return Err(bad(format!(
                        "coefficients '{}': unknown key '{key}'",
                        spec.builtin
                    )));
                }
            }
            Ok(())
        };
        let mut field = match spec.builtin.as_str() {
            "constant" => {
                check_keys(&["a", "a_diag", "b"])?;
                let diag = if p.contains_key("a_diag") {
                    get_list_f64(p, "a_diag", &[])?
                } else {
                    vec![get_f64(p, "a", 1.0)?; dim]
                };
                if diag.len() != dim {
                    return Err(bad("a_diag length must equal dim"));
                }
                let b = {
                    let v = get_list_f64(p, "b", &[0.0])?;
                    if v.len() == dim {
                        v
                    } else if v.len() == 1 {
                        vec![v[0]; dim]
                    } else {
                        return Err(bad("b length must be 1 or dim"));
                    }
                };
                coeff::constant(dim, diag, b)
            }
            "heat" => {
                check_keys(&["a"])?;
                let a = get_f64(p, "a", 0.5)?;
                coeff::constant(dim, vec![a; dim], vec![0.0; dim]).with_name("heat")
            }
            "ornstein_uhlenbeck" => {
                check_keys(&[])?;
                coeff::ornstein_uhlenbeck(dim)
            }
            "polynomial_drift" => {
                check_keys(&["a", "c1", "c3"])?;
                coeff::polynomial_drift(
                    dim,
                    get_f64(p, "a", 1.0)?,
                    get_f64(p, "c1", -1.0)?,
                    get_f64(p, "c3", 0.0)?,
                )
            }
            "perturbed_identity" => {
                check_keys(&["eta", "omega"])?;
                coeff::perturbed_identity(dim, get_f64(p, "eta", 0.5)?, get_f64(p, "omega", 1.0)?)
            }
            "table" => {
                check_keys(&["path"])?;
                let path = p
                    .get("path")
                    .ok_or_else(|| bad("table coefficients need 'path'"))?;
                let field = coeff::from_table(Path::new(path))?;
                if field.dim() != dim {
                    return Err(bad(format!(
                        "table dimension {} does not match grid dim {dim}",
                        field.dim()
                    )));
                }
                field
            }
            other => {
                return Err(bad(format!(
                    "unknown coefficient builtin '{other}' (constant, heat, ornstein_uhlenbeck, polynomial_drift, perturbed_identity, table)"
                )))
            }
        };
        // declared metadata overrides
        if p.contains_key("alpha") {
            field.alpha = Some(get_f64_required(p, "coefficients", "alpha")?);
        }
        if p.contains_key("lambda") {
            field.lambda = Some(get_f64_required(p, "coefficients", "lambda")?);
        }
        if p.contains_key("m_bound") {
            field.m_bound = Some(get_f64_required(p, "coefficients", "m_bound")?);
        }
        Ok(field)
    }

    /// Sampled initial density slice.
    pub fn build_initial(&self, grid: &SpaceTimeGrid) -> Vec<f64> {
        let dim = grid.dim();
        let mean = &self.initial.mean;
        let var = &self.initial.variance;
        (0..grid.node_count())
            .map(|i| {
                let pnt = grid.node_point(i);
                let mut v = 1.0;
                for a in 0..dim {
                    let z = pnt[a] - mean[a];
                    v *= (-z * z / (2.0 * var[a])).exp()
                        / (2.0 * std::f64::consts::PI * var[a]).sqrt();
                }
                v
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn registry() -> CheckRegistry {
        CheckRegistry::builtin()
    }

    const MINIMAL: &str = r#"
[coefficients]
builtin = heat
[grid]
dim = 1
radius = 8
cells = 64
dt = 0.01
t_end = 0.1
"#;

    #[test]
    fn minimal_config_parses() {
        let s = Scenario::from_ini(MINIMAL, &registry()).unwrap();
        assert_eq!(s.grid.cells, 64);
        let grid = s.build_grid().unwrap();
        assert_eq!(grid.steps(), 10);
        let c = s.build_coefficients().unwrap();
        assert_eq!(c.name(), "heat");
        let rho0 = s.build_initial(&grid);
        assert_eq!(rho0.len(), grid.node_count());
    }

    #[test]
    fn comments_and_tags_parse() {
        let text = format!(
            "{MINIMAL}\n[check.lemma32]\nk = 1 ; inline\ns = 4\n[check.lemma32.alt]\nk = 2\ns = 4 # other\n"
        );
        let s = Scenario::from_ini(&text, &registry()).unwrap();
        assert_eq!(s.checks.len(), 2);
        assert_eq!(s.checks[1].1, "lemma32.alt");
    }

    #[test]
    fn rejects_unknown_sections_keys_checks() {
        assert!(Scenario::from_ini("[bogus]\nx = 1\n", &registry()).is_err());
        let bad_key = format!("{MINIMAL}\n[grid2]\n");
        assert!(Scenario::from_ini(&bad_key, &registry()).is_err());
        let bad_check = format!("{MINIMAL}\n[check.nope]\n");
        assert!(Scenario::from_ini(&bad_check, &registry()).is_err());
        let dup = format!("{MINIMAL}\n[check.thm21]\n[check.thm21]\n");
        assert!(Scenario::from_ini(&dup, &registry()).is_err());
    }

    #[test]
    fn rejects_invalid_check_params_at_parse() {
        // beta = d + 1 for the boundedness ladder: parse-stage rejection
        let text = format!("{MINIMAL}\n[check.ladder32]\nd = 3\nbeta = 4\n");
        let err = Scenario::from_ini(&text, &registry()).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn grid_must_divide_evenly() {
        let text = MINIMAL.replace("t_end = 0.1", "t_end = 0.105");
        let s = Scenario::from_ini(&text, &registry());
        assert!(s.is_err());
    }
}
