//! `key = value` run configuration files.
//!
//! Blank lines and `#` comments are ignored. Keys:
//!
//! | key | meaning | default |
//! |---|---|---|
//! | `metric` | `minkowski`, `flrw_linear`, `flrw_exp` | `minkowski` |
//! | `metric.k` | rate of `flrw_exp` | `1` |
//! | `L` | spatial period | `1` |
//! | `flux` (or `flux.type`) | `burgers`, `flrw_compatible`, `linear_advection`, `constant` | `burgers` |
//! | `flux.c` | speed or constant of the last two | |
//! | `u_min`, `u_max` | declared range of `u` | `-1`, `1` |
//! | `numerical_flux` | `lax_friedrichs` | `lax_friedrichs` |
//! | `D_safety` (or `flux.D_safety`) | multiple of the minimal diffusion constant | `1` |
//! | `quad_order` | Gauss–Legendre nodes per face | `5` |
//! | `nx` | cells per slice | |
//! | `nt` and `t_end` | uniform layers | |
//! | `t_end` and `cfl` | fewest uniform layers meeting the target | |
//! | `time_grid` | explicit hypersurface times | |
//! | `shear`, `shear.alternating` | sheared layers (needs `nt`, `t_end`) | |
//! | `mesh` | mesh file, relative to the config file | |
//! | `u0`, `u0.params` | initial data name and parameters | `constant 0` |
//! | `diagnostics` | per-step entropy and decomposition checks | `true` |
//! | `out` | output directory | `out` |
//! | `family`, `nx_list` | convergence studies only | |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::{FluxField, MetricChart};
use crate::scheme::{InitialData, MeshSource, RunConfig};

const KEYS: &[&str] = &[
    "metric",
    "metric.k",
    "L",
    "flux",
    "flux.type",
    "flux.c",
    "u_min",
    "u_max",
    "numerical_flux",
    "D_safety",
    "flux.D_safety",
    "quad_order",
    "nx",
    "nt",
    "t_end",
    "cfl",
    "time_grid",
    "shear",
    "shear.alternating",
    "mesh",
    "u0",
    "u0.params",
    "diagnostics",
    "out",
    "family",
    "nx_list",
];

/// Parsed `key = value` pairs, with the directory used to resolve relative paths.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigFile {
    pub entries: BTreeMap<String, String>,
    pub base: PathBuf,
    pub text: String,
}

impl ConfigFile {
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(Error::Config(format!("line {}: unknown key '{k}'", i + 1)));
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{k}'", i + 1)));
            }
        }
        Ok(Self {
            entries,
            base: base.to_path_buf(),
            text: text.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn real(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::Config(format!("{key}: '{v}' is not a finite number")))
            })
            .transpose()
    }

    pub fn int(&self, key: &str) -> Result<Option<usize>> {
        self.get(key)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| Error::Config(format!("{key}: '{v}' is not a non-negative integer")))
            })
            .transpose()
    }

    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key)
            .map(|v| {
                v.split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<f64>()
                            .ok()
                            .filter(|x| x.is_finite())
                            .ok_or_else(|| Error::Config(format!("{key}: '{s}' is not a finite number")))
                    })
                    .collect()
            })
            .transpose()
    }

    pub fn flag(&self, key: &str) -> Result<Option<bool>> {
        self.get(key)
            .map(|v| match v {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(Error::Config(format!("{key}: '{v}' is not a boolean"))),
            })
            .transpose()
    }

    pub fn out_dir(&self) -> PathBuf {
        self.base.join(self.get("out").unwrap_or("out"))
    }

    /// Everything except the mesh, which is built from [`mesh_source`](Self::mesh_source).
    pub fn run_config(&self) -> Result<RunConfig> {
        let period = self.real("L")?.unwrap_or(1.0);
        let k = self.real("metric.k")?;
        let metric = MetricChart::from_name(
            self.get("metric").unwrap_or("minkowski"),
            &k.into_iter().collect::<Vec<_>>(),
            period,
        )?;
        let range = (self.real("u_min")?.unwrap_or(-1.0), self.real("u_max")?.unwrap_or(1.0));
        let c = self.real("flux.c")?;
        let name = match (self.get("flux"), self.get("flux.type")) {
            (Some(_), Some(_)) => return Err(Error::Config("give only one of flux and flux.type".into())),
            (a, b) => a.or(b).unwrap_or("burgers"),
        };
        let flux = FluxField::from_name(name, &c.into_iter().collect::<Vec<_>>(), range)?;
        match self.get("numerical_flux").unwrap_or("lax_friedrichs") {
            "lax_friedrichs" => {}
            other => return Err(Error::Config(format!("unknown numerical flux '{other}'"))),
        }
        let d_safety = match (self.real("D_safety")?, self.real("flux.D_safety")?) {
            (Some(_), Some(_)) => return Err(Error::Config("give only one of D_safety and flux.D_safety".into())),
            (a, b) => a.or(b).unwrap_or(1.0),
        };
        if !(d_safety >= 1.0) {
            return Err(Error::Config(format!("D_safety must be at least 1, got {d_safety}")));
        }
        let quad_order = self.int("quad_order")?.unwrap_or(5);
        if quad_order == 0 {
            return Err(Error::Config("quad_order must be at least 1".into()));
        }
        let params = self.list("u0.params")?.unwrap_or_default();
        let u0 = InitialData::from_name(self.get("u0").unwrap_or("constant"), &params)?;
        let mut cfg = RunConfig::new(metric, flux, self.mesh_source(None)?, u0);
        cfg.d_safety = d_safety;
        cfg.quad_order = quad_order;
        cfg.diagnostics = self.flag("diagnostics")?.unwrap_or(true);
        Ok(cfg)
    }

    /// Mesh source for `nx`, or for the configured `nx` when `None`.
    pub fn mesh_source(&self, nx_override: Option<usize>) -> Result<MeshSource> {
        if let Some(m) = self.get("mesh") {
            return Ok(MeshSource::File(self.base.join(m)));
        }
        let nx = match nx_override {
            Some(n) => n,
            None => match self.int("nx")? {
                Some(n) => n,
                None if self.get("nx_list").is_some() => 2,
                None => return Err(Error::Config("missing 'nx' (or 'mesh')".into())),
            },
        };
        let t_end = self.real("t_end")?;
        let nt = self.int("nt")?;
        if let Some(times) = self.list("time_grid")? {
            return Ok(MeshSource::TimeGrid { nx, times });
        }
        let t_end = t_end.ok_or_else(|| Error::Config("missing 't_end'".into()))?;
        if let Some(shear) = self.real("shear")? {
            let nt = nt.ok_or_else(|| Error::Config("sheared meshes need 'nt'".into()))?;
            return Ok(MeshSource::Sheared {
                nx,
                nt,
                t_end,
                shear,
                alternating: self.flag("shear.alternating")?.unwrap_or(false),
            });
        }
        match (nt, self.real("cfl")?) {
            (Some(_), Some(_)) => Err(Error::Config("give either 'nt' or 'cfl', not both".into())),
            (Some(nt), None) => Ok(MeshSource::Uniform { nx, nt, t_end }),
            (None, Some(cfl)) => Ok(MeshSource::Cfl { nx, t_end, cfl }),
            (None, None) => Err(Error::Config("missing 'nt' or 'cfl'".into())),
        }
    }
}
