//! Flat `key = value` configuration files.
//!
//! One key per line; `#` starts a comment; blank lines are ignored. Unknown
//! or repeated keys are errors. [`RunConfig::to_text`] writes every key, and
//! parsing that text gives back an identical config (floats are printed in
//! shortest round-trip form).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{RadmError, Result};
use crate::pulsatile::PulsatileCase;
use crate::solver::{CflPolicy, ModelParams, ShellForcing};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Nse,
    Voigt,
    Radm,
}

impl Model {
    pub fn as_str(&self) -> &'static str {
        match self {
            Model::Nse => "nse",
            Model::Voigt => "voigt",
            Model::Radm => "radm",
        }
    }
}

impl FromStr for Model {
    type Err = RadmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nse" => Ok(Model::Nse),
            "voigt" => Ok(Model::Voigt),
            "radm" => Ok(Model::Radm),
            _ => Err(RadmError::Config(format!("unknown model '{s}' (expected nse, voigt or radm)"))),
        }
    }
}

/// Parameters of a periodic-box run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: Model,
    pub n: usize,
    pub alpha: f64,
    pub nu: f64,
    pub deconv_order: u32,
    pub dt: f64,
    pub steps: u64,
    /// `(shell, target kinetic energy)`; empty disables forcing.
    pub forcing: Vec<(usize, f64)>,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Steps between checkpoints; 0 writes only the final one. Otherwise the
    /// initial state is checkpointed too.
    pub checkpoint_interval: u64,
    /// Steps between spectrum samples; 0 samples only the initial and final state.
    pub spectrum_interval: u64,
    /// Peak wavenumber of the initial spectrum.
    pub init_k0: f64,
    /// Kinetic energy of the initial field.
    pub init_energy: f64,
    pub cfl: f64,
    pub cfl_policy: CflPolicy,
    /// Inclusive shell ranges for slope fits.
    pub slope_bands: Vec<(usize, usize)>,
    /// Averages use samples from this fraction of the run onwards.
    pub average_start: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: Model::Radm,
            n: 32,
            alpha: 1.0 / 16.0,
            nu: 0.005,
            deconv_order: 2,
            dt: 0.01,
            steps: 100,
            forcing: ShellForcing::default().targets,
            seed: 1,
            output_dir: PathBuf::from("radm-out"),
            checkpoint_interval: 0,
            spectrum_interval: 0,
            init_k0: 3.0,
            init_energy: 0.5,
            cfl: 0.5,
            cfl_policy: CflPolicy::Warn,
            slope_bands: vec![(4, 8), (16, 21)],
            average_start: 0.5,
        }
    }
}

/// Parsed `key = value` pairs with line numbers, consumed key by key.
struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(RadmError::Config(format!("line {}: expected key = value", i + 1)));
            };
            let k = k.trim().to_string();
            if map.insert(k.clone(), (i + 1, v.trim().to_string())).is_some() {
                return Err(RadmError::Config(format!("line {}: duplicate key '{k}'", i + 1)));
            }
        }
        Ok(Self { map })
    }

    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.map.remove(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| RadmError::Config(format!("line {line}: bad value '{v}' for {key}"))),
        }
    }

    fn take_with<T>(&mut self, key: &str, f: impl Fn(&str) -> Option<T>) -> Result<Option<T>> {
        match self.map.remove(key) {
            None => Ok(None),
            Some((line, v)) => f(&v)
                .map(Some)
                .ok_or_else(|| RadmError::Config(format!("line {line}: bad value '{v}' for {key}"))),
        }
    }

    fn finish(self) -> Result<()> {
        match self.map.into_iter().next() {
            None => Ok(()),
            Some((k, (line, _))) => Err(RadmError::Config(format!("line {line}: unknown key '{k}'"))),
        }
    }
}

fn parse_forcing(s: &str) -> Option<Vec<(usize, f64)>> {
    if s == "none" {
        return Some(Vec::new());
    }
    s.split(',')
        .map(|item| {
            let (a, b) = item.trim().split_once(':')?;
            Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
        })
        .collect()
}

/// Parses `lo-hi[,lo-hi…]`.
pub fn parse_bands(s: &str) -> Option<Vec<(usize, usize)>> {
    s.split(',')
        .map(|item| {
            let (a, b) = item.trim().split_once('-')?;
            Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
        })
        .collect()
}

fn parse_policy(s: &str) -> Option<CflPolicy> {
    match s {
        "warn" => Some(CflPolicy::Warn),
        "abort" => Some(CflPolicy::Abort),
        _ => None,
    }
}

impl RunConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        let mut e = Entries::parse(text)?;
        let mut c = Self::default();
        c.model = e.take("model")?.unwrap_or(c.model);
        c.n = e.take("n")?.unwrap_or(c.n);
        let alpha: Option<f64> = e.take("alpha")?;
        let order: Option<u32> = e.take("deconv_order")?;
        c.nu = e.take("nu")?.unwrap_or(c.nu);
        c.dt = e.take("dt")?.unwrap_or(c.dt);
        c.steps = e.take("steps")?.unwrap_or(c.steps);
        c.forcing = e.take_with("forcing", parse_forcing)?.unwrap_or(c.forcing);
        c.seed = e.take("seed")?.unwrap_or(c.seed);
        c.output_dir = e.take("output_dir")?.unwrap_or(c.output_dir);
        c.checkpoint_interval = e.take("checkpoint_interval")?.unwrap_or(c.checkpoint_interval);
        c.spectrum_interval = e.take("spectrum_interval")?.unwrap_or(c.spectrum_interval);
        c.init_k0 = e.take("init_k0")?.unwrap_or(c.init_k0);
        c.init_energy = e.take("init_energy")?.unwrap_or(c.init_energy);
        c.cfl = e.take("cfl")?.unwrap_or(c.cfl);
        c.cfl_policy = e.take_with("cfl_policy", parse_policy)?.unwrap_or(c.cfl_policy);
        c.slope_bands = e.take_with("slope_bands", parse_bands)?.unwrap_or(c.slope_bands);
        c.average_start = e.take("average_start")?.unwrap_or(c.average_start);
        e.finish()?;

        // nse pins alpha = 0 and N = 0; voigt pins N = 0
        let (alpha_pin, order_pin) = match c.model {
            Model::Nse => (Some(0.0), Some(0)),
            Model::Voigt => (None, Some(0)),
            Model::Radm => (None, None),
        };
        c.alpha = pin("alpha", c.model, alpha, alpha_pin, c.alpha)?;
        c.deconv_order = pin("deconv_order", c.model, order, order_pin, c.deconv_order)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| RadmError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let forcing = if self.forcing.is_empty() {
            "none".to_string()
        } else {
            join(self.forcing.iter().map(|(k, e)| format!("{k}:{e:?}")))
        };
        let bands = join(self.slope_bands.iter().map(|(a, b)| format!("{a}-{b}")));
        let policy = match self.cfl_policy {
            CflPolicy::Warn => "warn",
            CflPolicy::Abort => "abort",
        };
        let _ = writeln!(s, "model = {}", self.model.as_str());
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "alpha = {:?}", self.alpha);
        let _ = writeln!(s, "nu = {:?}", self.nu);
        let _ = writeln!(s, "deconv_order = {}", self.deconv_order);
        let _ = writeln!(s, "dt = {:?}", self.dt);
        let _ = writeln!(s, "steps = {}", self.steps);
        let _ = writeln!(s, "forcing = {forcing}");
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "output_dir = {}", self.output_dir.display());
        let _ = writeln!(s, "checkpoint_interval = {}", self.checkpoint_interval);
        let _ = writeln!(s, "spectrum_interval = {}", self.spectrum_interval);
        let _ = writeln!(s, "init_k0 = {:?}", self.init_k0);
        let _ = writeln!(s, "init_energy = {:?}", self.init_energy);
        let _ = writeln!(s, "cfl = {:?}", self.cfl);
        let _ = writeln!(s, "cfl_policy = {policy}");
        let _ = writeln!(s, "slope_bands = {bands}");
        let _ = writeln!(s, "average_start = {:?}", self.average_start);
        s
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |e: RadmError| RadmError::Config(e.to_string());
        self.model_params().map_err(cfg)?;
        if self.model == Model::Nse && (self.alpha != 0.0 || self.deconv_order != 0) {
            return Err(RadmError::Config("model nse requires alpha = 0 and deconv_order = 0".into()));
        }
        if self.model == Model::Voigt && self.deconv_order != 0 {
            return Err(RadmError::Config("model voigt requires deconv_order = 0".into()));
        }
        if !(self.init_k0 > 0.0 && self.init_k0.is_finite()) || !(self.init_energy >= 0.0 && self.init_energy.is_finite()) {
            return Err(RadmError::Config("init_k0 must be > 0 and init_energy >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.average_start) {
            return Err(RadmError::Config("average_start must lie in [0, 1]".into()));
        }
        if self.slope_bands.iter().any(|&(a, b)| a < 1 || b <= a) {
            return Err(RadmError::Config("slope bands need 1 <= lo < hi".into()));
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(RadmError::Config("output_dir must not be empty".into()));
        }
        Ok(())
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        let mut p = ModelParams::new(self.n, self.alpha, self.deconv_order, self.nu, self.dt)?;
        if !self.forcing.is_empty() {
            p = p.with_forcing(ShellForcing {
                targets: self.forcing.clone(),
            });
        }
        p.cfl = self.cfl;
        p.cfl_policy = self.cfl_policy;
        p.validate()?;
        Ok(p)
    }
}

fn pin<T: PartialEq + Copy + std::fmt::Debug>(
    key: &str,
    model: Model,
    given: Option<T>,
    pinned: Option<T>,
    default: T,
) -> Result<T> {
    match (given, pinned) {
        (Some(g), Some(p)) if g != p => Err(RadmError::Config(format!(
            "model {} fixes {key} = {p:?}, but the file sets {g:?}",
            model.as_str()
        ))),
        (_, Some(p)) => Ok(p),
        (Some(g), None) => Ok(g),
        (None, None) => Ok(default),
    }
}

fn join(items: impl Iterator<Item = String>) -> String {
    items.collect::<Vec<_>>().join(",")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    Channel,
    Pipe,
}

/// A pulsatile profile request.
#[derive(Debug, Clone, PartialEq)]
pub struct PulsatileConfig {
    pub geometry: Geometry,
    pub case: PulsatileCase,
    /// Evaluation time (channel only).
    pub time: f64,
    pub points: usize,
}

impl PulsatileConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        let mut e = Entries::parse(text)?;
        let geometry = e
            .take_with("geometry", |s| match s {
                "channel" => Some(Geometry::Channel),
                "pipe" => Some(Geometry::Pipe),
                _ => None,
            })?
            .unwrap_or(Geometry::Channel);
        let radius = e.take("radius")?.unwrap_or(1.0);
        let omega = e.take("omega")?.unwrap_or(144.0);
        let nu = e.take("nu")?.unwrap_or(1.0);
        let alpha = e.take("alpha")?.unwrap_or(0.0);
        let time: f64 = e.take("time")?.unwrap_or(0.0);
        let points: usize = e.take("points")?.unwrap_or(201);
        e.finish()?;
        let case = PulsatileCase::new(radius, omega, nu, alpha).map_err(|e| RadmError::Config(e.to_string()))?;
        if points < 2 || !time.is_finite() {
            return Err(RadmError::Config("points must be >= 2 and time finite".into()));
        }
        Ok(Self {
            geometry,
            case,
            time,
            points,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| RadmError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_text(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_from_empty_file() {
        assert_eq!(RunConfig::from_text("# nothing\n\n").unwrap(), RunConfig::default());
    }

    #[test]
    fn parses_comments_and_values() {
        let c = RunConfig::from_text(
            "model = voigt  # trailing comment\nn=16\nalpha = 0.125\nforcing = 1:0.1, 3:0.2\nslope_bands = 2-5\n",
        )
        .unwrap();
        assert_eq!(c.model, Model::Voigt);
        assert_eq!(c.n, 16);
        assert_eq!(c.alpha, 0.125);
        assert_eq!(c.deconv_order, 0);
        assert_eq!(c.forcing, vec![(1, 0.1), (3, 0.2)]);
        assert_eq!(c.slope_bands, vec![(2, 5)]);
    }

    #[test]
    fn nse_pins_filter() {
        let c = RunConfig::from_text("model = nse\n").unwrap();
        assert_eq!((c.alpha, c.deconv_order), (0.0, 0));
        assert!(RunConfig::from_text("model = nse\nalpha = 0.1\n").is_err());
        assert!(RunConfig::from_text("model = voigt\ndeconv_order = 2\n").is_err());
        assert!(RunConfig::from_text("model = nse\nalpha = 0\ndeconv_order = 0\n").is_ok());
    }

    #[test]
    fn rejects_bad_input() {
        for bad in [
            "n = 7\n",
            "n = 16\nn = 32\n",
            "colour = red\n",
            "dt = -1\n",
            "dt = fast\n",
            "just words\n",
            "forcing = 1-0.2\n",
            "slope_bands = 5-3\n",
            "model = les\n",
            "average_start = 1.5\n",
        ] {
            assert!(matches!(RunConfig::from_text(bad), Err(RadmError::Config(_))), "{bad:?}");
        }
    }

    #[test]
    fn no_forcing() {
        let c = RunConfig::from_text("forcing = none\n").unwrap();
        assert!(c.forcing.is_empty());
        assert!(c.model_params().unwrap().forcing.is_none());
    }

    proptest! {
        #[test]
        fn text_round_trip(
            n in prop::sample::select(vec![4usize, 8, 16, 32, 64]),
            alpha in 0.0f64..2.0,
            nu in 0.0f64..1.0,
            order in 0u32..10,
            dt in 1e-6f64..1.0,
            steps in 0u64..1_000_000,
            seed in any::<u64>(),
            target in 0.0f64..1.0,
            cfl in 0.01f64..2.0,
            start in 0.0f64..=1.0,
        ) {
            let c = RunConfig {
                model: Model::Radm,
                n,
                alpha,
                nu,
                deconv_order: order,
                dt,
                steps,
                forcing: vec![(1, target), (2, target / 3.0)],
                seed,
                output_dir: PathBuf::from("out/dir"),
                checkpoint_interval: steps / 3,
                spectrum_interval: 7,
                init_k0: 2.5,
                init_energy: target,
                cfl,
                cfl_policy: CflPolicy::Abort,
                slope_bands: vec![(2, 4), (5, 9)],
                average_start: start,
            };
            let back = RunConfig::from_text(&c.to_text()).unwrap();
            prop_assert_eq!(back, c);
        }
    }

    #[test]
    fn pulsatile_case_file() {
        let p = PulsatileConfig::from_text("geometry = pipe\nalpha = 0.1\npoints = 11\n").unwrap();
        assert_eq!(p.geometry, Geometry::Pipe);
        assert_eq!(p.case.womersley(), 12.0);
        assert_eq!(p.points, 11);
        assert!(PulsatileConfig::from_text("nu = 0\n").is_err());
        assert!(PulsatileConfig::from_text("shape = pipe\n").is_err());
    }
}
