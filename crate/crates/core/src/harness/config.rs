//! Declarative scenario files.

use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::{Pivot, Potential};
use crate::spectral::{self, EigenMethod, EigenSolution, Grid, MAX_POINTS};
use crate::trajectory::{self, Trajectory};
use crate::units::{to_natural_as, Dimension, PhysicalParams, Quantity, UnitSystem, CS133_MASS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    /// Harmonic trap with the atom's mass.
    Harmonic { omega: f64 },
    /// `depth` is an energy; `depth_recoils` counts recoil energies
    /// `hbar^2 (2 pi / wavelength)^2 / 2m` instead.
    Lattice {
        wavelength: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        depth: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        depth_recoils: Option<f64>,
    },
    /// Two-column `(x, U)` CSV.
    Tabulated { csv: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerLaw {
    /// `M = coefficient * t_f^mu`.
    pub mu: f64,
    pub coefficient: f64,
}

/// Exactly one of `peak`, `target_sensitivity`, `scaling` and `csv` must be
/// given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    pub t_f: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_sensitivity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<PowerLaw>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSpec {
    pub c: f64,
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default = "one")]
    pub hbar: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    Eigenstate { n: usize },
    /// `(re, im)` amplitudes on the lowest eigenstates; normalized on use.
    Superposition { coefficients: Vec<[f64; 2]> },
    /// Gaussian random amplitudes on the lowest `modes` eigenstates.
    RandomSuperposition { modes: usize, seed: u64 },
    /// Real Gaussian; `width` defaults to the trap's oscillator length.
    Gaussian {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        width: Option<f64>,
        #[serde(default)]
        offset: f64,
    },
    /// Lowest-band state of the tilted lattice localized on one well;
    /// wells sit at `site * wavelength / 2`.
    WellGround {
        #[serde(default)]
        site: i64,
    },
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState::Eigenstate { n: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_extent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oversample: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteppingSpec {
    /// Multiplies the default step ceiling; values above 1 are rejected.
    #[serde(default = "one")]
    pub dt_scale: f64,
    #[serde(default = "default_gate_tolerance")]
    pub gate_tolerance: f64,
    /// Steps between snapshot frames; 0 disables snapshots.
    #[serde(default)]
    pub snapshot_stride: usize,
    /// Length, in trap periods, of the spectral filter applied to the
    /// initial state before propagation; 0 disables it.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub settle_periods: f64,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

fn default_gate_tolerance() -> f64 {
    1e-5
}

impl Default for SteppingSpec {
    fn default() -> Self {
        Self {
            dt_scale: 1.0,
            gate_tolerance: default_gate_tolerance(),
            snapshot_stride: 0,
            settle_periods: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// Full two-arm propagation for every point.
    #[default]
    Tdse,
    /// Closed-form sensitivity only.
    Sensitivity,
}

/// Axes of a sweep; empty axes keep the scenario's own value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub mode: SweepMode,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub peaks: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub durations: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub forces: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pivots: Vec<Pivot>,
    /// Seeds for noisy pivots; one run per seed.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub seeds: Vec<u64>,
    /// Binomial shot count applied to swept populations; 0 keeps them exact.
    #[serde(default)]
    pub shots: u64,
    #[serde(default)]
    pub shot_seed: u64,
    /// Force search range for the estimator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_range: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
    /// Eigenstates written by `eigensolve`.
    #[serde(default = "default_states")]
    pub eigenstates: usize,
    /// Samples written by `export-waveform`.
    #[serde(default = "default_waveform_samples")]
    pub waveform_samples: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: None,
            format: OutputFormat::default(),
            eigenstates: default_states(),
            waveform_samples: default_waveform_samples(),
        }
    }
}

fn default_states() -> usize {
    10
}

fn default_waveform_samples() -> usize {
    1001
}

/// SI interpretation of every numeric input. `mass` is `"cs133"` or a
/// quantity such as `"2.2e-25 kg"`; `length_scale` fixes the natural
/// length unit, e.g. `"866 nm"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitsSpec {
    pub mass: String,
    pub length_scale: String,
}

impl UnitsSpec {
    pub fn system(&self) -> Result<UnitSystem> {
        let mass = if self.mass.trim().eq_ignore_ascii_case("cs133") {
            CS133_MASS
        } else {
            Quantity::parse_as(&self.mass, Dimension::MASS)?.value
        };
        let length = Quantity::parse_as(&self.length_scale, Dimension::LENGTH)?.value;
        UnitSystem::natural(mass, length)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default = "yes")]
    pub compensation: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub units: Option<UnitsSpec>,
    pub physics: PhysicsSpec,
    pub potential: PotentialSpec,
    pub trajectory: TrajectorySpec,
    #[serde(default)]
    pub pivot: Pivot,
    #[serde(default)]
    pub initial: InitialState,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub stepping: SteppingSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

fn yes() -> bool {
    true
}

/// Everything needed to propagate, in natural units.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub params: PhysicalParams,
    pub potential: Potential,
    pub trajectory: Trajectory,
    pub pivot: Pivot,
    pub grid: Grid,
    pub initial: Vec<C64>,
    pub eigen: Option<EigenSolution>,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut s = Self::from_toml(&text)?;
        // relative data paths are taken from the config's directory
        if let Some(dir) = path.parent() {
            s.resolve_paths(dir);
        }
        Ok(s)
    }

    fn resolve_paths(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        if let PotentialSpec::Tabulated { csv } = &mut self.potential {
            fix(csv);
        }
        if let Some(csv) = &mut self.trajectory.csv {
            fix(csv);
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let t = &self.trajectory;
        let shapes = [
            t.peak.is_some(),
            t.target_sensitivity.is_some(),
            t.scaling.is_some(),
            t.csv.is_some(),
        ]
        .iter()
        .filter(|&&b| b)
        .count();
        if shapes != 1 {
            return bad("trajectory needs exactly one of peak, target_sensitivity, scaling, csv".into());
        }
        if !(t.t_f > 0.0 && t.t_f.is_finite()) {
            return bad(format!("t_f must be positive, got {}", t.t_f));
        }
        if !(self.physics.mass > 0.0 && self.physics.hbar > 0.0) {
            return bad("mass and hbar must be positive".into());
        }
        if !self.physics.c.is_finite() {
            return bad("force must be finite".into());
        }
        if let PotentialSpec::Lattice {
            depth, depth_recoils, ..
        } = &self.potential
        {
            if depth.is_some() == depth_recoils.is_some() {
                return bad("lattice needs exactly one of depth, depth_recoils".into());
            }
        }
        let st = &self.stepping;
        if !(st.dt_scale > 0.0 && st.dt_scale <= 1.0) {
            return bad(format!("dt_scale must lie in (0, 1], got {}", st.dt_scale));
        }
        if !(st.gate_tolerance > 0.0) {
            return bad("gate tolerance must be positive".into());
        }
        if !(st.settle_periods >= 0.0 && st.settle_periods.is_finite()) {
            return bad(format!("settle_periods must be finite and non-negative, got {}", st.settle_periods));
        }
        if let InitialState::RandomSuperposition { modes: 0, .. } = self.initial {
            return bad("random superposition needs at least one mode".into());
        }
        if let InitialState::Superposition { coefficients } = &self.initial {
            if coefficients.iter().all(|c| c[0] == 0.0 && c[1] == 0.0) {
                return bad("superposition coefficients are all zero".into());
            }
        }
        if let Some(n) = self.grid.n_points {
            if !n.is_power_of_two() || n < 64 {
                return bad(format!("n_points must be a power of two >= 64, got {n}"));
            }
        }
        if let Some(u) = &self.units {
            u.system()?;
        }
        Ok(())
    }

    /// Copy with every input converted to natural units.
    pub fn natural(&self) -> Result<Scenario> {
        let Some(units) = &self.units else {
            return Ok(self.clone());
        };
        let sys = units.system()?;
        let conv = |v: f64, d: Dimension| to_natural_as(Quantity::new(v, d), d, &sys);
        let len = |v: f64| conv(v, Dimension::LENGTH);
        let time = |v: f64| conv(v, Dimension::TIME);
        let mut s = self.clone();
        s.units = None;
        s.physics = PhysicsSpec {
            c: conv(self.physics.c, Dimension::FORCE)?,
            mass: conv(sys.mass, Dimension::MASS)?,
            hbar: conv(sys.hbar, Dimension::ACTION)?,
        };
        s.potential = match &self.potential {
            PotentialSpec::Harmonic { omega } => PotentialSpec::Harmonic {
                omega: conv(*omega, Dimension::FREQUENCY)?,
            },
            PotentialSpec::Lattice {
                wavelength,
                depth,
                depth_recoils,
            } => PotentialSpec::Lattice {
                wavelength: len(*wavelength)?,
                depth: depth.map(|d| conv(d, Dimension::ENERGY)).transpose()?,
                depth_recoils: *depth_recoils,
            },
            PotentialSpec::Tabulated { .. } => {
                return Err(Error::Config(
                    "tabulated potentials must be given in natural units".into(),
                ))
            }
        };
        let t = &self.trajectory;
        if t.csv.is_some() {
            return Err(Error::Config(
                "tabulated trajectories must be given in natural units".into(),
            ));
        }
        // the power law is evaluated in SI before conversion
        let peak = match t.scaling {
            Some(p) => Some(len(p.coefficient * t.t_f.powf(p.mu))?),
            None => t.peak.map(len).transpose()?,
        };
        s.trajectory = TrajectorySpec {
            t_f: time(t.t_f)?,
            peak,
            target_sensitivity: t
                .target_sensitivity
                .map(|v| conv(v, Dimension::SENSITIVITY))
                .transpose()?,
            scaling: None,
            csv: None,
        };
        s.pivot = match self.pivot {
            Pivot::Constant { x0 } => Pivot::Constant { x0: len(x0)? },
            Pivot::LinearDrift { a, b } => Pivot::LinearDrift {
                a: len(a)?,
                b: conv(b, Dimension::VELOCITY)?,
            },
            Pivot::Noisy {
                mean,
                sigma,
                tau,
                seed,
            } => Pivot::Noisy {
                mean: len(mean)?,
                sigma: len(sigma)?,
                tau: time(tau)?,
                seed,
            },
            Pivot::SpinLocked => Pivot::SpinLocked,
        };
        if let InitialState::Gaussian { width, offset } = &self.initial {
            s.initial = InitialState::Gaussian {
                width: width.map(len).transpose()?,
                offset: len(*offset)?,
            };
        }
        s.grid.half_extent = self.grid.half_extent.map(len).transpose()?;
        Ok(s)
    }

    pub fn params(&self) -> Result<PhysicalParams> {
        let n = self.natural()?;
        PhysicalParams::new(n.physics.c, n.physics.mass, n.physics.hbar)
    }

    pub fn build_potential(&self) -> Result<Potential> {
        let n = self.natural()?;
        let p = n.physics;
        let u = match &n.potential {
            PotentialSpec::Harmonic { omega } => Potential::harmonic(*omega, p.mass),
            PotentialSpec::Lattice {
                wavelength,
                depth,
                depth_recoils,
            } => {
                let recoil = recoil_energy(*wavelength, p.mass, p.hbar);
                let d = match (depth, depth_recoils) {
                    (Some(d), None) => *d,
                    (None, Some(r)) => r * recoil,
                    _ => return Err(Error::Config("lattice depth is ambiguous".into())),
                };
                Potential::lattice(d, *wavelength)
            }
            PotentialSpec::Tabulated { csv } => Potential::load_csv(csv)?,
        };
        u.validate()?;
        Ok(u)
    }

    pub fn build_trajectory(&self) -> Result<Trajectory> {
        let n = self.natural()?;
        let t = &n.trajectory;
        if let Some(csv) = &t.csv {
            let traj = Trajectory::load_csv(csv)?;
            if (traj.duration() - t.t_f).abs() > 1e-9 * t.t_f {
                return Err(Error::Config(format!(
                    "waveform lasts {} but t_f is {}",
                    traj.duration(),
                    t.t_f
                )));
            }
            return Ok(traj);
        }
        let peak = match (t.peak, t.target_sensitivity, t.scaling) {
            (Some(m), _, _) => m,
            (_, Some(s0), _) => trajectory::peak_for_sensitivity(s0, t.t_f, n.physics.hbar)?,
            (_, _, Some(p)) => trajectory::power_law_peak(t.t_f, p.mu, p.coefficient),
            _ => return Err(Error::Config("trajectory shape missing".into())),
        };
        trajectory::design_polynomial(peak, t.t_f)
    }

    /// Solves the tilted trap, builds the grid and the shared initial state.
    pub fn prepare(&self) -> Result<Prepared> {
        let n = self.natural()?;
        let params = n.params()?;
        let potential = n.build_potential()?;
        let trajectory = n.build_trajectory()?;
        let width = match n.initial {
            InitialState::Gaussian { width, .. } => width,
            _ => None,
        };
        let grid = match (n.grid.n_points, n.grid.half_extent) {
            (Some(points), Some(half)) => Grid::centered(half, points)?,
            (points, half) => {
                let auto = spectral::build_grid(
                    &potential,
                    &trajectory,
                    &params,
                    width,
                    n.grid.oversample.unwrap_or(1.0),
                    MAX_POINTS,
                )?;
                let half = half.unwrap_or(0.5 * (auto.x_max() - auto.x_min()));
                Grid::centered(half, points.unwrap_or(auto.len()))?
            }
        };
        let modes = match &n.initial {
            InitialState::Eigenstate { n } => Some(n + 1),
            InitialState::Superposition { coefficients } => Some(coefficients.len()),
            InitialState::RandomSuperposition { modes, .. } => Some(*modes),
            InitialState::Gaussian { .. } | InitialState::WellGround { .. } => None,
        };
        let eigen = match modes {
            Some(k) => {
                let u = potential.eval_tilted(params.c, &grid.x())?;
                Some(spectral::solve_stationary_with(&grid, &u, &params, k, EigenMethod::Auto)?)
            }
            None => None,
        };
        let initial = match (&n.initial, &eigen) {
            (InitialState::Eigenstate { n }, Some(e)) => e.state(*n)?,
            (InitialState::Superposition { coefficients }, Some(e)) => {
                let amps: Vec<C64> = coefficients.iter().map(|c| C64::new(c[0], c[1])).collect();
                combine(&grid, e, &amps)
            }
            (InitialState::RandomSuperposition { modes, seed }, Some(e)) => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let amps: Vec<C64> = (0..*modes)
                    .map(|_| {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        C64::new(re, im)
                    })
                    .collect();
                combine(&grid, e, &amps)
            }
            (InitialState::Gaussian { width, offset }, _) => {
                let w = width.unwrap_or_else(|| potential.oscillator_length(params.mass, params.hbar));
                let mut psi: Vec<C64> = grid
                    .x()
                    .iter()
                    .map(|x| C64::new((-(x - offset).powi(2) / (2.0 * w * w)).exp(), 0.0))
                    .collect();
                grid.normalize(&mut psi);
                psi
            }
            (InitialState::WellGround { site }, _) => well_ground(&potential, &params, &grid, *site)?,
            _ => unreachable!("eigenbasis is solved for every eigenstate-based start"),
        };
        Ok(Prepared {
            params,
            potential,
            trajectory,
            pivot: n.pivot.clone(),
            grid,
            initial,
            eigen,
        })
    }

    /// Harmonic benchmark: `omega = m = hbar = 1`, canonical path with
    /// `M = 1`, `t_f = 10`, 1024 points over `[-16, 16)`.
    pub fn harmonic_benchmark(c: f64) -> Scenario {
        Scenario {
            name: "harmonic".into(),
            compensation: true,
            units: None,
            physics: PhysicsSpec { c, mass: 1.0, hbar: 1.0 },
            potential: PotentialSpec::Harmonic { omega: 1.0 },
            trajectory: TrajectorySpec {
                t_f: 10.0,
                peak: Some(1.0),
                target_sensitivity: None,
                scaling: None,
                csv: None,
            },
            pivot: Pivot::default(),
            initial: InitialState::default(),
            grid: GridSpec {
                n_points: Some(1024),
                half_extent: Some(16.0),
                oversample: None,
            },
            stepping: SteppingSpec::default(),
            sweep: None,
            output: OutputSpec::default(),
        }
    }

    /// Lattice benchmark: `lambda = 1`, depth 50 recoils, `m = hbar = 1`,
    /// transport by `lambda / 50` in `t_f = 1`, starting in the central
    /// well's lowest-band state on 512 points over `[-5.5, 5.5)`.
    pub fn lattice_benchmark(c: f64) -> Scenario {
        Scenario {
            name: "lattice".into(),
            compensation: true,
            units: None,
            physics: PhysicsSpec { c, mass: 1.0, hbar: 1.0 },
            potential: PotentialSpec::Lattice {
                wavelength: 1.0,
                depth: None,
                depth_recoils: Some(50.0),
            },
            trajectory: TrajectorySpec {
                t_f: 1.0,
                peak: Some(0.02),
                target_sensitivity: None,
                scaling: None,
                csv: None,
            },
            pivot: Pivot::default(),
            initial: InitialState::WellGround { site: 0 },
            grid: GridSpec {
                n_points: Some(512),
                half_extent: Some(5.5),
                oversample: None,
            },
            stepping: SteppingSpec {
                settle_periods: 10.0,
                ..SteppingSpec::default()
            },
            sweep: None,
            output: OutputSpec::default(),
        }
    }
}

fn well_ground(potential: &Potential, params: &PhysicalParams, grid: &Grid, site: i64) -> Result<Vec<C64>> {
    let Potential::Lattice { depth, wavelength } = *potential else {
        return Err(Error::Config("well_ground start needs a lattice potential".into()));
    };
    let center = site as f64 * wavelength / 2.0;
    if center - wavelength / 4.0 < grid.x_min() || center + wavelength / 4.0 > grid.x_max() {
        return Err(Error::Config(format!("lattice site {site} lies outside the grid")));
    }
    let u: Vec<f64> = grid
        .x()
        .iter()
        .map(|&x| {
            let well = if (x - center).abs() <= wavelength / 4.0 {
                depth * (std::f64::consts::TAU * x / wavelength).sin().powi(2)
            } else {
                depth
            };
            well - params.c * x
        })
        .collect();
    let trial = spectral::solve_stationary_with(grid, &u, params, 1, EigenMethod::Auto)?.state(0)?;
    let sites = ((grid.x_max() - grid.x_min()) / (wavelength / 2.0)).ceil() as usize;
    let full = potential.eval_tilted(params.c, &grid.x())?;
    let eigen = spectral::solve_stationary_with(grid, &full, params, sites + 2, EigenMethod::Auto)?;
    let overlap = |phi: &Vec<f64>| phi.iter().zip(&trial).map(|(a, b)| a * b.re).sum::<f64>().abs();
    let best = (0..eigen.eigenfunctions.len())
        .max_by(|&a, &b| overlap(&eigen.eigenfunctions[a]).total_cmp(&overlap(&eigen.eigenfunctions[b])))
        .expect("at least one eigenstate");
    let mut psi = eigen.state(best)?;
    grid.normalize(&mut psi);
    Ok(psi)
}

/// `hbar^2 k_L^2 / 2m` with `k_L = 2 pi / wavelength`.
pub fn recoil_energy(wavelength: f64, mass: f64, hbar: f64) -> f64 {
    let k = std::f64::consts::TAU / wavelength;
    hbar * hbar * k * k / (2.0 * mass)
}

fn combine(grid: &Grid, eigen: &EigenSolution, amps: &[C64]) -> Vec<C64> {
    let mut psi = vec![C64::new(0.0, 0.0); grid.len()];
    for (a, phi) in amps.iter().zip(&eigen.eigenfunctions) {
        psi.iter_mut().zip(phi).for_each(|(z, p)| *z += a * p);
    }
    grid.normalize(&mut psi);
    psi
}
