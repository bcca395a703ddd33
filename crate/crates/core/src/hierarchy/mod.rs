//! Matrix-element hierarchy for the emitter population.
//!
//! Every expectation value is reduced to single-time matrix elements of the
//! lowering operator between initial-state basis vectors (`|e,0⟩`, `|g,s⟩`,
//! `|g,n⟩`, ...). These obey delay differential equations in which the
//! feedback enters through the history one round trip `τ` back. The element
//! families, their couplings and the discretization are documented in
//! `docs/hierarchy.md` at the repository root.
//!
//! Integration uses an integrating-factor trapezoid (Heun) step: the linear
//! decay is integrated exactly and the remaining source and delay terms are
//! averaged between the right limit at `t_n` and the left limit at `t_{n+1}`.
//! Impulsive sources are applied as exact jumps after the step.

mod markov;
mod pulsed;
mod ring;
mod three;
mod vacuum;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pulse::Envelope;
use crate::timegrid::{AuxNodes, TimeGrid};

pub use markov::markov;
pub use ring::Ring;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// `|g,n⟩`: emitter in the ground state, `n` photons in the pulse.
    GroundWithPulse,
    /// `|e,0⟩`: excited emitter, empty waveguide.
    ExcitedVacuum,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Amplitude decay rate `Γ`.
    pub gamma: f64,
    /// Round-trip delay to the mirror and back.
    pub tau: f64,
    /// Feedback phase `ω₀τ`.
    pub phi: f64,
    /// Pure-dephasing rate.
    pub gamma_pd: f64,
    pub n_photons: usize,
    pub initial: InitialState,
    /// When false the emitter's own emission never returns; the pulse is still
    /// folded by the mirror through `f_τ`.
    pub feedback: bool,
}

impl SystemParams {
    pub fn excited(tau: f64, phi: f64) -> Self {
        Self {
            gamma: 1.0,
            tau,
            phi,
            gamma_pd: 0.0,
            n_photons: 0,
            initial: InitialState::ExcitedVacuum,
            feedback: true,
        }
    }

    pub fn pulsed(n_photons: usize, tau: f64, phi: f64) -> Self {
        Self {
            gamma: 1.0,
            tau,
            phi,
            gamma_pd: 0.0,
            n_photons,
            initial: InitialState::GroundWithPulse,
            feedback: true,
        }
    }

    pub fn with_dephasing(mut self, gamma_pd: f64) -> Self {
        self.gamma_pd = gamma_pd;
        self
    }

    pub fn without_feedback(mut self) -> Self {
        self.feedback = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return bad(format!("Gamma must be positive, got {}", self.gamma));
        }
        if !(self.tau >= 0.0) || !self.tau.is_finite() {
            return bad(format!("tau must be non-negative, got {}", self.tau));
        }
        if !self.phi.is_finite() {
            return bad("phi must be finite".into());
        }
        if !(self.gamma_pd >= 0.0) || !self.gamma_pd.is_finite() {
            return bad(format!("gammaPD must be non-negative, got {}", self.gamma_pd));
        }
        if self.n_photons > 3 {
            return Err(Error::UnsupportedExcitation(self.n_photons));
        }
        if self.initial == InitialState::ExcitedVacuum && self.n_photons != 0 {
            return bad("an excited emitter is only supported with an empty waveguide".into());
        }
        if self.gamma_pd > 0.0 && self.n_photons == 3 {
            return Err(Error::DephasingUnsupported);
        }
        Ok(())
    }
}

/// How the two-photon delayed coupling `∫ ⟨g,s|E|g,t₁⟩⟨g,t₁|σ(t-τ)|g,2⟩` is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    /// Uses the rank-one structure of `⟨g,s|E|g,t₁⟩` (O(N) work per step).
    #[default]
    Factored,
    /// Materializes the kernel row by row (O(N²) work per step).
    Dense,
}

/// Storage of the three-photon map `⟨g,t₁|σ|g,s,s'⟩`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapStorage {
    /// Keeps the source history and rebuilds contractions from the delay
    /// propagator (memory O(N³), work O(N⁴)).
    #[default]
    Propagator,
    /// Steps the full rank-3 array with a history ring (memory O(N⁴)).
    Direct,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Options {
    pub kernel: Kernel,
    pub map_storage: MapStorage,
    /// Evolve population elements separately even when `gammaPD = 0`.
    pub dephasing_form: bool,
    /// Refuse runs whose element store would exceed this many bytes.
    pub memory_limit: usize,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            kernel: Kernel::Factored,
            map_storage: MapStorage::Propagator,
            dephasing_form: false,
            memory_limit: 3 << 30,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Family {
    pub name: String,
    pub rank: usize,
    /// Stored complex values per time step.
    pub elements: usize,
}

/// Element-store layout and footprint, known before the run starts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoreReport {
    pub families: Vec<Family>,
    pub n_aux: usize,
    pub nodes: usize,
    pub elements_per_step: usize,
    pub bytes: usize,
    pub flops_per_step: f64,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub times: Vec<f64>,
    pub population: Vec<f64>,
    pub report: StoreReport,
}

fn uses_dephasing_form(params: &SystemParams, opts: &Options) -> bool {
    params.gamma_pd > 0.0 || opts.dephasing_form
}

pub(crate) fn build_nodes(grid: &TimeGrid, env: &Envelope) -> AuxNodes {
    let mut split = env.jumps();
    split.push(0.5 * grid.tau());
    AuxNodes::build(grid, &split)
}

fn check_delay(params: &SystemParams, grid: &TimeGrid) -> Result<()> {
    if (grid.tau() - params.tau).abs() > 1e-9 * params.tau.max(1.0) {
        return Err(Error::InvalidGrid(format!(
            "grid delay {} does not match tau {}",
            grid.tau(),
            params.tau
        )));
    }
    Ok(())
}

/// Describes the element families a run needs and their memory footprint.
pub fn init_elements(params: &SystemParams, env: &Envelope, grid: &TimeGrid, opts: &Options) -> Result<StoreReport> {
    params.validate()?;
    check_delay(params, grid)?;
    let nodes = build_nodes(grid, env);
    let m = nodes.len();
    let depth = 2 * grid.k_half_tau + 1;
    let n = grid.n_steps + 1;
    let deph = uses_dephasing_form(params, opts);
    let fam = |name: &str, rank: usize, elements: usize| Family { name: name.into(), rank, elements };
    let mut families = vec![];
    let mut bytes = 0usize;
    let mut flops = 0.0;
    let c = std::mem::size_of::<num_complex::Complex64>();
    match (params.initial, params.n_photons) {
        (InitialState::ExcitedVacuum, _) => {
            families.push(fam("<g,0|σ|e,0>", 0, 1));
            if deph {
                families.push(fam("<e,0|E|e,0>", 0, 1));
            }
            bytes += 2 * n * c;
            flops += 20.0;
        }
        (InitialState::GroundWithPulse, 0) => {}
        (InitialState::GroundWithPulse, 1) => {
            families.push(fam("<g,0|σ|g,1>", 0, 1));
            if deph {
                families.push(fam("<g,1|E|g,1>", 0, 1));
            }
            bytes += 2 * n * c;
            flops += 30.0;
        }
        (InitialState::GroundWithPulse, np) => {
            families.push(fam("<g,0|σ|e,0>", 0, 1));
            families.push(fam("<g,0|σ|g,s>", 1, m));
            families.push(fam("<g,0|σ|g,1>", 0, 1));
            families.push(fam("<e,0|σ|g,2>", 0, 1));
            families.push(fam("<g,s|σ|g,2>", 1, m));
            let hist_rows = if np == 3 { n } else { depth };
            bytes += 3 * n * c + hist_rows * m * c + depth * m * c;
            flops += 60.0 * m as f64;
            if deph {
                families.push(fam("<e,0|E|e,0>", 0, 1));
                families.push(fam("<e,0|E|g,s>", 1, m));
                families.push(fam("<g,s|E|g,s'>", 2, m * m));
                families.push(fam("<g,2|E|g,2>", 0, 1));
                // plus the zero-rate shadow of the coherent levels
                bytes += (m * m + m + 2) * c + 3 * n * c + 2 * depth * m * c;
                flops += 40.0 * (m * m) as f64;
            } else if opts.kernel == Kernel::Dense {
                flops += 30.0 * (m * m) as f64;
            }
            if np == 3 {
                let p = m * (m + 1) / 2;
                families.push(fam("<e,0|σ|e,s>~", 1, m));
                families.push(fam("<g,t|σ|e,s>~", 2, m * m));
                families.push(fam("<e,0|σ|g,s,s'>", 2, p));
                families.push(fam("<g,t|σ|g,s,s'>~", 3, m * p));
                families.push(fam("<e,s|σ|g,3>", 1, m));
                families.push(fam("<g,s,s'|σ|g,3>", 2, p));
                bytes += depth * (2 * m + m * m + 2 * p) * c;
                bytes += match opts.map_storage {
                    MapStorage::Propagator => 2 * n * p * c,
                    MapStorage::Direct => depth * m * p * c,
                };
                flops += 8.0 * 12.0 * (n as f64 / 2.0) * p as f64 + 40.0 * (m * m) as f64;
            }
        }
    }
    let elements_per_step = families.iter().map(|f| f.elements).sum();
    Ok(StoreReport { families, n_aux: grid.n_aux(), nodes: m, elements_per_step, bytes, flops_per_step: flops })
}

/// Integrates the hierarchy and returns the emitter population on the grid.
pub fn simulate(params: &SystemParams, env: &Envelope, grid: &TimeGrid, opts: &Options) -> Result<Solution> {
    let report = init_elements(params, env, grid, opts)?;
    if report.bytes > opts.memory_limit {
        return Err(Error::TooLarge(format!(
            "element store needs {} MiB, limit is {} MiB; use a coarser dt or a shorter horizon",
            report.bytes >> 20,
            opts.memory_limit >> 20
        )));
    }
    let feedback_needs_delay = params.feedback && grid.k_half_tau == 0;
    let deph = uses_dephasing_form(params, opts);
    let population = match (params.initial, params.n_photons) {
        (InitialState::ExcitedVacuum, _) => {
            if feedback_needs_delay {
                return Err(Error::InvalidParams("feedback requires tau > 0".into()));
            }
            vacuum::run(params, grid, deph)
        }
        (InitialState::GroundWithPulse, 0) => vec![0.0; grid.n_steps + 1],
        (InitialState::GroundWithPulse, n) => {
            if grid.k_half_tau == 0 {
                return Err(Error::InvalidParams("pulsed runs require tau > 0".into()));
            }
            pulsed::run(params, env, grid, opts, deph, n)?
        }
    };
    Ok(Solution { times: grid.times(), population, report })
}
