//! Backward Euler and BDF2 time integration of the condensed Biot system.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::BiotData;
use crate::system::{CondensedSystem, Discretization, Solution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[default]
    Euler,
    Bdf2,
}

impl Scheme {
    /// Weight `theta` in front of the unknown in `delta_t phi^n = theta (phi^n - ...) / tau`.
    pub fn theta(self) -> f64 {
        match self {
            Scheme::Euler => 1.0,
            Scheme::Bdf2 => 1.5,
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euler" | "be" => Ok(Scheme::Euler),
            "bdf2" => Ok(Scheme::Bdf2),
            _ => Err(Error::Config(format!("unknown time scheme '{s}'"))),
        }
    }
}

/// One time level with the cached `b_h(u, q_i)` vector.
#[derive(Debug, Clone)]
pub struct TimeLevel {
    pub t: f64,
    pub solution: Solution,
    pub coupling: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct TransientState {
    /// Index of `current`.
    pub n: usize,
    pub current: TimeLevel,
    /// Up to two earlier levels, most recent first.
    pub history: Vec<TimeLevel>,
    pub scheme: Scheme,
}

impl TransientState {
    pub fn t(&self) -> f64 {
        self.current.t
    }

    pub fn previous(&self) -> Option<&TimeLevel> {
        self.history.first()
    }

    /// Scheme that produced `current` (`None` for the initial level).
    pub fn last_step_scheme(&self) -> Option<Scheme> {
        match (self.n, self.scheme) {
            (0, _) => None,
            (1, _) | (_, Scheme::Euler) => Some(Scheme::Euler),
            _ => Some(Scheme::Bdf2),
        }
    }

    /// Weights `w` with `delta_t phi^n = sum_i w_i phi^{n-i}` for the last step.
    pub fn derivative_weights(&self, tau: f64) -> Vec<f64> {
        match self.last_step_scheme() {
            None => Vec::new(),
            Some(Scheme::Euler) => vec![1.0 / tau, -1.0 / tau],
            Some(Scheme::Bdf2) => vec![1.5 / tau, -2.0 / tau, 0.5 / tau],
        }
    }

    /// Applies the last step's backward difference to a per-level quantity.
    pub fn derivative<T>(&self, tau: f64, f: impl Fn(&TimeLevel) -> T) -> Option<T>
    where
        T: std::ops::Mul<f64, Output = T> + std::ops::Add<T, Output = T>,
    {
        let w = self.derivative_weights(tau);
        if w.is_empty() || self.history.len() + 1 < w.len() {
            return None;
        }
        let levels = std::iter::once(&self.current).chain(self.history.iter());
        levels.zip(w).map(|(l, wi)| f(l) * wi).reduce(|a, b| a + b)
    }

    fn advance(&self, level: TimeLevel) -> TransientState {
        let mut history = vec![self.current.clone()];
        history.extend(self.history.first().cloned());
        TransientState { n: self.n + 1, current: level, history, scheme: self.scheme }
    }
}

pub struct TimeStepper<'a> {
    pub disc: &'a Discretization,
    pub data: &'a dyn BiotData,
    pub tau: f64,
    pub scheme: Scheme,
    euler: CondensedSystem,
    bdf2: Option<CondensedSystem>,
}

impl<'a> TimeStepper<'a> {
    pub fn new(disc: &'a Discretization, data: &'a dyn BiotData, tau: f64, scheme: Scheme) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::Config(format!("time step must be positive, got {tau}")));
        }
        let euler = disc.condensed_system(tau, 1.0)?;
        let bdf2 = match scheme {
            Scheme::Bdf2 => Some(disc.condensed_system(tau, 1.5)?),
            Scheme::Euler => None,
        };
        Ok(Self { disc, data, tau, scheme, euler, bdf2 })
    }

    fn level(&self, t: f64, solution: Solution) -> TimeLevel {
        let coupling = self.disc.coupling_product(&solution);
        TimeLevel { t, solution, coupling }
    }

    pub fn initial_state(&self) -> Result<TransientState> {
        let sol = self.disc.initial_condition(self.data)?;
        Ok(TransientState { n: 0, current: self.level(0.0, sol), history: Vec::new(), scheme: self.scheme })
    }

    /// Advances with the configured scheme; BDF2 bootstraps its first step with Euler.
    pub fn step(&self, state: &TransientState) -> Result<TransientState> {
        match self.scheme {
            Scheme::Euler => self.step_euler(state),
            Scheme::Bdf2 if state.n == 0 => self.step_euler(state),
            Scheme::Bdf2 => self.step_bdf2(state),
        }
    }

    pub fn step_euler(&self, state: &TransientState) -> Result<TransientState> {
        let t = state.t() + self.tau;
        let disc = self.disc;
        let mech = disc.mechanical_data(self.data, t, false);
        let mut flow = disc.flow_source(self.data, t) * self.tau - &state.current.coupling;
        if disc.physics.c0 != 0.0 {
            flow += disc.mass_product(&state.current.solution.pressure) * disc.physics.c0;
        }
        let sol = disc.solve_condensed(&self.euler, &mech, &flow)?;
        Ok(state.advance(self.level(t, sol)))
    }

    /// BDF2 step; needs two previous levels.
    pub fn step_bdf2(&self, state: &TransientState) -> Result<TransientState> {
        let prev = state.previous().ok_or(Error::Bdf2NotBootstrapped(state.n + 1))?;
        let sys = match &self.bdf2 {
            Some(s) => s,
            None => return Err(Error::Config("stepper was built without BDF2".into())),
        };
        let t = state.t() + self.tau;
        let disc = self.disc;
        let mech = disc.mechanical_data(self.data, t, false);
        let mut flow = disc.flow_source(self.data, t) * (2.0 / 3.0 * self.tau) - &state.current.coupling * (4.0 / 3.0)
            + &prev.coupling * (1.0 / 3.0);
        if disc.physics.c0 != 0.0 {
            let hist = &state.current.solution.pressure * (4.0 / 3.0) - &prev.solution.pressure * (1.0 / 3.0);
            flow += disc.mass_product(&hist) * disc.physics.c0;
        }
        let sol = disc.solve_condensed(sys, &mech, &flow)?;
        Ok(state.advance(self.level(t, sol)))
    }

    /// Reduced matrix used at step `n` (for inspection).
    pub fn system_for_step(&self, n: usize) -> &CondensedSystem {
        match (&self.bdf2, n) {
            (Some(s), n) if n >= 2 => s,
            _ => &self.euler,
        }
    }

    /// Runs `steps` steps from the initial state, calling `observe` on every level including the first.
    pub fn run(
        &self,
        steps: usize,
        mut observe: impl FnMut(&TransientState) -> Result<()>,
    ) -> Result<TransientState> {
        let mut state = self.initial_state()?;
        observe(&state)?;
        for _ in 0..steps {
            state = self.step(&state)?;
            observe(&state)?;
        }
        Ok(state)
    }
}

/// Number of steps and adjusted step so that `n tau = t_final` with `tau <= tau_target`.
pub fn uniform_steps(t_final: f64, tau_target: f64) -> (usize, f64) {
    let n = (t_final / tau_target - 1e-9).ceil().max(1.0) as usize;
    (n, t_final / n as f64)
}

#[derive(Debug, Clone, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub energy: f64,
    pub pressure_integral: f64,
}

impl StepRecord {
    pub fn from_state(disc: &Discretization, state: &TransientState) -> Self {
        let sol = &state.current.solution;
        Self {
            step: state.n,
            t: state.t(),
            energy: disc.energy(sol),
            pressure_integral: disc.mean.dot(&sol.pressure),
        }
    }
}
