//! Reconstruction tunables.

use crate::error::{Error, Result};
use crate::geometry::{Dim, Dimension};
use crate::samples::SampleKind;

/// Which relaxation of the sphere constraints the flow enforces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    Signed,
    /// Orientation is ignored; every sample pulls toward its nearer tangent point.
    Unsigned,
    /// Spheres at or above the clamp radius only forbid intersection. `None`
    /// takes the radius from the sample set.
    Clamped { sigma: Option<f64> },
    /// Negative spheres only forbid intersection.
    SweptVolume,
}

impl Variant {
    /// The variant matching how a sample set was produced.
    pub fn for_kind(kind: SampleKind) -> Self {
        match kind {
            SampleKind::Signed => Variant::Signed,
            SampleKind::Unsigned => Variant::Unsigned,
            SampleKind::Clamped(sigma) => Variant::Clamped { sigma: Some(sigma) },
            SampleKind::ConservativeInterior => Variant::SweptVolume,
        }
    }

    /// Clamp radius in effect, falling back to the sample set's own.
    pub fn clamp_radius(&self, kind: SampleKind) -> Result<Option<f64>> {
        match *self {
            Variant::Clamped { sigma } => {
                let sigma = sigma
                    .or(match kind {
                        SampleKind::Clamped(s) => Some(s),
                        _ => None,
                    })
                    .ok_or_else(|| Error::Config("clamped mode needs a clamp radius".into()))?;
                if !(sigma > 0.0) {
                    return Err(Error::Config(format!("clamp radius must be positive, got {sigma}")));
                }
                Ok(Some(sigma))
            }
            _ => Ok(None),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionConfig {
    pub tau_min: f64,
    pub tau_max: f64,
    /// Weight of the `||P||^2` term in the step-size heuristic.
    pub armijo_c: f64,
    pub epsilon: f64,
    /// `None`: mean nearest-neighbour distance between sample points.
    pub h_min: Option<f64>,
    /// `None`: `max(8 h_min, bbox_diagonal / 10)`.
    pub h_initial: Option<f64>,
    pub batch_size: usize,
    pub coarse_window: usize,
    pub final_window: usize,
    pub conv_tol_factor: f64,
    pub variant: Variant,
    pub rng_seed: u64,
    pub remesh_iterations_per_step: usize,
    /// Icosphere subdivisions (3D) or circle segments (2D) of the default start surface.
    pub init_resolution: u32,
    /// Hard cap so a stage that oscillates still terminates.
    pub max_iterations_per_stage: usize,
    /// Any coordinate beyond this magnitude aborts the run.
    pub watchdog_bound: f64,
    /// Reject start surfaces that leave negative samples outside.
    pub require_enclosure: bool,
}

impl ReconstructionConfig {
    /// Defaults for a `D`-dimensional reconstruction.
    pub fn for_dim<const D: usize>() -> Self
    where
        Dim<D>: Dimension<D>,
    {
        Self {
            tau_min: 1e-6,
            tau_max: 50.0,
            armijo_c: 0.01,
            epsilon: Dim::<D>::default_epsilon(),
            h_min: None,
            h_initial: None,
            batch_size: 20_000,
            coarse_window: 10,
            final_window: 100,
            conv_tol_factor: 1e-3,
            variant: Variant::Signed,
            rng_seed: 0,
            remesh_iterations_per_step: 1,
            init_resolution: if D == 2 { 64 } else { 2 },
            max_iterations_per_stage: 2_000,
            watchdog_bound: 1e3,
            require_enclosure: true,
        }
    }

    pub fn convergence_tolerance(&self) -> f64 {
        self.conv_tol_factor * self.epsilon
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(what.to_string()));
        if !(self.tau_min > 0.0 && self.tau_min <= self.tau_max) {
            return bad("need 0 < tau_min <= tau_max");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if let Some(h) = self.h_min {
            if !(h > 0.0) {
                return bad("h_min must be positive");
            }
            if let Some(h0) = self.h_initial {
                if h0 < h {
                    return bad("h_initial must be at least h_min");
                }
            }
        }
        if let Some(h0) = self.h_initial {
            if !(h0 > 0.0) {
                return bad("h_initial must be positive");
            }
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.coarse_window == 0 || self.final_window == 0 {
            return bad("convergence windows must be at least 1");
        }
        if self.remesh_iterations_per_step == 0 {
            return bad("remesh_iterations_per_step must be at least 1");
        }
        if self.max_iterations_per_stage == 0 {
            return bad("max_iterations_per_stage must be at least 1");
        }
        Ok(())
    }
}
