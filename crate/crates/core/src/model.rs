//! Bundles a lattice, a potential and the evaluation conventions.

use serde::{Deserialize, Serialize};

use crate::lattice::{dispersion, free_energy, LatticeContext, Momentum, Normalization};
use crate::mollifier::KroneckerConvention;
use crate::potential::Potential;
use crate::error::{Error, Result};

/// Dispersion used inside the energy mollifier.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DispersionMode {
    /// `E_p` with the mean-field correction.
    #[default]
    Full,
    /// `e(p)` only, for ablations.
    Free,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conventions {
    pub normalization: Normalization,
    pub kronecker: KroneckerConvention,
    pub dispersion: DispersionMode,
}

/// Energy factor in the collision and pair operators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Energy {
    /// `δ_t(ΔE)` at coupling `λ`.
    Mollified { t: f64, lambda: f64 },
    /// `κ δ_{Δe, 0}` on the free energy shell.
    Sharp,
}

impl Energy {
    pub fn mollified(t: f64, lambda: f64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::NonPositiveTime(t));
        }
        Ok(Energy::Mollified { t, lambda })
    }
}

#[derive(Clone, Debug)]
pub struct Model {
    pub ctx: LatticeContext,
    pub pot: Potential,
    pub conv: Conventions,
    /// Evaluate output momenta on the rayon pool.
    pub parallel: bool,
}

impl Model {
    pub fn new(ctx: LatticeContext, pot: Potential) -> Result<Self> {
        if pot.d() != ctx.d() {
            return Err(Error::Potential(format!(
                "potential dimension {} does not match lattice dimension {}",
                pot.d(),
                ctx.d()
            )));
        }
        if pot.radius() > ctx.r() {
            return Err(Error::Potential(format!(
                "potential radius {} exceeds the shell width r = {}",
                pot.radius(),
                ctx.r()
            )));
        }
        Ok(Model { ctx, pot, conv: Conventions::default(), parallel: false })
    }

    pub fn with_conventions(mut self, conv: Conventions) -> Self {
        self.conv = conv;
        self
    }

    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn kappa(&self) -> f64 {
        self.conv.kronecker.coeff()
    }

    pub fn measure(&self) -> f64 {
        self.conv.normalization.measure(self.ctx.d())
    }

    /// The dispersion entering `δ_t`, per [`DispersionMode`].
    #[inline]
    pub fn energy(&self, lambda: f64, p: &Momentum) -> f64 {
        match self.conv.dispersion {
            DispersionMode::Full => dispersion(&self.ctx, &self.pot, lambda, p, self.conv.normalization),
            DispersionMode::Free => free_energy(&self.ctx, p),
        }
    }

    /// `λ ‖V̂‖_ℓ¹ <= 1/2`, the hypothesis of the sharp-limit estimates.
    pub fn check_small_coupling(&self, lambda: f64) -> Result<()> {
        let x = lambda * self.pot.l1_norm(self.conv.normalization);
        if x > 0.5 {
            return Err(Error::Hypothesis(format!("λ‖V‖_ℓ¹ = {x} exceeds 1/2")));
        }
        Ok(())
    }
}
