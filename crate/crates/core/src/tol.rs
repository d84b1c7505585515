//! Central numerical tolerances.
//!
//! Defaults match the library contract; the CLI may install a different set
//! once at startup with [`install`]. Everything else reads through [`get`].

use std::sync::OnceLock;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Unitarity and orthonormality checks.
    pub unitary: f64,
    /// Reconstruction `U Λ U† ≈ A`.
    pub reconstruction: f64,
    /// `non_normality` below this selects the normal path.
    pub normal: f64,
    /// Hermiticity of attached targets.
    pub hermitian: f64,
    /// Unit-norm checks on states.
    pub unit_norm: f64,
    /// Real parts below this in magnitude are treated as zero.
    pub zero: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            unitary: 1e-10,
            reconstruction: 1e-8,
            normal: 1e-10,
            hermitian: 1e-10,
            unit_norm: 1e-10,
            zero: 1e-12,
        }
    }
}

impl Tolerances {
    /// Same defaults with the absolute checks scaled to `abs`.
    pub fn with_absolute(abs: f64) -> Self {
        Tolerances {
            unitary: abs,
            normal: abs,
            hermitian: abs,
            unit_norm: abs,
            ..Default::default()
        }
    }
}

static GLOBAL: OnceLock<Tolerances> = OnceLock::new();

/// Install process-wide tolerances. Returns false if already set.
pub fn install(t: Tolerances) -> bool {
    GLOBAL.set(t).is_ok()
}

pub fn get() -> Tolerances {
    *GLOBAL.get_or_init(Tolerances::default)
}
