//! Geometry-dependent interaction energies between emitters.

use nalgebra::{DMatrix, Vector3};

use crate::error::{Error, Result};
use crate::units::HARTREE_EV;

/// A single two-level emitter: transition energy ħω (eV), transition dipole
/// d (e·Bohr) and position r (Bohr).
#[derive(Clone, Debug, PartialEq)]
pub struct EmitterConfig {
    pub omega: f64,
    pub dipole: Vector3<f64>,
    pub position: Vector3<f64>,
}

impl EmitterConfig {
    pub fn new(omega: f64, dipole: Vector3<f64>, position: Vector3<f64>) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::InvalidArgument(format!("emitter energy must be positive, got {omega}")));
        }
        if dipole.iter().chain(position.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite dipole or position".into()));
        }
        Ok(Self { omega, dipole, position })
    }
}

/// Dipole of magnitude `magnitude` in the x-y plane, rotated by `theta` from x̂.
pub fn in_plane_dipole(magnitude: f64, theta: f64) -> Vector3<f64> {
    Vector3::new(magnitude * theta.cos(), magnitude * theta.sin(), 0.0)
}

/// Medium permittivity and the hybridization energies (eV) between orbitals of
/// different emitters. `g_ground` is an optional extension, off by default.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingSpec {
    pub epsilon_r: f64,
    pub g_excited: DMatrix<f64>,
    pub g_ground: Option<DMatrix<f64>>,
}

impl CouplingSpec {
    pub fn new(epsilon_r: f64, g_excited: DMatrix<f64>) -> Result<Self> {
        let n = g_excited.nrows();
        let spec = Self { epsilon_r, g_excited, g_ground: None };
        spec.validate(n)?;
        Ok(spec)
    }

    /// No hybridization between any pair.
    pub fn dipole_only(n: usize, epsilon_r: f64) -> Self {
        Self { epsilon_r, g_excited: DMatrix::zeros(n, n), g_ground: None }
    }

    /// Same hybridization energy `g` on each listed pair.
    pub fn uniform(n: usize, epsilon_r: f64, g: f64, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut m = DMatrix::zeros(n, n);
        for &(i, j) in pairs {
            if i >= n || j >= n || i == j {
                return Err(Error::InvalidArgument(format!("bad hybridization pair ({i}, {j})")));
            }
            m[(i, j)] = g;
            m[(j, i)] = g;
        }
        Self::new(epsilon_r, m)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.epsilon_r > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "relative permittivity must be positive, got {}",
                self.epsilon_r
            )));
        }
        let check = |name: &str, m: &DMatrix<f64>| -> Result<()> {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::InvalidArgument(format!(
                    "{name} hybridization matrix must be {n}x{n}, got {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            for i in 0..n {
                if m[(i, i)] != 0.0 {
                    return Err(Error::InvalidArgument(format!("{name} hybridization diagonal must be zero")));
                }
                for j in 0..i {
                    if m[(i, j)] != m[(j, i)] {
                        return Err(Error::InvalidArgument(format!(
                            "{name} hybridization matrix is not symmetric at ({i}, {j})"
                        )));
                    }
                }
            }
            Ok(())
        };
        check("excited", &self.g_excited)?;
        if let Some(g) = &self.g_ground {
            check("ground", g)?;
        }
        Ok(())
    }
}

/// Near-field dipole-dipole coupling energy J_ab in eV.
///
/// Evaluated in Hartree atomic units (4πε₀ = 1) as
/// `|d_a||d_b| / (ε_r r³) · [n_a·n_b − 3 (n_a·n_ab)(n_b·n_ab)]` and converted to eV.
pub fn dipole_coupling(a: &EmitterConfig, b: &EmitterConfig, epsilon_r: f64) -> Result<f64> {
    let sep = a.position - b.position;
    let r = sep.norm();
    if r == 0.0 {
        return Err(Error::SingularGeometry(format!(
            "emitters share the position {:?}",
            a.position.as_slice()
        )));
    }
    let (da, db) = (a.dipole.norm(), b.dipole.norm());
    if da == 0.0 || db == 0.0 {
        return Ok(0.0);
    }
    let (na, nb, nab) = (a.dipole / da, b.dipole / db, sep / r);
    let angular = na.dot(&nb) - 3.0 * na.dot(&nab) * nb.dot(&nab);
    Ok(da * db * angular / (epsilon_r * r.powi(3)) * HARTREE_EV)
}

/// Finite-separation correction to the collective decay rates, with
/// `xi = r / λ₀` and `theta` the angle between the dipoles and the separation axis.
///
/// Diagnostic only; the dynamics never use it.
pub fn radiative_correction_factor(xi: f64, theta: f64) -> Result<f64> {
    if !(xi > 0.0) || !xi.is_finite() {
        return Err(Error::InvalidArgument(format!("xi must be positive and finite, got {xi}")));
    }
    let c2 = theta.cos().powi(2);
    let sinc = xi.sin() / xi;
    // (ξ cos ξ − sin ξ)/ξ³ cancels catastrophically for small ξ; use its series there.
    let tail = if xi < 0.1 {
        let x2 = xi * xi;
        -1.0 / 3.0 + x2 / 30.0 - x2 * x2 / 840.0 + x2 * x2 * x2 / 45360.0
    } else {
        xi.cos() / (xi * xi) - xi.sin() / xi.powi(3)
    };
    Ok(1.5 * ((1.0 - c2) * sinc + (1.0 - 3.0 * c2) * tail))
}
