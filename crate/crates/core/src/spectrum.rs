//! Total Hamiltonian, its eigenbasis, and the level diagram seen by the
//! radiative cascade.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::coupling::{dipole_coupling, CouplingSpec, EmitterConfig};
use crate::error::{Error, Result};
use crate::manybody::{bilinear_by_position, enumerate_basis, excitation_operator, FockBasis, OperatorMatrix, OrbitalIndex};
use crate::units::FREQUENCY_TOLERANCE_EV;

/// Relative threshold on |d_lm|² (against the largest |d|²) below which a
/// transition counts as forbidden.
pub const DEFAULT_BRIGHTNESS_THRESHOLD: f64 = 1e-10;

/// Full physical specification of a composite emitter.
///
/// Rates are `γ_r^{lm} = rate_constant · |d_lm|²` and, like `dephasing`, are
/// measured in units of the bare-emitter rate γ₀; times are in 1/γ₀.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositeModel {
    pub emitters: Vec<EmitterConfig>,
    pub coupling: CouplingSpec,
    pub rate_constant: f64,
    pub dephasing: f64,
    /// Energy ħγ₀ in eV. When set, the Liouvillian keeps the coherent
    /// −i[H, ·] term in the lab frame; when `None` it is built in the frame
    /// co-rotating with every transition.
    pub hbar_gamma0_ev: Option<f64>,
}

impl CompositeModel {
    pub fn new(emitters: Vec<EmitterConfig>, coupling: CouplingSpec, rate_constant: f64, dephasing: f64) -> Result<Self> {
        let model = Self { emitters, coupling, rate_constant, dephasing, hbar_gamma0_ev: None };
        model.validate()?;
        Ok(model)
    }

    /// Chooses the rate constant so that a bare emitter with dipole
    /// magnitude `reference_dipole` decays at γ₀ = 1.
    pub fn with_reference_dipole(
        emitters: Vec<EmitterConfig>,
        coupling: CouplingSpec,
        reference_dipole: f64,
        dephasing: f64,
    ) -> Result<Self> {
        if !(reference_dipole > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "reference dipole must be positive, got {reference_dipole}"
            )));
        }
        Self::new(emitters, coupling, 1.0 / (reference_dipole * reference_dipole), dephasing)
    }

    /// Like [`Self::with_reference_dipole`] using the dipole of the first emitter.
    pub fn normalized(emitters: Vec<EmitterConfig>, coupling: CouplingSpec, dephasing: f64) -> Result<Self> {
        let d = emitters
            .first()
            .ok_or_else(|| Error::InvalidArgument("at least one emitter is required".into()))?
            .dipole
            .norm();
        Self::with_reference_dipole(emitters, coupling, d, dephasing)
    }

    pub fn n_emitters(&self) -> usize {
        self.emitters.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.emitters.is_empty() {
            return Err(Error::InvalidArgument("at least one emitter is required".into()));
        }
        if self.emitters.len() > 8 {
            return Err(Error::InvalidArgument(format!(
                "{} emitters exceed the dense-matrix limit of 8",
                self.emitters.len()
            )));
        }
        if !(self.rate_constant > 0.0) || !self.rate_constant.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "rate constant must be positive, got {}",
                self.rate_constant
            )));
        }
        if !(self.dephasing >= 0.0) || !self.dephasing.is_finite() {
            return Err(Error::InvalidArgument(format!("dephasing must be >= 0, got {}", self.dephasing)));
        }
        if let Some(e) = self.hbar_gamma0_ev {
            if !(e > 0.0) {
                return Err(Error::InvalidArgument(format!("ħγ₀ must be positive, got {e}")));
            }
        }
        for e in &self.emitters {
            EmitterConfig::new(e.omega, e.dipole, e.position)?;
        }
        self.coupling.validate(self.emitters.len())
    }
}

fn flip_operator(emitter: usize, basis: &FockBasis) -> OperatorMatrix {
    let g = OrbitalIndex::ground(emitter).position();
    let e = OrbitalIndex::excited(emitter).position();
    bilinear_by_position(e, g, basis) + bilinear_by_position(g, e, basis)
}

/// Cartesian components of the total dipole operator Σ_i d_i (a†_e a_g + a†_g a_e).
pub fn dipole_operators(model: &CompositeModel, basis: &FockBasis) -> [OperatorMatrix; 3] {
    let dim = basis.dim();
    let mut ops = [OperatorMatrix::zeros(dim, dim), OperatorMatrix::zeros(dim, dim), OperatorMatrix::zeros(dim, dim)];
    for (i, emitter) in model.emitters.iter().enumerate() {
        let flip = flip_operator(i, basis);
        for (c, op) in ops.iter_mut().enumerate() {
            if emitter.dipole[c] != 0.0 {
                *op += &flip * C64::new(emitter.dipole[c], 0.0);
            }
        }
    }
    ops
}

/// H = H₀ + H_dip + H_hyb in the fixed-N number basis, with every
/// counter-rotating dipole term retained.
pub fn build_hamiltonian(model: &CompositeModel) -> Result<OperatorMatrix> {
    model.validate()?;
    let n = model.n_emitters();
    let basis = enumerate_basis(n)?;
    let dim = basis.dim();
    let mut h = OperatorMatrix::zeros(dim, dim);

    for (i, e) in model.emitters.iter().enumerate() {
        let p = OrbitalIndex::excited(i).position();
        h += bilinear_by_position(p, p, &basis) * C64::new(e.omega, 0.0);
    }

    let flips: Vec<OperatorMatrix> = (0..n).map(|i| flip_operator(i, &basis)).collect();
    for i in 0..n {
        for j in i + 1..n {
            let jij = dipole_coupling(&model.emitters[i], &model.emitters[j], model.coupling.epsilon_r)?;
            if jij != 0.0 {
                h += (&flips[i] * &flips[j]) * C64::new(jij, 0.0);
            }
            let hop = |g: f64, a: usize, b: usize| -> OperatorMatrix {
                (bilinear_by_position(a, b, &basis) + bilinear_by_position(b, a, &basis)) * C64::new(g, 0.0)
            };
            let ge = model.coupling.g_excited[(i, j)];
            if ge != 0.0 {
                h += hop(ge, OrbitalIndex::excited(i).position(), OrbitalIndex::excited(j).position());
            }
            if let Some(gg) = &model.coupling.g_ground {
                if gg[(i, j)] != 0.0 {
                    h += hop(gg[(i, j)], OrbitalIndex::ground(i).position(), OrbitalIndex::ground(j).position());
                }
            }
        }
    }
    Ok(h)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LevelLabel {
    Ground,
    Bright,
    Dark,
    MultiplyExcited,
}

impl LevelLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            LevelLabel::Ground => "ground",
            LevelLabel::Bright => "bright",
            LevelLabel::Dark => "dark",
            LevelLabel::MultiplyExcited => "multiply-excited",
        }
    }
}

/// A downhill, dipole-allowed transition between eigenstates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub dipole_sq: f64,
    pub rate: f64,
    /// Photon energy E_from − E_to in eV.
    pub energy: f64,
}

/// Eigenenergies, eigenvectors and eigenbasis transition dipoles.
#[derive(Clone, Debug)]
pub struct LevelDiagram {
    pub basis: FockBasis,
    /// Ascending, eV.
    pub energies: Vec<f64>,
    /// Columns are eigenvectors in the Fock basis.
    pub eigenvectors: OperatorMatrix,
    /// d_lm components (e·Bohr).
    pub dipoles: [OperatorMatrix; 3],
    pub dipole_sq: DMatrix<f64>,
    pub excitation: Vec<usize>,
    pub labels: Vec<LevelLabel>,
    pub rate_constant: f64,
    pub threshold: f64,
}

/// Diagonalizes `h` and moves the total dipole operator into its eigenbasis.
pub fn diagonalize(h: &OperatorMatrix, model: &CompositeModel) -> Result<LevelDiagram> {
    let dim = h.nrows();
    if h.ncols() != dim {
        return Err(Error::Internal("Hamiltonian is not square".into()));
    }
    let scale = h.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let asym = (h - h.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if asym > 1e-12 * scale {
        return Err(Error::Internal(format!("Hamiltonian is not Hermitian (deviation {asym:e})")));
    }
    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = OperatorMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);
    LevelDiagram::from_eigensystem(model, energies, vectors)
}

impl LevelDiagram {
    /// Builds a diagram from an explicit eigensystem. Any orthonormal choice of
    /// vectors inside a degenerate subspace is accepted.
    pub fn from_eigensystem(model: &CompositeModel, energies: Vec<f64>, eigenvectors: OperatorMatrix) -> Result<Self> {
        let basis = enumerate_basis(model.n_emitters())?;
        let dim = basis.dim();
        if energies.len() != dim || eigenvectors.nrows() != dim || eigenvectors.ncols() != dim {
            return Err(Error::InvalidArgument(format!("eigensystem does not match basis dimension {dim}")));
        }
        if energies.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument("energies must be ascending".into()));
        }
        let overlap = eigenvectors.adjoint() * &eigenvectors;
        let defect = (overlap - OperatorMatrix::identity(dim, dim)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if defect > 1e-9 {
            return Err(Error::InvalidArgument(format!("eigenvectors are not orthonormal (defect {defect:e})")));
        }
        let vdag = eigenvectors.adjoint();
        let [dx, dy, dz] = dipole_operators(model, &basis);
        let dipoles = [&vdag * dx * &eigenvectors, &vdag * dy * &eigenvectors, &vdag * dz * &eigenvectors];
        let dipole_sq =
            DMatrix::from_fn(dim, dim, |l, m| dipoles.iter().map(|d| d[(l, m)].norm_sqr()).sum::<f64>());
        let nexc = &vdag * excitation_operator(&basis) * &eigenvectors;
        let excitation = (0..dim).map(|l| nexc[(l, l)].re.round().max(0.0) as usize).collect();
        let diagram = Self {
            basis,
            energies,
            eigenvectors,
            dipoles,
            dipole_sq,
            excitation,
            labels: Vec::new(),
            rate_constant: model.rate_constant,
            threshold: DEFAULT_BRIGHTNESS_THRESHOLD,
        };
        Ok(classify_levels(diagram, DEFAULT_BRIGHTNESS_THRESHOLD))
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Index of the highest-energy eigenstate (the fully excited state).
    pub fn top(&self) -> usize {
        self.dim() - 1
    }

    fn max_dipole_sq(&self) -> f64 {
        self.dipole_sq.iter().copied().fold(0.0, f64::max)
    }

    /// Whether l → m is downhill and carries |d_lm|² above `threshold` · max|d|².
    pub fn is_allowed(&self, l: usize, m: usize, threshold: f64) -> bool {
        let max = self.max_dipole_sq();
        max > 0.0
            && self.energies[l] - self.energies[m] > FREQUENCY_TOLERANCE_EV
            && self.dipole_sq[(l, m)] > threshold * max
    }

    /// Downhill transitions above the diagram's threshold, ordered by (from, to).
    pub fn transitions(&self) -> Vec<Transition> {
        self.transitions_with(self.threshold)
    }

    pub fn transitions_with(&self, threshold: f64) -> Vec<Transition> {
        let mut out = Vec::new();
        for l in 0..self.dim() {
            for m in 0..l {
                if self.is_allowed(l, m, threshold) {
                    out.push(Transition {
                        from: l,
                        to: m,
                        dipole_sq: self.dipole_sq[(l, m)],
                        rate: self.rate_constant * self.dipole_sq[(l, m)],
                        energy: self.energies[l] - self.energies[m],
                    });
                }
            }
        }
        out
    }

    /// Structured text record: one `state` line per eigenstate, then one
    /// `transition` line per allowed transition.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# level diagram: {} states, {} emitters", self.dim(), self.basis.n_emitters());
        let _ = writeln!(s, "# state index energy_ev excitation label");
        for l in 0..self.dim() {
            let _ = writeln!(
                s,
                "state {} {:.16e} {} {}",
                l,
                self.energies[l],
                self.excitation[l],
                self.labels[l].as_str()
            );
        }
        let _ = writeln!(s, "# transition from to dipole_sq_e2bohr2 rate_gamma0");
        for t in self.transitions() {
            let _ = writeln!(s, "transition {} {} {:.16e} {:.16e}", t.from, t.to, t.dipole_sq, t.rate);
        }
        s
    }
}

/// Tags each eigenstate. A state is bright when it has at least one allowed
/// transition to a lower state; excitation numbers of two or more are tagged
/// multiply-excited regardless of brightness.
pub fn classify_levels(mut diagram: LevelDiagram, threshold: f64) -> LevelDiagram {
    diagram.threshold = threshold;
    diagram.labels = (0..diagram.dim())
        .map(|l| {
            if l == 0 {
                LevelLabel::Ground
            } else if diagram.excitation[l] >= 2 {
                LevelLabel::MultiplyExcited
            } else if (0..l).any(|m| diagram.is_allowed(l, m, threshold)) {
                LevelLabel::Bright
            } else {
                LevelLabel::Dark
            }
        })
        .collect();
    diagram
}
