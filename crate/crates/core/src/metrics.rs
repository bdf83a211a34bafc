//! Scores of the emitted photon state against a logical target.

use num_complex::Complex64 as C64;

use crate::cascade::DecayPath;
use crate::error::{Error, Result};
use crate::lindblad::{min_eigenvalue, PhotonBlock};
use crate::manybody::OperatorMatrix;
use crate::units::FREQUENCY_TOLERANCE_EV;

/// Target pure state |φ⟩ = Σ_p c_p |p⟩ over K photon-energy sequences.
#[derive(Clone, Debug, PartialEq)]
pub struct LogicalTarget {
    pub sequences: Vec<Vec<f64>>,
    pub amplitudes: Vec<C64>,
    pub labels: Vec<String>,
}

impl LogicalTarget {
    pub fn new(sequences: Vec<Vec<f64>>, amplitudes: Vec<C64>, labels: Vec<String>) -> Result<Self> {
        let k = sequences.len();
        if k == 0 || amplitudes.len() != k || labels.len() != k {
            return Err(Error::InvalidArgument("target needs one amplitude and label per sequence".into()));
        }
        let p = sequences[0].len();
        if p == 0 || sequences.iter().any(|s| s.len() != p) {
            return Err(Error::InvalidArgument("target sequences must be nonempty and of equal length".into()));
        }
        let norm: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("target amplitudes have norm² {norm}")));
        }
        Ok(Self { sequences, amplitudes, labels })
    }

    /// Equal amplitudes 1/√K and repeated-digit codewords (00…0, 11…1, …).
    pub fn equal_superposition(sequences: Vec<Vec<f64>>) -> Result<Self> {
        let k = sequences.len();
        let p = sequences.first().map_or(0, |s| s.len());
        let labels = (0..k).map(|i| codeword(i, p)).collect();
        Self::new(sequences, vec![C64::new(1.0 / (k as f64).sqrt(), 0.0); k], labels)
    }

    pub fn codewords(&self) -> usize {
        self.sequences.len()
    }

    pub fn photons(&self) -> usize {
        self.sequences[0].len()
    }
}

fn codeword(i: usize, p: usize) -> String {
    let digit = std::char::from_digit((i % 36) as u32, 36).unwrap();
    std::iter::repeat_n(digit, p).collect()
}

/// Picks the `k` heaviest paths (already sorted by weight) and orders them by
/// descending first-photon energy.
pub fn default_logical_target(paths: &[DecayPath], k: usize) -> Result<LogicalTarget> {
    let bright: Vec<&DecayPath> = paths.iter().filter(|p| p.weight > 0.0).take(k).collect();
    if k == 0 || bright.len() < k {
        return Err(Error::Construction(format!("need {k} bright decay paths, found {}", bright.len())));
    }
    let mut chosen: Vec<Vec<f64>> = bright.iter().map(|p| p.frequencies.clone()).collect();
    chosen.sort_by(|a, b| b[0].total_cmp(&a[0]));
    LogicalTarget::equal_superposition(chosen)
}

fn matches(path: &DecayPath, seq: &[f64]) -> bool {
    path.frequencies.len() == seq.len()
        && path.frequencies.iter().zip(seq).all(|(a, b)| (a - b).abs() <= FREQUENCY_TOLERANCE_EV)
}

/// η and the indices of target sequences not found among `paths`.
pub fn efficiency(paths: &[DecayPath], target: &LogicalTarget) -> (f64, Vec<usize>) {
    let mut eta = 0.0;
    let mut missing = Vec::new();
    for (i, seq) in target.sequences.iter().enumerate() {
        let w: f64 = paths.iter().filter(|p| matches(p, seq)).map(|p| p.weight).sum();
        if w == 0.0 {
            missing.push(i);
        }
        eta += w;
    }
    (eta, missing)
}

/// Weight of each target sequence, in target order.
pub fn target_weights(paths: &[DecayPath], target: &LogicalTarget) -> Vec<f64> {
    target
        .sequences
        .iter()
        .map(|seq| paths.iter().filter(|p| matches(p, seq)).map(|p| p.weight).sum())
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fidelity {
    pub fixed: f64,
    pub phase_optimized: f64,
    /// Relative phase on the second codeword amplitude that attains `phase_optimized`.
    pub optimal_phase: f64,
}

/// ⟨φ|ρ′|φ⟩ with ρ′ the block normalized by its diagonal sum, plus the
/// maximum over a relative phase on the second codeword.
pub fn fidelity(block: &OperatorMatrix, target: &LogicalTarget) -> Result<Fidelity> {
    let k = target.codewords();
    if block.nrows() != k || block.ncols() != k {
        return Err(Error::InvalidInput(format!("block is {}x{}, target has {k} codewords", block.nrows(), block.ncols())));
    }
    let herm = (block - block.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if herm > 1e-9 {
        return Err(Error::InvalidInput(format!("photon block is not Hermitian (deviation {herm:e})")));
    }
    let tr: f64 = (0..k).map(|i| block[(i, i)].re).sum();
    if !(tr > 0.0) {
        return Err(Error::InvalidInput("photon block has no weight on the target".into()));
    }
    let rho = block / C64::new(tr, 0.0);
    let min = min_eigenvalue(&rho);
    if min < -1e-9 {
        return Err(Error::InvalidInput(format!("photon block is not positive semidefinite (eigenvalue {min:e})")));
    }
    let c = &target.amplitudes;
    let mut fixed = C64::new(0.0, 0.0);
    for a in 0..k {
        for b in 0..k {
            fixed += c[a].conj() * rho[(a, b)] * c[b];
        }
    }
    if k < 2 {
        return Ok(Fidelity { fixed: fixed.re, phase_optimized: fixed.re, optimal_phase: 0.0 });
    }
    // F(φ) = F₀′ + 2 Re(e^{iφ} S) with S collecting the cross terms of codeword 1
    let s: C64 = (0..k).filter(|&a| a != 1).map(|a| c[a].conj() * rho[(a, 1)] * c[1]).sum();
    let base = fixed.re - 2.0 * s.re;
    let optimal_phase = if s.norm() > 0.0 { 0.0 - s.arg() } else { 0.0 };
    Ok(Fidelity { fixed: fixed.re, phase_optimized: base + 2.0 * s.norm(), optimal_phase })
}

/// Smallest pairwise separation among all P·K logical photon energies.
/// Infinite when there is only one photon energy.
pub fn delta_e_min(target: &LogicalTarget) -> f64 {
    let mut all: Vec<f64> = target.sequences.iter().flatten().copied().collect();
    all.sort_by(f64::total_cmp);
    all.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntanglementReport {
    pub eta: f64,
    pub fidelity: f64,
    pub fidelity_phase_opt: f64,
    pub optimal_phase: f64,
    pub delta_e_min: f64,
    /// Weights of the target codeword paths, in target order.
    pub path_weights: Vec<f64>,
    pub missing_targets: Vec<usize>,
    /// Enumerated paths before frequency merging.
    pub path_count: usize,
    pub merged_path_count: usize,
    pub grid_points: Option<usize>,
    pub horizon: Option<f64>,
}

/// Combines path weights and the photon block into a report.
pub fn score(paths: &[DecayPath], raw_path_count: usize, target: &LogicalTarget, block: &PhotonBlock) -> Result<EntanglementReport> {
    let (eta, missing) = efficiency(paths, target);
    let f = fidelity(&block.matrix, target)?;
    Ok(EntanglementReport {
        eta,
        fidelity: f.fixed,
        fidelity_phase_opt: f.phase_optimized,
        optimal_phase: f.optimal_phase,
        delta_e_min: delta_e_min(target),
        path_weights: target_weights(paths, target),
        missing_targets: missing,
        path_count: raw_path_count,
        merged_path_count: paths.len(),
        grid_points: block.grid_points,
        horizon: block.horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bell_target() -> LogicalTarget {
        LogicalTarget::equal_superposition(vec![vec![1.05, 0.95], vec![0.95, 1.05]]).unwrap()
    }

    fn path(freqs: Vec<f64>, weight: f64, first: usize) -> DecayPath {
        DecayPath { states: vec![3, first, 0], frequencies: freqs, weight, multiplicity: 1 }
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn target_state_has_unit_fidelity() {
        let sigma = OperatorMatrix::from_element(2, 2, c(0.5, 0.0));
        let f = fidelity(&sigma, &bell_target()).unwrap();
        assert!((f.fixed - 1.0).abs() < 1e-15);
        assert!((f.phase_optimized - 1.0).abs() < 1e-15);
    }

    #[test]
    fn incoherent_mixture_is_one_half() {
        let rho = OperatorMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.5, 0.0), c(0.5, 0.0)]));
        let f = fidelity(&rho, &bell_target()).unwrap();
        assert!((f.fixed - 0.5).abs() < 1e-15);
        assert!((f.phase_optimized - 0.5).abs() < 1e-15);
    }

    #[test]
    fn phase_optimization_recovers_rotated_coherence() {
        let z = C64::from_polar(0.4, 1.1);
        let rho = OperatorMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), z, z.conj(), c(0.5, 0.0)]);
        let f = fidelity(&rho, &bell_target()).unwrap();
        assert!((f.phase_optimized - 0.9).abs() < 1e-12);
        assert!((f.fixed - (0.5 + 0.4 * 1.1f64.cos())).abs() < 1e-12);
        // evaluating the target with the reported phase reproduces the optimum
        let s = 0.5f64.sqrt();
        let rotated = LogicalTarget::new(
            bell_target().sequences,
            vec![c(s, 0.0), C64::from_polar(s, f.optimal_phase)],
            vec!["00".into(), "11".into()],
        )
        .unwrap();
        assert!((fidelity(&rho, &rotated).unwrap().fixed - f.phase_optimized).abs() < 1e-12);
    }

    #[test]
    fn non_psd_block_rejected() {
        let rho = OperatorMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.9, 0.0), c(0.9, 0.0), c(0.5, 0.0)]);
        assert!(matches!(fidelity(&rho, &bell_target()), Err(Error::InvalidInput(_))));
        let skew = OperatorMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.1, 0.0), c(0.2, 0.0), c(0.5, 0.0)]);
        assert!(matches!(fidelity(&skew, &bell_target()), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn efficiency_sums_target_weights() {
        let paths = vec![path(vec![1.05, 0.95], 0.6, 2), path(vec![0.95, 1.05], 0.3, 1), path(vec![1.1, 0.9], 0.1, 4)];
        let (eta, missing) = efficiency(&paths, &bell_target());
        assert!((eta - 0.9).abs() < 1e-15);
        assert!(missing.is_empty());
        let (eta, missing) = efficiency(&paths[..1], &bell_target());
        assert_eq!(eta, 0.6);
        assert_eq!(missing, vec![1]);
    }

    #[test]
    fn delta_e_min_is_global_pairwise() {
        assert!((delta_e_min(&bell_target()) - 0.0).abs() < 1e-15);
        let t = LogicalTarget::equal_superposition(vec![vec![1.05, 0.94], vec![0.97, 1.02]]).unwrap();
        assert!((delta_e_min(&t) - 0.03).abs() < 1e-12);
    }

    #[test]
    fn default_target_orders_by_first_photon() {
        let paths = vec![path(vec![0.97, 1.03], 0.6, 1), path(vec![1.03, 0.97], 0.4, 2), path(vec![1.2, 0.8], 0.0, 4)];
        let t = default_logical_target(&paths, 2).unwrap();
        assert_eq!(t.sequences[0], vec![1.03, 0.97]);
        assert_eq!(t.labels, vec!["00".to_string(), "11".to_string()]);
        assert!(matches!(default_logical_target(&paths[..1], 2), Err(Error::Construction(_))));
        let g = LogicalTarget::equal_superposition(vec![vec![1.0; 3], vec![2.0; 3]]).unwrap();
        assert_eq!(g.labels, vec!["000".to_string(), "111".to_string()]);
    }

    proptest! {
        #[test]
        fn fidelity_bounded_for_random_states(
            re in proptest::collection::vec(-1.0..1.0f64, 9),
            im in proptest::collection::vec(-1.0..1.0f64, 9),
        ) {
            let a = OperatorMatrix::from_fn(3, 3, |r, col| c(re[3 * r + col], im[3 * r + col]));
            let rho = &a * a.adjoint();
            let tr = rho.trace().re;
            prop_assume!(tr > 1e-3);
            let rho = rho / c(tr, 0.0);
            let t = LogicalTarget::equal_superposition(vec![vec![1.0], vec![2.0], vec![3.0]]).unwrap();
            let f = fidelity(&rho, &t).unwrap();
            prop_assert!(f.fixed >= -1e-12 && f.fixed <= 1.0 + 1e-12);
            prop_assert!(f.phase_optimized >= f.fixed - 1e-12 && f.phase_optimized <= 1.0 + 1e-12);
        }
    }
}
