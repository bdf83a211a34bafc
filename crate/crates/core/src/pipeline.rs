//! End-to-end evaluation of a composite emitter.

use num_complex::Complex64 as C64;

use crate::cascade::{
    branching_fractions, enumerate_decay_paths, flux_fractions, merge_by_frequency, path_weights, DecayPath,
    RateMatrix, DEFAULT_PATH_CAP,
};
use crate::error::{Error, Result};
use crate::lindblad::{build_liouvillian, photon_block, PhotonBlock, Quadrature};
use crate::manybody::OperatorMatrix;
use crate::metrics::{default_logical_target, score, EntanglementReport, LogicalTarget};
use crate::spectrum::{build_hamiltonian, classify_levels, diagonalize, CompositeModel, LevelDiagram, DEFAULT_BRIGHTNESS_THRESHOLD};

/// How per-hop flux fractions are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightMethod {
    /// Trapezoid flux integrals along RK4 rate-equation trajectories.
    Flux,
    /// Closed-form branching ratios k_lm / Σ_m k_lm.
    Branching,
}

/// Unit in which the model's dephasing rate is expressed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DephasingReference {
    Gamma0,
    MaxRadiative,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TargetSpec {
    pub codewords: usize,
    /// Ranks (0 = heaviest) of the merged paths to use instead of the top ones.
    pub ranks: Option<Vec<usize>>,
    pub amplitudes: Option<Vec<C64>>,
}

impl Default for TargetSpec {
    fn default() -> Self {
        Self { codewords: 2, ranks: None, amplitudes: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineOptions {
    pub quadrature: Quadrature,
    pub weights: WeightMethod,
    pub threshold: f64,
    pub path_cap: usize,
    pub dephasing_reference: DephasingReference,
    pub target: TargetSpec,
    /// Defaults to the highest eigenstate.
    pub initial_state: Option<usize>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            quadrature: Quadrature::default(),
            weights: WeightMethod::Flux,
            threshold: DEFAULT_BRIGHTNESS_THRESHOLD,
            path_cap: DEFAULT_PATH_CAP,
            dephasing_reference: DephasingReference::Gamma0,
            target: TargetSpec::default(),
            initial_state: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub diagram: LevelDiagram,
    /// Frequency-merged, weighted paths, heaviest first.
    pub paths: Vec<DecayPath>,
    pub target: LogicalTarget,
    pub block: PhotonBlock,
    pub report: EntanglementReport,
}

pub fn evaluate(model: &CompositeModel, options: &PipelineOptions) -> Result<Evaluation> {
    let diagram = diagonalize(&build_hamiltonian(model)?, model)?;
    evaluate_diagram(model, diagram, options)
}

/// Weighted, frequency-merged decay paths and the raw path count.
pub fn weighted_paths(diagram: &LevelDiagram, initial: usize, options: &PipelineOptions) -> Result<(Vec<DecayPath>, usize)> {
    let k = RateMatrix::from_diagram_with(diagram, options.threshold);
    let mut paths = enumerate_decay_paths(&k, initial, options.path_cap)?;
    let fractions = match options.weights {
        WeightMethod::Flux => {
            let mut p0 = vec![0.0; diagram.dim()];
            p0[initial] = 1.0;
            flux_fractions(&k, &p0)?.fractions
        }
        WeightMethod::Branching => branching_fractions(&k),
    };
    path_weights(&mut paths, &fractions);
    let raw = paths.len();
    Ok((merge_by_frequency(paths), raw))
}

pub fn build_target(paths: &[DecayPath], spec: &TargetSpec) -> Result<LogicalTarget> {
    let mut target = match &spec.ranks {
        None => default_logical_target(paths, spec.codewords)?,
        Some(ranks) => {
            let seqs = ranks
                .iter()
                .map(|&r| {
                    paths.get(r).map(|p| p.frequencies.clone()).ok_or_else(|| {
                        Error::Construction(format!("target rank {r} exceeds the {} available paths", paths.len()))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            LogicalTarget::equal_superposition(seqs)?
        }
    };
    if let Some(a) = &spec.amplitudes {
        target = LogicalTarget::new(target.sequences, a.clone(), target.labels)?;
    }
    Ok(target)
}

/// Same as [`evaluate`] but for an already diagonalized model.
pub fn evaluate_diagram(model: &CompositeModel, diagram: LevelDiagram, options: &PipelineOptions) -> Result<Evaluation> {
    let diagram = classify_levels(diagram, options.threshold);
    let initial = options.initial_state.unwrap_or(diagram.top());
    if initial >= diagram.dim() {
        return Err(Error::InvalidArgument(format!("initial state {initial} out of range")));
    }
    let (paths, raw) = weighted_paths(&diagram, initial, options)?;
    let target = build_target(&paths, &options.target)?;

    let mut effective = model.clone();
    if options.dephasing_reference == DephasingReference::MaxRadiative {
        let max = diagram.transitions().iter().map(|t| t.rate).fold(0.0, f64::max);
        effective.dephasing = model.dephasing * max;
    }
    let liouvillian = build_liouvillian(&diagram, &effective)?;
    let mut rho0 = OperatorMatrix::zeros(diagram.dim(), diagram.dim());
    rho0[(initial, initial)] = C64::new(1.0, 0.0);
    let block = photon_block(&liouvillian, &rho0, &target.sequences, &options.quadrature)?;
    let report = score(&paths, raw, &target, &block)?;
    Ok(Evaluation { diagram, paths, target, block, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{in_plane_dipole, CouplingSpec, EmitterConfig};
    use nalgebra::Vector3;

    fn bell(d: f64, g: f64, theta: f64, dephasing: f64) -> CompositeModel {
        let emitters = vec![
            EmitterConfig::new(1.0, Vector3::new(d, 0.0, 0.0), Vector3::new(40.0, 0.0, 0.0)).unwrap(),
            EmitterConfig::new(1.0, in_plane_dipole(d, theta), Vector3::zeros()).unwrap(),
        ];
        let coupling = CouplingSpec::uniform(2, 1.0, g, &[(0, 1)]).unwrap();
        CompositeModel::with_reference_dipole(emitters, coupling, 6.0, dephasing).unwrap()
    }

    #[test]
    fn bell_baseline_scores() {
        let e = evaluate(&bell(6.0, 0.08, 0.0, 0.0), &PipelineOptions::default()).unwrap();
        assert_eq!(e.paths.len(), 2);
        assert!((e.report.eta - 1.0).abs() < 1e-6);
        assert!(e.report.fidelity_phase_opt > 0.9 && e.report.fidelity_phase_opt <= 1.0);
        assert_eq!(e.target.labels, vec!["00".to_string(), "11".to_string()]);
    }

    #[test]
    fn weight_methods_agree() {
        let model = bell(4.0, 0.05, 0.2, 0.0);
        let flux = evaluate(&model, &PipelineOptions::default()).unwrap();
        let opts = PipelineOptions { weights: WeightMethod::Branching, ..Default::default() };
        let exact = evaluate(&model, &opts).unwrap();
        assert!((flux.report.eta - exact.report.eta).abs() < 1e-9);
        for (a, b) in flux.paths.iter().zip(&exact.paths) {
            assert!((a.weight - b.weight).abs() < 1e-9);
        }
    }

    #[test]
    fn single_path_cannot_form_bell_target() {
        let r = evaluate(&bell(6.0, 0.0, 0.0, 0.0), &PipelineOptions::default());
        assert!(matches!(r, Err(Error::Construction(_))));
        let one = PipelineOptions { target: TargetSpec { codewords: 1, ..Default::default() }, ..Default::default() };
        let e = evaluate(&bell(6.0, 0.0, 0.0, 0.0), &one).unwrap();
        assert!((e.block.matrix[(0, 0)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn explicit_ranks_and_amplitudes() {
        let s = 0.5f64.sqrt();
        let spec = TargetSpec { codewords: 2, ranks: Some(vec![1, 0]), amplitudes: Some(vec![C64::new(s, 0.0), C64::new(0.0, s)]) };
        let opts = PipelineOptions { target: spec, ..Default::default() };
        let e = evaluate(&bell(6.0, 0.08, 0.0, 0.0), &opts).unwrap();
        assert_eq!(e.target.sequences[0], e.paths[1].frequencies);
        let bad = TargetSpec { codewords: 2, ranks: Some(vec![0, 7]), amplitudes: None };
        let opts = PipelineOptions { target: bad, ..Default::default() };
        assert!(matches!(evaluate(&bell(6.0, 0.08, 0.0, 0.0), &opts), Err(Error::Construction(_))));
    }

    #[test]
    fn max_radiative_dephasing_reference_rescales() {
        let model = bell(6.0, 0.08, 0.0, 1.0);
        let a = evaluate(&model, &PipelineOptions { quadrature: Quadrature::Resolvent, ..Default::default() }).unwrap();
        let opts = PipelineOptions {
            quadrature: Quadrature::Resolvent,
            dephasing_reference: DephasingReference::MaxRadiative,
            ..Default::default()
        };
        let b = evaluate(&model, &opts).unwrap();
        let max = b.diagram.transitions().iter().map(|t| t.rate).fold(0.0, f64::max);
        let mut scaled = model.clone();
        scaled.dephasing = max;
        let c = evaluate(&scaled, &PipelineOptions { quadrature: Quadrature::Resolvent, ..Default::default() }).unwrap();
        assert!((b.report.fidelity_phase_opt - c.report.fidelity_phase_opt).abs() < 1e-12);
        assert!(max > 1.0 && a.report.fidelity_phase_opt != b.report.fidelity_phase_opt);
    }
}
