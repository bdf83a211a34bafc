#![allow(dead_code)]

use composite_emitter::cascade::{enumerate_decay_paths, flux_fractions, path_weights, RateMatrix, DEFAULT_PATH_CAP};
use composite_emitter::coupling::{dipole_coupling, in_plane_dipole, CouplingSpec, EmitterConfig};
use composite_emitter::lindblad::{build_liouvillian, photon_block, propagate, Quadrature};
use composite_emitter::manybody::{ladder_matrix, FockBasis, Ladder, OperatorMatrix};
use composite_emitter::pipeline::{evaluate, evaluate_diagram, PipelineOptions, WeightMethod};
use composite_emitter::spectrum::{build_hamiltonian, diagonalize, CompositeModel, LevelDiagram};
use nalgebra::{DMatrix, Vector3};
use num_complex::Complex64 as C64;
use rand::Rng;

/// Two-emitter model with the second dipole rotated by `theta` and the
/// emitters `sep` Bohr apart along x̂.
pub fn pair(d: f64, g: f64, theta: f64, dephasing: f64, sep: f64) -> CompositeModel {
    let emitters = vec![
        EmitterConfig::new(1.0, Vector3::new(d, 0.0, 0.0), Vector3::new(sep, 0.0, 0.0)).unwrap(),
        EmitterConfig::new(1.0, in_plane_dipole(d, theta), Vector3::zeros()).unwrap(),
    ];
    let coupling = CouplingSpec::uniform(2, 1.0, g, &[(0, 1)]).unwrap();
    CompositeModel::with_reference_dipole(emitters, coupling, 6.0, dephasing).unwrap()
}

pub fn bell(d: f64, g: f64, theta: f64, dephasing: f64) -> CompositeModel {
    pair(d, g, theta, dephasing, 40.0)
}

/// Collinear three-emitter chain with nearest-neighbour hybridization.
pub fn chain(d: f64, g: f64, theta: f64, sep: f64) -> CompositeModel {
    let emitters = [-sep, 0.0, sep]
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let dip = if i == 1 { in_plane_dipole(d, theta) } else { Vector3::new(d, 0.0, 0.0) };
            EmitterConfig::new(1.0, dip, Vector3::new(x, 0.0, 0.0)).unwrap()
        })
        .collect();
    let coupling = CouplingSpec::uniform(3, 1.0, g, &[(0, 1), (1, 2)]).unwrap();
    CompositeModel::with_reference_dipole(emitters, coupling, 6.0, 0.0).unwrap()
}

pub fn exact_options() -> PipelineOptions {
    PipelineOptions { quadrature: Quadrature::Resolvent, weights: WeightMethod::Branching, ..Default::default() }
}

fn max_abs(m: &OperatorMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest deviation of {a_p, a_q†} from δ_pq and of {a_p, a_q} from zero.
pub fn anticommutation_defect(n_orbitals: usize, p: usize, q: usize) -> f64 {
    let basis = FockBasis::full(n_orbitals).unwrap();
    let ap = ladder_matrix(p, Ladder::Annihilate, &basis).unwrap();
    let aq = ladder_matrix(q, Ladder::Annihilate, &basis).unwrap();
    let aqd = ladder_matrix(q, Ladder::Create, &basis).unwrap();
    let dim = basis.dim();
    let delta = if p == q { 1.0 } else { 0.0 };
    let mixed = &ap * &aqd + &aqd * &ap - OperatorMatrix::identity(dim, dim) * C64::new(delta, 0.0);
    let same = &ap * &aq + &aq * &ap;
    max_abs(&mixed).max(max_abs(&same))
}

pub fn hermiticity_defect(model: &CompositeModel) -> f64 {
    let h = build_hamiltonian(model).unwrap();
    max_abs(&(&h - h.adjoint()))
}

pub fn random_density_matrix<R: Rng>(dim: usize, rng: &mut R) -> OperatorMatrix {
    let a = OperatorMatrix::from_fn(dim, dim, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let rho = &a * a.adjoint();
    let tr = rho.trace();
    rho / tr
}

pub fn random_unitary<R: Rng>(dim: usize, rng: &mut R) -> OperatorMatrix {
    let a = OperatorMatrix::from_fn(dim, dim, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    a.qr().q()
}

/// Worst violation of unit trace, Hermiticity and positivity of ρ(t).
pub fn propagation_defect(model: &CompositeModel, rho0: &OperatorMatrix, t: f64) -> f64 {
    let d = diagonalize(&build_hamiltonian(model).unwrap(), model).unwrap();
    let l = build_liouvillian(&d, model).unwrap();
    let rho = propagate(&l, rho0, t).unwrap();
    let trace = (rho.trace() - C64::new(1.0, 0.0)).norm();
    let herm = max_abs(&(&rho - rho.adjoint()));
    let min = rho.clone().symmetric_eigen().eigenvalues.min();
    trace.max(herm).max(-min)
}

/// Re-evaluates a model after rotating every degenerate eigenspace by a random
/// unitary and returns the largest change of η, F and ΔE_min.
pub fn degenerate_rotation_deviation<R: Rng>(model: &CompositeModel, rng: &mut R) -> f64 {
    let options = exact_options();
    let base = diagonalize(&build_hamiltonian(model).unwrap(), model).unwrap();
    let mut vectors = base.eigenvectors.clone();
    let energies = base.energies.clone();
    let mut start = 0;
    let mut rotated_blocks = 0;
    while start < energies.len() {
        let mut end = start + 1;
        while end < energies.len() && energies[end] - energies[start] < 1e-9 {
            end += 1;
        }
        let size = end - start;
        if size > 1 {
            let u = random_unitary(size, rng);
            let cols = vectors.columns(start, size) * u;
            vectors.columns_mut(start, size).copy_from(&cols);
            rotated_blocks += 1;
        }
        start = end;
    }
    assert!(rotated_blocks > 0, "model has no degenerate eigenspace");
    let rotated = LevelDiagram::from_eigensystem(model, energies, vectors).unwrap();
    let a = evaluate_diagram(model, base, &options).unwrap().report;
    let b = evaluate_diagram(model, rotated, &options).unwrap().report;
    let de = if a.delta_e_min.is_infinite() && b.delta_e_min.is_infinite() { 0.0 } else { (a.delta_e_min - b.delta_e_min).abs() };
    (a.eta - b.eta).abs().max((a.fidelity_phase_opt - b.fidelity_phase_opt).abs()).max(de)
}

fn rates(model: &CompositeModel) -> (RateMatrix, Vec<f64>) {
    let d = diagonalize(&build_hamiltonian(model).unwrap(), model).unwrap();
    let k = RateMatrix::from_diagram(&d);
    let mut p0 = vec![0.0; d.dim()];
    p0[d.top()] = 1.0;
    (k, p0)
}

/// Largest change of a flux fraction when every rate is multiplied by `c`.
pub fn rescaling_deviation(model: &CompositeModel, c: f64) -> f64 {
    let (k, p0) = rates(model);
    let a = flux_fractions(&k, &p0).unwrap().fractions;
    let b = flux_fractions(&k.scaled(c), &p0).unwrap().fractions;
    (a - b).abs().max()
}

/// |Σ w_path − 1| over all enumerated paths from the top state.
pub fn weight_sum_defect(model: &CompositeModel) -> f64 {
    let (k, p0) = rates(model);
    let top = p0.iter().position(|&p| p == 1.0).unwrap();
    let mut paths = enumerate_decay_paths(&k, top, DEFAULT_PATH_CAP).unwrap();
    let fractions: DMatrix<f64> = flux_fractions(&k, &p0).unwrap().fractions;
    path_weights(&mut paths, &fractions);
    (paths.iter().map(|p| p.weight).sum::<f64>() - 1.0).abs()
}

/// Worst violation of Hermiticity and positivity of the normalized photon block.
pub fn block_defect(model: &CompositeModel, quadrature: Quadrature) -> f64 {
    let opts = PipelineOptions { quadrature, ..Default::default() };
    let m = evaluate(model, &opts).unwrap().block.matrix;
    let herm = max_abs(&(&m - m.adjoint()));
    let min = m.clone().symmetric_eigen().eigenvalues.min();
    herm.max(-min)
}

/// Change of the normalized block between the converged grid and one more doubling.
pub fn doubling_change(model: &CompositeModel) -> f64 {
    let e = evaluate(model, &PipelineOptions::default()).unwrap();
    let n = e.block.grid_points.unwrap();
    let d = e.diagram.dim();
    let l = build_liouvillian(&e.diagram, model).unwrap();
    let mut rho0 = OperatorMatrix::zeros(d, d);
    rho0[(d - 1, d - 1)] = C64::new(1.0, 0.0);
    let once = |points| Quadrature::Grid { points, tolerance: f64::INFINITY, max_points: 1 << 20 };
    let at_n = photon_block(&l, &rho0, &e.target.sequences, &once(n.div_ceil(2))).unwrap();
    let at_2n = photon_block(&l, &rho0, &e.target.sequences, &once(n)).unwrap();
    assert_eq!(at_n.grid_points, Some(n));
    max_abs(&(at_n.matrix - at_2n.matrix))
}

/// Counter-rotating admixture scale |J|/ħω. The admixture amplitude is about
/// J/2ħω and enters the rates through interference with the allowed amplitude,
/// so a common energy shift moves cascade weights by at most this much.
pub fn counter_rotating_scale(model: &CompositeModel) -> f64 {
    let n = model.n_emitters();
    let omega = model.emitters.iter().map(|e| e.omega).fold(f64::INFINITY, f64::min);
    let mut j: f64 = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            j = j.max(dipole_coupling(&model.emitters[a], &model.emitters[b], model.coupling.epsilon_r).unwrap().abs());
        }
    }
    j / omega
}
