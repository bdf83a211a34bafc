//! Decay-path enumeration and classical rate equations for the cascade.

use std::cmp::Ordering;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lindblad::HORIZON_RESIDUAL;
use crate::spectrum::LevelDiagram;
use crate::units::FREQUENCY_TOLERANCE_EV;

pub const DEFAULT_PATH_CAP: usize = 10_000_000;

/// Downhill rate constants k[(l, m)] for l → m, in units of γ₀.
#[derive(Clone, Debug, PartialEq)]
pub struct RateMatrix {
    pub rates: DMatrix<f64>,
    pub energies: Vec<f64>,
}

impl RateMatrix {
    /// Rates of every transition above the diagram's brightness threshold.
    pub fn from_diagram(diagram: &LevelDiagram) -> Self {
        Self::from_diagram_with(diagram, diagram.threshold)
    }

    pub fn from_diagram_with(diagram: &LevelDiagram, threshold: f64) -> Self {
        let d = diagram.dim();
        let mut rates = DMatrix::zeros(d, d);
        for t in diagram.transitions_with(threshold) {
            rates[(t.from, t.to)] = t.rate;
        }
        Self { rates, energies: diagram.energies.clone() }
    }

    pub fn new(energies: Vec<f64>, rates: DMatrix<f64>) -> Result<Self> {
        let d = energies.len();
        if rates.nrows() != d || rates.ncols() != d {
            return Err(Error::InvalidArgument(format!("rate matrix must be {d}x{d}")));
        }
        for l in 0..d {
            for m in 0..d {
                let k = rates[(l, m)];
                if !(k >= 0.0) || !k.is_finite() {
                    return Err(Error::InvalidArgument(format!("rate k[{l},{m}] = {k} is not a nonnegative number")));
                }
                if k > 0.0 && !(energies[l] - energies[m] > FREQUENCY_TOLERANCE_EV) {
                    return Err(Error::InvalidArgument(format!("rate k[{l},{m}] does not point downhill")));
                }
            }
        }
        Ok(Self { rates, energies })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { rates: &self.rates * factor, energies: self.energies.clone() }
    }

    pub fn out_rate(&self, l: usize) -> f64 {
        self.rates.row(l).sum()
    }

    pub fn max_rate(&self) -> f64 {
        self.rates.iter().copied().fold(0.0, f64::max)
    }

    fn successors(&self, l: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.dim()).filter(move |&m| self.rates[(l, m)] > 0.0)
    }

    /// `dp/dt = M p`.
    pub fn generator(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for l in 0..d {
            for k in 0..d {
                let r = self.rates[(l, k)];
                if r > 0.0 {
                    m[(k, l)] += r;
                    m[(l, l)] -= r;
                }
            }
        }
        m
    }

    fn emitting(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&l| self.out_rate(l) > 0.0).collect()
    }
}

/// A cascade from the initial state to the ground state (index 0).
#[derive(Clone, Debug, PartialEq)]
pub struct DecayPath {
    pub states: Vec<usize>,
    /// Photon energies in eV, one per hop.
    pub frequencies: Vec<f64>,
    pub weight: f64,
    /// Number of state sequences folded into this entry by frequency merging.
    pub multiplicity: usize,
}

/// Depth-first enumeration of every downhill route to the ground state, in
/// lexicographic order of state sequences. Weights are left at zero.
pub fn enumerate_decay_paths(k: &RateMatrix, initial: usize, cap: usize) -> Result<Vec<DecayPath>> {
    if initial >= k.dim() {
        return Err(Error::InvalidArgument(format!("initial state {initial} out of range")));
    }
    let mut out = Vec::new();
    let mut stack = vec![initial];
    dfs(k, &mut stack, &mut out, cap)?;
    Ok(out)
}

fn dfs(k: &RateMatrix, stack: &mut Vec<usize>, out: &mut Vec<DecayPath>, cap: usize) -> Result<()> {
    let l = *stack.last().unwrap();
    if l == 0 {
        if out.len() >= cap {
            return Err(Error::Resource(format!("more than {cap} decay paths")));
        }
        let frequencies = stack.windows(2).map(|w| k.energies[w[0]] - k.energies[w[1]]).collect();
        out.push(DecayPath { states: stack.clone(), frequencies, weight: 0.0, multiplicity: 1 });
        return Ok(());
    }
    let next: Vec<usize> = k.successors(l).collect();
    for m in next {
        stack.push(m);
        dfs(k, stack, out, cap)?;
        stack.pop();
    }
    Ok(())
}

/// Number of downhill routes from `initial` to the ground state, without
/// materializing them.
pub fn count_decay_paths(k: &RateMatrix, initial: usize) -> Result<u128> {
    if initial >= k.dim() {
        return Err(Error::InvalidArgument(format!("initial state {initial} out of range")));
    }
    let mut order: Vec<usize> = (0..k.dim()).collect();
    order.sort_by(|&a, &b| k.energies[a].total_cmp(&k.energies[b]));
    let mut count = vec![0u128; k.dim()];
    for &l in &order {
        count[l] = if l == 0 { 1 } else { k.successors(l).map(|m| count[m]).fold(0u128, u128::saturating_add) };
    }
    Ok(count[initial])
}

/// Population trajectories sampled at the requested times.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectories {
    pub times: Vec<f64>,
    /// `populations[i][l]` is p_l at `times[i]`.
    pub populations: Vec<Vec<f64>>,
}

fn validate_p0(k: &RateMatrix, p0: &[f64]) -> Result<()> {
    if p0.len() != k.dim() {
        return Err(Error::InvalidArgument(format!("initial populations have length {}, expected {}", p0.len(), k.dim())));
    }
    if p0.iter().any(|&p| !(p >= 0.0)) {
        return Err(Error::InvalidArgument("initial populations must be nonnegative".into()));
    }
    let s: f64 = p0.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("initial populations sum to {s}")));
    }
    Ok(())
}

fn rk4_step(m: &DMatrix<f64>, p: &DVector<f64>, h: f64) -> DVector<f64> {
    let k1 = m * p;
    let k2 = m * (p + &k1 * (0.5 * h));
    let k3 = m * (p + &k2 * (0.5 * h));
    let k4 = m * (p + &k3 * h);
    p + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

fn max_step(k: &RateMatrix) -> f64 {
    let r = k.max_rate();
    if r > 0.0 { 0.01 / r } else { f64::INFINITY }
}

/// Fourth-order Runge-Kutta with steps no longer than 0.01/max rate.
pub fn integrate_rate_equations(k: &RateMatrix, p0: &[f64], times: &[f64]) -> Result<Trajectories> {
    validate_p0(k, p0)?;
    if times.iter().any(|t| !(*t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("times must be nonnegative and ascending".into()));
    }
    let m = k.generator();
    let hmax = max_step(k);
    let mut p = DVector::from_column_slice(p0);
    let mut now = 0.0;
    let mut populations = Vec::with_capacity(times.len());
    for &t in times {
        let span = t - now;
        if span > 0.0 {
            let steps = (span / hmax).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            for _ in 0..steps {
                p = rk4_step(&m, &p, h);
            }
            now = t;
        }
        populations.push(p.iter().copied().collect());
    }
    Ok(Trajectories { times: times.to_vec(), populations })
}

/// Time by which at most [`HORIZON_RESIDUAL`] of the population remains in
/// emitting states, capped at 50 lifetimes of the slowest rate.
pub fn classical_horizon(k: &RateMatrix, p0: &[f64]) -> Result<f64> {
    validate_p0(k, p0)?;
    let rates: Vec<f64> = k.rates.iter().copied().filter(|&r| r > 0.0).collect();
    if rates.is_empty() {
        return Ok(0.0);
    }
    let gmin = rates.iter().copied().fold(f64::INFINITY, f64::min);
    let cap = crate::lindblad::HORIZON_LIFETIMES / gmin;
    let m = k.generator();
    let p0 = DVector::from_column_slice(p0);
    let emitting = k.emitting();
    let residual = |t: f64| -> f64 {
        let p = (&m * t).exp() * &p0;
        emitting.iter().map(|&i| p[i]).sum()
    };
    if residual(0.0) <= HORIZON_RESIDUAL {
        return Ok(0.0);
    }
    let mut hi = (1.0 / k.max_rate()).min(cap);
    while residual(hi) > HORIZON_RESIDUAL {
        if hi >= cap {
            return Ok(cap);
        }
        hi = (2.0 * hi).min(cap);
    }
    let mut lo = 0.0;
    while hi - lo > 1e-10 * hi {
        let mid = 0.5 * (lo + hi);
        if residual(mid) > HORIZON_RESIDUAL {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Relative outward fluxes w[(l, m)] = k_lm ∫p_l / Σ_m' k_lm' ∫p_l.
#[derive(Clone, Debug, PartialEq)]
pub struct FluxFractions {
    pub fractions: DMatrix<f64>,
    pub horizon: f64,
    pub settled: f64,
    /// The integrals were taken in closed form over [0, ∞) because the RK4
    /// grid would have needed more than [`FLUX_STEP_BUDGET`] steps.
    pub closed_form: bool,
}

/// Most RK4 steps (coarse and halved passes together) spent on flux integrals.
pub const FLUX_STEP_BUDGET: usize = 1_000_000;

fn fractions_from_integrals(k: &RateMatrix, integral: &DVector<f64>) -> DMatrix<f64> {
    let d = k.dim();
    let mut w = DMatrix::zeros(d, d);
    for l in 0..d {
        let total: f64 = (0..d).map(|m| k.rates[(l, m)] * integral[l]).sum();
        if total > 0.0 && total.is_finite() {
            for m in 0..d {
                w[(l, m)] = k.rates[(l, m)] * integral[l] / total;
            }
        }
    }
    w
}

fn flux_with_step(k: &RateMatrix, p0: &[f64], horizon: f64, h: f64) -> (DMatrix<f64>, f64) {
    let m = k.generator();
    let steps = (horizon / h).ceil().max(1.0) as usize;
    let h = horizon / steps as f64;
    let mut p = DVector::from_column_slice(p0);
    let mut integral = &p * (0.5 * h);
    for s in 0..steps {
        p = rk4_step(&m, &p, h);
        let w = if s + 1 == steps { 0.5 * h } else { h };
        integral += &p * w;
    }
    let settled = 1.0 - k.emitting().iter().map(|&i| p[i]).sum::<f64>();
    (fractions_from_integrals(k, &integral), settled)
}

/// ∫₀^∞ p_l dt for every emitting state. Every transition lowers the energy,
/// so integrating dp_l/dt from the top down gives
/// Γ_l ∫p_l = p_l(0) + Σ_u k_ul ∫p_u.
fn closed_form_integrals(k: &RateMatrix, p0: &[f64]) -> DVector<f64> {
    let d = k.dim();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| k.energies[b].total_cmp(&k.energies[a]));
    let mut integral = DVector::zeros(d);
    for &l in &order {
        let out = k.out_rate(l);
        if out > 0.0 {
            let inflow: f64 = (0..d).map(|u| k.rates[(u, l)] * integral[u]).sum();
            integral[l] = (p0[l] + inflow) / out;
        }
    }
    integral
}

/// Flux fractions from trapezoid integrals along the RK4 trajectory, verified
/// by halving the step. Networks too stiff for the step budget fall back to
/// the closed-form integrals.
pub fn flux_fractions(k: &RateMatrix, p0: &[f64]) -> Result<FluxFractions> {
    let horizon = classical_horizon(k, p0)?;
    let h = max_step(k).min(horizon.max(f64::MIN_POSITIVE));
    let steps = (horizon / h).ceil();
    if 3.0 * steps > FLUX_STEP_BUDGET as f64 {
        let p = (k.generator() * horizon).exp() * DVector::from_column_slice(p0);
        let settled = 1.0 - k.emitting().iter().map(|&i| p[i]).sum::<f64>();
        let fractions = fractions_from_integrals(k, &closed_form_integrals(k, p0));
        return Ok(FluxFractions { fractions, horizon, settled, closed_form: true });
    }
    let (coarse, _) = flux_with_step(k, p0, horizon, h);
    let (fine, settled) = flux_with_step(k, p0, horizon, 0.5 * h);
    if settled < 1.0 - HORIZON_RESIDUAL * (1.0 + 1e-3) {
        return Err(Error::Accuracy(format!("rate equations did not settle by t = {horizon}: settled {settled}")));
    }
    let drift = coarse.iter().zip(fine.iter()).map(|(a, b)| (a - b).abs() / b.abs().max(1e-300)).fold(0.0, f64::max);
    if drift > 1e-6 {
        return Err(Error::Accuracy(format!("flux fractions changed by {drift:e} under step halving")));
    }
    Ok(FluxFractions { fractions: fine, horizon, settled, closed_form: false })
}

/// Weight of each path = product of its hop fractions.
pub fn path_weights(paths: &mut [DecayPath], fractions: &DMatrix<f64>) {
    for p in paths.iter_mut() {
        p.weight = p.states.windows(2).map(|w| fractions[(w[0], w[1])]).product();
    }
}

/// Hop fractions equal to the exact branching ratios k_lm / Σ_m k_lm.
pub fn branching_fractions(k: &RateMatrix) -> DMatrix<f64> {
    let d = k.dim();
    DMatrix::from_fn(d, d, |l, m| {
        let out = k.out_rate(l);
        if out > 0.0 { k.rates[(l, m)] / out } else { 0.0 }
    })
}

fn cmp_frequencies(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

fn same_frequencies(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= FREQUENCY_TOLERANCE_EV)
}

/// Folds paths emitting the same photon energies (within tolerance) into one
/// entry, then orders by descending weight with ties broken by state sequence.
pub fn merge_by_frequency(paths: Vec<DecayPath>) -> Vec<DecayPath> {
    let mut sorted = paths;
    sorted.sort_by(|a, b| cmp_frequencies(&a.frequencies, &b.frequencies).then_with(|| a.states.cmp(&b.states)));
    let mut merged: Vec<DecayPath> = Vec::new();
    for p in sorted {
        match merged.last_mut() {
            Some(last) if same_frequencies(&last.frequencies, &p.frequencies) => {
                last.weight += p.weight;
                last.multiplicity += p.multiplicity;
                if p.states < last.states {
                    last.states = p.states;
                }
            }
            _ => merged.push(p),
        }
    }
    sort_paths(&mut merged);
    merged
}

pub fn sort_paths(paths: &mut [DecayPath]) {
    paths.sort_by(|a, b| b.weight.total_cmp(&a.weight).then_with(|| a.states.cmp(&b.states)));
}

/// Path table: id, state sequence, photon energies (eV), weight.
pub fn paths_csv(paths: &[DecayPath]) -> String {
    let mut s = String::from("path_id,states,frequencies_ev,weight,multiplicity\n");
    for (i, p) in paths.iter().enumerate() {
        let states: Vec<String> = p.states.iter().map(|x| x.to_string()).collect();
        let freqs: Vec<String> = p.frequencies.iter().map(|x| format!("{x:.16e}")).collect();
        let _ = writeln!(s, "{},{},{},{:.16e},{}", i, states.join(">"), freqs.join(";"), p.weight, p.multiplicity);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{in_plane_dipole, CouplingSpec, EmitterConfig};
    use crate::spectrum::{build_hamiltonian, diagonalize, CompositeModel};
    use nalgebra::Vector3;
    use proptest::prelude::*;

    fn bell(d: f64, g: f64) -> LevelDiagram {
        let emitters = vec![
            EmitterConfig::new(1.0, Vector3::new(d, 0.0, 0.0), Vector3::new(40.0, 0.0, 0.0)).unwrap(),
            EmitterConfig::new(1.0, in_plane_dipole(d, 0.0), Vector3::zeros()).unwrap(),
        ];
        let coupling = CouplingSpec::uniform(2, 1.0, g, &[(0, 1)]).unwrap();
        let model = CompositeModel::with_reference_dipole(emitters, coupling, 6.0, 0.0).unwrap();
        diagonalize(&build_hamiltonian(&model).unwrap(), &model).unwrap()
    }

    fn top_population(d: usize) -> Vec<f64> {
        let mut p = vec![0.0; d];
        p[d - 1] = 1.0;
        p
    }

    fn ladder(rates: &[f64]) -> RateMatrix {
        let d = rates.len() + 1;
        let energies: Vec<f64> = (0..d).map(|i| i as f64).collect();
        let mut k = DMatrix::zeros(d, d);
        for (i, &r) in rates.iter().enumerate() {
            k[(i + 1, i)] = r;
        }
        RateMatrix::new(energies, k).unwrap()
    }

    #[test]
    fn path_counts_for_baselines() {
        let k = RateMatrix::from_diagram(&bell(6.0, 0.0));
        let paths = enumerate_decay_paths(&k, 5, DEFAULT_PATH_CAP).unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].states.len(), 3);
        let k = RateMatrix::from_diagram(&bell(6.0, 0.08));
        let paths = enumerate_decay_paths(&k, 5, DEFAULT_PATH_CAP).unwrap();
        assert_eq!(paths.len(), 2);
        assert_eq!(count_decay_paths(&k, 5).unwrap(), 2);
        assert!(paths[0].states < paths[1].states);
        for p in &paths {
            assert!(p.frequencies.iter().all(|&f| f > 0.0));
            assert_eq!(*p.states.last().unwrap(), 0);
        }
    }

    #[test]
    fn closed_form_integrals_match_the_rk4_grid() {
        let d = bell(4.0, 0.05);
        let k = RateMatrix::from_diagram(&d);
        let p0 = top_population(d.dim());
        let grid = flux_fractions(&k, &p0).unwrap();
        assert!(!grid.closed_form);
        let exact = fractions_from_integrals(&k, &closed_form_integrals(&k, &p0));
        assert!((grid.fractions - exact).abs().max() < 1e-9);
        // three-level ladder: every state sees the full unit of population
        let k = ladder(&[2.0, 0.5]);
        let i = closed_form_integrals(&k, &[0.0, 0.0, 1.0]);
        assert!((i[2] - 2.0).abs() < 1e-15 && (i[1] - 0.5).abs() < 1e-15 && i[0] == 0.0);
    }

    #[test]
    fn stiff_networks_use_closed_form() {
        let mut rates = DMatrix::zeros(3, 3);
        rates[(2, 1)] = 1.0;
        rates[(2, 0)] = 1e-3;
        rates[(1, 0)] = 1e-9;
        let k = RateMatrix::new(vec![0.0, 1.0, 2.0], rates).unwrap();
        let f = flux_fractions(&k, &[0.0, 0.0, 1.0]).unwrap();
        assert!(f.closed_form);
        assert!(f.settled > 1.0 - 2e-6);
        let b = branching_fractions(&k);
        assert!((f.fractions - b).abs().max() < 1e-15);
    }

    #[test]
    fn path_cap_is_enforced() {
        let k = RateMatrix::from_diagram(&bell(6.0, 0.08));
        assert!(matches!(enumerate_decay_paths(&k, 5, 1), Err(Error::Resource(_))));
    }

    #[test]
    fn single_exponential() {
        let k = ladder(&[1.0]);
        let times: Vec<f64> = (0..=40).map(|i| 0.25 * i as f64).collect();
        let tr = integrate_rate_equations(&k, &[0.0, 1.0], &times).unwrap();
        for (t, p) in tr.times.iter().zip(&tr.populations) {
            assert!((p[1] - (-t).exp()).abs() < 1e-9, "t={t}");
            assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn negative_initial_population_rejected() {
        let k = ladder(&[1.0]);
        assert!(matches!(integrate_rate_equations(&k, &[1.2, -0.2], &[1.0]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn uphill_rate_rejected() {
        let mut k = DMatrix::zeros(2, 2);
        k[(0, 1)] = 1.0;
        assert!(RateMatrix::new(vec![0.0, 1.0], k).is_err());
    }

    #[test]
    fn weights_sum_to_one_and_match_branching() {
        let k = RateMatrix::from_diagram(&bell(6.0, 0.08));
        let mut paths = enumerate_decay_paths(&k, 5, DEFAULT_PATH_CAP).unwrap();
        let flux = flux_fractions(&k, &top_population(6)).unwrap();
        path_weights(&mut paths, &flux.fractions);
        let total: f64 = paths.iter().map(|p| p.weight).sum();
        assert!((total - 1.0).abs() < 1e-6);
        let exact = branching_fractions(&k);
        for l in 0..6 {
            for m in 0..6 {
                if flux.fractions[(l, m)] > 0.0 {
                    assert!((flux.fractions[(l, m)] - exact[(l, m)]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn strong_hybridization_equalizes_branches() {
        let k = RateMatrix::from_diagram(&bell(0.5, 0.08));
        let mut paths = enumerate_decay_paths(&k, 5, DEFAULT_PATH_CAP).unwrap();
        path_weights(&mut paths, &flux_fractions(&k, &top_population(6)).unwrap().fractions);
        assert_eq!(paths.len(), 2);
        for p in &paths {
            assert!((p.weight - 0.5).abs() < 1e-3, "{}", p.weight);
        }
    }

    #[test]
    fn merging_sums_degenerate_frequencies() {
        let energies = vec![0.0, 1.0, 1.0 + 1e-12, 2.0];
        let mut k = DMatrix::zeros(4, 4);
        k[(3, 1)] = 1.0;
        k[(3, 2)] = 3.0;
        k[(1, 0)] = 1.0;
        k[(2, 0)] = 1.0;
        let k = RateMatrix::new(energies, k).unwrap();
        let mut paths = enumerate_decay_paths(&k, 3, DEFAULT_PATH_CAP).unwrap();
        path_weights(&mut paths, &branching_fractions(&k));
        let merged = merge_by_frequency(paths);
        assert_eq!(merged.len(), 1);
        assert!((merged[0].weight - 1.0).abs() < 1e-15);
        assert_eq!(merged[0].multiplicity, 2);
        assert_eq!(merged[0].states, vec![3, 1, 0]);
    }

    #[test]
    fn ordering_is_weight_then_states() {
        let mk = |s: Vec<usize>, w: f64| DecayPath { frequencies: vec![s[0] as f64], states: s, weight: w, multiplicity: 1 };
        let mut v = vec![mk(vec![3, 0], 0.25), mk(vec![2, 0], 0.25), mk(vec![1, 0], 0.5)];
        sort_paths(&mut v);
        let order: Vec<usize> = v.iter().map(|p| p.states[0]).collect();
        assert_eq!(order, vec![1, 2, 3]);
    }

    #[test]
    fn path_table_export() {
        let k = RateMatrix::from_diagram(&bell(6.0, 0.08));
        let paths = enumerate_decay_paths(&k, 5, DEFAULT_PATH_CAP).unwrap();
        let csv = paths_csv(&paths);
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(1).unwrap().starts_with("0,5>"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn fractions_invariant_under_rate_rescaling(d in 0.5..6.0f64, g in -0.1..0.1f64, c in 0.05..20.0f64) {
            let k = RateMatrix::from_diagram(&bell(d, g));
            let p0 = top_population(6);
            let a = flux_fractions(&k, &p0).unwrap();
            let b = flux_fractions(&k.scaled(c), &p0).unwrap();
            for (x, y) in a.fractions.iter().zip(b.fractions.iter()) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn rate_equations_conserve_probability(d in 0.5..6.0f64, g in -0.1..0.1f64, t in 0.0..30.0f64) {
            let k = RateMatrix::from_diagram(&bell(d, g));
            let tr = integrate_rate_equations(&k, &top_population(6), &[t / 3.0, t]).unwrap();
            for p in &tr.populations {
                prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }
}
