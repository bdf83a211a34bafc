//! Master-equation dynamics in the eigenbasis and multi-time photon
//! correlators obtained from the quantum regression theorem.
//!
//! Density matrices are vectorized row-major, `vec(X)[a·D + b] = X[a, b]`, so
//! `vec(A X B) = (A ⊗ Bᵀ) vec(X)`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::manybody::OperatorMatrix;
use crate::spectrum::{CompositeModel, LevelDiagram};
use crate::units::FREQUENCY_TOLERANCE_EV;

/// Population left in emitting states at the integration horizon.
pub const HORIZON_RESIDUAL: f64 = 1e-6;
/// The horizon never exceeds this many lifetimes of the slowest transition.
pub const HORIZON_LIFETIMES: f64 = 50.0;

/// Radiative quantum jump `sqrt(rate) |to⟩⟨from|`; `energy` is the photon energy in eV.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jump {
    pub from: usize,
    pub to: usize,
    pub rate: f64,
    pub energy: f64,
}

#[derive(Clone, Debug)]
pub struct Liouvillian {
    pub dim: usize,
    /// D²×D² generator acting on row-major vectorized density matrices.
    pub generator: OperatorMatrix,
    pub jumps: Vec<Jump>,
    pub dephasing: f64,
    pub energies: Vec<f64>,
    pub hbar_gamma0_ev: Option<f64>,
}

/// One radiative channel per allowed transition and one dephasing channel per
/// eigenstate. The coherent part is present only in the lab frame.
pub fn build_liouvillian(diagram: &LevelDiagram, model: &CompositeModel) -> Result<Liouvillian> {
    let jumps = diagram
        .transitions()
        .into_iter()
        .map(|t| Jump { from: t.from, to: t.to, rate: t.rate, energy: t.energy })
        .collect();
    Liouvillian::from_jumps(diagram.energies.clone(), jumps, model.dephasing, model.hbar_gamma0_ev)
}

impl Liouvillian {
    pub fn from_jumps(
        energies: Vec<f64>,
        jumps: Vec<Jump>,
        dephasing: f64,
        hbar_gamma0_ev: Option<f64>,
    ) -> Result<Self> {
        let d = energies.len();
        if !(dephasing >= 0.0) {
            return Err(Error::InvalidArgument(format!("dephasing must be >= 0, got {dephasing}")));
        }
        for j in &jumps {
            if j.from >= d || j.to >= d || j.from == j.to || !(j.rate >= 0.0) || !j.rate.is_finite() {
                return Err(Error::InvalidArgument(format!("invalid jump {j:?}")));
            }
        }
        let mut g = OperatorMatrix::zeros(d * d, d * d);
        for j in &jumps {
            g[(j.to * d + j.to, j.from * d + j.from)] += C64::new(j.rate, 0.0);
            for a in 0..d {
                for b in 0..d {
                    let hits = (a == j.from) as u8 + (b == j.from) as u8;
                    if hits > 0 {
                        g[(a * d + b, a * d + b)] -= C64::new(0.5 * j.rate * hits as f64, 0.0);
                    }
                }
            }
        }
        for a in 0..d {
            for b in 0..d {
                if a != b {
                    let mut z = C64::new(-dephasing, 0.0);
                    if let Some(hg) = hbar_gamma0_ev {
                        z += C64::new(0.0, -(energies[a] - energies[b]) / hg);
                    }
                    g[(a * d + b, a * d + b)] += z;
                }
            }
        }
        Ok(Self { dim: d, generator: g, jumps, dephasing, energies, hbar_gamma0_ev })
    }

    /// Classical rate matrix on populations, `dp/dt = M p`.
    pub fn population_generator(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for j in &self.jumps {
            m[(j.to, j.from)] += j.rate;
            m[(j.from, j.from)] -= j.rate;
        }
        m
    }

    /// States with at least one outgoing radiative channel.
    pub fn emitting_states(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.jumps.iter().filter(|j| j.rate > 0.0).map(|j| j.from).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Marks `states` and every state with a radiative route into them.
    fn ancestors(&self, states: &[usize]) -> Vec<bool> {
        let mut mark = vec![false; self.dim];
        for &s in states {
            mark[s] = true;
        }
        loop {
            let mut grew = false;
            for j in &self.jumps {
                if j.rate > 0.0 && mark[j.to] && !mark[j.from] {
                    mark[j.from] = true;
                    grew = true;
                }
            }
            if !grew {
                return mark;
            }
        }
    }

    /// Smallest time at which at most [`HORIZON_RESIDUAL`] of the population
    /// is left in emitting states, capped at [`HORIZON_LIFETIMES`]/γ_min.
    pub fn horizon(&self, rho0: &OperatorMatrix) -> Result<f64> {
        self.horizon_over(rho0, &self.emitting_states())
    }

    /// As [`Self::horizon`], counting only population that can still reach one
    /// of the `sources` (states whose emission matters), and taking γ_min over
    /// the jumps leaving that set.
    pub fn horizon_over(&self, rho0: &OperatorMatrix, sources: &[usize]) -> Result<f64> {
        let relevant = self.ancestors(sources);
        let rates: Vec<f64> =
            self.jumps.iter().filter(|j| j.rate > 0.0 && relevant[j.from]).map(|j| j.rate).collect();
        if rates.is_empty() {
            return Err(Error::InvalidInput("no radiative transitions".into()));
        }
        let gmin = rates.iter().copied().fold(f64::INFINITY, f64::min);
        let gmax = rates.iter().copied().fold(0.0, f64::max);
        let cap = HORIZON_LIFETIMES / gmin;
        let m = self.population_generator();
        let p0 = nalgebra::DVector::from_fn(self.dim, |i, _| rho0[(i, i)].re);
        let counted: Vec<usize> = self.emitting_states().into_iter().filter(|&i| relevant[i]).collect();
        let residual = |t: f64| -> f64 {
            let p = (&m * t).exp() * &p0;
            counted.iter().map(|&i| p[i]).sum()
        };
        if residual(0.0) <= HORIZON_RESIDUAL {
            return Ok(0.0);
        }
        let mut hi = (1.0 / gmax).min(cap);
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
}

fn vectorize(x: &OperatorMatrix) -> nalgebra::DVector<C64> {
    let d = x.nrows();
    nalgebra::DVector::from_fn(d * d, |k, _| x[(k / d, k % d)])
}

fn unvectorize(v: &nalgebra::DVector<C64>, d: usize) -> OperatorMatrix {
    OperatorMatrix::from_fn(d, d, |a, b| v[a * d + b])
}

/// Checks that `rho` is a D×D density matrix: Hermitian, unit trace and
/// positive semidefinite, all within `tol`.
pub fn check_density_matrix(rho: &OperatorMatrix, tol: f64) -> Result<()> {
    if rho.nrows() != rho.ncols() {
        return Err(Error::InvalidInput("density matrix is not square".into()));
    }
    let herm = (rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if herm > tol {
        return Err(Error::InvalidInput(format!("density matrix is not Hermitian (deviation {herm:e})")));
    }
    let tr = rho.trace();
    if (tr - C64::new(1.0, 0.0)).norm() > tol {
        return Err(Error::InvalidInput(format!("density matrix trace is {tr}")));
    }
    let min = min_eigenvalue(rho);
    if min < -tol {
        return Err(Error::InvalidInput(format!("density matrix has eigenvalue {min:e}")));
    }
    Ok(())
}

pub(crate) fn min_eigenvalue(m: &OperatorMatrix) -> f64 {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// ρ(t) = exp(𝓛 t) ρ₀.
pub fn propagate(l: &Liouvillian, rho0: &OperatorMatrix, t: f64) -> Result<OperatorMatrix> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("propagation time must be >= 0, got {t}")));
    }
    check_shape(l, rho0)?;
    check_density_matrix(rho0, 1e-9)?;
    let v = (&l.generator * C64::new(t, 0.0)).exp() * vectorize(rho0);
    Ok(unvectorize(&v, l.dim))
}

fn check_shape(l: &Liouvillian, rho0: &OperatorMatrix) -> Result<()> {
    if rho0.nrows() != l.dim || rho0.ncols() != l.dim {
        return Err(Error::InvalidArgument(format!(
            "initial state is {}x{}, expected {}x{}",
            rho0.nrows(),
            rho0.ncols(),
            l.dim,
            l.dim
        )));
    }
    Ok(())
}

/// Eigenstate populations at each of the ascending `times`.
pub fn population_trajectories(l: &Liouvillian, rho0: &OperatorMatrix, times: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_shape(l, rho0)?;
    check_density_matrix(rho0, 1e-9)?;
    if times.iter().any(|t| !(*t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("times must be nonnegative and ascending".into()));
    }
    let mut v = vectorize(rho0);
    let mut now = 0.0;
    let mut cached: Option<(f64, OperatorMatrix)> = None;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let dt = t - now;
        if dt > 0.0 {
            let reuse = matches!(&cached, Some((h, _)) if (h - dt).abs() <= 1e-12 * dt);
            if !reuse {
                cached = Some((dt, (&l.generator * C64::new(dt, 0.0)).exp()));
            }
            v = &cached.as_ref().unwrap().1 * v;
            now = t;
        }
        out.push((0..l.dim).map(|i| v[i * l.dim + i].re).collect());
    }
    Ok(out)
}

/// Transitions whose photon energies lie within `tolerance` of `center`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencyBin {
    pub center: f64,
    pub tolerance: f64,
}

impl FrequencyBin {
    pub fn new(center: f64, tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!("bin tolerance must be positive, got {tolerance}")));
        }
        Ok(Self { center, tolerance })
    }

    pub fn contains(&self, energy: f64) -> bool {
        (energy - self.center).abs() <= self.tolerance
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Quadrature {
    /// Iterated trapezoid rule on a uniform grid over [0, T_max], doubled from
    /// `points` until the normalized block changes by less than `tolerance`.
    Grid { points: usize, tolerance: f64, max_points: usize },
    /// Exact time integrals through the resolvent of the generator.
    Resolvent,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature::Grid { points: 200, tolerance: 1e-4, max_points: 25_601 }
    }
}

#[derive(Clone, Debug)]
pub struct PhotonBlock {
    /// Unit-trace K×K block.
    pub matrix: OperatorMatrix,
    pub unnormalized: OperatorMatrix,
    /// Photon energies (eV) of each of the K sequences.
    pub sequences: Vec<Vec<f64>>,
    /// Grid points used by the final (converged) grid evaluation.
    pub grid_points: Option<usize>,
    pub horizon: Option<f64>,
}

struct JumpSet<'a> {
    l: &'a Liouvillian,
    bins: Vec<Vec<Vec<usize>>>,
}

impl<'a> JumpSet<'a> {
    fn new(l: &'a Liouvillian, sequences: &[Vec<f64>]) -> Result<Self> {
        let bins = sequences
            .iter()
            .map(|seq| {
                seq.iter()
                    .map(|&e| {
                        let bin = FrequencyBin::new(e, FREQUENCY_TOLERANCE_EV)?;
                        Ok((0..l.jumps.len()).filter(|&k| bin.contains(l.jumps[k].energy)).collect())
                    })
                    .collect::<Result<Vec<Vec<usize>>>>()
            })
            .collect::<Result<_>>()?;
        Ok(Self { l, bins })
    }

    /// Initial states of jumps that can take part in a complete sequence: a
    /// jump in slot k counts only if its final state can still feed a jump of
    /// slot k+1.
    fn live_sources(&self) -> Vec<usize> {
        let d = self.l.dim;
        let mut out = Vec::new();
        for seq in &self.bins {
            let mut reach_next = vec![true; d];
            for slot in seq.iter().rev() {
                let live: Vec<usize> =
                    slot.iter().map(|&j| &self.l.jumps[j]).filter(|j| reach_next[j.to]).map(|j| j.from).collect();
                out.extend(live.iter().copied());
                reach_next = self.l.ancestors(&live);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// σ⁺_{ω_b} X σ⁻_{ω_a} at slot `k`, with the row index on the b side.
    fn sandwich(&self, x: &OperatorMatrix, a: usize, b: usize, k: usize) -> OperatorMatrix {
        let d = self.l.dim;
        let mut y = OperatorMatrix::zeros(d, d);
        for &jb in &self.bins[b][k] {
            let jb = &self.l.jumps[jb];
            for &ja in &self.bins[a][k] {
                let ja = &self.l.jumps[ja];
                let x_ba = x[(jb.from, ja.from)];
                if x_ba != C64::new(0.0, 0.0) {
                    y[(jb.to, ja.to)] += x_ba * (jb.rate * ja.rate).sqrt();
                }
            }
        }
        y
    }

    /// Lab-frame phase rate of slot `k` for the pair (a, b), in units of γ₀.
    fn detuning(&self, sequences: &[Vec<f64>], a: usize, b: usize, k: usize) -> f64 {
        match self.l.hbar_gamma0_ev {
            Some(hg) => (sequences[b][k] - sequences[a][k]) / hg,
            None => 0.0,
        }
    }
}

/// K×K block of the emitted multi-photon density matrix over the given photon
/// energy sequences, normalized to unit trace.
pub fn photon_block(
    l: &Liouvillian,
    rho0: &OperatorMatrix,
    sequences: &[Vec<f64>],
    quadrature: &Quadrature,
) -> Result<PhotonBlock> {
    check_shape(l, rho0)?;
    check_density_matrix(rho0, 1e-9)?;
    let k = sequences.len();
    if k == 0 {
        return Err(Error::InvalidArgument("at least one photon sequence is required".into()));
    }
    let p = sequences[0].len();
    if p == 0 || sequences.iter().any(|s| s.len() != p) {
        return Err(Error::InvalidArgument("photon sequences must be nonempty and of equal length".into()));
    }
    let jumps = JumpSet::new(l, sequences)?;
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|b| (0..k).map(move |a| (b, a))).collect();

    let (raw, grid_points, horizon) = match *quadrature {
        Quadrature::Resolvent => {
            let entries: Vec<C64> = pairs
                .par_iter()
                .map(|&(b, a)| resolvent_entry(l, &jumps, rho0, sequences, a, b))
                .collect::<Result<_>>()?;
            (DMatrix::from_row_slice(k, k, &entries), None, None)
        }
        Quadrature::Grid { points, tolerance, max_points } => {
            if points < 3 || max_points < points || !(tolerance > 0.0) {
                return Err(Error::InvalidArgument("invalid grid quadrature settings".into()));
            }
            let t_max = l.horizon_over(rho0, &jumps.live_sources())?;
            let eval = |n: usize| -> OperatorMatrix {
                let h = t_max / (n - 1) as f64;
                let step = (&l.generator * C64::new(h, 0.0)).exp();
                let level0 = trajectory(&step, &vectorize(rho0), n);
                let entries: Vec<C64> = pairs
                    .par_iter()
                    .map(|&(b, a)| grid_entry(l, &jumps, &step, &level0, sequences, a, b, h))
                    .collect();
                DMatrix::from_row_slice(k, k, &entries)
            };
            let mut n = points;
            let mut prev = eval(n);
            loop {
                let next_n = 2 * (n - 1) + 1;
                if next_n > max_points {
                    return Err(Error::Accuracy(format!(
                        "photon block did not converge to {tolerance:e} within {max_points} grid points"
                    )));
                }
                let next = eval(next_n);
                let change = match (normalize(&prev), normalize(&next)) {
                    (Ok(x), Ok(y)) => (x - y).iter().map(|z| z.norm()).fold(0.0, f64::max),
                    _ => f64::INFINITY,
                };
                n = next_n;
                prev = next;
                if change < tolerance {
                    break;
                }
            }
            (prev, Some(n), Some(t_max))
        }
    };
    let matrix = normalize(&raw)?;
    Ok(PhotonBlock { matrix, unnormalized: raw, sequences: sequences.to_vec(), grid_points, horizon })
}

fn normalize(raw: &OperatorMatrix) -> Result<OperatorMatrix> {
    let tr = raw.trace().re;
    if !(tr > 0.0) || !tr.is_finite() {
        return Err(Error::InvalidInput("selected photon sequences carry no probability".into()));
    }
    Ok(raw / C64::new(tr, 0.0))
}

fn trajectory(step: &OperatorMatrix, v0: &nalgebra::DVector<C64>, n: usize) -> Vec<OperatorMatrix> {
    let d = (v0.len() as f64).sqrt().round() as usize;
    let mut out = Vec::with_capacity(n);
    let mut v = v0.clone();
    for j in 0..n {
        if j > 0 {
            v = step * v;
        }
        out.push(unvectorize(&v, d));
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn grid_entry(
    l: &Liouvillian,
    jumps: &JumpSet,
    step: &OperatorMatrix,
    level0: &[OperatorMatrix],
    sequences: &[Vec<f64>],
    a: usize,
    b: usize,
    h: f64,
) -> C64 {
    let n = level0.len();
    let p = sequences[a].len();
    let half = C64::new(0.5 * h, 0.0);
    let mut level: Vec<OperatorMatrix> = level0.to_vec();
    for k in 0..p {
        let w = jumps.detuning(sequences, a, b, k);
        let y: Vec<OperatorMatrix> = level
            .iter()
            .enumerate()
            .map(|(j, x)| {
                let phase = C64::from_polar(1.0, w * h * j as f64);
                jumps.sandwich(x, a, b, k) * phase
            })
            .collect();
        if k + 1 == p {
            let mut total = C64::new(0.0, 0.0);
            for (j, yj) in y.iter().enumerate() {
                let wt = if j == 0 || j + 1 == n { 0.5 } else { 1.0 };
                total += yj.trace() * (wt * h);
            }
            return total;
        }
        let mut z = nalgebra::DVector::<C64>::zeros(l.dim * l.dim);
        let mut next = Vec::with_capacity(n);
        next.push(unvectorize(&z, l.dim));
        for j in 0..n - 1 {
            z = step * (z + vectorize(&y[j]) * half) + vectorize(&y[j + 1]) * half;
            next.push(unvectorize(&z, l.dim));
        }
        level = next;
    }
    unreachable!("sequences are nonempty")
}

fn resolvent_entry(
    l: &Liouvillian,
    jumps: &JumpSet,
    rho0: &OperatorMatrix,
    sequences: &[Vec<f64>],
    a: usize,
    b: usize,
) -> Result<C64> {
    let d = l.dim;
    let emitting = l.emitting_states();
    let keep: Vec<usize> = emitting.iter().flat_map(|&i| emitting.iter().map(move |&j| i * d + j)).collect();
    let s = keep.len();
    if s == 0 {
        return Err(Error::InvalidInput("no radiative transitions".into()));
    }
    let ls = OperatorMatrix::from_fn(s, s, |r, c| l.generator[(keep[r], keep[c])]);
    let p = sequences[a].len();
    let mut x = rho0.clone();
    for k in 0..p {
        let omega: f64 = (k..p).map(|j| jumps.detuning(sequences, a, b, j)).sum();
        let shifted = &ls + OperatorMatrix::identity(s, s) * C64::new(0.0, omega);
        let v = nalgebra::DVector::from_fn(s, |r, _| -x[(keep[r] / d, keep[r] % d)]);
        let y = shifted
            .lu()
            .solve(&v)
            .ok_or_else(|| Error::Internal("restricted Liouvillian is singular".into()))?;
        let mut full = OperatorMatrix::zeros(d, d);
        for (r, &idx) in keep.iter().enumerate() {
            full[(idx / d, idx % d)] = y[r];
        }
        x = jumps.sandwich(&full, a, b, k);
    }
    Ok(x.trace())
}
