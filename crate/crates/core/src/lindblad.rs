//! Master-equation integration:
//!
//! ```text
//! ρ̇ = −i[H(t), ρ] + Γ_h L(a†)ρ + Γ_c L(a)ρ + Σ_q [Γ_φ L(σᶻ_q)ρ + Γ_− L(σ⁻_q)ρ]
//! L(X)ρ = (2XρX† − X†Xρ − ρX†X)/2
//! ```
//!
//! The hot loop never touches dense operators. `H(t)` is compiled into a
//! fixed sparsity pattern with one value vector per Fourier frequency, and
//! every jump operator used here has at most one nonzero per row, so
//! `XρX†` is a scaled gather.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::hilbert::{
    re, Axis, CMatrix, DensityMatrix, HilbertSpace, Operator, StateVector, C64, I, ZERO,
};
use crate::ion_model::{TimeDependentHamiltonian, NU};

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseParams {
    pub heating: f64,
    pub phonon_loss: f64,
    pub dephasing: f64,
    pub emission: f64,
    /// Per-qubit (dephasing, emission) overrides; `None` entries and
    /// missing qubits fall back to the shared rates.
    pub qubit_overrides: Vec<Option<(f64, f64)>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Heating,
    PhononLoss,
    Dephasing,
    Emission,
}

impl Channel {
    pub const ALL: [Channel; 4] = [
        Channel::Heating,
        Channel::PhononLoss,
        Channel::Dephasing,
        Channel::Emission,
    ];
}

impl NoiseParams {
    pub fn new(heating: f64, phonon_loss: f64, dephasing: f64, emission: f64) -> Self {
        Self {
            heating,
            phonon_loss,
            dephasing,
            emission,
            qubit_overrides: Vec::new(),
        }
    }

    pub fn none() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("heating", self.heating),
            ("phonon_loss", self.phonon_loss),
            ("dephasing", self.dephasing),
            ("emission", self.emission),
        ];
        for (name, v) in named {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("rate must be non-negative, got {v}"),
                });
            }
        }
        for (dephasing, emission) in self.qubit_overrides.iter().flatten() {
            if !(*dephasing >= 0.0 && *emission >= 0.0) {
                return Err(Error::InvalidParameter {
                    name: "qubit_overrides",
                    reason: "per-qubit rates must be non-negative".into(),
                });
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        let shared = self.heating == 0.0
            && self.phonon_loss == 0.0
            && self.dephasing == 0.0
            && self.emission == 0.0;
        shared
            && self
                .qubit_overrides
                .iter()
                .flatten()
                .all(|&(d, e)| d == 0.0 && e == 0.0)
    }

    /// (dephasing, emission) acting on `qubit`.
    pub fn qubit_rates(&self, qubit: usize) -> (f64, f64) {
        self.qubit_overrides
            .get(qubit)
            .copied()
            .flatten()
            .unwrap_or((self.dephasing, self.emission))
    }

    /// Copy with one channel multiplied by `factor`.
    pub fn scaled(&self, channel: Channel, factor: f64) -> Self {
        let mut out = self.clone();
        match channel {
            Channel::Heating => out.heating *= factor,
            Channel::PhononLoss => out.phonon_loss *= factor,
            Channel::Dephasing => {
                out.dephasing *= factor;
                for (d, _) in out.qubit_overrides.iter_mut().flatten() {
                    *d *= factor;
                }
            }
            Channel::Emission => {
                out.emission *= factor;
                for (_, e) in out.qubit_overrides.iter_mut().flatten() {
                    *e *= factor;
                }
            }
        }
        out
    }

    /// (rate, X) pairs for every nonzero channel in `space`.
    pub fn jump_operators(&self, space: HilbertSpace) -> Vec<(f64, Operator)> {
        let mut jumps = Vec::new();
        if self.heating > 0.0 {
            jumps.push((self.heating, Operator::creation(space)));
        }
        if self.phonon_loss > 0.0 {
            jumps.push((self.phonon_loss, Operator::annihilation(space)));
        }
        for q in 0..space.n_qubits() {
            let (dephasing, emission) = self.qubit_rates(q);
            if dephasing > 0.0 {
                jumps.push((dephasing, Operator::pauli(space, q, Axis::Z).expect("qubit")));
            }
            if emission > 0.0 {
                jumps.push((emission, Operator::pauli(space, q, Axis::Minus).expect("qubit")));
            }
        }
        jumps
    }
}

/// L(X)ρ = (2XρX† − X†Xρ − ρX†X)/2.
pub fn dissipator(x: &Operator, rho: &DensityMatrix) -> Result<CMatrix> {
    if x.space() != rho.space() {
        return Err(Error::DimensionMismatch {
            expected: rho.space().dim(),
            actual: x.space().dim(),
        });
    }
    let x = x.matrix();
    let r = rho.matrix();
    let xd = x.adjoint();
    let xdx = &xd * x;
    Ok(((x * r * &xd) * re(2.0) - &xdx * r - r * &xdx) * re(0.5))
}

/// Dense right-hand side of the master equation at time `t`.
pub fn rhs(
    h: &TimeDependentHamiltonian,
    noise: &NoiseParams,
    rho: &DensityMatrix,
    t: f64,
) -> Result<CMatrix> {
    let ht = h.at(t);
    if ht.space() != rho.space() {
        return Err(Error::DimensionMismatch {
            expected: rho.space().dim(),
            actual: ht.space().dim(),
        });
    }
    let r = rho.matrix();
    let mut out = (ht.matrix() * r - r * ht.matrix()) * (-I);
    for (rate, x) in noise.jump_operators(rho.space()) {
        out += dissipator(&x, rho)? * re(rate);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub sample_every: usize,
    /// Steps between eigenvalue checks; 0 checks only at samples.
    pub positivity_check_every: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 2.0 * PI / (200.0 * NU),
            sample_every: 1,
            positivity_check_every: 0,
        }
    }
}

/// Largest step allowed while fast (non-rotating-wave) terms are active.
pub const MAX_LAB_DT: f64 = 2.0 * PI / (50.0 * NU);

pub const TRACE_TOLERANCE: f64 = 1e-8;
pub const HERMITICITY_TOLERANCE: f64 = 1e-6;
pub const POSITIVITY_TOLERANCE: f64 = 1e-6;

impl IntegratorConfig {
    pub fn with_dt(dt: f64) -> Self {
        Self {
            dt,
            ..Self::default()
        }
    }

    pub fn validate(&self, h: &TimeDependentHamiltonian) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: format!("must be positive, got {}", self.dt),
            });
        }
        if !h.is_constant() && self.dt > MAX_LAB_DT * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: format!(
                    "{} exceeds 2π/50 while non-rotating-wave terms are active",
                    self.dt
                ),
            });
        }
        if self.sample_every == 0 {
            return Err(Error::InvalidParameter {
                name: "sample_every",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }

    /// Number of uniform steps covering `t_final` with step at most `dt`.
    pub fn steps_for(&self, t_final: f64) -> usize {
        if t_final <= 0.0 {
            0
        } else {
            ((t_final / self.dt) - 1e-9).ceil().max(1.0) as usize
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IntegrationDiagnostics {
    pub steps: usize,
    pub max_trace_drift: f64,
    /// Largest ‖ρ − ρ†‖_max seen before each symmetrization.
    pub max_hermiticity_drift: f64,
    /// Smallest eigenvalue over all positivity checks.
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub samples: Vec<DensityMatrix>,
    pub diagnostics: IntegrationDiagnostics,
}

impl Trajectory {
    pub fn last(&self) -> &DensityMatrix {
        self.samples.last().expect("trajectories hold at least the initial state")
    }
}

/// Fixed-step RK4 over `[0, t_final]`, keeping every sample.
pub fn integrate(
    h: &TimeDependentHamiltonian,
    noise: &NoiseParams,
    rho0: &DensityMatrix,
    t_final: f64,
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    let mut times = Vec::new();
    let mut samples = Vec::new();
    let (_, diagnostics) = integrate_observed(h, noise, rho0, t_final, config, |t, rho| {
        times.push(t);
        samples.push(rho.clone());
        Ok(())
    })?;
    Ok(Trajectory {
        times,
        samples,
        diagnostics,
    })
}

/// Fixed-step RK4 over `[0, t_final]`, handing each sample to `observer`
/// instead of storing it. Returns the final state.
pub fn integrate_observed<F>(
    h: &TimeDependentHamiltonian,
    noise: &NoiseParams,
    rho0: &DensityMatrix,
    t_final: f64,
    config: &IntegratorConfig,
    mut observer: F,
) -> Result<(DensityMatrix, IntegrationDiagnostics)>
where
    F: FnMut(f64, &DensityMatrix) -> Result<()>,
{
    let space = rho0.space();
    if h.space() != space {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            actual: h.space().dim(),
        });
    }
    config.validate(h)?;
    noise.validate()?;
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "t_final",
            reason: format!("must be finite and non-negative, got {t_final}"),
        });
    }
    let trace0 = rho0.trace().re;
    if (trace0 - 1.0).abs() > TRACE_TOLERANCE {
        return Err(Error::TraceDrift {
            time: 0.0,
            trace: trace0,
            drift: (trace0 - 1.0).abs(),
        });
    }

    let mut diag = IntegrationDiagnostics {
        min_eigenvalue: f64::INFINITY,
        ..Default::default()
    };
    let check_positivity = |rho: &DensityMatrix, t: f64, diag: &mut IntegrationDiagnostics| {
        let lam = rho.min_eigenvalue();
        diag.min_eigenvalue = diag.min_eigenvalue.min(lam);
        if lam < -POSITIVITY_TOLERANCE {
            Err(Error::NegativeEigenvalue { time: t, eigenvalue: lam })
        } else {
            Ok(())
        }
    };

    check_positivity(rho0, 0.0, &mut diag)?;
    observer(0.0, rho0)?;
    let steps = config.steps_for(t_final);
    if steps == 0 {
        return Ok((rho0.clone(), diag));
    }
    let dt = t_final / steps as f64;

    let mut lv = Liouvillian::compile(h, noise);
    let mut state = RowMajor::from_matrix(rho0.matrix());
    let mut stepper = Rk4::new(space.dim());

    for step in 1..=steps {
        let t = (step - 1) as f64 * dt;
        stepper.step(&mut lv, &mut state, t, dt);
        let t_now = step as f64 * dt;

        let herm = state.hermitize();
        diag.max_hermiticity_drift = diag.max_hermiticity_drift.max(herm);
        if herm > HERMITICITY_TOLERANCE {
            return Err(Error::HermiticityDrift { time: t_now, drift: herm });
        }
        let tr = state.trace();
        let drift = (tr - trace0).abs();
        diag.max_trace_drift = diag.max_trace_drift.max(drift);
        if drift > TRACE_TOLERANCE {
            return Err(Error::TraceDrift { time: t_now, trace: tr, drift });
        }

        let sample = step % config.sample_every == 0 || step == steps;
        let periodic = config.positivity_check_every > 0 && step % config.positivity_check_every == 0;
        if sample || periodic {
            let rho = DensityMatrix::new(space, state.to_matrix())?;
            check_positivity(&rho, t_now, &mut diag)?;
            if sample {
                observer(t_now, &rho)?;
            }
        }
    }
    diag.steps = steps;
    let last = DensityMatrix::new(space, state.to_matrix())?;
    Ok((last, diag))
}

/// |ψ(t)⟩ = exp(−iHt)|ψ₀⟩ for a time-independent `H`, sampled every
/// `dt · sample_every` and at `t_final`.
pub fn integrate_unitary(
    h: &Operator,
    psi0: &StateVector,
    t_final: f64,
    config: &IntegratorConfig,
) -> Result<Vec<(f64, StateVector)>> {
    if h.space() != psi0.space() {
        return Err(Error::DimensionMismatch {
            expected: psi0.space().dim(),
            actual: h.space().dim(),
        });
    }
    let stride = config.dt * config.sample_every.max(1) as f64;
    let blocks = if t_final <= 0.0 {
        0
    } else {
        ((t_final / stride) - 1e-9).ceil().max(1.0) as usize
    };
    let mut out = vec![(0.0, psi0.clone())];
    if blocks == 0 {
        return Ok(out);
    }
    let tau = t_final / blocks as f64;
    let u = propagator(h, tau);
    let mut v = psi0.amplitudes().clone();
    for k in 1..=blocks {
        v = &u * v;
        let drift = (v.norm() - 1.0).abs();
        if drift > 1e-10 {
            return Err(Error::InvalidParameter {
                name: "h",
                reason: format!("propagator is not unitary: norm drift {drift:e}"),
            });
        }
        out.push((k as f64 * tau, StateVector::new(psi0.space(), v.clone())?));
    }
    Ok(out)
}

/// exp(−iHt) by scaling and squaring.
pub fn propagator(h: &Operator, t: f64) -> CMatrix {
    (h.matrix() * C64::new(0.0, -t)).exp()
}

/// Row-major dense buffer for the density matrix in the hot loop.
#[derive(Debug, Clone)]
struct RowMajor {
    n: usize,
    data: Vec<C64>,
}

impl RowMajor {
    fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![ZERO; n * n],
        }
    }

    fn from_matrix(m: &CMatrix) -> Self {
        let n = m.nrows();
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(m[(i, j)]);
            }
        }
        Self { n, data }
    }

    fn to_matrix(&self) -> CMatrix {
        CMatrix::from_row_slice(self.n, self.n, &self.data)
    }

    fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.data[i * self.n + i].re).sum()
    }

    /// ρ ← (ρ + ρ†)/2, returning the max deviation beforehand.
    fn hermitize(&mut self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            let d = &mut self.data[i * n + i];
            worst = worst.max(2.0 * d.im.abs());
            d.im = 0.0;
            for j in i + 1..n {
                let a = self.data[i * n + j];
                let b = self.data[j * n + i];
                worst = worst.max((a - b.conj()).norm());
                let avg = (a + b.conj()) * 0.5;
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg.conj();
            }
        }
        worst
    }
}

/// Jump operator with at most one nonzero per row: row `i` maps to
/// column `col` with weight `w`.
#[derive(Debug, Clone)]
struct MonomialJump {
    rate: f64,
    rows: Vec<(usize, usize, C64)>,
}

#[derive(Debug, Clone)]
enum Jump {
    Monomial(MonomialJump),
    Dense { rate: f64, x: CMatrix },
}

impl Jump {
    fn new(rate: f64, x: &Operator) -> Self {
        let m = x.matrix();
        let mut rows = Vec::new();
        for i in 0..m.nrows() {
            let mut nz = (0..m.ncols()).filter(|&j| m[(i, j)] != ZERO);
            match (nz.next(), nz.next()) {
                (None, _) => {}
                (Some(j), None) => rows.push((i, j, m[(i, j)])),
                (Some(_), Some(_)) => {
                    return Jump::Dense {
                        rate,
                        x: m.clone(),
                    }
                }
            }
        }
        Jump::Monomial(MonomialJump { rate, rows })
    }
}

/// Compiled generator `ρ̇ = Gρ + ρG† + Σ γ XρX†` with
/// `G(t) = −iH(t) − ½Σ γ X†X`.
struct Liouvillian {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    /// (ω, values on the shared pattern); G(t) = Σ e^{−iωt} values.
    components: Vec<(f64, Vec<C64>)>,
    values: Vec<C64>,
    jumps: Vec<Jump>,
    scratch: RowMajor,
}

impl Liouvillian {
    fn compile(h: &TimeDependentHamiltonian, noise: &NoiseParams) -> Self {
        let space = h.space();
        let n = space.dim();
        let jump_ops = noise.jump_operators(space);

        let mut dense_components: Vec<(f64, CMatrix)> = h
            .terms()
            .iter()
            .map(|(w, b)| (*w, b.matrix() * (-I)))
            .collect();
        if !jump_ops.is_empty() {
            let mut k = CMatrix::zeros(n, n);
            for (rate, x) in &jump_ops {
                k += (x.matrix().adjoint() * x.matrix()) * re(-0.5 * rate);
            }
            match dense_components.iter_mut().find(|(w, _)| *w == 0.0) {
                Some((_, m)) => *m += k,
                None => dense_components.push((0.0, k)),
            }
        }

        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if dense_components.iter().any(|(_, m)| m[(i, j)] != ZERO) {
                    cols.push(j);
                }
            }
            row_ptr.push(cols.len());
        }
        let components = dense_components
            .iter()
            .map(|(w, m)| {
                let mut vals = Vec::with_capacity(cols.len());
                for i in 0..n {
                    for &j in &cols[row_ptr[i]..row_ptr[i + 1]] {
                        vals.push(m[(i, j)]);
                    }
                }
                (*w, vals)
            })
            .collect();

        Self {
            n,
            values: vec![ZERO; cols.len()],
            row_ptr,
            cols,
            components,
            jumps: jump_ops.iter().map(|(r, x)| Jump::new(*r, x)).collect(),
            scratch: RowMajor::zeros(n),
        }
    }

    fn set_time(&mut self, t: f64) {
        self.values.iter_mut().for_each(|v| *v = ZERO);
        for (w, vals) in &self.components {
            let phase = C64::from_polar(1.0, -w * t);
            for (v, c) in self.values.iter_mut().zip(vals) {
                *v += phase * c;
            }
        }
    }

    /// out = L(ρ) at the time last passed to `set_time`.
    fn apply(&mut self, rho: &RowMajor, out: &mut RowMajor) {
        let n = self.n;
        let m = &mut self.scratch.data;
        m.iter_mut().for_each(|v| *v = ZERO);
        for i in 0..n {
            let row = &mut m[i * n..(i + 1) * n];
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let g = self.values[p];
                let src = &rho.data[self.cols[p] * n..(self.cols[p] + 1) * n];
                for (r, s) in row.iter_mut().zip(src) {
                    *r += g * s;
                }
            }
        }
        let o = &mut out.data;
        for i in 0..n {
            for j in 0..n {
                o[i * n + j] = m[i * n + j] + m[j * n + i].conj();
            }
        }
        for jump in &self.jumps {
            match jump {
                Jump::Monomial(mj) => {
                    for &(i, pi, xi) in &mj.rows {
                        let wi = xi * mj.rate;
                        let src = &rho.data[pi * n..(pi + 1) * n];
                        let dst = &mut o[i * n..(i + 1) * n];
                        for &(j, pj, xj) in &mj.rows {
                            dst[j] += wi * xj.conj() * src[pj];
                        }
                    }
                }
                Jump::Dense { rate, x } => {
                    let r = rho.to_matrix();
                    let add = (x * r * x.adjoint()) * re(*rate);
                    for i in 0..n {
                        for j in 0..n {
                            o[i * n + j] += add[(i, j)];
                        }
                    }
                }
            }
        }
    }
}

struct Rk4 {
    k: RowMajor,
    acc: RowMajor,
    tmp: RowMajor,
}

impl Rk4 {
    fn new(n: usize) -> Self {
        Self {
            k: RowMajor::zeros(n),
            acc: RowMajor::zeros(n),
            tmp: RowMajor::zeros(n),
        }
    }

    fn step(&mut self, lv: &mut Liouvillian, rho: &mut RowMajor, t: f64, h: f64) {
        let Self { k, acc, tmp } = self;

        lv.set_time(t);
        lv.apply(rho, k);
        for ((a, x), (kv, r)) in acc
            .data
            .iter_mut()
            .zip(tmp.data.iter_mut())
            .zip(k.data.iter().zip(&rho.data))
        {
            *a = *kv;
            *x = r + kv * (0.5 * h);
        }

        lv.set_time(t + 0.5 * h);
        lv.apply(tmp, k);
        for ((a, x), (kv, r)) in acc
            .data
            .iter_mut()
            .zip(tmp.data.iter_mut())
            .zip(k.data.iter().zip(&rho.data))
        {
            *a += kv * 2.0;
            *x = r + kv * (0.5 * h);
        }

        lv.apply(tmp, k);
        for ((a, x), (kv, r)) in acc
            .data
            .iter_mut()
            .zip(tmp.data.iter_mut())
            .zip(k.data.iter().zip(&rho.data))
        {
            *a += kv * 2.0;
            *x = r + kv * h;
        }

        lv.set_time(t + h);
        lv.apply(tmp, k);
        for ((r, a), kv) in rho.data.iter_mut().zip(&acc.data).zip(&k.data) {
            *r += (a + kv) * (h / 6.0);
        }
    }
}
