//! Closed-form wavepackets, moments and correlations of the simulated
//! dynamics, plus exact ideal states built from displacement algebra.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::hilbert::{qubit, CMatrix, CVector, StateVector, C64, ONE, ZERO};
use crate::protocols::{ProtocolKind, ProtocolSpec, Stage};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavepacketParams {
    pub delta: f64,
    pub p0: f64,
    pub c: f64,
    /// Boost velocity; ignored by the parity protocols.
    pub v: f64,
}

impl WavepacketParams {
    pub fn new(delta: f64, p0: f64, c: f64, v: f64) -> Result<Self> {
        let p = Self { delta, p0, c, v };
        p.validate()?;
        Ok(p)
    }

    pub fn from_spec(spec: &ProtocolSpec) -> Self {
        Self {
            delta: crate::hilbert::DELTA,
            p0: spec.p0,
            c: spec.transform.c,
            v: spec.transform.v,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "delta",
                reason: format!("must be positive, got {}", self.delta),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Frame {
    A,
    B,
}

fn named_kind(kind: ProtocolKind) -> Result<ProtocolKind> {
    match kind {
        ProtocolKind::General => Err(Error::InvalidParameter {
            name: "kind",
            reason: "closed forms exist only for the named protocols".into(),
        }),
        k => Ok(k),
    }
}

/// `N e^{−u²/4Δ²} e^{−ip₀u}` with `N = (√(2π)Δ)^{−1/2}`.
fn packet(u: f64, sign: f64, p: &WavepacketParams) -> C64 {
    let norm = ((2.0 * PI).sqrt() * p.delta).powf(-0.5);
    let env = (-u * u / (4.0 * p.delta * p.delta)).exp();
    C64::from_polar(norm * env, -sign * p.p0 * u)
}

/// Decoded wavefunction of one frame at position `x` and time `t`.
pub fn psi_frame(
    kind: ProtocolKind,
    frame: Frame,
    x: f64,
    t: f64,
    params: &WavepacketParams,
) -> Result<C64> {
    let kind = named_kind(kind)?;
    let ct = params.c * t;
    Ok(match (kind, frame) {
        (_, Frame::A) => packet(ct - x, 1.0, params),
        (ProtocolKind::TimeParity, Frame::B) => packet(ct + x, -1.0, params),
        (ProtocolKind::SpatialParity, Frame::B) => packet(ct + x, 1.0, params),
        (ProtocolKind::GalileanBoost, Frame::B) => packet(ct - x + params.v * t, 1.0, params),
        (ProtocolKind::General, _) => unreachable!(),
    })
}

/// `|ψ|²` on a grid.
pub fn frame_density(
    kind: ProtocolKind,
    frame: Frame,
    x_grid: &[f64],
    t: f64,
    params: &WavepacketParams,
) -> Result<Vec<f64>> {
    x_grid
        .iter()
        .map(|&x| psi_frame(kind, frame, x, t, params).map(|z| z.norm_sqr()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticExpectations {
    pub x_mean_a: f64,
    pub x_mean_b: f64,
    pub correlation: C64,
}

pub fn analytic_expectations(
    kind: ProtocolKind,
    t: f64,
    params: &WavepacketParams,
) -> Result<AnalyticExpectations> {
    let kind = named_kind(kind)?;
    let WavepacketParams { delta, p0, c, v } = *params;
    let ct = c * t;
    Ok(match kind {
        ProtocolKind::TimeParity => AnalyticExpectations {
            x_mean_a: ct,
            x_mean_b: -ct,
            correlation: ZERO,
        },
        ProtocolKind::SpatialParity => {
            let d2 = delta * delta;
            let mag = 2.0 * p0 * d2 * (-ct * ct / (2.0 * d2)).exp() * (-2.0 * p0 * p0 * d2).exp();
            AnalyticExpectations {
                x_mean_a: ct,
                x_mean_b: -ct,
                correlation: C64::new(0.0, -mag),
            }
        }
        ProtocolKind::GalileanBoost => {
            let env = (-t * t * v * v / (8.0 * delta * delta)).exp();
            AnalyticExpectations {
                x_mean_a: ct,
                x_mean_b: (c + v) * t,
                correlation: C64::from_polar(0.5 * t * (2.0 * c + v) * env, -p0 * t * v),
            }
        }
        ProtocolKind::General => unreachable!(),
    })
}

/// Truncated `⟨m|D(α)|n⟩`, `m, n < N`.
///
/// For `m ≥ n`: `√(n!/m!) α^{m−n} e^{−|α|²/2} L_n^{(m−n)}(|α|²)`, and the
/// `m < n` half follows from `⟨m|D(α)|n⟩ = conj⟨n|D(−α)|m⟩`.
pub fn displacement_matrix(alpha: C64, n: usize) -> CMatrix {
    let x = alpha.norm_sqr();
    let damp = (-x / 2.0).exp();
    let mut d = CMatrix::zeros(n, n);
    let mut lag = vec![0.0; n];
    for k in 0..n {
        let kf = k as f64;
        // L_j^{(k)}(x), j = 0..n−k
        let jmax = n - k;
        lag[0] = 1.0;
        if jmax > 1 {
            lag[1] = 1.0 + kf - x;
        }
        for j in 1..jmax.saturating_sub(1) {
            let jf = j as f64;
            lag[j + 1] = ((2.0 * jf + 1.0 + kf - x) * lag[j] - (jf + kf) * lag[j - 1]) / (jf + 1.0);
        }
        // walk n along the k-th subdiagonal: m = col + k
        for col in 0..jmax {
            let m = col + k;
            // √(col!/m!) α^k = Π_{j=col+1}^{m} α/√j
            let mut pref = ONE;
            for j in col + 1..=m {
                pref *= alpha / (j as f64).sqrt();
            }
            let val = pref * damp * lag[col];
            d[(m, col)] = val;
            if k > 0 {
                // ⟨col|D(α)|m⟩ = (−α*)^k √(col!/m!) e^{−x/2} L_col^{(k)}(x)
                let mut pref_up = ONE;
                for j in col + 1..=m {
                    pref_up *= -alpha.conj() / (j as f64).sqrt();
                }
                d[(col, m)] = pref_up * damp * lag[col];
            }
        }
    }
    d
}

/// `D(α)|0⟩` truncated to `N` levels.
pub fn coherent_state(alpha: C64, n: usize) -> CVector {
    let mut v = CVector::zeros(n);
    let mut term = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for k in 0..n {
        v[k] = term;
        term *= alpha / ((k + 1) as f64).sqrt();
    }
    v
}

/// σˣ eigenbasis, sign `+1` then `−1`.
const BRANCHES: [f64; 2] = [1.0, -1.0];

fn branch_spinor(sign: f64) -> qubit::Spinor {
    if sign > 0.0 {
        qubit::plus_x()
    } else {
        qubit::minus_x()
    }
}

/// Overlap of a spinor with the σˣ eigenvector of the given sign.
fn branch_amplitude(s: &qubit::Spinor, sign: f64) -> C64 {
    (s[0] + s[1] * sign) / 2f64.sqrt()
}

fn stage_displacements(stage: &Stage, signs: &[f64], t: f64) -> C64 {
    stage
        .couplings
        .iter()
        .map(|c| c.branch_displacement(signs[c.qubit], t))
        .sum()
}

/// Exact RWA state after `tau` of initialization (`0 ≤ tau ≤ t_init`)
/// followed by `t` of evolution. Each σˣ branch carries the sequential
/// displacements `D(β_evo) D(α_init)|0⟩`.
pub fn ideal_state_at(spec: &ProtocolSpec, tau: f64, t: f64) -> Result<StateVector> {
    let space = spec.space;
    let n = space.fock_cutoff();
    let nq = space.n_qubits();
    let mut total = CVector::zeros(space.dim());
    for mask in 0..(1usize << nq) {
        let signs: Vec<f64> = (0..nq).map(|q| BRANCHES[(mask >> (nq - 1 - q)) & 1]).collect();
        let weight: C64 = (0..nq)
            .map(|q| branch_amplitude(&spec.initial_qubits[q], signs[q]))
            .product();
        if weight.norm() < 1e-15 {
            continue;
        }
        let alpha = stage_displacements(&spec.init, &signs, tau);
        let beta = stage_displacements(&spec.evolution, &signs, t);
        let mode = displacement_matrix(beta, n) * coherent_state(alpha, n);
        let q_amps = signs.iter().fold(CVector::from_element(1, ONE), |acc, &sg| {
            let sp = branch_spinor(sg);
            acc.kronecker(&CVector::from_column_slice(&sp))
        });
        for (qi, qa) in q_amps.iter().enumerate() {
            if *qa == ZERO {
                continue;
            }
            for k in 0..n {
                total[qi * n + k] += weight * qa * mode[k];
            }
        }
    }
    StateVector::new(space, total)
}

/// `|ψ_I(t)⟩` after the full initialization and `t` of evolution.
pub fn ideal_state(spec: &ProtocolSpec, t: f64) -> Result<StateVector> {
    ideal_state_at(spec, spec.init.duration, t)
}

/// Ideal state partway through initialization.
pub fn ideal_init_state(spec: &ProtocolSpec, tau: f64) -> Result<StateVector> {
    ideal_state_at(spec, tau, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{linspace, mode_annihilation, mode_position, trapezoid, DensityMatrix, HilbertSpace};
    use crate::ion_model::DeviceParams;
    use crate::lindblad::{integrate_unitary, propagator, IntegratorConfig};
    use crate::protocols::{
        build_galilean_boost, build_spatial_parity, build_time_parity, decode_frames, ANCILLA_QUBIT,
    };
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn params() -> WavepacketParams {
        WavepacketParams::new(1.0, 1.0, 1e-3, 0.8e-3).unwrap()
    }

    fn expm_displacement(alpha: C64, n: usize) -> CMatrix {
        let a = mode_annihilation(n);
        let gen = a.adjoint() * alpha - &a * alpha.conj();
        gen.exp()
    }

    #[test]
    fn frame_a_at_zero_is_initial_packet() {
        let p = params();
        for &x in &[-2.0, -0.3, 0.0, 1.7] {
            let z = psi_frame(ProtocolKind::GalileanBoost, Frame::A, x, 0.0, &p).unwrap();
            let expected = C64::from_polar((-x * x / 4.0f64).exp() / (2.0 * PI).sqrt().sqrt(), x);
            assert!((z - expected).norm() < 1e-15);
        }
    }

    #[test]
    fn densities_are_normalized_and_peaked() {
        let p = params();
        let x = linspace(-15.0, 15.0, 3001);
        let t = 2.0 / p.c;
        for kind in ProtocolKind::NAMED {
            for frame in [Frame::A, Frame::B] {
                let d = frame_density(kind, frame, &x, t, &p).unwrap();
                assert_abs_diff_eq!(trapezoid(&x, &d), 1.0, epsilon = 1e-6);
            }
        }
        let d = frame_density(ProtocolKind::TimeParity, Frame::B, &x, t, &p).unwrap();
        let imax = (0..x.len()).max_by(|&i, &j| d[i].total_cmp(&d[j])).unwrap();
        assert_abs_diff_eq!(x[imax], -2.0, epsilon = 1e-9);
        assert!(psi_frame(ProtocolKind::General, Frame::A, 0.0, 0.0, &p).is_err());
        assert!(WavepacketParams::new(0.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn closed_form_expectations() {
        let p = params();
        let t = 2.0 / p.c;
        let tp = analytic_expectations(ProtocolKind::TimeParity, t, &p).unwrap();
        assert_eq!((tp.x_mean_a, tp.x_mean_b, tp.correlation), (2.0, -2.0, ZERO));
        let sp = analytic_expectations(ProtocolKind::SpatialParity, t, &p).unwrap();
        let expected = -2.0 * (-2.0f64).exp() * (-2.0f64).exp();
        assert_abs_diff_eq!(sp.correlation.re, 0.0);
        assert_abs_diff_eq!(sp.correlation.im, expected, epsilon = 1e-15);
        assert_abs_diff_eq!(sp.correlation.im, -0.03663, epsilon = 1e-5);
        let b0 = analytic_expectations(ProtocolKind::GalileanBoost, 0.0, &p).unwrap();
        assert_eq!(b0.correlation, ZERO);
        let b = analytic_expectations(ProtocolKind::GalileanBoost, t, &p).unwrap();
        assert_abs_diff_eq!(b.x_mean_b, 3.6, epsilon = 1e-12);
    }

    /// ∫ψ_a* x ψ_b and ⟨x⟩ of each frame by quadrature of the wavefunctions.
    #[test]
    fn expectations_match_quadrature() {
        let p = WavepacketParams::new(1.3, 0.7, 1e-3, -0.5e-3).unwrap();
        let x = linspace(-25.0, 25.0, 20001);
        for kind in ProtocolKind::NAMED {
            for &t in &[0.0, 700.0, 2000.0] {
                let a: Vec<C64> = x.iter().map(|&xi| psi_frame(kind, Frame::A, xi, t, &p).unwrap()).collect();
                let b: Vec<C64> = x.iter().map(|&xi| psi_frame(kind, Frame::B, xi, t, &p).unwrap()).collect();
                let integ = |f: &dyn Fn(usize) -> C64| {
                    let re: Vec<f64> = (0..x.len()).map(|i| f(i).re).collect();
                    let im: Vec<f64> = (0..x.len()).map(|i| f(i).im).collect();
                    C64::new(trapezoid(&x, &re), trapezoid(&x, &im))
                };
                let corr = integ(&|i| a[i].conj() * b[i] * x[i]);
                let xa = integ(&|i| a[i].conj() * a[i] * x[i]).re;
                let xb = integ(&|i| b[i].conj() * b[i] * x[i]).re;
                let e = analytic_expectations(kind, t, &p).unwrap();
                assert!((corr - e.correlation).norm() < 1e-9, "{kind} t={t}: {corr} vs {}", e.correlation);
                assert_abs_diff_eq!(xa, e.x_mean_a, epsilon = 1e-9);
                assert_abs_diff_eq!(xb, e.x_mean_b, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn displacement_closed_form_matches_exponential() {
        let d0 = displacement_matrix(ZERO, 8);
        assert!((d0 - CMatrix::identity(8, 8)).norm() < 1e-15);
        let d = displacement_matrix(ONE, 40);
        assert_abs_diff_eq!(d[(0, 0)].re, (-0.5f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(d[(0, 0)].re, 0.60653, epsilon = 1e-5);
        for alpha in [ONE, C64::new(0.3, -1.1), C64::new(-2.0, 2.0)] {
            let closed = displacement_matrix(alpha, 40);
            let reference = expm_displacement(alpha, 120);
            for m in 0..30 {
                for n in 0..30 {
                    assert!((closed[(m, n)] - reference[(m, n)]).norm() < 1e-10, "α={alpha} ({m},{n})");
                }
            }
        }
    }

    #[test]
    fn displacement_is_stable_at_large_cutoff() {
        let alpha = C64::from_polar(3.0, -0.8);
        for n in [40, 50] {
            let d = displacement_matrix(alpha, n);
            assert!(d.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
            let reference = expm_displacement(alpha, 160);
            let err = (&d - reference.view((0, 0), (n, n))).camax();
            assert!(err < 1e-12, "{err}");
            // low Fock states stay inside the truncated space
            // at |α| = 3 the levels n < 4 stay inside a 40-level space
            let k = 4;
            let prod = &d * displacement_matrix(-alpha, n);
            let err = (prod.view((0, 0), (k, k)) - CMatrix::identity(k, k)).camax();
            assert!(err < 1e-8, "N={n}: {err}");
            let u = d.adjoint() * &d;
            let err = (u.view((0, 0), (k, k)) - CMatrix::identity(k, k)).camax();
            assert!(err < 1e-8, "N={n}: {err}");
        }
    }

    #[test]
    fn coherent_state_position() {
        let v = coherent_state(ONE, 40);
        let x = mode_position(40);
        let mean = v.dotc(&(&x * &v)).re;
        assert_abs_diff_eq!(mean, 2.0, epsilon = 1e-12);
        let col = displacement_matrix(C64::new(0.4, 0.9), 30).column(0).into_owned();
        assert!((col - coherent_state(C64::new(0.4, 0.9), 30)).norm() < 1e-14);
    }

    fn all_specs(n: usize) -> Vec<ProtocolSpec> {
        let dev = DeviceParams::preset("ca40_innsbruck").unwrap();
        vec![
            build_time_parity(1e-3, 1.0, &dev, n).unwrap(),
            build_spatial_parity(1e-3, 1.0, &dev, n).unwrap(),
            build_galilean_boost(1e-3, 0.8e-3, 1.0, &dev, n).unwrap(),
        ]
    }

    #[test]
    fn ideal_state_matches_matrix_exponential() {
        let config = IntegratorConfig::with_dt(100.0);
        for spec in all_specs(40) {
            let psi0 = spec.initial_state();
            let after_init = propagator(spec.init_hamiltonian(), spec.init.duration) * psi0.amplitudes();
            let after_init = StateVector::new(spec.space, after_init).unwrap();
            let t_end = 2.0 / spec.transform.c;
            let path = integrate_unitary(spec.ideal_evolution(), &after_init, t_end, &config).unwrap();
            for frac in [0.0, 0.25, 0.5, 1.0] {
                let t = frac * t_end;
                let (_, psi) = path.iter().find(|(s, _)| (s - t).abs() < 1e-6).unwrap();
                let ideal = ideal_state(&spec, t).unwrap();
                let f = ideal.inner(psi).unwrap().norm_sqr();
                assert!(f > 1.0 - 1e-8, "{} t={t}: {f}", spec.kind);
            }
        }
    }

    #[test]
    fn ideal_init_matches_target_kick() {
        let spec = &all_specs(40)[0];
        let psi = ideal_state(spec, 0.0).unwrap();
        let target = StateVector::product(
            spec.space,
            &[qubit::excited(), qubit::plus_x()],
            &coherent_state(C64::new(0.0, 1.0), 40),
        )
        .unwrap();
        assert!(target.inner(&psi).unwrap().norm_sqr() > 1.0 - 1e-12);
        let mid = ideal_init_state(spec, spec.init.duration / 2.0).unwrap();
        let half = StateVector::product(
            spec.space,
            &[qubit::excited(), qubit::plus_x()],
            &coherent_state(C64::new(0.0, 0.5), 40),
        )
        .unwrap();
        assert!(half.inner(&mid).unwrap().norm_sqr() > 1.0 - 1e-12);
    }

    #[test]
    fn zero_momentum_evolution_splits_into_real_displacements() {
        let dev = DeviceParams::preset("ca40_innsbruck").unwrap();
        let spec = build_time_parity(1e-3, 0.0, &dev, 30).unwrap();
        let t = 1500.0;
        let psi = ideal_state(&spec, t).unwrap();
        let s = spec.space;
        let d = 1e-3 * t / 2.0;
        let plus = StateVector::product(s, &[qubit::plus_x(), qubit::plus_x()], &coherent_state(C64::new(d, 0.0), 30)).unwrap();
        let minus = StateVector::product(s, &[qubit::minus_x(), qubit::plus_x()], &coherent_state(C64::new(-d, 0.0), 30)).unwrap();
        assert_abs_diff_eq!(plus.inner(&psi).unwrap().norm_sqr(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(minus.inner(&psi).unwrap().norm_sqr(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn boost_without_velocity_matches_time_parity_frame_a() {
        let dev = DeviceParams::preset("ca40_innsbruck").unwrap();
        let boost = build_galilean_boost(1e-3, 0.0, 1.0, &dev, 30).unwrap();
        let t = 1200.0;
        let psi = ideal_state(&boost, t).unwrap();
        // every branch of the ancilla-driven ℋ₁' moves by +ct/2 under σˣ₂ = +1
        let expected = StateVector::product(
            boost.space,
            &[qubit::excited(), qubit::plus_x()],
            &(displacement_matrix(C64::new(0.6, 0.0), 30) * coherent_state(C64::new(0.0, 1.0), 30)),
        )
        .unwrap();
        assert!(expected.inner(&psi).unwrap().norm_sqr() > 1.0 - 1e-12);
        assert!(boost.evolution.couplings.iter().all(|c| c.qubit == ANCILLA_QUBIT));
    }

    #[test]
    fn decoded_ideal_states_match_closed_forms() {
        let x = linspace(-10.0, 10.0, 801);
        for spec in all_specs(40) {
            let p = WavepacketParams::from_spec(&spec);
            for &t in &[0.0, 1000.0, 2000.0] {
                let rho = DensityMatrix::from_pure(&ideal_state(&spec, t).unwrap());
                let frames = decode_frames(&rho, &spec).unwrap();
                assert_abs_diff_eq!(frames.frame_a.weight, 1.0, epsilon = 1e-10);
                for (frame, decoded) in [(Frame::A, &frames.frame_a), (Frame::B, &frames.frame_b)] {
                    let sim = decoded.distribution(&x);
                    let exact = frame_density(spec.kind, frame, &x, t, &p).unwrap();
                    let diff: Vec<f64> = sim.iter().zip(&exact).map(|(a, b)| (a - b).abs()).collect();
                    let l1 = trapezoid(&x, &diff);
                    assert!(l1 < 1e-3, "{} {frame:?} t={t}: L1 {l1}", spec.kind);
                }
                let e = analytic_expectations(spec.kind, t, &p).unwrap();
                assert_abs_diff_eq!(frames.frame_a.mean_position(), e.x_mean_a, epsilon = 1e-9);
                assert_abs_diff_eq!(frames.frame_b.mean_position(), e.x_mean_b, epsilon = 1e-9);
                assert!((frames.correlation - e.correlation).norm() < 1e-9, "{} t={t}: {} vs {}", spec.kind, frames.correlation, e.correlation);
            }
        }
    }

    #[test]
    fn spatial_parity_frame_space_matches_mode_space() {
        let spec = &all_specs(20)[1];
        assert_eq!(spec.space, HilbertSpace::new(1, 20).unwrap());
    }

    proptest! {
        #[test]
        fn frame_a_slope_is_c(c in 1e-4f64..1e-2, t in 0.0f64..5000.0) {
            let p = WavepacketParams::new(1.0, 1.0, c, 0.0).unwrap();
            let h = 1e-3;
            let up = analytic_expectations(ProtocolKind::TimeParity, t + h, &p).unwrap().x_mean_a;
            let dn = analytic_expectations(ProtocolKind::TimeParity, t, &p).unwrap().x_mean_a;
            prop_assert!(((up - dn) / h - c).abs() < 1e-9);
        }

        #[test]
        fn spatial_parity_correlation_decays(t in 0.0f64..4000.0, dt in 1.0f64..500.0, p0 in 0.0f64..2.0) {
            let p = WavepacketParams::new(1.0, p0, 1e-3, 0.0).unwrap();
            let a = analytic_expectations(ProtocolKind::SpatialParity, t, &p).unwrap().correlation.norm();
            let b = analytic_expectations(ProtocolKind::SpatialParity, t + dt, &p).unwrap().correlation.norm();
            prop_assert!(b <= a);
        }
    }
}
