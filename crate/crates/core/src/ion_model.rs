//! Laser–ion couplings: carrier and sideband Hamiltonians in the
//! rotating-wave limit, bichromatic σˣ-conditioned couplings, and the
//! first-order Lamb-Dicke laboratory Hamiltonian that keeps the
//! off-resonant carrier and counter-rotating sideband terms.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::hilbert::{re, Axis, HilbertSpace, Operator, C64, I};
use crate::lindblad::NoiseParams;

/// Trap frequency; sets the unit of time.
pub const NU: f64 = 1.0;

const FREQ_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sideband {
    Red,
    Blue,
}

/// One laser tone addressing one ion.
///
/// `phase` is the laser phase φ entering `Ω σ⁺[1 + iη(a e^{−iνt} + a† e^{iνt})] e^{i(φ − δt)}`.
/// The resonant sideband term of that expression carries an extra factor
/// `i`, so the phase seen by the sideband Hamiltonians is `φ + π/2`
/// (see [`LaserDrive::sideband_phase`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserDrive {
    pub target_qubit: usize,
    pub detuning: f64,
    pub rabi: f64,
    pub phase: f64,
    pub lamb_dicke: f64,
}

impl LaserDrive {
    pub fn carrier(target_qubit: usize, rabi: f64, phase: f64, lamb_dicke: f64) -> Result<Self> {
        check_rabi(rabi)?;
        Ok(Self {
            target_qubit,
            detuning: 0.0,
            rabi,
            phase,
            lamb_dicke,
        })
    }

    /// A drive tuned to the red (δ = −ν) or blue (δ = +ν) sideband whose
    /// rotating-wave Hamiltonian has phase `sideband_phase`.
    pub fn sideband(
        target_qubit: usize,
        kind: Sideband,
        rabi: f64,
        sideband_phase: f64,
        lamb_dicke: f64,
    ) -> Result<Self> {
        check_rabi(rabi)?;
        let detuning = match kind {
            Sideband::Red => -NU,
            Sideband::Blue => NU,
        };
        Ok(Self {
            target_qubit,
            detuning,
            rabi,
            phase: sideband_phase - FRAC_PI_2,
            lamb_dicke,
        })
    }

    pub fn sideband_phase(&self) -> f64 {
        self.phase + FRAC_PI_2
    }

    /// ηΩ̃, the sideband coupling strength.
    pub fn sideband_strength(&self) -> f64 {
        self.lamb_dicke * self.rabi
    }
}

fn check_rabi(rabi: f64) -> Result<()> {
    if rabi > 0.0 && rabi.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "rabi",
            reason: format!("drive strength must be positive, got {rabi}"),
        })
    }
}

/// Lamb-Dicke validity measure η²(2⟨n⟩ + 1); above 0.1 the first-order
/// expansion is questionable.
pub fn lamb_dicke_measure(eta: f64, mean_phonons: f64) -> f64 {
    eta * eta * (2.0 * mean_phonons + 1.0)
}

pub fn check_lamb_dicke(eta: f64, mean_phonons: f64) -> Option<String> {
    let m = lamb_dicke_measure(eta, mean_phonons);
    (m > 0.1).then(|| {
        format!(
            "outside the Lamb-Dicke regime: eta^2 (2<n> + 1) = {m:.3} (eta = {eta}, <n> = {mean_phonons:.3})"
        )
    })
}

/// Trap parameters and decoherence rates of a device.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceParams {
    pub label: String,
    pub lamb_dicke: f64,
    pub heating: f64,
    pub phonon_loss: f64,
    pub dephasing: f64,
    pub emission: f64,
}

pub const DEVICE_PRESETS: [&str; 2] = ["ca40_innsbruck", "be9_nist"];

impl DeviceParams {
    pub fn preset(name: &str) -> Option<Self> {
        let eta = match name {
            "ca40_innsbruck" => 0.06,
            "be9_nist" => 0.3,
            _ => return None,
        };
        Some(Self {
            label: name.to_string(),
            lamb_dicke: eta,
            heating: 3.7e-7,
            phonon_loss: 3.7e-7,
            dephasing: 6.2e-7,
            emission: 3.7e-7,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lamb_dicke > 0.0 && self.lamb_dicke.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "lamb_dicke",
                reason: format!("must be positive, got {}", self.lamb_dicke),
            });
        }
        self.noise().validate()
    }

    pub fn noise(&self) -> NoiseParams {
        NoiseParams::new(self.heating, self.phonon_loss, self.dephasing, self.emission)
    }
}

/// H_c = Ω(σ⁺e^{iφ} + σ⁻e^{−iφ}) on the drive's qubit.
pub fn carrier(space: HilbertSpace, drive: &LaserDrive) -> Result<Operator> {
    let sp = Operator::pauli(space, drive.target_qubit, Axis::Plus)?;
    let b = sp * (C64::from_polar(drive.rabi, drive.phase));
    Ok(&b + &b.adjoint())
}

/// H_r = Ω̃η(aσ⁺e^{iφ_r} + a†σ⁻e^{−iφ_r}).
pub fn red_sideband(space: HilbertSpace, drive: &LaserDrive) -> Result<Operator> {
    let sp = Operator::pauli(space, drive.target_qubit, Axis::Plus)?;
    let a = Operator::annihilation(space);
    let b = (&sp * &a) * C64::from_polar(drive.sideband_strength(), drive.sideband_phase());
    Ok(&b + &b.adjoint())
}

/// H_b = Ω̃η(a†σ⁺e^{iφ_b} + aσ⁻e^{−iφ_b}).
pub fn blue_sideband(space: HilbertSpace, drive: &LaserDrive) -> Result<Operator> {
    let sp = Operator::pauli(space, drive.target_qubit, Axis::Plus)?;
    let ad = Operator::creation(space);
    let b = (&sp * &ad) * C64::from_polar(drive.sideband_strength(), drive.sideband_phase());
    Ok(&b + &b.adjoint())
}

/// Which mode quadrature a bichromatic pair couples to σˣ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    /// `i g σˣ (a† − a) = 2Δ g σˣ p`, phases φ_b = π/2, φ_r = −π/2.
    Momentum,
    /// `g σˣ (a + a†) = g σˣ x / Δ`, phases φ_b = φ_r = 0.
    Position,
}

/// Red and blue sideband tones with ηΩ̃ = |g| realizing a σˣ-quadrature
/// coupling of signed strength `g`. A negative `g` shifts both phases by π.
/// Returns no drives for `g = 0`.
pub fn bichromatic_pair(
    qubit: usize,
    g: f64,
    lamb_dicke: f64,
    quadrature: Quadrature,
) -> Result<Vec<LaserDrive>> {
    if g == 0.0 {
        return Ok(Vec::new());
    }
    if !(lamb_dicke > 0.0) {
        return Err(Error::InvalidParameter {
            name: "lamb_dicke",
            reason: format!("must be positive, got {lamb_dicke}"),
        });
    }
    let (mut phi_r, mut phi_b) = match quadrature {
        Quadrature::Momentum => (-FRAC_PI_2, FRAC_PI_2),
        Quadrature::Position => (0.0, 0.0),
    };
    if g < 0.0 {
        phi_r += PI;
        phi_b += PI;
    }
    let rabi = g.abs() / lamb_dicke;
    Ok(vec![
        LaserDrive::sideband(qubit, Sideband::Red, rabi, phi_r, lamb_dicke)?,
        LaserDrive::sideband(qubit, Sideband::Blue, rabi, phi_b, lamb_dicke)?,
    ])
}

fn pair_sum(space: HilbertSpace, drives: &[LaserDrive]) -> Result<Operator> {
    let mut h = Operator::zeros(space);
    for d in drives {
        let part = if d.detuning < 0.0 {
            red_sideband(space, d)?
        } else {
            blue_sideband(space, d)?
        };
        h = &h + &part;
    }
    Ok(h)
}

/// `g σˣ · 2Δp = i g σˣ(a† − a)`, assembled from its sideband pair.
pub fn sigma_x_p_coupling(space: HilbertSpace, qubit: usize, g: f64) -> Result<Operator> {
    space.check_qubit(qubit)?;
    pair_sum(space, &bichromatic_pair(qubit, g, 1.0, Quadrature::Momentum)?)
}

/// `g σˣ(a + a†)`, assembled from its sideband pair.
pub fn sigma_x_x_coupling(space: HilbertSpace, qubit: usize, g: f64) -> Result<Operator> {
    space.check_qubit(qubit)?;
    pair_sum(space, &bichromatic_pair(qubit, g, 1.0, Quadrature::Position)?)
}

/// Resonant (rotating-wave) part of a set of drives: carriers at δ = 0,
/// red sidebands at δ = −ν and blue sidebands at δ = +ν. Other detunings
/// contribute nothing.
pub fn rwa_hamiltonian(space: HilbertSpace, drives: &[LaserDrive]) -> Result<Operator> {
    let mut h = Operator::zeros(space);
    for d in drives {
        let part = if d.detuning.abs() < FREQ_TOL {
            carrier(space, d)?
        } else if (d.detuning + NU).abs() < FREQ_TOL {
            red_sideband(space, d)?
        } else if (d.detuning - NU).abs() < FREQ_TOL {
            blue_sideband(space, d)?
        } else {
            continue;
        };
        h = &h + &part;
    }
    Ok(h)
}

/// `H(t) = Σ_k e^{−iω_k t} B_k`, with the `B_k` closed under adjoint so
/// that `H(t)` is Hermitian for every `t`.
#[derive(Debug, Clone)]
pub struct TimeDependentHamiltonian {
    space: HilbertSpace,
    terms: Vec<(f64, Operator)>,
}

impl TimeDependentHamiltonian {
    pub fn constant(op: Operator) -> Self {
        Self {
            space: op.space(),
            terms: vec![(0.0, op)],
        }
    }

    /// Full first-order Lamb-Dicke Hamiltonian of a set of drives,
    /// without the vibrational rotating-wave approximation.
    pub fn lab(space: HilbertSpace, drives: &[LaserDrive]) -> Result<Self> {
        let mut h = Self {
            space,
            terms: Vec::new(),
        };
        let a = Operator::annihilation(space);
        let ad = Operator::creation(space);
        for d in drives {
            let sp = Operator::pauli(space, d.target_qubit, Axis::Plus)?;
            let amp = C64::from_polar(d.rabi, d.phase);
            let side = amp * I * re(d.lamb_dicke);
            let pieces = [
                (d.detuning, sp.clone() * amp),
                (d.detuning + NU, (&sp * &a) * side),
                (d.detuning - NU, (&sp * &ad) * side),
            ];
            for (w, b) in pieces {
                let bd = b.adjoint();
                h.push(w, b);
                h.push(-w, bd);
            }
        }
        Ok(h)
    }

    fn push(&mut self, freq: f64, op: Operator) {
        match self
            .terms
            .iter_mut()
            .find(|(w, _)| (w - freq).abs() < FREQ_TOL)
        {
            Some((_, acc)) => *acc = &*acc + &op,
            None => self.terms.push((freq, op)),
        }
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn terms(&self) -> &[(f64, Operator)] {
        &self.terms
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|(w, _)| w.abs() < FREQ_TOL)
    }

    pub fn at(&self, t: f64) -> Operator {
        let mut h = Operator::zeros(self.space);
        for (w, b) in &self.terms {
            h = &h + &(b.clone() * C64::from_polar(1.0, -w * t));
        }
        h
    }

    /// `H(t + t0)` as a function of `t`.
    pub fn shifted(&self, t0: f64) -> Self {
        Self {
            space: self.space,
            terms: self
                .terms
                .iter()
                .map(|(w, b)| (*w, b.clone() * C64::from_polar(1.0, -w * t0)))
                .collect(),
        }
    }

    /// Time-independent part, i.e. the rotating-wave limit.
    pub fn static_part(&self) -> Operator {
        self.terms
            .iter()
            .filter(|(w, _)| w.abs() < FREQ_TOL)
            .map(|(_, b)| b.clone())
            .fold(Operator::zeros(self.space), |acc, b| &acc + &b)
    }
}

/// H(t) of a set of drives, dense.
pub fn lab_hamiltonian(space: HilbertSpace, drives: &[LaserDrive], t: f64) -> Result<Operator> {
    Ok(TimeDependentHamiltonian::lab(space, drives)?.at(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{Level, StateVector};
    use approx::assert_abs_diff_eq;

    fn space(q: usize, n: usize) -> HilbertSpace {
        HilbertSpace::new(q, n).unwrap()
    }

    #[test]
    fn carrier_phases() {
        let s = space(1, 4);
        let d = LaserDrive::carrier(0, 0.7, 0.0, 0.1).unwrap();
        let x = Operator::pauli(s, 0, Axis::X).unwrap() * 0.7;
        assert!(carrier(s, &d).unwrap().max_abs_diff(&x) < 1e-15);

        let d = LaserDrive::carrier(0, 0.7, FRAC_PI_2, 0.1).unwrap();
        let y = Operator::pauli(s, 0, Axis::Y).unwrap() * -0.7;
        assert!(carrier(s, &d).unwrap().max_abs_diff(&y) < 1e-15);

        for phi in [0.3, 1.9, -2.5] {
            let d = LaserDrive::carrier(0, 1.1, phi, 0.1).unwrap();
            assert!(carrier(s, &d).unwrap().is_hermitian(1e-14));
        }
        assert!(LaserDrive::carrier(0, 0.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn jaynes_cummings_selection_rules() {
        let s = space(1, 5);
        let strength = 0.4 * 0.1;
        let red = LaserDrive::sideband(0, Sideband::Red, 0.4, 0.3, 0.1).unwrap();
        let psi = StateVector::fock(s, &[Level::Ground], 1).unwrap();
        let out = red_sideband(s, &red).unwrap().apply(&psi).unwrap();
        let target = s.index(&[Level::Excited], 0);
        for (k, amp) in out.iter().enumerate() {
            if k == target {
                assert_abs_diff_eq!(amp.norm(), strength, epsilon = 1e-15);
            } else {
                assert_eq!(amp.norm(), 0.0);
            }
        }

        let blue = LaserDrive::sideband(0, Sideband::Blue, 0.4, 1.2, 0.1).unwrap();
        let psi = StateVector::fock(s, &[Level::Ground], 0).unwrap();
        let out = blue_sideband(s, &blue).unwrap().apply(&psi).unwrap();
        let target = s.index(&[Level::Excited], 1);
        assert_abs_diff_eq!(out[target].norm(), strength, epsilon = 1e-15);
        assert_abs_diff_eq!(out.norm(), strength, epsilon = 1e-15);
    }

    #[test]
    fn bichromatic_momentum_pair_is_sigma_x_p() {
        let s = space(2, 8);
        let g = 0.013;
        let red = LaserDrive::sideband(0, Sideband::Red, g / 0.06, -FRAC_PI_2, 0.06).unwrap();
        let blue = LaserDrive::sideband(0, Sideband::Blue, g / 0.06, FRAC_PI_2, 0.06).unwrap();
        let h = &red_sideband(s, &red).unwrap() + &blue_sideband(s, &blue).unwrap();
        let x1 = Operator::pauli(s, 0, Axis::X).unwrap();
        let expected = (&x1 * &Operator::momentum(s)) * (2.0 * g);
        assert!(h.max_abs_diff(&expected) < 1e-15);
        assert!(sigma_x_p_coupling(s, 0, g).unwrap().max_abs_diff(&expected) < 1e-15);

        // negative couplings flip the sign
        let neg = sigma_x_p_coupling(s, 1, -g).unwrap();
        let x2 = Operator::pauli(s, 1, Axis::X).unwrap();
        let expected = (&x2 * &Operator::momentum(s)) * (-2.0 * g);
        assert!(neg.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn sigma_x_p_anticommutes_with_sigma_z() {
        let s = space(1, 8);
        let h = sigma_x_p_coupling(s, 0, 0.2).unwrap();
        let z = Operator::pauli(s, 0, Axis::Z).unwrap();
        assert!(h.anticommutator(&z).matrix().norm() < 1e-14);
    }

    #[test]
    fn position_pair_is_sigma_x_x() {
        let s = space(1, 8);
        let g = 0.021;
        let h = sigma_x_x_coupling(s, 0, g).unwrap();
        let expected = (&Operator::pauli(s, 0, Axis::X).unwrap() * &Operator::position(s)) * g;
        assert!(h.max_abs_diff(&expected) < 1e-15);
        assert!(sigma_x_x_coupling(s, 0, -3.0).unwrap().is_hermitian(1e-14));
    }

    #[test]
    fn momentum_and_position_couplings_commute_to_identity() {
        let s = space(1, 10);
        let (g1, g2) = (0.3, 0.7);
        let hp = sigma_x_p_coupling(s, 0, g1).unwrap();
        let hx = sigma_x_x_coupling(s, 0, g2).unwrap();
        // [2g₁σˣp, g₂σˣx] = 2g₁g₂[p, x] = −2i g₁g₂
        let target = Operator::identity(s) * C64::new(0.0, -2.0 * g1 * g2);
        assert!(hp.commutator(&hx).interior_max_abs_diff(&target) < 1e-14);
    }

    #[test]
    fn lab_hamiltonian_reduces_to_detuned_carrier_without_lamb_dicke() {
        let s = space(1, 6);
        let d = LaserDrive {
            target_qubit: 0,
            detuning: 0.37,
            rabi: 0.2,
            phase: 0.4,
            lamb_dicke: 0.0,
        };
        for t in [0.0, 1.3, 7.9] {
            let h = lab_hamiltonian(s, &[d], t).unwrap();
            let shifted = LaserDrive {
                phase: d.phase - d.detuning * t,
                ..d
            };
            let c = carrier(s, &shifted).unwrap();
            assert!(h.max_abs_diff(&c) < 1e-14);
        }
    }

    #[test]
    fn lab_hamiltonian_is_hermitian_and_static_part_is_rwa() {
        let s = space(2, 6);
        let mut drives = bichromatic_pair(0, 0.004, 0.06, Quadrature::Momentum).unwrap();
        drives.extend(bichromatic_pair(1, -0.002, 0.06, Quadrature::Position).unwrap());
        let h = TimeDependentHamiltonian::lab(s, &drives).unwrap();
        for t in [0.0, 0.5, 2.0, 13.7] {
            assert!(h.at(t).is_hermitian(1e-14));
        }
        let rwa = rwa_hamiltonian(s, &drives).unwrap();
        assert!(h.static_part().max_abs_diff(&rwa) < 1e-15);
        let expected = &sigma_x_p_coupling(s, 0, 0.004).unwrap()
            + &sigma_x_x_coupling(s, 1, -0.002).unwrap();
        assert!(rwa.max_abs_diff(&expected) < 1e-15);
        // frequencies present: 0, ±ν, ±2ν
        let mut freqs: Vec<f64> = h.terms().iter().map(|(w, _)| *w).collect();
        freqs.sort_by(f64::total_cmp);
        assert_eq!(freqs, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn device_presets() {
        let ca = DeviceParams::preset("ca40_innsbruck").unwrap();
        assert_eq!(ca.lamb_dicke, 0.06);
        assert_eq!(ca.dephasing, 6.2e-7);
        let be = DeviceParams::preset("be9_nist").unwrap();
        assert_eq!(be.lamb_dicke, 0.3);
        assert_eq!(be.heating, 3.7e-7);
        assert!(DeviceParams::preset("yb171").is_none());
        let bad = DeviceParams { heating: -1.0, ..ca };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn lamb_dicke_diagnostic() {
        assert!(check_lamb_dicke(0.06, 4.0).is_none());
        assert!(check_lamb_dicke(0.3, 4.0).is_some());
    }
}
