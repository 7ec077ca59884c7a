//! Product basis for two multilevel atoms sharing one cavity mode.
//!
//! Basis states are written `|s1 s2>|n>` and flattened row-major with atom 1
//! outermost and the photon number innermost:
//!
//! ```text
//! index = (level1 * 4 + level2) * (n_max + 1) + n
//! ```
//!
//! Atom 1 carries five levels (`0`, `1`, `a`, `e`, `e2`); atom 2 carries the
//! four tripod levels (`0`, `1`, `a`, `e`).

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use thiserror::Error;

/// Tolerance on unit norm for qubit factors and product inputs.
pub const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HilbertError {
    #[error("n_max = {0} is too small: the dark state of the |1>-control subspace has a two-photon component, so n_max must be at least 2")]
    CavityTooSmall(usize),
    #[error("level {level} does not exist on atom {atom}")]
    InvalidLevel { atom: u8, level: AtomLevel },
    #[error("photon number {n} exceeds n_max = {n_max}")]
    PhotonOutOfRange { n: usize, n_max: usize },
    #[error("flat index {index} outside basis of dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("input is not normalized (norm^2 = {0})")]
    NotNormalized(f64),
    #[error("unknown level label {0:?}")]
    UnknownLabel(String),
}

/// Internal level of one atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AtomLevel {
    /// Computational state `|0>`.
    G0,
    /// Computational state `|1>`.
    G1,
    /// Ancillary ground state `|a>`.
    Anc,
    /// Excited state `|e>`, cavity coupled to `|a>`.
    Exc,
    /// Second excited state of atom 1, reached only by the transfer lasers.
    Exc2,
}

impl AtomLevel {
    pub const ATOM1: [AtomLevel; 5] = [Self::G0, Self::G1, Self::Anc, Self::Exc, Self::Exc2];
    pub const ATOM2: [AtomLevel; 4] = [Self::G0, Self::G1, Self::Anc, Self::Exc];

    pub fn label(self) -> &'static str {
        match self {
            Self::G0 => "0",
            Self::G1 => "1",
            Self::Anc => "a",
            Self::Exc => "e",
            Self::Exc2 => "e2",
        }
    }

    pub fn is_excited(self) -> bool {
        matches!(self, Self::Exc | Self::Exc2)
    }

    fn atom1_slot(self) -> usize {
        self as usize
    }

    fn atom2_slot(self) -> Option<usize> {
        match self {
            Self::Exc2 => None,
            other => Some(other as usize),
        }
    }
}

impl fmt::Display for AtomLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for AtomLevel {
    type Err = HilbertError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "0" => Ok(Self::G0),
            "1" => Ok(Self::G1),
            "a" => Ok(Self::Anc),
            "e" => Ok(Self::Exc),
            "e2" => Ok(Self::Exc2),
            other => Err(HilbertError::UnknownLabel(other.to_string())),
        }
    }
}

/// One basis ket `|s1 s2>|n>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisLabel {
    pub atom1: AtomLevel,
    pub atom2: AtomLevel,
    pub photons: usize,
}

impl BasisLabel {
    pub fn new(atom1: AtomLevel, atom2: AtomLevel, photons: usize) -> Self {
        Self { atom1, atom2, photons }
    }

    /// Number of atoms in an excited level.
    pub fn excitations(&self) -> usize {
        usize::from(self.atom1.is_excited()) + usize::from(self.atom2.is_excited())
    }
}

/// Renders as `s1s2_n`, e.g. `a1_0` or `e2a_1`.
impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}_{}", self.atom1, self.atom2, self.photons)
    }
}

impl FromStr for BasisLabel {
    type Err = HilbertError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || HilbertError::UnknownLabel(s.to_string());
        let (levels, n) = s.split_once('_').ok_or_else(bad)?;
        let photons = n.parse().map_err(|_| bad())?;
        let (atom1, rest) = if let Some(rest) = levels.strip_prefix("e2") {
            (AtomLevel::Exc2, rest)
        } else {
            let head = levels.get(..1).ok_or_else(bad)?;
            (head.parse()?, levels.get(1..).ok_or_else(bad)?)
        };
        Ok(Self { atom1, atom2: rest.parse()?, photons })
    }
}

/// Truncated Hilbert space of atom 1 ⊗ atom 2 ⊗ cavity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HilbertSpace {
    n_max: usize,
}

impl HilbertSpace {
    pub const DEFAULT_N_MAX: usize = 3;

    pub fn new(n_max: usize) -> Result<Self, HilbertError> {
        if n_max < 2 {
            return Err(HilbertError::CavityTooSmall(n_max));
        }
        Ok(Self { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        AtomLevel::ATOM1.len() * AtomLevel::ATOM2.len() * (self.n_max + 1)
    }

    pub fn index(&self, label: BasisLabel) -> Result<usize, HilbertError> {
        let s2 = label
            .atom2
            .atom2_slot()
            .ok_or(HilbertError::InvalidLevel { atom: 2, level: label.atom2 })?;
        if label.photons > self.n_max {
            return Err(HilbertError::PhotonOutOfRange { n: label.photons, n_max: self.n_max });
        }
        Ok((label.atom1.atom1_slot() * AtomLevel::ATOM2.len() + s2) * (self.n_max + 1)
            + label.photons)
    }

    pub fn label(&self, index: usize) -> Result<BasisLabel, HilbertError> {
        if index >= self.dim() {
            return Err(HilbertError::IndexOutOfRange { index, dim: self.dim() });
        }
        let per_pair = self.n_max + 1;
        let photons = index % per_pair;
        let pair = index / per_pair;
        Ok(BasisLabel {
            atom1: AtomLevel::ATOM1[pair / AtomLevel::ATOM2.len()],
            atom2: AtomLevel::ATOM2[pair % AtomLevel::ATOM2.len()],
            photons,
        })
    }

    /// All basis labels in flat-index order.
    pub fn labels(&self) -> impl Iterator<Item = BasisLabel> + '_ {
        (0..self.dim()).map(move |i| self.label(i).expect("index in range"))
    }

    pub fn basis_state(
        &self,
        atom1: AtomLevel,
        atom2: AtomLevel,
        photons: usize,
    ) -> Result<StateVector, HilbertError> {
        let idx = self.index(BasisLabel::new(atom1, atom2, photons))?;
        let mut amps = DVector::zeros(self.dim());
        amps[idx] = C64::new(1.0, 0.0);
        Ok(StateVector { space: *self, amplitudes: amps })
    }

    /// Product state `|f1>|f2>|n>`.
    pub fn embed_product(
        &self,
        atom1: impl Into<AtomFactor>,
        atom2: impl Into<AtomFactor>,
        photons: usize,
    ) -> Result<StateVector, HilbertError> {
        let f1 = atom1.into().components();
        let f2 = atom2.into().components();
        for comps in [&f1, &f2] {
            let n2: f64 = comps.iter().map(|(_, c)| c.norm_sqr()).sum();
            if (n2 - 1.0).abs() > NORM_TOL {
                return Err(HilbertError::NotNormalized(n2));
            }
        }
        let mut psi = self.zero_state();
        for &(l1, c1) in &f1 {
            for &(l2, c2) in &f2 {
                let idx = self.index(BasisLabel::new(l1, l2, photons))?;
                psi.amplitudes[idx] += c1 * c2;
            }
        }
        Ok(psi)
    }

    pub fn zero_state(&self) -> StateVector {
        StateVector { space: *self, amplitudes: DVector::zeros(self.dim()) }
    }

    /// Indices of every basis state with an atom in `e` or `e2`.
    pub fn excited_indices(&self) -> Vec<usize> {
        self.labels()
            .enumerate()
            .filter(|(_, l)| l.excitations() > 0)
            .map(|(i, _)| i)
            .collect()
    }
}

/// A single-atom factor of a product state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AtomFactor {
    Level(AtomLevel),
    Qubit(QubitVector),
}

impl AtomFactor {
    fn components(self) -> Vec<(AtomLevel, C64)> {
        match self {
            Self::Level(l) => vec![(l, C64::new(1.0, 0.0))],
            Self::Qubit(q) => vec![(AtomLevel::G0, q.a0), (AtomLevel::G1, q.a1)],
        }
    }
}

impl From<AtomLevel> for AtomFactor {
    fn from(l: AtomLevel) -> Self {
        Self::Level(l)
    }
}

impl From<QubitVector> for AtomFactor {
    fn from(q: QubitVector) -> Self {
        Self::Qubit(q)
    }
}

/// Normalized state `a0|0> + a1|1>` of one atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitVector {
    a0: C64,
    a1: C64,
}

impl QubitVector {
    pub fn new(a0: C64, a1: C64) -> Result<Self, HilbertError> {
        let n2 = a0.norm_sqr() + a1.norm_sqr();
        if (n2 - 1.0).abs() > NORM_TOL {
            return Err(HilbertError::NotNormalized(n2));
        }
        Ok(Self { a0, a1 })
    }

    /// Rescales to unit norm; panics on the zero vector.
    pub fn normalized(a0: C64, a1: C64) -> Self {
        let n = (a0.norm_sqr() + a1.norm_sqr()).sqrt();
        assert!(n > 0.0, "cannot normalize the zero qubit vector");
        Self { a0: a0 / n, a1: a1 / n }
    }

    pub fn zero() -> Self {
        Self { a0: C64::new(1.0, 0.0), a1: C64::new(0.0, 0.0) }
    }

    pub fn one() -> Self {
        Self { a0: C64::new(0.0, 0.0), a1: C64::new(1.0, 0.0) }
    }

    pub fn plus() -> Self {
        Self::normalized(C64::new(1.0, 0.0), C64::new(1.0, 0.0))
    }

    pub fn minus() -> Self {
        Self::normalized(C64::new(1.0, 0.0), C64::new(-1.0, 0.0))
    }

    pub fn a0(&self) -> C64 {
        self.a0
    }

    pub fn a1(&self) -> C64 {
        self.a1
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &QubitVector) -> C64 {
        self.a0.conj() * other.a0 + self.a1.conj() * other.a1
    }

    pub fn scaled(&self, phase: C64) -> Self {
        Self { a0: self.a0 * phase, a1: self.a1 * phase }
    }
}

/// Complex amplitudes over a [`HilbertSpace`]. Not necessarily normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    space: HilbertSpace,
    amplitudes: DVector<C64>,
}

impl StateVector {
    pub fn from_amplitudes(
        space: HilbertSpace,
        amplitudes: DVector<C64>,
    ) -> Result<Self, HilbertError> {
        if amplitudes.len() != space.dim() {
            return Err(HilbertError::DimensionMismatch(amplitudes.len(), space.dim()));
        }
        Ok(Self { space, amplitudes })
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut DVector<C64> {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// Returns a unit-norm copy; panics on the zero vector.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        assert!(n > 0.0, "cannot normalize the zero state");
        Self { space: self.space, amplitudes: self.amplitudes.unscale(n) }
    }

    pub fn amplitude(
        &self,
        atom1: AtomLevel,
        atom2: AtomLevel,
        photons: usize,
    ) -> Result<C64, HilbertError> {
        Ok(self.amplitudes[self.space.index(BasisLabel::new(atom1, atom2, photons))?])
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &StateVector) -> Result<C64, HilbertError> {
        if self.amplitudes.len() != other.amplitudes.len() {
            return Err(HilbertError::DimensionMismatch(
                self.amplitudes.len(),
                other.amplitudes.len(),
            ));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn population(
        &self,
        atom1: AtomLevel,
        atom2: AtomLevel,
        photons: usize,
    ) -> Result<f64, HilbertError> {
        Ok(self.amplitude(atom1, atom2, photons)?.norm_sqr())
    }

    /// Expectation of the photon-number operator (unnormalized state).
    pub fn mean_photons(&self) -> f64 {
        self.space
            .labels()
            .zip(self.amplitudes.iter())
            .map(|(l, a)| l.photons as f64 * a.norm_sqr())
            .sum()
    }

    /// Total population on basis states with at least one photon.
    pub fn photon_population(&self) -> f64 {
        self.space
            .labels()
            .zip(self.amplitudes.iter())
            .filter(|(l, _)| l.photons > 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Total population on basis states with an excited atom.
    pub fn excited_population(&self) -> f64 {
        self.space
            .labels()
            .zip(self.amplitudes.iter())
            .filter(|(l, _)| l.excitations() > 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self { space: self.space, amplitudes: self.amplitudes.scale_complex(factor) }
    }

    pub fn add(&self, other: &StateVector) -> Result<Self, HilbertError> {
        if self.amplitudes.len() != other.amplitudes.len() {
            return Err(HilbertError::DimensionMismatch(
                self.amplitudes.len(),
                other.amplitudes.len(),
            ));
        }
        Ok(Self { space: self.space, amplitudes: &self.amplitudes + &other.amplitudes })
    }
}

trait ScaleComplex {
    fn scale_complex(&self, factor: C64) -> Self;
}

impl ScaleComplex for DVector<C64> {
    fn scale_complex(&self, factor: C64) -> Self {
        self.map(|a| a * factor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn dimensions() {
        assert_eq!(HilbertSpace::new(2).unwrap().dim(), 60);
        assert_eq!(HilbertSpace::new(3).unwrap().dim(), 80);
        assert!(matches!(HilbertSpace::new(1), Err(HilbertError::CavityTooSmall(1))));
    }

    #[test]
    fn index_round_trip_every_label() {
        let space = HilbertSpace::new(3).unwrap();
        for i in 0..space.dim() {
            let label = space.label(i).unwrap();
            assert_eq!(space.index(label).unwrap(), i);
        }
        let l = BasisLabel::new(AtomLevel::Anc, AtomLevel::G1, 0);
        assert_eq!(space.label(space.index(l).unwrap()).unwrap(), l);
        assert!(space.label(space.dim()).is_err());
    }

    #[test]
    fn cavity_is_innermost() {
        let space = HilbertSpace::new(3).unwrap();
        let a = space.index(BasisLabel::new(AtomLevel::G0, AtomLevel::G0, 0)).unwrap();
        let b = space.index(BasisLabel::new(AtomLevel::G0, AtomLevel::G0, 1)).unwrap();
        let c = space.index(BasisLabel::new(AtomLevel::G0, AtomLevel::G1, 0)).unwrap();
        assert_eq!((a, b, c), (0, 1, 4));
    }

    #[test]
    fn exc2_only_on_atom_one() {
        let space = HilbertSpace::new(2).unwrap();
        assert!(space.basis_state(AtomLevel::Exc2, AtomLevel::G0, 0).is_ok());
        assert!(matches!(
            space.basis_state(AtomLevel::G0, AtomLevel::Exc2, 0),
            Err(HilbertError::InvalidLevel { atom: 2, .. })
        ));
        assert!(matches!(
            space.basis_state(AtomLevel::G0, AtomLevel::G0, 3),
            Err(HilbertError::PhotonOutOfRange { .. })
        ));
    }

    #[test]
    fn basis_state_is_unit_vector() {
        let space = HilbertSpace::new(3).unwrap();
        let psi = space.basis_state(AtomLevel::Anc, AtomLevel::Anc, 2).unwrap();
        let idx = space.index(BasisLabel::new(AtomLevel::Anc, AtomLevel::Anc, 2)).unwrap();
        assert_eq!(psi.amplitudes()[idx], c(1.0, 0.0));
        assert_eq!(psi.amplitudes().iter().filter(|a| a.norm() > 0.0).count(), 1);
    }

    #[test]
    fn label_text_round_trip() {
        let space = HilbertSpace::new(3).unwrap();
        for l in space.labels() {
            assert_eq!(l.to_string().parse::<BasisLabel>().unwrap(), l);
        }
        assert_eq!(
            "e2a_1".parse::<BasisLabel>().unwrap(),
            BasisLabel::new(AtomLevel::Exc2, AtomLevel::Anc, 1)
        );
        assert!("x0_0".parse::<BasisLabel>().is_err());
    }

    #[test]
    fn embed_ancilla_times_target() {
        // |a> ⊗ (β|0> + α|1>) ⊗ |0> = α|a1>|0> + β|a0>|0>
        let space = HilbertSpace::new(3).unwrap();
        let (alpha, beta) = (c(0.6, 0.0), c(0.0, 0.8));
        let q = QubitVector::new(beta, alpha).unwrap();
        let psi = space.embed_product(AtomLevel::Anc, q, 0).unwrap();
        assert_eq!(psi.amplitude(AtomLevel::Anc, AtomLevel::G1, 0).unwrap(), alpha);
        assert_eq!(psi.amplitude(AtomLevel::Anc, AtomLevel::G0, 0).unwrap(), beta);
        assert!((psi.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn embed_plus_zero() {
        let space = HilbertSpace::new(3).unwrap();
        let psi = space.embed_product(QubitVector::plus(), QubitVector::zero(), 0).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((psi.amplitude(AtomLevel::G0, AtomLevel::G0, 0).unwrap() - h).norm() < 1e-15);
        assert!((psi.amplitude(AtomLevel::G1, AtomLevel::G0, 0).unwrap() - h).norm() < 1e-15);
        let zz = space.embed_product(QubitVector::zero(), QubitVector::zero(), 0).unwrap();
        assert_eq!(zz, space.basis_state(AtomLevel::G0, AtomLevel::G0, 0).unwrap());
    }

    #[test]
    fn unnormalized_inputs_rejected() {
        assert!(QubitVector::new(c(1.0, 0.0), c(1.0, 0.0)).is_err());
    }

    #[test]
    fn overlaps_and_populations() {
        let space = HilbertSpace::new(2).unwrap();
        let a = space.basis_state(AtomLevel::G0, AtomLevel::G1, 0).unwrap();
        let b = space.basis_state(AtomLevel::G1, AtomLevel::G1, 0).unwrap();
        assert_eq!(a.overlap(&b).unwrap(), c(0.0, 0.0));
        let other = HilbertSpace::new(3).unwrap().zero_state();
        assert!(matches!(a.overlap(&other), Err(HilbertError::DimensionMismatch(60, 80))));
    }

    fn arb_state() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 80)
    }

    proptest! {
        #[test]
        fn populations_sum_to_norm(raw in arb_state()) {
            let space = HilbertSpace::new(3).unwrap();
            let amps = DVector::from_iterator(80, raw.iter().map(|&(r, i)| c(r, i)));
            let psi = StateVector::from_amplitudes(space, amps).unwrap();
            let total: f64 = space
                .labels()
                .map(|l| psi.population(l.atom1, l.atom2, l.photons).unwrap())
                .sum();
            prop_assert!((total - psi.norm_sqr()).abs() < 1e-12 * (1.0 + total));
            prop_assert!((psi.overlap(&psi).unwrap().re - psi.norm_sqr()).abs() < 1e-12 * (1.0 + total));
        }

        #[test]
        fn product_norm_is_one(r0 in 0.0f64..1.0, p0 in -3.0f64..3.0, r1 in 0.0f64..1.0, p1 in -3.0f64..3.0) {
            let space = HilbertSpace::new(3).unwrap();
            let q1 = QubitVector::normalized(C64::from_polar(r0 + 1e-3, p0), C64::from_polar(1.0 - r0, p1));
            let q2 = QubitVector::normalized(C64::from_polar(r1 + 1e-3, p1), C64::from_polar(1.0, p0));
            let psi = space.embed_product(q1, q2, 1).unwrap();
            prop_assert!((psi.norm() - 1.0).abs() < 1e-12);
        }
    }
}
