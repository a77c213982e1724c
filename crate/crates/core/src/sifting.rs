//! Charles' announcement alphabet, the reconciliation table, bit extraction and
//! the entanglement-based check of which Bell pair each kept outcome leaves behind.

use std::fmt;

use num_complex::Complex;
use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::fock::{output_state, Pattern, PhaseSetting, PortBasis, TwoPartyFockState, TIME_BINS};
use crate::scalar::{lit, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Detector {
    C,
    D,
}

impl Detector {
    fn slot(self) -> usize {
        match self {
            Detector::C => 0,
            Detector::D => 1,
        }
    }
}

/// One click: a detector and a time-bin in `1..=3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Click {
    pub detector: Detector,
    pub time_bin: u8,
}

impl Click {
    /// Bit position in a six-bit detector/bin mask (same layout as [`Pattern`]).
    pub fn bit(&self) -> u8 {
        (self.detector.slot() * TIME_BINS + self.time_bin as usize - 1) as u8
    }

    fn from_bit(bit: u8) -> Self {
        let detector = if (bit as usize) < TIME_BINS { Detector::C } else { Detector::D };
        Click { detector, time_bin: bit % TIME_BINS as u8 + 1 }
    }
}

impl fmt::Display for Click {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = match self.detector {
            Detector::C => 'c',
            Detector::D => 'd',
        };
        write!(f, "{d}{}", self.time_bin)
    }
}

/// A public announcement: zero, one or two distinct clicks.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DetectionOutcome {
    clicks: Vec<Click>,
}

impl DetectionOutcome {
    pub fn new(clicks: impl IntoIterator<Item = (Detector, u8)>) -> Result<Self> {
        let mut out = Vec::new();
        for (detector, time_bin) in clicks {
            if !(1..=TIME_BINS as u8).contains(&time_bin) {
                return Err(Error::MalformedOutcome(format!("time-bin {time_bin}")));
            }
            let c = Click { detector, time_bin };
            if out.contains(&c) {
                return Err(Error::MalformedOutcome(format!("{c} listed twice")));
            }
            out.push(c);
        }
        if out.len() > 2 {
            return Err(Error::MalformedOutcome(format!("{} clicks", out.len())));
        }
        out.sort();
        Ok(Self { clicks: out })
    }

    /// From a six-bit click mask; more than two set bits is malformed.
    pub fn from_mask(mask: u8) -> Result<Self> {
        if mask >> (2 * TIME_BINS) != 0 {
            return Err(Error::MalformedOutcome(format!("mask {mask:#b}")));
        }
        let clicks = (0..2 * TIME_BINS as u8)
            .filter(|b| mask & (1 << b) != 0)
            .map(Click::from_bit)
            .map(|c| (c.detector, c.time_bin));
        Self::new(clicks)
    }

    /// Threshold detection of an output-port occupation pattern.
    pub fn from_pattern(p: &Pattern) -> Result<Self> {
        Self::from_mask(p.occupied_mask())
    }

    pub fn clicks(&self) -> &[Click] {
        &self.clicks
    }

    pub fn mask(&self) -> u8 {
        self.clicks.iter().fold(0, |m, c| m | (1 << c.bit()))
    }

    /// The single-occupancy output pattern producing exactly these clicks.
    pub fn pattern(&self) -> Pattern {
        let mut p = Pattern::VACUUM;
        for c in &self.clicks {
            p.0[c.bit() as usize] = 1;
        }
        p
    }
}

impl fmt::Display for DetectionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.clicks.iter().map(|c| c.to_string()).collect();
        write!(f, "{{{}}}", parts.join(" "))
    }
}

/// Which phase difference a kept outcome reveals. Also names the ancilla register pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KeyPhase {
    Delta1,
    Delta2,
}

impl fmt::Display for KeyPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KeyPhase::Delta1 => "dphi1",
            KeyPhase::Delta2 => "dphi2",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Action {
    Keep,
    Discard,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SiftDecision {
    Keep { phase: KeyPhase, bit_flip: bool },
    Discard,
    Inconclusive,
}

impl SiftDecision {
    pub fn action(&self) -> Action {
        match self {
            SiftDecision::Keep { .. } => Action::Keep,
            SiftDecision::Discard => Action::Discard,
            SiftDecision::Inconclusive => Action::Inconclusive,
        }
    }

    pub fn phase_used(&self) -> Option<KeyPhase> {
        match self {
            SiftDecision::Keep { phase, .. } => Some(*phase),
            _ => None,
        }
    }

    pub fn bit_flip(&self) -> Option<bool> {
        match self {
            SiftDecision::Keep { bit_flip, .. } => Some(*bit_flip),
            _ => None,
        }
    }

    pub fn is_keep(&self) -> bool {
        matches!(self, SiftDecision::Keep { .. })
    }
}

/// Reconciliation rule for an announced outcome.
///
/// Two clicks in different bins, one of them bin 1: keep, using the phase
/// difference that involves the other bin, flipping Bob's bit when the two
/// clicks are on different detectors. Two clicks in bins 2 and 3: discard.
/// Anything else (fewer clicks, both clicks in one bin) is inconclusive.
pub fn sift(outcome: &DetectionOutcome) -> SiftDecision {
    let [x, y] = match outcome.clicks() {
        [x, y] => [*x, *y],
        _ => return SiftDecision::Inconclusive,
    };
    if x.time_bin == y.time_bin {
        return SiftDecision::Inconclusive;
    }
    let bins = (x.time_bin.min(y.time_bin), x.time_bin.max(y.time_bin));
    let phase = match bins {
        (1, 2) => KeyPhase::Delta1,
        (1, 3) => KeyPhase::Delta2,
        _ => return SiftDecision::Discard,
    };
    SiftDecision::Keep { phase, bit_flip: x.detector != y.detector }
}

/// `(alice_bit, bob_bit)` for a kept outcome, after Bob's conditional flip.
///
/// `None` when the decision is not `Keep` or a relevant phase is not 0 or pi.
pub fn extract_bits<T: Real>(decision: &SiftDecision, ps: &PhaseSetting<T>) -> Option<(bool, bool)> {
    let SiftDecision::Keep { phase, bit_flip } = decision else {
        return None;
    };
    let (pa, pb) = match phase {
        KeyPhase::Delta1 => (ps.phi_a1, ps.phi_b1),
        KeyPhase::Delta2 => (ps.phi_a2, ps.phi_b2),
    };
    let alice = PhaseSetting::bit_of(pa)?;
    let bob = PhaseSetting::bit_of(pb)?;
    Some((alice, bob ^ bit_flip))
}

/// Every announcement with at most two distinct clicks (22 outcomes).
pub fn announcement_alphabet() -> Vec<DetectionOutcome> {
    (0u8..64)
        .filter(|m| m.count_ones() <= 2)
        .map(|m| DetectionOutcome::from_mask(m).expect("at most two clicks"))
        .collect()
}

/// The twelve two-click, two-bin outcomes in reconciliation-table order.
pub fn table_one_outcomes() -> Vec<DetectionOutcome> {
    use Detector::{C, D};
    let rows: [[(Detector, u8); 2]; 12] = [
        [(C, 1), (C, 2)],
        [(D, 1), (D, 2)],
        [(C, 1), (C, 3)],
        [(D, 1), (D, 3)],
        [(C, 1), (D, 2)],
        [(C, 2), (D, 1)],
        [(C, 1), (D, 3)],
        [(C, 3), (D, 1)],
        [(C, 2), (C, 3)],
        [(D, 2), (D, 3)],
        [(C, 2), (D, 3)],
        [(C, 3), (D, 2)],
    ];
    rows.iter().map(|r| DetectionOutcome::new(*r).expect("table rows are well formed")).collect()
}

/// `R_sift = (HOM survival) x (keep fraction) = 2/3 x 2/3`.
pub fn sifted_key_fraction() -> Ratio<u32> {
    hom_survival_fraction() * keep_fraction()
}

pub fn hom_survival_fraction() -> Ratio<u32> {
    Ratio::new(2, 3)
}

pub fn keep_fraction() -> Ratio<u32> {
    Ratio::new(2, 3)
}

/// Brute-force sifting statistics over the sixteen discrete phase settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SiftingEnumeration<T: Real> {
    /// Probability that the two photons leave in different time-bins.
    pub hom_survival: T,
    /// Probability of a `Keep` announcement given HOM survival.
    pub keep_given_survival: T,
    /// Probability of a `Discard` announcement given HOM survival.
    pub discard_given_survival: T,
    /// Fraction of kept probability where Alice's and Bob's bits agree.
    pub agreement: T,
}

impl<T: Real> SiftingEnumeration<T> {
    pub fn sifted_fraction(&self) -> T {
        self.hom_survival * self.keep_given_survival
    }
}

/// Evolves all sixteen settings through the beamsplitter and tallies announcements.
pub fn enumerate_sifting<T: Real>() -> SiftingEnumeration<T> {
    let weight = T::one() / lit(16.0);
    let (mut survive, mut keep, mut discard, mut agree) = (T::zero(), T::zero(), T::zero(), T::zero());
    for ps in PhaseSetting::<T>::all_discrete() {
        let out = output_state(&ps);
        for (p, a) in out.iter() {
            let prob = a.norm_sqr() * weight;
            if (1..=TIME_BINS).any(|b| p.bin_total(b) > 1) {
                continue;
            }
            survive = survive + prob;
            let outcome = DetectionOutcome::from_pattern(p).expect("two photons give at most two clicks");
            let decision = sift(&outcome);
            match decision.action() {
                Action::Keep => {
                    keep = keep + prob;
                    let (x, y) = extract_bits(&decision, &ps).expect("discrete setting");
                    if x == y {
                        agree = agree + prob;
                    }
                }
                Action::Discard => discard = discard + prob,
                Action::Inconclusive => {}
            }
        }
    }
    SiftingEnumeration {
        hom_survival: survive,
        keep_given_survival: keep / survive,
        discard_given_survival: discard / survive,
        agreement: agree / keep,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BellLabel {
    /// `(|00> - |11>)/sqrt2`
    PhiMinus,
    /// `(|01> - |10>)/sqrt2`
    PsiMinus,
}

impl fmt::Display for BellLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BellLabel::PhiMinus => "(|00>-|11>)/sqrt2",
            BellLabel::PsiMinus => "(|01>-|10>)/sqrt2",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AncillaBellState {
    pub label: BellLabel,
    pub register: KeyPhase,
}

impl fmt::Display for AncillaBellState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let reg = match self.register {
            KeyPhase::Delta1 => "A1B1",
            KeyPhase::Delta2 => "A2B2",
        };
        write!(f, "{} {}", self.label, reg)
    }
}

/// The bell pair Table I lists for a kept outcome.
pub fn expected_bell_state(decision: &SiftDecision) -> Option<AncillaBellState> {
    let SiftDecision::Keep { phase, bit_flip } = *decision else {
        return None;
    };
    let label = if bit_flip { BellLabel::PsiMinus } else { BellLabel::PhiMinus };
    Some(AncillaBellState { label, register: phase })
}

/// Ancilla state left after Charles announces `outcome`, factorized into the two registers.
///
/// Register vectors are indexed `2*alice + bob` and normalized.
#[derive(Clone, Debug, PartialEq)]
pub struct AncillaProjection<T: Real> {
    pub a1b1: [Complex<T>; 4],
    pub a2b2: [Complex<T>; 4],
    /// Probability of the outcome, averaged over the sixteen settings.
    pub probability: T,
    /// Largest entry of the difference between the projected state and the product of factors.
    pub residual: T,
}

/// Projects `(1/4) sum_j |j1 jb1 j2 jb2> (x) |psi_out(j)>` onto the outcome pattern.
pub fn project_ancilla<T: Real>(outcome: &DetectionOutcome) -> Result<AncillaProjection<T>> {
    if outcome.clicks().len() != 2 {
        return Err(Error::NotKeep(outcome.to_string()));
    }
    let pattern = outcome.pattern();
    let quarter = lit::<T>(0.25);
    // m[2*j1 + jb1][2*j2 + jb2]
    let mut m = [[Complex::<T>::default(); 4]; 4];
    for k in 0u8..16 {
        let (j1, jb1, j2, jb2) = (k & 8 != 0, k & 4 != 0, k & 2 != 0, k & 1 != 0);
        let ps = PhaseSetting::from_bits(j1, j2, jb1, jb2);
        let amp = output_state(&ps).amplitude(&pattern) * quarter;
        m[2 * j1 as usize + jb1 as usize][2 * j2 as usize + jb2 as usize] = amp;
    }
    let probability = m.iter().flatten().fold(T::zero(), |s, a| s + a.norm_sqr());
    if probability <= T::zero() {
        return Err(Error::NotBellState);
    }
    let (r0, c0) = (0..16)
        .map(|i| (i / 4, i % 4))
        .max_by(|&(r, c), &(s, d)| m[r][c].norm().partial_cmp(&m[s][d].norm()).unwrap())
        .expect("nonempty");
    let pivot = m[r0][c0];
    let u: [Complex<T>; 4] = std::array::from_fn(|r| m[r][c0]);
    let v: [Complex<T>; 4] = std::array::from_fn(|c| m[r0][c] / pivot);
    let mut residual = T::zero();
    for r in 0..4 {
        for c in 0..4 {
            residual = residual.max((m[r][c] - u[r] * v[c]).norm());
        }
    }
    Ok(AncillaProjection { a1b1: unit(u), a2b2: unit(v), probability, residual })
}

fn unit<T: Real>(v: [Complex<T>; 4]) -> [Complex<T>; 4] {
    let n = v.iter().fold(T::zero(), |s, a| s + a.norm_sqr()).sqrt();
    v.map(|a| a / n)
}

fn overlap<T: Real>(x: &[Complex<T>; 4], y: &[Complex<T>; 4]) -> T {
    x.iter()
        .zip(y.iter())
        .fold(Complex::default(), |s, (a, b)| s + a.conj() * b)
        .norm()
}

pub fn bell_vector<T: Real>(label: BellLabel) -> [Complex<T>; 4] {
    let h = T::one() / lit::<T>(2.0).sqrt();
    let (o, z) = (Complex::new(h, T::zero()), Complex::default());
    match label {
        BellLabel::PhiMinus => [o, z, z, -o],
        BellLabel::PsiMinus => [z, o, -o, z],
    }
}

/// Identifies the Bell pair shared after a kept announcement by explicit projection.
pub fn verify_entanglement_mapping<T: Real>(outcome: &DetectionOutcome) -> Result<AncillaBellState> {
    let decision = sift(outcome);
    let register = decision.phase_used().ok_or_else(|| Error::NotKeep(outcome.to_string()))?;
    let proj = project_ancilla::<T>(outcome)?;
    let tol = lit::<T>(1e-9).max(T::epsilon() * lit(1e3));
    if proj.residual > tol {
        return Err(Error::NotBellState);
    }
    let key = match register {
        KeyPhase::Delta1 => &proj.a1b1,
        KeyPhase::Delta2 => &proj.a2b2,
    };
    for label in [BellLabel::PhiMinus, BellLabel::PsiMinus] {
        if (overlap(key, &bell_vector(label)) - T::one()).abs() < tol {
            return Ok(AncillaBellState { label, register });
        }
    }
    Err(Error::NotBellState)
}

/// One reconciliation-table row, as derived from the state evolution.
#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub outcome: DetectionOutcome,
    pub decision: SiftDecision,
    pub bell_state: Option<AncillaBellState>,
}

/// The twelve table rows with Bell pairs obtained by projection.
pub fn reconciliation_table() -> Result<Vec<TableRow>> {
    table_one_outcomes()
        .into_iter()
        .map(|outcome| {
            let decision = sift(&outcome);
            let bell_state = if decision.is_keep() {
                Some(verify_entanglement_mapping::<f64>(&outcome)?)
            } else {
                None
            };
            Ok(TableRow { outcome, decision, bell_state })
        })
        .collect()
}

/// Output state restricted to patterns without double occupancy in a time-bin, renormalized.
pub fn hom_surviving_output<T: Real>(ps: &PhaseSetting<T>) -> Result<TwoPartyFockState<T>> {
    let out = output_state(ps);
    let kept = out.project(|p| (1..=TIME_BINS).all(|b| p.bin_total(b) < 2));
    debug_assert_eq!(kept.basis(), PortBasis::Output);
    kept.normalized()
}

#[cfg(test)]
mod tests {
    use super::*;
    use Detector::{C, D};

    fn oc(clicks: &[(Detector, u8)]) -> DetectionOutcome {
        DetectionOutcome::new(clicks.iter().copied()).unwrap()
    }

    #[test]
    fn table_examples() {
        assert_eq!(sift(&oc(&[(C, 1), (C, 2)])), SiftDecision::Keep { phase: KeyPhase::Delta1, bit_flip: false });
        assert_eq!(sift(&oc(&[(C, 1), (D, 2)])), SiftDecision::Keep { phase: KeyPhase::Delta1, bit_flip: true });
        assert_eq!(sift(&oc(&[(C, 2), (D, 3)])), SiftDecision::Discard);
        assert_eq!(sift(&oc(&[(D, 3), (C, 1)])), SiftDecision::Keep { phase: KeyPhase::Delta2, bit_flip: true });
        assert_eq!(sift(&oc(&[(C, 1)])), SiftDecision::Inconclusive);
        assert_eq!(sift(&oc(&[(C, 2), (D, 2)])), SiftDecision::Inconclusive);
        assert_eq!(sift(&oc(&[])), SiftDecision::Inconclusive);
    }

    #[test]
    fn malformed_outcomes_rejected() {
        assert!(DetectionOutcome::new([(C, 1), (C, 2), (D, 3)]).is_err());
        assert!(DetectionOutcome::new([(C, 1), (C, 1)]).is_err());
        assert!(DetectionOutcome::new([(C, 4)]).is_err());
        assert!(DetectionOutcome::from_mask(0b111).is_err());
    }

    #[test]
    fn table_has_eight_keep_four_discard() {
        let rows = table_one_outcomes();
        let keeps = rows.iter().filter(|o| sift(o).is_keep()).count();
        let discards = rows.iter().filter(|o| sift(o) == SiftDecision::Discard).count();
        assert_eq!((keeps, discards), (8, 4));
        assert!(rows[..8].iter().all(|o| sift(o).is_keep()));
    }

    #[test]
    fn alphabet_is_total() {
        let alphabet = announcement_alphabet();
        assert_eq!(alphabet.len(), 22);
        let keeps = alphabet.iter().filter(|o| sift(o).is_keep()).count();
        assert_eq!(keeps, 8);
    }

    #[test]
    fn extract_bits_examples() {
        let keep = SiftDecision::Keep { phase: KeyPhase::Delta1, bit_flip: false };
        let ps = PhaseSetting::<f64>::from_bits(true, false, true, false);
        assert_eq!(extract_bits(&keep, &ps), Some((true, true)));
        let flip = SiftDecision::Keep { phase: KeyPhase::Delta1, bit_flip: true };
        let ps = PhaseSetting::<f64>::from_bits(false, false, false, false);
        assert_eq!(extract_bits(&flip, &ps), Some((false, true)));
        assert_eq!(extract_bits(&SiftDecision::Discard, &ps), None);
        let cont = PhaseSetting::new(0.3, 0.0, 0.0, 0.0);
        assert_eq!(extract_bits(&keep, &cont), None);
    }

    #[test]
    fn sifted_fraction_is_four_ninths() {
        assert_eq!(sifted_key_fraction(), Ratio::new(4, 9));
        let e = enumerate_sifting::<f64>();
        assert!((e.hom_survival - 2.0 / 3.0).abs() < 1e-12);
        assert!((e.keep_given_survival - 2.0 / 3.0).abs() < 1e-12);
        assert!((e.discard_given_survival - 1.0 / 3.0).abs() < 1e-12);
        assert!((e.sifted_fraction() - 4.0 / 9.0).abs() < 1e-12);
        assert_eq!(e.agreement, 1.0);
    }

    #[test]
    fn bell_examples() {
        let s = verify_entanglement_mapping::<f64>(&oc(&[(C, 1), (C, 2)])).unwrap();
        assert_eq!(s, AncillaBellState { label: BellLabel::PhiMinus, register: KeyPhase::Delta1 });
        let s = verify_entanglement_mapping::<f64>(&oc(&[(C, 1), (D, 2)])).unwrap();
        assert_eq!(s, AncillaBellState { label: BellLabel::PsiMinus, register: KeyPhase::Delta1 });
        assert!(matches!(
            verify_entanglement_mapping::<f64>(&oc(&[(C, 2), (C, 3)])),
            Err(Error::NotKeep(_))
        ));
    }

    #[test]
    fn spectator_register_is_flat_in_z() {
        let proj = project_ancilla::<f64>(&oc(&[(C, 1), (C, 2)])).unwrap();
        for a in proj.a2b2 {
            assert!((a.norm_sqr() - 0.25).abs() < 1e-12);
        }
        let proj = project_ancilla::<f64>(&oc(&[(D, 1), (C, 3)])).unwrap();
        for a in proj.a1b1 {
            assert!((a.norm_sqr() - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn full_table_rows() {
        let rows = reconciliation_table().unwrap();
        for row in &rows {
            assert_eq!(row.bell_state, expected_bell_state(&row.decision), "{}", row.outcome);
        }
    }

    #[test]
    fn outcome_display_and_mask_roundtrip() {
        let o = oc(&[(D, 2), (C, 1)]);
        assert_eq!(o.to_string(), "{c1 d2}");
        assert_eq!(DetectionOutcome::from_mask(o.mask()).unwrap(), o);
        assert_eq!(DetectionOutcome::from_pattern(&o.pattern()).unwrap(), o);
        let bunched = Pattern::from_ports([2, 0, 0], [0, 0, 0]);
        assert_eq!(DetectionOutcome::from_pattern(&bunched).unwrap(), oc(&[(C, 1)]));
    }
}
