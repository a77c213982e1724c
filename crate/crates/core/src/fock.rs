//! Exact few-photon state algebra over three time-bins and two spatial ports.
//!
//! A state lives either on the beamsplitter input ports `a`, `b` or on the
//! output ports `c`, `d`. Occupation patterns are stored sparsely as a map from
//! a six-entry occupation vector (port-major, time-bin minor) to a complex
//! amplitude. Amplitudes are kept literal: nothing is renormalized unless
//! [`TwoPartyFockState::normalized`] is called.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

pub const TIME_BINS: usize = 3;
const MODES: usize = 2 * TIME_BINS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Port {
    A,
    B,
    C,
    D,
}

impl Port {
    pub fn basis(self) -> PortBasis {
        match self {
            Port::A | Port::B => PortBasis::Input,
            Port::C | Port::D => PortBasis::Output,
        }
    }

    /// 0 for `a`/`c`, 1 for `b`/`d`.
    pub fn slot(self) -> usize {
        match self {
            Port::A | Port::C => 0,
            Port::B | Port::D => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PortBasis {
    Input,
    Output,
}

impl PortBasis {
    pub fn port(self, slot: usize) -> Port {
        match (self, slot) {
            (PortBasis::Input, 0) => Port::A,
            (PortBasis::Input, _) => Port::B,
            (PortBasis::Output, 0) => Port::C,
            (PortBasis::Output, _) => Port::D,
        }
    }
}

impl fmt::Display for PortBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PortBasis::Input => "ab",
            PortBasis::Output => "cd",
        })
    }
}

/// A single optical mode: a port and a time-bin in `1..=3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    port: Port,
    time_bin: u8,
}

impl ModeIndex {
    pub fn new(port: Port, time_bin: u8) -> Result<Self> {
        if !(1..=TIME_BINS as u8).contains(&time_bin) {
            return Err(Error::InvalidMode(format!("time-bin {time_bin} not in 1..=3")));
        }
        Ok(Self { port, time_bin })
    }

    pub fn port(&self) -> Port {
        self.port
    }

    pub fn time_bin(&self) -> u8 {
        self.time_bin
    }

    fn offset(&self) -> usize {
        self.port.slot() * TIME_BINS + (self.time_bin as usize - 1)
    }
}

/// Occupation numbers of the six modes of one port pair.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern(pub [u8; MODES]);

impl Pattern {
    pub const VACUUM: Pattern = Pattern([0; MODES]);

    /// Builds a pattern from the two per-port occupation triples.
    pub fn from_ports(first: [u8; 3], second: [u8; 3]) -> Self {
        Pattern([first[0], first[1], first[2], second[0], second[1], second[2]])
    }

    pub fn photons(&self) -> u32 {
        self.0.iter().map(|&n| n as u32).sum()
    }

    /// Occupation of `slot` (0 or 1) in `time_bin` (1-based).
    pub fn get(&self, slot: usize, time_bin: usize) -> u8 {
        self.0[slot * TIME_BINS + time_bin - 1]
    }

    /// Total photons in `time_bin` over both ports.
    pub fn bin_total(&self, time_bin: usize) -> u8 {
        self.get(0, time_bin) + self.get(1, time_bin)
    }

    fn with_added(mut self, offset: usize) -> Self {
        self.0[offset] += 1;
        self
    }

    fn disjoint(&self, other: &Pattern) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(&x, &y)| x == 0 || y == 0)
    }

    fn sum(&self, other: &Pattern) -> Pattern {
        let mut out = *self;
        for (o, &y) in out.0.iter_mut().zip(other.0.iter()) {
            *o += y;
        }
        out
    }

    /// Bitmask of occupied modes, bit `slot*3 + bin-1`.
    pub fn occupied_mask(&self) -> u8 {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .fold(0u8, |m, (i, _)| m | (1 << i))
    }

    /// Renders as e.g. `|010,001>cd`.
    pub fn label(&self, basis: PortBasis) -> String {
        let p = &self.0;
        format!("|{}{}{},{}{}{}>{}", p[0], p[1], p[2], p[3], p[4], p[5], basis)
    }

    /// `sqrt(prod n!)`, the norm of the corresponding creation-operator monomial.
    fn factorial_root<T: Real>(&self) -> T {
        let prod: u64 = self
            .0
            .iter()
            .map(|&n| (1..=n as u64).product::<u64>())
            .product();
        lit::<T>(prod as f64).sqrt()
    }
}

/// Unit phasor, exact at integer multiples of pi/2.
pub(crate) fn cis<T: Real>(phi: T) -> Complex<T> {
    let q = phi / T::FRAC_PI_2();
    let r = q.round();
    if (q - r).abs() <= T::epsilon() * lit(16.0) {
        let k = r.to_i64().unwrap_or(0).rem_euclid(4);
        let (o, z) = (T::one(), T::zero());
        return match k {
            0 => Complex::new(o, z),
            1 => Complex::new(z, o),
            2 => Complex::new(-o, z),
            _ => Complex::new(z, -o),
        };
    }
    Complex::from_polar(T::one(), phi)
}

/// The four encoding phases. Bit values are `phase / pi` in the discrete mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseSetting<T: Real> {
    pub phi_a1: T,
    pub phi_a2: T,
    pub phi_b1: T,
    pub phi_b2: T,
}

impl<T: Real> PhaseSetting<T> {
    pub fn new(phi_a1: T, phi_a2: T, phi_b1: T, phi_b2: T) -> Self {
        Self { phi_a1, phi_a2, phi_b1, phi_b2 }
    }

    /// Phases in `{0, pi}` from bits.
    pub fn from_bits(a1: bool, a2: bool, b1: bool, b2: bool) -> Self {
        let p = |b: bool| if b { T::PI() } else { T::zero() };
        Self::new(p(a1), p(a2), p(b1), p(b2))
    }

    /// All sixteen discrete settings. Index bits are `(a1, a2, b1, b2)` from the
    /// most significant end.
    pub fn all_discrete() -> impl Iterator<Item = Self> {
        (0u8..16).map(|k| Self::from_index(k))
    }

    pub fn from_index(k: u8) -> Self {
        Self::from_bits(k & 8 != 0, k & 4 != 0, k & 2 != 0, k & 1 != 0)
    }

    pub fn delta1(&self) -> T {
        reduce_angle(self.phi_a1 - self.phi_b1)
    }

    pub fn delta2(&self) -> T {
        reduce_angle(self.phi_a2 - self.phi_b2)
    }

    /// Bit encoded by a phase, if it is (numerically) 0 or pi.
    pub fn bit_of(phi: T) -> Option<bool> {
        let r = reduce_angle(phi);
        let tol = T::epsilon() * lit(64.0);
        if r.abs() <= tol || (T::TAU() - r).abs() <= tol {
            Some(false)
        } else if (r - T::PI()).abs() <= tol {
            Some(true)
        } else {
            None
        }
    }

    /// `(a1, a2, b1, b2)` bits when every phase is discrete.
    pub fn bits(&self) -> Option<[bool; 4]> {
        Some([
            Self::bit_of(self.phi_a1)?,
            Self::bit_of(self.phi_a2)?,
            Self::bit_of(self.phi_b1)?,
            Self::bit_of(self.phi_b2)?,
        ])
    }

    pub fn is_discrete(&self) -> bool {
        self.bits().is_some()
    }
}

fn reduce_angle<T: Real>(phi: T) -> T {
    let tau = T::TAU();
    let r = phi % tau;
    if r < T::zero() {
        r + tau
    } else {
        r
    }
}

/// Amplitudes over occupation patterns of one port pair.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoPartyFockState<T: Real> {
    basis: PortBasis,
    amplitudes: BTreeMap<Pattern, Complex<T>>,
}

impl<T: Real> TwoPartyFockState<T> {
    /// The empty (zero) vector in `basis`.
    pub fn zero(basis: PortBasis) -> Self {
        Self { basis, amplitudes: BTreeMap::new() }
    }

    pub fn vacuum(basis: PortBasis) -> Self {
        Self::from_terms(basis, [(Pattern::VACUUM, Complex::new(T::one(), T::zero()))])
    }

    /// Sums repeated patterns.
    pub fn from_terms(basis: PortBasis, terms: impl IntoIterator<Item = (Pattern, Complex<T>)>) -> Self {
        let mut s = Self::zero(basis);
        for (p, a) in terms {
            s.add_term(p, a);
        }
        s.prune();
        s
    }

    /// `|1>` in a single mode.
    pub fn single(mode: ModeIndex) -> Self {
        let p = Pattern::VACUUM.with_added(mode.offset());
        Self::from_terms(mode.port().basis(), [(p, Complex::new(T::one(), T::zero()))])
    }

    pub fn basis(&self) -> PortBasis {
        self.basis
    }

    pub fn amplitude(&self, p: &Pattern) -> Complex<T> {
        self.amplitudes.get(p).copied().unwrap_or_else(Complex::default)
    }

    pub fn probability(&self, p: &Pattern) -> T {
        self.amplitude(p).norm_sqr()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Pattern, &Complex<T>)> {
        self.amplitudes.iter()
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm_sqr(&self) -> T {
        self.amplitudes.values().fold(T::zero(), |acc, a| acc + a.norm_sqr())
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if n <= T::zero() {
            return Err(Error::EmptyPostSelection);
        }
        Ok(self.scaled(Complex::new(T::one() / n.sqrt(), T::zero())))
    }

    pub fn scaled(&self, c: Complex<T>) -> Self {
        Self {
            basis: self.basis,
            amplitudes: self.amplitudes.iter().map(|(p, a)| (*p, *a * c)).collect(),
        }
    }

    fn add_term(&mut self, p: Pattern, a: Complex<T>) {
        *self.amplitudes.entry(p).or_default() += a;
    }

    fn prune(&mut self) {
        let floor = T::epsilon() * T::epsilon();
        self.amplitudes.retain(|_, a| a.norm_sqr() > floor);
    }

    fn require(&self, expected: PortBasis) -> Result<()> {
        if self.basis != expected {
            return Err(Error::BasisMismatch { expected, found: self.basis });
        }
        Ok(())
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        other.require(self.basis)?;
        Ok(self
            .amplitudes
            .iter()
            .map(|(p, a)| a.conj() * other.amplitude(p))
            .fold(Complex::default(), |acc, x| acc + x))
    }

    /// `|<self|other>| / (|self| |other|)`, i.e. fidelity of directions up to a global phase.
    pub fn overlap_up_to_phase(&self, other: &Self) -> Result<T> {
        let ip = self.inner(other)?;
        let n = (self.norm_sqr() * other.norm_sqr()).sqrt();
        if n <= T::zero() {
            return Err(Error::ZeroDenominator("state norm"));
        }
        Ok(ip.norm() / n)
    }

    /// Tensor product of states supported on disjoint modes of the same port pair.
    pub fn product(&self, other: &Self) -> Result<Self> {
        other.require(self.basis)?;
        let mut out = Self::zero(self.basis);
        for (p, a) in &self.amplitudes {
            for (q, b) in &other.amplitudes {
                if !p.disjoint(q) {
                    return Err(Error::OverlappingModes);
                }
                out.add_term(p.sum(q), *a * *b);
            }
        }
        out.prune();
        Ok(out)
    }

    /// Keeps only the patterns accepted by `keep`, without renormalizing.
    pub fn project(&self, keep: impl Fn(&Pattern) -> bool) -> Self {
        Self {
            basis: self.basis,
            amplitudes: self
                .amplitudes
                .iter()
                .filter(|(p, _)| keep(p))
                .map(|(p, a)| (*p, *a))
                .collect(),
        }
    }
}

impl<T: Real> fmt::Display for TwoPartyFockState<T> {
    /// One `pattern re im` line per stored amplitude.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (p, a) in &self.amplitudes {
            writeln!(f, "{} {:e} {:e}", p.label(self.basis), a.re, a.im)?;
        }
        Ok(())
    }
}

/// `(1/sqrt3)(|100> + e^{i phi1}|010> + e^{i phi2}|001>)` on input port `port`.
pub fn encode_phases<T: Real>(phi1: T, phi2: T, port: Port) -> Result<TwoPartyFockState<T>> {
    if port.basis() != PortBasis::Input {
        return Err(Error::InvalidMode(format!("{port:?} is not a source port")));
    }
    let w = T::one() / lit::<T>(3.0).sqrt();
    let phases = [Complex::new(T::one(), T::zero()), cis(phi1), cis(phi2)];
    let terms = (1..=TIME_BINS as u8).zip(phases).map(|(bin, ph)| {
        let mode = ModeIndex { port, time_bin: bin };
        (Pattern::VACUUM.with_added(mode.offset()), ph * w)
    });
    Ok(TwoPartyFockState::from_terms(PortBasis::Input, terms))
}

/// The encoded single photon `(1/sqrt3)(|100> + (-1)^j1 |010> + (-1)^j2 |001>)`.
pub fn encode_single_photon<T: Real>(j1: bool, j2: bool, port: Port) -> Result<TwoPartyFockState<T>> {
    let p = |b: bool| if b { T::PI() } else { T::zero() };
    encode_phases(p(j1), p(j2), port)
}

/// Product of both encoded photons on the input ports: nine terms of weight 1/3.
pub fn joint_input<T: Real>(ps: &PhaseSetting<T>) -> TwoPartyFockState<T> {
    let a = encode_phases(ps.phi_a1, ps.phi_a2, Port::A).expect("a is an input port");
    let b = encode_phases(ps.phi_b1, ps.phi_b2, Port::B).expect("b is an input port");
    a.product(&b).expect("ports a and b are disjoint")
}

/// Drops patterns with two photons in the same time-bin and renormalizes.
///
/// Returns the renormalized survivor state and its survival probability
/// relative to the input norm.
pub fn postselect_hom<T: Real>(state: &TwoPartyFockState<T>) -> Result<(TwoPartyFockState<T>, T)> {
    state.require(PortBasis::Input)?;
    let total = state.norm_sqr();
    if total <= T::zero() || state.iter().all(|(p, _)| p.photons() == 0) {
        return Err(Error::EmptyPostSelection);
    }
    let kept = state.project(|p| (1..=TIME_BINS).all(|bin| p.bin_total(bin) < 2));
    let survived = kept.norm_sqr();
    if survived <= T::zero() {
        return Err(Error::EmptyPostSelection);
    }
    Ok((kept.normalized()?, survived / total))
}

/// 50:50 beamsplitter, `a+ -> (c+ + d+)/sqrt2`, `b+ -> (c+ - d+)/sqrt2` in every time-bin.
pub fn beamsplitter_transform<T: Real>(state: &TwoPartyFockState<T>) -> Result<TwoPartyFockState<T>> {
    state.require(PortBasis::Input)?;
    let h = T::one() / lit::<T>(2.0).sqrt();
    let mut out = TwoPartyFockState::zero(PortBasis::Output);
    for (pattern, amp) in state.iter() {
        // |n> = prod (a+)^n / sqrt(n!) |0>
        let mut monomials: BTreeMap<Pattern, Complex<T>> = BTreeMap::new();
        monomials.insert(Pattern::VACUUM, *amp / pattern.factorial_root::<T>());
        for (offset, &n) in pattern.0.iter().enumerate() {
            let slot = offset / TIME_BINS;
            let bin = offset % TIME_BINS;
            let d_sign = if slot == 0 { h } else { -h };
            for _ in 0..n {
                let mut next = BTreeMap::new();
                for (m, c) in &monomials {
                    *next.entry(m.with_added(bin)).or_default() += *c * h;
                    *next.entry(m.with_added(TIME_BINS + bin)).or_default() += *c * d_sign;
                }
                monomials = next;
            }
        }
        for (m, c) in monomials {
            out.add_term(m, c * m.factorial_root::<T>());
        }
    }
    out.prune();
    Ok(out)
}

/// Beamsplitter output for the encoded two-photon input, before any post-selection.
pub fn output_state<T: Real>(ps: &PhaseSetting<T>) -> TwoPartyFockState<T> {
    beamsplitter_transform(&joint_input(ps)).expect("joint input is in the input basis")
}

/// Filters selecting one photon in each of two time-bins.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Filter {
    /// Bins 1 and 2.
    F1,
    /// Bins 1 and 3.
    F2,
}

impl Filter {
    pub fn bins(self) -> (usize, usize) {
        match self {
            Filter::F1 => (1, 2),
            Filter::F2 => (1, 3),
        }
    }

    pub fn accepts(self, p: &Pattern) -> bool {
        let (x, y) = self.bins();
        p.photons() == 2 && p.bin_total(x) == 1 && p.bin_total(y) == 1
    }
}

/// Projects onto the four patterns of `which`; returns the unnormalized state and its squared norm.
pub fn apply_filter<T: Real>(state: &TwoPartyFockState<T>, which: Filter) -> Result<(TwoPartyFockState<T>, T)> {
    state.require(PortBasis::Output)?;
    let kept = state.project(|p| which.accepts(p));
    let prob = kept.norm_sqr();
    Ok((kept, prob))
}

/// `|a_i b_k>` with one photon in bin `i` of port a and bin `k` of port b.
pub fn input_pair<T: Real>(i: u8, k: u8) -> Result<TwoPartyFockState<T>> {
    let a = TwoPartyFockState::single(ModeIndex::new(Port::A, i)?);
    let b = TwoPartyFockState::single(ModeIndex::new(Port::B, k)?);
    a.product(&b)
}

/// Matrix of `M^dag F^dag F M` on the nine `|a_i b_k>` input states,
/// row/column index `3(i-1) + (k-1)`.
pub fn filter_pullback<T: Real>(which: Filter) -> [[Complex<T>; 9]; 9] {
    let images: Vec<TwoPartyFockState<T>> = (0..9)
        .map(|idx| {
            let s = input_pair::<T>(idx as u8 / 3 + 1, idx as u8 % 3 + 1).expect("valid bins");
            let out = beamsplitter_transform(&s).expect("input basis");
            apply_filter(&out, which).expect("output basis").0
        })
        .collect();
    let mut m = [[Complex::default(); 9]; 9];
    for (r, row) in m.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            *cell = images[r].inner(&images[c]).expect("same basis");
        }
    }
    m
}
