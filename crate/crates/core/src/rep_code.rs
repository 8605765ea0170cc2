//! Repetition-code geometry, syndrome rounds and detector construction.
//!
//! Qubits are indexed `0..n` and check `c` compares qubits `c` and `c + 1`.
//! Frames are tracked relative to the first-round projection, so data
//! errors are never sampled before the first measurement.

use rand::Rng;

use crate::bits::{BitVector, SyndromeBits};
use crate::core_model::{EffectiveNoise, NoiseModel, NoiseParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodeLayout {
    n: usize,
}

impl CodeLayout {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("repetition code needs n >= 2, got {n}")));
        }
        Ok(CodeLayout { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_checks(&self) -> usize {
        self.n - 1
    }

    /// Qubit pairs `(c, c + 1)` for every check.
    pub fn checks(&self) -> Vec<(usize, usize)> {
        (0..self.n - 1).map(|c| (c, c + 1)).collect()
    }

    /// Number of checks touching a qubit.
    pub fn degree(&self, qubit: usize) -> usize {
        if qubit == 0 || qubit == self.n - 1 {
            1
        } else {
            2
        }
    }
}

pub fn syndrome_of(e: &BitVector) -> SyndromeBits {
    let n = e.len();
    assert!(n >= 2, "syndrome needs at least two qubits");
    let mut s = BitVector::zeros(n - 1);
    for c in 0..n - 1 {
        if e.get(c) != e.get(c + 1) {
            s.set(c, true);
        }
    }
    s
}

/// The unique error string with first bit 0 whose syndrome is `s`.
pub fn chain_from_syndrome(s: &SyndromeBits) -> BitVector {
    let mut e = BitVector::zeros(s.len() + 1);
    let mut acc = false;
    for c in 0..s.len() {
        acc ^= s.get(c);
        if acc {
            e.set(c + 1, true);
        }
    }
    e
}

/// Outcome of one syndrome-extraction round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundRecord {
    pub reported: SyndromeBits,
    /// Cumulative data error after this round.
    pub frame: BitVector,
    /// Flips of the reported bits caused on the measure side.
    pub meas_err: SyndromeBits,
}

#[inline]
fn bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    p > 0.0 && rng.random::<f64>() < p
}

/// One phenomenological round: data flips (skipped on the first round),
/// then a noisy readout of every check.
pub fn simulate_round_phenomenological<R: Rng + ?Sized>(
    frame: &BitVector,
    eff: &EffectiveNoise,
    first_round: bool,
    rng: &mut R,
) -> RoundRecord {
    let n = frame.len();
    let mut frame = frame.clone();
    if !first_round {
        for i in 0..n {
            if bernoulli(rng, eff.p_eff) {
                frame.flip(i);
            }
        }
    }
    let mut meas_err = BitVector::zeros(n - 1);
    for c in 0..n - 1 {
        if bernoulli(rng, eff.q_eff) {
            meas_err.flip(c);
        }
    }
    let reported = syndrome_of(&frame).xor(&meas_err);
    RoundRecord { reported, frame, meas_err }
}

/// Fault locations of one circuit-level round, in schedule order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Location {
    MeasPrep(usize),
    DataIdle(usize),
    MeasIdle(usize),
    CnotA(usize),
    DataAfterA(usize),
    MeasAfterA(usize),
    CnotB(usize),
    DataAfterB(usize),
    MeasAfterB(usize),
    Readout(usize),
}

/// Two-qubit X fault after a CNOT, written control (data) then target
/// (measure qubit).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CnotFault {
    IX,
    XI,
    XX,
}

impl CnotFault {
    fn hits(self) -> (bool, bool) {
        match self {
            CnotFault::IX => (false, true),
            CnotFault::XI => (true, false),
            CnotFault::XX => (true, true),
        }
    }
}

/// Decides which locations fault during a circuit round.
pub trait FaultSource {
    fn single(&mut self, loc: Location) -> bool;
    fn cnot(&mut self, loc: Location) -> Option<CnotFault>;
}

/// Independent faults at the rates of `NoiseParams`.
pub struct RandomFaults<'a, R: Rng + ?Sized> {
    pub np: NoiseParams,
    pub correlated: bool,
    pub rng: &'a mut R,
}

impl<R: Rng + ?Sized> FaultSource for RandomFaults<'_, R> {
    fn single(&mut self, loc: Location) -> bool {
        let p = match loc {
            Location::MeasPrep(_) => self.np.p_prep,
            Location::Readout(_) => self.np.q,
            _ => self.np.p,
        };
        bernoulli(self.rng, p)
    }

    fn cnot(&mut self, _loc: Location) -> Option<CnotFault> {
        if !self.correlated || !bernoulli(self.rng, self.np.p_cnot) {
            return None;
        }
        Some(match self.rng.random_range(0..3) {
            0 => CnotFault::IX,
            1 => CnotFault::XI,
            _ => CnotFault::XX,
        })
    }
}

/// A fixed list of faults for one round.
#[derive(Debug, Clone, Default)]
pub struct InjectedFaults {
    pub singles: Vec<Location>,
    pub cnots: Vec<(Location, CnotFault)>,
}

impl FaultSource for InjectedFaults {
    fn single(&mut self, loc: Location) -> bool {
        self.singles.contains(&loc)
    }

    fn cnot(&mut self, loc: Location) -> Option<CnotFault> {
        self.cnots.iter().find(|(l, _)| *l == loc).map(|&(_, f)| f)
    }
}

/// Executes one round of the explicit circuit schedule.
///
/// Order: measure-qubit preparation, idles, CNOT layer A (data `c` onto
/// measure `c`), faults after A, CNOT layer B (data `c + 1` onto measure
/// `c`), faults after B, readout. A data fault lands in the frame at once,
/// so it is seen only by the CNOTs that follow it. `meas_err` collects the
/// measure-side flips; for circuit rounds `reported` also reflects in-round
/// data faults that precede only one of a check's CNOTs.
pub fn run_circuit_round<F: FaultSource + ?Sized>(
    frame: &BitVector,
    first_round: bool,
    faults: &mut F,
) -> RoundRecord {
    let n = frame.len();
    let checks = n - 1;
    let mut d = frame.clone();
    let mut m = BitVector::zeros(checks);
    let mut meas_err = BitVector::zeros(checks);
    let mut flip_m = |m: &mut BitVector, c: usize| {
        m.flip(c);
        meas_err.flip(c);
    };

    for c in 0..checks {
        if faults.single(Location::MeasPrep(c)) {
            flip_m(&mut m, c);
        }
    }
    for i in 0..n {
        if faults.single(Location::DataIdle(i)) && !first_round {
            d.flip(i);
        }
    }
    for c in 0..checks {
        if faults.single(Location::MeasIdle(c)) {
            flip_m(&mut m, c);
        }
    }

    for c in 0..checks {
        if d.get(c) {
            m.flip(c);
        }
        if let Some(f) = faults.cnot(Location::CnotA(c)) {
            let (hit_d, hit_m) = f.hits();
            if hit_d {
                d.flip(c);
            }
            if hit_m {
                flip_m(&mut m, c);
            }
        }
    }
    for i in 0..n {
        if faults.single(Location::DataAfterA(i)) {
            d.flip(i);
        }
    }
    for c in 0..checks {
        if faults.single(Location::MeasAfterA(c)) {
            flip_m(&mut m, c);
        }
    }

    for c in 0..checks {
        if d.get(c + 1) {
            m.flip(c);
        }
        if let Some(f) = faults.cnot(Location::CnotB(c)) {
            let (hit_d, hit_m) = f.hits();
            if hit_d {
                d.flip(c + 1);
            }
            if hit_m {
                flip_m(&mut m, c);
            }
        }
    }
    for i in 0..n {
        if faults.single(Location::DataAfterB(i)) {
            d.flip(i);
        }
    }
    for c in 0..checks {
        if faults.single(Location::MeasAfterB(c)) {
            flip_m(&mut m, c);
        }
    }

    for c in 0..checks {
        if faults.single(Location::Readout(c)) {
            flip_m(&mut m, c);
        }
    }
    RoundRecord { reported: m, frame: d, meas_err }
}

/// One circuit-level round with random faults.
pub fn simulate_round_circuit<R: Rng + ?Sized>(
    frame: &BitVector,
    np: &NoiseParams,
    correlated: bool,
    first_round: bool,
    rng: &mut R,
) -> RoundRecord {
    let mut src = RandomFaults { np: *np, correlated, rng };
    run_circuit_round(frame, first_round, &mut src)
}

/// A single phenomenological fault at a space-time location.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhenomFault {
    /// Data flip on `qubit` just before the measurement of `round` (>= 1).
    Data { round: usize, qubit: usize },
    /// Readout flip of `check` in `round`.
    Meas { round: usize, check: usize },
}

/// Noiseless history except for the listed faults.
pub fn phenomenological_history_with(n: usize, rounds: usize, faults: &[PhenomFault]) -> Vec<RoundRecord> {
    let mut frame = BitVector::zeros(n);
    let mut out = Vec::with_capacity(rounds);
    for t in 0..rounds {
        let mut meas_err = BitVector::zeros(n - 1);
        for f in faults {
            match *f {
                PhenomFault::Data { round, qubit } if round == t && t > 0 => frame.flip(qubit),
                PhenomFault::Meas { round, check } if round == t => meas_err.flip(check),
                _ => {}
            }
        }
        let reported = syndrome_of(&frame).xor(&meas_err);
        out.push(RoundRecord { reported, frame: frame.clone(), meas_err });
    }
    out
}

/// Every single-fault location of a phenomenological history.
pub fn all_phenomenological_faults(n: usize, rounds: usize) -> Vec<PhenomFault> {
    let mut v = Vec::new();
    for round in 1..rounds {
        for qubit in 0..n {
            v.push(PhenomFault::Data { round, qubit });
        }
    }
    for round in 0..rounds {
        for check in 0..n - 1 {
            v.push(PhenomFault::Meas { round, check });
        }
    }
    v
}

/// A fired detector; ordering is lexicographic in (row, col).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Detector {
    pub row: u32,
    pub col: u32,
}

impl Detector {
    pub fn new(row: usize, col: usize) -> Self {
        Detector { row: row as u32, col: col as u32 }
    }
}

/// Difference syndromes of consecutive rounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectorGrid {
    pub rows: usize,
    pub cols: usize,
    /// Fired detectors in lexicographic order.
    pub fired: Vec<Detector>,
    pub model: NoiseModel,
}

impl DetectorGrid {
    pub fn is_fired(&self, row: usize, col: usize) -> bool {
        self.fired.binary_search(&Detector::new(row, col)).is_ok()
    }
}

pub fn detectors_from(records: &[RoundRecord], model: NoiseModel) -> Result<DetectorGrid> {
    let reported: Vec<&SyndromeBits> = records.iter().map(|r| &r.reported).collect();
    detectors_from_reported(&reported, model)
}

pub fn detectors_from_reported(reported: &[&SyndromeBits], model: NoiseModel) -> Result<DetectorGrid> {
    if reported.len() < 2 {
        return Err(Error::Structural(format!("need at least 2 rounds, got {}", reported.len())));
    }
    let cols = reported[0].len();
    if reported.iter().any(|r| r.len() != cols) {
        return Err(Error::Structural("rounds have different syndrome lengths".into()));
    }
    let mut fired = Vec::new();
    for t in 1..reported.len() {
        for c in 0..cols {
            if reported[t].get(c) != reported[t - 1].get(c) {
                fired.push(Detector::new(t - 1, c));
            }
        }
    }
    Ok(DetectorGrid { rows: reported.len() - 1, cols, fired, model })
}
