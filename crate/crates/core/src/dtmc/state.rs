use crate::policy::Mode;
use std::collections::HashMap;

/// Observation-instant state: previous mode, current mode, queue length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DtmcState {
    pub s_p: Mode,
    pub s_c: Mode,
    pub b: u32,
}

impl DtmcState {
    pub const fn new(s_p: Mode, s_c: Mode, b: u32) -> Self {
        DtmcState { s_p, s_c, b }
    }

    /// Sleep modes never follow one another, and any state touching a
    /// sleep mode holds fewer than `n_th` packets.
    pub fn is_valid(&self, n_th: u32, n_sz: u32) -> bool {
        use Mode::*;
        if self.b > n_sz {
            return false;
        }
        if matches!(
            (self.s_p, self.s_c),
            (DeepSleep, FastSleep) | (FastSleep, DeepSleep)
        ) {
            return false;
        }
        (self.s_p == Active && self.s_c == Active) || self.b < n_th
    }
}

impl std::fmt::Display for DtmcState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{{}, {}, {}}}", self.s_p, self.s_c, self.b)
    }
}

/// Mode pairs in enumeration order.
const PAIRS: [(Mode, Mode); 7] = [
    (Mode::Active, Mode::Active),
    (Mode::Active, Mode::DeepSleep),
    (Mode::Active, Mode::FastSleep),
    (Mode::DeepSleep, Mode::DeepSleep),
    (Mode::FastSleep, Mode::FastSleep),
    (Mode::DeepSleep, Mode::Active),
    (Mode::FastSleep, Mode::Active),
];

/// All valid states in a fixed order, with reverse lookup.
#[derive(Debug, Clone)]
pub struct StateSpace {
    states: Vec<DtmcState>,
    index: HashMap<DtmcState, usize>,
}

impl StateSpace {
    pub fn new(n_th: u32, n_sz: u32) -> Self {
        let states: Vec<DtmcState> = PAIRS
            .iter()
            .flat_map(|&(s_p, s_c)| (0..=n_sz).map(move |b| DtmcState::new(s_p, s_c, b)))
            .filter(|s| s.is_valid(n_th, n_sz))
            .collect();
        let index = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        StateSpace { states, index }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[DtmcState] {
        &self.states
    }

    pub fn index_of(&self, s: &DtmcState) -> Option<usize> {
        self.index.get(s).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Mode::*;

    #[test]
    fn small_instance_count() {
        // Six mode pairs touching a sleep mode with b in 0..8, plus
        // {on, on, b} for b in 0..=12.
        assert_eq!(StateSpace::new(8, 12).len(), 61);
        assert_eq!(StateSpace::new(40, 100).len(), 341);
    }

    #[test]
    fn pruning_rules() {
        assert!(!DtmcState::new(DeepSleep, FastSleep, 0).is_valid(8, 12));
        assert!(!DtmcState::new(FastSleep, DeepSleep, 0).is_valid(8, 12));
        assert!(!DtmcState::new(FastSleep, FastSleep, 8).is_valid(8, 12));
        assert!(!DtmcState::new(Active, DeepSleep, 8).is_valid(8, 12));
        assert!(!DtmcState::new(DeepSleep, Active, 8).is_valid(8, 12));
        assert!(DtmcState::new(DeepSleep, Active, 7).is_valid(8, 12));
        assert!(DtmcState::new(Active, Active, 12).is_valid(8, 12));
        assert!(!DtmcState::new(Active, Active, 13).is_valid(8, 12));
    }

    #[test]
    fn index_round_trips() {
        let sp = StateSpace::new(8, 12);
        for (i, s) in sp.states().iter().enumerate() {
            assert_eq!(sp.index_of(s), Some(i));
        }
        assert_eq!(sp.index_of(&DtmcState::new(Active, Active, 0)), Some(0));
    }
}
