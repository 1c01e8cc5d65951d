use std::ops::Range;

/// The four functional stages of the chip, in light-propagation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Part {
    /// Input gate MZIs (stage 1), binary open/closed.
    Gates,
    /// First triangular SU core (stage 2).
    SuA,
    /// Diagonal attenuator stage (stage 3).
    Diag,
    /// Second triangular SU core (stage 4).
    SuB,
}

/// Which phase shifter of an MZI slot an index refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    /// Internal (arm-differential) phase.
    Theta,
    /// Upper output-arm phase of an SU-core MZI.
    Alpha,
    /// Lower output-arm phase of an SU-core MZI.
    Beta,
    /// External per-channel phase of a diagonal-stage slot.
    ExtPhase,
}

/// Position of one MZI inside a triangular SU core.
///
/// `plane` runs 1..N-1 as in the product ordering of the core; `pos_in_plane`
/// numbers MZIs within a plane in physical (light-first) order; `pair_lo` is
/// the lower of the two adjacent ports the MZI couples (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuSlot {
    pub plane: usize,
    pub pos_in_plane: usize,
    pub pair_lo: usize,
}

/// Wiring of MZIs and phase shifters into the four chip stages, plus the
/// flat shifter numbering used by phase states and voltage vectors.
///
/// Shifter layout (contiguous ranges, in order):
/// gates (`n` thetas), core A (`3` per slot: theta, alpha, beta), diagonal
/// stage (`2` per channel: theta, external phase), core B (as core A).
/// For 4 ports this gives 4 + 18 + 8 + 18 = 48 shifters on 20 MZIs.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshTopology {
    n_ports: usize,
    su_slots: Vec<SuSlot>,
}

impl MeshTopology {
    /// Triangular-core topology for `n_ports >= 2`.
    pub fn new(n_ports: usize) -> Self {
        assert!(n_ports >= 2, "mesh needs at least two ports");
        let mut su_slots = Vec::with_capacity(n_ports * (n_ports - 1) / 2);
        // Physical order: plane 1 first; inside plane p, positions run from
        // the uppermost pair (n-1-p) to the bottom pair (n-2).
        for plane in 1..n_ports {
            for pos in 0..plane {
                su_slots.push(SuSlot {
                    plane,
                    pos_in_plane: pos,
                    pair_lo: n_ports - 1 - plane + pos,
                });
            }
        }
        Self { n_ports, su_slots }
    }

    /// The 4-port chip this crate models by default.
    pub fn standard() -> Self {
        Self::new(4)
    }

    pub fn n_ports(&self) -> usize {
        self.n_ports
    }

    /// Number of MZIs in one SU core: `n(n-1)/2`.
    pub fn su_slot_count(&self) -> usize {
        self.su_slots.len()
    }

    /// SU-core slots in physical order (shared by both cores).
    pub fn su_slots(&self) -> &[SuSlot] {
        &self.su_slots
    }

    /// Total MZI count over all four stages.
    pub fn mzi_count(&self) -> usize {
        2 * self.n_ports + 2 * self.su_slot_count()
    }

    /// Total phase-shifter count `S`.
    pub fn shifter_count(&self) -> usize {
        3 * self.n_ports + 6 * self.su_slot_count()
    }

    /// Flat index range occupied by one stage.
    pub fn index_range(&self, part: Part) -> Range<usize> {
        let n = self.n_ports;
        let k3 = 3 * self.su_slot_count();
        match part {
            Part::Gates => 0..n,
            Part::SuA => n..n + k3,
            Part::Diag => n + k3..n + k3 + 2 * n,
            Part::SuB => n + k3 + 2 * n..n + k3 + 2 * n + k3,
        }
    }

    /// Flat shifter index of `(part, slot, role)`, or `None` if the triple
    /// does not name a shifter of this topology.
    pub fn shifter_index(&self, part: Part, slot: usize, role: Role) -> Option<usize> {
        let base = self.index_range(part).start;
        match part {
            Part::Gates => (slot < self.n_ports && role == Role::Theta).then(|| base + slot),
            Part::SuA | Part::SuB => {
                if slot >= self.su_slot_count() {
                    return None;
                }
                let off = match role {
                    Role::Theta => 0,
                    Role::Alpha => 1,
                    Role::Beta => 2,
                    Role::ExtPhase => return None,
                };
                Some(base + 3 * slot + off)
            }
            Part::Diag => {
                if slot >= self.n_ports {
                    return None;
                }
                let off = match role {
                    Role::Theta => 0,
                    Role::ExtPhase => 1,
                    _ => return None,
                };
                Some(base + 2 * slot + off)
            }
        }
    }

    /// Inverse of [`shifter_index`](Self::shifter_index).
    pub fn shifter_role(&self, index: usize) -> Option<(Part, usize, Role)> {
        for part in [Part::Gates, Part::SuA, Part::Diag, Part::SuB] {
            let r = self.index_range(part);
            if !r.contains(&index) {
                continue;
            }
            let off = index - r.start;
            return Some(match part {
                Part::Gates => (part, off, Role::Theta),
                Part::SuA | Part::SuB => {
                    let role = [Role::Theta, Role::Alpha, Role::Beta][off % 3];
                    (part, off / 3, role)
                }
                Part::Diag => {
                    let role = [Role::Theta, Role::ExtPhase][off % 2];
                    (part, off / 2, role)
                }
            });
        }
        None
    }

    /// Index of the MZI (0..mzi_count) that a shifter belongs to, used to
    /// attach per-interferometer properties such as arm-length imbalance.
    pub fn mzi_of_shifter(&self, index: usize) -> Option<usize> {
        let (part, slot, _) = self.shifter_role(index)?;
        let k = self.su_slot_count();
        Some(match part {
            Part::Gates => slot,
            Part::SuA => self.n_ports + slot,
            Part::Diag => self.n_ports + k + slot,
            Part::SuB => 2 * self.n_ports + k + slot,
        })
    }

    /// True when the shifter is the internal phase of an MZI (as opposed to
    /// an output-arm or external phase).
    pub fn is_internal_theta(&self, index: usize) -> bool {
        matches!(self.shifter_role(index), Some((_, _, Role::Theta)))
    }
}
