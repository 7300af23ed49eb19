//! OLT side: ranging with the doze offset, and the fixed-grant polling
//! schedule.

use crate::params::NetworkConfig;

/// Round-trip times as they really are and as the OLT believes them.
#[derive(Debug, Clone, PartialEq)]
pub struct RangingTable {
    pub true_rtt: Vec<f64>,
    pub t_olt: Vec<f64>,
}

/// One MPCP ranging exchange. The OLT stamps the GATE with `t0`; the ONU
/// adopts `t0` on reception and answers after `hold` seconds with a REPORT
/// stamped `t1 - offset`, which reaches the OLT at `t2`. Returns the
/// round-trip time the OLT computes as `t2 - stamp`.
pub fn ranging_exchange(t0: f64, rtt: f64, hold: f64, offset: f64) -> f64 {
    let one_way = rtt / 2.0;
    // ONU clock reads t0 at reception, i.e. at OLT time t0 + one_way.
    let t1 = t0 + hold;
    let t2 = t0 + one_way + hold + one_way;
    let stamp = t1 - offset;
    t2 - stamp
}

impl RangingTable {
    /// Ranges every ONU; those in `mda` stamp their REPORT `t_sw_dz` early.
    pub fn measure(true_rtt: &[f64], mda: &[bool], t_sw_dz: f64) -> Self {
        let t_olt = true_rtt
            .iter()
            .zip(mda)
            .map(|(&rtt, &m)| ranging_exchange(0.0, rtt, 1e-6, if m { t_sw_dz } else { 0.0 }))
            .collect();
        RangingTable {
            true_rtt: true_rtt.to_vec(),
            t_olt,
        }
    }

    pub fn uniform(n: usize, rtt: f64, mda: bool, t_sw_dz: f64) -> Self {
        Self::measure(&vec![rtt; n], &vec![mda; n], t_sw_dz)
    }

    /// How long before its slot the GATE actually reaches ONU `i`.
    pub fn gate_lead(&self, i: usize) -> f64 {
        self.t_olt[i] - self.true_rtt[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grant {
    pub onu_id: usize,
    /// OLT clock time the GATE leaves.
    pub gate_send: f64,
    /// When the GATE reaches the ONU.
    pub gate_arrival: f64,
    /// Slot start and length, on the ONU's (ranged) clock.
    pub slot_start: f64,
    pub slot_len: f64,
}

/// Grants of the cycle starting at `cycle_start`: back-to-back fixed slots
/// in ONU order. The OLT sends each GATE one believed round trip ahead of
/// the slot, so it lands `t_olt - rtt` early at the ONU.
pub fn olt_schedule_cycle(
    cycle_start: f64,
    cfg: &NetworkConfig,
    ranging: &RangingTable,
) -> Vec<Grant> {
    let slot_len = cfg.slot_time();
    (0..cfg.n_onus as usize)
        .map(|i| {
            let slot_start = cycle_start + i as f64 * slot_len;
            let gate_arrival = slot_start - ranging.gate_lead(i);
            Grant {
                onu_id: i,
                gate_send: gate_arrival - ranging.true_rtt[i] / 2.0,
                gate_arrival,
                slot_start,
                slot_len,
            }
        })
        .collect()
}
