//! Quantum cost of receiving `R` bits under the four compared protocols.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::protocol::ProtocolConfig;
use crate::session::run_trial;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProtocolId {
    Yang2013,
    YSW2015,
    YYLSZ2015,
    Proposed,
}

impl ProtocolId {
    pub const ALL: [ProtocolId; 4] = [
        ProtocolId::Yang2013,
        ProtocolId::YSW2015,
        ProtocolId::YYLSZ2015,
        ProtocolId::Proposed,
    ];

    pub fn column(self) -> &'static str {
        match self {
            ProtocolId::Yang2013 => "yang",
            ProtocolId::YSW2015 => "ysw",
            ProtocolId::YYLSZ2015 => "yylsz",
            ProtocolId::Proposed => "proposed",
        }
    }
}

/// A row of the comparison table. `total(R) = qubits_per_message * R + overhead`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProtocolCost {
    pub id: ProtocolId,
    pub qubits_per_message: i64,
    pub transmissions: i64,
    /// As listed in the table's decoy column.
    pub decoy_qubits: i64,
    pub loyalty_qubits: i64,
    /// Constant term of the listed total.
    pub overhead: i64,
}

/// Decoys per transmission.
pub const DECOYS: i64 = 50;
/// Loyalty tests of the proposed protocol.
pub const LOYALTY_TESTS: i64 = 20;

/// The YSW row lists `2 x 50` decoys but a total of `4R + 50`. Totals follow
/// the total column; this note goes with every emitted curve.
pub const YSW_NOTE: &str =
    "note: YSW lists 2x50 decoy qubits but a total of 4R+50; the total is used";

impl ProtocolCost {
    pub fn of(id: ProtocolId) -> Self {
        match id {
            ProtocolId::Yang2013 => ProtocolCost {
                id,
                qubits_per_message: 4,
                transmissions: 1,
                decoy_qubits: DECOYS,
                loyalty_qubits: 0,
                overhead: DECOYS,
            },
            ProtocolId::YSW2015 => ProtocolCost {
                id,
                qubits_per_message: 4,
                transmissions: 1,
                decoy_qubits: 2 * DECOYS,
                loyalty_qubits: 0,
                overhead: DECOYS,
            },
            ProtocolId::YYLSZ2015 => ProtocolCost {
                id,
                qubits_per_message: 4,
                transmissions: 2,
                decoy_qubits: 2 * DECOYS,
                loyalty_qubits: 0,
                overhead: 2 * DECOYS,
            },
            ProtocolId::Proposed => ProtocolCost {
                id,
                qubits_per_message: 1,
                transmissions: 2,
                decoy_qubits: 2 * DECOYS,
                loyalty_qubits: 2 * LOYALTY_TESTS,
                overhead: 2 * (DECOYS + LOYALTY_TESTS),
            },
        }
    }

    pub fn total(&self, r: i64) -> Result<i64> {
        if r < 0 {
            return Err(Error::NegativeR(r));
        }
        Ok(self.qubits_per_message * r + self.overhead)
    }
}

pub fn total_cost(id: ProtocolId, r: i64) -> Result<i64> {
    ProtocolCost::of(id).total(r)
}

/// Smallest `R` at which the proposed protocol costs no more than any other.
pub fn crossover() -> i64 {
    let proposed = ProtocolCost::of(ProtocolId::Proposed);
    (0..)
        .find(|&r| {
            let p = proposed.total(r).unwrap();
            ProtocolId::ALL
                .iter()
                .all(|&id| p <= total_cost(id, r).unwrap())
        })
        .unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CurveRow {
    #[serde(rename = "R")]
    pub r: i64,
    pub yang: i64,
    pub ysw: i64,
    pub yylsz: i64,
    pub proposed: i64,
}

/// Costs for `R = 1..=r_max`.
pub fn emit_curve(r_max: i64) -> Result<Vec<CurveRow>> {
    if r_max < 1 {
        return Err(Error::EmptyCurve);
    }
    (1..=r_max)
        .map(|r| {
            Ok(CurveRow {
                r,
                yang: total_cost(ProtocolId::Yang2013, r)?,
                ysw: total_cost(ProtocolId::YSW2015, r)?,
                yylsz: total_cost(ProtocolId::YYLSZ2015, r)?,
                proposed: total_cost(ProtocolId::Proposed, r)?,
            })
        })
        .collect()
}

pub fn write_curve<W: std::io::Write>(out: W, rows: &[CurveRow]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()
}

/// Qubits an honest simulated run prepares to deliver `r` bits with the
/// given decoy and loyalty counts.
pub fn measured_consumption(r: usize, m: usize, m2: usize, k: usize, seed: u64) -> Result<usize> {
    let config = ProtocolConfig { n: r, m, k, m2, tau: 0.0 };
    let t = run_trial(&crate::session::RunSpec { seed, stream: 0, config, scenario: None })?;
    Ok(t.qubits_prepared)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_values() {
        assert_eq!(total_cost(ProtocolId::Proposed, 30).unwrap(), 170);
        assert_eq!(total_cost(ProtocolId::Yang2013, 30).unwrap(), 170);
        assert_eq!(total_cost(ProtocolId::YYLSZ2015, 0).unwrap(), 100);
        assert_eq!(total_cost(ProtocolId::Proposed, 31).unwrap(), 171);
        assert_eq!(total_cost(ProtocolId::Yang2013, 31).unwrap(), 174);
        assert_eq!(total_cost(ProtocolId::Proposed, 29).unwrap(), 169);
        assert_eq!(total_cost(ProtocolId::Yang2013, 29).unwrap(), 166);
        assert_eq!(total_cost(ProtocolId::YSW2015, -1), Err(Error::NegativeR(-1)));
    }

    #[test]
    fn crossover_is_thirty() {
        assert_eq!(crossover(), 30);
        for row in emit_curve(200).unwrap().into_iter().filter(|r| r.r > 30) {
            assert!(row.proposed < row.yang.min(row.ysw).min(row.yylsz));
        }
    }

    #[test]
    fn curve_shape() {
        assert_eq!(emit_curve(100).unwrap().len(), 100);
        assert_eq!(emit_curve(1).unwrap().len(), 1);
        assert_eq!(emit_curve(0), Err(Error::EmptyCurve));
        let mut buf = Vec::new();
        write_curve(&mut buf, &emit_curve(2).unwrap()).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "R,yang,ysw,yylsz,proposed\n1,54,54,104,141\n2,58,58,108,142\n");
    }

    #[test]
    fn simulator_consumption_matches_formula() {
        for r in [1usize, 7, 30] {
            let q = measured_consumption(r, 50, 50, 20, 4).unwrap();
            assert_eq!(q as i64, total_cost(ProtocolId::Proposed, r as i64).unwrap());
        }
    }
}
