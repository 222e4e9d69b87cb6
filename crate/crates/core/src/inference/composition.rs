use serde::{Deserialize, Serialize};

use crate::arm::Arm;
use crate::panel::CellTable;

/// Split of an overall click-through-rate difference between two arms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Composition {
    pub from: Arm,
    pub to: Arm,
    pub total: f64,
    /// `Σ_g (w_{g,b} - w_{g,a}) c_{g,a}`.
    pub composition: f64,
    /// `Σ_g w_{g,b} (c_{g,b} - c_{g,a})`.
    pub within: f64,
}

/// Decompose `CTR(b) - CTR(a)` into a composition term and a within-cell
/// term. Cells absent from an arm carry zero weight and zero rate.
pub fn composition_decompose(table: &CellTable, a: Arm, b: Arm) -> Composition {
    let mut composition = 0.0;
    let mut within = 0.0;
    for g in 0..table.cells.len() {
        let (wa, ca) = (table.weight(g, a), table.ctr(g, a));
        let (wb, cb) = (table.weight(g, b), table.ctr(g, b));
        composition += (wb - wa) * ca;
        within += wb * (cb - ca);
    }
    Composition { from: a, to: b, total: composition + within, composition, within }
}
