//! Weak-membrane minimization and the constructive steps behind the lower
//! and upper bounds: level-set thresholding, the discrete maximal function
//! and Lipschitz truncation.

mod coarea;
mod exact;
mod lines;
mod maximal;

pub use coarea::{coarea_threshold, threshold_levels, Threshold, DEFAULT_LEVELS};
pub use exact::{exact_minimize_1d, ExactPath, PATH_LIMIT};
pub use lines::{
    alternating_minimize, alternating_minimize_from, membrane_objective, minimize_bond_graph,
    BondGraph, GncSchedule, GraphRun, HalfStep, LineBond, LineField, MembraneRun, TraceEntry,
};
pub use maximal::{
    discrete_gradient, lipschitz_truncation, maximal_function, pairwise_lipschitz, Truncation,
    LIPSCHITZ_FACTOR,
};
