use crate::accuracy::AccurateSubspace;
use crate::param_space::{Configuration, GridSize, SearchSpace, Variant};

/// Ewald parameter used while sampling. It does not change the cost.
pub const SAMPLING_ALPHA: f64 = 0.5;

const REAL_PLAN_START: f64 = 2.0;
const REAL_PLAN_STEP: f64 = 0.5;
const REAL_PLAN_POINTS: usize = 9;

/// Real-space sampling: cutoffs 2.0, 2.5, ..., 6.0 clipped to the space's
/// cutoff range, with the cheapest order and a 1x1x1 grid.
pub fn static_real_plan(space: &SearchSpace, variant: Variant) -> Vec<Configuration> {
    let (lo, hi) = (space.ranges.cutoff_min, space.ranges.cutoff_max);
    let slack = 1e-9 * REAL_PLAN_STEP;
    (0..REAL_PLAN_POINTS)
        .map(|k| REAL_PLAN_START + k as f64 * REAL_PLAN_STEP)
        .filter(|&c| c >= lo - slack && c <= hi + slack)
        .map(|cutoff| Configuration {
            alpha: SAMPLING_ALPHA,
            cutoff,
            order: space.orders[0],
            grid: GridSize::UNIT,
            variant,
        })
        .collect()
}

/// Reciprocal-space sampling: every (order, grid) pair at the smallest cutoff.
pub fn static_recip_plan(space: &SearchSpace, variant: Variant) -> Vec<Configuration> {
    static_recip_plan_for_orders(space, &space.orders, variant)
}

/// As [`static_recip_plan`], restricted to `orders`.
pub fn static_recip_plan_for_orders(
    space: &SearchSpace,
    orders: &[u32],
    variant: Variant,
) -> Vec<Configuration> {
    orders
        .iter()
        .flat_map(|&order| {
            space.grids.iter().map(move |&grid| Configuration {
                alpha: SAMPLING_ALPHA,
                cutoff: space.ranges.cutoff_min,
                order,
                grid,
                variant,
            })
        })
        .collect()
}

/// One adaptive pass over grids at a fixed order and cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct RecipPass {
    pub order: u32,
    pub cutoff: f64,
    /// Candidate positions, ascending by point count.
    pub grids: Vec<GridSize>,
}

/// Sampling restricted to what the accurate subspace needs.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicPlan {
    /// Candidate cutoffs for the real-space pass.
    pub real_cutoffs: Vec<f64>,
    /// `[rc_min, rc_max]`, or a single level when they coincide.
    pub cutoff_levels: Vec<f64>,
    pub passes: Vec<RecipPass>,
}

/// Reciprocal passes at the smallest and largest accurate cutoff for every
/// accurate order, over the grids of the space between the smallest and
/// largest accurate grid of that order.
pub fn dynamic_recip_plan(sub: &AccurateSubspace) -> DynamicPlan {
    let space = &sub.space;
    let Some((rc_min, rc_max)) = sub.cutoff_range() else {
        return DynamicPlan { real_cutoffs: Vec::new(), cutoff_levels: Vec::new(), passes: Vec::new() };
    };
    let cutoff_levels = if rc_max > rc_min { vec![rc_min, rc_max] } else { vec![rc_min] };
    let real_cutoffs = space
        .cutoffs
        .iter()
        .copied()
        .filter(|&c| c >= rc_min && c <= rc_max)
        .collect();

    let mut passes = Vec::new();
    for order in sub.orders() {
        let accurate = sub.grids_for_order(order);
        let (lo, hi) = (accurate[0].points(), accurate[accurate.len() - 1].points());
        let grids: Vec<GridSize> = space
            .grids
            .iter()
            .copied()
            .filter(|g| (lo..=hi).contains(&g.points()))
            .collect();
        for &cutoff in &cutoff_levels {
            passes.push(RecipPass { order, cutoff, grids: grids.clone() });
        }
    }
    DynamicPlan { real_cutoffs, cutoff_levels, passes }
}
