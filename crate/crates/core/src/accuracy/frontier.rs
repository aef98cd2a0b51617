use super::{AccurateSubspace, PerfPoint};

/// Pareto-minimal accurate points under (cutoff, grid points, order).
#[derive(Debug, Clone, PartialEq)]
pub struct Frontier {
    /// Sorted by cutoff, grid points, order.
    pub points: Vec<PerfPoint>,
}

impl Frontier {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, point: &PerfPoint) -> bool {
        self.points.iter().any(|p| p == point)
    }
}

/// `a` dominates `b` when it is no more expensive along every cost axis and
/// strictly cheaper along at least one.
pub fn dominates(a: &PerfPoint, b: &PerfPoint) -> bool {
    let ka = (a.cutoff_index, a.grid.points(), a.order);
    let kb = (b.cutoff_index, b.grid.points(), b.order);
    ka.0 <= kb.0 && ka.1 <= kb.1 && ka.2 <= kb.2 && ka != kb
}

/// Keeps the accurate points that no other accurate point dominates.
pub fn extract_frontier(sub: &AccurateSubspace) -> Frontier {
    let mut sorted = sub.points.clone();
    sorted.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    // A dominator always sorts before the point it dominates, and by
    // transitivity some frontier member dominates every dominated point.
    let mut points: Vec<PerfPoint> = Vec::new();
    for p in sorted {
        if !points.iter().any(|f| dominates(f, &p)) {
            points.push(p);
        }
    }
    Frontier { points }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accuracy::AccuracySpec;
    use crate::param_space::{build_search_space, GridSize, ParameterRanges, SystemDescription, Variant};

    fn point(c: usize, g: GridSize, order: u32) -> PerfPoint {
        PerfPoint {
            cutoff_index: c,
            cutoff: 2.0 + 0.1 * c as f64,
            grid: g,
            order,
            alpha_lo: 0,
            alpha_hi: 0,
        }
    }

    fn subspace(points: Vec<PerfPoint>) -> AccurateSubspace {
        let system = SystemDescription::bulk([10.0; 3], 1000, 1, 1.0);
        AccurateSubspace {
            space: build_search_space(&system, &ParameterRanges::default()).unwrap(),
            variant: Variant::Ik,
            spec: AccuracySpec::Combined { threshold: 1.0 },
            points,
        }
    }

    #[test]
    fn single_point_is_its_own_frontier() {
        let p = point(0, GridSize::new(20, 20, 20), 2);
        assert_eq!(extract_frontier(&subspace(vec![p])).points, vec![p]);
    }

    #[test]
    fn strictly_lower_order_wins() {
        let g = GridSize::new(20, 20, 20);
        let f = extract_frontier(&subspace(vec![point(0, g, 3), point(0, g, 2)]));
        assert_eq!(f.points, vec![point(0, g, 2)]);
    }

    #[test]
    fn equal_cost_grids_of_different_shape_both_survive() {
        let a = point(3, GridSize::new(2, 4, 4), 2);
        let b = point(3, GridSize::new(4, 4, 2), 2);
        let f = extract_frontier(&subspace(vec![b, a]));
        assert_eq!(f.points, vec![a, b]);
    }

    #[test]
    fn trade_off_points_are_kept() {
        let small = GridSize::new(8, 8, 8);
        let large = GridSize::new(16, 16, 16);
        let pts = vec![point(10, small, 2), point(5, large, 2), point(10, large, 2)];
        let f = extract_frontier(&subspace(pts));
        assert_eq!(f.points, vec![point(5, large, 2), point(10, small, 2)]);
    }
}
