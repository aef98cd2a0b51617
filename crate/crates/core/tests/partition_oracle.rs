mod common;

use common::{exhaustive_partition, pairwise_frontier, sb_system, space_of, widest_run};
use paretune::accuracy::{
    extract_frontier, partition_space, AccuracyError, AccuracySpec, SurrogateModel,
};
use paretune::param_space::{ParameterRanges, Variant};

fn reduced() -> ParameterRanges {
    // 25 alphas x 21 cutoffs keeps the exhaustive scan small.
    ParameterRanges {
        alpha_min: 0.04,
        alpha_max: 1.0,
        alpha_step: 0.04,
        cutoff_min: 2.0,
        cutoff_max: 6.0,
        cutoff_step: 0.2,
        ..Default::default()
    }
}

fn check_against_scan(spec: AccuracySpec, ranges: ParameterRanges) {
    let space = space_of(&sb_system(), ranges);
    assert!(space.logical_size() <= 100_000);
    let oracle = exhaustive_partition(&space, &spec, 1.0);
    let sub = partition_space(&space, &spec, &SurrogateModel::new(1.0), Variant::Ik).unwrap();
    assert_eq!(sub.len(), oracle.len());
    for (p, o) in sub.points.iter().zip(&oracle) {
        assert_eq!((p.cutoff_index, p.grid, p.order), (o.cutoff_index, o.grid, o.order));
        let (lo, hi) = widest_run(&o.feasible);
        assert_eq!((p.alpha_lo, p.alpha_hi), (lo, hi), "at {:?}", o);
    }
}

#[test]
fn split_membership_matches_exhaustive_scan() {
    check_against_scan(
        AccuracySpec::Split { real_threshold: 1e-3, recip_threshold: 1e-1 },
        reduced(),
    );
    check_against_scan(
        AccuracySpec::Split { real_threshold: 1e-6, recip_threshold: 1e-3 },
        reduced(),
    );
}

#[test]
fn split_feasible_sets_are_intervals() {
    let space = space_of(&sb_system(), reduced());
    let spec = AccuracySpec::Split { real_threshold: 1e-5, recip_threshold: 1e-2 };
    for p in exhaustive_partition(&space, &spec, 1.0) {
        let (lo, hi) = widest_run(&p.feasible);
        assert_eq!(hi - lo + 1, p.feasible.len());
    }
}

#[test]
fn combined_membership_matches_exhaustive_scan() {
    check_against_scan(AccuracySpec::Combined { threshold: 1e-3 }, reduced());
    check_against_scan(AccuracySpec::Combined { threshold: 2e-5 }, reduced());
}

#[test]
fn infinite_thresholds_accept_everything() {
    let space = space_of(&sb_system(), reduced());
    let inf = f64::INFINITY;
    for spec in [
        AccuracySpec::Split { real_threshold: inf, recip_threshold: inf },
        AccuracySpec::Combined { threshold: inf },
    ] {
        let sub = partition_space(&space, &spec, &SurrogateModel::new(1.0), Variant::Ik).unwrap();
        assert_eq!(sub.len(), space.perf_space_size());
        assert!(sub.points.iter().all(|p| p.alpha_lo == 0 && p.alpha_hi == space.alphas.len() - 1));
        let frontier = extract_frontier(&sub);
        assert_eq!(frontier.len(), 1);
        assert_eq!(frontier.points[0].cutoff_index, 0);
        assert_eq!(frontier.points[0].order, 2);
    }
}

#[test]
fn zero_thresholds_report_the_closest_miss() {
    let space = space_of(&sb_system(), reduced());
    let spec = AccuracySpec::Split { real_threshold: 0.0, recip_threshold: 0.0 };
    let err = partition_space(&space, &spec, &SurrogateModel::new(1.0), Variant::Ik).unwrap_err();
    let AccuracyError::EmptyAccurateSubspace(miss) = &err else { panic!("{err}") };
    assert!(miss.violation_ratio.is_infinite());
    assert!(err.to_string().starts_with("empty accurate subspace"));
}

#[test]
fn frontier_matches_pairwise_oracle_on_partitions() {
    let space = space_of(&sb_system(), ParameterRanges::default());
    for spec in [
        AccuracySpec::Split { real_threshold: 1e-6, recip_threshold: 1e-3 },
        AccuracySpec::Split { real_threshold: 1e-4, recip_threshold: 1e-2 },
        AccuracySpec::Combined { threshold: 5e-4 },
    ] {
        let sub = partition_space(&space, &spec, &SurrogateModel::new(1.0), Variant::Ik).unwrap();
        let frontier = extract_frontier(&sub);
        assert_eq!(frontier.points, pairwise_frontier(&sub.points));
    }
}

#[test]
fn partition_is_deterministic() {
    let space = space_of(&sb_system(), ParameterRanges::default());
    let spec = AccuracySpec::Combined { threshold: 1e-4 };
    let a = partition_space(&space, &spec, &SurrogateModel::new(1.0), Variant::Ik).unwrap();
    let b = partition_space(&space, &spec, &SurrogateModel::new(1.0), Variant::Ik).unwrap();
    assert_eq!(a, b);
    assert_eq!(extract_frontier(&a), extract_frontier(&b));
}
