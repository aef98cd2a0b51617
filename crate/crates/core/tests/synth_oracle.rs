mod common;

use common::{accepts, real_bound, sb_system, space_of, surrogate};
use paretune::accuracy::AccuracySpec;
use paretune::param_space::{ParameterRanges, Variant};
use paretune::synth_sim::{true_optimum, SynthError, SynthParams};

/// Noise-free total time computed from the generator laws directly.
fn law_time(p: &SynthParams, rc: f64, nz: u32, points: u64, order: u32) -> f64 {
    let c = p.recip[&order];
    let shift = if nz >= p.n_procs { p.shift_mag } else { 0.0 };
    p.a_r + p.b_r * rc.powi(3) + c.p + c.b * points as f64 + shift + p.gamma_rc * rc
}

fn shrunken() -> ParameterRanges {
    ParameterRanges { alpha_step: 0.02, cutoff_step: 0.2, ..Default::default() }
}

#[test]
fn optimum_matches_independent_scan() {
    let space = space_of(&sb_system(), shrunken());
    let params = SynthParams::default();
    for spec in [
        AccuracySpec::Split { real_threshold: 1e-6, recip_threshold: 1e-3 },
        AccuracySpec::Combined { threshold: 1e-4 },
    ] {
        let mut best: Option<(f64, u64, u32, f64, [u32; 3])> = None;
        for &rc in &space.cutoffs {
            for &g in &space.grids {
                for &order in &space.orders {
                    let ok = space.alphas.iter().any(|&a| {
                        accepts(&spec, real_bound(a, rc, &space.system), surrogate(1.0, a, g, order, &space.system))
                    });
                    if !ok {
                        continue;
                    }
                    let key = (law_time(&params, rc, g.nz, g.points(), order), g.points(), order, rc, g.dims());
                    if best.map_or(true, |b| key.partial_cmp(&b) == Some(std::cmp::Ordering::Less)) {
                        best = Some(key);
                    }
                }
            }
        }
        let (t, points, order, rc, dims) = best.unwrap();
        let opt = true_optimum(&space, &spec, &params, Variant::Ik).unwrap();
        assert!(((opt.seconds - t) / t).abs() < 1e-12);
        assert_eq!((opt.config.grid.points(), opt.config.order, opt.config.grid.dims()), (points, order, dims));
        assert_eq!(opt.config.cutoff, rc);
    }
}

#[test]
fn looser_target_never_slows_the_optimum() {
    let space = space_of(&sb_system(), shrunken());
    let params = SynthParams::default();
    let mut previous = f64::INFINITY;
    for recip in [1e-4, 1e-3, 1e-2, 1e-1] {
        let spec = AccuracySpec::Split { real_threshold: 1e-5, recip_threshold: recip };
        let opt = true_optimum(&space, &spec, &params, Variant::Ik).unwrap();
        assert!(opt.seconds <= previous);
        previous = opt.seconds;
    }
}

#[test]
fn single_accurate_point_is_the_optimum() {
    let ranges = ParameterRanges {
        cutoff_min: 6.0,
        cutoff_max: 6.0,
        orders: vec![6],
        grid_point_factor: 0.01,
        ..Default::default()
    };
    let space = space_of(&sb_system(), ranges);
    assert_eq!(space.perf_space_size(), 1);
    let spec = AccuracySpec::Combined { threshold: f64::INFINITY };
    let opt = true_optimum(&space, &spec, &SynthParams::default(), Variant::Ik).unwrap();
    assert_eq!(opt.config.grid, space.grids[0]);
    assert_eq!(opt.config.order, 6);
}

#[test]
fn nothing_accurate_is_an_error() {
    let space = space_of(&sb_system(), shrunken());
    let spec = AccuracySpec::Combined { threshold: 0.0 };
    assert!(matches!(
        true_optimum(&space, &spec, &SynthParams::default(), Variant::Ik),
        Err(SynthError::EmptyAccurateSubspace)
    ));
}
