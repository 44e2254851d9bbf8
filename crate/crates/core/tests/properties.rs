mod common;

use proptest::prelude::*;

use common::*;
use teleportsim::channel::SchmidtChannel;
use teleportsim::explorer::sweep_channel;
use teleportsim::resources::{bound_slope, lower_bound_sum, resource_report};
use teleportsim::scheme::{admissible_range, constraint_residuals, solve_constraints_newton, FreeAngle, Scheme};
use teleportsim::teleport::{run_teleport, InputQubit};

fn capable_squares() -> impl Strategy<Value = [f64; 3]> {
    (0.0f64..=0.5, 0.0f64..=0.5)
        .prop_filter("third weight in [0, 1/2]", |(x, y)| {
            let z = 1.0 - x - y;
            (0.0..=0.5).contains(&z)
        })
        .prop_map(|(x, y)| [x, y, 1.0 - x - y])
}

fn channel(w: [f64; 3]) -> SchmidtChannel<f64> {
    SchmidtChannel::new(w[0].sqrt(), w[1].sqrt(), w[2].sqrt().max(0.0)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn solved_schemes_satisfy_constraints(w in capable_squares(), s in 0.0f64..=1.0) {
        let ch = channel(w);
        let (canonical, _) = ch.canonicalize();
        let range = admissible_range(&canonical).unwrap();
        let (lo, hi) = range.tilt();
        let theta2 = (lo + (hi - lo) * s).clamp(0.0, 1.0).sqrt().asin();
        let scheme = Scheme::solve(&ch, FreeAngle::Theta2(theta2)).unwrap();
        prop_assert!(constraint_residuals(scheme.canonical_channel(), scheme.params()).max() <= 1e-10);
        prop_assert!(scheme.basis().unwrap().gram_defect() <= 1e-10);
    }

    #[test]
    fn newton_route_agrees_on_residuals(w in capable_squares(), seed in any::<u64>()) {
        let (canonical, _) = channel(w).canonicalize();
        let range = admissible_range(&canonical).unwrap();
        let theta3 = 0.5 * (range.theta3.0 + range.theta3.1);
        let sol = solve_constraints_newton(&canonical, theta3, seed, 20).unwrap();
        prop_assert!(sol.residuals.max() <= 1e-10);
    }

    #[test]
    fn probabilities_and_fidelity(w in capable_squares(), seed in any::<u64>()) {
        let ch = channel(w);
        let scheme = Scheme::solve(&ch, FreeAngle::Midpoint).unwrap();
        let (alpha, beta) = haar(&mut rng(seed));
        let report = run_teleport(&InputQubit::new(alpha, beta).unwrap(), &ch, scheme.params()).unwrap();
        let total: f64 = report.probabilities().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        prop_assert!(1.0 - report.min_fidelity <= 1e-10);
        let r = resource_report(scheme.canonical_channel(), scheme.params()).unwrap();
        prop_assert!(r.e12 >= -1e-12 && r.e12 <= 1.0 + 1e-12);
        prop_assert!(r.h12 >= 1.0 - 1e-12 && r.h12 <= 6f64.log2() + 1e-12);
    }
}

#[test]
fn sum_dips_below_linear_piece_near_maximal_entanglement() {
    let l = 3f64.log2();
    let top = 1.0 + 6f64.log2();
    let a1: f64 = (1.0 / 3.0 - 3.97e-3f64).sqrt();
    let a0 = (1.0 - 2.0 * a1 * a1).sqrt();
    let out = sweep_channel(&SchmidtChannel::new(a0, a1, a1).unwrap(), 11, 0, 0);
    for r in &out.records {
        let dip = lower_bound_sum(r.e_channel).unwrap() - r.sum;
        assert!(dip > 2.5e-6 && dip < 2.6e-6, "dip {dip}");
        assert!(l - r.e_channel < 4.7e-4);
    }
    // the slope toward the endpoint tends to 1, above the linear piece's slope
    let a1: f64 = (1.0 / 3.0 - 1e-5f64).sqrt();
    let a0 = (1.0 - 2.0 * a1 * a1).sqrt();
    let r = &sweep_channel(&SchmidtChannel::new(a0, a1, a1).unwrap(), 3, 0, 0).records[0];
    let slope = (top - r.sum) / (l - r.e_channel);
    assert!((slope - 1.0).abs() < 1e-3 && slope > bound_slope::<f64>());
}

#[test]
fn single_precision_pipeline() {
    let ch = SchmidtChannel::<f32>::new(0.5, 0.65, 0.572_276_2).unwrap();
    let scheme = Scheme::solve(&ch, FreeAngle::Midpoint).unwrap();
    let report = run_teleport(&InputQubit::<f32>::zero(), &ch, scheme.params()).unwrap();
    assert!(1.0 - report.min_fidelity < 1e-4);
    let r = resource_report(scheme.canonical_channel(), scheme.params()).unwrap();
    assert!((r.probabilities.iter().sum::<f32>() - 1.0).abs() < 1e-5);
}
