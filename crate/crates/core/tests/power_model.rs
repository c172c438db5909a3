use mimo_ee::power::{total_power, PaMaxOutput, PaModel};
use mimo_ee::{PaKind, SimConfig};
use proptest::prelude::*;

fn pa(kind: PaKind, max_output: PaMaxOutput) -> PaModel {
    PaModel { kind, max_efficiency: 0.8, epsilon: 0.0082, papr_backoff_db: 8.0, max_output }
}

proptest! {
    #[test]
    fn total_power_is_affine_in_antennas(n in 0u32..=120, m in 1u32..400, rate in 0.0f64..2e8, p in 1e-3f64..1.0) {
        let params = SimConfig::default().system_params(PaKind::EtPa, 120, p);
        let t = |m: u32| total_power(f64::from(m), n.max(1), rate, &params, true).unwrap().total;
        let d1 = t(m + 1) - t(m);
        let d2 = t(m + 2) - t(m + 1);
        prop_assert!((d1 - d2).abs() <= 1e-12 * d1.abs().max(t(m).abs()));
        let b = total_power(f64::from(m), n.max(1), rate, &params, true).unwrap();
        prop_assert!(b.c0 >= 0.0 && b.c1 >= 0.0 && b.rate_coding_term >= 0.0);
        prop_assert!((b.total - (b.c0 + b.c1 * f64::from(m) + b.rate_coding_term)).abs() <= 1e-12 * b.total);
    }

    #[test]
    fn etpa_never_draws_more_than_tpa(p_max in 0.05f64..10.0, frac in 0.0f64..=1.0) {
        let fixed = PaMaxOutput::Fixed(p_max);
        let limit = pa(PaKind::Tpa, fixed).backoff_limit(0.0);
        let p = frac * limit;
        let tpa = pa(PaKind::Tpa, fixed).input_power(p).unwrap();
        let et = pa(PaKind::EtPa, fixed).input_power(p).unwrap();
        // Below the limit the ET-PA line lies under the square-root TPA law except near p = 0.
        if frac > 0.01 {
            prop_assert!(et <= tpa, "p={p} et={et} tpa={tpa}");
        }
    }

    #[test]
    fn pa_laws_nonnegative_and_monotone(p in 0.0f64..2.0, dp in 1e-4f64..0.5) {
        for kind in [PaKind::Tpa, PaKind::EtPa] {
            let m = pa(kind, PaMaxOutput::TiedToOperatingPower);
            let a = m.input_power(p).unwrap();
            let b = m.input_power(p + dp).unwrap();
            prop_assert!(a >= 0.0 && b > a);
            let f = pa(kind, PaMaxOutput::Fixed(20.0));
            let a = f.input_power(p).unwrap();
            let b = f.input_power(p + dp).unwrap();
            prop_assert!(a >= 0.0 && b > a);
        }
    }
}

#[test]
fn etpa_floor_crossing_is_tiny() {
    // With a fixed maximum the ET-PA floor exceeds the TPA draw only very close to p = 0.
    let fixed = PaMaxOutput::Fixed(1.0);
    let tpa = pa(PaKind::Tpa, fixed);
    let et = pa(PaKind::EtPa, fixed);
    let limit = tpa.backoff_limit(0.0);
    let crossing = (1..=100_000)
        .map(|i| limit * f64::from(i) / 100_000.0)
        .find(|&p| et.input_power(p).unwrap() <= tpa.input_power(p).unwrap())
        .unwrap();
    assert!(crossing / limit < 0.01, "crossing at {crossing}");
}
