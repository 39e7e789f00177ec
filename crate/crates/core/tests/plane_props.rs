use chrono::{Duration, NaiveDate};
use proptest::prelude::*;
use skplane::ingest::{RawPanel, WeekId, Window};
use skplane::moments::{default_covid_cutoff, weekly_moments};
use skplane::plane::{
    cristelli_power_law, export_heatmap, export_plane, klaassen_lower_bound, pearson_lower_bound,
    PlaneOptions,
};

fn raw_panel(windows: Vec<Vec<f64>>) -> RawPanel {
    let start = NaiveDate::from_ymd_opt(2019, 9, 2).unwrap();
    RawPanel {
        windows: windows
            .into_iter()
            .enumerate()
            .map(|(i, returns)| {
                let week_start = start + Duration::weeks((i / 3) as i64);
                Window {
                    symbol: format!("S{}", i % 3),
                    week: WeekId::of(week_start),
                    week_start,
                    returns,
                }
            })
            .collect(),
    }
}

proptest! {
    #[test]
    fn klaassen_gap_is_constant(s in -5.0f64..5.0) {
        let gap = klaassen_lower_bound(s) - pearson_lower_bound(s);
        prop_assert!((gap - 0.488).abs() <= 1e-12);
    }

    #[test]
    fn power_law_monotone(s1 in 0.0f64..3.0, ds in 1e-6f64..1.0, n in 1u32..50, dn in 1u32..50, neg in any::<bool>()) {
        let sign = if neg { -1.0 } else { 1.0 };
        prop_assert!(cristelli_power_law(sign * (s1 + ds), n) > cristelli_power_law(sign * s1, n));
        if s1 > 0.0 {
            prop_assert!(cristelli_power_law(sign * s1, n + dn) > cristelli_power_law(sign * s1, n));
        }
    }

    #[test]
    fn computed_records_respect_pearson_and_exports_conserve_rows(
        windows in prop::collection::vec(prop::collection::vec(-0.5f64..0.5, 5..=7), 1..40)
    ) {
        let (panel, _) = weekly_moments(&raw_panel(windows), default_covid_cutoff());
        prop_assume!(!panel.is_empty());
        let data = export_plane(&panel, &PlaneOptions::default()).unwrap();
        prop_assert!(data.points.iter().all(|p| p.satisfies_pearson));
        prop_assert_eq!(data.points.len(), panel.len());
        prop_assert_eq!(data.pre.len() + data.post.len(), panel.len());
        let heat = export_heatmap(&panel).unwrap();
        prop_assert_eq!(heat.len(), panel.len());
        let first = panel.records.iter().map(|r| r.week_start).min().unwrap();
        let last = panel.records.iter().map(|r| r.week_start).max().unwrap();
        prop_assert_eq!(heat.last().unwrap().week_index, (last - first).num_days() / 7);
    }
}
