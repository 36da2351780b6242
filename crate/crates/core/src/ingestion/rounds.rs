//! Assignment of raw timestamps to scheduled collection rounds.

use chrono::{DateTime, Duration, NaiveTime, TimeZone, Utc};
use chrono_tz::Tz;

/// Local anchor times of the collection rounds.
///
/// Every timestamp goes to the nearest anchor instant in `timezone`. With a
/// tolerance set, timestamps farther than that from every anchor are left
/// unassigned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinningPolicy {
    pub anchors: Vec<NaiveTime>,
    pub timezone: Tz,
    pub tolerance: Option<Duration>,
}

fn hm(h: u32, m: u32) -> NaiveTime {
    NaiveTime::from_hms_opt(h, m, 0).expect("valid anchor time")
}

impl BinningPolicy {
    /// Two rounds a day, 05:00 and 17:00 in Berlin local time.
    pub fn twice_daily() -> Self {
        Self {
            anchors: vec![hm(5, 0), hm(17, 0)],
            timezone: chrono_tz::Europe::Berlin,
            tolerance: None,
        }
    }

    /// Six rounds a day, every four hours from midnight Berlin time.
    pub fn six_daily() -> Self {
        Self {
            anchors: (0..6).map(|i| hm(4 * i, 0)).collect(),
            timezone: chrono_tz::Europe::Berlin,
            tolerance: None,
        }
    }

    pub fn with_tolerance(mut self, tolerance: Duration) -> Self {
        self.tolerance = Some(tolerance);
        self
    }

    pub fn with_timezone(mut self, timezone: Tz) -> Self {
        self.timezone = timezone;
        self
    }

    /// The round a single timestamp belongs to, identified by its anchor instant.
    pub fn round_of(&self, ts: DateTime<Utc>) -> Option<DateTime<Utc>> {
        let local_date = ts.with_timezone(&self.timezone).date_naive();
        let mut best: Option<(Duration, DateTime<Utc>)> = None;
        for day_offset in -1..=1 {
            let date = local_date + Duration::days(day_offset);
            for anchor in &self.anchors {
                // An anchor falling into a DST gap has no instant that day.
                let Some(instant) = self
                    .timezone
                    .from_local_datetime(&date.and_time(*anchor))
                    .earliest()
                else {
                    continue;
                };
                let instant = instant.with_timezone(&Utc);
                let distance = (ts - instant).abs();
                let closer = match best {
                    None => true,
                    Some((d, at)) => distance < d || (distance == d && instant < at),
                };
                if closer {
                    best = Some((distance, instant));
                }
            }
        }
        let (distance, anchor) = best?;
        match self.tolerance {
            Some(tol) if distance > tol => None,
            _ => Some(anchor),
        }
    }
}

/// Round assignment for each timestamp, in input order.
pub fn bin_rounds(
    timestamps: &[DateTime<Utc>],
    policy: &BinningPolicy,
) -> Vec<Option<DateTime<Utc>>> {
    timestamps.iter().map(|ts| policy.round_of(*ts)).collect()
}
