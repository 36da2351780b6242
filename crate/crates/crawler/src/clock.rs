use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;
use std::time::Duration as StdDuration;

use chrono::{DateTime, Duration, SubsecRound, Utc};

/// Source of time for the scheduler.
pub trait Clock: Sync {
    fn now(&self) -> DateTime<Utc>;

    /// Blocks until `deadline` or until `stop` is raised. Returns `false`
    /// when interrupted.
    fn sleep_until(&self, deadline: DateTime<Utc>, stop: &AtomicBool) -> bool;

    fn sleep(&self, duration: Duration, stop: &AtomicBool) -> bool {
        self.sleep_until(self.now() + duration, stop)
    }
}

/// Wall-clock time, truncated to whole seconds.
#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

const POLL: StdDuration = StdDuration::from_millis(200);

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now().trunc_subsecs(0)
    }

    fn sleep_until(&self, deadline: DateTime<Utc>, stop: &AtomicBool) -> bool {
        loop {
            if stop.load(Ordering::SeqCst) {
                return false;
            }
            let Ok(left) = (deadline - Utc::now()).to_std() else {
                return true;
            };
            if left.is_zero() {
                return true;
            }
            std::thread::sleep(left.min(POLL));
        }
    }
}

/// Simulated time that only moves when slept on or advanced by hand.
#[derive(Debug)]
pub struct ManualClock {
    now: Mutex<DateTime<Utc>>,
}

impl ManualClock {
    pub fn new(start: DateTime<Utc>) -> Self {
        Self {
            now: Mutex::new(start),
        }
    }

    pub fn advance(&self, by: Duration) {
        *self.now.lock().expect("clock lock") += by;
    }

    pub fn set(&self, to: DateTime<Utc>) {
        *self.now.lock().expect("clock lock") = to;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> DateTime<Utc> {
        *self.now.lock().expect("clock lock")
    }

    fn sleep_until(&self, deadline: DateTime<Utc>, stop: &AtomicBool) -> bool {
        if stop.load(Ordering::SeqCst) {
            return false;
        }
        let mut now = self.now.lock().expect("clock lock");
        if deadline > *now {
            *now = deadline;
        }
        true
    }
}
