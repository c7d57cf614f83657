use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

/// `start:stop:step` grid running from `start` in whole steps. The last
/// point may pass `stop` by less than half a step.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 0.5 - 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, stop, step] = parts.as_slice() else {
            return Err(format!("expected start:stop:step, got `{s}`"));
        };
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("`{t}` is not a finite number"))
        };
        let grid = Grid {
            start: num(start)?,
            stop: num(stop)?,
            step: num(step)?,
        };
        if !(grid.step > 0.0) {
            return Err("grid step must be positive".into());
        }
        if grid.stop < grid.start {
            return Err("grid stop lies below its start".into());
        }
        if (grid.stop - grid.start) / grid.step > 1e6 {
            return Err("grid has more than a million points".into());
        }
        Ok(grid)
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

impl Serialize for Grid {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inclusive_endpoints() {
        let g: Grid = "5:12:0.1".parse().unwrap();
        let v = g.values();
        assert_eq!(v.len(), 71);
        assert!((v[70] - 12.0).abs() < 1e-12);
        assert_eq!("1:2:0.4".parse::<Grid>().unwrap().values().len(), 3);
        assert_eq!("1:2.3:0.4".parse::<Grid>().unwrap().values().len(), 4);
        assert_eq!("3:3:1".parse::<Grid>().unwrap().values(), vec![3.0]);
    }

    #[test]
    fn rejects_bad_grids() {
        for bad in ["1:2", "1:2:0", "2:1:0.1", "a:2:1", "1:2:-1", "0:1e9:1e-3"] {
            assert!(bad.parse::<Grid>().is_err(), "{bad}");
        }
    }
}
