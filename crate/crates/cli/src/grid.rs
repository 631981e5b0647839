use std::str::FromStr;

/// `start:stop:steps`, inclusive of both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, stop, steps] = parts[..] else {
            return Err(format!("expected start:stop:steps, got {s:?}"));
        };
        let num = |v: &str, what: &str| {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("{what} {v:?} is not a finite number"))
        };
        let start = num(start, "start")?;
        let stop = num(stop, "stop")?;
        let steps = steps
            .trim()
            .parse::<usize>()
            .map_err(|_| format!("steps {steps:?} is not a positive integer"))?;
        if steps < 2 {
            return Err("steps must be at least 2".into());
        }
        if !(stop > start) {
            return Err(format!("grid must increase, got {start} to {stop}"));
        }
        Ok(GridSpec { start, stop, steps })
    }
}

impl GridSpec {
    /// Grid points, linearly or logarithmically spaced.
    pub fn points(&self, log: bool) -> Result<Vec<f64>, String> {
        let last = (self.steps - 1) as f64;
        if log {
            if self.start <= 0.0 {
                return Err(format!("a log grid needs a positive start, got {}", self.start));
            }
            let (a, b) = (self.start.ln(), self.stop.ln());
            Ok((0..self.steps)
                .map(|i| match i {
                    0 => self.start,
                    i if i == self.steps - 1 => self.stop,
                    i => (a + (b - a) * i as f64 / last).exp(),
                })
                .collect())
        } else {
            Ok((0..self.steps)
                .map(|i| match i {
                    i if i == self.steps - 1 => self.stop,
                    i => self.start + (self.stop - self.start) * i as f64 / last,
                })
                .collect())
        }
    }
}
