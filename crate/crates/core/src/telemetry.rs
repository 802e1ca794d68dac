//! Time-series post-processing: smoothing, speed estimates and CSV I/O.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::fmt::f9;

pub const DEFAULT_RATE_HZ: f64 = 30.0;
pub const DEFAULT_ALPHA: f64 = 0.3;

const HEADER: [&str; 2] = ["t_s", "value_cm"];

/// Position samples with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeries {
    samples: Vec<(f64, f64)>,
    pub rate: f64,
}

impl TimeSeries {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        for (i, &(t, v)) in samples.iter().enumerate() {
            if !(t.is_finite() && v.is_finite()) {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("non-finite sample ({t}, {v})"),
                });
            }
            if i > 0 && t <= samples[i - 1].0 {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("time {t} does not increase past {}", samples[i - 1].0),
                });
            }
        }
        Ok(Self {
            samples,
            rate: DEFAULT_RATE_HZ,
        })
    }

    /// Samples `f` at `rate` Hz over `[0, duration]`, endpoints included.
    pub fn sampled<F: Fn(f64) -> f64>(duration: f64, rate: f64, f: F) -> Result<Self> {
        let n = (duration * rate).round() as usize;
        let samples = (0..=n).map(|i| {
            let t = i as f64 / rate;
            (t, f(t))
        });
        let mut s = Self::new(samples.collect())?;
        s.rate = rate;
        Ok(s)
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn span(&self) -> Option<(f64, f64)> {
        Some((self.samples.first()?.0, self.samples.last()?.0))
    }

    /// Linear interpolation inside the span.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        let (lo, hi) = self.span().ok_or_else(|| Error::domain("time (s)", t, 0.0, 0.0))?;
        if !(t >= lo && t <= hi) {
            return Err(Error::domain("time (s)", t, lo, hi));
        }
        let i = self.samples.partition_point(|s| s.0 < t);
        if self.samples[i].0 == t {
            return Ok(self.samples[i].1);
        }
        let (t0, v0) = self.samples[i - 1];
        let (t1, v1) = self.samples[i];
        Ok(v0 + (v1 - v0) * (t - t0) / (t1 - t0))
    }
}

/// Single-pole recursive smoothing, `y0 = x0`.
pub fn lowpass_filter(series: &TimeSeries, alpha: f64) -> Result<TimeSeries> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::domain("filter alpha", alpha, 0.0, 1.0));
    }
    let mut out = Vec::with_capacity(series.len());
    let mut y = None;
    for &(t, x) in series.samples() {
        let next = match y {
            None => x,
            Some(_) if alpha == 1.0 => x,
            // same recurrence, written so a constant input is an exact fixed point
            Some(prev) => prev + alpha * (x - prev),
        };
        y = Some(next);
        out.push((t, next));
    }
    Ok(TimeSeries {
        samples: out,
        rate: series.rate,
    })
}

/// Endpoint secant over `[start, end]`, cm/s.
pub fn average_speed(series: &TimeSeries, start: f64, end: f64) -> Result<f64> {
    if !(end > start) {
        return Err(Error::domain("speed window length (s)", end - start, f64::MIN_POSITIVE, f64::MAX));
    }
    Ok((series.value_at(end)? - series.value_at(start)?) / (end - start))
}

pub fn write_series<W: Write>(writer: W, series: &TimeSeries) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(HEADER).map_err(io)?;
    for &(t, v) in series.samples() {
        w.write_record([f9(t), f9(v)]).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses `t_s,value_cm` CSV. Errors name the 1-based file line.
pub fn read_series<R: Read>(reader: R) -> Result<TimeSeries> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
    let mut records = r.records();
    let header = match records.next() {
        Some(rec) => rec.map_err(|e| Error::Parse { line: 1, message: e.to_string() })?,
        None => return Err(Error::Parse { line: 1, message: "missing header".into() }),
    };
    if header.iter().map(str::trim).ne(HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {}, found {}", HEADER.join(","), header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut samples: Vec<(f64, f64)> = Vec::new();
    for rec in records {
        let line = samples.len() + 2;
        let rec = rec.map_err(|e| Error::Parse { line, message: e.to_string() })?;
        if rec.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 fields, found {}", rec.len()),
            });
        }
        let cell = |i: usize| {
            rec[i].trim().parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!("{} is not a number: {:?}", HEADER[i], &rec[i]),
            })
        };
        let (t, v) = (cell(0)?, cell(1)?);
        if !(t.is_finite() && v.is_finite()) {
            return Err(Error::Parse { line, message: "non-finite value".into() });
        }
        if let Some(&(prev, _)) = samples.last() {
            if t <= prev {
                return Err(Error::Parse {
                    line,
                    message: format!("time {t} does not increase past {prev}"),
                });
            }
        }
        samples.push((t, v));
    }
    TimeSeries::new(samples)
}

pub fn save_series(path: &Path, series: &TimeSeries) -> Result<()> {
    write_series(std::fs::File::create(path)?, series)
}

pub fn load_series(path: &Path) -> Result<TimeSeries> {
    read_series(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn series(values: &[f64]) -> TimeSeries {
        TimeSeries::new(values.iter().enumerate().map(|(i, v)| (i as f64 / 30.0, *v)).collect()).unwrap()
    }

    #[test]
    fn alpha_one_is_identity() {
        let s = series(&[0.0, 3.0, -1.0, 7.5]);
        assert_eq!(lowpass_filter(&s, 1.0).unwrap(), s);
    }

    #[test]
    fn step_responses() {
        let ones = lowpass_filter(&series(&[1.0; 4]), 0.5).unwrap();
        assert!(ones.samples().iter().all(|s| s.1 == 1.0));
        let step = lowpass_filter(&series(&[0.0, 1.0, 1.0, 1.0]), 0.5).unwrap();
        let v: Vec<f64> = step.samples().iter().map(|s| s.1).collect();
        assert_eq!(v, vec![0.0, 0.5, 0.75, 0.875]);
    }

    #[test]
    fn filter_rejects_bad_alpha_and_keeps_empty() {
        assert!(lowpass_filter(&series(&[1.0]), 0.0).is_err());
        assert!(lowpass_filter(&series(&[1.0]), 1.5).is_err());
        assert!(lowpass_filter(&TimeSeries::default(), 0.3).unwrap().is_empty());
    }

    #[test]
    fn speed_examples() {
        let line = TimeSeries::sampled(60.0, 30.0, |t| 2.0 + 0.75 * t).unwrap();
        assert_abs_diff_eq!(average_speed(&line, 0.0, 60.0).unwrap(), 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(average_speed(&line, 1.01, 17.3).unwrap(), 0.75, epsilon = 1e-9);
        let flat = TimeSeries::sampled(10.0, 30.0, |_| 4.0).unwrap();
        assert_eq!(average_speed(&flat, 0.0, 10.0).unwrap(), 0.0);
        assert!(average_speed(&line, 5.0, 5.0).is_err());
        assert!(average_speed(&line, 0.0, 61.0).is_err());
    }

    #[test]
    fn sixty_seconds_at_thirty_hz() {
        let s = TimeSeries::sampled(60.0, 30.0, |t| t).unwrap();
        let mut buf = Vec::new();
        write_series(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1802);
        assert!(text.starts_with("t_s,value_cm\n0.000000000,0.000000000\n"));
    }

    #[test]
    fn parse_errors_name_lines() {
        let bad = "t_s,value_cm\n0,1\n1,2\n0.5,3\n";
        assert_eq!(
            read_series(bad.as_bytes()).unwrap_err(),
            Error::Parse { line: 4, message: "time 0.5 does not increase past 1".into() }
        );
        match read_series("t_s,value_cm\n0,1\n1,abc\n".as_bytes()) {
            Err(Error::Parse { line: 3, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(read_series("".as_bytes()), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(read_series("time,x\n0,1\n".as_bytes()), Err(Error::Parse { line: 1, .. })));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn filter_preserves_length_and_time(values in proptest::collection::vec(-1e3f64..1e3, 0..200), alpha in 0.01f64..=1.0) {
                let s = series(&values);
                let f = lowpass_filter(&s, alpha).unwrap();
                prop_assert_eq!(f.len(), s.len());
                for (a, b) in f.samples().iter().zip(s.samples()) {
                    prop_assert_eq!(a.0, b.0);
                }
            }

            #[test]
            fn constant_is_fixed_point(c in -1e3f64..1e3, n in 1usize..100, alpha in 0.01f64..=1.0) {
                let f = lowpass_filter(&series(&vec![c; n]), alpha).unwrap();
                prop_assert!(f.samples().iter().all(|s| s.1 == c));
            }

            // the start-up transient decays as (1 - alpha)^k, so the claim
            // needs a reasonably fast filter to hold to 1e-6
            #[test]
            fn filtered_ramp_keeps_slope(slope in -1.5f64..1.5, offset in -50.0f64..50.0, alpha in 0.5f64..=1.0) {
                let s = TimeSeries::sampled(60.0, 30.0, |t| offset + slope * t).unwrap();
                let f = lowpass_filter(&s, alpha).unwrap();
                let t0 = s.samples()[10].0;
                let v = average_speed(&f, t0, 60.0).unwrap();
                prop_assert!((v - slope).abs() < 1e-6, "{} vs {}", v, slope);
            }

            #[test]
            fn csv_round_trip(values in proptest::collection::vec(-1e4f64..1e4, 1..100), dt in 0.001f64..1.0) {
                let s = TimeSeries::new(values.iter().enumerate().map(|(i, v)| (i as f64 * dt, *v)).collect()).unwrap();
                let mut buf = Vec::new();
                write_series(&mut buf, &s).unwrap();
                let back = read_series(buf.as_slice()).unwrap();
                prop_assert_eq!(back.len(), s.len());
                for (a, b) in back.samples().iter().zip(s.samples()) {
                    prop_assert!((a.0 - b.0).abs() <= 1e-9 && (a.1 - b.1).abs() <= 1e-9);
                }
            }
        }
    }
}
