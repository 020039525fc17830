use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use indexmap::IndexMap;

use super::TimeSeriesLog;
use crate::error::{Error, Result};
use crate::model::{Control, State};

/// Allowed deviation of any sample interval from the nominal one.
const DT_TOLERANCE: f64 = 0.01;

/// Reads a CSV log whose header names channels after the model symbols.
///
/// The sample rate comes from the `t` column when present, otherwise from
/// `declared_rate_hz`. State columns present in the file form the mask.
pub fn load_log<R: Read>(source: R, declared_rate_hz: Option<f64>) -> Result<TimeSeriesLog> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut seen = BTreeSet::new();
    for name in &header {
        let known = name == "t" || State::from_name(name).is_some() || Control::from_name(name).is_some();
        if !known {
            return Err(Error::Parse {
                line: 1,
                message: format!("unknown column `{name}`"),
            });
        }
        if !seen.insert(name.as_str()) {
            return Err(Error::Parse {
                line: 1,
                message: format!("duplicate column `{name}`"),
            });
        }
    }
    let t_col = header.iter().position(|h| h == "t");

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        for (i, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                message: format!("column `{}`: `{field}` is not a number", header[i]),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("column `{}`: non-finite value `{field}`", header[i]),
                });
            }
            columns[i].push(value);
        }
    }

    let n = columns.first().map_or(0, Vec::len);
    if n < 2 {
        return Err(Error::Parse {
            line: 1,
            message: format!("a log needs at least 2 samples, found {n}"),
        });
    }

    let (rate, start) = match t_col {
        Some(i) => {
            let t = &columns[i];
            let nominal = (t[n - 1] - t[0]) / (n - 1) as f64;
            if !(nominal > 0.0) {
                return Err(Error::Parse {
                    line: 2,
                    message: "time column is not increasing".into(),
                });
            }
            // header is line 1, sample k sits on line k + 2
            for k in 1..n {
                if t[k] <= t[k - 1] {
                    return Err(Error::Parse {
                        line: k as u64 + 2,
                        message: format!("time is not monotone ({} after {})", t[k], t[k - 1]),
                    });
                }
            }
            for k in 1..n {
                let step = t[k] - t[k - 1];
                let line = k as u64 + 2;
                if ((step - nominal) / nominal).abs() > DT_TOLERANCE {
                    return Err(Error::Parse {
                        line,
                        message: format!("irregular sample interval {step} (nominal {nominal})"),
                    });
                }
            }
            (1.0 / nominal, t[0])
        }
        None => match declared_rate_hz {
            Some(r) => (r, 0.0),
            None => {
                return Err(Error::Parse {
                    line: 1,
                    message: "no `t` column and no declared sample rate".into(),
                })
            }
        },
    };

    let mut channels = IndexMap::new();
    let mut mask = BTreeSet::new();
    for (name, col) in header.into_iter().zip(columns) {
        if name == "t" {
            continue;
        }
        if State::from_name(&name).is_some() {
            mask.insert(name.clone());
        }
        channels.insert(name, col);
    }
    TimeSeriesLog::new(rate, start, channels, mask)
}

pub fn load_log_path(path: &Path, declared_rate_hz: Option<f64>) -> Result<TimeSeriesLog> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    load_log(BufReader::new(file), declared_rate_hz)
}

/// Writes `t` followed by every channel in log order.
///
/// Values use the shortest representation that parses back to the same
/// `f64`, so a save/load cycle preserves channel data bit for bit.
pub fn save_log<W: Write>(log: &TimeSeriesLog, sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    let mut header = vec!["t".to_string()];
    header.extend(log.channels().keys().cloned());
    writer.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for k in 0..log.len() {
        row.clear();
        row.push(log.time(k).to_string());
        row.extend(log.channels().values().map(|c| c[k].to_string()));
        writer.write_record(&row)?;
    }
    writer.flush().map_err(|e| Error::io("<csv sink>", e))?;
    Ok(())
}

pub fn save_log_path(log: &TimeSeriesLog, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut sink = BufWriter::new(file);
    save_log(log, &mut sink)?;
    sink.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(text: &str) -> Result<TimeSeriesLog> {
        load_log(text.as_bytes(), None)
    }

    #[test]
    fn minimal_parse() {
        let log = parse("t,p,q\n0.00,1,2\n0.01,3,4\n0.02,5,6\n").unwrap();
        assert_eq!(log.len(), 3);
        let mask: Vec<_> = log.mask().iter().cloned().collect();
        assert_eq!(mask, vec!["p", "q"]);
        assert!((log.sample_rate_hz() - 100.0).abs() < 1e-9);
        assert_eq!(log.channel("q").unwrap(), &[2.0, 4.0, 6.0]);
    }

    #[test]
    fn controls_are_not_masked() {
        let log = parse("t,p,delta_lat\n0,1,0.1\n0.01,2,0.1\n").unwrap();
        assert!(log.mask().contains("p"));
        assert!(!log.mask().contains("delta_lat"));
    }

    #[test]
    fn declared_rate_without_time() {
        let log = load_log("p,q\n1,2\n3,4\n".as_bytes(), Some(50.0)).unwrap();
        assert_eq!(log.sample_rate_hz(), 50.0);
        assert!(parse("p,q\n1,2\n3,4\n").is_err());
    }

    #[test]
    fn nan_cell_names_row_and_column() {
        let err = parse("t,p,q\n0,1,2\n0.01,NaN,4\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");
        assert!(msg.contains("`p`"), "{msg}");
    }

    #[test]
    fn rejects_garbage() {
        let cases = [
            ("t,p\n0,1\n0.01,x\n", "not a number"),
            ("t,p\n0,1\n0.01,2,3\n", "expected 2 fields"),
            ("t,p\n0,1\n0.01,2\n0.005,3\n", "not monotone"),
            ("t,p\n0,1\n0.01,2\n0.03,3\n0.04,4\n", "irregular"),
            ("t,zeta\n0,1\n0.01,2\n", "unknown column"),
            ("t,p,p\n0,1,1\n0.01,2,2\n", "duplicate"),
            ("t,p\n0,1\n", "at least 2"),
        ];
        for (text, needle) in cases {
            let msg = parse(text).unwrap_err().to_string();
            assert!(msg.contains(needle), "{text:?} -> {msg}");
        }
    }

    #[test]
    fn small_jitter_is_accepted() {
        assert!(parse("t,p\n0,1\n0.01,2\n0.02005,3\n0.03,4\n").is_ok());
    }

    proptest! {
        #[test]
        fn save_then_load_is_bit_exact(
            values in prop::collection::vec((-1e6f64..1e6, -1e-3f64..1e-3), 2..60),
            rate in prop::sample::select(vec![50.0, 100.0, 200.0]),
        ) {
            let p: Vec<f64> = values.iter().map(|v| v.0).collect();
            let lat: Vec<f64> = values.iter().map(|v| v.1).collect();
            let log = TimeSeriesLog::from_series(rate, 0.0, &[(State::P, p)], &[(Control::Lat, lat)]).unwrap();
            let mut buf = Vec::new();
            save_log(&log, &mut buf).unwrap();
            let back = load_log(buf.as_slice(), None).unwrap();
            prop_assert_eq!(back.channels(), log.channels());
            prop_assert_eq!(back.mask(), log.mask());
            prop_assert!((back.sample_rate_hz() - rate).abs() < 1e-9 * rate);
        }
    }
}
