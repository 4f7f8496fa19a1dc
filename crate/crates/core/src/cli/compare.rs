//! Deviation report between two run directories.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::dynamics::TimeSeries;
use crate::error::{QlmError, Result};
use crate::observables::Estimate;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationSeries {
    pub observable: String,
    pub step: Vec<usize>,
    pub t: Vec<f64>,
    pub deviation: Vec<f64>,
    pub sigma: Vec<f64>,
    pub max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationReport {
    pub a: String,
    pub b: String,
    pub series: Vec<DeviationSeries>,
}

impl DeviationReport {
    pub fn get(&self, observable: &str) -> Option<&DeviationSeries> {
        self.series.iter().find(|s| s.observable == observable)
    }

    /// Long-format CSV `observable,step,t,deviation,sigma`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("observable,step,t,deviation,sigma\n");
        for d in &self.series {
            for i in 0..d.step.len() {
                s.push_str(&format!(
                    "{},{},{:?},{:?},{:?}\n",
                    d.observable, d.step[i], d.t[i], d.deviation[i], d.sigma[i]
                ));
            }
        }
        s
    }
}

fn load_series(dir: &Path) -> Result<TimeSeries> {
    let text = fs::read_to_string(dir.join("timeseries.json"))?;
    Ok(serde_json::from_str(&text)?)
}

type EstimateKey = (String, String);

fn load_estimates(dir: &Path) -> Result<BTreeMap<EstimateKey, Vec<(usize, f64, Estimate)>>> {
    let mut out: BTreeMap<EstimateKey, Vec<(usize, f64, Estimate)>> = BTreeMap::new();
    let Ok(text) = fs::read_to_string(dir.join("estimates.csv")) else {
        return Ok(out);
    };
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let bad = || QlmError::Compare(format!("malformed estimates row '{line}'"));
        if f.len() != 7 {
            return Err(bad());
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
        out.entry((f[2].to_string(), f[3].to_string())).or_default().push((
            f[0].parse().map_err(|_| bad())?,
            num(f[1])?,
            Estimate {
                value: num(f[4])?,
                stderr: num(f[5])?,
            },
        ));
    }
    Ok(out)
}

fn aligned(a: &[(usize, f64)], b: &[(usize, f64)], what: &str) -> Result<()> {
    if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| x.0 != y.0 || (x.1 - y.1).abs() > 1e-9) {
        return Err(QlmError::Compare(format!("time grids of {what} differ")));
    }
    Ok(())
}

/// Per-observable `|X_a − X_b|` with errors added in quadrature. Exact
/// time-series columns carry zero error; shot estimates carry their
/// standard errors.
pub fn compare(a: &Path, b: &Path) -> Result<DeviationReport> {
    let (sa, sb) = (load_series(a)?, load_series(b)?);
    let grid = |s: &TimeSeries| s.points.iter().map(|p| (p.step, p.t)).collect::<Vec<_>>();
    aligned(&grid(&sa), &grid(&sb), "time series")?;
    let mut series = Vec::new();
    let mut push = |name: String, grid: &[(usize, f64)], dev: Vec<Estimate>| {
        series.push(DeviationSeries {
            observable: name,
            step: grid.iter().map(|g| g.0).collect(),
            t: grid.iter().map(|g| g.1).collect(),
            max_deviation: dev.iter().map(|d| d.value).fold(0.0, f64::max),
            deviation: dev.iter().map(|d| d.value).collect(),
            sigma: dev.iter().map(|d| d.stderr).collect(),
        });
    };
    let g = grid(&sa);
    let column = |s: &TimeSeries, name: &str| -> Option<Vec<f64>> {
        match name {
            "norm" => Some(s.points.iter().map(|p| p.norm).collect()),
            "energy" => Some(s.points.iter().map(|p| p.energy).collect()),
            _ => s.column(name),
        }
    };
    let names = ["norm", "energy"].into_iter().map(String::from).chain(sa.columns.iter().cloned());
    for name in names {
        if let (Some(x), Some(y)) = (column(&sa, &name), column(&sb, &name)) {
            let dev = x
                .iter()
                .zip(&y)
                .map(|(p, q)| Estimate::exact(*p).deviation(&Estimate::exact(*q)))
                .collect();
            push(name, &g, dev);
        }
    }
    let (ea, eb) = (load_estimates(a)?, load_estimates(b)?);
    for (key, ra) in &ea {
        let Some(rb) = eb.get(key) else { continue };
        let ga: Vec<(usize, f64)> = ra.iter().map(|r| (r.0, r.1)).collect();
        let gb: Vec<(usize, f64)> = rb.iter().map(|r| (r.0, r.1)).collect();
        aligned(&ga, &gb, &format!("{} {}", key.0, key.1))?;
        let dev = ra.iter().zip(rb).map(|(x, y)| x.2.deviation(&y.2)).collect();
        push(format!("{}:{}", key.0, key.1), &ga, dev);
    }
    Ok(DeviationReport {
        a: a.display().to_string(),
        b: b.display().to_string(),
        series,
    })
}
