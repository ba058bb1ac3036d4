//! CSV writers. Floats use 17 significant digits so reruns are byte-identical.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use phasecov::conditions::{Condition, CurvePoint, RegionCell};
use phasecov::evolution::{CpReport, Trajectory};
use phasecov::indicators::IndicatorSeries;

use crate::CliError;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

pub struct Table {
    path: PathBuf,
    inner: csv::Writer<BufWriter<File>>,
}

impl Table {
    pub fn create(path: PathBuf, header: &[String]) -> Result<Self, CliError> {
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let inner = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(BufWriter::new(file));
        let mut t = Self { path, inner };
        t.row(header)?;
        Ok(t)
    }

    pub fn row<S: AsRef<[u8]>>(&mut self, fields: &[S]) -> Result<(), CliError> {
        self.inner
            .write_record(fields)
            .map_err(|e| CliError::Io(format!("{}: {e}", self.path.display())))
    }

    pub fn finish(mut self) -> Result<PathBuf, CliError> {
        self.inner
            .flush()
            .map_err(|e| CliError::io(&self.path, e))?;
        Ok(self.path)
    }
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

pub fn write_trajectory(
    path: PathBuf,
    traj: &Trajectory,
    choi: &[CpReport],
) -> Result<PathBuf, CliError> {
    let mut t = Table::create(
        path,
        &header(&[
            "t",
            "p1",
            "re_alpha",
            "im_alpha",
            "gamma1",
            "gamma2",
            "gamma3",
            "omega",
            "Gamma",
            "GammaTilde",
            "G",
            "Omega",
            "choi_min_eig",
        ]),
    )?;
    for (k, cp) in choi.iter().enumerate().take(traj.len()) {
        let (s, r, kn) = (&traj.states[k], &traj.rates[k], &traj.kernels[k]);
        t.row(&[
            num(traj.times[k]),
            num(s.p1()),
            num(s.alpha().re),
            num(s.alpha().im),
            num(r.gamma1),
            num(r.gamma2),
            num(r.gamma3),
            num(r.omega),
            num(kn.gamma),
            num(kn.gamma_tilde),
            num(kn.g),
            num(kn.omega),
            num(cp.min_eigenvalue),
        ])?;
    }
    t.finish()
}

pub fn write_indicator(dir: &Path, s: &IndicatorSeries) -> Result<PathBuf, CliError> {
    let col = s.column();
    let mut t = Table::create(
        dir.join(format!("indicator_{col}.csv")),
        &[
            String::from("t"),
            col.clone(),
            "d_dt".into(),
            "detected".into(),
        ],
    )?;
    for k in 0..s.len() {
        t.row(&[
            num(s.times[k]),
            num(s.values[k]),
            num(s.derivative[k]),
            flag(s.detection[k]).to_string(),
        ])?;
    }
    t.finish()
}

/// All series side by side: `t`, then `<col>, <col>_d_dt, <col>_detected` per series.
pub fn write_indicators_wide(
    path: PathBuf,
    series: &[IndicatorSeries],
) -> Result<PathBuf, CliError> {
    let mut head = vec![String::from("t")];
    for s in series {
        let c = s.column();
        head.push(c.clone());
        head.push(format!("{c}_d_dt"));
        head.push(format!("{c}_detected"));
    }
    let mut t = Table::create(path, &head)?;
    let n = series.first().map_or(0, |s| s.len());
    for k in 0..n {
        let mut row = vec![num(series[0].times[k])];
        for s in series {
            row.push(num(s.values[k]));
            row.push(num(s.derivative[k]));
            row.push(flag(s.detection[k]).to_string());
        }
        t.row(&row)?;
    }
    t.finish()
}

fn condition_columns() -> impl Iterator<Item = String> {
    Condition::ALL
        .into_iter()
        .map(|c| format!("cond_{}", c.name()))
}

fn cell_fields(row: &mut Vec<String>, c: &RegionCell) {
    row.push(num(c.gamma_prime));
    row.push(num(c.gamma3));
    row.extend(Condition::ALL.iter().map(|k| flag(c.get(*k)).to_string()));
}

pub fn write_regions(path: PathBuf, cells: &[RegionCell]) -> Result<PathBuf, CliError> {
    let mut head = header(&["gamma_prime", "gamma3"]);
    head.extend(condition_columns());
    let mut t = Table::create(path, &head)?;
    for c in cells {
        let mut row = Vec::with_capacity(14);
        cell_fields(&mut row, c);
        t.row(&row)?;
    }
    t.finish()
}

pub fn write_curve(path: PathBuf, curve: &[CurvePoint]) -> Result<PathBuf, CliError> {
    let mut head = header(&["t", "gamma_prime", "gamma3"]);
    head.extend(condition_columns());
    let mut t = Table::create(path, &head)?;
    for p in curve {
        let mut row = vec![num(p.t)];
        cell_fields(&mut row, &p.cell);
        t.row(&row)?;
    }
    t.finish()
}

pub fn write_cp(path: PathBuf, reports: &[CpReport]) -> Result<PathBuf, CliError> {
    let mut t = Table::create(path, &header(&["t", "choi_min_eig", "pass"]))?;
    for r in reports {
        t.row(&[num(r.t), num(r.min_eigenvalue), flag(r.passed).to_string()])?;
    }
    t.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(-2.0), "-2.0000000000000000e0");
        assert_eq!(num(0.0), "0.0000000000000000e0");
    }
}
