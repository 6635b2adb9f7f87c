//! Rectangular sensitivity grids and ignorance tables.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use super::{CompleteDataModel, Estimand, EstimandResult};
use crate::error::{Error, Result};
use crate::observed::ObservedFit;
use crate::selection::{LatentClassSelection, LogisticSelection, Omega, SelectionSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Gamma0,
    Gamma1,
    Omega0,
    Omega1,
}

impl Axis {
    pub const ALL: [Axis; 4] = [Axis::Gamma0, Axis::Gamma1, Axis::Omega0, Axis::Omega1];

    pub fn column(self) -> &'static str {
        match self {
            Axis::Gamma0 => "gamma0",
            Axis::Gamma1 => "gamma1",
            Axis::Omega0 => "omega0",
            Axis::Omega1 => "omega1",
        }
    }

    fn is_gamma(self) -> bool {
        matches!(self, Axis::Gamma0 | Axis::Gamma1)
    }
}

impl FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "g0" | "gamma0" => Ok(Axis::Gamma0),
            "g1" | "gamma1" => Ok(Axis::Gamma1),
            "o0" | "omega0" => Ok(Axis::Omega0),
            "o1" | "omega1" => Ok(Axis::Omega1),
            other => Err(Error::invalid(format!("unknown grid axis '{other}' (expected g0, g1, o0 or o1)"))),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub axis: Axis,
    pub values: Vec<f64>,
}

impl GridAxis {
    /// `count` evenly spaced values from `start` to `stop` inclusive.
    pub fn linspace(axis: Axis, start: f64, stop: f64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::invalid(format!("axis {axis} needs at least one value")));
        }
        if count > 1 && !(start.is_finite() && stop.is_finite()) {
            return Err(Error::invalid(format!("axis {axis}: a range needs finite endpoints")));
        }
        let values = if count == 1 {
            vec![start]
        } else {
            let last = (count - 1) as f64;
            (0..count)
                .map(|i| {
                    let f = i as f64 / last;
                    start * (1.0 - f) + stop * f
                })
                .collect()
        };
        Ok(Self { axis, values })
    }
}

/// Cartesian product of axes. Axes absent from the grid stay at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub axes: Vec<GridAxis>,
}

fn parse_value(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        t => t.parse::<f64>().map_err(|_| Error::invalid(format!("'{t}' is not a number"))),
    }
}

impl FromStr for Grid {
    type Err = Error;

    /// `"g0=-0.05:0.05:11;g1=-0.05:0.05:11"`; a bare value is a single point.
    fn from_str(s: &str) -> Result<Self> {
        let mut axes: Vec<GridAxis> = Vec::new();
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, spec) = part.split_once('=').ok_or_else(|| {
                Error::invalid(format!("grid term '{part}' is not of the form name=start:stop:count"))
            })?;
            let axis: Axis = name.parse()?;
            if axes.iter().any(|a| a.axis == axis) {
                return Err(Error::invalid(format!("axis {axis} given twice")));
            }
            let fields: Vec<&str> = spec.split(':').collect();
            let ga = match fields.as_slice() {
                [v] => GridAxis { axis, values: vec![parse_value(v)?] },
                [a, b, n] => {
                    let n: usize =
                        n.trim().parse().map_err(|_| Error::invalid(format!("axis {axis}: bad count '{n}'")))?;
                    GridAxis::linspace(axis, parse_value(a)?, parse_value(b)?, n)?
                }
                _ => return Err(Error::invalid(format!("axis {axis}: expected start:stop:count or a single value"))),
            };
            if ga.axis.is_gamma() && ga.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("axis {axis} must be finite")));
            }
            if ga.values.iter().any(|v| v.is_nan()) {
                return Err(Error::invalid(format!("axis {axis} contains NaN")));
            }
            axes.push(ga);
        }
        if axes.is_empty() {
            return Err(Error::invalid("empty grid"));
        }
        Ok(Grid { axes })
    }
}

/// A single sensitivity point, e.g. `"g0=0.03,g1=0.05"`; `;` also separates.
pub fn parse_point(s: &str) -> Result<Vec<(Axis, f64)>> {
    let grid: Grid = s.replace(',', ";").parse()?;
    grid.axes
        .iter()
        .map(|a| match a.values.as_slice() {
            [v] => Ok((a.axis, *v)),
            _ => Err(Error::invalid(format!("axis {} must be a single value", a.axis))),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionFamily {
    Logistic,
    LatentClass,
}

impl FromStr for SelectionFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(SelectionFamily::Logistic),
            "latent-class" => Ok(SelectionFamily::LatentClass),
            _ => Err(Error::invalid(format!("unknown selection '{s}' (expected logistic or latent-class)"))),
        }
    }
}

impl Grid {
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Columns written for this grid under `family`, in fixed order.
    pub fn columns(&self, family: SelectionFamily) -> Vec<Axis> {
        Axis::ALL
            .into_iter()
            .filter(|ax| match family {
                SelectionFamily::Logistic => ax.is_gamma() || self.axes.iter().any(|a| a.axis == *ax),
                SelectionFamily::LatentClass => !ax.is_gamma(),
            })
            .collect()
    }

    fn value(&self, ax: Axis, coords: &[usize]) -> f64 {
        self.axes.iter().zip(coords).find(|(a, _)| a.axis == ax).map(|(a, &i)| a.values[i]).unwrap_or(0.0)
    }

    /// Cells in row-major order (last axis fastest).
    pub fn cells(&self, family: SelectionFamily) -> Result<Vec<(Vec<f64>, SelectionSpec)>> {
        if family == SelectionFamily::LatentClass {
            if let Some(a) = self.axes.iter().find(|a| a.axis.is_gamma()) {
                return Err(Error::invalid(format!("axis {} does not apply to latent-class selection", a.axis)));
            }
        }
        let columns = self.columns(family);
        let mut coords = vec![0usize; self.axes.len()];
        let mut out = Vec::with_capacity(self.len());
        loop {
            let at = |ax| self.value(ax, &coords);
            let spec = match family {
                SelectionFamily::Logistic => {
                    if [at(Axis::Omega0), at(Axis::Omega1)].iter().any(|w| !w.is_finite()) {
                        return Err(Error::invalid("infinite atom shifts are not supported for logistic selection"));
                    }
                    SelectionSpec::Logistic(
                        LogisticSelection::linear(at(Axis::Gamma0), at(Axis::Gamma1))
                            .with_zero_shift(at(Axis::Omega0), at(Axis::Omega1)),
                    )
                }
                SelectionFamily::LatentClass => SelectionSpec::LatentClass(LatentClassSelection::new(
                    Omega::from_f64(at(Axis::Omega0))?,
                    Omega::from_f64(at(Axis::Omega1))?,
                )),
            };
            out.push((columns.iter().map(|&c| at(c)).collect(), spec));
            let mut d = self.axes.len();
            loop {
                if d == 0 {
                    return Ok(out);
                }
                d -= 1;
                coords[d] += 1;
                if coords[d] < self.axes[d].values.len() {
                    break;
                }
                coords[d] = 0;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub coords: Vec<f64>,
    pub estimand: Estimand,
    /// `None` when the cell is not proper.
    pub result: Option<EstimandResult>,
    pub na_flag: Option<&'static str>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IgnoranceTable {
    pub family: SelectionFamily,
    pub columns: Vec<Axis>,
    pub rows: Vec<TableRow>,
}

/// Evaluates every estimand at every grid cell with `workers` threads.
/// Results do not depend on the worker count.
pub fn sweep(
    fit: &ObservedFit,
    family: SelectionFamily,
    grid: &Grid,
    estimands: &[Estimand],
    level: f64,
    workers: usize,
) -> Result<IgnoranceTable> {
    let cells = grid.cells(family)?;
    let jobs: Vec<(usize, Estimand)> = (0..cells.len()).flat_map(|c| estimands.iter().map(move |&e| (c, e))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    let rows = pool.install(|| {
        jobs.par_iter()
            .map(|&(c, estimand)| {
                let (coords, spec) = &cells[c];
                let result = CompleteDataModel::new(fit, *spec).evaluate(estimand, level);
                let (result, na_flag) = match result {
                    Ok(r) => (Some(r), None),
                    Err(Error::ProprietyViolation(_)) => (None, Some("PROPRIETY_VIOLATION")),
                    Err(e) => return Err(e),
                };
                Ok(TableRow { coords: coords.clone(), estimand, result, na_flag })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(IgnoranceTable { family, columns: grid.columns(family), rows })
}

fn fmt_coord(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v}")
    }
}

impl IgnoranceTable {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<&str> = self.columns.iter().map(|c| c.column()).collect();
        header.extend(["estimand", "q", "estimate", "lo", "hi", "significant", "na_flag"]);
        out.write_record(&header)?;
        for row in &self.rows {
            let mut rec: Vec<String> = row.coords.iter().map(|&v| fmt_coord(v)).collect();
            rec.push(row.estimand.name().into());
            rec.push(row.estimand.q().map(|q| q.to_string()).unwrap_or_default());
            match &row.result {
                Some(r) => {
                    rec.extend([r.estimate, r.lo, r.hi].map(|v| v.to_string()));
                    rec.push(r.significant().to_string());
                }
                None => rec.extend(["", "", "", ""].map(String::from)),
            }
            rec.push(row.na_flag.unwrap_or("").into());
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::invalid(e.to_string()))
    }

    /// Row for a cell and estimand, if present.
    pub fn find(&self, coords: &[f64], estimand: Estimand) -> Option<&TableRow> {
        self.rows.iter().find(|r| r.coords == coords && r.estimand == estimand)
    }
}
