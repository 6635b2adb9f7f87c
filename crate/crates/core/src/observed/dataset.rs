use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::selection::{Arm, TreatmentPrevalence};

/// Observed outcomes, treatment indicators and covariates, one row per unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: Vec<f64>,
    t: Vec<Arm>,
    x: Vec<Vec<f64>>,
    w: Option<Vec<bool>>,
    covariate_names: Vec<String>,
}

impl Dataset {
    /// `w` is the employment indicator of a semi-continuous outcome:
    /// `w = false` requires `y = 0` and `w = true` requires `y > 0`.
    pub fn new(
        y: Vec<f64>,
        t: Vec<Arm>,
        x: Vec<Vec<f64>>,
        w: Option<Vec<bool>>,
        covariate_names: Vec<String>,
    ) -> Result<Self> {
        let n = y.len();
        if t.len() != n || x.len() != n || w.as_ref().is_some_and(|w| w.len() != n) {
            return Err(Error::invalid("dataset columns have different lengths"));
        }
        for (i, yi) in y.iter().enumerate() {
            if !yi.is_finite() {
                return Err(Error::InvariantViolation { unit: i, message: format!("outcome {yi} is not finite") });
            }
        }
        for (i, row) in x.iter().enumerate() {
            if row.len() != covariate_names.len() {
                return Err(Error::InvariantViolation {
                    unit: i,
                    message: format!("{} covariates, expected {}", row.len(), covariate_names.len()),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvariantViolation { unit: i, message: "covariate is not finite".into() });
            }
        }
        if let Some(w) = &w {
            for (i, (&wi, &yi)) in w.iter().zip(&y).enumerate() {
                if !wi && yi != 0.0 {
                    return Err(Error::InvariantViolation { unit: i, message: format!("w = 0 but y = {yi}") });
                }
                if wi && yi <= 0.0 {
                    return Err(Error::InvariantViolation { unit: i, message: format!("w = 1 but y = {yi}") });
                }
            }
        }
        Ok(Self { y, t, x, w, covariate_names })
    }

    /// Dataset without covariates.
    pub fn bare(y: Vec<f64>, t: Vec<Arm>) -> Result<Self> {
        let n = y.len();
        Self::new(y, t, vec![Vec::new(); n], None, Vec::new())
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn t(&self) -> &[Arm] {
        &self.t
    }

    pub fn x(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn w(&self) -> Option<&[bool]> {
        self.w.as_deref()
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn n_covariates(&self) -> usize {
        self.covariate_names.len()
    }

    pub fn covariate_index(&self, name: &str) -> Result<usize> {
        self.covariate_names
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::invalid(format!("unknown covariate '{name}'")))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.x.iter().map(|row| row[j]).collect()
    }

    /// Unit indices with `T = arm`, in dataset order.
    pub fn arm_indices(&self, arm: Arm) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.t[i] == arm).collect()
    }

    pub fn arm_outcomes(&self, arm: Arm) -> Vec<f64> {
        self.arm_indices(arm).into_iter().map(|i| self.y[i]).collect()
    }

    pub fn arm_count(&self, arm: Arm) -> usize {
        self.t.iter().filter(|&&t| t == arm).count()
    }

    pub fn prevalence(&self) -> Result<TreatmentPrevalence> {
        TreatmentPrevalence::from_counts(self.arm_count(Arm::Control), self.arm_count(Arm::Treated))
    }

    /// Employment indicator, derived as `y > 0` when the column is absent.
    pub fn employment(&self) -> Vec<bool> {
        match &self.w {
            Some(w) => w.clone(),
            None => self.y.iter().map(|&y| y > 0.0).collect(),
        }
    }

    /// Rows `indices` with outcomes replaced by `y`.
    pub fn resampled(&self, indices: &[usize], y: Vec<f64>) -> Result<Self> {
        let t = indices.iter().map(|&i| self.t[i]).collect();
        let x = indices.iter().map(|&i| self.x[i].clone()).collect();
        let w = self.w.as_ref().map(|_| y.iter().map(|&v| v > 0.0).collect());
        Self::new(y, t, x, w, self.covariate_names.clone())
    }

    pub fn read_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    /// Header row required; columns `y` and `t`, optional `w`, all other
    /// columns are covariates.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let find = |name: &str| headers.iter().position(|h| h == name);
        let yi = find("y").ok_or_else(|| Error::invalid("dataset is missing column 'y'"))?;
        let ti = find("t").ok_or_else(|| Error::invalid("dataset is missing column 't'"))?;
        let wi = find("w");
        let cov: Vec<usize> = (0..headers.len()).filter(|&j| j != yi && j != ti && Some(j) != wi).collect();
        let names = cov.iter().map(|&j| headers[j].to_string()).collect();
        let (mut y, mut t, mut x, mut w) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let num = |j: usize| -> Result<f64> {
                rec[j].parse::<f64>().map_err(|_| Error::InvariantViolation {
                    unit: row,
                    message: format!("column '{}' value '{}' is not a number", &headers[j], &rec[j]),
                })
            };
            y.push(num(yi)?);
            let tv = num(ti)?;
            t.push(match tv {
                0.0 => Arm::Control,
                1.0 => Arm::Treated,
                _ => return Err(Error::InvariantViolation { unit: row, message: format!("t = {tv} is not 0 or 1") }),
            });
            if let Some(wi) = wi {
                let wv = num(wi)?;
                if wv != 0.0 && wv != 1.0 {
                    return Err(Error::InvariantViolation { unit: row, message: format!("w = {wv} is not 0 or 1") });
                }
                w.push(wv == 1.0);
            }
            x.push(cov.iter().map(|&j| num(j)).collect::<Result<Vec<f64>>>()?);
        }
        Self::new(y, t, x, wi.map(|_| w), names)
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["y".to_string(), "t".to_string()];
        if self.w.is_some() {
            header.push("w".into());
        }
        header.extend(self.covariate_names.iter().cloned());
        wtr.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec = vec![self.y[i].to_string(), self.t[i].index().to_string()];
            if let Some(w) = &self.w {
                rec.push(if w[i] { "1" } else { "0" }.into());
            }
            rec.extend(self.x[i].iter().map(|v| v.to_string()));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}
