//! JSON configuration and CSV/JSON data files.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::ForwardSolution;
use crate::model::{grid_node, BvpConfig, Potential, SpectralInput, Spectrum, SplitPoint};
use crate::stability::StabilityReport;

type C = Complex64;

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum SplitPointFile {
    PiRational([u64; 2]),
    Real(f64),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    a: SplitPointFile,
    alpha: u8,
    beta: u8,
    #[serde(rename = "N", default = "default_n")]
    n: usize,
    #[serde(rename = "M", default = "default_m")]
    m: usize,
}

fn default_n() -> usize {
    200
}

fn default_m() -> usize {
    2000
}

/// A problem configuration together with its truncation order and grid size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub bvp: BvpConfig,
    pub n_max: usize,
    /// Grid size after snapping `a` to a node.
    pub m: usize,
}

impl RunConfig {
    pub fn new(bvp: BvpConfig, n_max: usize, m: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::input("N", "must be positive"));
        }
        if m < 2 {
            return Err(Error::input("M", "must be at least 2"));
        }
        Ok(RunConfig {
            bvp,
            n_max,
            m: bvp.snapped_grid_size(m),
        })
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let file: ConfigFile = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let a = match file.a {
        SplitPointFile::PiRational([p, q]) => SplitPoint::pi_rational(p, q)?,
        SplitPointFile::Real(x) => SplitPoint::real(x)?,
    };
    let bvp = BvpConfig::with_indices(a, file.alpha, file.beta)?;
    RunConfig::new(bvp, file.n, file.m)
}

pub fn read_config(path: &Path) -> Result<RunConfig> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    parse_config(&text)
}

pub(crate) fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(field: &str, raw: &str, row: usize) -> Result<f64> {
    raw.trim().parse::<f64>().map_err(|_| {
        Error::input(
            field,
            format!("row {row}: cannot parse {raw:?} as a number"),
        )
    })
}

fn check_header(reader: &mut csv::Reader<File>, expected: &[&str]) -> Result<()> {
    let header = reader.headers()?;
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != expected {
        return Err(Error::input(
            "header",
            format!("expected columns {expected:?}, found {got:?}"),
        ));
    }
    Ok(())
}

fn open_csv(path: &Path) -> Result<csv::Reader<File>> {
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(File::open(path)?))
}

fn create_csv(path: &Path) -> Result<csv::Writer<File>> {
    Ok(csv::Writer::from_writer(File::create(path)?))
}

/// Reads `x, re, im` rows; the abscissae must form the uniform grid on `[0, π]`.
pub fn read_potential(path: &Path) -> Result<Potential> {
    let mut reader = open_csv(path)?;
    check_header(&mut reader, &["x", "re", "im"])?;
    let mut xs = Vec::new();
    let mut samples = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != 3 {
            return Err(Error::input(
                "row",
                format!("row {}: expected 3 columns", i + 1),
            ));
        }
        xs.push(parse_f64("x", &record[0], i + 1)?);
        samples.push(C::new(
            parse_f64("re", &record[1], i + 1)?,
            parse_f64("im", &record[2], i + 1)?,
        ));
    }
    if samples.len() < 3 {
        return Err(Error::input("x", "need at least three grid points"));
    }
    let m = samples.len() - 1;
    for (i, &x) in xs.iter().enumerate() {
        if (x - grid_node(i, m)).abs() > 1e-9 {
            return Err(Error::input(
                "x",
                format!(
                    "row {}: x = {x} is not the grid node {}",
                    i + 1,
                    grid_node(i, m)
                ),
            ));
        }
    }
    Potential::from_samples(samples)
}

pub fn write_potential(path: &Path, q: &Potential) -> Result<()> {
    let mut w = create_csv(path)?;
    w.write_record(["x", "re", "im"])?;
    for (i, v) in q.samples().iter().enumerate() {
        w.write_record([fmt(q.node(i)), fmt(v.re), fmt(v.im)])?;
    }
    w.flush()?;
    Ok(())
}

const SPECTRUM_HEADER: [&str; 7] = [
    "n",
    "re_rho",
    "im_rho",
    "re_lambda",
    "im_lambda",
    "residual",
    "in_omega",
];

pub fn write_spectrum(path: &Path, solution: &ForwardSolution) -> Result<()> {
    let mut w = create_csv(path)?;
    w.write_record(SPECTRUM_HEADER)?;
    for n in 1..=solution.spectrum.len() {
        let rho = solution.spectrum.rho(n);
        let lambda = solution.spectrum.lambda(n);
        w.write_record([
            n.to_string(),
            fmt(rho.re),
            fmt(rho.im),
            fmt(lambda.re),
            fmt(lambda.im),
            fmt(solution.residuals[n - 1]),
            u8::from(solution.classification.is_omega(n)).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a spectrum file; rows must be `n = 1, 2, …` in order.
pub fn read_spectrum(path: &Path) -> Result<Spectrum> {
    let mut reader = open_csv(path)?;
    check_header(&mut reader, &SPECTRUM_HEADER)?;
    let mut rho = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let n: usize = record[0].trim().parse().map_err(|_| {
            Error::input(
                "n",
                format!("row {}: invalid index {:?}", i + 1, &record[0]),
            )
        })?;
        if n != i + 1 {
            return Err(Error::input(
                "n",
                format!("row {}: expected index {}, found {n}", i + 1, i + 1),
            ));
        }
        rho.push(C::new(
            parse_f64("re_rho", &record[1], i + 1)?,
            parse_f64("im_rho", &record[2], i + 1)?,
        ));
    }
    Ok(Spectrum::from_rho(rho))
}

/// Reads `n, kind, re, im` rows with `kind ∈ {rho, lambda, xi}`.
pub fn read_spectral_input(path: &Path, config: &BvpConfig, n_max: usize) -> Result<SpectralInput> {
    let mut reader = open_csv(path)?;
    check_header(&mut reader, &["n", "kind", "re", "im"])?;
    let mut rho = BTreeMap::new();
    let mut xi = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let n: usize = record[0]
            .trim()
            .parse()
            .map_err(|_| Error::input("n", format!("row {row}: invalid index {:?}", &record[0])))?;
        let v = C::new(
            parse_f64("re", &record[2], row)?,
            parse_f64("im", &record[3], row)?,
        );
        let duplicate = match record[1].trim() {
            "rho" => rho.insert(n, v).is_some(),
            "lambda" => rho.insert(n, crate::model::principal_sqrt(v)).is_some(),
            "xi" => xi.insert(n, v).is_some(),
            other => {
                return Err(Error::input(
                    "kind",
                    format!("row {row}: {other:?} is not one of rho, lambda, xi"),
                ))
            }
        };
        if duplicate {
            return Err(Error::input(
                "n",
                format!("row {row}: index {n} given twice"),
            ));
        }
    }
    SpectralInput::new(config, n_max, rho, xi)
}

pub fn write_spectral_input(path: &Path, input: &SpectralInput) -> Result<()> {
    let mut w = create_csv(path)?;
    w.write_record(["n", "kind", "re", "im"])?;
    let mut rows: Vec<(usize, &str, C)> = input
        .rho()
        .iter()
        .map(|(&n, &v)| (n, "rho", v))
        .chain(input.xi().iter().map(|(&n, &v)| (n, "xi", v)))
        .collect();
    rows.sort_by_key(|r| r.0);
    for (n, kind, v) in rows {
        w.write_record([n.to_string(), kind.to_string(), fmt(v.re), fmt(v.im)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_charfn(path: &Path, values: &[(C, C)]) -> Result<()> {
    let mut w = create_csv(path)?;
    w.write_record(["lambda_re", "lambda_im", "delta_re", "delta_im"])?;
    for (l, d) in values {
        w.write_record([fmt(l.re), fmt(l.im), fmt(d.re), fmt(d.im)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_stability_rows(path: &Path, report: &StabilityReport) -> Result<()> {
    let mut w = create_csv(path)?;
    w.write_record(["seed", "Xi", "xi_dist", "q_dist", "ratio"])?;
    for row in &report.rows {
        w.write_record([
            row.seed.to_string(),
            fmt(row.big_xi),
            fmt(row.xi_dist),
            fmt(row.q_dist),
            fmt(row.ratio),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct PhiEntry {
    n: usize,
    phi: f64,
}

#[derive(Debug, Serialize)]
struct ScaleEntry {
    s: f64,
    #[serde(rename = "C_r_empirical")]
    c_r: f64,
}

#[derive(Debug, Serialize)]
struct Summary {
    r: f64,
    trials: usize,
    rejected: usize,
    magnitude: f64,
    #[serde(rename = "C_r_empirical")]
    c_r: f64,
    #[serde(rename = "C_prime_empirical")]
    c_prime: Option<f64>,
    scale_test: Vec<ScaleEntry>,
    per_index_phi: Vec<PhiEntry>,
}

/// Summary of a stability run; `scales` pairs each scale factor with its report.
pub fn write_summary(
    path: &Path,
    report: &StabilityReport,
    scales: &[(f64, &StabilityReport)],
) -> Result<()> {
    let summary = Summary {
        r: report.r,
        trials: report.trials,
        rejected: report.rejected,
        magnitude: report.magnitude,
        c_r: report.c_r,
        c_prime: report.c_prime,
        scale_test: scales
            .iter()
            .map(|&(s, r)| ScaleEntry { s, c_r: r.c_r })
            .collect(),
        per_index_phi: report
            .per_index_phi
            .iter()
            .enumerate()
            .map(|(i, &phi)| PhiEntry { n: i + 1, phi })
            .collect(),
    };
    let mut file = File::create(path)?;
    serde_json::to_writer_pretty(&mut file, &summary)?;
    writeln!(file)?;
    Ok(())
}

/// `lo:hi:count` as an evenly spaced list (a single point when `count = 1`).
pub fn parse_range(field: &str, spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::input(
            field,
            format!("expected lo:hi:count, got {spec:?}"),
        ));
    }
    let lo = parse_f64(field, parts[0], 1)?;
    let hi = parse_f64(field, parts[1], 1)?;
    let count: usize = parts[2]
        .trim()
        .parse()
        .map_err(|_| Error::input(field, format!("invalid count {:?}", parts[2])))?;
    if count == 0 {
        return Err(Error::input(field, "count must be positive"));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{solve, ForwardOptions};
    use tempfile::tempdir;

    #[test]
    fn config_parsing() {
        let c = parse_config(r#"{"a": {"pi_rational": [1, 3]}, "alpha": 0, "beta": 1}"#).unwrap();
        assert_eq!(c.n_max, 200);
        assert_eq!(c.m, 2001);
        assert_eq!(c.bvp.split_point(), SplitPoint::PiRational { p: 1, q: 3 });
        let c = parse_config(r#"{"a": {"real": 1.0}, "alpha": 1, "beta": 1, "N": 30, "M": 500}"#)
            .unwrap();
        assert_eq!((c.n_max, c.m), (30, 500));

        let err =
            parse_config(r#"{"a": {"real": 1.0}, "alpha": 0, "beta": 0, "extra": 1}"#).unwrap_err();
        assert!(err.to_string().contains("extra"), "{err}");
        let err = parse_config(r#"{"a": {"real": 1.0}, "beta": 0}"#).unwrap_err();
        assert!(err.to_string().contains("alpha"), "{err}");
        let err = parse_config(r#"{"a": {"real": 1.0}, "alpha": 3, "beta": 0}"#).unwrap_err();
        assert!(err.to_string().contains("alpha"), "{err}");
        assert!(parse_config(r#"{"a": {"pi_rational": [3, 2]}, "alpha": 0, "beta": 0}"#).is_err());
    }

    #[test]
    fn potential_roundtrip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("q.csv");
        let q = Potential::from_fn(50, |x| C::new(x.sin(), -x / 3.0));
        write_potential(&path, &q).unwrap();
        let back = read_potential(&path).unwrap();
        assert_eq!(back.samples(), q.samples());
    }

    #[test]
    fn malformed_potential_names_the_field() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("q.csv");
        std::fs::write(&path, "x,re,im\n0,1,0\n1.5,abc,0\n3.141592653589793,0,0\n").unwrap();
        let err = read_potential(&path).unwrap_err();
        assert!(err.to_string().contains("`re`"), "{err}");
        std::fs::write(&path, "x,re,im\n0,1,0\n1.0,0,0\n3.141592653589793,0,0\n").unwrap();
        let err = read_potential(&path).unwrap_err();
        assert!(err.to_string().contains("`x`"), "{err}");
    }

    #[test]
    fn spectrum_and_input_roundtrip() {
        let dir = tempdir().unwrap();
        let config = BvpConfig::with_indices(SplitPoint::pi_rational(1, 2).unwrap(), 0, 0).unwrap();
        let q = Potential::from_fn(200, |x| C::new(x.cos(), 0.1));
        let sol = solve(&q, &config, 8, &ForwardOptions::default()).unwrap();
        let path = dir.path().join("s.csv");
        write_spectrum(&path, &sol).unwrap();
        assert_eq!(read_spectrum(&path).unwrap(), sol.spectrum);

        let xi = vec![C::new(0.5, -0.5); 8];
        let input = SpectralInput::from_full(&config, &sol.spectrum, &xi).unwrap();
        let path = dir.path().join("in.csv");
        write_spectral_input(&path, &input).unwrap();
        assert_eq!(read_spectral_input(&path, &config, 8).unwrap(), input);
        assert!(matches!(
            read_spectral_input(&path, &config, 9),
            Err(Error::PartitionMismatch(_))
        ));
    }

    #[test]
    fn lambda_rows_are_converted() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("in.csv");
        std::fs::write(&path, "n,kind,re,im\n1,lambda,4.0,0\n2,xi,0.1,0\n").unwrap();
        let config = BvpConfig::with_indices(SplitPoint::pi_rational(1, 2).unwrap(), 0, 0).unwrap();
        let input = read_spectral_input(&path, &config, 2).unwrap();
        assert_eq!(input.rho()[&1], C::new(2.0, 0.0));
        std::fs::write(&path, "n,kind,re,im\n1,mu,4.0,0\n").unwrap();
        let err = read_spectral_input(&path, &config, 1).unwrap_err();
        assert!(err.to_string().contains("`kind`"));
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("re", "0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_range("im", "2:5:1").unwrap(), vec![2.0]);
        assert!(parse_range("re", "0:1").is_err());
    }
}
