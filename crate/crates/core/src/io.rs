//! Dataset and result serialization: labeled CSV in, model JSON and tidy
//! result CSVs out.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! file re-parses to bit-identical values and repeated runs produce
//! byte-identical output.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::data::{DataMatrix, Direction};
use crate::error::{Error, Result};
use crate::estimator::{ModalComponent, MpcaModel};
use crate::kernel::Bandwidth;

const MODEL_VERSION: u32 = 1;

/// A parsed dataset with an optional inlier mask.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub data: DataMatrix,
    pub inlier_mask: Option<Vec<bool>>,
    pub column_names: Option<Vec<String>>,
}

/// CSV ingestion options.
#[derive(Debug, Clone)]
pub struct CsvOptions {
    /// First row is a header.
    pub header: bool,
    /// Name of the label column carrying `0`/`1` or `inlier`/`outlier`
    /// (requires `header`).
    pub label_column: Option<String>,
    pub delimiter: u8,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            header: false,
            label_column: None,
            delimiter: b',',
        }
    }
}

fn parse_label(raw: &str, row: usize, column: usize) -> Result<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "1" | "inlier" => Ok(true),
        "0" | "outlier" => Ok(false),
        other => Err(Error::Parse {
            row,
            column,
            message: format!("expected 0/1 or inlier/outlier, got {other:?}"),
        }),
    }
}

/// Reads a numeric CSV, splitting off the label column when configured.
/// Row/column numbers in errors are 1-based over data rows.
pub fn read_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<LabeledDataset> {
    if options.label_column.is_some() && !options.header {
        return Err(Error::Config(
            "label_column lookup needs a header row".into(),
        ));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(options.header)
        .delimiter(options.delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())
        .map_err(|e| Error::Structure(e.to_string()))?;

    let mut column_names: Option<Vec<String>> = None;
    let mut label_idx: Option<usize> = None;
    if options.header {
        let headers = reader.headers().map_err(|e| Error::Structure(e.to_string()))?;
        let names: Vec<String> = headers.iter().map(|s| s.trim().to_string()).collect();
        if let Some(label) = &options.label_column {
            label_idx = Some(names.iter().position(|n| n == label).ok_or_else(|| {
                Error::Config(format!("label column {label:?} not found in header"))
            })?);
        }
        column_names = Some(
            names
                .iter()
                .enumerate()
                .filter(|(i, _)| Some(*i) != label_idx)
                .map(|(_, n)| n.clone())
                .collect(),
        );
    }

    let mut cells: Vec<f64> = Vec::new();
    let mut mask: Vec<bool> = Vec::new();
    let mut width: Option<usize> = None;
    let mut n = 0usize;
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Structure(e.to_string()))?;
        let row = r + 1;
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(Error::Structure(format!(
                    "row {row} has {} fields, expected {w}",
                    record.len()
                )));
            }
            _ => {}
        }
        for (c, field) in record.iter().enumerate() {
            let column = c + 1;
            if Some(c) == label_idx {
                mask.push(parse_label(field, row, column)?);
                continue;
            }
            let value: f64 = field.parse().map_err(|_| Error::Parse {
                row,
                column,
                message: format!("not a decimal real: {field:?}"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    row,
                    column,
                    message: format!("non-finite value {value}"),
                });
            }
            cells.push(value);
        }
        n = row;
    }
    if n == 0 {
        return Err(Error::Structure("empty table".into()));
    }
    let d = width.unwrap() - usize::from(label_idx.is_some());
    if d == 0 {
        return Err(Error::Structure("no numeric columns".into()));
    }
    Ok(LabeledDataset {
        data: DataMatrix::from_rows(n, d, &cells)?,
        inlier_mask: label_idx.map(|_| mask),
        column_names,
    })
}

/// Writes a dataset, optionally with a header row and a trailing label
/// column (`inlier`/`outlier`).
pub fn write_dataset_csv(
    path: impl AsRef<Path>,
    data: &DataMatrix,
    mask: Option<&[bool]>,
    header: bool,
) -> Result<()> {
    if let Some(m) = mask {
        if m.len() != data.n_samples() {
            return Err(Error::Structure(format!(
                "mask length {} != {} rows",
                m.len(),
                data.n_samples()
            )));
        }
    }
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    let d = data.dim();
    if header {
        let mut names: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
        if mask.is_some() {
            names.push("label".into());
        }
        writeln!(out, "{}", names.join(","))?;
    }
    for i in 0..data.n_samples() {
        let mut fields: Vec<String> = (0..d).map(|j| data.matrix()[(i, j)].to_string()).collect();
        if let Some(m) = mask {
            fields.push(if m[i] { "inlier" } else { "outlier" }.into());
        }
        writeln!(out, "{}", fields.join(","))?;
    }
    out.flush()?;
    Ok(())
}

#[derive(serde::Serialize, serde::Deserialize)]
struct ComponentFile {
    index: usize,
    mode: f64,
    objective: f64,
    direction: Vec<f64>,
    #[serde(default)]
    iterations: usize,
    #[serde(default = "default_true")]
    converged: bool,
}

fn default_true() -> bool {
    true
}

#[derive(serde::Serialize, serde::Deserialize)]
struct ModelFile {
    version: u32,
    dim: usize,
    n_samples: usize,
    bandwidths: Vec<f64>,
    components: Vec<ComponentFile>,
    #[serde(default)]
    center: Option<Vec<f64>>,
}

/// Serializes a model as versioned JSON.
pub fn write_model(model: &MpcaModel, path: impl AsRef<Path>) -> Result<()> {
    let file = ModelFile {
        version: MODEL_VERSION,
        dim: model.dim(),
        n_samples: model.n_samples(),
        bandwidths: model
            .components()
            .iter()
            .map(|c| c.bandwidth.get())
            .collect(),
        components: model
            .components()
            .iter()
            .map(|c| ComponentFile {
                index: c.index,
                mode: c.mode,
                objective: c.objective,
                direction: c.direction.vector().iter().copied().collect(),
                iterations: c.iterations,
                converged: c.converged,
            })
            .collect(),
        center: Some(model.center().iter().copied().collect()),
    };
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    serde_json::to_writer_pretty(&mut out, &file)
        .map_err(|e| Error::Format(e.to_string()))?;
    out.flush()?;
    Ok(())
}

/// Reads a model written by [`write_model`] (or compatible hand-written
/// JSON; `iterations`, `converged` and `center` are optional).
pub fn read_model(path: impl AsRef<Path>) -> Result<MpcaModel> {
    let mut raw = String::new();
    File::open(path.as_ref())?.read_to_string(&mut raw)?;
    let file: ModelFile =
        serde_json::from_str(&raw).map_err(|e| Error::Format(e.to_string()))?;
    if file.version != MODEL_VERSION {
        return Err(Error::Format(format!(
            "model version {} not supported (expected {MODEL_VERSION})",
            file.version
        )));
    }
    if file.bandwidths.len() != file.components.len() {
        return Err(Error::Format(format!(
            "{} bandwidths for {} components",
            file.bandwidths.len(),
            file.components.len()
        )));
    }
    let mut components = Vec::with_capacity(file.components.len());
    for (c, h) in file.components.into_iter().zip(file.bandwidths) {
        if c.direction.len() != file.dim {
            return Err(Error::Format(format!(
                "component {} direction has length {}, dim is {}",
                c.index,
                c.direction.len(),
                file.dim
            )));
        }
        components.push(ModalComponent {
            index: c.index,
            direction: Direction::new(DVector::from_vec(c.direction))
                .map_err(|e| Error::Format(e.to_string()))?,
            mode: c.mode,
            bandwidth: Bandwidth::new(h).map_err(|e| Error::Format(e.to_string()))?,
            objective: c.objective,
            iterations: c.iterations,
            converged: c.converged,
        });
    }
    MpcaModel::from_components(file.dim, file.n_samples, components)
}

/// Reads a plain numeric matrix (no header, no labels) as a subspace basis,
/// one row per ambient dimension.
pub fn read_basis_csv(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let parsed = read_csv(path, &CsvOptions::default())?;
    Ok(parsed.data.matrix().clone())
}

/// One influence-grid cell.
#[derive(Debug, Clone)]
pub struct InfluenceRow {
    pub u1: f64,
    pub u2: f64,
    pub norm: f64,
}

pub fn write_influence_csv(path: impl AsRef<Path>, rows: &[InfluenceRow]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    writeln!(out, "u1,u2,norm")?;
    for r in rows {
        writeln!(out, "{},{},{}", r.u1, r.u2, r.norm)?;
    }
    out.flush()?;
    Ok(())
}

/// One benchmark sweep cell; `param` is the swept quantity (outlier
/// fraction or sample size).
#[derive(Debug, Clone)]
pub struct BenchmarkRow {
    pub method: String,
    pub param: f64,
    pub seed: u64,
    pub specdist: f64,
}

pub fn write_benchmark_csv(
    path: impl AsRef<Path>,
    param_name: &str,
    rows: &[BenchmarkRow],
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    writeln!(out, "method,{param_name},seed,specdist")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.method, r.param, r.seed, r.specdist)?;
    }
    out.flush()?;
    Ok(())
}

/// One breakdown-experiment cell.
#[derive(Debug, Clone)]
pub struct BreakdownRow {
    pub alpha: f64,
    pub seed: u64,
    pub cosine: f64,
}

pub fn write_breakdown_csv(path: impl AsRef<Path>, rows: &[BreakdownRow]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    writeln!(out, "alpha,seed,cosine")?;
    for r in rows {
        writeln!(out, "{},{},{}", r.alpha, r.seed, r.cosine)?;
    }
    out.flush()?;
    Ok(())
}

/// One breakdown-bound report row.
#[derive(Debug, Clone)]
pub struct LbbpRow {
    pub a: usize,
    pub m_a: f64,
    pub m_a_star: f64,
    pub b_star: usize,
    pub bound: f64,
}

pub fn write_lbbp_csv(path: impl AsRef<Path>, rows: &[LbbpRow]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    writeln!(out, "a,M_a,M_a_star,b_star,bound")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.a, r.m_a, r.m_a_star, r.b_star, r.bound
        )?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{fit, FitConfig};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("modalpca-io-tests");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn reads_plain_csv() {
        let path = tmp("plain.csv");
        std::fs::write(&path, "1,2\n3,4\n5,6\n").unwrap();
        let parsed = read_csv(&path, &CsvOptions::default()).unwrap();
        assert_eq!(parsed.data.n_samples(), 3);
        assert_eq!(parsed.data.dim(), 2);
        assert_eq!(parsed.data.matrix()[(2, 1)], 6.0);
        assert!(parsed.inlier_mask.is_none());
    }

    #[test]
    fn reads_label_column() {
        let path = tmp("labeled.csv");
        std::fs::write(&path, "a,b,label\n1,2,inlier\n3,4,outlier\n5,6,inlier\n").unwrap();
        let parsed = read_csv(
            &path,
            &CsvOptions {
                header: true,
                label_column: Some("label".into()),
                delimiter: b',',
            },
        )
        .unwrap();
        assert_eq!(parsed.inlier_mask, Some(vec![true, false, true]));
        assert_eq!(parsed.data.dim(), 2);
        assert_eq!(parsed.column_names, Some(vec!["a".into(), "b".into()]));
    }

    #[test]
    fn parse_error_carries_location() {
        let path = tmp("bad.csv");
        std::fs::write(&path, "1,abc\n3,4\n").unwrap();
        match read_csv(&path, &CsvOptions::default()) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!((row, column), (1, 2));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_ragged_rows_and_nan() {
        let path = tmp("ragged.csv");
        std::fs::write(&path, "1,2\n3\n").unwrap();
        assert!(matches!(
            read_csv(&path, &CsvOptions::default()),
            Err(Error::Structure(_))
        ));

        let path = tmp("nan.csv");
        std::fs::write(&path, "1,NaN\n").unwrap();
        assert!(matches!(
            read_csv(&path, &CsvOptions::default()),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn dataset_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let data = DataMatrix::from_rows(
            4,
            3,
            &(0..12).map(|_| rng.gen::<f64>() * 10.0 - 5.0).collect::<Vec<_>>(),
        )
        .unwrap();
        let mask = vec![true, false, true, true];
        let path = tmp("roundtrip.csv");
        write_dataset_csv(&path, &data, Some(&mask), true).unwrap();
        let parsed = read_csv(
            &path,
            &CsvOptions {
                header: true,
                label_column: Some("label".into()),
                delimiter: b',',
            },
        )
        .unwrap();
        assert_eq!(parsed.data.matrix(), data.matrix());
        assert_eq!(parsed.inlier_mask, Some(mask));
    }

    #[test]
    fn model_roundtrip_is_exact() {
        use rand_distr::{Distribution, Normal};
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let dist = Normal::new(0.0, 1.0).unwrap();
        let cells: Vec<f64> = (0..300)
            .map(|i| dist.sample(&mut rng) * if i % 3 == 0 { 2.0 } else { 0.7 })
            .collect();
        let data = DataMatrix::from_rows(100, 3, &cells).unwrap();
        let model = fit(
            &data,
            &FitConfig {
                n_components: 2,
                ..FitConfig::default()
            },
        )
        .unwrap();

        let path = tmp("model.json");
        write_model(&model, &path).unwrap();
        let back = read_model(&path).unwrap();
        assert_eq!(back.dim(), model.dim());
        assert_eq!(back.n_samples(), model.n_samples());
        for (a, b) in model.components().iter().zip(back.components()) {
            assert_eq!(a.index, b.index);
            assert_eq!(a.mode, b.mode);
            assert_eq!(a.objective, b.objective);
            assert_eq!(a.bandwidth.get(), b.bandwidth.get());
            assert_eq!(a.iterations, b.iterations);
            assert_eq!(a.converged, b.converged);
            for (x, y) in a.direction.vector().iter().zip(b.direction.vector().iter()) {
                assert!((x - y).abs() < 1e-15);
            }
        }
        assert_eq!(model.center(), back.center());
    }

    #[test]
    fn model_format_errors() {
        let path = tmp("missing.json");
        std::fs::write(&path, r#"{"version":1,"dim":2,"n_samples":5,"bandwidths":[0.5]}"#)
            .unwrap();
        match read_model(&path) {
            Err(Error::Format(msg)) => assert!(msg.contains("components"), "{msg}"),
            other => panic!("expected format error, got {other:?}"),
        }

        let path = tmp("version.json");
        std::fs::write(
            &path,
            r#"{"version":9,"dim":2,"n_samples":5,"bandwidths":[0.5],
               "components":[{"index":1,"mode":0.0,"objective":0.5,"direction":[1.0,0.0]}]}"#,
        )
        .unwrap();
        assert!(matches!(read_model(&path), Err(Error::Format(_))));
    }

    #[test]
    fn minimal_handwritten_model_parses() {
        let path = tmp("minimal.json");
        std::fs::write(
            &path,
            r#"{"version":1,"dim":2,"n_samples":10,"bandwidths":[0.25],
               "components":[{"index":1,"mode":0.5,"objective":0.9,"direction":[0.0,1.0]}]}"#,
        )
        .unwrap();
        let model = read_model(&path).unwrap();
        assert_eq!(model.n_components(), 1);
        assert_eq!(model.components()[0].mode, 0.5);
        assert!(model.components()[0].converged);
    }

    #[test]
    fn result_csv_headers() {
        let path = tmp("inf.csv");
        write_influence_csv(
            &path,
            &[InfluenceRow {
                u1: 0.5,
                u2: -1.0,
                norm: 2.25,
            }],
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "u1,u2,norm\n0.5,-1,2.25\n");

        let path = tmp("lbbp.csv");
        write_lbbp_csv(
            &path,
            &[LbbpRow {
                a: 500,
                m_a: 100.0,
                m_a_star: 90.5,
                b_star: 9,
                bound: 9.0 / 509.0,
            }],
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("a,M_a,M_a_star,b_star,bound\n500,100,90.5,9,"));
    }
}
