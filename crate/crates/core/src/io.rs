use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::Deserialize;

use crate::cauchy::FieldSample;
use crate::curve::{NetGraph, PolylineCurve};
use crate::measure::PointCloudMeasure;
use crate::{Point, Result};

/// Sidecar carrying the parts of a measure that do not fit in the csv rows.
#[derive(Debug, serde::Serialize, Deserialize)]
pub struct MeasureMeta {
    pub mesh: f64,
    pub label: String,
}

fn sidecar_path(csv_path: &Path) -> std::path::PathBuf {
    csv_path.with_extension("meta.json")
}

/// Rows `x,y,w`; mesh and label go to `<stem>.meta.json` next to the csv.
pub fn write_measure_csv(mu: &PointCloudMeasure, path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(["x", "y", "w"])?;
    for (p, w) in mu.points().iter().zip(mu.weights()) {
        wtr.write_record([p.re.to_string(), p.im.to_string(), w.to_string()])?;
    }
    wtr.flush().map_err(std::io::Error::from)?;
    let meta = MeasureMeta {
        mesh: mu.mesh(),
        label: mu.label().to_string(),
    };
    write_json(&meta, &sidecar_path(path))
}

pub fn read_measure_csv(path: &Path) -> Result<PointCloudMeasure> {
    let meta: MeasureMeta =
        serde_json::from_reader(BufReader::new(File::open(sidecar_path(path))?))?;
    let mut rdr = csv::Reader::from_path(path)?;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for row in rdr.deserialize() {
        let (x, y, w): (f64, f64, f64) = row?;
        points.push(Point::new(x, y));
        weights.push(w);
    }
    PointCloudMeasure::new(points, weights, meta.mesh, meta.label)
}

/// Rows `x,y,re,im`: target location and the sampled field value there.
pub fn write_field_csv(field: &FieldSample, path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(["x", "y", "re", "im"])?;
    for (t, v) in field.targets.iter().zip(&field.values) {
        wtr.write_record([
            t.re.to_string(),
            t.im.to_string(),
            v.re.to_string(),
            v.im.to_string(),
        ])?;
    }
    wtr.flush().map_err(std::io::Error::from)?;
    Ok(())
}

pub fn write_graph_json(graph: &NetGraph, path: &Path) -> Result<()> {
    #[derive(serde::Serialize)]
    struct View<'a> {
        net: &'a crate::curve::Net,
        edges: &'a [crate::curve::Edge],
    }
    write_json(
        &View {
            net: &graph.net,
            edges: &graph.edges,
        },
        path,
    )
}

/// Constant-speed samples `t,x,y` at `samples` evenly spaced parameters in [0,1].
pub fn write_curve_csv(curve: &PolylineCurve, samples: usize, path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(["t", "x", "y"])?;
    let n = samples.max(2);
    for k in 0..n {
        let t = k as f64 / (n - 1) as f64;
        let z = curve.eval(t);
        wtr.write_record([t.to_string(), z.re.to_string(), z.im.to_string()])?;
    }
    wtr.flush().map_err(std::io::Error::from)?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}
