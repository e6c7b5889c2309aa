//! Per-step telemetry and its CSV form.
//!
//! Floats are written in shortest round-trip form, so a file read back with
//! [`read_csv`] reproduces the records bit for bit. Absent values are empty
//! fields.

use std::io::{Read, Write};
use std::path::Path;

use crate::dynamics::QuadrotorState;
use crate::estimator::{Component, MeasuredValue, Measurement};
use crate::geom::RotationMatrix;
use crate::linearization::FullState;
use crate::{Error, Mat3, Result, Vec3};

/// Jacobian check at the estimate for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianDeviation {
    pub full_error: f64,
    pub max_block_error: f64,
}

/// One row of telemetry.
#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryRecord {
    pub t: f64,
    pub truth: FullState,
    pub estimate: FullState,
    pub desired_position: Vec3,
    pub desired_velocity: Vec3,
    /// Computed attitude `R_c` at the estimate.
    pub desired_attitude: Mat3,
    pub measurement: Option<Measurement>,
    /// `x̄ − x_d`.
    pub ebar_x: Vec3,
    /// `v̄ − v_d`.
    pub ebar_v: Vec3,
    pub psi: f64,
    pub norm_e_r: f64,
    pub norm_e_omega: f64,
    /// NaN when the covariance could not be factored.
    pub nees: f64,
    pub p_min_eig: f64,
    pub p_asym: f64,
    pub mode_ok: bool,
    pub jacobian: Option<JacobianDeviation>,
}

impl TelemetryRecord {
    /// `x̄ − x`.
    pub fn position_error(&self) -> Vec3 {
        self.estimate.quad.position - self.truth.quad.position
    }

    /// `v̄ − v`.
    pub fn velocity_error(&self) -> Vec3 {
        self.estimate.quad.velocity - self.truth.quad.velocity
    }

    /// Geodesic distance between true and estimated attitude.
    pub fn attitude_error(&self) -> f64 {
        crate::geom::log_so3(&(self.truth.quad.attitude.transpose() * self.estimate.quad.attitude))
            .map(|e| e.norm())
            .unwrap_or(std::f64::consts::PI)
    }

    pub fn angular_velocity_error(&self) -> Vec3 {
        self.estimate.quad.angular_velocity - self.truth.quad.angular_velocity
    }

    /// Largest absolute difference between estimate and truth over every
    /// coordinate, attitude compared entrywise.
    pub fn max_state_error(&self) -> f64 {
        let (a, b) = (&self.estimate, &self.truth);
        let mut m = (a.quad.attitude.matrix() - b.quad.attitude.matrix()).amax();
        for d in [
            a.quad.position - b.quad.position,
            a.quad.velocity - b.quad.velocity,
            a.quad.angular_velocity - b.quad.angular_velocity,
            a.position_integral - b.position_integral,
            a.attitude_integral - b.attitude_integral,
        ] {
            m = m.max(d.amax());
        }
        m
    }
}

const AXES: [&str; 3] = ["1", "2", "3"];
const MEAS: [(Component, &str); 6] = [
    (Component::Position, "x"),
    (Component::Velocity, "v"),
    (Component::Attitude, "R"),
    (Component::AngularVelocity, "Omega"),
    (Component::PositionIntegral, "ei"),
    (Component::AttitudeIntegral, "eI"),
];

fn vec_cols(out: &mut Vec<String>, prefix: &str, name: &str) {
    for a in AXES {
        out.push(format!("{prefix}.{name}{a}"));
    }
}

fn mat_cols(out: &mut Vec<String>, prefix: &str, name: &str) {
    for i in AXES {
        for j in AXES {
            out.push(format!("{prefix}.{name}{i}{j}"));
        }
    }
}

fn state_cols(out: &mut Vec<String>, prefix: &str) {
    vec_cols(out, prefix, "x");
    vec_cols(out, prefix, "v");
    mat_cols(out, prefix, "R");
    vec_cols(out, prefix, "Omega");
    vec_cols(out, prefix, "ei");
    vec_cols(out, prefix, "eI");
}

/// Column names, in order.
pub fn header() -> Vec<String> {
    let mut h = vec!["t".to_string()];
    state_cols(&mut h, "truth");
    state_cols(&mut h, "estimate");
    vec_cols(&mut h, "desired", "x");
    vec_cols(&mut h, "desired", "v");
    mat_cols(&mut h, "desired", "Rc");
    for (c, name) in MEAS {
        if c == Component::Attitude {
            mat_cols(&mut h, "meas", name);
        } else {
            vec_cols(&mut h, "meas", name);
        }
    }
    vec_cols(&mut h, "ebar", "x");
    vec_cols(&mut h, "ebar", "v");
    for s in [
        "psi",
        "norm_e_R",
        "norm_e_Omega",
        "nees",
        "P_min_eig",
        "P_asym",
        "mode_ok",
        "jac.full_error",
        "jac.max_block_error",
    ] {
        h.push(s.to_string());
    }
    h
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn push_vec(out: &mut Vec<String>, v: &Vec3) {
    out.extend(v.iter().map(|x| num(*x)));
}

fn push_mat(out: &mut Vec<String>, m: &Mat3) {
    for i in 0..3 {
        for j in 0..3 {
            out.push(num(m[(i, j)]));
        }
    }
}

fn push_state(out: &mut Vec<String>, s: &FullState) {
    push_vec(out, &s.quad.position);
    push_vec(out, &s.quad.velocity);
    push_mat(out, s.quad.attitude.matrix());
    push_vec(out, &s.quad.angular_velocity);
    push_vec(out, &s.position_integral);
    push_vec(out, &s.attitude_integral);
}

fn row(r: &TelemetryRecord) -> Vec<String> {
    let mut out = vec![num(r.t)];
    push_state(&mut out, &r.truth);
    push_state(&mut out, &r.estimate);
    push_vec(&mut out, &r.desired_position);
    push_vec(&mut out, &r.desired_velocity);
    push_mat(&mut out, &r.desired_attitude);
    for (c, _) in MEAS {
        let width = if c == Component::Attitude { 9 } else { 3 };
        match r.measurement.as_ref().and_then(|m| m.get(c)) {
            Some(MeasuredValue::Vector(v)) => push_vec(&mut out, v),
            Some(MeasuredValue::Rotation(rot)) => push_mat(&mut out, rot.matrix()),
            None => out.extend(std::iter::repeat_n(String::new(), width)),
        }
    }
    push_vec(&mut out, &r.ebar_x);
    push_vec(&mut out, &r.ebar_v);
    for v in [r.psi, r.norm_e_r, r.norm_e_omega, r.nees, r.p_min_eig, r.p_asym] {
        out.push(num(v));
    }
    out.push(if r.mode_ok { "1" } else { "0" }.to_string());
    match r.jacobian {
        Some(j) => {
            out.push(num(j.full_error));
            out.push(num(j.max_block_error));
        }
        None => out.extend([String::new(), String::new()]),
    }
    out
}

/// Writes the header and one row per record.
pub fn write_csv<W: Write>(records: &[TelemetryRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header())?;
    for r in records {
        w.write_record(row(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(records: &[TelemetryRecord], path: &Path) -> Result<()> {
    write_csv(records, std::io::BufWriter::new(std::fs::File::create(path)?))
}

struct Cursor<'a> {
    fields: csv::StringRecord,
    pos: usize,
    line: usize,
    header: &'a [String],
}

impl Cursor<'_> {
    fn err(&self, message: String) -> Error {
        Error::Schema {
            line: self.line,
            message,
        }
    }

    fn raw(&mut self) -> Result<&str> {
        let i = self.pos;
        self.pos += 1;
        self.fields.get(i).ok_or_else(|| Error::Schema {
            line: self.line,
            message: format!("missing column `{}`", self.header[i]),
        })
    }

    fn opt(&mut self) -> Result<Option<f64>> {
        let col = self.header.get(self.pos).cloned().unwrap_or_default();
        let s = self.raw()?.to_string();
        if s.is_empty() {
            return Ok(None);
        }
        let v = s.parse::<f64>();
        v.map(Some).map_err(|_| self.err(format!("column `{col}`: `{s}` is not a number")))
    }

    fn f(&mut self) -> Result<f64> {
        let col = self.header.get(self.pos).cloned().unwrap_or_default();
        self.opt()?.ok_or_else(|| self.err(format!("column `{col}` is empty")))
    }

    fn opt_vec(&mut self) -> Result<Option<Vec3>> {
        let v = [self.opt()?, self.opt()?, self.opt()?];
        match v {
            [Some(a), Some(b), Some(c)] => Ok(Some(Vec3::new(a, b, c))),
            [None, None, None] => Ok(None),
            _ => Err(self.err("partially filled vector".into())),
        }
    }

    fn vec(&mut self) -> Result<Vec3> {
        Ok(Vec3::new(self.f()?, self.f()?, self.f()?))
    }

    fn opt_mat(&mut self) -> Result<Option<Mat3>> {
        let mut v = [None; 9];
        for x in v.iter_mut() {
            *x = self.opt()?;
        }
        if v.iter().all(Option::is_none) {
            return Ok(None);
        }
        if v.iter().any(Option::is_none) {
            return Err(self.err("partially filled matrix".into()));
        }
        Ok(Some(Mat3::from_row_iterator(v.iter().map(|x| x.unwrap()))))
    }

    fn mat(&mut self) -> Result<Mat3> {
        self.opt_mat()?.ok_or_else(|| self.err("empty matrix".into()))
    }

    fn state(&mut self) -> Result<FullState> {
        Ok(FullState {
            quad: QuadrotorState {
                position: self.vec()?,
                velocity: self.vec()?,
                attitude: RotationMatrix::from_matrix_unchecked(self.mat()?),
                angular_velocity: self.vec()?,
            },
            position_integral: self.vec()?,
            attitude_integral: self.vec()?,
        })
    }
}

/// Parses telemetry written by [`write_csv`].
pub fn read_csv<R: Read>(input: R) -> Result<Vec<TelemetryRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(input);
    let expected = header();
    let mut records = Vec::new();
    for (i, fields) in rdr.records().enumerate() {
        let fields = fields?;
        let line = i + 1;
        if fields.len() != expected.len() {
            return Err(Error::Schema {
                line,
                message: format!("expected {} columns, found {}", expected.len(), fields.len()),
            });
        }
        if i == 0 {
            if let Some((k, (got, want))) = fields.iter().zip(&expected).enumerate().find(|(_, (g, w))| g != w) {
                return Err(Error::Schema {
                    line,
                    message: format!("column {} is `{got}`, expected `{want}`", k + 1),
                });
            }
            continue;
        }
        let mut c = Cursor {
            fields,
            pos: 0,
            line,
            header: &expected,
        };
        let t = c.f()?;
        let truth = c.state()?;
        let estimate = c.state()?;
        let desired_position = c.vec()?;
        let desired_velocity = c.vec()?;
        let desired_attitude = c.mat()?;
        let mut values = Vec::new();
        for (comp, _) in MEAS {
            let v = if comp == Component::Attitude {
                c.opt_mat()?
                    .map(|m| MeasuredValue::Rotation(RotationMatrix::from_matrix_unchecked(m)))
            } else {
                c.opt_vec()?.map(MeasuredValue::Vector)
            };
            if let Some(v) = v {
                values.push((comp, v));
            }
        }
        let ebar_x = c.vec()?;
        let ebar_v = c.vec()?;
        let psi = c.f()?;
        let norm_e_r = c.f()?;
        let norm_e_omega = c.f()?;
        let nees = c.f()?;
        let p_min_eig = c.f()?;
        let p_asym = c.f()?;
        let mode_ok = match c.raw()?.to_string().as_str() {
            "1" => true,
            "0" => false,
            other => return Err(c.err(format!("mode_ok must be 0 or 1, got `{other}`"))),
        };
        let jacobian = match (c.opt()?, c.opt()?) {
            (Some(full_error), Some(max_block_error)) => Some(JacobianDeviation {
                full_error,
                max_block_error,
            }),
            (None, None) => None,
            _ => return Err(c.err("partially filled Jacobian columns".into())),
        };
        records.push(TelemetryRecord {
            t,
            truth,
            estimate,
            desired_position,
            desired_velocity,
            desired_attitude,
            measurement: (!values.is_empty()).then_some(Measurement { values }),
            ebar_x,
            ebar_v,
            psi,
            norm_e_r,
            norm_e_omega,
            nees,
            p_min_eig,
            p_asym,
            mode_ok,
            jacobian,
        });
    }
    if records.is_empty() && rdr.position().line() <= 1 {
        return Err(Error::Schema {
            line: 1,
            message: "missing header".into(),
        });
    }
    Ok(records)
}

pub fn read_csv_file(path: &Path) -> Result<Vec<TelemetryRecord>> {
    read_csv(std::fs::File::open(path)?)
}
