//! File formats: curve, ellipsoid and word specs (JSON), orbit CSVs.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::certificate::ShearRotationWord;
use crate::curve::{CurveModel, CurveShape, FourierTerm, Vec2};
use crate::error::{BilliardError, Result};
use crate::outer::OuterOrbit;
use crate::symplectic::{ChordState, Ellipsoid2n};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodySpec {
    Circle {
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<[f64; 2]>,
    },
    Ellipse {
        a: f64,
        b: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<[f64; 2]>,
    },
    SupportFourier {
        a0: f64,
        terms: Vec<(u32, f64, f64)>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<[f64; 2]>,
    },
    Ellipsoid {
        #[serde(rename = "Q")]
        q: Vec<Vec<f64>>,
    },
}

/// A loaded body: planar curve or ellipsoid in `R^{2n}`.
#[derive(Debug, Clone)]
pub enum Body {
    Curve(CurveModel),
    Ellipsoid(Ellipsoid2n),
}

impl BodySpec {
    pub fn build(&self) -> Result<Body> {
        let planar = |shape: CurveShape, center: &Option<[f64; 2]>| {
            let c = center
                .map(|[x, y]| Vec2::new(x, y))
                .unwrap_or_else(Vec2::zeros);
            CurveModel::new(shape, c).map(Body::Curve)
        };
        match self {
            BodySpec::Circle { radius, center } => {
                planar(CurveShape::Circle { radius: *radius }, center)
            }
            BodySpec::Ellipse { a, b, center } => {
                planar(CurveShape::Ellipse { a: *a, b: *b }, center)
            }
            BodySpec::SupportFourier { a0, terms, center } => planar(
                CurveShape::SupportFourier {
                    a0: *a0,
                    terms: terms
                        .iter()
                        .map(|&(k, a, b)| FourierTerm { k, a, b })
                        .collect(),
                },
                center,
            ),
            BodySpec::Ellipsoid { q } => {
                let dim = q.len();
                if q.iter().any(|row| row.len() != dim) {
                    return Err(BilliardError::InvalidBody(
                        "Q must be a square matrix".into(),
                    ));
                }
                let m = DMatrix::from_fn(dim, dim, |i, j| q[i][j]);
                Ellipsoid2n::new(m).map(Body::Ellipsoid)
            }
        }
    }
}

pub fn parse_body(text: &str) -> Result<Body> {
    let spec: BodySpec =
        serde_json::from_str(text).map_err(|e| BilliardError::Parse(format!("body spec: {e}")))?;
    spec.build()
}

/// Parse a planar curve spec; ellipsoids are rejected.
pub fn parse_curve(text: &str) -> Result<CurveModel> {
    match parse_body(text)? {
        Body::Curve(c) => Ok(c),
        Body::Ellipsoid(_) => Err(BilliardError::InvalidCurve(
            "expected a planar curve, found an ellipsoid".into(),
        )),
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| BilliardError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| BilliardError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn load_body(path: &Path) -> Result<Body> {
    parse_body(&read_text(path)?)
}

pub fn load_curve(path: &Path) -> Result<CurveModel> {
    parse_curve(&read_text(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WordFile {
    letters: Vec<(f64, f64)>,
}

pub fn parse_word(text: &str) -> Result<ShearRotationWord> {
    let w: WordFile =
        serde_json::from_str(text).map_err(|e| BilliardError::Parse(format!("word file: {e}")))?;
    ShearRotationWord::from_pairs(&w.letters)
}

pub fn word_to_json(word: &ShearRotationWord) -> String {
    let w = WordFile {
        letters: word.letters().iter().map(|l| (l.alpha, l.s)).collect(),
    };
    serde_json::to_string(&w).expect("finite letters serialize")
}

/// Fixed-width scientific notation with 17 significant digits.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.16e}")
    }
}

fn parse_num(s: &str, line: usize) -> Result<f64> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("nan") {
        return Ok(f64::NAN);
    }
    s.parse()
        .map_err(|_| BilliardError::Parse(format!("line {line}: bad number {s:?}")))
}

pub const ORBIT_HEADER: &str = "index,x,y,theta_tangency,alpha,beta";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitRow {
    pub index: usize,
    pub position: Vec2,
    /// Normal angle of the tangency used to leave this vertex; NaN if none.
    pub theta_tangency: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Contents of an orbit CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitTable {
    pub rows: Vec<OrbitRow>,
    pub winding: Option<u32>,
    pub closure_residual: Option<f64>,
}

impl OrbitTable {
    /// One row per vertex of a closed orbit.
    pub fn from_orbit(orbit: &OuterOrbit) -> Self {
        let rows = (0..orbit.n)
            .map(|i| OrbitRow {
                index: i,
                position: orbit.vertices[i],
                theta_tangency: orbit.thetas[i],
                alpha: orbit.alphas[i],
                beta: orbit.betas[i],
            })
            .collect();
        OrbitTable {
            rows,
            winding: Some(orbit.winding),
            closure_residual: Some(orbit.closure_residual),
        }
    }

    /// Open trajectory `x_0, ..., x_k` with the tangencies of each step;
    /// angles are NaN.
    pub fn from_trajectory(points: &[Vec2], thetas: &[f64]) -> Self {
        let rows = points
            .iter()
            .enumerate()
            .map(|(i, p)| OrbitRow {
                index: i,
                position: *p,
                theta_tangency: thetas.get(i).copied().unwrap_or(f64::NAN),
                alpha: f64::NAN,
                beta: f64::NAN,
            })
            .collect();
        let closure = match (points.first(), points.last()) {
            (Some(a), Some(b)) if points.len() > 1 => Some((a - b).norm()),
            _ => None,
        };
        OrbitTable {
            rows,
            winding: None,
            closure_residual: closure,
        }
    }

    pub fn positions(&self) -> Vec<Vec2> {
        self.rows.iter().map(|r| r.position).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(ORBIT_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.index,
                fmt_num(r.position.x),
                fmt_num(r.position.y),
                fmt_num(r.theta_tangency),
                fmt_num(r.alpha),
                fmt_num(r.beta)
            );
        }
        if let Some(m) = self.winding {
            let _ = writeln!(out, "# winding m={m}");
        }
        if let Some(c) = self.closure_residual {
            let _ = writeln!(out, "# closure_residual={}", fmt_num(c));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == ORBIT_HEADER => {}
            _ => {
                return Err(BilliardError::Parse(format!(
                    "orbit CSV must start with {ORBIT_HEADER:?}"
                )))
            }
        }
        let mut table = OrbitTable {
            rows: Vec::new(),
            winding: None,
            closure_residual: None,
        };
        for (i, line) in lines {
            let lineno = i + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                if let Some(v) = comment.strip_prefix("winding m=") {
                    table.winding = Some(v.trim().parse().map_err(|_| {
                        BilliardError::Parse(format!("line {lineno}: bad winding {v:?}"))
                    })?);
                } else if let Some(v) = comment.strip_prefix("closure_residual=") {
                    table.closure_residual = Some(parse_num(v, lineno)?);
                }
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(BilliardError::Parse(format!(
                    "line {lineno}: expected 6 fields, found {}",
                    f.len()
                )));
            }
            table.rows.push(OrbitRow {
                index: f[0]
                    .trim()
                    .parse()
                    .map_err(|_| BilliardError::Parse(format!("line {lineno}: bad index")))?,
                position: Vec2::new(parse_num(f[1], lineno)?, parse_num(f[2], lineno)?),
                theta_tangency: parse_num(f[3], lineno)?,
                alpha: parse_num(f[4], lineno)?,
                beta: parse_num(f[5], lineno)?,
            });
        }
        Ok(table)
    }
}

/// `index,t,x,y` with `t` the current parameter of each state.
pub fn symplectic_csv<P: Fn(f64) -> Vec2>(states: &[ChordState], point: P) -> String {
    let mut out = String::from("index,t,x,y\n");
    for (i, s) in states.iter().enumerate() {
        let p = point(s.t_cur);
        let _ = writeln!(
            out,
            "{i},{},{},{}",
            fmt_num(s.t_cur),
            fmt_num(p.x),
            fmt_num(p.y)
        );
    }
    out
}

/// `index,x1,...,x2n`.
pub fn ellipsoid_csv(points: &[DVector<f64>]) -> String {
    let dim = points.first().map_or(0, |p| p.len());
    let mut out = String::from("index");
    for k in 1..=dim {
        let _ = write!(out, ",x{k}");
    }
    out.push('\n');
    for (i, p) in points.iter().enumerate() {
        let _ = write!(out, "{i}");
        for v in p.iter() {
            let _ = write!(out, ",{}", fmt_num(*v));
        }
        out.push('\n');
    }
    out
}
