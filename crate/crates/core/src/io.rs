//! Curve, geodesic and match documents.
//!
//! Curves are JSON documents
//! `{"space": "rd"|"so_n"|"s2", "dimension": d, "closed": bool, "points": [[...], ...]}`
//! or CSV files with one R^d point per line. Floats are written in shortest
//! round-trip form, so parsing a written document gives back the same bits.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::curve::SampledCurve;
use crate::error::{Error, Result};
use crate::lie::{ensure_rotation, PROJECTION_TOL};
use crate::procrustes::orthogonality_defect;
use crate::sphere::SPHERE_PROJECTION_TOL;
use crate::stats::Space;
use crate::warp::Reparametrization;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceName {
    Rd,
    SoN,
    S2,
}

impl SpaceName {
    /// Default comparison space for documents of this kind.
    pub fn space(self) -> Space {
        match self {
            SpaceName::Rd => Space::Rd,
            SpaceName::SoN => Space::SoN,
            SpaceName::S2 => Space::S2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SpaceName::Rd => "rd",
            SpaceName::SoN => "so_n",
            SpaceName::S2 => "s2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveDocument {
    pub space: SpaceName,
    /// `d` for rd, `n` for so_n, 3 for s2.
    pub dimension: usize,
    pub closed: bool,
    /// One row per sample; so_n rows are row-major flattened matrices.
    pub points: Vec<Vec<f64>>,
}

impl CurveDocument {
    pub fn from_curve(space: SpaceName, c: &SampledCurve) -> Self {
        let dimension = match space {
            SpaceName::SoN => (c.dim() as f64).sqrt().round() as usize,
            _ => c.dim(),
        };
        Self {
            space,
            dimension,
            closed: c.is_closed(),
            points: c.points().map(|p| p.to_vec()).collect(),
        }
    }

    pub fn to_curve(&self) -> Result<SampledCurve> {
        SampledCurve::from_points(&self.points, self.closed)
    }

    fn row_len(&self) -> usize {
        match self.space {
            SpaceName::SoN => self.dimension * self.dimension,
            _ => self.dimension,
        }
    }

    /// Checks shapes and per-space sample constraints, snapping samples
    /// that are within tolerance onto the sphere or SO(n).
    pub fn validate(mut self) -> Result<Self> {
        if self.dimension == 0 {
            return Err(Error::Validation("dimension must be positive".into()));
        }
        if self.space == SpaceName::S2 && self.dimension != 3 {
            return Err(Error::Validation(format!("s2 curves have dimension 3, got {}", self.dimension)));
        }
        if self.points.len() < 2 {
            return Err(Error::Validation(format!("need at least 2 points, got {}", self.points.len())));
        }
        let len = self.row_len();
        for (i, p) in self.points.iter().enumerate() {
            if p.len() != len {
                return Err(Error::Validation(format!("point {i} has {} values, expected {len}", p.len())));
            }
            if let Some(j) = p.iter().position(|x| !x.is_finite()) {
                return Err(Error::Validation(format!("point {i} value {j} is not finite")));
            }
        }
        match self.space {
            SpaceName::Rd => {}
            SpaceName::S2 => {
                for (i, p) in self.points.iter_mut().enumerate() {
                    let r = p.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if !((r - 1.0).abs() < SPHERE_PROJECTION_TOL) {
                        return Err(Error::Validation(format!("point {i} has norm {r}; s2 samples must be unit vectors")));
                    }
                    if (r - 1.0).abs() >= 1e-10 {
                        for x in p.iter_mut() {
                            *x /= r;
                        }
                    }
                }
            }
            SpaceName::SoN => {
                let n = self.dimension;
                for (i, p) in self.points.iter_mut().enumerate() {
                    let m = DMatrix::from_row_slice(n, n, p);
                    let fixed = ensure_rotation(&m).map_err(|_| {
                        Error::Validation(format!(
                            "point {i} is not a rotation (orthogonality defect {:e}, determinant {}, tolerance {PROJECTION_TOL:e})",
                            orthogonality_defect(&m),
                            m.determinant()
                        ))
                    })?;
                    if fixed != m {
                        *p = fixed.transpose().iter().copied().collect();
                    }
                }
            }
        }
        Ok(self)
    }
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        field: None,
        message: e.to_string(),
    }
}

/// Reads a JSON curve document or, when the text does not start with `{`,
/// CSV rows of an open R^d curve.
pub fn parse_curve_file(bytes: &[u8]) -> Result<CurveDocument> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        line: 1 + bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count(),
        field: None,
        message: "input is not valid UTF-8".into(),
    })?;
    let doc = if text.trim_start().starts_with('{') {
        serde_json::from_str::<CurveDocument>(text).map_err(json_error)?
    } else {
        parse_csv(text)?
    };
    doc.validate()
}

fn parse_csv(text: &str) -> Result<CurveDocument> {
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .enumerate()
            .map(|(j, field)| {
                field.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line: i + 1,
                    field: Some(j + 1),
                    message: format!("{:?}: {e}", field.trim()),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        points.push(row);
    }
    let dimension = points.first().map_or(0, |p| p.len());
    Ok(CurveDocument {
        space: SpaceName::Rd,
        dimension,
        closed: false,
        points,
    })
}

/// One point per line, comma separated, shortest round-trip floats.
pub fn write_curve_csv(c: &SampledCurve) -> String {
    let mut out = String::new();
    for p in c.points() {
        let row: Vec<String> = p.iter().map(|x| format!("{x:?}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_curve(doc: &CurveDocument) -> String {
    serde_json::to_string(doc).expect("curve documents serialize") + "\n"
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeodesicDocument {
    pub times: Vec<f64>,
    pub curves: Vec<CurveDocument>,
}

pub fn write_geodesic(doc: &GeodesicDocument) -> String {
    serde_json::to_string(doc).expect("geodesic documents serialize") + "\n"
}

pub fn parse_geodesic(bytes: &[u8]) -> Result<GeodesicDocument> {
    let doc: GeodesicDocument = serde_json::from_slice(bytes).map_err(json_error)?;
    if doc.times.len() != doc.curves.len() {
        return Err(Error::Validation(format!("{} times for {} curves", doc.times.len(), doc.curves.len())));
    }
    let curves = doc.curves.into_iter().map(CurveDocument::validate).collect::<Result<Vec<_>>>()?;
    Ok(GeodesicDocument { times: doc.times, curves })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchDocument {
    pub distance: f64,
    /// Nodes `[u, γ(u)]` of the piecewise-linear warp.
    pub gamma: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<Vec<Vec<f64>>>,
    pub seed_shift: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber_angle: Option<f64>,
}

impl MatchDocument {
    pub fn new(distance: f64, gamma: &Reparametrization, rotation: Option<&DMatrix<f64>>, seed_shift: usize) -> Self {
        Self {
            distance,
            gamma: gamma.nodes().iter().map(|&(u, g)| [u, g]).collect(),
            rotation: rotation.map(|r| r.row_iter().map(|row| row.iter().copied().collect()).collect()),
            seed_shift,
            fiber_angle: None,
        }
    }

    pub fn gamma(&self) -> Result<Reparametrization> {
        Reparametrization::new(self.gamma.iter().map(|p| (p[0], p[1])).collect())
    }
}

pub fn write_match(doc: &MatchDocument) -> String {
    serde_json::to_string(doc).expect("match documents serialize") + "\n"
}

pub fn parse_match(bytes: &[u8]) -> Result<MatchDocument> {
    serde_json::from_slice(bytes).map_err(json_error)
}

/// Distance matrix as CSV: a header row of names, then one row per curve.
pub fn write_matrix_csv(names: &[String], values: &DMatrix<f64>) -> String {
    let mut out = names.join(",");
    out.push('\n');
    for row in values.row_iter() {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// `x` with `digits` significant digits in the style of C's `%g`:
/// fixed notation for moderate exponents, scientific otherwise, trailing
/// zeros removed.
pub fn format_sig(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_examples() {
        let json = br#"{"space":"rd","dimension":2,"closed":false,"points":[[0,0],[1,0]]}"#;
        let a = parse_curve_file(json).unwrap();
        let b = parse_curve_file(b"0,0\n1,0\n").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_curve().unwrap().intervals(), 1);

        let bad = br#"{"space":"s2","dimension":3,"closed":false,"points":[[0,0,1],[0,0,1.5]]}"#;
        assert!(matches!(parse_curve_file(bad), Err(Error::Validation(_))));
        let near = br#"{"space":"s2","dimension":3,"closed":false,"points":[[0,0,1.0000001],[0,1,0]]}"#;
        let doc = parse_curve_file(near).unwrap();
        assert_eq!(doc.points[0], vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn parse_errors_have_locus() {
        match parse_curve_file(b"0,0\n1,x\n") {
            Err(Error::Parse { line: 2, field: Some(2), .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_curve_file(b"{\"space\":\"rd\",\n\"dimension\":2,\n\"closed\":0}") {
            Err(Error::Parse { line: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_curve_file(b"0,0\n1,0,2\n"), Err(Error::Validation(_))));
        assert!(matches!(
            parse_curve_file(br#"{"space":"so_n","dimension":2,"closed":false,"points":[[1,0,0,1],[2,0,0,1]]}"#),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn rotations_are_snapped() {
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let text = format!(
            r#"{{"space":"so_n","dimension":2,"closed":false,"points":[[1,0,0,1],[{},{},{},{}]]}}"#,
            c + 1e-8,
            -s,
            s,
            c
        );
        let doc = parse_curve_file(text.as_bytes()).unwrap();
        let m = DMatrix::from_row_slice(2, 2, &doc.points[1]);
        assert!(orthogonality_defect(&m) < 1e-14);
        assert!((m[(0, 1)] + s).abs() < 1e-8);
    }

    #[test]
    fn geodesic_document_roundtrip() {
        let seg = |len: f64| SampledCurve::from_fn(4, false, |u| vec![len * u, 0.0]).unwrap();
        let path = crate::shape::geodesic_open(&seg(1.0), &seg(4.0), 2).unwrap();
        let doc = GeodesicDocument {
            times: path.times.clone(),
            curves: path.curves.iter().map(|c| CurveDocument::from_curve(SpaceName::Rd, c)).collect(),
        };
        let text = write_geodesic(&doc);
        let back = parse_geodesic(text.as_bytes()).unwrap();
        assert_eq!(back, doc);
        assert!((back.curves[1].to_curve().unwrap().length() - 2.25).abs() < 1e-13);
    }

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(0.0, 12), "0");
        assert_eq!(format_sig(1.0, 12), "1");
        assert_eq!(format_sig(2f64.sqrt(), 12), "1.41421356237");
        assert_eq!(format_sig(1.0 / 3.0 * 1e-6, 12), "3.33333333333e-07");
        assert_eq!(format_sig(123456789012345.0, 12), "1.23456789012e+14");
        assert_eq!(format_sig(0.000123, 12), "0.000123");
        assert_eq!(format_sig(-2.5, 12), "-2.5");
        assert_eq!(format_sig(999999999999.5, 12), "1e+12");
    }

    proptest! {
        #[test]
        fn curve_roundtrip_is_lossless(vals in proptest::collection::vec(-1e6f64..1e6, 2..40), closed: bool) {
            let n = vals.len() / 2 * 2;
            prop_assume!(n >= 4);
            let c = SampledCurve::new(2, vals[..n].to_vec(), closed).unwrap();
            let doc = CurveDocument::from_curve(SpaceName::Rd, &c);
            let back = parse_curve_file(write_curve(&doc).as_bytes()).unwrap();
            prop_assert_eq!(back.to_curve().unwrap(), c.clone());
            let csv = parse_curve_file(write_curve_csv(&c).as_bytes()).unwrap();
            let csv = csv.to_curve().unwrap();
            prop_assert_eq!(csv.as_slice(), c.as_slice());
        }
    }
}
