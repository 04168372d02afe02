//! CSV artifacts. Floats use the shortest round-trip representation, so equal
//! inputs give byte-identical files.

use crate::error::Result;
use crate::frames::FrameReport;
use crate::hilbert::CVector;
use crate::weights::{Constant, LevelScan, RmSweep};

fn write(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| crate::Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn f(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn names(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

/// `n, re_0, im_0, re_1, im_1, …`
pub fn aux_csv(vectors: &[CVector]) -> Result<String> {
    let dim = vectors.first().map_or(0, |v| v.len());
    let mut header = vec!["n".to_string()];
    for j in 0..dim {
        header.push(format!("re_{j}"));
        header.push(format!("im_{j}"));
    }
    write(
        &header,
        vectors.iter().enumerate().map(|(n, v)| {
            let mut row = vec![n.to_string()];
            for z in v.iter() {
                row.push(f(z.re));
                row.push(f(z.im));
            }
            row
        }),
    )
}

/// `horizon, A, B, tail_indicator`
pub fn bounds_csv(reports: &[FrameReport]) -> Result<String> {
    write(
        &names(&["horizon", "A", "B", "tail_indicator"]),
        reports.iter().map(|r| {
            vec![r.horizon.to_string(), f(r.lower_bound), f(r.upper_bound), f(r.tail_indicator)]
        }),
    )
}

/// `M, norm`
pub fn rm_csv(sweep: &RmSweep) -> Result<String> {
    write(&names(&["M", "norm"]), sweep.points.iter().map(|(m, n)| vec![m.to_string(), f(*n)]))
}

fn constant(c: Constant) -> String {
    match c {
        Constant::Finite(v) => f(v),
        Constant::Infinite => "inf".into(),
    }
}

/// `level, constant, argmax_a, argmax_b`; divergent levels are written `inf`.
pub fn a2_csv(levels: &[LevelScan]) -> Result<String> {
    write(
        &names(&["level", "constant", "argmax_a", "argmax_b"]),
        levels.iter().map(|l| vec![l.level.to_string(), constant(l.constant), f(l.argmax.0), f(l.argmax.1)]),
    )
}

/// `M, B_orbit, B_fourier`
pub fn growth_csv(curve: &[(usize, f64, f64)]) -> Result<String> {
    write(
        &names(&["M", "B_orbit", "B_fourier"]),
        curve.iter().map(|(m, a, b)| vec![m.to_string(), f(*a), f(*b)]),
    )
}

/// `n, residual, parseval_defect`
pub fn effectiveness_csv(curve: &[(usize, f64, f64)]) -> Result<String> {
    write(
        &names(&["n", "residual", "parseval_defect"]),
        curve.iter().map(|(n, r, d)| vec![n.to_string(), f(*r), f(*d)]),
    )
}

/// `M, A, B` for truncated exponential families.
pub fn exp_bounds_csv(curve: &[(usize, f64, f64)]) -> Result<String> {
    write(
        &names(&["M", "A", "B"]),
        curve.iter().map(|(m, a, b)| vec![m.to_string(), f(*a), f(*b)]),
    )
}

/// `index, re, im`
pub fn vector_csv(x: &CVector) -> Result<String> {
    write(
        &names(&["index", "re", "im"]),
        x.iter().enumerate().map(|(i, z)| vec![i.to_string(), f(z.re), f(z.im)]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::complexify;

    #[test]
    fn aux_layout() {
        let v = vec![complexify(&[1.0, 1.0]), complexify(&[1.0, -1.0]), complexify(&[0.0, 0.0])];
        let csv = aux_csv(&v).unwrap();
        assert_eq!(csv, "n,re_0,im_0,re_1,im_1\n0,1,0,1,0\n1,1,0,-1,0\n2,0,0,0,0\n");
    }

    #[test]
    fn a2_marks_divergence() {
        let levels = vec![
            LevelScan { level: 0, constant: Constant::Finite(1.0), argmax: (0.0, 1.0) },
            LevelScan { level: 1, constant: Constant::Infinite, argmax: (0.0, 0.5) },
        ];
        assert_eq!(a2_csv(&levels).unwrap(), "level,constant,argmax_a,argmax_b\n0,1,0,1\n1,inf,0,0.5\n");
    }

    #[test]
    fn floats_round_trip() {
        let x = 0.1 + 0.2;
        let csv = growth_csv(&[(3, x, 1.0 / 3.0)]).unwrap();
        let line = csv.lines().nth(1).unwrap();
        let parsed: Vec<f64> = line.split(',').skip(1).map(|s| s.parse().unwrap()).collect();
        assert_eq!(parsed, vec![x, 1.0 / 3.0]);
    }
}
