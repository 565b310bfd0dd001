use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

/// One row of a convergence table. `err` compares with the next finer row
/// and `order` compares consecutive errors; both are absent where the finer
/// data is missing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub n: usize,
    pub h: f64,
    pub lambdas: Vec<f64>,
    pub err: Option<f64>,
    pub order: Option<f64>,
}

/// `err(h) = |l(h) - l(h/2)| / l(h)`, `order(h) = log2(err(h) / err(h/2))`
/// for a sequence of successively halved meshes.
pub fn rate_rows(levels: &[usize], lambdas: &[Vec<f64>]) -> Result<Vec<RateRow>> {
    if levels.len() != lambdas.len() {
        return Err(Error::InvalidArgument("one eigenvalue list per level is required".into()));
    }
    for w in levels.windows(2) {
        if w[1] != 2 * w[0] {
            return Err(Error::InvalidArgument(format!(
                "levels must halve h successively, got n={} then n={}",
                w[0], w[1]
            )));
        }
    }
    let first = |i: usize| lambdas[i].first().copied().unwrap_or(f64::NAN);
    let errs: Vec<Option<f64>> = (0..levels.len())
        .map(|i| (i + 1 < levels.len()).then(|| (first(i) - first(i + 1)).abs() / first(i)))
        .collect();
    Ok((0..levels.len())
        .map(|i| RateRow {
            n: levels[i],
            h: 1.0 / levels[i] as f64,
            lambdas: lambdas[i].clone(),
            err: errs[i],
            order: match (errs[i], errs.get(i + 1).copied().flatten()) {
                (Some(a), Some(b)) => Some((a / b).log2()),
                _ => None,
            },
        })
        .collect())
}

/// CSV with columns `h, lambda_1..lambda_nev, err, order`; missing entries
/// are written as `-`.
pub fn write_rate_csv<W: Write>(rows: &[RateRow], mut w: W) -> Result<()> {
    let nev = rows.iter().map(|r| r.lambdas.len()).max().unwrap_or(0);
    let mut header = vec!["h".to_string()];
    header.extend((1..=nev).map(|i| format!("lambda_{i}")));
    header.push("err".into());
    header.push("order".into());
    writeln!(w, "{}", header.join(","))?;
    for r in rows {
        let mut cells = vec![format!("1/{}", r.n)];
        cells.extend((0..nev).map(|i| r.lambdas.get(i).map_or("-".into(), |l| format!("{l:.9}"))));
        cells.push(r.err.map_or("-".into(), |e| format!("{e:.8e}")));
        cells.push(r.order.map_or("-".into(), |o| format!("{o:.4}")));
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_and_order_definitions() {
        let l = [708.101988, 707.978763, 707.971973, 707.971564, 707.971528];
        let rows = rate_rows(&[4, 8, 16, 32, 64], &l.iter().map(|x| vec![*x]).collect::<Vec<_>>()).unwrap();
        // the listed eigenvalues carry 9 digits, so the recomputed errors
        // agree with the listed ones only to that resolution
        assert!((rows[0].err.unwrap() / 1.74021691e-4 - 1.0).abs() < 1e-5);
        assert!((rows[1].err.unwrap() / 9.59045415e-6 - 1.0).abs() < 1e-3);
        assert!((rows[0].order.unwrap() - 4.1815).abs() < 5e-4);
        assert!(rows[3].order.is_none() && rows[3].err.is_some());
        assert!(rows[4].err.is_none());
        assert!(rate_rows(&[4, 16], &[vec![1.0], vec![1.0]]).is_err());
        let mut buf = Vec::new();
        write_rate_csv(&rows, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("h,lambda_1,err,order\n1/4,708.101988000,"));
        assert!(s.trim_end().ends_with("-,-"));
    }
}
