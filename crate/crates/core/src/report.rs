//! Byte-stable CSV and JSON writers.
//!
//! CSV numbers use 12 significant digits in `%g` style; JSON numbers use
//! the shortest representation that round-trips.

use std::io::{self, Write};

use crate::approx::KSweepResult;
use crate::model::PathEnsemble;
use crate::oracle::DriftReport;
use crate::pricing::PriceReport;
use crate::solver::ValueSurface;

/// `%.{digits}g` formatting.
pub fn fmt_sig(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, v)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn g12(v: f64) -> String {
    fmt_sig(v, 12)
}

/// Columns `i,t,j,x,s,n,Y,Z,U,pi_hat`; `Z`, `U`, `pi_hat` are empty on the
/// terminal slice and `U` is empty after default.
pub fn write_surface_csv(surface: &ValueSurface, w: &mut impl Write) -> io::Result<()> {
    writeln!(w, "i,t,j,x,s,n,Y,Z,U,pi_hat")?;
    let xs = surface.space.nodes();
    let steps = surface.steps();
    for i in 0..=steps {
        let t = surface.model.grid.time(i);
        for n in [false, true] {
            let y = surface.y_slice(i, n);
            for (j, &x) in xs.iter().enumerate() {
                let s = surface.model.s0 * x.exp();
                let (z, u, pi) = if i < steps {
                    (
                        g12(surface.z_slice(i, n)[j]),
                        if n { String::new() } else { g12(surface.u_slice(i)[j]) },
                        g12(surface.pi_slice(i, n)[j]),
                    )
                } else {
                    Default::default()
                };
                writeln!(
                    w,
                    "{i},{},{j},{},{},{},{},{z},{u},{pi}",
                    g12(t),
                    g12(x),
                    g12(s),
                    n as u8,
                    g12(y[j])
                )?;
            }
        }
    }
    Ok(())
}

/// Columns `k,J0,runtime_ms`.
pub fn write_sweep_csv(sweep: &KSweepResult, w: &mut impl Write) -> io::Result<()> {
    writeln!(w, "k,J0,runtime_ms")?;
    for ((k, j), ms) in sweep.ks.iter().zip(&sweep.j0s).zip(&sweep.runtimes_ms) {
        writeln!(w, "{},{},{}", g12(*k), g12(*j), g12(*ms))?;
    }
    Ok(())
}

/// Columns `step,t,mean_increment,stderr`.
pub fn write_drift_csv(report: &DriftReport, w: &mut impl Write) -> io::Result<()> {
    writeln!(w, "step,t,mean_increment,stderr")?;
    for s in &report.steps {
        writeln!(w, "{},{},{},{}", s.step, g12(s.t), g12(s.mean_increment), g12(s.stderr))?;
    }
    Ok(())
}

/// Columns `path,step,t,W,N,S,X`.
pub fn write_paths_csv(ensemble: &PathEnsemble, w: &mut impl Write) -> io::Result<()> {
    writeln!(w, "path,step,t,W,N,S,X")?;
    for p in &ensemble.paths {
        for i in 0..p.s.len() {
            writeln!(
                w,
                "{},{i},{},{},{},{},{}",
                p.index,
                g12(ensemble.grid.time(i)),
                g12(p.w[i]),
                p.n[i],
                g12(p.s[i]),
                g12(p.x[i])
            )?;
        }
    }
    Ok(())
}

pub fn write_price_json(report: &PriceReport, w: &mut impl Write) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *w, report).map_err(io::Error::other)?;
    writeln!(w)
}
