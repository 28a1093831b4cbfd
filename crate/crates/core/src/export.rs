//! CSV writers for graphs, histograms and survival curves.
//!
//! Reals are written with 17 significant digits so a parse gives back the same bits.

use std::io::{self, Write};

use crate::degrees::DegreeHistogram;
use crate::generator::Digraph;
use crate::percolation::SurvivalCurve;

pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

/// `src,dst,kind`, one row per arc in source order.
pub fn write_edges_csv<W: Write>(g: &Digraph, mut w: W) -> io::Result<()> {
    writeln!(w, "src,dst,kind")?;
    for (s, a) in g.arcs() {
        writeln!(w, "{s},{},{}", a.target, a.kind.as_str())?;
    }
    Ok(())
}

/// `id,x0..x{d-1},birth`.
pub fn write_vertices_csv<W: Write>(g: &Digraph, dim: usize, mut w: W) -> io::Result<()> {
    let mut header = String::from("id");
    for i in 0..dim {
        header.push_str(&format!(",x{i}"));
    }
    writeln!(w, "{header},birth")?;
    for v in g.vertices() {
        let mut line = v.id.to_string();
        for &x in &v.location {
            line.push(',');
            line.push_str(&real(x));
        }
        writeln!(w, "{line},{}", real(v.birth))?;
    }
    Ok(())
}

/// `k,count,frequency`.
pub fn write_histogram_csv<W: Write>(h: &DegreeHistogram, mut w: W) -> io::Result<()> {
    writeln!(w, "k,count,frequency")?;
    for (k, c, f) in h.rows() {
        writeln!(w, "{k},{c},{}", real(f))?;
    }
    Ok(())
}

/// `beta,survival,ci_low,ci_high,reps,volume,threshold`.
pub fn write_survival_csv<W: Write>(curve: &SurvivalCurve, mut w: W) -> io::Result<()> {
    writeln!(w, "beta,survival,ci_low,ci_high,reps,volume,threshold")?;
    for (b, s, lo, hi, reps, vol, thr) in curve.rows() {
        writeln!(w, "{},{},{},{},{reps},{},{thr}", real(b), real(s), real(lo), real(hi), real(vol))?;
    }
    Ok(())
}
