use std::fmt::Write;

use crate::predictor::StepRecord;

/// `n,x,y,correct,gamma_bar,xbar_0,...,xbar_{d-1},dist,shortfall,case`
pub fn trace_header(d: usize) -> String {
    let mut h = String::from("n,x,y,correct,gamma_bar");
    for l in 0..d {
        write!(h, ",xbar_{l}").unwrap();
    }
    h.push_str(",dist,shortfall,case");
    h
}

pub fn trace_row(rec: &StepRecord) -> String {
    let mut row = format!(
        "{},{},{},{},{}",
        rec.n,
        rec.x,
        rec.y,
        u8::from(rec.correct),
        format_float(rec.gamma_bar)
    );
    for x in &rec.xbar {
        row.push(',');
        row.push_str(&format_float(*x));
    }
    write!(
        row,
        ",{},{},{}",
        format_float(rec.dist_to_target),
        format_float(rec.shortfall),
        rec.case.as_str()
    )
    .unwrap();
    row
}

/// Plain decimal notation with 17 significant digits.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return format!("{:.16}", 0.0);
    }
    // the exponent after rounding to 17 significant digits
    let sci = format!("{x:.16e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    let decimals = (16 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}
