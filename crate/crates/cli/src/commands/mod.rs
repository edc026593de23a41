pub mod bench;
pub mod export;
pub mod learn;
pub mod serve;
pub mod simulate;
pub mod solve;

use crate::Format;

/// Renders rows as tab-separated text or CSV.
pub fn render(header: &[&str], rows: &[Vec<String>], format: Format) -> String {
    let sep = match format {
        Format::Text => "\t",
        Format::Csv => ",",
    };
    let mut out = header.join(sep);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(sep));
        out.push('\n');
    }
    out
}

pub fn extension(format: Format) -> &'static str {
    match format {
        Format::Text => "txt",
        Format::Csv => "csv",
    }
}

pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}
