use std::io::Write;

/// Bumped whenever a column is added, removed or renamed.
pub const SCHEMA_VERSION: u32 = 1;

/// Writes rows prefixed with the provenance columns `schema_version`, `config_hash`, `seed`.
pub struct CsvWriter<W: Write> {
    out: W,
    prefix: String,
    width: usize,
}

impl<W: Write> CsvWriter<W> {
    pub fn new(mut out: W, config_hash: &str, seed: u64, columns: &[&str]) -> std::io::Result<Self> {
        writeln!(out, "schema_version,config_hash,seed,{}", columns.join(","))?;
        Ok(CsvWriter {
            out,
            prefix: format!("{SCHEMA_VERSION},{config_hash},{seed}"),
            width: columns.len(),
        })
    }

    pub fn row(&mut self, fields: &[String]) -> std::io::Result<()> {
        assert_eq!(fields.len(), self.width, "row width does not match the header");
        writeln!(self.out, "{},{}", self.prefix, fields.join(","))
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Six significant digits in positional notation.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (5 - mag).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // rounding can carry into a new leading digit, e.g. 9.999996 -> 10.00000
    let digits = s.chars().filter(char::is_ascii_digit).skip_while(|&c| c == '0').count();
    if digits > 6 && decimals > 0 {
        format!("{x:.prec$}", prec = decimals - 1)
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.193512345), "0.193512");
        assert_eq!(sig6(8.538612), "8.53861");
        assert_eq!(sig6(123456.7), "123457");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(-0.000123456789), "-0.000123457");
        assert_eq!(sig6(9.9999996), "10.0000");
        assert_eq!(sig6(f64::INFINITY), "inf");
    }

    #[test]
    fn rows_carry_provenance() {
        let mut w = CsvWriter::new(Vec::new(), "abc", 7, &["x", "y"]).unwrap();
        w.row(&["1".into(), "2".into()]).unwrap();
        let text = String::from_utf8(w.finish().unwrap()).unwrap();
        assert_eq!(text, "schema_version,config_hash,seed,x,y\n1,abc,7,1,2\n");
    }
}
