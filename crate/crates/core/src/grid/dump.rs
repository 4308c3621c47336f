//! Line-oriented text dump of a grid with per-cell field averages.
//!
//! ```text
//! # steinrelax-dump 1
//! # base <roots per side>
//! # fields <N-1>
//! # terminal <x> <y>            (one line per terminal, may be absent)
//! # columns level i j h v1x v1y ... density
//! <level> <i> <j> <h> <v1x> <v1y> ... <density>
//! ```
//!
//! Records are sorted by `(level, i, j)`. Numbers use Rust's shortest
//! round-trip formatting so a dump read back is bit-identical.

use std::fmt::Write as _;

use super::{CellAddr, FieldStack, QuadGrid};
use crate::error::{Error, Result};

const MAGIC: &str = "# steinrelax-dump 1";

#[derive(Clone, Debug, PartialEq)]
pub struct DumpCell {
    pub addr: CellAddr,
    pub h: f64,
    /// Cell-averaged vector of every field.
    pub fields: Vec<[f64; 2]>,
    /// Energy per unit area.
    pub density: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridDump {
    pub base: u32,
    pub n_fields: usize,
    pub terminals: Vec<[f64; 2]>,
    pub cells: Vec<DumpCell>,
}

impl GridDump {
    pub fn new(grid: &QuadGrid, fields: &FieldStack, density: &[f64], terminals: &[[f64; 2]]) -> Result<Self> {
        fields.check_grid(grid)?;
        if density.len() != grid.n_cells() {
            return Err(Error::DimensionMismatch(format!(
                "{} densities for {} cells",
                density.len(),
                grid.n_cells()
            )));
        }
        let mut cells: Vec<DumpCell> = (0..grid.n_cells())
            .map(|k| DumpCell {
                addr: grid.cell(k),
                h: grid.h(k),
                fields: (0..fields.n_fields).map(|i| fields.cell_average(grid, k, i)).collect(),
                density: density[k],
            })
            .collect();
        cells.sort_by_key(|c| c.addr);
        Ok(GridDump {
            base: grid.base(),
            n_fields: fields.n_fields,
            terminals: terminals.to_vec(),
            cells,
        })
    }

    pub fn grid(&self) -> Result<QuadGrid> {
        QuadGrid::from_leaves(self.base, self.cells.iter().map(|c| c.addr).collect())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(MAGIC);
        s.push('\n');
        let _ = writeln!(s, "# base {}", self.base);
        let _ = writeln!(s, "# fields {}", self.n_fields);
        for t in &self.terminals {
            let _ = writeln!(s, "# terminal {} {}", t[0], t[1]);
        }
        s.push_str("# columns level i j h");
        for i in 1..=self.n_fields {
            let _ = write!(s, " v{i}x v{i}y");
        }
        s.push_str(" density\n");
        for c in &self.cells {
            let _ = write!(s, "{} {} {} {}", c.addr.level, c.addr.i, c.addr.j, c.h);
            for v in &c.fields {
                let _ = write!(s, " {} {}", v[0], v[1]);
            }
            let _ = writeln!(s, " {}", c.density);
        }
        s
    }
}

pub fn write_dump(path: &std::path::Path, dump: &GridDump) -> Result<()> {
    std::fs::write(path, dump.to_text())?;
    Ok(())
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    tok.and_then(|t| t.parse().ok()).ok_or_else(|| Error::Parse {
        line,
        msg: format!("expected {what}"),
    })
}

pub fn read_dump(text: &str) -> Result<GridDump> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l.trim()));
    match lines.next() {
        Some((_, MAGIC)) => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: "missing dump header".into(),
            })
        }
    }
    let mut base = None;
    let mut n_fields = None;
    let mut terminals = Vec::new();
    let mut cells = Vec::new();
    for (ln, line) in lines {
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let mut tok = rest.split_whitespace();
            match tok.next() {
                Some("base") => base = Some(parse_num::<u32>(tok.next(), ln, "base")?),
                Some("fields") => n_fields = Some(parse_num::<usize>(tok.next(), ln, "field count")?),
                Some("terminal") => {
                    let x = parse_num(tok.next(), ln, "x")?;
                    let y = parse_num(tok.next(), ln, "y")?;
                    terminals.push([x, y]);
                }
                _ => {}
            }
            continue;
        }
        let n = n_fields.ok_or(Error::Parse {
            line: ln,
            msg: "cell record before field count".into(),
        })?;
        let mut tok = line.split_whitespace();
        let level = parse_num(tok.next(), ln, "level")?;
        let i = parse_num(tok.next(), ln, "i")?;
        let j = parse_num(tok.next(), ln, "j")?;
        let h = parse_num(tok.next(), ln, "h")?;
        let mut fields = Vec::with_capacity(n);
        for _ in 0..n {
            let x = parse_num(tok.next(), ln, "field x")?;
            let y = parse_num(tok.next(), ln, "field y")?;
            fields.push([x, y]);
        }
        let density = parse_num(tok.next(), ln, "density")?;
        if tok.next().is_some() {
            return Err(Error::Parse {
                line: ln,
                msg: "trailing values".into(),
            });
        }
        cells.push(DumpCell {
            addr: CellAddr::new(level, i, j),
            h,
            fields,
            density,
        });
    }
    let base = base.ok_or(Error::Parse {
        line: 0,
        msg: "missing base".into(),
    })?;
    let n_fields = n_fields.ok_or(Error::Parse {
        line: 0,
        msg: "missing field count".into(),
    })?;
    Ok(GridDump {
        base,
        n_fields,
        terminals,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let g = QuadGrid::build_uniform(3).unwrap();
        let mut v = FieldStack::for_grid(&g, 2);
        for (k, x) in v.values.iter_mut().enumerate() {
            *x = (k as f64).sin() / 3.0;
        }
        let density: Vec<f64> = (0..g.n_cells()).map(|k| k as f64 * 0.1).collect();
        let d = GridDump::new(&g, &v, &density, &[[0.2, 0.3], [0.7, 0.9]]).unwrap();
        let text = d.to_text();
        let back = read_dump(&text).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.to_text(), text);
        assert_eq!(back.grid().unwrap(), g);
    }

    #[test]
    fn malformed_lines_are_reported() {
        let bad = "# steinrelax-dump 1\n# base 2\n# fields 1\n0 0 0 0.5 1 2\n";
        match read_dump(bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        assert!(read_dump("hello").is_err());
    }
}
