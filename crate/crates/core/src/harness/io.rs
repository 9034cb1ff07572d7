//! Checkpoints, statistics CSV and atomic file output.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::dynamics::ChainState;
use crate::error::{Error, Result};
use crate::numtheory::Rational;

use super::sweep::fmt_f64;
use super::verify::Sample;

/// Writes `contents` to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::arg(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::Io(e)
    })
}

pub const STATS_HEADER: &str = "t,phase,avg_width,energy,w1_leb,mean_disp";

pub fn stats_csv(samples: &[Sample]) -> String {
    let mut s = String::from(STATS_HEADER);
    s.push('\n');
    for x in samples {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_f64(x.t),
            x.phase.as_str(),
            fmt_f64(x.avg_width),
            fmt_f64(x.energy),
            fmt_f64(x.w1_leb),
            fmt_f64(x.mean_disp),
        ));
    }
    s
}

const CHECKPOINT_MAGIC: &str = "# fk-ratchet checkpoint v1";

/// Header lines `p`, `q`, `time`, `model`, then one `index position` line per site.
pub fn checkpoint_string(state: &ChainState, model_hash: &str) -> String {
    let w = state.winding();
    let mut s = format!(
        "{CHECKPOINT_MAGIC}\np {}\nq {}\ntime {}\nmodel {model_hash}\n",
        w.p,
        w.q,
        fmt_f64(state.time())
    );
    for (i, x) in state.positions().iter().enumerate() {
        s.push_str(&format!("{i} {}\n", fmt_f64(*x)));
    }
    s
}

pub fn write_checkpoint(path: &Path, state: &ChainState, model_hash: &str) -> Result<()> {
    write_atomic(path, checkpoint_string(state, model_hash).as_bytes())
}

/// A checkpoint read back: the state and the model hash it was written with.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub state: ChainState,
    pub model_hash: String,
}

fn header<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, key: &str) -> Result<(usize, &'a str)> {
    let (n, line) = lines.next().ok_or_else(|| Error::Parse {
        line: 0,
        message: format!("checkpoint ends before `{key}`"),
    })?;
    let rest = line
        .strip_prefix(key)
        .and_then(|r| r.strip_prefix(' '))
        .ok_or_else(|| Error::Parse {
            line: n,
            message: format!("expected `{key} ...`"),
        })?;
    Ok((n, rest.trim()))
}

fn number<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse {
        line,
        message: format!("bad number `{s}`"),
    })
}

pub fn parse_checkpoint(text: &str) -> Result<Checkpoint> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, l)) if l == CHECKPOINT_MAGIC => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: "not a checkpoint file".into(),
            })
        }
    }
    let (n, p) = header(&mut lines, "p")?;
    let p: i64 = number(n, p)?;
    let (n, q) = header(&mut lines, "q")?;
    let q: i64 = number(n, q)?;
    let (n, t) = header(&mut lines, "time")?;
    let time: f64 = number(n, t)?;
    let (_, hash) = header(&mut lines, "model")?;
    let winding = Rational::new(p, q)?;
    if winding.p != p || winding.q != q {
        return Err(Error::Parse {
            line: 0,
            message: format!("winding {p}/{q} is not in lowest terms"),
        });
    }
    let mut positions = Vec::with_capacity(q.max(0) as usize);
    for (n, line) in lines {
        let (idx, x) = line.split_once(' ').ok_or_else(|| Error::Parse {
            line: n,
            message: "expected `index position`".into(),
        })?;
        let idx: usize = number(n, idx.trim())?;
        if idx != positions.len() {
            return Err(Error::Parse {
                line: n,
                message: format!("expected index {}, got {idx}", positions.len()),
            });
        }
        positions.push(number(n, x.trim())?);
    }
    Ok(Checkpoint {
        state: ChainState::new(positions, winding, time)?,
        model_hash: hash.to_string(),
    })
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    parse_checkpoint(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let s = ChainState::new(
            vec![0.1, 1.0 / 3.0, std::f64::consts::PI, -2.5e-17],
            Rational::new(3, 4).unwrap(),
            123.456,
        )
        .unwrap();
        let text = checkpoint_string(&s, "00ff00ff00ff00ff");
        let back = parse_checkpoint(&text).unwrap();
        assert_eq!(back.model_hash, "00ff00ff00ff00ff");
        assert_eq!(back.state.winding(), s.winding());
        assert_eq!(back.state.time().to_bits(), s.time().to_bits());
        for (a, b) in back.state.positions().iter().zip(s.positions()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn malformed_checkpoints_are_rejected() {
        assert!(parse_checkpoint("hello\n").is_err());
        let good = checkpoint_string(&ChainState::straight_line(Rational::new(1, 2).unwrap(), 0.0), "x");
        let truncated: String = good.lines().take(6).map(|l| format!("{l}\n")).collect();
        assert!(parse_checkpoint(&truncated).is_err());
        let skipped = good.replace("\n1 ", "\n2 ");
        assert!(matches!(parse_checkpoint(&skipped), Err(Error::Parse { .. })));
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
