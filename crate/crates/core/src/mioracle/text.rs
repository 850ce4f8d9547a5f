//! Plain-text world format, one directive per line, `#` comments:
//!
//! ```text
//! pixels 3
//! values 2
//! classes 2
//! drop 2
//! explainer e0 0.5
//! p 0 0 1 0 0.25          # pixel values, class, probability
//! rank e0 * : 2 0 1       # `*` covers every x without its own row
//! rank e0 0 0 1 : 2 1 0
//! ```

use std::collections::HashMap;
use std::fmt::Write;

use super::DiscreteWorld;
use crate::error::{Error, Result};

fn syntax(line: usize, message: impl Into<String>) -> Error {
    Error::Syntax { line, message: message.into() }
}

fn nums<T: std::str::FromStr>(line: usize, toks: &[&str]) -> Result<Vec<T>> {
    toks.iter().map(|t| t.parse().map_err(|_| syntax(line, format!("cannot parse {t:?}")))).collect()
}

pub fn parse_world(text: &str) -> Result<DiscreteWorld> {
    let mut header: HashMap<&str, usize> = HashMap::new();
    let mut explainers: Vec<(String, f64)> = Vec::new();
    let mut probs: Vec<(usize, Vec<usize>, usize, f64)> = Vec::new();
    let mut ranks: Vec<(usize, String, Option<Vec<usize>>, Vec<usize>)> = Vec::new();
    let get = |h: &HashMap<&str, usize>, k: &str, line: usize| {
        h.get(k).copied().ok_or_else(|| syntax(line, format!("`{k}` must be declared first")))
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        let toks: Vec<&str> = body.split_whitespace().collect();
        let Some((&head, rest)) = toks.split_first() else { continue };
        match head {
            "pixels" | "values" | "classes" | "drop" => {
                let [v] = rest else { return Err(syntax(line, format!("`{head}` takes one integer"))) };
                let v = v.parse().map_err(|_| syntax(line, format!("bad integer {v:?}")))?;
                if header.insert(head, v).is_some() {
                    return Err(syntax(line, format!("`{head}` declared twice")));
                }
            }
            "explainer" => {
                let [name, p] = rest else { return Err(syntax(line, "`explainer` takes a name and a probability")) };
                if explainers.iter().any(|(n, _)| n == name) {
                    return Err(syntax(line, format!("explainer {name} declared twice")));
                }
                let p = p.parse().map_err(|_| syntax(line, format!("bad probability {p:?}")))?;
                explainers.push((name.to_string(), p));
            }
            "p" => {
                let n = get(&header, "pixels", line)?;
                if rest.len() != n + 2 {
                    return Err(syntax(line, format!("`p` needs {n} pixel values, a class and a probability")));
                }
                let x = nums(line, &rest[..n])?;
                let y = nums::<usize>(line, &rest[n..n + 1])?[0];
                let p = nums::<f64>(line, &rest[n + 1..])?[0];
                probs.push((line, x, y, p));
            }
            "rank" => {
                let n = get(&header, "pixels", line)?;
                let colon = rest.iter().position(|&t| t == ":").ok_or_else(|| syntax(line, "`rank` needs `:`"))?;
                let (lhs, perm) = (&rest[..colon], &rest[colon + 1..]);
                let Some((name, x)) = lhs.split_first() else { return Err(syntax(line, "`rank` needs an explainer name")) };
                let x = match x {
                    ["*"] => None,
                    x if x.len() == n => Some(nums(line, x)?),
                    _ => return Err(syntax(line, format!("`rank` needs `*` or {n} pixel values"))),
                };
                ranks.push((line, name.to_string(), x, nums(line, perm)?));
            }
            other => return Err(syntax(line, format!("unknown directive {other:?}"))),
        }
    }
    let end = text.lines().count().max(1);
    let pixels = get(&header, "pixels", end)?;
    let classes = get(&header, "classes", end)?;
    let values = get(&header, "values", end)?;
    let drop = get(&header, "drop", end)?;

    let mut xs: Vec<Vec<usize>> = Vec::new();
    let mut p_xy: Vec<Vec<f64>> = Vec::new();
    for (line, x, y, p) in probs {
        if y >= classes {
            return Err(syntax(line, format!("class {y} out of range")));
        }
        let i = match xs.iter().position(|e| *e == x) {
            Some(i) => i,
            None => {
                xs.push(x);
                p_xy.push(vec![0.0; classes]);
                xs.len() - 1
            }
        };
        p_xy[i][y] += p;
    }
    let mut rankings: Vec<Vec<Option<Vec<usize>>>> = vec![vec![None; xs.len()]; explainers.len()];
    let mut defaults: Vec<Option<Vec<usize>>> = vec![None; explainers.len()];
    for (line, name, x, perm) in ranks {
        let e = explainers.iter().position(|(n, _)| *n == name).ok_or_else(|| syntax(line, format!("unknown explainer {name}")))?;
        let slot = match x {
            None => &mut defaults[e],
            Some(x) => {
                let i = xs.iter().position(|e| *e == x).ok_or_else(|| syntax(line, format!("x {x:?} has no `p` row")))?;
                &mut rankings[e][i]
            }
        };
        if slot.replace(perm).is_some() {
            return Err(syntax(line, "ranking given twice"));
        }
    }
    let rankings = rankings
        .into_iter()
        .zip(&defaults)
        .zip(&explainers)
        .map(|((table, default), (name, _))| {
            table
                .into_iter()
                .zip(&xs)
                .map(|(r, x)| {
                    r.or_else(|| default.clone()).ok_or_else(|| Error::invalid(format!("explainer {name} has no ranking for x {x:?}")))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let world = DiscreteWorld { pixels, values, classes, drop, explainers, xs, p_xy, rankings };
    world.validate()?;
    Ok(world)
}

/// Writes a world in the format read by [`parse_world`]; explicit ranking
/// rows for every x, zero-probability cells omitted.
pub fn format_world(world: &DiscreteWorld) -> String {
    let join = |v: &[usize]| v.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(" ");
    let mut out = String::new();
    let _ = writeln!(out, "pixels {}\nvalues {}\nclasses {}\ndrop {}", world.pixels, world.values, world.classes, world.drop);
    for (name, p) in &world.explainers {
        let _ = writeln!(out, "explainer {name} {p}");
    }
    for (x, row) in world.xs.iter().zip(&world.p_xy) {
        for (y, p) in row.iter().enumerate().filter(|(_, p)| **p > 0.0) {
            let _ = writeln!(out, "p {} {y} {p}", join(x));
        }
    }
    for ((name, _), table) in world.explainers.iter().zip(&world.rankings) {
        for ((x, r), row) in world.xs.iter().zip(table).zip(&world.p_xy) {
            if row.iter().all(|&p| p <= 0.0) {
                continue;
            }
            let _ = writeln!(out, "rank {name} {} : {}", join(x), join(r));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mioracle::{default_world, random_world};

    #[test]
    fn round_trip() {
        for w in [default_world(), random_world(3), random_world(9)] {
            // Rows with all-zero probability vanish on output.
            let mut expected = w.clone();
            let keep: Vec<bool> = w.p_xy.iter().map(|r| r.iter().any(|&p| p > 0.0)).collect();
            let filt = |v: &Vec<Vec<usize>>| v.iter().zip(&keep).filter(|(_, k)| **k).map(|(x, _)| x.clone()).collect::<Vec<_>>();
            expected.xs = filt(&w.xs);
            expected.p_xy = w.p_xy.iter().zip(&keep).filter(|(_, k)| **k).map(|(r, _)| r.clone()).collect();
            expected.rankings = w.rankings.iter().map(filt).collect();
            assert_eq!(parse_world(&format_world(&w)).unwrap(), expected);
        }
    }

    #[test]
    fn wildcard_rank_and_comments() {
        let text = "# tiny\npixels 2\nvalues 2\nclasses 2\ndrop 1\nexplainer a 1\np 0 0 0 0.5\np 1 1 1 0.5 # second\nrank a * : 1 0\nrank a 1 1 : 0 1\n";
        let w = parse_world(text).unwrap();
        assert_eq!(w.rankings[0], vec![vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = "pixels 2\nvalues 2\nclasses 2\ndrop 1\nexplainer a 1\np 0 0 0 x\n";
        assert!(matches!(parse_world(bad), Err(Error::Syntax { line: 6, .. })));
        let unknown = "pixels 2\nfrob 1\n";
        assert!(matches!(parse_world(unknown), Err(Error::Syntax { line: 2, .. })));
        let missing_rank = "pixels 2\nvalues 2\nclasses 2\ndrop 1\nexplainer a 1\np 0 0 0 1\n";
        assert!(matches!(parse_world(missing_rank), Err(Error::InvalidInput(_))));
    }
}
