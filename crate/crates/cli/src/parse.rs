//! Parsing of graph specifications and comma-separated lists.

use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use nbcover::io::read_graph;
use nbcover::{Graph, GraphBuilder};

/// Resolves `bouquet:a,b`, `cycle:k`, `theta:l1,l2,l3`, `dipole:m`, `theta`, `figure8`, `barbell` or `file:path`.
pub fn graph(spec: &str) -> Result<Graph> {
    let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
    if name == "file" {
        return Ok(read_graph(Path::new(args))?);
    }
    let nums: Vec<usize> = if args.is_empty() { Vec::new() } else { list(args)? };
    let arity = |k: usize| -> Result<()> {
        if nums.len() != k {
            bail!("graph `{name}` takes {k} parameter(s), got `{spec}`");
        }
        Ok(())
    };
    Ok(match name {
        "bouquet" => {
            arity(2)?;
            Graph::bouquet(nums[0], nums[1])
        }
        "cycle" => {
            arity(1)?;
            if nums[0] == 0 {
                bail!("cycle length must be positive");
            }
            Graph::cycle(nums[0])
        }
        "theta" if nums.is_empty() => Graph::theta(1, 1, 1),
        "theta" => {
            arity(3)?;
            if nums.contains(&0) {
                bail!("theta arm lengths must be positive");
            }
            Graph::theta(nums[0], nums[1], nums[2])
        }
        "dipole" => {
            arity(1)?;
            Graph::dipole(nums[0])
        }
        "figure8" => {
            arity(0)?;
            Graph::bouquet(2, 0)
        }
        "barbell" => {
            arity(0)?;
            let mut b = GraphBuilder::new(2);
            b.add_edge(0, 0);
            b.add_edge(1, 1);
            b.add_edge(0, 1);
            b.build()
        }
        _ => bail!("unknown graph `{spec}`"),
    })
}

pub fn list<T: FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    s.split(',')
        .map(|x| x.trim().parse::<T>().with_context(|| format!("bad list entry `{x}` in `{s}`")))
        .collect()
}

/// `value:weight` pairs such as `4:1,-4:0.5`.
pub fn weighted_points(s: &str) -> Result<Vec<(f64, f64)>> {
    s.split(',')
        .map(|item| {
            let (a, b) = item.split_once(':').ok_or_else(|| anyhow!("expected value:weight, got `{item}`"))?;
            Ok((a.trim().parse()?, b.trim().parse()?))
        })
        .collect()
}
