//! `plot`: emit a standalone matplotlib script that renders the CSVs this
//! tool writes. The script is an artifact; the harness never executes it.

use crate::error::CliError;
use crate::output::write_atomic;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Duality gap vs simulated seconds, log-y; one curve per trace file
    /// (and per (r, H) group for sweep files).
    GapTime,
    /// Optimal H vs delay ratio, log-x.
    HStar,
}

impl std::str::FromStr for PlotKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gap-time" => Ok(PlotKind::GapTime),
            "h-star" => Ok(PlotKind::HStar),
            other => Err(format!("unknown plot kind {other:?} (gap-time | h-star)")),
        }
    }
}

pub fn run(kind: PlotKind, out: &Path, csvs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    if csvs.is_empty() {
        return Err(CliError::Config("plot needs at least one CSV".into()));
    }
    for csv in csvs {
        if !csv.is_file() {
            return Err(CliError::Config(format!("no such CSV: {}", csv.display())));
        }
    }
    let paths_py: Vec<String> = csvs
        .iter()
        .map(|p| format!("{:?}", p.display().to_string()))
        .collect();
    let paths_py = paths_py.join(", ");
    let body = match kind {
        PlotKind::GapTime => format!(
            r##"#!/usr/bin/env python3
"""Duality gap vs simulated time (log-y). Generated by treecoca plot."""
import csv
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

FILES = [{paths_py}]

def read_rows(path):
    with open(path) as fh:
        rows = [r for r in csv.DictReader(l for l in fh if not l.startswith("#"))]
    return rows

fig, ax = plt.subplots(figsize=(7, 5))
for path in FILES:
    rows = read_rows(path)
    if not rows:
        continue
    if "r" in rows[0] and "h" in rows[0]:
        # sweep long format: one curve per (r, H)
        groups = {{}}
        for row in rows:
            groups.setdefault((row["r"], row["h"]), []).append(row)
        for (r, h), g in sorted(groups.items()):
            xs = [float(row["sim_time"]) for row in g]
            ys = [float(row["gap"]) for row in g]
            ax.plot(xs, ys, label=f"{{path}} r={{r}} H={{h}}")
    else:
        xs = [float(row["sim_time"]) for row in rows]
        ys = [float(row["gap"]) for row in rows]
        ax.plot(xs, ys, label=path)
ax.set_yscale("log")
ax.set_xlabel("simulated time (s)")
ax.set_ylabel("duality gap")
ax.legend(fontsize=7)
ax.grid(True, which="both", alpha=0.3)
fig.tight_layout()
fig.savefig("gap_vs_time.png", dpi=150)
print("wrote gap_vs_time.png")
"##
        ),
        PlotKind::HStar => format!(
            r##"#!/usr/bin/env python3
"""Optimal local iterations vs delay ratio (log-x). Generated by treecoca plot."""
import csv
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

FILES = [{paths_py}]

fig, ax = plt.subplots(figsize=(7, 5))
for path in FILES:
    with open(path) as fh:
        rows = [r for r in csv.DictReader(l for l in fh if not l.startswith("#"))]
    xs = [float(row["r"]) for row in rows]
    ys = [float(row["h_star"]) for row in rows]
    ax.plot(xs, ys, marker="o", label=path)
ax.set_xscale("symlog")
ax.set_xlabel("delay ratio r (t_delay = r * t_lp)")
ax.set_ylabel("optimal H")
ax.legend(fontsize=7)
ax.grid(True, which="both", alpha=0.3)
fig.tight_layout()
fig.savefig("h_star_vs_r.png", dpi=150)
print("wrote h_star_vs_r.png")
"##
        ),
    };
    write_atomic(out, body.as_bytes())?;
    Ok(vec![out.to_path_buf()])
}
