use std::fmt::Write as _;

use super::AggregateSeries;
use crate::engine::{BatchResult, Trajectory};
use crate::error::{Error, Result};
use crate::fmt::g17;

/// `realization,time,<compartment...>`, one row per grid sample.
pub fn write_trajectories_csv(batch: &BatchResult) -> String {
    let mut out = String::from("realization,time");
    for c in &batch.compartments {
        write!(out, ",{c}").unwrap();
    }
    out.push('\n');
    for (r, tr) in batch.trajectories.iter().enumerate() {
        for (t, row) in batch.grid.iter().zip(&tr.grid_counts) {
            write!(out, "{r},{}", g17(*t)).unwrap();
            for x in row {
                write!(out, ",{x}").unwrap();
            }
            out.push('\n');
        }
    }
    out
}

/// `realization,time,node,from,to`; `None` when events were not recorded.
pub fn write_events_csv(batch: &BatchResult) -> Option<String> {
    let mut out = String::from("realization,time,node,from,to\n");
    for (r, tr) in batch.trajectories.iter().enumerate() {
        for e in tr.events.as_ref()? {
            writeln!(
                out,
                "{r},{},{},{},{}",
                g17(e.time),
                e.node,
                batch.compartments[e.from],
                batch.compartments[e.to]
            )
            .unwrap();
        }
    }
    Some(out)
}

/// `time,<comp>_mean,<comp>_std,...`
pub fn write_aggregate_csv(series: &AggregateSeries) -> String {
    let mut out = String::from("time");
    for c in &series.compartments {
        write!(out, ",{c}_mean,{c}_std").unwrap();
    }
    out.push('\n');
    for (i, t) in series.grid.iter().enumerate() {
        out.push_str(&g17(*t));
        for c in 0..series.compartments.len() {
            write!(out, ",{},{}", g17(series.mean[i][c]), g17(series.std[i][c])).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Rebuilds grid-level trajectories from a trajectory CSV.
///
/// Only grid samples survive the round trip: final counts are the last row,
/// duration is the first grid time at which the counts reach their final
/// values, and `initially_immune` must be supplied by the caller.
pub fn read_trajectories_csv(text: &str, initially_immune: usize) -> Result<BatchResult> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty file".into(),
    })?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 3 || cols[0] != "realization" || cols[1] != "time" {
        return Err(Error::Parse {
            line: 1,
            message: "expected header `realization,time,<compartments>`".into(),
        });
    }
    let compartments: Vec<String> = cols[2..].iter().map(|s| s.to_string()).collect();
    let mut rows: Vec<(usize, f64, Vec<usize>)> = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| Error::Parse { line: i + 1, message };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(bad(format!("expected {} fields, got {}", cols.len(), fields.len())));
        }
        let r: usize = fields[0].parse().map_err(|_| bad(format!("bad realization {:?}", fields[0])))?;
        let t: f64 = fields[1].parse().map_err(|_| bad(format!("bad time {:?}", fields[1])))?;
        let counts = fields[2..]
            .iter()
            .map(|f| f.parse::<usize>().map_err(|_| bad(format!("bad count {f:?}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push((r, t, counts));
    }
    let n_real = rows.iter().map(|r| r.0 + 1).max().unwrap_or(0);
    let mut grouped: Vec<Vec<(f64, Vec<usize>)>> = vec![Vec::new(); n_real];
    for (r, t, c) in rows {
        grouped[r].push((t, c));
    }
    let grid: Vec<f64> = grouped.first().map(|g| g.iter().map(|x| x.0).collect()).unwrap_or_default();
    let mut trajectories = Vec::with_capacity(n_real);
    for (r, g) in grouped.into_iter().enumerate() {
        if g.iter().map(|x| x.0).ne(grid.iter().copied()) {
            return Err(Error::invalid(format!("realization {r} uses a different grid")));
        }
        let grid_counts: Vec<Vec<usize>> = g.into_iter().map(|x| x.1).collect();
        let final_counts = grid_counts.last().cloned().unwrap_or_default();
        let n_nodes: usize = final_counts.iter().sum();
        let settled = grid_counts
            .iter()
            .rposition(|row| *row != final_counts)
            .map_or(0.0, |i| grid[i + 1]);
        trajectories.push(Trajectory {
            n_nodes,
            initial_counts: grid_counts.first().cloned().unwrap_or_default(),
            initially_immune,
            events: None,
            n_events: 0,
            grid: grid.clone(),
            grid_counts,
            final_counts,
            last_event_time: settled,
        });
    }
    Ok(BatchResult {
        compartments,
        n_nodes: trajectories.first().map_or(0, |t| t.n_nodes),
        grid,
        seeds: (0..trajectories.len() as u64).collect(),
        trajectories,
    })
}

/// Static SVG: mean line with a shaded band of plus/minus one standard
/// deviation for one compartment.
pub fn render_svg(series: &AggregateSeries, compartment: &str) -> Result<String> {
    let c = series.compartment_index(compartment)?;
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let t0 = series.grid.first().copied().unwrap_or(0.0);
    let t1 = series.grid.last().copied().unwrap_or(1.0).max(t0 + 1e-12);
    let y_max = (series.n_nodes as f64).max(1.0);
    let x = |t: f64| pad + (t - t0) / (t1 - t0) * (w - 2.0 * pad);
    let y = |v: f64| h - pad - v.clamp(0.0, y_max) / y_max * (h - 2.0 * pad);

    let mut band = String::new();
    for (i, t) in series.grid.iter().enumerate() {
        let v = series.mean[i][c] + series.std[i][c];
        write!(band, "{:.2},{:.2} ", x(*t), y(v)).unwrap();
    }
    for (i, t) in series.grid.iter().enumerate().rev() {
        let v = series.mean[i][c] - series.std[i][c];
        write!(band, "{:.2},{:.2} ", x(*t), y(v)).unwrap();
    }
    let line: String = series
        .grid
        .iter()
        .enumerate()
        .map(|(i, t)| format!("{:.2},{:.2}", x(*t), y(series.mean[i][c])))
        .collect::<Vec<_>>()
        .join(" ");

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(
        svg,
        r#"<polyline points="{pad},{pad} {pad},{} {},{}" fill="none" stroke="black"/>"#,
        h - pad,
        w - pad,
        h - pad
    )
    .unwrap();
    writeln!(svg, r#"<polygon points="{}" fill="steelblue" fill-opacity="0.25" stroke="none"/>"#, band.trim_end()).unwrap();
    writeln!(svg, r#"<polyline points="{line}" fill="none" stroke="steelblue" stroke-width="2"/>"#).unwrap();
    writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="14" text-anchor="middle">{compartment} (mean ± 1 sd, n = {})</text>"#,
        w / 2.0,
        pad / 2.0,
        series.n_realizations
    )
    .unwrap();
    writeln!(svg, r#"<text x="{pad}" y="{}" font-family="sans-serif" font-size="11">{}</text>"#, h - pad / 3.0, g17(t0)).unwrap();
    writeln!(svg, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#, w - pad, h - pad / 3.0, g17(t1)).unwrap();
    writeln!(svg, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#, pad - 4.0, pad + 4.0, series.n_nodes).unwrap();
    svg.push_str("</svg>\n");
    Ok(svg)
}
