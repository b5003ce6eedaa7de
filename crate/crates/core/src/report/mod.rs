//! Run plans, result rows and their TABLE, CSV and JSON renderings.

mod config;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::rc::Rc;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::apex::{write_trace, TraceEvent};
use crate::porting::{ApexPlatform, ApexSettings};
use crate::suite::{self, BenchDescriptor, Group, Measured, SuiteError, SuiteParams};
use crate::timebase::{micros_display, ticks_to_micros_display, Rate, Tick};
use crate::workloads::WorkloadData;

pub use config::{DatasetPaths, RunConfig};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Table,
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "table" => Ok(Format::Table),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected table, csv or json)")),
        }
    }
}

/// One result line: a named series reduced to its statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub bench: String,
    pub group: Group,
    pub row: String,
    pub samples: usize,
    pub bcet_ticks: Tick,
    pub wcet_ticks: Tick,
    /// Mean in whole ticks, truncated; the display column.
    pub average_ticks: Tick,
    /// Unrounded mean in ticks.
    pub mean_ticks: f64,
    pub bcet_us: f64,
    pub wcet_us: f64,
    pub average_us: f64,
    pub stddev_us: f64,
}

impl ReportRow {
    pub fn from_measured(bench: &BenchDescriptor, m: &Measured) -> Self {
        let s = &m.stats;
        ReportRow {
            bench: bench.name.to_string(),
            group: bench.group,
            row: m.series.name.clone(),
            samples: s.samples,
            bcet_ticks: s.bcet_ticks,
            wcet_ticks: s.wcet_ticks,
            average_ticks: s.average_ticks.floor() as Tick,
            mean_ticks: s.average_ticks,
            bcet_us: s.bcet_us,
            wcet_us: s.wcet_us,
            average_us: s.average_us,
            stddev_us: s.stddev_us,
        }
    }

    /// The four microsecond display cells: BCET, WCET and average derived
    /// from the tick columns, then the standard deviation.
    pub fn micros_cells(&self, rate: Rate) -> [String; 4] {
        [
            ticks_to_micros_display(self.bcet_ticks, rate),
            ticks_to_micros_display(self.wcet_ticks, rate),
            ticks_to_micros_display(self.average_ticks, rate),
            micros_display(self.stddev_us),
        ]
    }
}

/// Everything needed to run a selection of benchmarks.
#[derive(Clone, Debug)]
pub struct RunPlan {
    pub benches: Vec<&'static BenchDescriptor>,
    pub settings: ApexSettings,
    pub iterations: Option<u32>,
    pub process_count: usize,
    pub data: Rc<WorkloadData>,
    pub format: Format,
    pub trace: Option<PathBuf>,
}

impl Default for RunPlan {
    fn default() -> Self {
        RunPlan {
            benches: suite::CATALOG.iter().collect(),
            settings: ApexSettings::default(),
            iterations: None,
            process_count: 4,
            data: Rc::new(WorkloadData::default()),
            format: Format::Table,
            trace: None,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub rows: Vec<ReportRow>,
    /// Per benchmark, the trace of its run (empty unless requested).
    pub traces: Vec<(String, Vec<TraceEvent>)>,
}

/// Runs every selected benchmark in catalog order, one after the other.
pub fn execute_plan(plan: &RunPlan) -> Result<RunOutput, SuiteError> {
    let mut settings = plan.settings.clone();
    settings.record_trace |= plan.trace.is_some();
    let platform = ApexPlatform::new(settings);
    let params = SuiteParams {
        iterations: plan.iterations,
        process_count: plan.process_count,
        data: plan.data.clone(),
    };
    let mut benches = plan.benches.clone();
    benches.sort_by_key(|b| suite::CATALOG.iter().position(|c| c.name == b.name));
    benches.dedup_by_key(|b| b.name);

    let mut out = RunOutput::default();
    for bench in benches {
        let result = suite::run_bench(&platform, bench, &params)?;
        out.rows
            .extend(result.rows.iter().map(|m| ReportRow::from_measured(bench, m)));
        if plan.trace.is_some() {
            out.traces.push((bench.name.to_string(), platform.take_trace()));
        }
    }
    Ok(out)
}

/// Trace export: each benchmark's events after a `# name` line.
pub fn render_traces(traces: &[(String, Vec<TraceEvent>)]) -> String {
    let mut buf = Vec::new();
    for (name, events) in traces {
        buf.extend(format!("# {name}\n").bytes());
        write_trace(&mut buf, events).expect("writing to memory");
    }
    String::from_utf8(buf).expect("trace lines are UTF-8")
}

pub fn emit(rows: &[ReportRow], format: Format, rate: Rate) -> String {
    match format {
        Format::Table => emit_table(rows, rate),
        Format::Csv => emit_csv(rows),
        Format::Json => serde_json::to_string_pretty(rows).expect("rows always serialize") + "\n",
    }
}

pub fn parse_json(text: &str) -> Result<Vec<ReportRow>, serde_json::Error> {
    serde_json::from_str(text)
}

pub const CSV_HEADER: [&str; 12] = [
    "bench",
    "group",
    "row",
    "samples",
    "bcet_ticks",
    "wcet_ticks",
    "average_ticks",
    "mean_ticks",
    "bcet_us",
    "wcet_us",
    "average_us",
    "stddev_us",
];

fn emit_csv(rows: &[ReportRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("writing to memory");
    for r in rows {
        let f6 = |v: f64| format!("{v:.6}");
        w.write_record([
            r.bench.clone(),
            r.group.to_string(),
            r.row.clone(),
            r.samples.to_string(),
            r.bcet_ticks.to_string(),
            r.wcet_ticks.to_string(),
            r.average_ticks.to_string(),
            f6(r.mean_ticks),
            f6(r.bcet_us),
            f6(r.wcet_us),
            f6(r.average_us),
            f6(r.stddev_us),
        ])
        .expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("CSV is UTF-8")
}

fn emit_table(rows: &[ReportRow], rate: Rate) -> String {
    let name_w = rows
        .iter()
        .map(|r| r.row.len())
        .max()
        .unwrap_or(0)
        .max("Benchmark".len());
    let cells: Vec<([String; 3], [String; 4])> = rows
        .iter()
        .map(|r| {
            (
                [
                    r.bcet_ticks.to_string(),
                    r.wcet_ticks.to_string(),
                    r.average_ticks.to_string(),
                ],
                r.micros_cells(rate),
            )
        })
        .collect();
    let w = cells
        .iter()
        .flat_map(|(t, u)| t.iter().chain(u.iter()))
        .map(String::len)
        .max()
        .unwrap_or(0)
        .max("STD Dev.".len());

    let mut out = String::new();
    let ticks_span = 3 * (w + 2);
    let _ = writeln!(
        out,
        "{:name_w$}  {:<ticks_span$}| Time (us) @ {rate} ticks/us",
        "", "Time (ticks)"
    );
    let _ = write!(out, "{:name_w$}", "Benchmark");
    for h in ["BCET", "WCET", "Average"] {
        let _ = write!(out, "  {h:>w$}");
    }
    out.push_str(" |");
    for h in ["BCET", "WCET", "Average", "STD Dev."] {
        let _ = write!(out, "  {h:>w$}");
    }
    out.push('\n');
    let _ = writeln!(out, "{}", "-".repeat(name_w + 7 * (w + 2) + 2));
    for (r, (t, u)) in rows.iter().zip(&cells) {
        let _ = write!(out, "{:name_w$}", r.row);
        for c in t {
            let _ = write!(out, "  {c:>w$}");
        }
        out.push_str(" |");
        for c in u {
            let _ = write!(out, "  {c:>w$}");
        }
        out.push('\n');
    }
    out
}
