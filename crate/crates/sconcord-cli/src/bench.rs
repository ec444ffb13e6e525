//! Grid benchmarks: methods × seeds on one problem, with per-run artifacts
//! and an aggregate table of median trajectories. Externally produced
//! baseline CSVs (schema: iter, f, wall_nanos) are joined into the table
//! under their file-stem label; malformed files are skipped with a warning.

use std::fs;
use std::path::{Path, PathBuf};

use sconcord::par;

use crate::run::{execute, report_to_string};
use crate::spec::{GeneratorConfig, Method, OutputPaths, RunSpec, SolverConfig};
use crate::CliError;

pub struct BenchGrid {
    pub problem: String,
    pub methods: Vec<Method>,
    pub seeds: u64,
    pub seed0: u64,
    pub generator: GeneratorConfig,
    pub solver: SolverConfig,
    pub out_dir: PathBuf,
    pub baseline_dir: Option<PathBuf>,
    pub deterministic: bool,
}

/// One trajectory: (iter, f, wall_nanos) rows plus an optional gap hint.
struct Trajectory {
    rows: Vec<(usize, f64, u64)>,
    hint: Option<f64>,
}

/// Median of a non-empty slice (averages the middle pair on even lengths).
fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("no NaN in medians"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Median trajectory over runs of one label. Shorter runs are carried
/// forward at their final value so every iteration has a full sample.
fn aggregate_label(label: &str, runs: &[Trajectory], out: &mut String) {
    let max_len = runs.iter().map(|t| t.rows.len()).max().unwrap_or(0);
    let all_hinted = !runs.is_empty() && runs.iter().all(|t| t.hint.is_some());
    for i in 0..max_len {
        let mut fs = Vec::with_capacity(runs.len());
        let mut walls = Vec::with_capacity(runs.len());
        let mut gaps = Vec::with_capacity(runs.len());
        for t in runs {
            let (_, f, w) = t.rows[i.min(t.rows.len() - 1)];
            fs.push(f);
            walls.push(w as f64);
            if let Some(h) = t.hint {
                gaps.push(f - h);
            }
        }
        let gap_cell =
            if all_hinted { format!("{}", median(&mut gaps)) } else { String::new() };
        out.push_str(&format!(
            "{label},{i},{},{},{gap_cell},{}\n",
            runs.len(),
            median(&mut fs),
            median(&mut walls) as u64,
        ));
    }
}

/// Read one baseline CSV; returns None (after warning) on any malformation.
fn read_baseline(path: &Path) -> Option<Trajectory> {
    let warn = |why: &str| {
        eprintln!("warning: skipping baseline {}: {why}", path.display());
        None::<Trajectory>
    };
    let mut reader = match csv::Reader::from_path(path) {
        Ok(r) => r,
        Err(e) => return warn(&format!("unreadable ({e})")),
    };
    let headers = match reader.headers() {
        Ok(h) => h.clone(),
        Err(e) => return warn(&format!("bad header ({e})")),
    };
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (Some(ci), Some(cf), Some(cw)) = (col("iter"), col("f"), col("wall_nanos")) else {
        return warn("header must contain iter, f, wall_nanos");
    };
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => return warn(&format!("bad row ({e})")),
        };
        let parse = |idx: usize| record.get(idx).map(str::trim);
        let (Some(i), Some(f), Some(w)) = (parse(ci), parse(cf), parse(cw)) else {
            return warn("short row");
        };
        let (Ok(i), Ok(f), Ok(w)) = (i.parse::<usize>(), f.parse::<f64>(), w.parse::<u64>())
        else {
            return warn(&format!("unparseable row {:?}", record));
        };
        rows.push((i, f, w));
    }
    if rows.is_empty() {
        return warn("no data rows");
    }
    Some(Trajectory { rows, hint: None })
}

/// Baseline label: file stem with a trailing `_s<digits>` seed suffix
/// stripped, so `lbfgsb_s0.csv` and `lbfgsb_s1.csv` aggregate together.
fn baseline_label(path: &Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("baseline");
    if let Some(pos) = stem.rfind("_s") {
        if stem[pos + 2..].chars().all(|c| c.is_ascii_digit()) && pos + 2 < stem.len() {
            return stem[..pos].to_string();
        }
    }
    stem.to_string()
}

pub fn run_bench(grid: &BenchGrid) -> Result<(), CliError> {
    for m in &grid.methods {
        if !m.compatible_with(&grid.problem) {
            return Err(CliError::Usage(format!(
                "method {m} is not applicable to problem {}",
                grid.problem
            )));
        }
    }
    if grid.methods.is_empty() {
        return Err(CliError::Usage("bench needs at least one method".into()));
    }
    if grid.seeds == 0 {
        return Err(CliError::Usage("bench needs at least one seed".into()));
    }
    fs::create_dir_all(&grid.out_dir).map_err(CliError::failure)?;

    let mut units: Vec<(Method, u64)> = Vec::new();
    for &m in &grid.methods {
        for s in grid.seed0..grid.seed0 + grid.seeds {
            units.push((m, s));
        }
    }
    let problem = grid.problem.clone();
    let generator = grid.generator.clone();
    let solver = grid.solver.clone();
    let det = grid.deterministic;
    let worker = move |(method, seed): (Method, u64)| {
        let spec = RunSpec {
            problem: problem.clone(),
            method,
            seed,
            generator: generator.clone(),
            solver: solver.clone(),
            outputs: OutputPaths::default(),
        };
        (method, seed, execute(&spec, det))
    };
    let results = par::map_batch(units, worker);

    let mut table = String::from("method,iter,runs,median_f,median_gap,median_wall_nanos\n");
    let mut failures = Vec::new();
    for &method in &grid.methods {
        let mut runs = Vec::new();
        for (m, seed, outcome) in &results {
            if *m != method {
                continue;
            }
            match outcome {
                Ok(run) => {
                    let stem = grid.out_dir.join(format!("{}_{}_s{}", grid.problem, m, seed));
                    fs::write(stem.with_extension("report.json"), report_to_string(&run.report))
                        .map_err(CliError::failure)?;
                    fs::write(stem.with_extension("trace.csv"), &run.trace_csv)
                        .map_err(CliError::failure)?;
                    let hint = run.gap.map(|g| run.final_f - g);
                    runs.push(Trajectory { rows: run.trajectory.clone(), hint });
                }
                Err(e) => failures.push(format!("{} seed {seed}: {e}", m)),
            }
        }
        if !runs.is_empty() {
            aggregate_label(method.name(), &runs, &mut table);
        }
    }

    if let Some(dir) = &grid.baseline_dir {
        let mut files: Vec<PathBuf> = match fs::read_dir(dir) {
            Ok(entries) => entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "csv"))
                .collect(),
            Err(e) => {
                eprintln!("warning: baseline dir {} unreadable ({e})", dir.display());
                Vec::new()
            }
        };
        files.sort();
        let mut labels: Vec<String> = Vec::new();
        let mut grouped: Vec<Vec<Trajectory>> = Vec::new();
        for path in files {
            let Some(t) = read_baseline(&path) else { continue };
            let label = baseline_label(&path);
            match labels.iter().position(|l| *l == label) {
                Some(i) => grouped[i].push(t),
                None => {
                    labels.push(label);
                    grouped.push(vec![t]);
                }
            }
        }
        for (label, runs) in labels.iter().zip(&grouped) {
            aggregate_label(label, runs, &mut table);
        }
    }

    fs::write(grid.out_dir.join("aggregate.csv"), &table).map_err(CliError::failure)?;

    if failures.is_empty() {
        println!(
            "bench: {} method(s) × {} seed(s) on {}; artifacts in {}",
            grid.methods.len(),
            grid.seeds,
            grid.problem,
            grid.out_dir.display()
        );
        Ok(())
    } else {
        Err(CliError::failure_msg(format!("bench runs failed:\n  {}", failures.join("\n  "))))
    }
}
