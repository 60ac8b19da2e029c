use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use flowrank::analysis::{Marker, YearCell};
use flowrank::axioms::{run_suite, SuiteConfig};
use flowrank::io::{self, render_ranking_table, render_table, LongCsvOptions, RankingColumn};
use flowrank::{aggregation_impact, panel_trajectory, score, to_ranking, FlowMatrix, FlowPanel, Method, TableFormat};

use crate::diag::{Failure, EXIT_INTERNAL};
use crate::{check_tolerance, AxiomArgs, Common, InputArgs, MergeArgs, MethodArg, PanelArgs, RankArgs};

type Outcome = Result<(), Failure>;

pub fn rank(args: RankArgs) -> Outcome {
    let tol = check_tolerance(args.common.tie_tol)?;
    let a = load_single(&args.input)?;
    let mut columns = Vec::new();
    for method in args.common.method.unwrap_or(MethodArg::All).methods() {
        let w = score(&a, method)?;
        columns.push(RankingColumn::new(method.label(), to_ranking(&w, tol), w));
    }
    emit(&args.common, &render_ranking_table(&columns, args.common.format.into())?)
}

pub fn check_axioms(args: AxiomArgs) -> Outcome {
    let tol = check_tolerance(args.common.tie_tol)?;
    let extra = match &args.input {
        Some(path) => {
            let panel = load_panel(path, args.drop_self_flows)?;
            Some(pick_year(&panel, args.year)?.clone())
        }
        None => None,
    };
    let config = SuiteConfig { seed: args.seed, trials: args.trials, tie_tolerance: tol, extra };
    eprintln!("seed|{} trials={}", config.seed, config.trials);
    let report = run_suite(&args.common.method.unwrap_or(MethodArg::All).methods(), &config)?;

    let verdict = |holds: bool| if holds { "holds" } else { "violated" }.to_owned();
    let header = ["method", "size_invariance", "bridge_independence"].map(String::from);
    let rows: Vec<Vec<String>> = report
        .methods
        .iter()
        .map(|m| {
            vec![m.method.label().to_owned(), verdict(m.size_invariance.holds()), verdict(m.bridge_independence.holds())]
        })
        .collect();
    emit(&args.common, &render_table(&header, &rows, args.common.format.into()))?;

    let mismatched: Vec<String> = report
        .methods
        .iter()
        .filter(|m| !m.matches_expected())
        .map(|m| {
            let (size, bridge) = flowrank::axioms::expected_pattern(m.method);
            let mut msg = format!(
                "{} expected size_invariance={} bridge_independence={}",
                m.method.label(),
                verdict(size),
                verdict(bridge)
            );
            for (name, outcome) in [("size_invariance", &m.size_invariance), ("bridge_independence", &m.bridge_independence)] {
                if let Some(v) = &outcome.first_violation {
                    msg.push_str(&format!("; {name} {v}"));
                }
            }
            msg
        })
        .collect();
    if mismatched.is_empty() {
        Ok(())
    } else {
        Err(Failure::new(EXIT_INTERNAL, "axiom_mismatch", mismatched.join(" / ")))
    }
}

pub fn merge_impact(args: MergeArgs) -> Outcome {
    let tol = check_tolerance(args.common.tie_tol)?;
    let method = single_method(args.common.method, "merge-impact")?;
    let a = load_single(&args.input)?;
    let spec = io::read_merge_spec(&args.merge)?;
    spec.validate(a.registry())?;
    if spec.is_identity() {
        return emit(&args.common, "no changes\n");
    }
    let report = aggregation_impact(&a, &spec, method, tol)?;

    let header = ["entity", "role", "before", "after", "shift"].map(String::from);
    let mut rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![r.code.clone(), "survivor".into(), r.before.to_string(), r.after.to_string(), Marker(r.shift).to_string()]
        })
        .collect();
    rows.extend(
        report.groups.iter().map(|g| vec![g.code.clone(), "group".into(), String::new(), g.rank.to_string(), String::new()]),
    );
    let format: TableFormat = args.common.format.into();
    let mut text = render_table(&header, &rows, format);
    if format == TableFormat::Text && report.is_unchanged() {
        text.push_str("no changes\n");
    }
    emit(&args.common, &text)
}

pub fn panel(args: PanelArgs) -> Outcome {
    let tol = check_tolerance(args.common.tie_tol)?;
    let method = single_method(args.common.method, "panel")?;
    let mut panel = load_panel(&args.input.input, args.input.drop_self_flows)?;
    if let Some(y) = args.input.year {
        let m = pick_year(&panel, Some(y))?.clone();
        panel = FlowPanel::new(panel.registry().clone(), [(y, m)].into_iter().collect())?;
    }
    let t = panel_trajectory(&panel, method, tol);

    let mut header = vec!["entity".to_owned()];
    header.extend(t.years.iter().map(|y| y.to_string()));
    let mut order: Vec<usize> = (0..t.registry.len()).collect();
    order.sort_by(|&i, &j| t.registry.code(i).cmp(t.registry.code(j)));
    let rows: Vec<Vec<String>> = order
        .into_iter()
        .map(|i| {
            let mut row = vec![t.registry.code(i).to_owned()];
            row.extend(t.cells[i].iter().map(YearCell::to_string));
            row
        })
        .collect();
    emit(&args.common, &render_table(&header, &rows, args.common.format.into()))?;

    let mut worst: Option<Failure> = None;
    for (year, err) in t.failures {
        let mut f = Failure::from(err);
        f.message = format!("year {year}: {}", f.message);
        f.report();
        if worst.as_ref().is_none_or(|w| severity(f.exit) > severity(w.exit)) {
            worst = Some(f);
        }
    }
    match worst {
        Some(f) => Err(Failure { reported: true, ..f }),
        None => Ok(()),
    }
}

fn severity(exit: u8) -> u8 {
    match exit {
        3 => 3,
        2 => 2,
        _ => 1,
    }
}

fn single_method(arg: Option<MethodArg>, command: &str) -> Result<Method, Failure> {
    match arg.unwrap_or(MethodArg::Ls).methods().as_slice() {
        [m] => Ok(*m),
        _ => Err(Failure::usage(format!("{command} takes a single method (net, ratio or ls)"))),
    }
}

fn emit(common: &Common, text: &str) -> Outcome {
    match &common.output {
        Some(path) => fs::write(path, text).map_err(|e| Failure::new(2, "io", format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_single(args: &InputArgs) -> Result<FlowMatrix, Failure> {
    let panel = load_panel(&args.input, args.drop_self_flows)?;
    Ok(pick_year(&panel, args.year)?.clone())
}

fn pick_year(panel: &FlowPanel, year: Option<i32>) -> Result<&FlowMatrix, Failure> {
    match year {
        Some(y) => panel.year(y).ok_or_else(|| Failure::new(2, "unknown_year", format!("no data for year {y}"))),
        None => panel.only().ok_or_else(|| {
            let years: Vec<String> = panel.years().map(|y| y.to_string()).collect();
            Failure::new(2, "year_required", format!("input has years {}; pass --year", years.join(",")))
        }),
    }
}

/// Reads a long or wide CSV, telling them apart by the header.
fn load_panel(path: &Path, drop_self_flows: bool) -> Result<FlowPanel, Failure> {
    let io_err = |e: std::io::Error| Failure::new(2, "io", format!("{}: {e}", path.display()));
    let file = fs::File::open(path).map_err(io_err)?;
    let mut first = String::new();
    BufReader::new(file).read_line(&mut first).map_err(io_err)?;
    let mut fields = first.trim_start_matches('\u{feff}').split(',').map(|f| f.trim().to_ascii_lowercase());
    let long = fields.next().as_deref() == Some("from") && fields.next().as_deref() == Some("to");
    if long {
        let opts = LongCsvOptions { drop_self_flows, ..Default::default() };
        let (panel, report) = io::read_long_csv(path, &opts)?;
        if report.self_flows_dropped > 0 {
            eprintln!("self_flows_dropped|{} records", report.self_flows_dropped);
        }
        Ok(panel)
    } else {
        Ok(FlowPanel::single(io::read_wide_csv(path)?))
    }
}
