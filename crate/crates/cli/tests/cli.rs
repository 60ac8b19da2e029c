use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const EXAMPLE: &str = "from,to,amount\nA,C,15\nB,C,30\nC,A,5\nC,B,10\nC,D,10\nD,C,10\n";

fn flowrank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowrank")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn rank_all_reproduces_example_table() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "ex.csv", EXAMPLE);
    let o = flowrank(&["rank", "--input", s(&input), "--method", "all"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        stdout(&o),
        "entity,net_rank,net_score,ratio_rank,ratio_score,ls_rank,ls_score\n\
         A,2,10,1,0.5,1,0.25\n\
         B,1,20,1,0.5,1,0.25\n\
         C,4,-30,4,-0.375,3,-0.25\n\
         D,3,0,3,0,3,-0.25\n"
    );
}

#[test]
fn rank_all_is_the_union_of_single_methods() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "ex.csv", EXAMPLE);
    let all = stdout(&flowrank(&["rank", "--input", s(&input), "--method", "all"]));
    let singles: Vec<String> =
        ["net", "ratio", "ls"].iter().map(|m| stdout(&flowrank(&["rank", "--input", s(&input), "--method", m]))).collect();
    for (k, line) in all.lines().enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        for (m, single) in singles.iter().enumerate() {
            let other: Vec<&str> = single.lines().nth(k).unwrap().split(',').collect();
            assert_eq!(other[0], fields[0]);
            assert_eq!(&other[1..], &fields[1 + 2 * m..3 + 2 * m]);
        }
    }
}

#[test]
fn rank_one_pair() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "pair.csv", "from,to,amount\nX,Y,5\n");
    let o = flowrank(&["rank", "--input", s(&input), "--method", "net"]);
    assert_eq!(stdout(&o), "entity,net_rank,net_score\nX,1,5\nY,2,-5\n");
}

#[test]
fn rank_disconnected_lists_components() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "two.csv", "from,to,amount\nA,B,1\nC,D,2\n");
    let o = flowrank(&["rank", "--input", s(&input), "--method", "ls"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr(&o).trim(), "disconnected|{A,B} {C,D}");
    assert!(stdout(&o).is_empty());
}

#[test]
fn rank_reads_wide_input_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let long = write(dir.path(), "long.csv", EXAMPLE);
    let wide = write(dir.path(), "wide.csv", "entity,A,B,C,D\nA,0,0,15,0\nB,0,0,30,0\nC,5,10,0,10\nD,0,0,10,0\n");
    let out = dir.path().join("out.csv");
    let o = flowrank(&["rank", "--input", s(&wide), "--output", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).is_empty());
    assert_eq!(std::fs::read_to_string(&out).unwrap(), stdout(&flowrank(&["rank", "--input", s(&long)])));
}

#[test]
fn rank_errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("neg.csv", "from,to,amount\nA,B,-1\n", "negative_amount|line 2"),
        ("self.csv", "from,to,amount\nA,B,1\nA,A,3\n", "self_flow|line 3"),
        ("junk.csv", "from,to,amount\nA,B,x\n", "parse|"),
        ("empty.csv", "from,to,amount\n", "empty_input|"),
        ("sq.csv", "entity,A,B\nA,0,1\n", "non_square|"),
    ];
    for (name, text, prefix) in cases {
        let input = write(dir.path(), name, text);
        let o = flowrank(&["rank", "--input", s(&input)]);
        assert_eq!(o.status.code(), Some(2), "{name}");
        assert!(stderr(&o).starts_with(prefix), "{name}: {}", stderr(&o));
        assert_eq!(stderr(&o).lines().count(), 1);
    }
    let input = write(dir.path(), "ex.csv", EXAMPLE);
    for args in [
        vec!["rank", "--input", "/no/such/file.csv"],
        vec!["rank", "--input", s(&input), "--method", "median"],
        vec!["rank", "--input", s(&input), "--tie-tol", "-1"],
        vec!["rank", "--input", s(&input), "--year", "1999"],
        vec!["rank"],
    ] {
        let o = flowrank(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(stderr(&o).lines().all(|l| l.contains('|')), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn self_flows_can_be_dropped() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "self.csv", "from,to,amount\nX,Y,5\nX,X,3\n");
    let o = flowrank(&["rank", "--input", s(&input), "--method", "net", "--drop-self-flows"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "entity,net_rank,net_score\nX,1,5\nY,2,-5\n");
    assert_eq!(stderr(&o).trim(), "self_flows_dropped|1 records");
}

#[test]
fn isolated_entity_under_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "w.csv", "entity,A,B,C\nA,0,1,0\nB,1,0,0\nC,0,0,0\n");
    let o = flowrank(&["rank", "--input", s(&input), "--method", "ratio"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("isolated_entity|"));
}

#[test]
fn check_axioms_default_matrix() {
    let o = flowrank(&["check-axioms"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        stdout(&o),
        "method,size_invariance,bridge_independence\nnet,violated,violated\nratio,holds,violated\nls,holds,holds\n"
    );
    assert!(stderr(&o).starts_with("seed|20190501 trials=100"));
}

#[test]
fn check_axioms_is_deterministic_and_seeded() {
    let a = flowrank(&["check-axioms", "--seed", "42", "--trials", "1"]);
    let b = flowrank(&["check-axioms", "--seed", "42", "--trials", "1"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stderr(&a).trim(), "seed|42 trials=1");
}

#[test]
fn check_axioms_least_squares_only() {
    let o = flowrank(&["check-axioms", "--method", "ls"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "method,size_invariance,bridge_independence\nls,holds,holds\n");
}

#[test]
fn check_axioms_with_user_instance() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "ex.csv", EXAMPLE);
    let o = flowrank(&["check-axioms", "--input", s(&input), "--trials", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let disconnected = write(dir.path(), "two.csv", "from,to,amount\nA,B,1\nC,D,2\n");
    let o = flowrank(&["check-axioms", "--input", s(&disconnected), "--method", "ls", "--trials", "1"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn merge_impact_reports() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "ex.csv", EXAMPLE);
    let spec = write(dir.path(), "m.csv", "group_code,member_code\nG,C\nG,D\n");
    let o = flowrank(&["merge-impact", "--input", s(&input), "--merge", s(&spec), "--method", "ls"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "entity,role,before,after,shift\nA,survivor,1,1,=\nB,survivor,1,1,=\nG,group,,3,\n"
    );

    // survivors keep their net flow, so net ranks never move
    let spec = write(dir.path(), "bc.csv", "G,B\nG,C\n");
    let o = flowrank(&["merge-impact", "--input", s(&input), "--merge", s(&spec), "--method", "net"]);
    assert_eq!(stdout(&o), "entity,role,before,after,shift\nA,survivor,1,1,=\nD,survivor,2,2,=\nG,group,,3,\n");

    // least squares before: D .171, E .100, C -.020; after: D .127, C .024, E .011, G -.162
    let five = write(
        dir.path(),
        "five.csv",
        "from,to,amount\nA,B,10\nB,A,2\nB,C,8\nC,B,6\nC,D,5\nD,C,1\nD,E,9\nE,D,3\nA,E,1\nE,A,7\n",
    );
    let spec = write(dir.path(), "ab.csv", "G,A\nG,B\n");
    let o = flowrank(&["merge-impact", "--input", s(&five), "--merge", s(&spec), "--method", "ls", "--format", "text"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "entity      role  before  after  shift\n\
         C       survivor       3      2     +1\n\
         D       survivor       1      1      =\n\
         E       survivor       2      3     -1\n\
         G          group              4\n"
    );
}

#[test]
fn merge_impact_identity_and_invalid() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "ex.csv", EXAMPLE);
    let empty = write(dir.path(), "id.csv", "group_code,member_code\n");
    let o = flowrank(&["merge-impact", "--input", s(&input), "--merge", s(&empty)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "no changes\n");

    let bad = write(dir.path(), "bad.csv", "G,C\nG,Z\n");
    let o = flowrank(&["merge-impact", "--input", s(&input), "--merge", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("invalid_merge_spec|"));

    let o = flowrank(&["merge-impact", "--input", s(&input), "--merge", s(&empty), "--method", "all"]);
    assert_eq!(o.status.code(), Some(2));
}

const PANEL: &str = "from,to,amount,year\n\
A,C,15,2000\nB,C,30,2000\nC,A,5,2000\nC,B,10,2000\nC,D,10,2000\nD,C,10,2000\n\
A,C,30,2001\nB,C,30,2001\nC,A,5,2001\nC,B,10,2001\nC,D,10,2001\nD,C,10,2001\n";

#[test]
fn panel_two_years() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "p.csv", PANEL);
    let o = flowrank(&["panel", "--input", s(&input), "--method", "ls"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "entity,2000,2001\nA,1,1\nB,1,2\nC,3,3\nD,3,3\n");
}

#[test]
fn panel_single_year_matches_rank() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "p.csv", PANEL);
    let panel = stdout(&flowrank(&["panel", "--input", s(&input), "--year", "2001"]));
    let rank = stdout(&flowrank(&["rank", "--input", s(&input), "--year", "2001", "--method", "ls"]));
    let from_panel: Vec<(String, String)> =
        panel.lines().skip(1).map(|l| l.split_once(',').map(|(a, b)| (a.into(), b.into())).unwrap()).collect();
    let from_rank: Vec<(String, String)> = rank
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].into(), f[1].into())
        })
        .collect();
    assert_eq!(from_panel, from_rank);
}

#[test]
fn panel_with_a_disconnected_year() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{PANEL}A,B,3,2002\nC,D,4,2002\nA,C,1,2003\n");
    let input = write(dir.path(), "p.csv", &text);
    let o = flowrank(&["panel", "--input", s(&input), "--method", "ls"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(
        stdout(&o),
        "entity,2000,2001,2002,2003\nA,1,1,failed,1\nB,1,2,failed,absent\nC,3,3,failed,2\nD,3,3,failed,absent\n"
    );
    assert_eq!(stderr(&o).trim(), "disconnected|year 2002: {A,B} {C,D}");
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "p.csv", PANEL);
    for args in [
        vec!["rank", "--input", s(&input), "--year", "2000", "--format", "text"],
        vec!["panel", "--input", s(&input), "--method", "ratio"],
        vec!["check-axioms", "--trials", "5", "--seed", "9"],
    ] {
        assert_eq!(flowrank(&args).stdout, flowrank(&args).stdout, "{args:?}");
    }
}
