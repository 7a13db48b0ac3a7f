//! Harness behaviour with real shell programs and the table backend.

use std::time::Instant;

use verisynth::harness::{ExecutionBackend, Harness, Limits};
use verisynth::{BoolMatrix, PassMatrix, Solution, TestArtifact, TestPayload, Verdict};

fn sol(i: usize, code: &str) -> Solution {
    Solution {
        id: format!("s{i}"),
        problem_id: "p".into(),
        payload: code.into(),
        sample_index: i,
    }
}

fn io(j: usize, input: &str, expected: &str) -> TestArtifact {
    TestArtifact::io_pair(format!("t{j}"), "p", input, expected)
}

fn judge(limits: Limits) -> Harness {
    Harness::new(ExecutionBackend::shell_judge(), limits).unwrap()
}

fn quick() -> Limits {
    Limits {
        wall_timeout_ms: 500,
        ..Limits::default()
    }
}

const DOUBLE: &str = "read x; echo $((x * 2))";

#[test]
fn io_pair_verdicts() {
    let h = judge(quick());
    let t = io(0, "21\n", "42\n");
    assert_eq!(h.run_pair(&sol(0, DOUBLE), &t).verdict(), Verdict::Pass);
    assert_eq!(h.run_pair(&sol(1, "read x; echo $x"), &t).verdict(), Verdict::Fail);
    let crash = h.run_pair(&sol(2, "exit 7"), &t);
    assert_eq!(crash.verdict(), Verdict::Error);
    assert!(crash.detail().is_some());
    // Trailing spaces and blank lines are not significant.
    assert_eq!(h.run_pair(&sol(3, "read x; printf '42  \\n\\n\\n'"), &t).verdict(), Verdict::Pass);
}

#[test]
fn correct_output_with_nonzero_exit_fails() {
    let h = judge(quick());
    let o = h.run_pair(&sol(0, "echo 42; exit 1"), &io(0, "", "42"));
    assert_ne!(o.verdict(), Verdict::Pass);
}

#[test]
fn infinite_loop_times_out_within_twice_the_limit() {
    let h = judge(quick());
    let start = Instant::now();
    let o = h.run_pair(&sol(0, "while :; do :; done"), &io(0, "", ""));
    let took = start.elapsed().as_millis() as u64;
    assert_eq!(o.verdict(), Verdict::Timeout);
    assert!(took < 2 * quick().wall_timeout_ms, "took {took} ms");
}

#[test]
fn background_children_are_killed_with_the_group() {
    let h = judge(quick());
    let start = Instant::now();
    // The child keeps stdout open; the harness must not wait for it.
    let o = h.run_pair(&sol(0, "sleep 30 & echo 1"), &io(0, "", "1"));
    assert!(start.elapsed().as_millis() < 2 * 500, "{:?}", start.elapsed());
    assert_eq!(o.verdict(), Verdict::Pass);
}

#[test]
fn output_cap_is_an_error() {
    let h = judge(Limits {
        output_cap_bytes: 4096,
        ..quick()
    });
    let start = Instant::now();
    let o = h.run_pair(&sol(0, "while :; do echo aaaaaaaaaaaaaaaa; done"), &io(0, "", ""));
    assert_eq!(o.verdict(), Verdict::Error);
    assert!(start.elapsed().as_millis() < 500);
}

#[test]
fn memory_cap_breach_is_not_a_pass() {
    let h = judge(Limits {
        memory_cap_bytes: 64 << 20,
        ..quick()
    });
    let hog = "x=$(head -c 200000000 /dev/zero | tr '\\0' a); echo ${#x}";
    let o = h.run_pair(&sol(0, hog), &io(0, "", "200000000"));
    assert_ne!(o.verdict(), Verdict::Pass);
}

#[test]
fn checker_program_protocol() {
    let h = judge(quick());
    let t = TestArtifact {
        id: "t".into(),
        problem_id: "p".into(),
        payload: TestPayload::CheckerProgram {
            input: "3\n".into(),
            // Accepts any output greater than the input.
            checker: "read a < \"$1\"; read b < \"$2\"; [ \"$b\" -gt \"$a\" ]".into(),
        },
        annotated: false,
    };
    assert_eq!(h.run_pair(&sol(0, DOUBLE), &t).verdict(), Verdict::Pass);
    assert_eq!(h.run_pair(&sol(1, "read x; echo 1"), &t).verdict(), Verdict::Fail);
}

fn script(setup: &[&str], asserts: &[&str]) -> TestArtifact {
    TestArtifact {
        id: "t".into(),
        problem_id: "p".into(),
        payload: TestPayload::CommandScript {
            setup: setup.iter().map(|s| s.to_string()).collect(),
            run: "sh {solution_file}".into(),
            asserts: asserts.iter().map(|s| s.to_string()).collect(),
        },
        annotated: false,
    }
}

#[test]
fn command_script_protocol() {
    let h = Harness::new(ExecutionBackend::Command { workdir_prefix: None }, quick()).unwrap();
    let t = script(&["mkdir data", "echo hello > data/in.txt"], &["test -f out.txt", "grep -q HELLO out.txt"]);
    let upper = sol(0, "tr a-z A-Z < data/in.txt > out.txt");
    let copy = sol(1, "cp data/in.txt out.txt");
    assert_eq!(h.run_pair(&upper, &t).verdict(), Verdict::Pass);
    assert_eq!(h.run_pair(&copy, &t).verdict(), Verdict::Fail);
    // Each run starts from an empty directory.
    let fresh = script(&[], &["test ! -e out.txt"]);
    assert_eq!(h.run_pair(&sol(2, "true"), &fresh).verdict(), Verdict::Pass);
    let bad_setup = script(&["exit 3"], &["true"]);
    assert_eq!(h.run_pair(&upper, &bad_setup).verdict(), Verdict::Error);
}

#[test]
fn incompatible_protocol_is_an_error_outcome() {
    let h = judge(quick());
    assert_eq!(h.run_pair(&sol(0, "true"), &script(&[], &["true"])).verdict(), Verdict::Error);
    let c = Harness::new(ExecutionBackend::Command { workdir_prefix: None }, quick()).unwrap();
    assert_eq!(c.run_pair(&sol(0, DOUBLE), &io(0, "1", "2")).verdict(), Verdict::Error);
}

fn candidates() -> (Vec<Solution>, Vec<TestArtifact>) {
    let sols = vec![
        sol(0, DOUBLE),
        sol(1, "read x; echo $((x + x))"),
        sol(2, "read x; echo $((x * 3))"),
        sol(3, "read x; if [ $x -gt 5 ]; then echo 0; else echo $((x * 2)); fi"),
        sol(4, "exit 1"),
    ];
    let tests = (0..6).map(|j| io(j, &format!("{}\n", j * 2), &format!("{}\n", j * 4))).collect();
    (sols, tests)
}

#[test]
fn matrix_is_independent_of_parallelism() {
    let (sols, tests) = candidates();
    let h = judge(quick());
    let one = h.build_pass_matrix("p", &sols, &tests, 1).unwrap().without_timings();
    let many = h.build_pass_matrix("p", &sols, &tests, 8).unwrap().without_timings();
    assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&many).unwrap());
    assert_eq!(h.invocations(), 2 * 5 * 6);
    assert_eq!(
        verisynth::binarize(&one),
        BoolMatrix::from_bits(&["111111", "111111", "100000", "111000", "000000"])
    );
    // A single pair rerun in isolation reproduces its cell.
    assert_eq!(h.run_pair(&sols[3], &tests[4]).verdict(), one.cell(3, 4).verdict());
}

#[test]
fn rows_follow_sample_index() {
    let (mut sols, tests) = candidates();
    sols.reverse();
    let h = judge(quick());
    let m = h.build_pass_matrix("p", &sols, &tests, 4).unwrap();
    assert_eq!(m.solution_ids, ["s0", "s1", "s2", "s3", "s4"]);
}

#[test]
fn id_problems_are_reported_before_execution() {
    let (mut sols, tests) = candidates();
    sols[1].id = "s0".into();
    let h = judge(quick());
    assert!(matches!(
        h.build_pass_matrix("p", &sols, &tests, 2),
        Err(verisynth::Error::DuplicateId(_))
    ));
    let (sols, mut tests) = candidates();
    tests[2].problem_id = "other".into();
    assert!(h.build_pass_matrix("p", &sols, &tests, 2).is_err());
    assert_eq!(h.invocations(), 0);
}

#[test]
fn table_backend_fills_from_grid() {
    let grid = BoolMatrix::from_bits(&["101", "011"]);
    let mut table = PassMatrix::from_bools("p", &grid);
    table.solution_ids = vec!["a".into(), "b".into()];
    table.test_ids = vec!["x".into(), "y".into(), "z".into()];
    let h = Harness::new(ExecutionBackend::Table { grids: vec![table] }, Limits::default()).unwrap();
    let sols: Vec<Solution> = ["a", "b"]
        .iter()
        .enumerate()
        .map(|(i, id)| Solution { id: id.to_string(), ..sol(i, "") })
        .collect();
    // Columns follow the order of the tests given.
    let tests: Vec<TestArtifact> = ["z", "x"].iter().map(|id| TestArtifact::io_pair(*id, "p", "", "")).collect();
    let m = h.build_pass_matrix("p", &sols, &tests, 3).unwrap();
    assert_eq!(verisynth::binarize(&m), BoolMatrix::from_bits(&["11", "10"]));
    assert_eq!(h.invocations(), 4);
    assert!(h.build_pass_matrix("q", &[], &[], 1).is_err());
}

#[test]
fn generator_programs_materialize_tests() {
    let h = judge(quick());
    let code = r#"printf '[{"input":"1\\n","expected":"2\\n"},{"input":"5\\n","expected":"10\\n"}]'"#;
    let pairs = h.materialize_generated(code).unwrap();
    assert_eq!(pairs, [("1\n".to_string(), "2\n".to_string()), ("5\n".to_string(), "10\n".to_string())]);
    assert!(h.materialize_generated("echo not json").is_err());
    assert!(h.materialize_generated("exit 1").is_err());
    assert_eq!(h.invocations(), 0);
}

#[test]
fn bad_limits_and_interpreters_are_rejected() {
    assert!(Harness::new(ExecutionBackend::shell_judge(), Limits { wall_timeout_ms: 0, ..Limits::default() }).is_err());
    assert!(Harness::new(ExecutionBackend::IoJudge { interpreter: vec![] }, Limits::default()).is_err());
}
