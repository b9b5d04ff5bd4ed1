from selfcheck import CHECKS, CheckResult, format_table, run_selfcheck


def test_every_identity_holds():
    results = run_selfcheck()
    assert len(results) == len(CHECKS)
    failed = [(r.name, r.value, r.note) for r in results if not r.passed]
    assert failed == []


def test_table_layout():
    results = [CheckResult("alpha", 1e-9, 1e-6, True), CheckResult("beta", float("nan"), 0.0, False, "ValueError")]
    table = format_table(results).splitlines()
    assert table[0].startswith("check")
    assert table[2].endswith("PASS")
    assert table[3].endswith("FAIL (ValueError)")
    assert table[-1] == "1/2 checks passed"


def test_repeated_runs_print_identical_tables():
    first = format_table(run_selfcheck())
    second = format_table(run_selfcheck())
    assert first.encode("utf-8") == second.encode("utf-8")
