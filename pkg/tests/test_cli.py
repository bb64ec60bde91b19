import pytest

from plausibility_mc.cli import EXIT_FALSE, EXIT_OK, EXIT_UNSOUND, EXIT_USAGE, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def body_file(tmp_path, capsys):
    path = tmp_path / "body.model"
    assert main(["gen", "butterfly", "--k", "300", "--m", "50", "--depth", "0", "-o", str(path)]) == 0
    capsys.readouterr()
    return path


def test_check_exit_codes(capsys, body_file):
    m = str(body_file)
    code, out, _ = run(capsys, "check", "--model", m, "--state", "b300:w0", "--formula", "K_R([250] | [300] | [350])")
    assert code == EXIT_OK and "value: true" in out and "soundness: exact" in out
    code, out, _ = run(capsys, "check", "--model", m, "--state", "b300:w0", "--formula", "K_R [300]")
    assert code == EXIT_FALSE and "witness: b300:w1" in out
    # the wing below w1 is not generated at depth 0
    args = ("check", "--model", m, "--state", "b300:w1", "--formula", "K_C [250]")
    assert run(capsys, *args)[0] == EXIT_OK
    assert run(capsys, *args, "--strict")[0] == EXIT_UNSOUND


def test_check_is_deterministic(capsys, body_file):
    args = ("check", "--model", str(body_file), "--state", "b300:w0", "--formula", "<K_R><K_C>[250]", "--kv")
    first = run(capsys, *args)
    assert first == run(capsys, *args)


def test_usage_errors(capsys, body_file):
    assert run(capsys, "frobnicate")[0] == EXIT_USAGE
    assert run(capsys, "check", "--model", str(body_file), "--state", "b300:w0", "--formula", "K_R (")[0] == EXIT_USAGE
    assert run(capsys, "check", "--model", str(body_file), "--state", "nowhere", "--formula", "true")[0] == EXIT_USAGE
    assert run(capsys, "check", "--model", "/nonexistent", "--state", "x", "--formula", "true")[0] == EXIT_USAGE


def test_flutter_check_with_threshold_sugar(capsys, tmp_path):
    d = tmp_path / "fl"
    assert main(["gen", "flutter", "--k-lo", "250", "--k-hi", "350", "--m", "50", "--depth", "2",
                 "--manifest-only", "-o", str(d)]) == 0
    capsys.readouterr()
    code, out, _ = run(capsys, "check", "--model", str(d), "--state", "b300:w0", "--formula", "r^3([>100] || true)")
    assert code == EXIT_OK and "value: true" in out
    code, _, err = run(capsys, "check", "--model", str(d), "--state", "b300:w0", "--formula", "r^3([>100])")
    assert code == EXIT_USAGE and "column 11:" in err


def test_facts_refusals(capsys):
    code, _, err = run(capsys, "facts", "--m", "10", "--depth", "10")
    assert code == EXIT_USAGE and "minimum depth 20" in err
    code, _, err = run(capsys, "facts", "--threshold", "400")
    assert code == EXIT_USAGE and "threshold" in err


def test_facts_kv(capsys):
    code, out, _ = run(capsys, "facts", "--m", "100", "--kv")
    assert code == EXIT_OK
    assert "chain_depth=3" in out and "all=pass" in out


def test_seed_env_override(capsys, monkeypatch):
    args = ("suite", "oracle", "--models", "3", "--formulas", "2")
    _, a, _ = run(capsys, "--seed", "4", *args)
    monkeypatch.setenv("PLAUSIBILITY_MC_SEED", "4")
    _, b, _ = run(capsys, "--seed", "1", *args)
    assert a == b and "seed 4" in b


def test_ck_and_lewis(capsys, body_file):
    m = str(body_file)
    code, out, _ = run(capsys, "ck", "--model", m, "--formula", "[250] | [300] | [350]")
    assert code == EXIT_OK
    with open(m, "a") as fh:
        fh.write("select true *: b300:w0\n")
    code, out, _ = run(capsys, "lewis", "--model", m, "--basis", "{b300:w0}", "--target", "[300]")
    assert code == EXIT_OK


def test_dump_dot(capsys, body_file):
    code, out, _ = run(capsys, "dump", "--model", str(body_file), "--dot")
    assert code == EXIT_OK and out.startswith("digraph")
