import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from slconv.cli import main
from slconv.numgrid import Grid
from slconv.problem import (ProblemError, dump_problem, load_problem, parse_problem,
                            resolve_function)


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def with_spectrum(base, lams):
    return base + "spectrum = [\n" + "".join(f"{complex(l).real!r} {complex(l).imag!r}\n" for l in lams) + "]\n"


BASE = "grid = 128\nK = 20\nq = cos\nM = 0.2*cos\n"


def test_parse_builtins_and_arrays():
    g = Grid(64)
    x = g.nodes
    assert np.allclose(resolve_function("0.5*sin", g).values, 0.5 * np.sin(x))
    assert np.allclose(resolve_function("const:2.5", g).values, 2.5)
    assert np.allclose(resolve_function("-1*const:2", g).values, -2)
    f = resolve_function("pow:0.1:-0.3", g).values
    assert f[-1] == 0 and np.allclose(f[:-1], 0.1 * (np.pi - x[:-1]) ** -0.3)
    pf = parse_problem("grid = 64\nq = [\n" + "1.0 0.5\n" * 65 + "]\n# note\nK = 4 # four\n")
    assert pf.validate().K == 4
    assert np.allclose(pf.function("q").values, 1 + 0.5j)


@pytest.mark.parametrize("text", [
    "grid = 63\n", "grid = 32\n", "grid = 64\nK = 17\n", "q = foo\n", "q = const\n",
    "wat = 1\n", "grid = 64\nq = [\n1\n2\n]\n", "grid = x\n", "spectrum = 1\n",
    "q = [\n1\n", "eps = 0.1, 0.01\n", "K = 3\nK = 4\n", "mixed = maybe\n", "nonsense\n",
])
def test_bad_problems(text):
    with pytest.raises(ProblemError):
        parse_problem(text).validate()


def test_dump_round_trip():
    pf = parse_problem(with_spectrum(BASE + "Kv = 10\nmixed = true\n", [1.5, 4 + 1e-3j]))
    again = parse_problem(dump_problem(pf))
    assert again.config() == pf.config()


def test_forward_zero_and_const(tmp_path):
    out = tmp_path / "o"
    assert main(["forward", "--problem", write(tmp_path / "p", "grid = 64\nK = 10\n"), "--out", str(out)]) == 0
    rows = read_csv(out / "eigenvalues.csv")
    assert [int(r["n"]) for r in rows] == list(range(1, 11))
    assert max(abs(float(r["re_lambda"]) - int(r["n"]) ** 2) for r in rows) < 1e-8
    assert max(abs(float(r["re_kappa"])) for r in rows) < 1e-8
    out = tmp_path / "o2"
    assert main(["forward", "--problem", write(tmp_path / "p2", "grid = 256\nK = 10\nq = const:1\n"),
                 "--out", str(out)]) == 0
    rows = read_csv(out / "eigenvalues.csv")
    assert max(abs(float(r["re_lambda"]) - int(r["n"]) ** 2 - 1) for r in rows) < 1e-4
    man = json.loads((out / "manifest.json").read_text())
    assert set(man["files"]) == {"eigenvalues.csv", "manifest.json", "problem.resolved.txt"}
    assert man["config"]["grid_panels"] == 256 and man["status"] == "ok"


def test_flags_override(tmp_path):
    out = tmp_path / "o"
    p = write(tmp_path / "p", "grid = 64\nK = 10\n")
    assert main(["forward", "--problem", p, "--out", str(out), "--grid", "128", "--K", "5",
                 "--threads", "2", "--seed", "9"]) == 0
    cfg = json.loads((out / "manifest.json").read_text())["config"]
    assert (cfg["grid_panels"], cfg["K"], cfg["threads"], cfg["seed"]) == (128, 5, 2, 9)
    assert len(read_csv(out / "eigenvalues.csv")) == 5


def test_recover_v(tmp_path):
    n = np.arange(1, 21)
    p = write(tmp_path / "p", with_spectrum("grid = 128\nK = 20\n", n ** 2.0))
    assert main(["recover-v", "--problem", p, "--out", str(tmp_path / "o")]) == 0
    rows = read_csv(tmp_path / "o" / "v.csv")
    assert max(abs(float(r["re_v"])) for r in rows) < 1e-10
    c = 0.3
    p = write(tmp_path / "p2", with_spectrum("grid = 128\nK = 20\nq = const:0.3\n", n ** 2 + c))
    assert main(["recover-v", "--problem", p, "--out", str(tmp_path / "o2")]) == 0
    v = np.array([float(r["re_v"]) for r in read_csv(tmp_path / "o2" / "v.csv")])
    assert abs(v.mean() - c / 2) < 0.1 * c
    man = json.loads((tmp_path / "o2" / "manifest.json").read_text())
    assert man["results"]["mean_residual"] < 1e-10


def test_missing_spectrum_is_input_error(tmp_path):
    p = write(tmp_path / "p", BASE)
    for cmd in ("recover-v", "invert"):
        assert main([cmd, "--problem", p, "--out", str(tmp_path / cmd)]) == 2


def test_invert_and_corruption(tmp_path):
    assert main(["forward", "--problem", write(tmp_path / "p", BASE), "--out", str(tmp_path / "f")]) == 0
    lams = [float(r["re_lambda"]) for r in read_csv(tmp_path / "f" / "eigenvalues.csv")]
    p = write(tmp_path / "good", with_spectrum(BASE, lams))
    assert main(["invert", "--problem", p, "--out", str(tmp_path / "i")]) == 0
    man = json.loads((tmp_path / "i" / "manifest.json").read_text())
    assert man["results"]["m_weighted_error"] <= 5e-2
    assert {"m.csv", "trace.txt"} <= set(man["files"])
    trace = (tmp_path / "i" / "trace.txt").read_text()
    assert trace.count("block = ") == 4
    p = write(tmp_path / "bad", with_spectrum(BASE, [l + 1.0 for l in lams]))
    assert main(["invert", "--problem", p, "--out", str(tmp_path / "b")]) == 4
    assert main(["roundtrip", "--problem", p, "--out", str(tmp_path / "rb")]) == 4
    man = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert man["status"] == "failed" and "inconsistent" in man["message"]


def test_invert_zero(tmp_path):
    n = np.arange(1, 21)
    p = write(tmp_path / "p", with_spectrum("grid = 128\nK = 20\n", n ** 2.0))
    assert main(["invert", "--problem", p, "--out", str(tmp_path / "o")]) == 0
    rows = read_csv(tmp_path / "o" / "m.csv")
    assert max(abs(float(r["re_m"])) for r in rows) < 1e-10
    assert main(["roundtrip", "--problem", p, "--out", str(tmp_path / "r")]) == 0


def test_roundtrip(tmp_path):
    p = write(tmp_path / "p", BASE)
    assert main(["roundtrip", "--problem", p, "--out", str(tmp_path / "o")]) == 0
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert man["results"]["m_weighted_error"] <= 5e-2
    assert man["results"]["eigenvalue_max_diff_first_half"] <= 1e-3
    for f in ("eigenvalues.csv", "eigenvalues_roundtrip.csv", "m.csv", "m_reference.csv"):
        assert f in man["files"]


def test_rerun_from_manifest_and_resolved_file(tmp_path):
    p = write(tmp_path / "p", BASE)
    assert main(["forward", "--problem", p, "--out", str(tmp_path / "a")]) == 0
    assert main(["forward", "--problem", str(tmp_path / "a" / "manifest.json"),
                 "--out", str(tmp_path / "b")]) == 0
    assert main(["forward", "--problem", str(tmp_path / "a" / "problem.resolved.txt"),
                 "--out", str(tmp_path / "c")]) == 0
    first = (tmp_path / "a" / "eigenvalues.csv").read_bytes()
    assert first == (tmp_path / "b" / "eigenvalues.csv").read_bytes()
    assert first == (tmp_path / "c" / "eigenvalues.csv").read_bytes()


def test_stability_command(tmp_path):
    p = write(tmp_path / "p", BASE + "eps = 1e-3, 1e-2\nseed = 3\n")
    assert main(["stability", "--problem", p, "--out", str(tmp_path / "o")]) == 0
    rows = read_csv(tmp_path / "o" / "stability.csv")
    assert len(rows) == 3 and all(r["status"] == "ok" for r in rows)
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert man["results"]["norm_equivalence_ok"]


def test_stability_exit_code_on_failures(tmp_path, monkeypatch):
    import slconv.stability_lab as sl
    real = sl.invert
    calls = {"n": 0}

    def flaky(*a):
        calls["n"] += 1
        if calls["n"] > 2:
            raise RuntimeError("boom")
        return real(*a)

    monkeypatch.setattr(sl, "invert", flaky)
    p = write(tmp_path / "p", BASE + "eps = 1e-3, 1e-2, 2e-2\n")
    assert main(["stability", "--problem", p, "--out", str(tmp_path / "o")]) == 3


def test_usage_errors(tmp_path):
    assert main(["fly", "--problem", "x", "--out", str(tmp_path)]) == 2
    assert main(["forward"]) == 2
    assert main(["forward", "--problem", str(tmp_path / "missing"), "--out", str(tmp_path / "o")]) == 2


def test_solver_failure_exit_code(tmp_path, monkeypatch):
    import slconv.cli as cli
    from slconv.forward import RootLocalizationError

    def boom(*a, **k):
        raise RootLocalizationError("no root", 3)

    monkeypatch.setattr(cli, "eigenvalues", boom)
    p = write(tmp_path / "p", BASE)
    assert main(["forward", "--problem", p, "--out", str(tmp_path / "o")]) == 3


def test_module_entry_point(tmp_path):
    p = write(tmp_path / "p", "grid = 64\nK = 3\n")
    r = subprocess.run([sys.executable, "-m", "slconv", "forward", "--problem", p,
                        "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    r = subprocess.run([sys.executable, "-m", "slconv", "forward", "--problem", p],
                       capture_output=True, text=True)
    assert r.returncode == 2
