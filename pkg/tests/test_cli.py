import json
import subprocess
import sys

import pytest

from areabound import __version__
from areabound import integrands
from areabound.cli import EXIT_FAIL, EXIT_NA, EXIT_OK, main, parse_params
from areabound.domain import PlanarDomain
from areabound.graph_surface import GraphSurface, surface_to_json
from areabound.integrands import AreaIntegrand
from areabound.io import config_digest


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture(scope="module")
def solved(tmp_path_factory):
    d = tmp_path_factory.mktemp("solve")
    path = d / "s.json"
    assert main(["solve", "--domain", "unit_square:33", "--system", "minimal", "--codim", "1",
                 "--boundary", "x*y", "--out", str(path)]) == EXIT_OK
    return path


@pytest.fixture(scope="module")
def system_surface(tmp_path_factory):
    path = tmp_path_factory.mktemp("system") / "z2.json"
    assert main(["solve", "--domain", "unit_disc:33", "--codim", "2", "--boundary", "x^2-y^2, 2*x*y",
                 "--out", str(path)]) == EXIT_OK
    return path


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return p


class TestSolve:
    def test_surface_file(self, solved):
        obj = json.loads(solved.read_text())
        assert obj["meta"]["solve"]["converged"] is True
        assert obj["version"] == __version__
        assert obj["config_digest"] == config_digest(obj["config"])
        assert obj["config"]["params"]["integrand"] == "area"

    def test_non_convergence_exit(self, capsys):
        code, out, _ = run(capsys, "solve", "--domain", "unit_square:17", "--boundary", "x*y", "--max-iter", "1")
        assert code == EXIT_FAIL
        assert json.loads(out)["converged"] is False

    def test_fermat_needs_gamma(self, capsys):
        code, _, err = run(capsys, "solve", "--domain", "unit_disc:17", "--system", "fermat", "--boundary", "x")
        assert code == EXIT_FAIL and "--gamma" in err

    def test_fermat_solve(self, capsys, tmp_path):
        code, out, _ = run(capsys, "solve", "--domain", "unit_disc:17", "--system", "fermat", "--gamma", "1+x^2/40",
                           "--codim", "2", "--boundary", "0.3*x, 0.3*y", "--out", str(tmp_path / "f.json"))
        assert code == EXIT_OK
        code, out, _ = run(capsys, "verify", "--surface", str(tmp_path / "f.json"), "--bound", "eq4.21")
        rec = json.loads(out)
        assert rec["verdict"] == "holds" and rec["inputs"]["Lambda"] < 1


class TestVerify:
    @pytest.mark.parametrize("bound", ["eq3.22", "eq3.8", "eq3.19", "eq3.28", "eq2.25"],
                             ids=["minimal", "divergence", "homogeneous", "interior", "outer_ball"])
    def test_graph_bounds_hold(self, capsys, solved, bound):
        code, out, _ = run(capsys, "verify", "--surface", str(solved), "--bound", bound)
        rec = json.loads(out)
        assert code == EXIT_OK and rec["verdict"] == "holds"
        assert rec["bound_id"] == bound
        assert {"version", "config_digest", "grid", "hypotheses", "inputs", "slack"} <= rec.keys()

    def test_system_bounds(self, capsys, system_surface):
        for bound in ("eq4.38", "eq4.21"):
            code, out, _ = run(capsys, "verify", "--surface", str(system_surface), "--bound", bound)
            assert code == EXIT_OK and json.loads(out)["verdict"] == "holds"

    def test_not_applicable_exit(self, capsys, tmp_path):
        imm = write(tmp_path, "plane.json", {"builtin": "plane"})
        code, out, _ = run(capsys, "verify", "--surface", str(imm), "--bound", "thm2.13",
                           "--params", "mu=0.5,radius=0.4")
        assert code == EXIT_NA and json.loads(out)["verdict"] == "not_applicable"

    def test_violated_exit(self, capsys, tmp_path):
        # a bumpy surface with zero boundary values is no minimal graph and exceeds the flat bound
        s = GraphSurface.from_functions(PlanarDomain.unit_disc(33), [lambda x, y: 5 * x * y * (1 - x * x - y * y)])
        p = write(tmp_path, "bump.json", surface_to_json(s))
        code, out, _ = run(capsys, "verify", "--surface", str(p), "--bound", "eq3.22")
        assert json.loads(out)["verdict"] == "violated"
        assert code == EXIT_FAIL

    @pytest.mark.parametrize("bound,params", [("thm2.13", "mu=2,radius=0.4"), ("eq2.27", "K0=0,radius=0.4"),
                                              ("eq2.31", "K0=0,radius=0.4")],
                             ids=["stable_disc", "total_curvature", "boundary_curvature"])
    def test_immersion_bounds(self, capsys, tmp_path, bound, params):
        imm = write(tmp_path, "cat.json", {"builtin": "catenoid", "params": {"scale": 1.0}})
        code, out, _ = run(capsys, "verify", "--surface", str(imm), "--bound", bound, "--params", params)
        assert code == EXIT_OK and json.loads(out)["verdict"] == "holds"

    def test_unknown_param_rejected(self, capsys, solved):
        code, _, err = run(capsys, "verify", "--surface", str(solved), "--bound", "eq3.22", "--params", "colour=red")
        assert code == EXIT_FAIL and "colour" in err

    def test_report_and_csv(self, capsys, solved, tmp_path):
        rep, csv = tmp_path / "r.jsonl", tmp_path / "r.csv"
        for _ in range(2):
            run(capsys, "verify", "--surface", str(solved), "--bound", "eq3.22", "--report", str(rep), "--csv", str(csv))
        lines = rep.read_text().splitlines()
        assert len(lines) == 2 and lines[0] == lines[1]
        assert csv.read_text().splitlines()[0] == "bound_id,lhs,rhs,slack,verdict"


class TestMalformedInput:
    def test_invalid_json(self, capsys, tmp_path):
        p = write(tmp_path, "bad.json", "{not json")
        code, _, err = run(capsys, "verify", "--surface", str(p), "--bound", "eq3.22")
        assert code == EXIT_FAIL and "bad.json" in err and "invalid JSON" in err

    def test_missing_field(self, capsys, solved, tmp_path):
        obj = json.loads(solved.read_text())
        del obj["values"]
        p = write(tmp_path, "nofield.json", obj)
        code, _, err = run(capsys, "verify", "--surface", str(p), "--bound", "eq3.22")
        assert code == EXIT_FAIL and "nofield.json" in err and "values" in err

    def test_missing_solve_field(self, capsys, solved, tmp_path):
        obj = json.loads(solved.read_text())
        del obj["meta"]["solve"]["residual"]
        p = write(tmp_path, "nores.json", obj)
        code, _, err = run(capsys, "verify", "--surface", str(p), "--bound", "eq3.22")
        assert code == EXIT_FAIL and "meta.solve.residual" in err

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "area", "--surface", str(tmp_path / "none.json"))
        assert code == EXIT_FAIL and "none.json" in err

    def test_unknown_builtin(self, capsys, tmp_path):
        p = write(tmp_path, "torus.json", {"builtin": "torus"})
        code, _, err = run(capsys, "stability", "--immersion", str(p))
        assert code == EXIT_FAIL and "torus" in err

    def test_usage_error_exit(self, capsys):
        with pytest.raises(SystemExit) as e:
            main(["verify", "--bound", "eq9.99"])
        assert e.value.code == EXIT_FAIL


class TestDeterminism:
    def test_byte_identical_reports(self, capsys, tmp_path, monkeypatch):
        outputs = []
        for k in range(2):
            d = tmp_path / f"run{k}"
            d.mkdir()
            monkeypatch.chdir(d)
            assert main(["solve", "--domain", "unit_disc:17", "--boundary", "x*y", "--out", "s.json",
                         "--report", "r.jsonl"]) == EXIT_OK
            assert main(["verify", "--surface", "s.json", "--bound", "eq3.8", "--report", "r.jsonl"]) == EXIT_OK
            assert main(["gradcheck", "--integrand", "area", "--seed", "7", "--report", "r.jsonl"]) == EXIT_OK
            outputs.append(((d / "s.json").read_bytes(), (d / "r.jsonl").read_bytes()))
        capsys.readouterr()
        assert outputs[0] == outputs[1]

    def test_seed_enters_config(self, capsys):
        _, a, _ = run(capsys, "gradcheck", "--integrand", "area", "--seed", "1")
        _, b, _ = run(capsys, "gradcheck", "--integrand", "area", "--seed", "2")
        assert json.loads(a)["config_digest"] != json.loads(b)["config_digest"]


class TestGradcheck:
    @pytest.mark.parametrize("spec", ["area", "fermat:gamma=1+x^2"])
    def test_builtins(self, capsys, spec):
        code, out, _ = run(capsys, "gradcheck", "--integrand", spec)
        assert code == EXIT_OK and json.loads(out)["max_relative_deviation"] < 1e-6

    def test_fault_injection(self, capsys, monkeypatch):
        class Broken(AreaIntegrand):
            def gradient(self, x, y, z, p, q):
                Fp, Fq, Fz = super().gradient(x, y, z, p, q)
                return Fp * 1.05, Fq, Fz

        monkeypatch.setitem(integrands.CATALOG, "broken", lambda m, params: Broken(m))
        code, out, _ = run(capsys, "gradcheck", "--integrand", "broken")
        rec = json.loads(out)
        assert code == EXIT_FAIL
        assert rec["max_relative_deviation"] > 1e-2 and rec["verdict"] == "failed"


class TestOtherCommands:
    def test_area(self, capsys, solved):
        code, out, _ = run(capsys, "area", "--surface", str(solved))
        assert code == EXIT_OK and json.loads(out)["area"] > 1.0

    def test_stability(self, capsys, tmp_path):
        p = write(tmp_path, "plane.json", {"builtin": "plane"})
        code, out, _ = run(capsys, "stability", "--immersion", str(p))
        assert code == EXIT_OK and json.loads(out)["status"] == "unbounded"
        code, out, _ = run(capsys, "stability", "--immersion", str(p), "--q", "1", "--weight", "anisotropic:a=2")
        rec = json.loads(out)
        assert rec["status"] == "bounded" and rec["g0"] == 1.0

    def test_geodesic_table(self, capsys, tmp_path):
        p = write(tmp_path, "sphere.json", {"builtin": "sphere", "params": {"cap": 1.2}})
        table = tmp_path / "t.csv"
        code, out, _ = run(capsys, "geodesic", "--immersion", str(p), "--radius", "0.8", "--n-rho", "16",
                           "--n-phi", "32", "--table", str(table))
        assert code == EXIT_OK
        assert len(table.read_text().splitlines()) == 1 + 17

    def test_suite_subset(self, capsys):
        code, out, _ = run(capsys, "suite", "--only", "2")
        assert code == EXIT_OK
        assert out.startswith("criterion") and " 2 PASS" in out

    def test_console_script(self):
        r = subprocess.run([sys.executable, "-m", "areabound.cli", "--version"], capture_output=True, text=True)
        assert __version__ in r.stdout


def test_parse_params_top_level_commas():
    p = parse_params(["center=[0.1,0.2],radius=0.5", "K0=1"], {"center", "radius", "K0"})
    assert p == {"center": "[0.1,0.2]", "radius": 0.5, "K0": 1}
