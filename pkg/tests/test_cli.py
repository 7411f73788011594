import json
import subprocess
import sys

import numpy as np
import pytest

from boolgrow import cli, spectrum
from boolgrow.connective import preset
from boolgrow.process import ProcessSpec, SupportSpec, iterates


def run(capsys, *argv):
    status = cli.main(list(argv))
    out, err = capsys.readouterr()
    return status, out, err


def test_classify_majority(capsys):
    status, out, _ = run(capsys, "classify", "--connective", "maj3")
    data = json.loads(out)
    assert status == 0
    props = data["properties"]
    assert props["balanced"] and props["monotone"] and props["self_dual"]
    assert data["fixed_point"]["s"] == pytest.approx(0.5)


def test_classify_inline_json_and_file(capsys, tmp_path):
    text = json.dumps(preset("and2").to_json())
    status, out, _ = run(capsys, "classify", "--connective", text)
    assert status == 0 and json.loads(out)["fixed_point"]["kind"] == "below_everywhere"
    path = tmp_path / "c.json"
    path.write_text(text)
    status, out2, _ = run(capsys, "classify", "--connective", str(path))
    assert status == 0 and out2 == out


def test_predict_slice(capsys):
    status, out, _ = run(capsys, "predict", "--n", "2", "--connective", "maj3", "--support", "proj,const0,const1")
    data = json.loads(out)
    assert status == 0
    assert data["prediction"]["summary"] == "UniformOnSet(Slice(1))"
    assert data["set_sizes"] == [4]


def test_verify_all_pass(capsys):
    status, out, _ = run(capsys, "verify", "--kmax", "4", "--nmax", "2", "--ci")
    report = json.loads(out)
    assert status == 0 and all(r["pass"] for r in report)


def test_exit_codes(capsys):
    assert run(capsys, "predict", "--n", "2", "--connective", "nope")[0] == 1
    assert run(capsys, "iterate", "--n", "2", "--connective", "maj3", "--support", "bogus")[0] == 1
    assert run(capsys, "sample", "--n", "2", "--connective", "maj3", "--depth", "2")[0] == 1
    assert run(capsys, "iterate", "--n", "6", "--connective", "maj3")[0] == 2
    assert run(capsys, "spectrum")[0] == 1
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        cli.main(["iterate", "--n", "x", "--connective", "maj3"])
    assert exc.value.code == 1


def test_sample_is_byte_identical(tmp_path):
    args = ["sample", "--n", "3", "--connective", "maj3", "--support", "proj,neg", "--depth", "5",
            "--samples", "5000", "--seed", "9", "--emit-formula"]
    paths = []
    for threads in ("1", "4"):
        p = tmp_path / f"s{threads}.json"
        assert cli.main(args + ["--threads", threads, "--out", str(p)]) == 0
        paths.append(p)
    assert paths[0].read_bytes() == paths[1].read_bytes()
    data = json.loads(paths[0].read_text())
    assert data["formula"].startswith("maj3(")


def test_iterate_then_spectrum_round_trip(tmp_path, capsys):
    dist_path = tmp_path / "d.json"
    assert cli.main(["iterate", "--n", "2", "--connective", "maj3", "--support", "const0,const1",
                     "--steps", "6", "--every", "3", "--out", str(dist_path)]) == 0
    spec_path = tmp_path / "s.json"
    assert cli.main(["spectrum", "--input", str(dist_path), "--out", str(spec_path)]) == 0
    from_file = json.loads(spec_path.read_text())
    spec = ProcessSpec(SupportSpec(2, const0=True, const1=True), preset("maj3"))
    in_process = [spectrum.transform(pi) for pi in iterates(spec, 6) if pi.iteration % 3 == 0]
    assert [s["iteration"] for s in from_file] == [0, 3, 6]
    for got, want in zip(from_file, in_process):
        assert np.array_equal([e["delta"] for e in got["entries"]], want.values)


def test_csv_outputs(capsys):
    status, out, _ = run(capsys, "converge", "--n", "2", "--connective", "maj3", "--support", "const0,const1",
                         "--epsilon", "1e-3", "--max-i", "5", "--format", "csv")
    lines = out.strip().splitlines()
    assert status == 0 and lines[0] == "i,distance,bound" and len(lines) == 7
    assert float(lines[1].split(",")[1]) == 0.25
    status, out, _ = run(capsys, "iterate", "--n", "2", "--connective", "and2", "--steps", "1", "--format", "csv")
    assert "1,8,0.5" in out.splitlines()


def test_bounds_output(capsys):
    status, out, _ = run(capsys, "bounds", "--n", "2", "--connective", "maj3", "--support", "neg,const0,const1",
                         "--epsilon", "0.1")
    data = json.loads(out)
    assert status == 0
    assert data["iterations"]["value"] == 7067
    assert data["bound_constants"]["I"] == pytest.approx(4112)


def test_threads_env_fallback(monkeypatch, capsys):
    monkeypatch.setenv("BOOLGROW_THREADS", "2")
    assert run(capsys, "iterate", "--n", "2", "--connective", "maj3", "--steps", "1")[0] == 0
    monkeypatch.setenv("BOOLGROW_THREADS", "two")
    assert run(capsys, "iterate", "--n", "2", "--connective", "maj3", "--steps", "1")[0] == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "boolgrow", "predict", "--n", "3", "--connective", "maj3"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["prediction"]["summary"] == "Concentrated(Threshold(2))"
