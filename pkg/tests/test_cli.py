import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from gaucho.cli import main


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


OBB_LINES = (
    '{"image_id": "a", "category": "ship", "obb": [5, 5, 4, 2, 10]}\n'
    '{"image_id": "a", "category": "ship", "obb": [20, 20, 6, 3, -45]}\n'
)


def test_usage_errors_exit_64(capsys):
    with pytest.raises(SystemExit) as e:
        main(["no-such-command"])
    assert e.value.code == 64
    with pytest.raises(SystemExit) as e:
        main(["convert"])  # missing required arguments
    assert e.value.code == 64
    with pytest.raises(SystemExit) as e:
        main(["landscape", "--gt", "3,1,0", "--loss", "hausdorff"])
    assert e.value.code == 64
    capsys.readouterr()


def test_bad_flag_value_exits_64(capsys):
    code, _, err = run(["landscape", "--gt", "3,1"], capsys)
    assert code == 64
    assert "comma-separated" in err


def test_missing_file_exits_1(capsys):
    code, _, err = run(["convert", "/does/not/exist.txt",
                        "--from", "obb", "--to", "gaucho"], capsys)
    assert code == 1
    assert "error" in err


def test_convert_dota_roundtrip(tmp_path, capsys):
    src = write(tmp_path / "p001.txt",
                "imagesource:GoogleEarth\n"
                "0 0 3 0 3 1 0 1 ship 0\n"
                "2 2 5 2 5 4 2 4 plane 1\n")
    code, out, err = run(["convert", src, "--from", "dota", "--to", "obb"],
                         capsys)
    assert code == 0 and err == ""
    rows = [json.loads(l) for l in out.splitlines()]
    assert [r["image_id"] for r in rows] == ["p001", "p001"]
    np.testing.assert_allclose(rows[0]["obb"], [1.5, 0.5, 3, 1, 0], atol=1e-9)
    assert rows[1]["difficult"] is True


def test_convert_chain_preserves_geometry(tmp_path, capsys):
    src = write(tmp_path / "in.jsonl",
                '{"image_id": "x", "category": "c", "obb": [1, 2, 6, 3, 30]}\n')
    code, out, _ = run(["convert", src, "--from", "obb", "--to", "gaucho"],
                       capsys)
    assert code == 0
    mid = write(tmp_path / "mid.jsonl", out)
    code, out, _ = run(["convert", mid, "--from", "gaucho", "--to", "obb"],
                       capsys)
    assert code == 0
    vals = json.loads(out.splitlines()[0])["obb"]
    np.testing.assert_allclose(vals, [1, 2, 6, 3, 30], rtol=1e-9, atol=1e-9)


def test_convert_partial_failure_exits_2(tmp_path, capsys):
    src = write(tmp_path / "in.jsonl",
                '{"image_id": "a", "category": "c", "obb": [0, 0, 3, 1, 0]}\n'
                "garbage\n")
    code, out, err = run(["convert", src, "--from", "obb", "--to", "obb"],
                         capsys)
    assert code == 2
    assert len(out.splitlines()) == 1
    assert ":2:" in err  # failing line number reported


def test_convert_nothing_usable_exits_65(tmp_path, capsys):
    src = write(tmp_path / "in.jsonl", "garbage\nmore garbage\n")
    code, _, _ = run(["convert", src, "--from", "obb", "--to", "obb"], capsys)
    assert code == 65


def test_convert_kind_mismatch(tmp_path, capsys):
    src = write(tmp_path / "in.jsonl",
                '{"image_id": "a", "category": "c", "gaucho": [0, 0, 1, 1, 0]}\n')
    code, _, _ = run(["convert", src, "--from", "obb", "--to", "obb"], capsys)
    assert code == 65


def test_convert_writes_file(tmp_path, capsys):
    src = write(tmp_path / "in.jsonl",
                '{"image_id": "a", "category": "c", "obb": [0, 0, 3, 1, 0]}\n')
    dst = tmp_path / "out.jsonl"
    code, out, _ = run(["convert", src, "--from", "obb", "--to", "ellipse",
                        "--out", str(dst)], capsys)
    assert code == 0 and out == ""
    vals = json.loads(dst.read_text().splitlines()[0])["ellipse"]
    np.testing.assert_allclose(vals, [0, 0, 1.5, 0.5, 0], atol=1e-12)


def test_landscape_csv_shape(tmp_path, capsys):
    dst = tmp_path / "l.csv"
    code, _, _ = run(["landscape", "--gt", "3,1,89", "--loss", "kld",
                      "--steps", "720", "--out", str(dst)], capsys)
    assert code == 0
    with open(dst, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["theta_deg", "loss", "tag"]
    sweep = [r for r in rows[1:] if r[2] == ""]
    marks = [r for r in rows[1:] if r[2] != ""]
    assert len(sweep) == 720
    assert any(r[2] == "global_min" for r in marks)
    best = [float(r[0]) for r in marks if r[2] == "global_min"][0]
    assert abs(best - 89.0) < 0.25
    # angles cover [-90, 90) on a uniform grid
    assert abs(float(sweep[0][0]) + 90.0) < 1e-9
    assert float(sweep[-1][0]) < 90.0


def test_landscape_trace_csv(tmp_path, capsys):
    dst = tmp_path / "t.csv"
    code, _, _ = run(["landscape", "--gt", "3,1,30", "--steps", "360",
                      "--trace", "--out", str(dst)], capsys)
    assert code == 0
    with open(dst, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["rotation_deg", "le_w", "le_theta_deg",
                       "a", "b", "c", "alpha", "beta", "gamma"]
    assert len(rows) == 361
    a = [float(r[3]) for r in rows[1:]]
    alpha = [float(r[6]) for r in rows[1:]]
    np.testing.assert_allclose(np.array(alpha) ** 2, a, rtol=1e-12)


def test_eval_text_and_json(tmp_path, capsys):
    gt = write(tmp_path / "gt.jsonl", OBB_LINES)
    pred = write(tmp_path / "pred.jsonl",
                 '{"image_id": "a", "category": "ship", "obb": [5, 5, 4, 2, 11], "score": 0.9}\n'
                 '{"image_id": "a", "category": "ship", "obb": [20, 20, 6, 3, -44], "score": 0.8}\n')
    j = tmp_path / "report.json"
    code, out, _ = run(["eval", "--gt", gt, "--pred", pred, "--thresholds",
                        "0.5,0.75", "--orientation", "--json-out", str(j)],
                       capsys)
    assert code == 0
    assert "AP@0.50: 1.000000" in out
    payload = json.loads(j.read_text())
    assert payload["mean_ap"] == 1.0
    np.testing.assert_allclose(payload["orientation"]["aoe"], 1.0, atol=1e-9)


def test_eval_empty_gt_exits_65(tmp_path, capsys):
    gt = write(tmp_path / "gt.jsonl", "")
    pred = write(tmp_path / "pred.jsonl", OBB_LINES)
    code, _, err = run(["eval", "--gt", gt, "--pred", pred], capsys)
    assert code == 65
    assert "no usable" in err


def test_eval_oe_mode(tmp_path, capsys):
    gt = write(tmp_path / "gt.jsonl", OBB_LINES)
    pred = write(tmp_path / "pred.jsonl", OBB_LINES)  # scores default to 1
    code, out, _ = run(["eval", "--gt", gt, "--pred", pred, "--mode", "oe",
                        "--thresholds", "0.5"], capsys)
    assert code == 0
    assert "AP@0.50: 1.000000" in out


def test_bounds_check_ok(capsys):
    code, out, _ = run(["bounds-check", "--samples", "5000", "--seed", "3"],
                       capsys)
    assert code == 0
    assert "5000 samples" in out and "seed=3" in out


def test_bounds_check_env_seed(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("GAUCHO_SEED", "11")
    code, out, _ = run(["bounds-check", "--samples", "500"], capsys)
    assert code == 0 and "seed=11" in out
    # the flag wins over the environment
    code, out, _ = run(["bounds-check", "--samples", "500", "--seed", "4"],
                       capsys)
    assert code == 0 and "seed=4" in out
    monkeypatch.setenv("GAUCHO_SEED", "not-a-number")
    code, _, err = run(["bounds-check", "--samples", "500"], capsys)
    assert code == 64


def test_mask_iou_csv(tmp_path, capsys):
    ann = write(tmp_path / "ann.jsonl",
                '{"image_id": "a", "category": "c", "obb": [2, 1, 4, 2, 0]}\n')
    masks = write(tmp_path / "m.jsonl",
                  '{"image_id": "a", "category": "c",'
                  ' "polygon": [[0, 0], [4, 0], [4, 2], [0, 2]]}\n')
    dst = tmp_path / "out.csv"
    code, _, _ = run(["mask-iou", "--ann", ann, "--masks", masks,
                      "--resolution", "512", "--out", str(dst)], capsys)
    assert code == 0
    with open(dst, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["record_id", "category", "iou_obb", "iou_oe"]
    body = [r for r in rows[1:] if r[0] != "median"]
    med = [r for r in rows[1:] if r[0] == "median"]
    assert len(body) == 1 and len(med) == 1
    np.testing.assert_allclose(float(body[0][2]), 1.0, atol=5e-3)
    np.testing.assert_allclose(float(body[0][3]), math.pi / 4, atol=5e-3)


def test_mask_iou_unpaired_warns(tmp_path, capsys):
    ann = write(tmp_path / "ann.jsonl",
                '{"image_id": "a", "category": "c", "obb": [2, 1, 4, 2, 0]}\n'
                '{"image_id": "b", "category": "c", "obb": [2, 1, 4, 2, 0]}\n')
    masks = write(tmp_path / "m.jsonl",
                  '{"image_id": "a", "category": "c",'
                  ' "polygon": [[0, 0], [4, 0], [4, 2], [0, 2]]}\n'
                  '{"image_id": "z", "category": "c",'
                  ' "polygon": [[0, 0], [1, 0], [1, 1]]}\n')
    code, out, err = run(["mask-iou", "--ann", ann, "--masks", masks], capsys)
    assert code == 0
    assert "warning" in err and "b/c" in err and "z/c" in err


def test_loss_grad_protocol(tmp_path, capsys):
    src = write(tmp_path / "in.jsonl",
                '{"pred": [0, 0, 1, 1, 0], "gt": [3, 4, 1, 1, 0]}\n')
    code, out, _ = run(["loss-grad", src, "--kind", "gwd"], capsys)
    assert code == 0
    row = json.loads(out.splitlines()[0])
    np.testing.assert_allclose(row["loss"], 5.0, rtol=1e-12)
    np.testing.assert_allclose(row["grad"], [-0.6, -0.8, 0, 0, 0], atol=1e-12)


def test_loss_grad_bad_row(tmp_path, capsys):
    src = write(tmp_path / "in.jsonl",
                '{"pred": [0, 0, 1, 1, 0], "gt": [3, 4, 1, 1, 0]}\n'
                '{"pred": [0, 0, 1, 1], "gt": [3, 4, 1, 1, 0]}\n')
    code, out, err = run(["loss-grad", src], capsys)
    assert code == 2
    assert len(out.splitlines()) == 1


def test_decode_head_protocols(tmp_path, capsys):
    src = write(tmp_path / "af.jsonl",
                '{"ctx": [10, 20, 4], "offsets": [0.5, -0.25, 0, 0, 0.3]}\n')
    code, out, _ = run(["decode-head", src, "--head", "anchor-free"], capsys)
    assert code == 0
    np.testing.assert_allclose(json.loads(out)["gaucho"],
                               [12, 19, 4, 4, 1.2], rtol=1e-12)
    src = write(tmp_path / "ab.jsonl",
                '{"anchor": [0, 0, 16, 8], "offsets": [0, 0, 0, 0, 1]}\n')
    code, out, _ = run(["decode-head", src, "--head", "anchor-based"], capsys)
    assert code == 0
    np.testing.assert_allclose(json.loads(out)["gaucho"],
                               [0, 0, 8, 4, 4], rtol=1e-12)


def test_module_entry_point():
    # the package also runs as a module in a fresh interpreter
    proc = subprocess.run(
        [sys.executable, "-m", "gaucho", "bounds-check", "--samples", "200"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "200 samples" in proc.stdout


def test_dash_reads_stdin():
    # "-" means stdin for inputs, mirroring "-" as stdout for --out
    proc = subprocess.run(
        [sys.executable, "-m", "gaucho", "loss-grad", "-"],
        input='{"pred": [0, 0, 2, 1, 0], "gt": [3, 4, 4, 1, 0]}\n',
        capture_output=True, text=True)
    assert proc.returncode == 0
    row = json.loads(proc.stdout)
    assert row["loss"] > 0 and len(row["grad"]) == 5
