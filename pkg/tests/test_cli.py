import json
import shutil
from pathlib import Path

import pytest

from gpmemory.cli import (
    EXIT_NUMERICAL,
    EXIT_PARSE,
    EXIT_VALIDATION,
    ConfigParseError,
    ConfigValidationError,
    config_from_dict,
    main,
    parse_config,
    sha256,
)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path, obj, name="c.json"):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return p


def test_minimal_config_defaults(tmp_path):
    cfg = parse_config(write(tmp_path, {"command": "kernel", "kernel": {"type": "expsum", "terms": [[1, 1], [1, 2]]}}))
    assert cfg.command == "kernel"
    assert cfg.sections["geometry"] == {"R": 1.0}
    assert cfg.sections["certify"]["schedule"] == [5, 10, 15, 20, 25]


def test_config_validation_errors(tmp_path):
    bad = [
        {"command": "kernel", "kernel": {"type": "expsum", "terms": [[1, 1], [1, 1]]}},
        {"command": "bogus"},
        {"command": "spectrum", "colour": 1},
        {"command": "spectrum", "modes": {"m_max": 2, "k": 1}},
        {"command": "spectrum", "modes": {"m_max": 99}},
        {"command": "roots"},
        {"command": "certify", "kernel": {"type": "constant", "C": 1}, "certify": {"schedule": [5, 3]}},
        {"command": "stability", "stability": {"convention": "sideways"}},
    ]
    for raw in bad:
        with pytest.raises(ConfigValidationError):
            config_from_dict(raw)


def test_duplicate_rate_message_names_key():
    with pytest.raises(ConfigValidationError, match="kernel"):
        config_from_dict({"command": "kernel", "kernel": {"type": "expsum", "terms": [[1, 1], [1, 1]]}})


def test_parse_error_has_position(tmp_path):
    with pytest.raises(ConfigParseError, match=r"line 2, column"):
        parse_config(write(tmp_path, '{"command": "kernel",\n  oops}'))


def test_echo_round_trip(tmp_path):
    cfg = parse_config(CONFIGS / "certify.json")
    again = config_from_dict(json.loads(json.dumps(cfg.echo())))
    assert again == cfg


def test_exit_codes(tmp_path):
    assert main([str(write(tmp_path, "{nope"))]) == EXIT_PARSE
    assert main([str(write(tmp_path, {"command": "bogus"}))]) == EXIT_VALIDATION
    out = tmp_path / "out"
    cfg = {"command": "roots", "kernel": {"type": "constant", "C": 1.0}, "output_dir": str(out)}
    assert main([str(write(tmp_path, cfg))]) == EXIT_NUMERICAL
    # fail closed: nothing but the (empty) output directory remains
    assert list(out.iterdir()) == []


def test_missing_config_file(tmp_path):
    assert main([str(tmp_path / "absent.json")]) == EXIT_PARSE


@pytest.mark.parametrize("name", ["spectrum", "kernel", "roots", "stability"])
def test_manifest_hashes(tmp_path, name):
    assert main([str(CONFIGS / f"{name}.json"), "--out", str(tmp_path), "--threads", "2"]) == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["files"]
    for entry in manifest["files"]:
        assert sha256(tmp_path / entry["name"]) == entry["sha256"]
    assert manifest["config"]["command"] == name
    assert not any(p.name.startswith(".gpctl-") for p in tmp_path.iterdir())


def test_roots_output(tmp_path):
    assert main([str(CONFIGS / "roots.json"), "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "roots.csv").read_text().splitlines()
    assert lines[0] == "n,lambda_sq,re_root,im_root,dist_to_target"
    d = [float(l.split(",")[4]) for l in lines[1:]]
    assert len(d) == 40 and all(b < a for a, b in zip(d[3:], d[4:]))


def test_certify_output(tmp_path):
    assert main([str(CONFIGS / "certify.json"), "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["primary"]["verdict"] == "obstructed"
    assert report["contrast"]["verdict"] == "unobstructed"


def test_stability_output(tmp_path):
    assert main([str(CONFIGS / "stability.json"), "--out", str(tmp_path)]) == 0
    rows = [l.split(",") for l in (tmp_path / "stability.csv").read_text().splitlines()[1:]]
    verdicts = {float(q): v for q, _, _, v in rows}
    assert verdicts[-0.25] == "unstable" and verdicts[0.0] == "marginal"
    assert verdicts[0.5] == "stable" and verdicts[1.0] == "marginal" and verdicts[1.25] == "unstable"
    info = json.loads((tmp_path / "stability.json").read_text())
    assert info["intervals"]["as_written"]["strict"] == [-1.0, 0.0]
