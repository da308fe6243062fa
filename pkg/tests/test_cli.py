"""Command line behaviour: exit codes, scaffolding, and a live serve round."""

import json
import socket
import subprocess
import sys
import time
import urllib.error
import urllib.request
from pathlib import Path

from wisflow.cli import cmd_check, cmd_init, main
from wisflow.example import FILES


# -- check ------------------------------------------------------------------------


def test_check_accepts_the_example_project(tmp_path, capsys):
    assert cmd_init(str(tmp_path / "proj")) == 0
    assert cmd_check(str(tmp_path / "proj")) == 0
    assert capsys.readouterr().err == ""


def test_check_reports_model_errors_with_exit_one(tmp_path, capsys):
    cmd_init(str(tmp_path))
    broken = (tmp_path / "thesis.cd").read_text(encoding="utf-8")
    (tmp_path / "thesis.cd").write_text(broken.replace("login: String;", ""), encoding="utf-8")
    assert cmd_check(str(tmp_path)) == 1
    err = capsys.readouterr().err
    assert "L008" in err
    assert "thesis.cd" in err


def test_check_missing_directory_is_an_environment_error(tmp_path, capsys):
    assert cmd_check(str(tmp_path / "nowhere")) == 2
    assert "not a directory" in capsys.readouterr().err


def test_check_file_argument_is_an_environment_error(tmp_path, capsys):
    target = tmp_path / "plain.txt"
    target.write_text("hi", encoding="utf-8")
    assert cmd_check(str(target)) == 2


def test_check_empty_directory_has_no_application(tmp_path, capsys):
    assert cmd_check(str(tmp_path)) == 1
    assert "no application" in capsys.readouterr().err


# -- init -------------------------------------------------------------------------


def test_init_writes_every_example_file(tmp_path, capsys):
    target = tmp_path / "proj"
    assert cmd_init(str(target)) == 0
    out = capsys.readouterr().out
    for name in FILES:
        assert (target / name).is_file()
        assert name in out
    seed = json.loads((target / "seed.json").read_text(encoding="utf-8"))
    assert {user["login"] for user in seed["Staff"]} >= {"ref1", "ref2"}


def test_init_refuses_non_empty_directory(tmp_path, capsys):
    (tmp_path / "keep.txt").write_text("", encoding="utf-8")
    assert cmd_init(str(tmp_path)) == 2
    assert "not empty" in capsys.readouterr().err


def test_init_refuses_a_file_target(tmp_path, capsys):
    target = tmp_path / "plain.txt"
    target.write_text("", encoding="utf-8")
    assert cmd_init(str(target)) == 2


def test_init_creates_missing_parents(tmp_path):
    target = tmp_path / "a" / "b" / "proj"
    assert cmd_init(str(target)) == 0
    assert (target / "thesisoffice.app").is_file()


# -- argument handling ------------------------------------------------------------


def test_main_dispatches_check(tmp_path):
    cmd_init(str(tmp_path))
    assert main(["check", str(tmp_path)]) == 0


def test_main_usage_error_exits_two():
    assert main([]) == 2
    assert main(["frobnicate"]) == 2


def test_main_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    assert "check" in capsys.readouterr().out


def test_serve_propagates_check_failures(tmp_path):
    assert main(["serve", str(tmp_path / "missing")]) == 2
    assert main(["serve", str(tmp_path)]) == 1  # empty model directory


def test_serve_occupied_port_exits_two(tmp_path, capsys):
    cmd_init(str(tmp_path))
    blocker = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        blocker.bind(("127.0.0.1", 0))
        port = blocker.getsockname()[1]
        blocker.listen(1)
        assert main(["serve", str(tmp_path), "--port", str(port)]) == 2
    finally:
        blocker.close()
    assert "already in use" in capsys.readouterr().err


# -- live server ------------------------------------------------------------------


def _free_port() -> int:
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    probe.bind(("127.0.0.1", 0))
    port = probe.getsockname()[1]
    probe.close()
    return port


def _request(method: str, url: str, body: dict | None = None, token: str | None = None):
    data = json.dumps(body).encode() if body is not None else None
    req = urllib.request.Request(url, data=data, method=method)
    req.add_header("Content-Type", "application/json")
    if token:
        req.add_header("Authorization", f"Bearer {token}")
    with urllib.request.urlopen(req, timeout=5) as resp:
        return resp.status, json.loads(resp.read() or b"{}")


def _wait_until_up(url: str, proc: subprocess.Popen, attempts: int = 100):
    for _ in range(attempts):
        if proc.poll() is not None:
            raise AssertionError(f"server exited early: {proc.stdout.read()}")
        try:
            urllib.request.urlopen(url, timeout=1)
            return
        except urllib.error.HTTPError:
            return  # any HTTP response means the server is listening
        except OSError:
            time.sleep(0.05)
    raise AssertionError("server never came up")


def _serve(model_dir: Path, port: int) -> subprocess.Popen:
    return subprocess.Popen(
        [sys.executable, "-m", "wisflow", "serve", str(model_dir), "--port", str(port)],
        stdout=subprocess.PIPE,
        stderr=subprocess.STDOUT,
        text=True,
    )


def test_init_check_serve_round_trip_preserves_data(tmp_path):
    model_dir = tmp_path / "proj"
    assert cmd_init(str(model_dir)) == 0
    assert cmd_check(str(model_dir)) == 0

    port = _free_port()
    base = f"http://127.0.0.1:{port}"
    proc = _serve(model_dir, port)
    try:
        _wait_until_up(f"{base}/menu", proc)
        status, login = _request("POST", f"{base}/login", {"login": "ref1", "password": "ref1pw"})
        assert status == 200
        token = login["token"]
        status, created = _request(
            "POST",
            f"{base}/class/ThesisData",
            {"fields": {"title": "Kept across restarts"}},
            token,
        )
        assert status == 201
        kept_id = created["id"]
    finally:
        proc.terminate()
        proc.wait(timeout=10)

    # a second serve over the same state directory must not reseed or lose data
    proc = _serve(model_dir, port)
    try:
        _wait_until_up(f"{base}/menu", proc)
        status, login = _request("POST", f"{base}/login", {"login": "ref1", "password": "ref1pw"})
        assert status == 200
        token = login["token"]
        status, fetched = _request("GET", f"{base}/class/ThesisData/{kept_id}", token=token)
        assert status == 200
        assert fetched["values"]["title"] == "Kept across restarts"
        status, listing = _request("GET", f"{base}/class/Staff", token=token)
        assert status == 200
        table = listing["elements"][1]
        login_col = table["columns"].index("login")
        logins = {row["cells"][login_col] for row in table["rows"]}
        assert logins == {"ref1", "ref2"}
    finally:
        proc.terminate()
        proc.wait(timeout=10)
