"""Drive the bundled thesis-grading workflow against a live server.

Starts from a scratch model directory, walks both referees through the whole
activity over plain HTTP, and prints each step. Useful as a smoke test and as
a worked example of the wire protocol.

Usage: python3 scripts/run_gradethesis.py [--port 8901] [--keep DIR]
"""

from __future__ import annotations

import argparse
import json
import subprocess
import sys
import tempfile
import time
import urllib.error
import urllib.request
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from wisflow.cli import cmd_init  # noqa: E402


class _NoRedirect(urllib.request.HTTPRedirectHandler):
    # redirects carry the protocol; surface them instead of following
    def redirect_request(self, req, fp, code, msg, headers, newurl):
        return None


_OPENER = urllib.request.build_opener(_NoRedirect)


def request(method: str, url: str, body: dict | None = None, token: str | None = None):
    data = json.dumps(body).encode() if body is not None else None
    req = urllib.request.Request(url, data=data, method=method)
    req.add_header("Content-Type", "application/json")
    if token:
        req.add_header("Authorization", f"Bearer {token}")
    try:
        with _OPENER.open(req, timeout=10) as resp:
            return resp.status, resp.headers, json.loads(resp.read() or b"{}")
    except urllib.error.HTTPError as exc:
        return exc.code, exc.headers, json.loads(exc.read() or b"{}")


class Client:
    def __init__(self, base: str, login: str, password: str):
        self.base = base
        self.login = login
        status, _, body = request(
            "POST", f"{base}/login", {"login": login, "password": password}
        )
        assert status == 200, body
        self.token = body["token"]
        print(f"[{login}] logged in as {body['user']['name']}")

    def get(self, path: str):
        return request("GET", self.base + path, token=self.token)

    def post(self, path: str, body: dict):
        return request("POST", self.base + path, body, token=self.token)

    def submit(self, action_url: str, body: dict) -> str | None:
        """POST a step; returns the next action path, or None when finished."""
        status, headers, doc = self.post(action_url, body)
        if status == 303:
            nxt = headers["location"]
            print(f"[{self.login}] submitted {action_url} -> {nxt}")
            return nxt
        assert status == 200 and doc.get("status") == "finished", (status, doc)
        print(f"[{self.login}] submitted {action_url} -> finished")
        return None


def wait_for(url: str, proc: subprocess.Popen, attempts: int = 100) -> None:
    for _ in range(attempts):
        if proc.poll() is not None:
            raise SystemExit(f"server exited early:\n{proc.stdout.read()}")
        try:
            urllib.request.urlopen(url, timeout=1)
            return
        except urllib.error.HTTPError:
            return
        except OSError:
            time.sleep(0.05)
    raise SystemExit("server never came up")


def run_flow(base: str) -> None:
    ref1 = Client(base, "ref1", "ref1pw")
    ref2 = Client(base, "ref2", "ref2pw")

    status, headers, _ = ref1.post("/activity/GradeThesis", {})
    assert status == 303, status
    url = headers["location"]
    print(f"[ref1] started GradeThesis at {url}")

    # AssignRef2: pick the second referee from the selectable table
    _, _, doc = ref1.get(url)
    table = next(e for e in doc["elements"] if e["kind"] == "table")
    row = next(r for r in table["rows"] if r["cells"][0] == "Referee Two")
    url = ref1.submit(url, {"_selection": row["id"]})

    # SetGrade1: title and first grade
    url = ref1.submit(url, {"t.title": "On Model-Driven Workflows", "t.grade1": "1.3"})

    # the task is now in ref2's inbox
    _, _, tasks = ref2.get("/tasks")
    print(f"[ref2] task inbox: {[t['action'] for t in tasks['tasks']]}")

    # SetGrade2: second grade plus the save decision
    _, _, doc = ref2.get(url)
    print(f"[ref2] decisions offered: {doc['decisions']}")
    url = ref2.submit(url, {"t.grade2": "2.0", "_decision": "SaveAndNotify"})

    # Saved: confirmation page, submitting it ends the instance
    _, _, doc = ref2.get(url)
    outputs = {e["label"]: e["value"] for e in doc["elements"] if e["kind"] == "output"}
    print(f"[ref2] confirmation shows {outputs}")
    assert ref2.submit(url, {}) is None

    for client in (ref1, ref2):
        _, _, body = client.get("/menu")
        print(f"[{client.login}] notifications: {body['notifications']}")

    _, _, listing = ref1.get("/class/ThesisData")
    table = listing["elements"][1]
    print("persisted theses:")
    for row in table["rows"]:
        print("  ", dict(zip(table["columns"], row["cells"])))


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--port", type=int, default=8901)
    parser.add_argument("--keep", default=None, help="reuse/keep this model directory")
    args = parser.parse_args()

    if args.keep:
        model_dir = Path(args.keep)
        if not model_dir.exists():
            cmd_init(str(model_dir))
    else:
        scratch = tempfile.TemporaryDirectory()
        model_dir = Path(scratch.name) / "proj"
        cmd_init(str(model_dir))

    base = f"http://127.0.0.1:{args.port}"
    proc = subprocess.Popen(
        [sys.executable, "-m", "wisflow", "serve", str(model_dir), "--port", str(args.port)],
        stdout=subprocess.PIPE,
        stderr=subprocess.STDOUT,
        text=True,
    )
    try:
        wait_for(f"{base}/menu", proc)
        print(f"server up at {base}")
        run_flow(base)
        print("done: full GradeThesis run completed")
    finally:
        proc.terminate()
        proc.wait(timeout=10)
    return 0


if __name__ == "__main__":
    sys.exit(main())
