"""Command line entry point: validate models, run the server, scaffold a project.

Exit codes: 0 success, 1 model errors, 2 environment errors (bad arguments,
unreadable directories, occupied ports).
"""

from __future__ import annotations

import argparse
import json
import socket
import sys
from pathlib import Path

from .example import write_example
from .httpapi import create_app
from .project import load_directory
from .store import FileBackend, Store, seed_store


def _print_diagnostics(diagnostics) -> None:
    for diag in diagnostics:
        print(diag.render(), file=sys.stderr)


def cmd_check(model_dir: str) -> int:
    """Parse and link every model file under ``model_dir``."""
    path = Path(model_dir)
    if not path.is_dir():
        print(f"{model_dir}: not a directory", file=sys.stderr)
        return 2
    try:
        system, diagnostics = load_directory(path)
    except OSError as exc:
        print(f"{model_dir}: {exc}", file=sys.stderr)
        return 2
    _print_diagnostics(diagnostics)
    return 0 if system is not None else 1


def _load_seed(model_dir: Path) -> dict:
    seed_path = model_dir / "seed.json"
    if not seed_path.is_file():
        return {}
    return json.loads(seed_path.read_text(encoding="utf-8"))


def _port_free(host: str, port: int) -> bool:
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((host, port))
    except OSError:
        return False
    finally:
        probe.close()
    return True


def cmd_serve(model_dir: str, port: int, data_dir: str | None, host: str = "127.0.0.1") -> int:
    """Validate the models, then serve them over HTTP until interrupted."""
    path = Path(model_dir)
    status = cmd_check(model_dir)
    if status != 0:
        return status
    system, _ = load_directory(path)
    assert system is not None

    data_path = Path(data_dir) if data_dir else path / "data"
    backend = FileBackend(data_path)
    store = Store(system.class_model, backend)
    marker = data_path / ".seeded"
    if not marker.exists():
        seed_store(store, _load_seed(path))
        marker.write_text("", encoding="utf-8")

    if not _port_free(host, port):
        print(f"port {port} is already in use", file=sys.stderr)
        return 2

    import uvicorn

    app = create_app(system, store, ui_dir=_ui_dir())
    print(f"serving {system.app.name} on http://{host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return 0


def _ui_dir() -> Path | None:
    # a built browser client is optional; serve it when present
    candidate = Path(__file__).resolve().parent / "ui"
    return candidate if candidate.is_dir() else None


def cmd_init(target_dir: str) -> int:
    """Scaffold the thesis-grading example project into an empty directory."""
    path = Path(target_dir)
    if path.exists():
        if not path.is_dir():
            print(f"{target_dir}: not a directory", file=sys.stderr)
            return 2
        if any(path.iterdir()):
            print(f"{target_dir}: directory is not empty", file=sys.stderr)
            return 2
    else:
        path.mkdir(parents=True)
    for written in write_example(path):
        print(f"wrote {written}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wisflow", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="validate a model directory")
    check.add_argument("modeldir")

    serve = sub.add_parser("serve", help="validate, then serve a model directory")
    serve.add_argument("modeldir")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--data", default=None, help="state directory (default: MODELDIR/data)")
    serve.add_argument("--host", default="127.0.0.1")

    init = sub.add_parser("init", help="scaffold the example project")
    init.add_argument("targetdir")
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse already exits 2 on usage errors and 0 on --help
        return exc.code if isinstance(exc.code, int) else 2
    if args.command == "check":
        return cmd_check(args.modeldir)
    if args.command == "serve":
        return cmd_serve(args.modeldir, args.port, args.data, host=args.host)
    return cmd_init(args.targetdir)


if __name__ == "__main__":
    sys.exit(main())
