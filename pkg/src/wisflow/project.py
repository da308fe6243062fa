"""Loading a model directory into a linked system.

A project directory holds exactly one ``.cd`` class model, exactly one
``.app`` application model and any number of ``.act`` and ``.page`` files.
Files are read in name order so diagnostics are stable across runs.
"""

from __future__ import annotations

from pathlib import Path

from . import parser
from .ast import Diagnostic, Loc, error
from .linker import LinkedSystem, link

_PARSERS = {
    ".cd": parser.parse_class_model,
    ".act": parser.parse_activity,
    ".page": parser.parse_page,
    ".app": parser.parse_app,
}


def load_directory(directory: str | Path) -> tuple[LinkedSystem | None, list[Diagnostic]]:
    """Parse and link all model files; returns (system, diagnostics).

    On success the diagnostics are warnings only; on failure the system is
    None and the diagnostics contain at least one error.
    """
    directory = Path(directory)
    at_dir = Loc(str(directory), 1, 1)
    if not directory.is_dir():
        return None, [error(at_dir, "no-directory", f"{directory} is not a directory")]

    by_suffix: dict[str, list[Path]] = {suffix: [] for suffix in _PARSERS}
    for path in sorted(directory.iterdir()):
        if path.suffix in by_suffix:
            by_suffix[path.suffix].append(path)

    diags: list[Diagnostic] = []
    if not by_suffix[".cd"]:
        diags.append(error(at_dir, "no-class-model", "no class model (.cd) found"))
    elif len(by_suffix[".cd"]) > 1:
        names = ", ".join(p.name for p in by_suffix[".cd"])
        diags.append(error(at_dir, "multiple-class-models", f"expected one .cd file, found: {names}"))
    if not by_suffix[".app"]:
        diags.append(error(at_dir, "no-application-model", "no application model (.app) found"))
    elif len(by_suffix[".app"]) > 1:
        names = ", ".join(p.name for p in by_suffix[".app"])
        diags.append(error(at_dir, "multiple-application-models", f"expected one .app file, found: {names}"))
    if diags:
        return None, diags

    parsed: dict[str, list] = {suffix: [] for suffix in _PARSERS}
    for suffix, paths in by_suffix.items():
        for path in paths:
            try:
                source = path.read_text(encoding="utf-8")
            except OSError as exc:
                diags.append(error(Loc(str(path), 1, 1), "unreadable", f"cannot read {path}: {exc}"))
                continue
            result = _PARSERS[suffix](source, str(path))
            if isinstance(result, list):
                diags += result
            else:
                parsed[suffix].append(result)
    if diags:
        return None, diags

    result = link(
        parsed[".cd"][0],
        tuple(parsed[".act"]),
        tuple(parsed[".page"]),
        parsed[".app"][0],
    )
    if isinstance(result, list):
        return None, result
    return result, list(result.warnings)
