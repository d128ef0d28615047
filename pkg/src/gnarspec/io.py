"""File formats: edge lists, panels, parameter files, spectral fields, OHLC tables, reports.

Edge-list files are 1-based; everything returned to Python is 0-based.
"""

from __future__ import annotations

import csv
import json
from importlib import resources
from pathlib import Path

import numpy as np

from .gnar import GnarParams
from .graph import Network
from .spectra import KINDS, SpectralField


class InputError(ValueError):
    """Malformed or missing input file."""


def _open_text(path):
    path = Path(path)
    if not path.exists():
        raise InputError(f"file not found: {path}")
    return path.read_text()


def parse_edge_list(text: str, source: str = "<string>") -> Network:
    """Parse ``i j [weight]`` lines with optional ``d=<n>`` header and '#' comments."""
    d = None
    edges, weights = [], {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.lower().startswith("d="):
            try:
                d = int(line[2:])
            except ValueError:
                raise InputError(f"{source}:{lineno}: bad node-count header {line!r}") from None
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise InputError(f"{source}:{lineno}: expected 'i j [weight]', got {line!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else None
        except ValueError:
            raise InputError(f"{source}:{lineno}: non-numeric entry in {line!r}") from None
        if i < 1 or j < 1:
            raise InputError(f"{source}:{lineno}: node indices are 1-based")
        edges.append((i - 1, j - 1))
        if w is not None:
            weights[(min(i, j) - 1, max(i, j) - 1)] = w
    if d is None:
        d = max((max(e) + 1 for e in edges), default=0)
    if d < 1:
        raise InputError(f"{source}: no nodes")
    if weights and len(weights) != len({(min(e), max(e)) for e in edges}):
        raise InputError(f"{source}: weights must be given for every edge or none")
    try:
        return Network(d, edges, weights or None)
    except ValueError as exc:
        raise InputError(f"{source}: {exc}") from None


def read_edge_list(path) -> Network:
    return parse_edge_list(_open_text(path), str(path))


def format_edge_list(net: Network, weights=None) -> str:
    """Edge-list text; ``weights`` may be a d x d matrix overriding the network's own."""
    lines = [f"d={net.d}"]
    for i, j in net.edges:
        if weights is not None:
            lines.append(f"{i + 1} {j + 1} {float(weights[i][j]):.12g}")
        elif net.weights is not None:
            lines.append(f"{i + 1} {j + 1} {net.weights[(i, j)]:.12g}")
        else:
            lines.append(f"{i + 1} {j + 1}")
    return "\n".join(lines) + "\n"


def write_edge_list(path, net: Network, weights=None) -> None:
    Path(path).write_text(format_edge_list(net, weights))


def builtin_network(name: str) -> Network:
    """The shipped benchmark networks ``net5`` and ``net10``."""
    fname = {"net5": "net5.edges", "net10": "net10.edges", "5": "net5.edges", "10": "net10.edges"}.get(str(name))
    if fname is None:
        raise InputError(f"unknown builtin network {name!r}; use net5 or net10")
    text = resources.files("gnarspec").joinpath("data", fname).read_text()
    return parse_edge_list(text, fname)


def read_panel_csv(path):
    """Panel CSV with a header of node names.  Returns (names, (T, d) array)."""
    text = _open_text(path)
    rows = list(csv.reader(text.splitlines()))
    if not rows:
        raise InputError(f"{path}: empty file")
    names = [c.strip() for c in rows[0]]
    try:
        X = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None
    if X.ndim != 2 or X.shape[1] != len(names):
        raise InputError(f"{path}: every row needs {len(names)} values")
    if not np.all(np.isfinite(X)):
        raise InputError(f"{path}: non-finite values")
    return names, X


def write_panel_csv(path, X, names=None) -> None:
    X = np.asarray(X)
    names = names or [f"node{i + 1}" for i in range(X.shape[1])]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in X:
            w.writerow([repr(float(v)) for v in row])


def params_to_dict(params: GnarParams) -> dict:
    out = {
        "p": params.order.p,
        "s": list(params.order.s),
        "alpha": list(params.alpha),
        "beta": [list(b) for b in params.beta],
    }
    if params.V is not None:
        out["V"] = np.asarray(params.V).tolist()
    else:
        out["sigma2"] = params.sigma2
    return out


def params_from_dict(obj: dict, source: str = "<params>") -> GnarParams:
    try:
        alpha, beta = obj["alpha"], obj["beta"]
        p = int(obj.get("p", len(alpha)))
        s = [int(v) for v in obj.get("s", [len(b) for b in beta])]
        if len(alpha) != p or [len(b) for b in beta] != s:
            raise InputError(f"{source}: alpha/beta shapes do not match p={p}, s={s}")
        return GnarParams(alpha, beta, sigma2=float(obj.get("sigma2", 1.0)), V=obj.get("V"))
    except KeyError as exc:
        raise InputError(f"{source}: missing key {exc}") from None
    except (TypeError, ValueError) as exc:
        raise InputError(f"{source}: {exc}") from None


def read_params_json(path) -> GnarParams:
    try:
        obj = json.loads(_open_text(path))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None
    return params_from_dict(obj, str(path))


def write_params_json(path, params: GnarParams, **extra) -> None:
    Path(path).write_text(json.dumps({**params_to_dict(params), **extra}, indent=2))


def field_to_dict(field: SpectralField) -> dict:
    """JSON form: complex matrices as nested [re, im] pairs, coherence fields as reals."""
    if field.kind in ("coherence", "partial_coherence"):
        mats = np.real(field.values).tolist()
    else:
        v = np.asarray(field.values, dtype=complex)
        mats = np.stack([v.real, v.imag], axis=-1).tolist()
    return {"kind": field.kind, "d": field.d, "grid": field.freqs.tolist(), "matrices": mats}


def field_from_dict(obj: dict) -> SpectralField:
    kind = obj.get("kind", "spectrum")
    if kind not in KINDS:
        raise InputError(f"unknown field kind {kind!r}")
    arr = np.asarray(obj["matrices"], dtype=float)
    vals = arr if kind in ("coherence", "partial_coherence") else arr[..., 0] + 1j * arr[..., 1]
    return SpectralField(np.asarray(obj["grid"]), vals, kind)


def write_field_json(path, field: SpectralField) -> None:
    Path(path).write_text(json.dumps(field_to_dict(field)))


def read_field_json(path) -> SpectralField:
    try:
        return field_from_dict(json.loads(_open_text(path)))
    except (KeyError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from None


def write_pair_csv(path, field: SpectralField, part: str = "abs") -> None:
    """Per-pair curves in long format (omega, i, j, value), 1-based nodes.

    Complex fields are reduced by ``part`` in {abs, re, im, arg}.
    """
    reduce = {"abs": np.abs, "re": np.real, "im": np.imag, "arg": np.angle}[part]
    vals = field.values if np.isrealobj(field.values) else reduce(field.values)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["omega", "i", "j", "value"])
        for k, om in enumerate(field.freqs):
            for i in range(field.d):
                for j in range(field.d):
                    w.writerow([repr(float(om)), i + 1, j + 1, repr(float(vals[k, i, j]))])


def read_ohlc_csv(path):
    """Long-format OHLC table with columns date, node, open, high, low, close.

    Returns
    -------
    dates : list of str
    nodes : list of str, in order of first appearance
    open_, high, low, close : (T, d) arrays
    """
    text = _open_text(path)
    reader = csv.DictReader(text.splitlines())
    need = {"date", "node", "open", "high", "low", "close"}
    if reader.fieldnames is None or not need <= {f.strip() for f in reader.fieldnames}:
        raise InputError(f"{path}: columns must include {sorted(need)}")
    table, dates, nodes = {}, [], []
    for lineno, row in enumerate(reader, start=2):
        row = {k.strip(): v for k, v in row.items()}
        date, node = row["date"].strip(), row["node"].strip()
        try:
            vals = tuple(float(row[c]) for c in ("open", "high", "low", "close"))
        except ValueError:
            raise InputError(f"{path}:{lineno}: non-numeric price") from None
        if date not in table:
            table[date] = {}
            dates.append(date)
        if node not in nodes:
            nodes.append(node)
        table[date][node] = vals
    for date in dates:
        missing = [n for n in nodes if n not in table[date]]
        if missing:
            raise InputError(f"{path}: date {date} lacks nodes {missing}")
    arr = np.array([[table[t][n] for n in nodes] for t in dates])
    return dates, nodes, arr[..., 0], arr[..., 1], arr[..., 2], arr[..., 3]


def write_ohlc_csv(path, open_, high, low, close, nodes=None, dates=None) -> None:
    T, d = np.shape(open_)
    nodes = nodes or [f"node{i + 1}" for i in range(d)]
    dates = dates or [f"day{t + 1}" for t in range(T)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "node", "open", "high", "low", "close"])
        for t in range(T):
            for i in range(d):
                w.writerow([dates[t], nodes[i]] + [repr(float(a[t, i])) for a in (open_, high, low, close)])


def gfevd_to_dict(result, nodes=None) -> dict:
    d = result.psi.shape[0]
    nodes = nodes or [str(i + 1) for i in range(d)]
    return {
        "nodes": list(nodes),
        "horizon": result.horizon,
        "psi": np.asarray(result.psi).tolist(),
        "tau_star": result.tau_star,
        "edges": [[i + 1, j + 1, float(result.weights[i, j])] for i, j in result.edges],
        "var_lag": None if result.fit is None else result.fit.p,
    }
