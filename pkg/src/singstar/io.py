"""Grids, sampled-matrix files and CSV exports.

A sampled-matrix file is JSON:

    {"header": {"kind": "M"|"m", "index": s or j, "graph": digest,
                "grid": {...}, "created": ISO time (optional)},
     "rows": [{"lambda": [re, im], "entries": [[re, im], ...] | null,
               "skipped": null | "reason"}, ...]}

with entries in row-major (k, mu) order.
"""
from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .errors import ConfigError


def ordered_map(fn, items, jobs: int = 1) -> list:
    """map() with an optional thread pool; output order follows the input."""
    items = list(items)
    if jobs <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# grids

@dataclass(frozen=True)
class GridSpec:
    """count points from re0 to re1 (inclusive) at Im lam = im."""

    re0: float
    re1: float
    count: int
    im: float = 1.0

    def __post_init__(self):
        if self.count < 0:
            raise ConfigError("grid count must be >= 0")

    def points(self) -> list:
        if self.count == 0:
            return []
        if self.count == 1:
            return [complex(self.re0, self.im)]
        return [complex(x, self.im) for x in np.linspace(self.re0, self.re1, self.count)]

    def to_dict(self) -> dict:
        return {"re_start": self.re0, "re_end": self.re1, "count": self.count, "im_offset": self.im}


def parse_grid(text: str, im: float = 1.0) -> GridSpec:
    try:
        a, b, n = text.split(":")
        return GridSpec(float(a), float(b), int(n), float(im))
    except ValueError:
        raise ConfigError(f"grid must look like a:b:n, got {text!r}") from None


def parse_rect(text: str) -> tuple:
    try:
        vals = tuple(float(v) for v in text.split(":"))
    except ValueError:
        vals = ()
    if len(vals) != 4 or vals[0] >= vals[1] or vals[2] >= vals[3]:
        raise ConfigError(f"rectangle must be re0:re1:im0:im1 with re0<re1, im0<im1, got {text!r}")
    return vals


@dataclass(frozen=True)
class RaySpec:
    arg: float
    radii: tuple

    def points(self) -> list:
        return [r * np.exp(1j * self.arg) for r in self.radii]


def parse_ray(text: str) -> RaySpec:
    try:
        arg, radii = text.split(":")
        return RaySpec(float(arg), tuple(float(r) for r in radii.split(",") if r))
    except ValueError:
        raise ConfigError(f"ray must look like ARG:R1,R2,..., got {text!r}") from None


def parse_int_list(text: str | None) -> list:
    if text is None:
        return []
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma separated index list, got {text!r}") from None


# ---------------------------------------------------------------------------
# sampled matrices

@dataclass
class SampledMatrices:
    kind: str           # "M" (boundary) or "m" (internal)
    index: int
    graph: str
    grid: dict
    lams: list = field(default_factory=list)
    matrices: list = field(default_factory=list)  # arrays or None
    skipped: list = field(default_factory=list)   # None or reason

    def add(self, lam, matrix=None, reason=None):
        self.lams.append(complex(lam))
        self.matrices.append(None if matrix is None else np.asarray(matrix, dtype=complex))
        self.skipped.append(reason)

    def good(self):
        """(lams, matrices) over the non-skipped rows."""
        pairs = [(z, m) for z, m in zip(self.lams, self.matrices) if m is not None]
        return [z for z, _ in pairs], [m for _, m in pairs]

    def evaluator(self, tol: float = 1e-12):
        """lam -> matrix for lam on the sampled grid (no interpolation)."""
        from .errors import MatrixEvaluatorFailure

        def f(lam):
            for z, m in zip(self.lams, self.matrices):
                if abs(z - lam) <= tol * max(1.0, abs(lam)):
                    if m is None:
                        raise MatrixEvaluatorFailure(f"sample at {lam} was skipped")
                    return m
            raise MatrixEvaluatorFailure(f"no sample at lam={lam}")

        return f


def _pair(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def samples_to_dict(obj: SampledMatrices, timestamp: bool = True) -> dict:
    header = {"kind": obj.kind, "index": obj.index, "graph": obj.graph, "grid": obj.grid}
    if timestamp:
        header["created"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    rows = []
    for z, m, why in zip(obj.lams, obj.matrices, obj.skipped):
        rows.append({
            "lambda": _pair(z),
            "entries": None if m is None else [_pair(v) for v in np.asarray(m).ravel()],
            "skipped": why,
        })
    return {"header": header, "rows": rows}


def write_samples(path, obj: SampledMatrices, timestamp: bool = True) -> None:
    with open(path, "w") as fh:
        json.dump(samples_to_dict(obj, timestamp), fh, indent=1)
        fh.write("\n")


def samples_from_dict(data: dict) -> SampledMatrices:
    try:
        h = data["header"]
        out = SampledMatrices(h["kind"], int(h["index"]), h["graph"], h.get("grid", {}))
        for row in data["rows"]:
            lam = complex(*row["lambda"])
            ent = row.get("entries")
            m = None
            if ent is not None:
                vals = np.array([complex(a, b) for a, b in ent])
                n = int(round(np.sqrt(vals.size)))
                if n * n != vals.size:
                    raise ConfigError("entries are not a square matrix")
                m = vals.reshape(n, n)
            out.add(lam, m, row.get("skipped"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed sample file: {exc}") from None
    return out


def read_samples(path) -> SampledMatrices:
    with open(path) as fh:
        return samples_from_dict(json.load(fh))


def write_csv(path, obj: SampledMatrices) -> None:
    """lambda_re, lambda_im, entry_k_mu_re, entry_k_mu_im ..., skipped."""
    n = next((m.shape[0] for m in obj.matrices if m is not None), 0)
    cols = ["lambda_re", "lambda_im"]
    for k in range(1, n + 1):
        for mu in range(1, n + 1):
            cols += [f"entry_{k}_{mu}_re", f"entry_{k}_{mu}_im"]
    cols.append("skipped")
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(cols)
        for z, m, why in zip(obj.lams, obj.matrices, obj.skipped):
            row = [repr(float(z.real)), repr(float(z.imag))]
            if m is None:
                row += [""] * (2 * n * n)
            else:
                for v in m.ravel():
                    row += [repr(float(v.real)), repr(float(v.imag))]
            row.append(why or "")
            wr.writerow(row)


def read_csv(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_table(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        for r in rows:
            wr.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
