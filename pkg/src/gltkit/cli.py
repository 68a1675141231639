"""Experiment CLI: a thin client of the experiment service.

Each subcommand maps one-to-one to a service endpoint.  By default the
request is served by the application in-process (no network); pass
``--server URL`` to talk to a running instance instead.  Results are
written as CSV or JSON under ``--out``, artifacts as separate files;
identical configurations produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys


def _apply_thread_cap() -> None:
    cap = os.environ.get("GLT_THREADS")
    if not cap:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(var, cap)


_apply_thread_cap()

from .experiments import DEFAULT_SEED  # noqa: E402  (after the thread cap)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gltkit",
        description="Run spectral-symbol experiments and write CSV/JSON artifacts.")
    parser.add_argument("--server", default=None,
                        help="base URL of a running service; default runs in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--seed", type=lambda s: int(s, 0), default=DEFAULT_SEED)

    p = sub.add_parser("surface-extrema", help="per-surface min/max of a 2D symbol")
    p.add_argument("--k", type=int, default=2, choices=(1, 2, 3))
    p.add_argument("--grid", type=int, default=1024)
    common(p)

    p = sub.add_parser("symbol-check", help="determinant identity checks")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--kmax", type=int, default=4)
    common(p)

    p = sub.add_parser("assemble", help="assemble a stiffness matrix (Matrix Market)")
    p.add_argument("--family", choices=("P", "Q"), default="P")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--d", type=int, default=2, choices=(1, 2))
    p.add_argument("--n-sub", type=int, default=8)
    p.add_argument("--a", default="one")
    common(p)

    p = sub.add_parser("distribution", help="matrix spectrum vs rearranged symbol sampling")
    p.add_argument("--k", type=int, default=2, choices=(1, 2, 3))
    p.add_argument("--n-sub", type=int, default=16)
    p.add_argument("--a", default="exp_xy")
    common(p)

    p = sub.add_parser("extremal-scaling", help="extremal eigenvalues across sizes")
    p.add_argument("--k", type=int, default=2, choices=(1, 2, 3))
    p.add_argument("--d", type=int, default=2, choices=(1, 2))
    p.add_argument("--sizes", default="8,16,32", help="comma-separated subinterval counts")
    common(p)

    p = sub.add_parser("pcg", help="preconditioned conjugate gradient iteration counts")
    p.add_argument("--precond", choices=("diag-scaled", "identity", "ic0", "strang"),
                   default="diag-scaled")
    p.add_argument("--k", type=int, default=2, choices=(1, 2, 3))
    p.add_argument("--sizes", default=None)
    p.add_argument("--a", default="exp_xy")
    p.add_argument("--tol", type=float, default=1e-6)
    common(p)

    p = sub.add_parser("weak-cluster", help="preconditioned-spectrum outliers around 1")
    p.add_argument("--k", type=int, default=2, choices=(1, 2, 3))
    p.add_argument("--sizes", default="4,8,16")
    p.add_argument("--eps", type=float, default=0.1)
    common(p)

    p = sub.add_parser("multigrid", help="two-grid / V-cycle iteration counts")
    p.add_argument("--k", type=int, default=2, choices=(1, 2, 3))
    p.add_argument("--d", type=int, default=1, choices=(1, 2))
    p.add_argument("--sizes", default="8,16,32,64,128,256,512")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--a", default="one")
    p.add_argument("--mode", choices=("two_grid", "v_cycle", "both"), default="both")
    common(p)

    p = sub.add_parser("tgm-check", help="two-grid condition report")
    p.add_argument("--k", type=int, default=2, choices=(1, 2, 3))
    p.add_argument("--grid", type=int, default=512)
    p.add_argument("--delta", type=float, default=1e-3)
    common(p)

    p = sub.add_parser("serve", help="run the experiment service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def _parse_sizes(text):
    if text is None:
        return None
    if ".." in text:
        lo, hi = (int(x) for x in text.split("..", 1))
        sizes, n = [], lo
        while n <= hi:
            sizes.append(n)
            n *= 2
        return sizes
    return [int(x) for x in text.split(",") if x]


_REQUEST_KEYS = {
    "surface-extrema": ("k", "grid"),
    "symbol-check": ("samples", "kmax", "seed"),
    "assemble": ("family", "k", "d", "n_sub", "a"),
    "distribution": ("k", "n_sub", "a"),
    "extremal-scaling": ("k", "d", "sizes"),
    "pcg": ("precond", "k", "sizes", "a", "tol", "seed"),
    "weak-cluster": ("k", "sizes", "eps"),
    "multigrid": ("k", "d", "sizes", "tol", "a", "mode"),
    "tgm-check": ("k", "grid", "delta"),
}


def _request_body(cmd: str, args: argparse.Namespace) -> dict:
    ns = vars(args)
    body = {}
    for key in _REQUEST_KEYS[cmd]:
        val = ns.get(key)
        if key == "sizes":
            val = _parse_sizes(val)
            if val is None:
                continue
        body[key] = val
    return body


class _InProcessClient:
    def __init__(self):
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DeprecationWarning)
            from fastapi.testclient import TestClient

        from .service.app import create_app

        self._client = TestClient(create_app())

    def post(self, path: str, body: dict) -> dict:
        resp = self._client.post(path, json=body)
        if resp.status_code != 200:
            raise SystemExit(f"experiment failed: {resp.status_code} {resp.text}")
        return resp.json()


class _RemoteClient:
    def __init__(self, base_url: str):
        import httpx

        self._client = httpx.Client(base_url=base_url, timeout=None)

    def post(self, path: str, body: dict) -> dict:
        resp = self._client.post(path, json=body)
        if resp.status_code != 200:
            raise SystemExit(f"experiment failed: {resp.status_code} {resp.text}")
        return resp.json()


def _format_cell(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def _write_outputs(result: dict, out_dir: str, fmt: str) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    written = []
    base = os.path.join(out_dir, result["experiment"])
    if fmt == "csv":
        path = base + ".csv"
        lines = [",".join(result["columns"])]
        for row in result["rows"]:
            lines.append(",".join(_format_cell(v) for v in row))
        with open(path, "w", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
    else:
        path = base + ".json"
        with open(path, "w") as fh:
            json.dump(result, fh, indent=2, sort_keys=True)
            fh.write("\n")
    written.append(path)
    for name, content in result.get("artifacts", {}).items():
        apath = os.path.join(out_dir, name)
        with open(apath, "w") as fh:
            fh.write(content)
        written.append(apath)
    return written


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "serve":
        import uvicorn

        from .service.app import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return 0

    client = _RemoteClient(args.server) if args.server else _InProcessClient()
    body = _request_body(args.command, args)
    result = client.post(f"/experiments/{args.command}", body)
    written = _write_outputs(result, args.out, args.format)
    for key, val in result.get("summary", {}).items():
        if key != "report":
            print(f"{key}: {val}")
    for path in written:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
