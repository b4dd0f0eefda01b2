"""Command-line front end.

The CLI is a thin client of the computation service: every subcommand
builds a request, posts it to the FastAPI app (in process by default, or to
a remote instance given --server) and formats the JSON response.  Numeric
output uses 17 significant digits so values round-trip exactly.

Exit codes: 0 success, 2 usage or parse error, 3 numerical precision guard.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import tempfile

PARSE_ERROR = 2
GUARD_ERROR = 3

OBSERVATION_HEADER = ["t_end", "a", "b", "g"]


class CliError(Exception):
    def __init__(self, exit_code: int, message: str):
        super().__init__(message)
        self.exit_code = exit_code


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _parse_endpoint(text: str) -> float:
    key = text.strip().lower()
    if key in ("inf", "+inf", "infinity"):
        return math.inf
    if key in ("-inf", "-infinity"):
        return -math.inf
    try:
        return float(text)
    except ValueError:
        raise CliError(PARSE_ERROR, f"invalid endpoint {text!r}; use a number, 'inf' or '-inf'")


def _endpoint_json(value: float):
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


def _parse_window(text: str) -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise CliError(PARSE_ERROR, f"invalid window {text!r}; expected A:B")
    return _parse_endpoint(parts[0]), _parse_endpoint(parts[1])


def _parse_sweep(text: str) -> list[float]:
    """start:stop:step, endpoints included within half a step."""
    parts = text.split(":")
    if len(parts) != 3:
        raise CliError(PARSE_ERROR, f"invalid range {text!r}; expected START:STOP:STEP")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise CliError(PARSE_ERROR, f"invalid range {text!r}; values must be numbers")
    if step <= 0 or stop < start:
        raise CliError(PARSE_ERROR, f"invalid range {text!r}; need STEP > 0 and STOP >= START")
    values = []
    k = 0
    value = start
    while value <= stop + 0.5 * step:
        values.append(value)
        k += 1
        value = start + k * step
    return values


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".outimes-tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        _atomic_write(out, text)


class ServiceClient:
    """POSTs requests either to the in-process app or to a remote server."""

    def __init__(self, base_url: str | None = None):
        if base_url is None:
            import warnings

            with warnings.catch_warnings():
                # this starlette release warns about the installed httpx major
                warnings.filterwarnings(
                    "ignore", message=r".*httpx.*", category=UserWarning
                )
                from starlette.testclient import TestClient

            from .service.app import app

            self._client = TestClient(app, raise_server_exceptions=False)
        else:
            import httpx

            self._client = httpx.Client(base_url=base_url, timeout=None)

    def post(self, path: str, payload: dict) -> dict:
        response = self._client.post(path, json=payload)
        if response.status_code == 200:
            return response.json()
        code = None
        message = response.text[:2000]
        try:
            detail = response.json().get("detail")
        except Exception:
            detail = None
        if isinstance(detail, dict):
            code = detail.get("code")
            message = detail.get("message", message)
        elif detail is not None:
            message = json.dumps(detail)
        exit_code = GUARD_ERROR if code == "precision_guard" else PARSE_ERROR
        raise CliError(exit_code, message)


def read_observation_file(path: str) -> list[dict]:
    """Observation CSV with header t_end,a,b,g; parse errors carry the
    offending line number."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise CliError(PARSE_ERROR, f"cannot read observation file: {exc}")
    rows = [row for row in rows if row and any(field.strip() for field in row)]
    if not rows:
        raise CliError(PARSE_ERROR, f"{path}: empty observation file")
    header = [field.strip() for field in rows[0]]
    if header != OBSERVATION_HEADER:
        raise CliError(
            PARSE_ERROR,
            f"{path}: line 1: expected header {','.join(OBSERVATION_HEADER)}",
        )
    entries = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 4:
            raise CliError(PARSE_ERROR, f"{path}: line {lineno}: expected 4 fields, got {len(row)}")
        try:
            t_end = float(row[0])
            a = _parse_endpoint(row[1])
            b = _parse_endpoint(row[2])
            g = float(row[3])
        except CliError as exc:
            raise CliError(PARSE_ERROR, f"{path}: line {lineno}: {exc}")
        except ValueError as exc:
            raise CliError(PARSE_ERROR, f"{path}: line {lineno}: {exc}")
        entries.append({"t_end": t_end, "a": _endpoint_json(a), "b": _endpoint_json(b), "g": g})
    if not entries:
        raise CliError(PARSE_ERROR, f"{path}: observation file has no data rows")
    return entries


def format_observation_csv(entries: list[dict]) -> str:
    lines = [",".join(OBSERVATION_HEADER)]
    for entry in entries:
        a = entry["a"] if isinstance(entry["a"], str) else _fmt(entry["a"])
        b = entry["b"] if isinstance(entry["b"], str) else _fmt(entry["b"])
        lines.append(f"{_fmt(entry['t_end'])},{a},{b},{_fmt(entry['g'])}")
    return "\n".join(lines) + "\n"


def cmd_simulate(args, client: ServiceClient) -> int:
    payload = {
        "lambda": args.lam,
        "sigma": args.sigma,
        "mu": args.mu,
        "u0": args.u0,
        "t_end": args.t_end,
        "dt": args.dt,
        "seed": args.seed,
    }
    result = client.post("/simulate", payload)
    lines = ["t,x"]
    lines.extend(f"{_fmt(t)},{_fmt(x)}" for t, x in zip(result["times"], result["values"]))
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_expect(args, client: ServiceClient) -> int:
    if (args.lam is None) == (args.lambda_range is None):
        raise CliError(PARSE_ERROR, "exactly one of --lambda or --lambda-range is required")
    base = {
        "sigma": args.sigma,
        "t_end": args.t_end,
        "a": _endpoint_json(args.a),
        "b": _endpoint_json(args.b),
        "method": args.method,
        "n_samples": args.n_samples,
        "dt": args.dt,
        "seed": args.seed,
    }
    if args.lambda_range is not None:
        values = _parse_sweep(args.lambda_range)
        lines = ["lambda,expectation"]
        for lam in values:
            result = client.post("/occupation/expected", dict(base, **{"lambda": lam}))
            lines.append(f"{_fmt(lam)},{_fmt(result['value'])}")
        _emit("\n".join(lines) + "\n", args.out)
        return 0
    result = client.post("/occupation/expected", dict(base, **{"lambda": args.lam}))
    if args.json:
        _emit(json.dumps(result) + "\n", args.out)
    else:
        _emit(_fmt(result["value"]) + "\n", args.out)
    return 0


def cmd_generate(args, client: ServiceClient) -> int:
    t_ends = args.t_end if args.t_end else [10.0, 12.0]
    if args.window:
        spans = [_parse_window(w) for w in args.window]
    else:
        spans = [(-h, h) for h in (0.25, 0.5, 0.75, 1.0)]
    windows = [
        {"t_end": t_end, "a": _endpoint_json(a), "b": _endpoint_json(b)}
        for t_end in t_ends
        for (a, b) in spans
    ]
    payload = {
        "lambda": args.lam,
        "sigma": args.sigma,
        "windows": windows,
        "method": args.method.replace("-", "_"),
        "n_samples": args.n_samples,
        "dt": args.dt,
        "seed": args.seed,
    }
    result = client.post("/observations/generate", payload)
    _emit(format_observation_csv(result["entries"]), args.out)
    return 0


def cmd_estimate(args, client: ServiceClient) -> int:
    entries = read_observation_file(args.observations)
    try:
        start = tuple(float(p) for p in args.start.split(","))
    except ValueError:
        raise CliError(PARSE_ERROR, f"invalid --start {args.start!r}; expected LAMBDA,SIGMA")
    if len(start) != 2:
        raise CliError(PARSE_ERROR, f"invalid --start {args.start!r}; expected LAMBDA,SIGMA")
    payload = {
        "observations": entries,
        "tol": args.tol,
        "max_iters": args.max_iters,
        "start": start,
        "trace": args.trace is not None,
    }
    result = client.post("/estimate", payload)
    for message in result.get("warnings", []):
        print(f"warning: {message}", file=sys.stderr)
    if args.trace is not None:
        lines = ["lambda,sigma,residual"]
        lines.extend(
            f"{_fmt(p['lam'])},{_fmt(p['sigma'])},{_fmt(p['residual'])}"
            for p in result.get("trace") or []
        )
        _atomic_write(args.trace, "\n".join(lines) + "\n")
    report = {
        "lambda_star": result["lambda_star"],
        "sigma_star": result["sigma_star"],
        "residual": result["residual"],
        "iterations": result["iterations"],
        "converged": result["converged"],
    }
    if args.json:
        _emit(json.dumps(report) + "\n", args.out)
    else:
        lines = [
            f"lambda_star = {_fmt(report['lambda_star'])}",
            f"sigma_star  = {_fmt(report['sigma_star'])}",
            f"residual    = {_fmt(report['residual'])}",
            f"iterations  = {report['iterations']}",
            f"converged   = {'true' if report['converged'] else 'false'}",
        ]
        _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_reproduce_table(args, client: ServiceClient) -> int:
    payload = {"seed": args.seed, "n_samples": args.n_samples, "dt": args.dt}
    result = client.post("/table/reproduce", payload)
    if args.json:
        _emit(json.dumps(result) + "\n", args.out)
        return 0
    columns = [
        "lambda_true",
        "sigma_true",
        "lambda_direct",
        "sigma_direct",
        "lambda_mc",
        "sigma_mc",
    ]
    width = 26
    lines = ["".join(name.ljust(width) for name in columns).rstrip()]
    for row in result["rows"]:
        lines.append("".join(_fmt(row[name]).ljust(width) for name in columns).rstrip())
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_serve(args, client: ServiceClient) -> int:
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def _positive(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="outimes",
        description="Occupation times of the Ornstein-Uhlenbeck process",
    )
    parser.add_argument("--server", help="URL of a running service; default runs in process")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate one sample path as CSV t,x")
    p.add_argument("--lambda", dest="lam", type=_positive, required=True)
    p.add_argument("--sigma", type=_positive, required=True)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--u0", type=float, default=0.0)
    p.add_argument("--t-end", dest="t_end", type=_positive, required=True)
    p.add_argument("--dt", type=_positive, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("expect", help="expected occupation time, single value or lambda sweep")
    p.add_argument("--lambda", dest="lam", type=_positive)
    p.add_argument("--lambda-range", help="sweep START:STOP:STEP, endpoints included")
    p.add_argument("--sigma", type=_positive, required=True)
    p.add_argument("--t-end", dest="t_end", type=_positive, required=True)
    p.add_argument("--a", type=_parse_endpoint, required=True, help="lower endpoint, -inf allowed")
    p.add_argument("--b", type=_parse_endpoint, required=True, help="upper endpoint, inf allowed")
    p.add_argument("--method", choices=["direct", "split", "mc"], default="direct")
    p.add_argument("--n-samples", dest="n_samples", type=int, default=10_000)
    p.add_argument("--dt", type=_positive, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_expect)

    p = sub.add_parser("generate", help="write a synthetic observation CSV (t_end,a,b,g)")
    p.add_argument("--lambda", dest="lam", type=_positive, required=True)
    p.add_argument("--sigma", type=_positive, required=True)
    p.add_argument("--t-end", dest="t_end", type=_positive, action="append",
                   help="horizon, repeatable (default 10 and 12)")
    p.add_argument("--window", action="append",
                   help="window A:B, repeatable (default +-0.25, 0.5, 0.75, 1.0)")
    p.add_argument("--method", choices=["direct", "monte-carlo"], default="direct")
    p.add_argument("--n-samples", dest="n_samples", type=int, default=10_000)
    p.add_argument("--dt", type=_positive, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("estimate", help="recover (lambda, sigma) from an observation CSV")
    p.add_argument("--observations", required=True, help="CSV file t_end,a,b,g")
    p.add_argument("--tol", type=_positive, default=1e-5)
    p.add_argument("--max-iters", dest="max_iters", type=int, default=2000)
    p.add_argument("--start", default="1,1", help="initial point LAMBDA,SIGMA")
    p.add_argument("--trace", help="write iterate CSV lambda,sigma,residual to this path")
    p.add_argument("--json", action="store_true")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("reproduce-table", help="recovery benchmark table, analytic and MC columns")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-samples", dest="n_samples", type=int, default=10_000)
    p.add_argument("--dt", type=_positive, default=0.01)
    p.add_argument("--json", action="store_true")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_reproduce_table)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


# flags whose values may start with '-' (negative endpoints, -inf, windows);
# argparse would read such a value as an option, so fold it into --flag=value
_DASH_VALUE_FLAGS = {"--a", "--b", "--window"}


def _fold_dash_values(argv):
    folded = []
    i = 0
    while i < len(argv):
        token = argv[i]
        if token in _DASH_VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            folded.append(f"{token}={argv[i + 1]}")
            i += 2
            continue
        folded.append(token)
        i += 1
    return folded


def main(argv=None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    try:
        args = parser.parse_args(_fold_dash_values(list(argv)))
    except CliError as exc:  # raised by argument type converters
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code or 0)
    try:
        client = ServiceClient(args.server) if args.command != "serve" else None
        return args.func(args, client)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
