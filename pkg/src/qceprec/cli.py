"""Command-line front end.

Every subcommand is a thin client of the HTTP service: by default the request
runs against the app in-process (no socket), with --server URL it goes over
the network to a running `qceprec serve`. Flags can be preloaded from a
config file of `key = value` lines (# comments allowed); explicit flags win.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys

import httpx


class CliError(Exception):
    pass


# --- service client ----------------------------------------------------------


async def _post_inprocess(path: str, payload: dict) -> httpx.Response:
    from .service.app import app
    transport = httpx.ASGITransport(app=app)
    async with httpx.AsyncClient(transport=transport, timeout=None,
                                 base_url="http://qceprec") as client:
        return await client.post(path, json=payload)


def post(server: str | None, path: str, payload: dict) -> dict:
    if server:
        with httpx.Client(base_url=server, timeout=None) as client:
            resp = client.post(path, json=payload)
    else:
        resp = asyncio.run(_post_inprocess(path, payload))
    if resp.status_code != 200:
        raise CliError(f"{path} failed with HTTP {resp.status_code}: {resp.text}")
    return resp.json()


# --- config file / flag merging ----------------------------------------------

_CONFIG_KEYS = ("k", "n", "m", "l", "snr", "trials", "seed", "algos", "out",
                "p_t", "workers", "measure_time", "server")


def load_config(path: str) -> dict[str, str]:
    """Flat `key = value` file mirroring the long flags."""
    opts: dict[str, str] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(f"could not read config {path!r}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or not key:
            raise CliError(f"{path}:{lineno}: expected 'key = value'")
        if key not in _CONFIG_KEYS:
            raise CliError(f"{path}:{lineno}: unknown key {key!r}")
        opts[key] = value.strip()
    return opts


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise CliError(f"expected a boolean, got {text!r}")


def parse_float_list(text: str) -> list[float]:
    """A single value, a comma list, or an inclusive start:step:stop range."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise CliError(f"range must be start:step:stop, got {text!r}")
        start, step, stop = (float(p) for p in parts)
        if step <= 0:
            raise CliError("range step must be positive")
        count = int((stop - start) / step + 1e-9) + 1
        if count < 1:
            raise CliError(f"empty range {text!r}")
        return [start + i * step for i in range(count)]
    return [float(p) for p in text.split(",") if p.strip()]


def parse_int_list(text: str) -> list[int]:
    vals = parse_float_list(text)
    out = []
    for v in vals:
        if v != int(v):
            raise CliError(f"expected integers, got {v}")
        out.append(int(v))
    return out


class Options:
    """Flags merged over config-file values."""

    def __init__(self, ns: argparse.Namespace):
        self._ns = ns
        self._cfg = load_config(ns.config) if getattr(ns, "config", None) else {}

    def get(self, key: str, conv, default=None, required: bool = False):
        flag = getattr(self._ns, key, None)
        if flag is not None:
            if conv is not None and isinstance(flag, str):
                try:
                    return conv(flag)
                except ValueError as exc:
                    raise CliError(f"--{key.replace('_', '-')}: {exc}") from exc
            return flag
        if key in self._cfg:
            raw = self._cfg[key]
            try:
                return conv(raw) if conv else raw
            except ValueError as exc:
                raise CliError(f"config key {key}: {exc}") from exc
        if required:
            raise CliError(f"missing required option --{key.replace('_', '-')}")
        return default


# --- output helpers -----------------------------------------------------------


def _print_precode(data: dict) -> None:
    print(f"algorithm     {data['algorithm']}")
    print(f"k/n/m/l       {data['k']}/{data['n']}/{data['m']}/{data['l']}")
    print(f"symbols       {' '.join(str(i) for i in data['symbol_indices'])}")
    print(f"feasible      {str(data['feasible']).lower()}")
    print(f"objective     {data['objective']:.10g}")
    print(f"margin        {data['margin']:.10g}")
    print(f"iterations    {data['iterations']}")
    if data.get("outer_iterations") is not None:
        print(f"outer stages  {data['outer_iterations']}")
    if data.get("final_lambda") is not None:
        print(f"final lambda  {data['final_lambda']:.10g}")
    print(f"solve time    {data['solve_time_ms']:.6g} ms")
    if data.get("x") is not None:
        print("x             " + " ".join(f"{v:.10g}" for v in data["x"]))
    t = ", ".join(f"{re:.6g}{im:+.6g}j"
                  for re, im in zip(data["t_re"], data["t_im"]))
    print("t             " + t)


def _emit_sweep(data: dict, out: str | None) -> None:
    from .harness import write_csv, format_csv
    from .service.app import rows_from_models
    from .service.schemas import SweepRowModel
    result = rows_from_models([SweepRowModel(**r) for r in data["rows"]])
    if out:
        write_csv(result, out)
        diag = data.get("diagnostics", {})
        print(f"wrote {len(result.rows)} rows to {out}"
              + (f" (diagnostics: {diag})" if any(diag.values()) else ""))
    else:
        sys.stdout.write(format_csv(result))


# --- subcommands ---------------------------------------------------------------


def cmd_precode(ns: argparse.Namespace) -> int:
    opt = Options(ns)
    payload = {
        "k": opt.get("k", int, required=True),
        "n": opt.get("n", int, required=True),
        "m": opt.get("m", int, required=True),
        "l": opt.get("l", int, required=True),
        "seed": opt.get("seed", int, 0),
        "p_t": opt.get("p_t", float, 1.0),
        "algorithm": opt.get("algos", str, "proposed"),
    }
    if ns.instance:
        try:
            with open(ns.instance, encoding="utf-8") as fh:
                payload["instance"] = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"could not load instance file {ns.instance!r}: {exc}")
    _print_precode(post(ns.server, "/precode", payload))
    return 0


def cmd_sweep_snr(ns: argparse.Namespace) -> int:
    opt = Options(ns)
    payload = {
        "k": opt.get("k", int, required=True),
        "n": opt.get("n", int, required=True),
        "m": opt.get("m", int, required=True),
        "l": opt.get("l", int, required=True),
        "snr_db": opt.get("snr", parse_float_list, required=True),
        "trials": opt.get("trials", int, 1000),
        "seed": opt.get("seed", int, 0),
        "algorithms": opt.get("algos", _parse_algos, list(_ALGOS)),
        "p_t": opt.get("p_t", float, 1.0),
        "measure_time": opt.get("measure_time", _parse_bool, True),
    }
    workers = opt.get("workers", int)
    if workers is not None:
        payload["workers"] = workers
    data = post(ns.server, "/sweep/snr", payload)
    _emit_sweep(data, opt.get("out", str))
    return 0


def cmd_sweep_l(ns: argparse.Namespace) -> int:
    opt = Options(ns)
    l_values = opt.get("l", parse_int_list, required=True)
    snr = opt.get("snr", parse_float_list, required=True)
    if len(snr) != 1:
        raise CliError("sweep-l takes a single --snr value")
    payload = {
        "k": opt.get("k", int, required=True),
        "n": opt.get("n", int, required=True),
        "m": opt.get("m", int, required=True),
        "l_values": l_values,
        "snr_db": snr[0],
        "trials": opt.get("trials", int, 1000),
        "seed": opt.get("seed", int, 0),
        "algorithms": opt.get("algos", _parse_algos, list(_ALGOS)),
        "p_t": opt.get("p_t", float, 1.0),
        "measure_time": opt.get("measure_time", _parse_bool, True),
    }
    workers = opt.get("workers", int)
    if workers is not None:
        payload["workers"] = workers
    data = post(ns.server, "/sweep/l", payload)
    _emit_sweep(data, opt.get("out", str))
    return 0


def cmd_params(ns: argparse.Namespace) -> int:
    opt = Options(ns)
    payload = {
        "k": opt.get("k", int, required=True),
        "n": opt.get("n", int, required=True),
        "m": opt.get("m", int, required=True),
        "l": opt.get("l", int, required=True),
        "seed": opt.get("seed", int, 0),
        "p_t": opt.get("p_t", float, 1.0),
    }
    data = post(ns.server, "/params", payload)
    for key, value in data.items():
        print(f"{key} = {value:.10g}" if isinstance(value, float)
              else f"{key} = {value}")
    return 0


def cmd_selftest(ns: argparse.Namespace) -> int:
    data = post(ns.server, "/selftest", {"fast": not ns.full})
    for check in data["checks"]:
        tag = "PASS" if check["passed"] else "FAIL"
        print(f"[{tag}] {check['name']}: {check['detail']}")
    if data["passed"]:
        print("selftest passed")
        return 0
    print("selftest FAILED")
    return 1


def cmd_serve(ns: argparse.Namespace) -> int:
    import uvicorn

    from .service.app import app
    uvicorn.run(app, host=ns.host, port=ns.port, log_level="info")
    return 0


_ALGOS = ("proposed", "msm", "zf")


def _parse_algos(text: str) -> list[str]:
    algos = [a.strip() for a in text.split(",") if a.strip()]
    unknown = set(algos) - set(_ALGOS)
    if unknown:
        raise CliError(f"unknown algorithms: {sorted(unknown)}")
    if not algos:
        raise CliError("empty algorithm list")
    return algos


def _add_common(sub: argparse.ArgumentParser, *, dims: bool = True) -> None:
    if dims:
        sub.add_argument("--k", type=int, help="number of users")
        sub.add_argument("--n", type=int, help="number of antennas")
        sub.add_argument("--m", type=int, help="PSK order (power of two >= 4)")
        sub.add_argument("--l", help="phase levels; sweep-l accepts a comma list")
        sub.add_argument("--seed", type=int, help="master seed (default 0)")
        sub.add_argument("--p-t", dest="p_t", type=float,
                         help="total transmit power (default 1)")
    sub.add_argument("--config", help="key = value file mirroring the flags")
    sub.add_argument("--server", help="URL of a running service "
                                      "(default: run in-process)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qceprec",
        description="Quantized constant-envelope PSK precoding simulator")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("precode", help="solve one instance and print the result")
    _add_common(p)
    p.add_argument("--algos", help="algorithm to run (default proposed)")
    p.add_argument("--instance", help="JSON file with h_re, h_im, symbol_indices")
    p.set_defaults(func=cmd_precode)

    p = subs.add_parser("sweep-snr", help="BER sweep over SNR at fixed L")
    _add_common(p)
    p.add_argument("--snr", help="SNR dB list: '0,5,10' or '0:5:20'")
    p.add_argument("--trials", type=int, help="trials per grid point")
    p.add_argument("--algos", help="comma list from proposed,msm,zf")
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--workers", type=int, help="thread count (default QCE_THREADS)")
    p.add_argument("--no-time", dest="measure_time", action="store_false",
                   default=None, help="zero the timing column (bit-reproducible runs)")
    p.set_defaults(func=cmd_sweep_snr)

    p = subs.add_parser("sweep-l", help="BER sweep over L at fixed SNR")
    _add_common(p)
    p.add_argument("--snr", help="single SNR in dB")
    p.add_argument("--trials", type=int, help="trials per grid point")
    p.add_argument("--algos", help="comma list from proposed,msm,zf")
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--workers", type=int, help="thread count (default QCE_THREADS)")
    p.add_argument("--no-time", dest="measure_time", action="store_false",
                   default=None, help="zero the timing column (bit-reproducible runs)")
    p.set_defaults(func=cmd_sweep_l)

    p = subs.add_parser("params", help="print resolved solver parameters")
    _add_common(p)
    p.set_defaults(func=cmd_params)

    p = subs.add_parser("selftest", help="run the oracle-equivalence suites")
    _add_common(p, dims=False)
    p.add_argument("--full", action="store_true",
                   help="full-size suites (slower)")
    p.set_defaults(func=cmd_selftest)

    p = subs.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return ns.func(ns)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except httpx.HTTPError as exc:
        print(f"error: request failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
