"""Command-line client for the solver service.

By default the commands talk to an in-process instance of the service, so
no server needs to be running; pass --server to target a remote one
(started with `fracdelay serve`).

Exit codes: 0 success, 2 configuration or domain errors, 3 solver
non-convergence, 4 stability certification failure.
"""

import argparse
import sys

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGENCE = 3
EXIT_STABILITY_FAIL = 4


def make_client(server=None):
    if server:
        import httpx
        return httpx.Client(base_url=server, timeout=600.0)
    from starlette.testclient import TestClient

    from .service import app
    return TestClient(app, raise_server_exceptions=False)


def _fail_from_response(resp):
    try:
        detail = resp.json().get("detail", {})
    except Exception:
        detail = {}
    kind = detail.get("kind", "config_error") if isinstance(detail, dict) else "config_error"
    if isinstance(detail, dict):
        field = detail.get("field")
        message = detail.get("message", resp.text)
    else:
        field, message = None, str(detail)
    where = f" [{field}]" if field else ""
    print(f"error{where}: {message}", file=sys.stderr)
    if kind == "non_convergence":
        return EXIT_NONCONVERGENCE
    return EXIT_CONFIG


def _read_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        print(f"error [config]: cannot read {path}: {e}", file=sys.stderr)
        return None


def cmd_solve(args):
    text = _read_config(args.config)
    if text is None:
        return EXIT_CONFIG
    with make_client(args.server) as client:
        resp = client.post("/solve", json={"config": text})
        if resp.status_code != 200:
            return _fail_from_response(resp)
        data = resp.json()
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("ell,z\n")
        for ell, z in zip(data["grid"], data["values"]):
            fh.write(f"{ell!r},{z!r}\n")
    ratios = ", ".join(f"{r:.4f}" for r in data["contraction_ratios"][:8])
    more = " ..." if len(data["contraction_ratios"]) > 8 else ""
    print(f"solved in {data['iterations']} iterations, "
          f"final residual {data['final_residual']:.3e}; wrote {args.out}")
    print(f"contraction ratios: {ratios}{more}")
    return EXIT_OK


def cmd_stability(args):
    text = _read_config(args.config)
    if text is None:
        return EXIT_CONFIG
    with make_client(args.server) as client:
        resp = client.post("/stability", json={"config": text})
        if resp.status_code != 200:
            return _fail_from_response(resp)
        data = resp.json()
    lines = [
        f"epsilon: {data['epsilon']!r}",
        f"c_ml: {data['c_ml']!r}",
        f"trials: {data['trials']}",
        f"worst_ratio: {data['worst_ratio']!r}",
        f"history_max_dev: {data['history_max_dev']!r}",
        f"pass: {str(data['passed']).lower()}",
    ]
    report = "\n".join(lines) + "\n"
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report)
    print(report, end="")
    print(f"wrote {args.out}")
    return EXIT_OK if data["passed"] else EXIT_STABILITY_FAIL


def cmd_mlf(args):
    vals = args.args
    if len(vals) == 2:
        p, q, theta = vals[0], None, vals[1]
    elif len(vals) == 3:
        p, q, theta = vals
    else:
        print("error: mlf expects `mlf P [Q] -- THETA`", file=sys.stderr)
        return EXIT_CONFIG
    payload = {"p": p, "theta": theta}
    if q is not None:
        payload["q"] = q
    with make_client(args.server) as client:
        resp = client.post("/mlf", json=payload)
        if resp.status_code != 200:
            return _fail_from_response(resp)
        value = resp.json()["value"]
    print(f"{value:.17g}")
    return EXIT_OK


def cmd_verify(args):
    with make_client(args.server) as client:
        resp = client.post("/verify", json={"suite": args.suite})
        if resp.status_code != 200:
            return _fail_from_response(resp)
        data = resp.json()
    print(f"{'check':<44s} {'observed':>11s} {'tol':>9s} result")
    for row in data["checks"]:
        flag = "pass" if row["passed"] else "FAIL"
        print(f"{row['name']:<44s} {row['observed']:11.3e} "
              f"{row['tolerance']:9.1e} {flag}")
    if data["all_passed"]:
        print("all checks passed")
        return EXIT_OK
    print("FAILURES present")
    return 1


def cmd_serve(args):
    import uvicorn

    from .service import app
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fracdelay",
        description="Solve multi-term fractional delay equations and certify "
                    "their Ulam-Hyers-Mittag-Leffler stability.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve a configured problem, write a CSV trajectory")
    p_solve.add_argument("config")
    p_solve.add_argument("-o", "--out", default="trajectory.csv")
    p_solve.add_argument("--server", default=None)
    p_solve.set_defaults(fn=cmd_solve)

    p_stab = sub.add_parser("stability", help="run the stability certification")
    p_stab.add_argument("config")
    p_stab.add_argument("-o", "--out", default="stability_report.txt")
    p_stab.add_argument("--server", default=None)
    p_stab.set_defaults(fn=cmd_stability)

    p_mlf = sub.add_parser("mlf", help="evaluate a Mittag-Leffler function: mlf P [Q] -- THETA")
    p_mlf.add_argument("args", nargs="+", type=float)
    p_mlf.add_argument("--server", default=None)
    p_mlf.set_defaults(fn=cmd_mlf)

    p_ver = sub.add_parser("verify", help="run a property suite: calculus | laplace | all")
    p_ver.add_argument("suite", choices=["calculus", "laplace", "all"])
    p_ver.add_argument("--server", default=None)
    p_ver.set_defaults(fn=cmd_verify)

    p_srv = sub.add_parser("serve", help="run the HTTP service")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, default=8000)
    p_srv.set_defaults(fn=cmd_serve)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
