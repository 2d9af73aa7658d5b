"""Command-line client.

Every command builds a request for the HTTP service and writes the response
to disk. Without ``--server`` the service runs in-process.

Exit codes: 0 success, 2 configuration/input error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path
from typing import Optional

from . import io
from .config import ConfigError, experiment_payload, inline_pool, read_toml, section
from .harness import ExperimentReport, export_report, report_json

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


class RuntimeFailure(RuntimeError):
    pass


class Client:
    """Posts JSON to a running service, or to the in-process app."""

    def __init__(self, server: Optional[str] = None, timeout: float = 3600.0):
        if server:
            import httpx

            self._http = httpx.Client(base_url=server, timeout=timeout)
        else:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .api import app

            self._http = TestClient(app, raise_server_exceptions=False)

    def post(self, path: str, payload: dict) -> dict:
        try:
            resp = self._http.post(path, json=payload)
        except Exception as exc:
            raise RuntimeFailure(f"request to {path} failed: {exc}") from exc
        if resp.status_code in (400, 422):
            raise ConfigError(_detail(resp))
        if resp.status_code != 200:
            raise RuntimeFailure(f"{path}: HTTP {resp.status_code}: {_detail(resp)}")
        return resp.json()


def _detail(resp) -> str:
    try:
        detail = resp.json().get("detail", resp.text)
    except ValueError:
        return resp.text
    if isinstance(detail, list):
        return "; ".join(
            ".".join(str(x) for x in d.get("loc", [])) + ": " + d.get("msg", "") for d in detail
        )
    return str(detail)


def _print_json(obj) -> None:
    json.dump(obj, sys.stdout, indent=2)
    sys.stdout.write("\n")


def _read_matrix(path) -> list:
    try:
        return io.read_matrix_csv(path).tolist()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None


def cmd_simulate(args, client: Client) -> None:
    if args.pool:
        payload_pool = inline_pool({"pool": {"source": "file", "file": args.pool}})["pool"]
    else:
        payload_pool = {"source": "synthetic", "preset": args.preset,
                        "n_subjects": args.pool_subjects, "n_items": args.pool_items,
                        "seed": args.pool_seed}
    out = client.post("/simulate", {"pool": payload_pool, "n_subjects": args.subjects,
                                    "n_items": args.items, "seed": args.seed})
    io.write_matrix_csv(args.out, out["ratings"])
    sidecar = io.write_truth(args.out, out["truth"], out["bias"], out["inconsistency"], out["seed"])
    _print_json({"ratings": str(args.out), "truth": str(sidecar)})


def _section(path: Optional[str], name: str) -> dict:
    return section(read_toml(path), name) if path else {}


def cmd_detect(args, client: Client) -> None:
    out = client.post("/detect", {"method": args.method, "ratings": _read_matrix(args.input),
                                  "config": _section(args.config, "hard")})
    _print_json({"method": out["method"], "inlier_mask": out["inlier_mask"],
                 "removed": out["removed"]})


def cmd_reconstruct(args, client: Client) -> None:
    payload = {"method": args.method, "ratings": _read_matrix(args.input),
               "config": _section(args.config, "soft")}
    if args.mask:
        payload["mask"] = io.read_mask(args.mask)
    _print_json(client.post("/reconstruct", payload))


def cmd_attack(args, client: Client) -> None:
    truth_file = args.truth or io.truth_path(args.dataset)
    try:
        truth = io.read_truth(truth_file).tolist()
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"cannot read ground truth {truth_file}: {exc}") from None
    ga = _section(args.ga_config, "ga")
    if args.seed is not None:
        ga["seed"] = args.seed
    extra = read_toml(args.config) if args.config else {}
    payload = {"method": args.method, "ratings": _read_matrix(args.dataset), "truth": truth,
               "n_attackers": args.attackers, "ga": ga,
               "hard": extra.get("hard", {}), "soft": extra.get("soft", {})}
    out = client.post("/attack", payload)
    Path(args.out).write_text(json.dumps(out, indent=2) + "\n", encoding="utf-8")
    _print_json({"method": out["method"], "best_fitness": out["best_fitness"],
                 "evaluations": out["evaluations"], "out": str(args.out)})


def _experiment(args) -> dict:
    path = Path(args.config)
    return experiment_payload(read_toml(path), path.parent, master_seed=args.seed,
                              parallelism=args.parallelism, n_datasets=args.datasets)


def _write_report(data: dict, out_dir, fmt: str) -> None:
    report = ExperimentReport.from_dict(data)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report_json(report), encoding="utf-8")
    export_report(report, out, fmt)
    _print_json([
        {"method": a.method, "mean_rmse": round(a.mean_rmse, 6), "mean_rmsd": round(a.mean_rmsd, 6),
         "rmse_rank": a.rmse_rank, "rmsd_rank": a.rmsd_rank}
        for a in report.aggregates
    ])


def cmd_worst_case(args, client: Client) -> None:
    _write_report(client.post("/experiments/worst-case", _experiment(args)), args.out, args.format)


def cmd_spam_eval(args, client: Client) -> None:
    _write_report(client.post("/experiments/spammers", _experiment(args)), args.out, args.format)


def cmd_ablation(args, client: Client) -> None:
    payload = _experiment(args)
    payload["method"] = args.method
    out = client.post("/experiments/ablation", payload)
    dest = Path(args.out)
    dest.mkdir(parents=True, exist_ok=True)
    for label in ("ga", "random"):
        rows = "\n".join(format(v, ".6g") for v in out[f"{label}_values"])
        (dest / f"ablation_{out['method']}_{label}.csv").write_text(
            "rmse\n" + rows + "\n", encoding="utf-8")
    summary = {k: out[k] for k in ("method", "dataset_index", "ga_best", "random_best")}
    summary["evaluations"] = len(out["ga_values"])
    (dest / "ablation.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    _print_json(summary)


def cmd_report(args, client: Client) -> None:
    try:
        data = json.loads(Path(args.input).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read report {args.input}: {exc}") from None
    report = ExperimentReport.from_dict(data)
    paths = export_report(report, args.out, args.format)
    _print_json([str(p) for p in paths])


def cmd_serve(args, client=None) -> None:
    import uvicorn

    uvicorn.run("mosattack.api:app", host=args.host, port=args.port)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mosattack", description=__doc__.splitlines()[0])
    p.add_argument("--server", help="base URL of a running service (default: in-process)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="sample a synthetic rating matrix")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--pool", help="pool file with [subjects] and [mos] sections")
    src.add_argument("--synth", action="store_true", help="use a synthetic pool")
    s.add_argument("--preset", default="uniform", help="synthetic pool preset")
    s.add_argument("--pool-subjects", type=int, default=1257)
    s.add_argument("--pool-items", type=int, default=10073)
    s.add_argument("--pool-seed", type=int, default=0)
    s.add_argument("--subjects", type=int, required=True)
    s.add_argument("--items", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("detect", help="run a hard detector on a matrix")
    s.add_argument("--method", required=True)
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--config", help="TOML with a [hard] table")
    s.set_defaults(func=cmd_detect)

    s = sub.add_parser("reconstruct", help="reconstruct scale values")
    s.add_argument("--method", required=True, choices=["mos", "sureal", "esqr", "zrec"])
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--mask", help="JSON inlier mask (list or detect output)")
    s.add_argument("--config", help="TOML with a [soft] table")
    s.set_defaults(func=cmd_reconstruct)

    s = sub.add_parser("attack", help="GA attack on one dataset")
    s.add_argument("--dataset", required=True, help="matrix CSV; truth read from the sidecar")
    s.add_argument("--truth", help="ground-truth JSON (default: <dataset>.truth.json)")
    s.add_argument("--method", required=True)
    s.add_argument("--ga-config")
    s.add_argument("--config", help="TOML with [hard]/[soft] tables")
    s.add_argument("--attackers", type=int, default=5)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_attack)

    for name, func, helptext in (
        ("worst-case", cmd_worst_case, "GA worst-case experiment"),
        ("spam-eval", cmd_spam_eval, "spammer experiment"),
        ("ablation", cmd_ablation, "GA vs equal-budget random search"),
    ):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--config", required=True)
        s.add_argument("--seed", type=int, help="override master_seed")
        s.add_argument("--datasets", type=int, help="override n_datasets")
        s.add_argument("--parallelism", type=int)
        s.add_argument("--out", required=True)
        if name == "ablation":
            s.add_argument("--method", default="KB")
        else:
            s.add_argument("--format", choices=["csv", "json"], default="csv")
        s.set_defaults(func=func)

    s = sub.add_parser("report", help="re-export a saved report.json")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--format", choices=["csv", "json"], default="csv")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("serve", help="run the HTTP service")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8000)
    s.set_defaults(func=cmd_serve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.func is cmd_serve:
            cmd_serve(args)
            return EXIT_OK
        if args.func is cmd_report:
            cmd_report(args, None)
            return EXIT_OK
        args.func(args, Client(args.server))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
