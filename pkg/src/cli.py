"""
Command-line entry point: cascade-bandits run|report|verify|features|lowerbound.

Domain errors print "error: <message>" on stderr and exit with status 2.
"""

import argparse
import json
import sys
from typing import List, Optional

from config import logger
from utils import CascadeBanditError
from api import CascadeBenchAPI


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cascade-bandits",
                                     description="Cascading-bandit simulations, reports and theory checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config", help="experiment config JSON")
    run.add_argument("--out", default=None, help="output directory (overrides the config)")
    run.add_argument("--workers", type=int, default=None, help="worker processes (default CASCADE_BANDITS_THREADS)")

    report = sub.add_parser("report", help="re-render the report of a saved result.json")
    report.add_argument("result", help="result.json written by run")
    report.add_argument("--out", default=None, help="output directory (default: next to the result)")

    verify = sub.add_parser("verify", help="run the property suites")
    verify.add_argument("--quick", action="store_true", help="reduced replication counts")
    verify.add_argument("--json", dest="json_path", default=None, help="write the machine-readable report here")

    features = sub.add_parser("features", help="generate item features from a 0/1 click CSV")
    features.add_argument("--train", required=True, help="training matrix CSV, one row per user")
    features.add_argument("--d", type=int, required=True, help="feature dimension")
    features.add_argument("--K", type=int, required=True, help="list length the features are normalized for")
    features.add_argument("--out", default=None, help="feature JSON path")

    lower = sub.add_parser("lowerbound", help="evaluate the minimax regret lower bound")
    lower.add_argument("--L", type=int, required=True)
    lower.add_argument("--K", type=int, required=True)
    lower.add_argument("--T", type=int, required=True)
    return parser


def _dispatch(args: argparse.Namespace, api: CascadeBenchAPI) -> int:
    if args.command == "run":
        result = api.run_experiment(args.config, output_dir=args.out, workers=args.workers)
        print(result["table"], end="")
        for name, path in sorted(result["paths"].items()):
            print(f"{name}: {path}")
        return 0
    if args.command == "report":
        result = api.render_report(args.result, output_dir=args.out)
        print(result["table"], end="")
        return 0
    if args.command == "verify":
        report = api.verify(quick=args.quick, output=args.json_path)
        width = max(len(r["name"]) for r in report["rows"])
        for r in report["rows"]:
            status = "PASS" if r["passed"] else "FAIL"
            print(f"{status}  {r['name']:<{width}}  measured={r['measured']:.3g}  "
                  f"threshold={r['threshold']:.3g}  {r['seconds']:.2f}s  {r['detail']}".rstrip())
        return 0 if report["passed"] else 1
    if args.command == "features":
        print(json.dumps(api.generate_features(args.train, args.d, args.K, args.out), indent=2, sort_keys=True))
        return 0
    result = api.lower_bound(args.L, args.K, args.T)
    print(f"bound={result['bound']:.6g} epsilon={result['epsilon']:.6g}"
          + (" (vacuous, clamped to 0)" if result["clamped"] else ""))
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args, CascadeBenchAPI())
    except CascadeBanditError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        logger.error(f"I/O failure: {e}")
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
