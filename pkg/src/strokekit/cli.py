"""Command-line entry point: ``strokekit <command> ...``.

Every command exits 0 on success. Failures print a single line
``error: <code>: <message>`` to stderr and exit 1 (2 for usage errors).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import signal
import sys
import threading
from pathlib import Path

import numpy as np

from .errors import StrokeKitError

logger = logging.getLogger("strokekit")

RESULTS_FILE = "results.json"


class CliError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


# -- commands ----------------------------------------------------------------

def cmd_serve(args):
    from .streaming import SessionStore, serve

    store = SessionStore(args.store)
    handle = serve(args.listen, store)
    print(f"listening {handle.address_str}", flush=True)
    done = threading.Event()
    signal.signal(signal.SIGTERM, lambda *_: done.set())
    try:
        while not done.wait(0.2):
            if args.max_sessions and len(handle.closed_sessions) >= args.max_sessions:
                break
    except KeyboardInterrupt:
        pass
    finally:
        handle.stop()
    for path in handle.closed_sessions:
        print(f"session {Path(path).name}", flush=True)


def cmd_replay(args):
    from .streaming import read_session, replay

    session = read_session(args.session)
    result = replay(session, args.to, args.speed, session_id=args.session_id)
    print(json.dumps({"session_id": result.session_id, "frames_sent": result.frames_sent,
                      "frames_acked": result.frames_acked, "complete": result.complete,
                      "wall_time_s": round(result.wall_time_s, 3)}))
    if not result.ok:
        raise CliError("replay", f"server acknowledged {result.frames_acked} of {result.frames_sent} frames")


def cmd_analyze(args):
    from .errors import ConfigurationError
    from .pipeline import analyze_session, load_bundle
    from .report import render_json
    from .streaming import read_session

    session = read_session(args.session)
    bundle = load_bundle(args.models)
    if args.audio_fusion and not bundle.include_audio:
        raise ConfigurationError(f"impact models in {args.models} were trained without audio features")
    report = analyze_session(session, bundle)
    text = render_json(report)
    (Path(args.session) / RESULTS_FILE).write_text(text)
    summary = {"session_id": report.session_id, "stroke_count": report.stroke_count,
               "type_counts": report.type_counts, "mean_rating": report.mean_rating,
               "rejected_candidates": report.rejected_candidates, "failures": len(report.failures)}
    print(json.dumps(summary))


def _load_training_data(path, adapter=None):
    from .dataset import load_dataset

    data = load_dataset(path, adapter)
    if not data:
        raise CliError("data", f"{path} holds no strokes")
    return data


def _train_config(args):
    from .models import TrainConfig

    return TrainConfig(C=args.C, gamma=args.gamma, seed=args.seed)


def cmd_train(args):
    from .models import save_model
    from .pipeline import train_task

    data = _load_training_data(args.data, args.adapter)
    tasks = ("classify", "rate", "impact") if args.task == "all" else (args.task,)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for task in tasks:
        models = train_task(data, task, _train_config(args), augment=not args.no_augment,
                            include_audio=args.audio_fusion, seed=args.seed, search=args.grid_search)
        for name, model in models.items():
            save_model(model, out / name)
            written.append(name)
    print(json.dumps({"out": str(out), "models": written, "strokes": len(data)}))


def cmd_eval(args):
    from .analytics import evaluate

    data = _load_training_data(args.data, args.adapter)
    table = evaluate(data, args.task, args.split, args.seed, _train_config(args),
                     augment=not args.no_augment, include_audio=args.audio_fusion)
    if args.json:
        print(json.dumps(table.to_dict()))
    else:
        print(f"{args.task} / {args.split} / seed {args.seed}")
        print(table.format())


def cmd_synth(args):
    from . import synth
    from .dataset import save_corpus
    from .streaming import write_session

    if args.corpus:
        segments = synth.make_corpus(args.strokes, n_users=args.users, seed=args.seed)
        save_corpus(segments, args.out)
        print(json.dumps({"out": args.out, "strokes": len(segments)}))
        return
    total = args.strokes + args.air_swings
    duration = args.duration or max(30.0, 3.5 * total + 3.0)
    session, truth = synth.random_session(args.strokes, args.air_swings, duration, seed=args.seed,
                                          user_id=args.user, session_id=Path(args.out).name)
    out = Path(args.out)
    if out.exists() and any(out.iterdir()):
        raise CliError("exists", f"{out} already exists and is not empty")
    if out.exists():
        out.rmdir()
    write_session(session, out)
    synth.write_truth(out / "truth.json", truth)
    print(json.dumps({"out": str(out), "strokes": args.strokes, "air_swings": args.air_swings,
                      "duration_s": duration}))


def cmd_report(args):
    from .report import parse_json, render_report

    results = Path(args.session) / RESULTS_FILE
    if not results.exists():
        raise CliError("not-analyzed", f"{results} not found; run 'strokekit analyze' first")
    report = parse_json(results.read_text())
    text = render_report(report, args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def read_ratings_csv(path) -> tuple[list, np.ndarray]:
    """Assessor ids and a strokes x assessors matrix; empty cells become NaN."""
    with open(path, newline="") as f:
        rows = [r for r in csv.reader(f) if any(c.strip() for c in r)]
    if len(rows) < 2:
        raise CliError("ratings", f"{path} needs a header row and at least one stroke row")
    header = [h.strip() for h in rows[0]]
    matrix = np.full((len(rows) - 1, len(header)), np.nan)
    for i, row in enumerate(rows[1:]):
        if len(row) != len(header):
            raise CliError("ratings", f"{path} line {i + 2}: {len(row)} fields, header has {len(header)}")
        for j, cell in enumerate(row):
            cell = cell.strip()
            if cell:
                try:
                    matrix[i, j] = float(cell)
                except ValueError:
                    raise CliError("ratings", f"{path} line {i + 2}: {cell!r} is not a number") from None
    return header, matrix


def cmd_icc(args):
    from .analytics import icc_consistency_k

    header, matrix = read_ratings_csv(args.ratings)
    value = icc_consistency_k(matrix)
    print(json.dumps({"icc_c_k": value, "strokes": matrix.shape[0], "assessors": len(header)}))


# -- parser ------------------------------------------------------------------

def _add_train_options(p):
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--adapter", default=None, help="dataset adapter name (default: auto-detect)")
    p.add_argument("--audio-fusion", action="store_true", help="add audio features to impact estimation")
    p.add_argument("--no-augment", action="store_true", help="train without augmented copies")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-C", dest="C", type=float, default=10.0)
    p.add_argument("--gamma", default="scale", type=lambda v: v if v == "scale" else float(v))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="strokekit", description="Badminton stroke analytics from wrist sensors.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="ingest sensor streams into a session store")
    p.add_argument("--listen", default="127.0.0.1:7070")
    p.add_argument("--store", default=None, help="store root (default: $STROKEKIT_STORE or ./sessions)")
    p.add_argument("--max-sessions", type=int, default=0, help="exit after this many closed sessions")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("replay", help="stream a stored session to a server")
    p.add_argument("--session", required=True)
    p.add_argument("--to", required=True)
    p.add_argument("--speed", type=float, default=1.0)
    p.add_argument("--session-id", default=None)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("analyze", help="segment and analyse a stored session")
    p.add_argument("--session", required=True)
    p.add_argument("--models", required=True)
    p.add_argument("--audio-fusion", action="store_true", help="require impact models that use audio")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("train", help="train models from a labelled dataset")
    _add_train_options(p)
    p.add_argument("--task", required=True, choices=["classify", "rate", "impact", "all"])
    p.add_argument("--out", required=True)
    p.add_argument("--grid-search", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="cross-validated evaluation")
    _add_train_options(p)
    p.add_argument("--task", required=True, choices=["classify", "rate", "impact"])
    p.add_argument("--split", default="kfold5", choices=["kfold5", "leave3users"])
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic session (or corpus with --corpus)")
    p.add_argument("--strokes", type=int, required=True, help="strokes in the session, or per type with --corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--air-swings", type=int, default=0)
    p.add_argument("--duration", type=float, default=None, help="session length in seconds")
    p.add_argument("--user", type=int, default=0)
    p.add_argument("--corpus", action="store_true", help="write a labelled stroke corpus instead")
    p.add_argument("--users", type=int, default=12, help="users in a corpus")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("report", help="render an analysed session")
    p.add_argument("--session", required=True)
    p.add_argument("--format", default="json", choices=["json", "html"])
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("icc", help="ICC(C,k) of a ratings CSV")
    p.add_argument("--ratings", required=True)
    p.set_defaults(func=cmd_icc)
    return parser


def _error_code(exc: BaseException) -> str:
    if isinstance(exc, (CliError, StrokeKitError)):
        return exc.code
    if isinstance(exc, FileNotFoundError):
        return "not-found"
    if isinstance(exc, NotImplementedError):
        return "not-implemented"
    if isinstance(exc, (ValueError, TypeError)):
        return "invalid-argument"
    if isinstance(exc, OSError):
        return "io"
    return "internal"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except KeyboardInterrupt:
        print("error: interrupted: interrupted", file=sys.stderr)
        return 130
    except Exception as exc:
        message = " ".join(str(exc).split()) or type(exc).__name__
        print(f"error: {_error_code(exc)}: {message}", file=sys.stderr)
        logger.debug("command failed", exc_info=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
