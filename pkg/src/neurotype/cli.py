"""Command-line interface: train, eval, analyze, serve, simulate, synth."""

from __future__ import annotations

import argparse
import glob
import json
import os
import sys

import numpy as np

from . import data, pipeline, server, similarity
from .typing_engine import CommandMap


def _subject_path(data_dir, subject):
    path = os.path.join(data_dir, f"{subject}.csv")
    if not os.path.exists(path):
        raise SystemExit(f"no dataset file {path}")
    return path


def _load_config(path, channels):
    if path:
        with open(path) as fh:
            return pipeline.PipelineConfig.from_json(fh.read())
    return pipeline.PipelineConfig(channels=channels)


def cmd_train(args):
    ds = data.load_dataset(_subject_path(args.data, args.subject))
    config = _load_config(args.config, ds.channels)
    train_ds, test_ds = data.split(ds, data.SplitSpec(seed=args.seed))
    traces = {}
    model = pipeline.train_pipeline(train_ds, config, seed=args.seed,
                                    loss_traces=traces)
    pipeline.save_model(model, args.out)
    metrics = pipeline.evaluate(model, test_ds)
    print(f"trained on {len(train_ds)} samples, held-out accuracy "
          f"{metrics.accuracy:.4f}; model written to {args.out}")


def cmd_eval(args):
    model = pipeline.load_model(args.model)
    ds = data.load_dataset(_subject_path(args.data, args.subject))
    _, test_ds = data.split(ds, data.SplitSpec(seed=args.seed))
    metrics = pipeline.evaluate(model, test_ds)
    report = pipeline.metrics_to_csv(metrics)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(report)
        roc_path = os.path.splitext(args.report)[0] + "_roc.csv"
        with open(roc_path, "w") as fh:
            fh.write("class,fpr,tpr\n")
            for c, (fpr, tpr) in enumerate(metrics.roc):
                for f, t in zip(fpr, tpr):
                    fh.write(f"{c},{f:.6f},{t:.6f}\n")
    print(report, end="")


def cmd_analyze(args):
    paths = sorted(glob.glob(os.path.join(args.data, "*.csv")))
    if not paths:
        raise SystemExit(f"no subject CSVs under {args.data}")
    mats = []
    for path in paths:
        ds = data.load_dataset(path)
        mats.append(similarity.similarity_matrix(ds.by_intent(), m=args.samples,
                                                 seed=args.seed))
    mat = np.mean(mats, axis=0)
    rows = []
    for i in range(mat.shape[0]):
        cross = similarity.cross_similarity(mat[i], i)
        rows.append({"intent": i, "row": mat[i].tolist(), "self": mat[i, i],
                     "cross": cross,
                     "pd": similarity.percentage_difference(mat[i, i], cross)})
    csv = similarity.report_to_csv(mat, rows)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(csv)
    print(csv, end="")


def _make_classifier(args):
    if args.stub:
        return server.stub_classifier
    if not args.model:
        raise SystemExit("either --model or --stub is required")
    return server.model_classifier(pipeline.load_model(args.model))


def _load_map(path):
    if not path:
        return CommandMap()
    with open(path) as fh:
        return CommandMap({int(k): v for k, v in json.load(fh).items()})


def cmd_serve(args):
    host, _, port = args.listen.rpartition(":")
    session = server.TypingSession(_make_classifier(args), _load_map(args.map))
    svc = server.TypingServer(session, host=host or "127.0.0.1", port=int(port),
                              http_port=args.http_port)
    print(f"listening on {svc.address[0]}:{svc.address[1]}"
          + (f", http bridge on port {svc.http_address[1]}"
                 if args.http_port is not None else ""))
    sys.stdout.flush()
    svc.serve_forever()


def cmd_simulate(args):
    frames = server.read_frames(args.input)
    session = server.simulate(
        frames, _make_classifier(args), _load_map(args.map), speed=args.speed,
        on_event=lambda e: print(json.dumps(e)))
    print(f"typed: {session.state.typed!r}")


def cmd_synth(args):
    ds = data.synthesize_subject(args.samples, args.channels, seed=args.seed,
                                 subject=args.subject)
    os.makedirs(args.out, exist_ok=True)
    data.save_dataset(ds, os.path.join(args.out, f"{args.subject}.csv"))
    print(f"wrote {args.samples} samples to {args.out}/{args.subject}.csv")


def build_parser():
    p = argparse.ArgumentParser(prog="neurotype",
                                description="EEG intent decoding and brain typing")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train the full pipeline on one subject")
    t.add_argument("--data", required=True)
    t.add_argument("--subject", required=True)
    t.add_argument("--config")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)
    t.set_defaults(fn=cmd_train)

    e = sub.add_parser("eval", help="evaluate a trained model")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--subject", required=True)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--report")
    e.set_defaults(fn=cmd_eval)

    a = sub.add_parser("analyze", help="similarity analysis over all subjects")
    a.add_argument("--data", required=True)
    a.add_argument("--out")
    a.add_argument("--samples", type=int, default=50)
    a.add_argument("--seed", type=int, default=0)
    a.set_defaults(fn=cmd_analyze)

    s = sub.add_parser("serve", help="run the live typing service")
    s.add_argument("--listen", default="127.0.0.1:8765")
    s.add_argument("--model")
    s.add_argument("--map")
    s.add_argument("--stub", action="store_true",
                   help="classify each sample from its first channel value")
    s.add_argument("--http-port", type=int, default=None,
                   help="also expose the browser bridge on this port")
    s.set_defaults(fn=cmd_serve)

    m = sub.add_parser("simulate", help="replay a frame capture file")
    m.add_argument("--input", required=True)
    m.add_argument("--model")
    m.add_argument("--map")
    m.add_argument("--stub", action="store_true")
    m.add_argument("--speed", type=float, default=0.0,
                   help="wall-clock replay speed; 0 replays instantly")
    m.set_defaults(fn=cmd_simulate)

    y = sub.add_parser("synth", help="write a synthetic subject dataset")
    y.add_argument("--out", required=True)
    y.add_argument("--subject", default="SYN")
    y.add_argument("--samples", type=int, default=1000)
    y.add_argument("--channels", type=int, default=64)
    y.add_argument("--seed", type=int, default=0)
    y.set_defaults(fn=cmd_synth)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    args.fn(args)


if __name__ == "__main__":
    main()
