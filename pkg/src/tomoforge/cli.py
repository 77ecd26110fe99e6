"""Command-line pipeline: synthesize, measure, compare, train, evaluate.

Every command resolves its configuration (flags, optional JSON config
file, TOMOFORGE_SEED override), writes a manifest echoing it next to
its outputs, and exits 0 on success, 2 on usage errors, 3 on data
errors, 4 on training divergence.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import colormap as cm
from . import metrics, moments, tomogrid, wgan
from .classify import (Verdict, build_glossary, classify, glossary_from_json,
                       glossary_to_json)
from .errors import DivergenceError, TomoforgeError
from .states import DEFAULT_CUTOFF, FockBasisCutoff, QuadraturePdf, QuantumState

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_DIVERGENCE = 4

THETA_NAMES = {"pi": math.pi, "pi/2": math.pi / 2, "pi/3": math.pi / 3,
               "pi/4": math.pi / 4, "2pi/3": 2 * math.pi / 3,
               "3pi/4": 3 * math.pi / 4, "-pi/2": -math.pi / 2}


def _parse_theta(text: str) -> float:
    text = text.strip()
    if text in THETA_NAMES:
        return THETA_NAMES[text]
    return float(text)


def _parse_states(text: str) -> list[QuantumState]:
    return [QuantumState.from_label(tok) for tok in text.split(",") if tok]


def _colormap(text: str) -> cm.ColormapId:
    try:
        return cm.ColormapId(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"unknown colormap {text!r}; choose from "
            f"{[c.value for c in cm.ColormapId]}") from None


def _seed_override(seed: int) -> int:
    env = os.environ.get("TOMOFORGE_SEED")
    return int(env) if env else seed


def _write_manifest(path: Path, config: dict) -> None:
    with open(path, "w") as fh:
        json.dump(config, fh, indent=2, sort_keys=True, default=str)


def _grid_from_args(args) -> tomogrid.TomogramGrid:
    return tomogrid.TomogramGrid(x_min=args.x_min, x_max=args.x_max,
                                 n_x=args.n_x, n_theta=args.n_theta)


def _add_grid_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--x-min", type=float, default=-5.0)
    p.add_argument("--x-max", type=float, default=5.0)
    p.add_argument("--n-x", type=int, default=128)
    p.add_argument("--n-theta", type=int, default=128)
    p.add_argument("--cutoff", type=int, default=64,
                   help="Fock-basis truncation")


# ---------------------------------------------------------------------------
# commands

def cmd_synth(args) -> int:
    state = QuantumState.from_label(args.state)
    grid = _grid_from_args(args)
    tomo = tomogrid.synthesize(state, grid, FockBasisCutoff(args.cutoff))
    out = Path(args.out)
    tomogrid.tomogram_to_csv(tomo, out)
    written = [str(out)]
    if args.png or args.ppm:
        img = cm.encode(tomo, args.colormap)
        if args.png:
            cm.write_png(img, args.png)
            written.append(args.png)
        if args.ppm:
            cm.write_ppm(img, args.ppm)
            written.append(args.ppm)
        sidecar = {"colormap": args.colormap.value, "v_max": img.v_max,
                   "grid": _grid_json(grid), "state": state.label()}
        for p in (args.png, args.ppm):
            if p:
                _write_manifest(Path(p).with_suffix(Path(p).suffix + ".json"),
                                sidecar)
    _write_manifest(out.with_suffix(out.suffix + ".manifest.json"), {
        "command": "synth", "state": state.label(), "grid": _grid_json(grid),
        "cutoff": args.cutoff, "colormap": args.colormap.value,
        "outputs": written})
    print(f"wrote {', '.join(written)}")
    return 0


def _grid_json(grid: tomogrid.TomogramGrid) -> dict:
    return {"x_min": grid.x_min, "x_max": grid.x_max,
            "theta_min": grid.theta_min, "theta_max": grid.theta_max,
            "n_x": grid.n_x, "n_theta": grid.n_theta}


def _grid_from_json(d: dict) -> tomogrid.TomogramGrid:
    return tomogrid.TomogramGrid(
        x_min=d["x_min"], x_max=d["x_max"], theta_min=d["theta_min"],
        theta_max=d["theta_max"], n_x=d["n_x"], n_theta=d["n_theta"])


def _load_tomogram(args) -> tuple[tomogrid.Tomogram, int]:
    """Tomogram plus foreign-pixel count (zero for CSV input)."""
    if args.tomogram:
        return tomogrid.tomogram_from_csv(args.tomogram), 0
    pixels = cm.read_png(args.image) if args.image.endswith(".png") \
        else cm.read_ppm(args.image)
    sidecar = Path(args.image + ".json")
    v_max, grid = 1.0, None
    if sidecar.exists():
        meta = json.loads(sidecar.read_text())
        v_max = meta.get("v_max", 1.0)
        if "grid" in meta:
            grid = _grid_from_json(meta["grid"])
    img = cm.image_from_pixels(pixels, args.colormap, v_max=v_max, grid=grid)
    tomo, foreign = cm.decode_with_flags(img)
    if foreign and args.strict:
        raise cm.ForeignPixelError(
            f"{foreign} pixel(s) foreign to {args.colormap.value}",
            count=foreign)
    return tomo, foreign


def _report_to_json(rep) -> dict:
    return {
        "mean_n": rep.mean_n,
        "quad_mean": {repr(t): v for t, v in rep.quad_mean.items()},
        "quad_var": {repr(t): v for t, v in rep.quad_var.items()},
        "higher": {f"{t!r},{k}": v for (t, k), v in rep.higher.items()},
        "flags": rep.flags,
    }


def cmd_moments(args) -> int:
    thetas = tuple(_parse_theta(t) for t in args.thetas.split(",")) \
        if args.thetas else moments.CANONICAL_THETAS
    regulator = None
    if args.regulator:
        x0, length, s = (float(v) for v in args.regulator.split(","))
        regulator = cm.Regulator(x0=x0, L=length, s=int(s))
    glossary = glossary_from_json(args.glossary) if args.glossary else None

    tomo, foreign = _load_tomogram(args)
    extra = [moments.FLAG_FOREIGN] if foreign else []
    rep = moments.report(tomo, thetas=thetas, regulator=regulator,
                         glossary=glossary, extra_flags=extra)
    payload = _report_to_json(rep)
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(payload, fh, indent=2)
        _write_manifest(Path(args.out).with_suffix(".manifest.json"), {
            "command": "moments", "input": args.tomogram or args.image,
            "thetas": list(thetas), "regulator": args.regulator,
            "glossary": args.glossary, "colormap": getattr(args.colormap, "value", None)})
    print(json.dumps(payload, indent=2))
    return 0


def _load_pdf(path) -> QuadraturePdf:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    pdf = QuadraturePdf(theta=0.0, x=data[:, 0], p=data[:, 1])
    return moments.normalize_pdf(pdf)


def cmd_wdist(args) -> int:
    if args.pdf_a and args.pdf_b:
        f, g = _load_pdf(args.pdf_a), _load_pdf(args.pdf_b)
    else:
        ta = tomogrid.tomogram_from_csv(args.tomogram_a)
        tb = tomogrid.tomogram_from_csv(args.tomogram_b)
        f = moments.normalize_pdf(
            moments.extract_slice(ta, _parse_theta(args.theta_a)))
        g = moments.normalize_pdf(
            moments.extract_slice(tb, _parse_theta(args.theta_b)))
    value = metrics.w1_pdf(f, g)
    print(f"{value:.6g}")
    return 0


def cmd_glossary(args) -> int:
    entries = build_glossary(_parse_states(args.states))
    glossary_to_json(entries, args.out)
    print(f"wrote {args.out} ({len(entries)} entries)")
    return 0


def cmd_dataset(args) -> int:
    states = _parse_states(args.states)
    noise = None
    if args.noise:
        model_code, eps = args.noise.split(":")
        noise = tomogrid.NoiseSpec(model=tomogrid.NoiseModel(model_code),
                                   epsilon=float(eps), fraction=0.05,
                                   seed=_seed_override(args.seed))
    grid = _grid_from_args(args)
    ds = tomogrid.assemble_dataset(states, noise, args.colormap, grid,
                                   FockBasisCutoff(args.cutoff))
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for i, (img, rec) in enumerate(zip(ds.items, ds.manifest)):
        name = f"item_{i:04d}.png"
        cm.write_png(img, outdir / name)
        rec["file"] = name
        rec["v_max"] = img.v_max
    _write_manifest(outdir / "manifest.json", {
        "command": "dataset", "states": [s.label() for s in states],
        "noise": args.noise, "seed": _seed_override(args.seed),
        "colormap": args.colormap.value, "grid": _grid_json(grid),
        "items": ds.manifest})
    print(f"wrote {len(ds.items)} images to {outdir}")
    return 0


def _load_dataset(path) -> tomogrid.TrainingDataset:
    indir = Path(path)
    meta = json.loads((indir / "manifest.json").read_text())
    grid = _grid_from_json(meta["grid"])
    cid = cm.ColormapId(meta["colormap"])
    ds = tomogrid.TrainingDataset()
    for rec in meta["items"]:
        pixels = cm.read_png(indir / rec["file"])
        ds.items.append(cm.TomogramImage(pixels=pixels, colormap=cid,
                                         v_max=rec.get("v_max", 1.0),
                                         grid=grid))
        ds.manifest.append(rec)
    return ds


def cmd_train(args) -> int:
    ds = _load_dataset(args.dataset)
    scale = wgan.Scale(args.scale)
    lipschitz = wgan.GradientPenalty(args.gp) if args.gp is not None \
        else wgan.WeightClip(args.clip)
    tc = wgan.TrainConfig(batch_size=args.batch, lr=args.lr,
                          epochs=args.epochs, lipschitz=lipschitz,
                          seed=_seed_override(args.seed))
    model, log = wgan.train(ds, tc=tc, scale=scale)
    wgan.save_model(model, args.out)
    if args.log:
        log.to_csv(args.log)
    _write_manifest(Path(args.out + ".manifest.json"), {
        "command": "train", "dataset": args.dataset, "scale": scale.value,
        "config": tc.to_json(), "epochs_run": len(log.rows)})
    gap = log.column("duality_gap")
    print(f"trained {args.epochs} epochs; final duality gap {gap[-1]:+.5f}")
    return 0


def cmd_sample(args) -> int:
    model = wgan.load_model(args.model)
    images = wgan.sample(model, args.count, seed=_seed_override(args.seed))
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    items = []
    for i, img in enumerate(images):
        name = f"sample_{i:04d}.png"
        cm.write_png(img, outdir / name)
        items.append({"file": name})
    _write_manifest(outdir / "manifest.json", {
        "command": "sample", "model": args.model,
        "count": args.count, "seed": _seed_override(args.seed),
        "colormap": model.colormap.value, "grid": _grid_json(model.grid),
        "items": items})
    print(f"wrote {len(images)} samples to {outdir}")
    return 0


def cmd_eval(args) -> int:
    glossary = glossary_from_json(args.glossary)
    ds = _load_dataset(args.samples)
    rows = []
    counts: dict[str, int] = {}
    n_match = n_spurious = 0
    for i, img in enumerate(ds.items):
        tomo, foreign = cm.decode_with_flags(img)
        extra = [moments.FLAG_FOREIGN] if foreign else []
        rep = moments.report(tomo, glossary=glossary, extra_flags=extra)
        verdict = classify(rep, glossary, tol=args.tol)
        label = verdict.best.state.label()
        ok = verdict.verdict is Verdict.MATCH
        n_match += ok
        n_spurious += not ok
        counts[label] = counts.get(label, 0) + ok
        rows.append((i, rep.mean_n, rep.var_x, rep.var_p, label,
                     verdict.verdict.value, ";".join(rep.flags)))
    with open(args.out, "w") as fh:
        fh.write("sample_id,mean_n,var_x,var_p,best_state,verdict,flags\n")
        for r in rows:
            fh.write(",".join(str(v) for v in r) + "\n")
    total = len(rows)
    summary = {"samples": total, "fraction_match": n_match / total,
               "fraction_spurious": n_spurious / total,
               "per_class_matches": counts}
    _write_manifest(Path(args.out).with_suffix(".summary.json"), summary)
    print(json.dumps(summary, indent=2))
    return 0


def cmd_lut(args) -> int:
    cm.build_lut(args.colormap).to_csv(args.out)
    print(f"wrote {args.out}")
    return 0


# ---------------------------------------------------------------------------

def build_parser(config_defaults: dict | None = None) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tomoforge",
        description="optical tomogram synthesis, WGAN training and "
                    "moment-based state classification")
    parser.add_argument("--config", help="JSON file with flag defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a tomogram")
    p.add_argument("--state", required=True, help="e.g. fock:2, cs:1.0, pacs:0.5:1")
    p.add_argument("--out", required=True, help="tomogram CSV path")
    p.add_argument("--png")
    p.add_argument("--ppm")
    p.add_argument("--colormap", type=_colormap,
                   default=cm.ColormapId.SEQUENTIAL_LINEAR)
    _add_grid_args(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("moments", help="extract observables from a tomogram")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--tomogram", help="tomogram CSV")
    src.add_argument("--image", help="PNG/PPM raster to decode first")
    p.add_argument("--colormap", type=_colormap,
                   default=cm.ColormapId.SEQUENTIAL_LINEAR)
    p.add_argument("--strict", action="store_true",
                   help="fail on pixels foreign to the colormap")
    p.add_argument("--thetas", help="comma list, e.g. 0,pi/4,pi/2")
    p.add_argument("--regulator", help="x0,L,s")
    p.add_argument("--glossary", help="JSON glossary for spurious flagging")
    p.add_argument("--out", help="write the report as JSON")
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("wdist", help="1-Wasserstein distance between two pdfs")
    p.add_argument("--pdf-a")
    p.add_argument("--pdf-b")
    p.add_argument("--tomogram-a")
    p.add_argument("--tomogram-b")
    p.add_argument("--theta-a", default="0")
    p.add_argument("--theta-b", default="0")
    p.set_defaults(func=cmd_wdist)

    p = sub.add_parser("glossary", help="precompute reference observables")
    p.add_argument("--states", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_glossary)

    p = sub.add_parser("dataset", help="assemble a training dataset")
    p.add_argument("--states", required=True)
    p.add_argument("--noise", help="MODEL:EPS, e.g. b:0.25 or a:0.10")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--colormap", type=_colormap,
                   default=cm.ColormapId.SEQUENTIAL_LINEAR)
    p.add_argument("--outdir", required=True)
    _add_grid_args(p)
    p.set_defaults(func=cmd_dataset)

    p = sub.add_parser("train", help="train the WGAN on a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--scale", choices=[s.value for s in wgan.Scale],
                   default="desk32")
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--batch", type=int, default=16)
    p.add_argument("--lr", type=float, default=3e-4)
    p.add_argument("--clip", type=float, default=0.01)
    p.add_argument("--gp", type=float, default=None,
                   help="use gradient-penalty mode with this coefficient")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--log", help="training log CSV")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sample", help="generate tomogram images from a model")
    p.add_argument("--model", required=True)
    p.add_argument("--count", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("eval", help="decode, measure and classify samples")
    p.add_argument("--samples", required=True, help="directory from `sample`")
    p.add_argument("--glossary", required=True)
    p.add_argument("--tol", type=float, default=0.04)
    p.add_argument("--out", required=True, help="per-sample CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("lut", help="export a colormap lookup table as CSV")
    p.add_argument("--colormap", type=_colormap, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_lut)

    if config_defaults:
        # subcommands parse into a fresh namespace, so the file-supplied
        # defaults have to reach every subparser individually
        for child in sub.choices.values():
            child.set_defaults(**{k: v for k, v in config_defaults.items()
                                  if any(a.dest == k for a in child._actions)})
    return parser


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    defaults = None
    if "--config" in argv:
        cfg_path = argv[argv.index("--config") + 1]
        defaults = {k.replace("-", "_"): v
                    for k, v in json.loads(Path(cfg_path).read_text()).items()}
    parser = build_parser(defaults)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (TomoforgeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
