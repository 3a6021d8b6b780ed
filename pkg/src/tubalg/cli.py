"""``tubalg`` command-line interface.

Exit codes: 0 on success, 1 on I/O or file-format errors, 2 on validation
failures such as an invalid multirank or a singular transform.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from . import __version__
from .algebra import starm
from .dmd import DmdModel, synthetic_trajectory, tdmd_fit, tdmd_predict
from .exceptions import FileFormatError, TubalgError
from .io import (
    load_transform,
    read_tbt,
    read_transform_matrix,
    write_tbt,
    write_transform_csv,
    write_transform_tbt,
)
from .optimality import certify, compare_fixed_rank, compare_gamma
from .tensor import Tensor3, frob_norm
from .transform import Transform, build_transform, crafted_invalid, scaled
from .tsvdm import (
    Energy,
    MultiRank,
    TRank,
    TubalLength,
    gamma_rank,
    implicit_rank,
    multirank,
    resolve_multirank,
    storage_ratio,
    t_rank,
    truncate,
    truncation_error,
    tsvdm,
    tubal_length,
)

SCHEMA = 1


# JSON with fixed 17-significant-digit floats


def _json(obj) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return format(x, ".17g") if math.isfinite(x) else "null"
    if isinstance(obj, (complex, np.complexfloating)):
        return _json({"re": obj.real, "im": obj.imag})
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{_json(str(k))}: {_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_json(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _emit(report: dict, out=None) -> None:
    text = _json({"schema": SCHEMA, **report}) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# Argument helpers


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_rank_options(p, required=False):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--trank", type=int, help="t-rank truncation")
    g.add_argument("--multirank", type=_ints, help="comma-separated multirank, one entry per slice")
    g.add_argument("--length", type=_ints, help="comma-separated tubal-length, one entry per group")
    g.add_argument("--gamma", type=float, help="energy target for tSVDMII")


def _rank_from_args(args):
    if args.trank is not None:
        return TRank(args.trank)
    if args.multirank is not None:
        return MultiRank(args.multirank)
    if args.length is not None:
        return TubalLength(args.length)
    if args.gamma is not None:
        return Energy(args.gamma)
    return None


def _parse_rank(text: str):
    """``full``, ``R`` (t-rank), ``trank:R``, ``multirank:a,b,...``, ``length:a,...`` or ``gamma:g``."""
    if text == "full":
        return None
    if ":" not in text:
        return TRank(int(text))
    kind, val = text.split(":", 1)
    if kind == "trank":
        return TRank(int(val))
    if kind == "multirank":
        return MultiRank(_ints(val))
    if kind == "length":
        return TubalLength(_ints(val))
    if kind == "gamma":
        return Energy(float(val))
    raise ValueError(f"unknown rank spec {text!r}")


def _transform(args) -> Transform:
    return load_transform(args.transform, args.tol)


def _spec_json(spec):
    if spec is None:
        return {"kind": "full"}
    if isinstance(spec, TRank):
        return {"kind": "trank", "value": spec.r}
    if isinstance(spec, MultiRank):
        return {"kind": "multirank", "value": list(spec.r)}
    if isinstance(spec, TubalLength):
        return {"kind": "length", "value": list(spec.lam)}
    return {"kind": "gamma", "value": spec.gamma}


def _cert_json(t: Transform) -> dict:
    c = t.certificate
    v = c.violation
    return {
        "transform_id": t.id,
        "n": t.n,
        "real_ring": t.is_real_ring,
        "valid": c.valid,
        "ell": t.structure.ell,
        "groups": [list(g) for g in t.structure.groups],
        "degrees": list(t.structure.degrees),
        "mu": list(c.mu) if c.valid else None,
        "violation": None if v is None else {"kind": v.kind, "indices": list(v.indices), "gram_value": v.gram_value},
    }


def _rank_report(f, tol):
    return {
        "t_rank": t_rank(f, tol),
        "multirank": list(multirank(f, tol)),
        "implicit_rank": implicit_rank(f, tol),
        "tubal_length": list(tubal_length(f, tol)),
    }


# Subcommands


def cmd_transform_check(args):
    t = _transform(args)
    _emit(_cert_json(t), args.output)


def cmd_mul(args):
    t = _transform(args)
    c = starm(read_tbt(args.a), read_tbt(args.b), t)
    write_tbt(args.output, c)
    _emit({"transform_id": t.id, "dims": list(c.dims), "norm": frob_norm(c)})


def _truncation_report(x, t, spec, tol):
    f = tsvdm(x, t)
    r = resolve_multirank(f, spec if spec is not None else TRank(min(x.dims[:2])))
    approx = truncate(f, MultiRank(r))
    err = frob_norm(x - approx)
    total = float(np.sum(f.s_hat**2))
    kept = sum(float(np.sum(f.s_hat[:rk, k] ** 2)) for k, rk in enumerate(r))
    report = {
        "transform_id": t.id,
        "dims": list(x.dims),
        "rank_spec": _spec_json(spec),
        "ranks": _rank_report(f, tol),
        "truncation_multirank": list(r),
        "error": err,
        "relative_error": err / frob_norm(x) if frob_norm(x) else 0.0,
        "error_formula": math.sqrt(max(truncation_error(f, MultiRank(r)), 0.0)),
        "retained_energy": kept / total if total else 1.0,
        "storage_ratio": storage_ratio(r, x.dims),
    }
    if isinstance(spec, Energy):
        report["r_gamma"] = gamma_rank(f.s_hat, spec.gamma).r_gamma
    return f, approx, report


def cmd_tsvdm(args):
    t = _transform(args)
    x = read_tbt(args.tensor)
    f, approx, report = _truncation_report(x, t, _rank_from_args(args), args.tol)
    if args.output:
        write_tbt(args.output, approx)
    if args.factors:
        d = Path(args.factors)
        d.mkdir(parents=True, exist_ok=True)
        write_tbt(d / "u.tbt", f.u)
        write_tbt(d / "s.tbt", f.s)
        write_tbt(d / "v.tbt", f.v)
    _emit(report, args.report)


def cmd_truncate(args):
    t = _transform(args)
    x = read_tbt(args.tensor)
    _, approx, report = _truncation_report(x, t, _rank_from_args(args), args.tol)
    write_tbt(args.output, approx)
    _emit(report, args.report)


def cmd_tsvdm2(args):
    t = _transform(args)
    x = read_tbt(args.tensor)
    _, approx, report = _truncation_report(x, t, Energy(args.gamma), args.tol)
    report["rho"] = report["truncation_multirank"]
    if args.output:
        write_tbt(args.output, approx)
    _emit(report, args.report)


def cmd_certify(args):
    t = load_transform(args.transform, args.tol)
    x = read_tbt(args.tensor) if args.tensor else None
    trials = args.trials if args.refute else 0
    rep = certify(t, x=x, trials=trials, seed=args.seed, lam=args.length)
    out = _cert_json(t)
    out.update({"verdict": rep.verdict, "trials": rep.trials, "max_violation": rep.max_violation})
    w = rep.witness
    if w is not None:
        out["witness"] = {
            "gap": w.gap,
            "target_length": list(w.target),
            "err_truncation": w.err_truncation,
            "err_better": w.err_better,
            "group": w.group,
            "indices": None if w.indices is None else list(w.indices),
            "gram": w.gram,
            "S": w.S,
            "alpha": w.alpha,
            "a_scale": w.a_scale,
            "ratio": w.ratio,
            "expected_ratio": w.expected_ratio,
            "trial": w.trial,
        }
        if args.witness_dir:
            d = Path(args.witness_dir)
            d.mkdir(parents=True, exist_ok=True)
            write_tbt(d / "x.tbt", w.x)
            write_tbt(d / "better.tbt", w.better)
    _emit(out, args.report)


def cmd_compare(args):
    q = _transform(args)
    dq = scaled(q, args.weights)
    x = read_tbt(args.tensor)
    spec = _rank_from_args(args)
    if isinstance(spec, Energy):
        c = compare_gamma(x, q, dq, spec.gamma)
        body = {"gamma": spec.gamma, "r_gamma_q": c.r_gamma_q, "r_gamma_dq": c.r_gamma_dq,
                "holds": c.holds, "r_gamma_dq_retained": c.r_gamma_dq_retained}
    else:
        c = compare_fixed_rank(x, q, dq, spec)
        body = {"rank_spec": _spec_json(spec), "err_q": c.err_q, "err_dq": c.err_dq, "trunc_diff": c.trunc_diff,
                "relative_trunc_diff": c.trunc_diff / frob_norm(x) if frob_norm(x) else 0.0}
    _emit({"q": q.id, "dq": dq.id, "weights": list(args.weights), **body}, args.report)


def cmd_dmd_fit(args):
    t = _transform(args)
    x = read_tbt(args.tensor)
    model = tdmd_fit(x, t, _parse_rank(args.rank))
    d = Path(args.output)
    d.mkdir(parents=True, exist_ok=True)
    write_tbt(d / "z.tbt", model.z_modes, force_complex=True)
    write_tbt(d / "t.tbt", model.t_upper, force_complex=True)
    write_transform_tbt(d / "transform.tbt", t.matrix)
    meta = {"transform_id": t.id, "rank_used": list(model.rank_used), "fit_error": model.fit_error,
            "eigenvalues": [[complex(v) for v in row] for row in model.eigenvalues.T]}
    _emit(meta, d / "model.json")
    _emit(meta)


def _load_model(path) -> DmdModel:
    d = Path(path)
    meta = json.loads((d / "model.json").read_text())
    t = build_transform(read_transform_matrix(d / "transform.tbt"), name=meta["transform_id"])
    return DmdModel.from_spatial(t, read_tbt(d / "z.tbt"), read_tbt(d / "t.tbt"), meta["rank_used"], meta["fit_error"])


def cmd_dmd_predict(args):
    model = _load_model(args.model)
    x0 = read_tbt(args.x0)
    pred = tdmd_predict(model, x0, args.steps)
    write_tbt(args.output, pred)
    _emit({"transform_id": model.transform_id, "steps": args.steps, "dims": list(pred.dims),
           "norms": [float(np.linalg.norm(pred.values[:, k, :])) for k in range(args.steps)]})


def cmd_gen_random(args):
    rng = np.random.default_rng(args.seed)
    x = Tensor3(rng.standard_normal(args.dims))
    write_tbt(args.output, x)
    _emit({"dims": list(x.dims), "seed": args.seed})


def cmd_gen_trajectory(args):
    t = _transform(args)
    x, _ = synthetic_trajectory(args.m, args.p, t, args.rank, seed=args.seed)
    write_tbt(args.output, x)
    _emit({"transform_id": t.id, "dims": list(x.dims), "rank": args.rank, "seed": args.seed})


def cmd_gen_invalid(args):
    t = crafted_invalid(args.n, args.kind, args.seed)
    if str(args.output).endswith(".tbt"):
        write_transform_tbt(args.output, t.matrix)
    else:
        write_transform_csv(args.output, t.matrix)
    _emit(_cert_json(t))


# Parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed (default 0)")
    common.add_argument("--tol", type=float, default=argparse.SUPPRESS, help="relative tolerance (default 1e-10)")

    p = argparse.ArgumentParser(prog="tubalg", description="Tubal tensor algebra under invertible transforms.",
                                parents=[common])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(parent, name, func, help_):
        sp = parent.add_parser(name, help=help_, parents=[common])
        sp.set_defaults(func=func)
        return sp

    tr = sub.add_parser("transform", help="transform utilities")
    trs = tr.add_subparsers(dest="transform_command", required=True)
    sp = add(trs, "check", cmd_transform_check, "validate a transform and print its certificate")
    sp.add_argument("transform", help="CSV, TBT1 or builtin:KIND:N")
    sp.add_argument("-o", "--output", help="write the JSON report here")

    sp = add(sub, "mul", cmd_mul, "star-M product of two tensors")
    sp.add_argument("a")
    sp.add_argument("b")
    sp.add_argument("--transform", required=True)
    sp.add_argument("-o", "--output", required=True)

    for name, func, req, text in (("tsvdm", cmd_tsvdm, False, "factorise, optionally truncating"),
                                  ("truncate", cmd_truncate, True, "truncate to a rank specification")):
        sp = add(sub, name, func, text)
        sp.add_argument("tensor")
        sp.add_argument("--transform", required=True)
        _add_rank_options(sp, required=req)
        sp.add_argument("-o", "--output", required=(name == "truncate"), help="approximation (TBT1)")
        sp.add_argument("--report", help="write the JSON report to a file instead of stdout")
        if name == "tsvdm":
            sp.add_argument("--factors", help="directory for u.tbt, s.tbt, v.tbt")

    sp = add(sub, "tsvdm2", cmd_tsvdm2, "energy-adaptive truncation")
    sp.add_argument("tensor")
    sp.add_argument("--transform", required=True)
    sp.add_argument("--gamma", type=float, required=True)
    sp.add_argument("-o", "--output")
    sp.add_argument("--report")

    sp = add(sub, "certify", cmd_certify, "Eckart-Young certificate, optionally with random refutation")
    sp.add_argument("transform")
    sp.add_argument("--refute", action="store_true")
    sp.add_argument("--tensor")
    sp.add_argument("--trials", type=int, default=10_000)
    sp.add_argument("--length", type=_ints, help="target tubal-length for the random search")
    sp.add_argument("--witness-dir")
    sp.add_argument("--report")

    sp = add(sub, "compare", cmd_compare, "compare truncations under Q and D*Q")
    sp.add_argument("tensor")
    sp.add_argument("--transform", required=True, help="the unscaled transform Q")
    sp.add_argument("--weights", type=_floats, required=True, help="one positive weight per group")
    _add_rank_options(sp, required=True)
    sp.add_argument("--report")

    dmd = sub.add_parser("dmd", help="tubal dynamic mode decomposition")
    dsub = dmd.add_subparsers(dest="dmd_command", required=True)
    sp = add(dsub, "fit", cmd_dmd_fit, "fit a model to snapshot data")
    sp.add_argument("tensor")
    sp.add_argument("--transform", required=True)
    sp.add_argument("--rank", default="full", help="full, R, trank:R, multirank:..., length:... or gamma:g")
    sp.add_argument("-o", "--output", required=True, help="model directory")
    sp = add(dsub, "predict", cmd_dmd_predict, "forecast from an initial snapshot")
    sp.add_argument("model")
    sp.add_argument("x0")
    sp.add_argument("--steps", type=int, required=True)
    sp.add_argument("-o", "--output", required=True)

    gen = sub.add_parser("gen", help="synthetic data")
    gsub = gen.add_subparsers(dest="gen_command", required=True)
    sp = add(gsub, "random", cmd_gen_random, "Gaussian random tensor")
    sp.add_argument("--dims", type=_ints, required=True, help="m,p,n")
    sp.add_argument("-o", "--output", required=True)
    sp = add(gsub, "trajectory", cmd_gen_trajectory, "tubal-linear snapshot trajectory")
    sp.add_argument("--transform", required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--rank", type=int, required=True)
    sp.add_argument("-o", "--output", required=True)
    sp = add(gsub, "invalid", cmd_gen_invalid, "transform violating the Eckart-Young condition")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--kind", choices=["real", "imag", "cross"], required=True)
    sp.add_argument("-o", "--output", required=True)
    return p


def _thread_limit():
    env = os.environ.get("TUBALG_THREADS")
    if not env:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=max(1, int(env)))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.seed = getattr(args, "seed", 0)
    args.tol = getattr(args, "tol", 1e-10)
    try:
        with _thread_limit():
            args.func(args)
    except (FileFormatError, OSError) as exc:
        print(f"tubalg: error: {exc}", file=sys.stderr)
        return 1
    except (TubalgError, ValueError) as exc:
        print(f"tubalg: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
