"""Command-line interface.

Subcommands: params, design, decode, simulate, waterfall, heatmap,
estimate-d, bounds, verify. A flat key=value config file can seed any flag;
explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import codec, experiments, oracles
from .design import bounds_report, design_point, positivity_probabilities
from .errors import GroupTestError
from .estimate import SimulationPoolTester, estimate_d
from .experiments import ExperimentConfig, TSpec
from .functions import build, parse_family_spec
from .rng import substream
from .svg import heatmap_svg, waterfall_svg


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _print_report(pairs, as_json: bool) -> None:
    if as_json:
        print(json.dumps({k: v for k, v in pairs}, default=_fmt))
    else:
        for key, value in pairs:
            print(f"{key}={_fmt(value)}")


def _parse_t_spec(text: str) -> TSpec:
    """T syntax: "4825" | "22*dlog" | "13:26:1*dlog" | "5*d2log" | "0:5000:500"."""
    base = "explicit"
    if text.endswith("*dlog"):
        base, text = "dlog", text[: -len("*dlog")]
    elif text.endswith("*d2log"):
        base, text = "d2log", text[: -len("*d2log")]
    if ":" in text:
        start, stop, step = (float(v) for v in text.split(":"))
        if base == "explicit":
            return TSpec("range", (start, stop, step))
        count = int(round((stop - start) / step)) + 1
        values = tuple(start + i * step for i in range(count))
        return TSpec(base, values)
    value = float(text)
    if base == "explicit":
        return TSpec("explicit", (value,))
    return TSpec(base, (value,))


def _parse_q(text: str):
    if text in ("auto", "paper", "paper-heuristic"):
        return text
    return float(text)


def _parse_int_list(text: str) -> tuple[int, ...]:
    if ":" in text:
        start, stop, step = (int(v) for v in text.split(":"))
        return tuple(range(start, stop + 1, step))
    return tuple(int(v) for v in text.split(","))


def _load_config_file(path) -> dict[str, str]:
    values = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _apply_config_file(args: argparse.Namespace) -> argparse.Namespace:
    if not getattr(args, "config", None):
        return args
    overrides = _load_config_file(args.config)
    for key, raw in overrides.items():
        if not hasattr(args, key) or getattr(args, key) is not None:
            continue  # flags win; unknown keys are ignored
        setattr(args, key, raw)
    return args


def cmd_params(args) -> int:
    family = parse_family_spec(args.f)
    f = build(family, args.d)
    eps = args.eps if args.eps is not None else 0.01
    report = bounds_report(f, args.n, eps, resolution=args.resolution)
    if args.q is not None and args.q not in ("auto", "paper", "paper-heuristic"):
        q_hat = float(args.q)
    else:
        q_hat = report.q_hat
    point = design_point(f, q_hat, args.n, eps)
    pairs = [
        ("q_hat", q_hat),
        ("delta", point.delta),
        ("nabla", point.nabla),
        ("p_min", point.p_min),
        ("m", point.m),
        ("s", point.s),
        ("T", int(math.ceil(point.t_of_q))),
        ("H", report.H.H),
        ("L_star", report.H.L_star),
        ("U_star", report.H.U_star),
        ("h", report.h.h),
        ("chi_star", report.h.chi_star),
        ("lower_T", report.lower_T),
        ("tightness_factor", report.tightness_factor),
        ("conjecture_ratio", report.conjecture_ratio),
    ]
    _print_report(pairs, args.json)
    return 0


def cmd_design(args) -> int:
    matrix = codec.generate_matrix(args.n, args.T, args.q, args.seed)
    codec.save_matrix(matrix, args.out)
    print(f"wrote {args.T}x{args.n} matrix to {args.out}")
    return 0


def cmd_decode(args) -> int:
    matrix = codec.load_matrix(args.matrix)
    outcomes = codec.load_outcomes(args.outcomes)
    family = parse_family_spec(args.f)
    f = build(family, args.d)
    result = codec.decode(matrix, outcomes, f, eps=args.eps)
    print("rule_used=" + result.rule_used)
    print("defectives=" + " ".join(str(i) for i in result.estimated_defectives))
    return 0


def _experiment_config(args) -> ExperimentConfig:
    return ExperimentConfig(
        family=parse_family_spec(args.f),
        n=args.n,
        d=args.d,
        t_spec=_parse_t_spec(args.T),
        trials=args.trials if args.trials is not None else 100,
        eps=args.eps if args.eps is not None else 0.01,
        q=_parse_q(args.q) if args.q is not None else "auto",
        master_seed=args.seed if args.seed is not None else 0,
        threads=args.threads if args.threads is not None else 1,
        d_values=_parse_int_list(args.d_values) if getattr(args, "d_values", None) else (),
        n_values=_parse_int_list(args.n_values) if getattr(args, "n_values", None) else (),
        fast_stats=bool(getattr(args, "fast", False)),
    )


def _write_text(path, text: str) -> None:
    with open(path, "w") as fh:
        fh.write(text)


def cmd_simulate(args) -> int:
    record = experiments.run_point(_experiment_config(args))
    csv = experiments.records_to_csv([record])
    if args.out:
        _write_text(args.out, csv)
    print(csv, end="")
    return 0


def cmd_waterfall(args) -> int:
    records = experiments.waterfall(_experiment_config(args))
    csv = experiments.records_to_csv(records)
    if args.out:
        _write_text(args.out, csv)
    if args.svg:
        _write_text(args.svg, waterfall_svg(records, title=f"waterfall {args.f}"))
    print(csv, end="")
    crossing = experiments.first_crossing(records)
    if crossing is not None:
        print(f"# first sweep value reaching {experiments.SUCCESS_TARGET}: "
              f"{crossing.sweep_value:.6f} (T={crossing.T})", file=sys.stderr)
    return 0


def cmd_heatmap(args) -> int:
    config = _experiment_config(args)
    columns = experiments.heatmap(config)
    sweep_name = "d" if config.d_values else "n"
    csv = experiments.heatmap_to_csv(columns, sweep_name)
    if args.out:
        _write_text(args.out, csv)
    if args.red_dots:
        _write_text(args.red_dots, experiments.red_dots_to_csv(columns, sweep_name))
    if args.svg:
        _write_text(args.svg, heatmap_svg(columns, title=f"heatmap {args.f}",
                                          x_label=sweep_name))
    print(csv, end="")
    return 0


def cmd_estimate_d(args) -> int:
    family = parse_family_spec(args.f)
    truth = build(family, args.true_d)
    gen = substream(args.seed, 0)
    defectives = gen.choice(args.n, size=args.true_d, replace=False)
    tester = SimulationPoolTester(args.n, defectives, truth, seed=args.seed)
    result = estimate_d(tester, family, args.n, args.eps)
    print(f"{result.d_estimate} {result.stages} {result.tests_used}")
    return 0


def cmd_bounds(args) -> int:
    family = parse_family_spec(args.f)
    f = build(family, args.d)
    eps = args.eps if args.eps is not None else 0.01
    report = bounds_report(f, args.n, eps, resolution=args.resolution)
    pairs = [
        ("lower_T", report.lower_T),
        ("upper_T", report.upper_T),
        ("q_hat", report.q_hat),
        ("H", report.H.H),
        ("h", report.h.h),
        ("chi_star", report.h.chi_star),
        ("tightness_factor", report.tightness_factor),
        ("conjecture_ratio", report.conjecture_ratio),
    ]
    _print_report(pairs, args.json)
    return 0


def _verify_lemma1(seed: int) -> str | None:
    from .functions import TestFunction

    gen = substream(seed)
    for rep in range(100):
        d = int(gen.integers(1, 65))
        values = np.sort(gen.random(d + 1))
        if values[0] == values[-1]:
            continue
        tf = TestFunction(d=d, values=values)
        for q in np.linspace(0.01, 0.99, 25):
            p = design_point(tf, float(q), n=max(2 * d, 10), eps=0.1)
            chain = tf.fd >= p.p_plus > p.p_minus == p.q_minus > p.q_plus >= tf.f0
            ident = abs(p.nabla - q / (1 - q) * p.delta) <= 1e-12 * p.nabla
            pmin_ok = 1.0 >= p.p_min >= max(p.delta, p.nabla)
            if not (chain and ident and pmin_ok):
                return f"rep={rep} d={d} q={q}"
    return None


def _verify_hypergeom(seed: int) -> str | None:
    from .numerics import hypergeom_log_pmf, hypergeom_support

    gen = substream(seed)
    for rep in range(50):
        n = int(gen.integers(10, 2001))
        d = int(gen.integers(1, min(n - 1, 200) + 1))
        chi = int(gen.integers(1, n))
        lo, hi = hypergeom_support(n, d, chi)
        a = np.arange(lo, hi + 1)
        w = np.exp(hypergeom_log_pmf(n, d, chi, a))
        total = w.sum()
        mean = float(w @ a)
        var = float(w @ (a - mean) ** 2)
        mean_ref = chi * d / n
        var_ref = chi * (d / n) * ((n - d) / n) * ((n - chi) / max(n - 1, 1))
        if abs(total - 1.0) > 1e-10:
            return f"pmf sum n={n} d={d} chi={chi}: {total}"
        if abs(mean - mean_ref) > 1e-9 * max(mean_ref, 1e-30):
            return f"mean n={n} d={d} chi={chi}"
        if abs(var - var_ref) > 1e-9 * max(var_ref, 1e-30):
            return f"variance n={n} d={d} chi={chi}"
    return None


def _verify_micro(seed: int) -> str | None:
    import itertools

    gen = substream(seed)
    for rep in range(20):
        n = int(gen.integers(3, 9))
        d = int(gen.integers(1, 3))
        T = int(gen.integers(1, 7))
        q = float(gen.uniform(0.15, 0.85))
        values = np.sort(gen.random(d + 1))
        if values[0] == values[-1]:
            continue
        from .functions import TestFunction

        f = TestFunction(d=d, values=values)
        matrix = codec.generate_matrix(n, T, q, seed=seed + rep)
        for bits_tuple in itertools.product((0, 1), repeat=T):
            bits = np.array(bits_tuple, dtype=bool)
            ref = oracles.reference_decode(matrix, bits, f)
            got = codec.decode(matrix, codec.Outcomes(bits=bits, seed=0), f)
            if set(got.estimated_defectives.tolist()) != ref:
                return f"rep={rep} bits={bits_tuple}"
    return None


def _verify_mc(seed: int) -> str | None:
    from .functions import linear

    f = build(linear(), 10)
    q = 0.5
    p_minus, p_plus, q_minus, q_plus = positivity_probabilities(f, q)
    targets = {
        "item_in_defective": p_plus,
        "item_in_nondefective": p_minus,
        "item_out_defective": q_plus,
        "item_out_nondefective": q_minus,
    }
    for condition, target in targets.items():
        rate, stderr = oracles.empirical_positivity(f, q, condition, 100_000, seed)
        if abs(rate - target) > 4 * stderr:
            return f"{condition}: rate={rate} target={target} stderr={stderr}"
    return None


def cmd_verify(args) -> int:
    suites = {
        "lemma1": _verify_lemma1,
        "hypergeom": _verify_hypergeom,
        "micro": _verify_micro,
        "mc": _verify_mc,
    }
    failure = suites[args.suite](args.seed)
    if failure is None:
        print(f"{args.suite}: ok")
        return 0
    print(f"{args.suite}: FAIL {failure}")
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="grouptest",
                                     description="generalized group testing")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, *, need_d=True):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--f", required=True, help="test-function spec")
        p.add_argument("--n", type=int, required=True)
        if need_d:
            p.add_argument("--d", type=int, required=True)
        p.add_argument("--eps", type=float, default=None)

    p = sub.add_parser("params", help="design-parameter report")
    add_common(p)
    p.add_argument("--q", default=None)
    p.add_argument("--resolution", type=int, default=100_000)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("design", help="write a Bernoulli test matrix")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("decode", help="decode recorded outcomes")
    p.add_argument("--matrix", required=True)
    p.add_argument("--outcomes", required=True)
    p.add_argument("--f", required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--eps", type=float, default=0.01)
    p.set_defaults(func=cmd_decode)

    def add_experiment(p):
        add_common(p)
        p.add_argument("--T", required=True, help='e.g. "4825", "22*dlog", "13:26:1*dlog"')
        p.add_argument("--q", default=None, help='"auto", "paper", or a probability')
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--fast", action="store_true",
                       help="sufficient-statistic trials (distribution-identical)")
        p.add_argument("--out", help="CSV output path")

    p = sub.add_parser("simulate", help="success rate at a single point")
    add_experiment(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("waterfall", help="success rate over a T sweep")
    add_experiment(p)
    p.add_argument("--svg", help="SVG output path")
    p.set_defaults(func=cmd_waterfall)

    p = sub.add_parser("heatmap", help="success rate over d or n columns")
    add_experiment(p)
    p.add_argument("--d-values", dest="d_values", help='"20:60:10" or "20,30,40"')
    p.add_argument("--n-values", dest="n_values", help='"2000:6000:1000"')
    p.add_argument("--red-dots", dest="red_dots", help="CSV path for column minima")
    p.add_argument("--svg", help="SVG output path")
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("estimate-d", help="adaptive exact defective-count estimation")
    p.add_argument("--f", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--true-d", dest="true_d", type=int, required=True)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_estimate_d)

    p = sub.add_parser("bounds", help="lower/upper test counts and diagnostics")
    add_common(p)
    p.add_argument("--resolution", type=int, default=100_000)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("verify", help="independent verification suites")
    p.add_argument("--suite", required=True,
                   choices=["lemma1", "hypergeom", "micro", "mc"])
    p.add_argument("--seed", type=int, default=12345)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args = _apply_config_file(args)
    # config-file values arrive as strings; coerce the common numeric fields
    for key in ("n", "d", "trials", "seed", "threads", "true_d", "resolution"):
        if hasattr(args, key) and isinstance(getattr(args, key), str):
            setattr(args, key, int(getattr(args, key)))
    if hasattr(args, "eps") and isinstance(args.eps, str):
        args.eps = float(args.eps)
    try:
        return args.func(args)
    except GroupTestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
