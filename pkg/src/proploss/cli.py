"""Command-line interface.

Output is flat key=value text so scripts and the test suite parse it without
a second grammar. Exit codes: 0 success, 1 domain error (the error class
name goes to stderr), 2 usage error. Files are written only under --out.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import amap as amap_io
from . import engine as _engine
from .autodiff import check_gradient, evaluate_with_gradient
from .compiler import compile_proposition, evaluate
from .errors import DomainError, ManifestError, UnboundPredicate
from .frontend import extract, parse_template
from .guidance import GuidanceConfig, Trajectory, run
from .logic import ordered_predicates, parse_dsl, print_dsl
from .oracle import crisp_oracle
from .stack import SOT_LABEL


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DomainError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        # bad option values (rates, tolerances, step counts)
        print(f"ValueError: {e}", file=sys.stderr)
        return 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="proploss",
        description="Compile logical prompt semantics to attention-map "
                    "losses; evaluate, differentiate, and simulate guidance.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="echo a proposition in canonical form")
    p.add_argument("dsl")
    p.set_defaults(func=_cmd_parse)

    p = sub.add_parser("extract", help="template prompt to proposition")
    p.add_argument("prompt")
    p.add_argument("--class", dest="cls", default=None,
                   help="template class; auto-detected when omitted")
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("compile", help="show a proposition's compiled form")
    p.add_argument("--dsl", required=True)
    _logic_flags(p)
    p.set_defaults(func=_cmd_compile)

    for name, func, extra in (
        ("eval", _cmd_eval, "evaluate degree and loss on a stack"),
        ("grad", _cmd_grad, "loss gradient w.r.t. a stack"),
        ("oracle", _cmd_oracle, "classical truth on a crisp stack"),
    ):
        p = sub.add_parser(name, help=extra)
        p.add_argument("--map", required=True, help="AMAP file")
        p.add_argument("--dsl", required=True)
        _logic_flags(p)
        p.set_defaults(func=func)

    p = sub.add_parser("check-grad",
                       help="compare the gradient against finite differences")
    p.add_argument("--map", required=True)
    p.add_argument("--dsl", required=True)
    p.add_argument("--step", type=float, default=1e-5,
                   help="finite-difference step h")
    p.add_argument("--tol", type=float, default=1e-4)
    _logic_flags(p)
    p.set_defaults(func=_cmd_check_grad)

    p = sub.add_parser("simulate", help="run the guidance simulator")
    p.add_argument("--dsl")
    p.add_argument("--width", type=int, default=16)
    p.add_argument("--height", type=int, default=16)
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--guided-steps", type=int, default=25)
    p.add_argument("--refine", type=int, default=4)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init-scale", type=float, default=1.0)
    p.add_argument("--out", default=None,
                   help="directory for trajectory/map/manifest files")
    p.add_argument("--manifest", default=None,
                   help="replay a previous run from its manifest")
    _logic_flags(p)
    p.set_defaults(func=_cmd_simulate)
    return parser


def _logic_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--semantics", choices=("product", "goedel"),
                   default="product")
    p.add_argument("--reduction", choices=("paper", "scaled"),
                   default="scaled")
    p.add_argument("--alpha", type=float, default=0.3)
    p.add_argument("--epsilon", type=float, default=1e-8)
    p.add_argument("--engine", choices=_engine.available_engines(),
                   default=None)


def _compile_from_args(args, binding):
    return compile_proposition(
        parse_dsl(args.dsl),
        binding,
        backend=args.semantics,
        reduction=args.reduction,
        alpha=args.alpha,
        epsilon=args.epsilon,
    )


def _stack_binding(prop, stack):
    """Match predicate names to stack labels, case-insensitively."""
    binding = {}
    lowered = {}
    for label in stack.tokens[1:]:
        lowered.setdefault(label.lower(), []).append(label)
    for pred in ordered_predicates(prop):
        labels = lowered.get(pred.lower(), [])
        if not labels:
            raise UnboundPredicate(
                f"no stack channel matches predicate {pred}")
        if len(labels) > 1:
            raise UnboundPredicate(
                f"predicate {pred} matches several channels: "
                + " ".join(labels))
        binding[pred] = labels[0]
    return binding


def _cmd_parse(args) -> int:
    print(print_dsl(parse_dsl(args.dsl)))
    return 0


def _cmd_extract(args) -> int:
    template = parse_template(args.prompt, args.cls) if args.cls \
        else parse_template(args.prompt)
    prop, binding = extract(args.prompt, args.cls)
    print(f"class={template.cls.value}")
    print(f"dsl={print_dsl(prop)}")
    print(f"tokens={' '.join(binding.tokens)}")
    for pred, idx in binding.index.items():
        print(f"bind.{pred}={binding.tokens[idx]}")
    return 0


def _cmd_compile(args) -> int:
    prop = parse_dsl(args.dsl)
    binding = {p: p.lower() for p in ordered_predicates(prop)}
    graph = compile_proposition(
        prop, binding,
        backend=args.semantics, reduction=args.reduction,
        alpha=args.alpha, epsilon=args.epsilon,
    )
    print(f"backend={graph.backend}")
    print(f"reduction={graph.reduction}")
    print(f"alpha={graph.alpha:.17g}")
    print(f"epsilon={graph.epsilon:.17g}")
    print(f"slots={' '.join(graph.slot_labels)}")
    print(f"normalized={' '.join(sorted(graph.normalization_set))}")
    print(f"instructions={graph.program.n_instr}")
    print(f"loss_instructions={graph.program.n_loss_instr}")
    print(f"conjuncts={len(graph.conjuncts)}")
    for i, c in enumerate(graph.conjuncts):
        print(f"conjunct_{i}={c.text}")
        print(f"weight_{i}={c.weight:.17g}")
    return 0


def _cmd_eval(args) -> int:
    stack = amap_io.read_amap(args.map)
    prop = parse_dsl(args.dsl)
    graph = _compile_from_args(args, _stack_binding(prop, stack))
    degree, loss = evaluate(graph, stack, engine=args.engine)
    print(f"degree={degree:.9f}")
    print(f"loss={loss:.9f}")
    return 0


def _cmd_grad(args) -> int:
    stack = amap_io.read_amap(args.map)
    prop = parse_dsl(args.dsl)
    graph = _compile_from_args(args, _stack_binding(prop, stack))
    degree, loss, field = evaluate_with_gradient(
        graph, stack, engine=args.engine)
    print(f"degree={degree:.9f}")
    print(f"loss={loss:.9f}")
    for k, label in enumerate(stack.tokens):
        for y in range(stack.height):
            row = " ".join(f"{v:.9g}" for v in field[k, y])
            print(f"grad.{label}.row{y}={row}")
    return 0


def _cmd_oracle(args) -> int:
    stack = amap_io.read_amap(args.map)
    prop = parse_dsl(args.dsl)
    result = crisp_oracle(prop, stack, _stack_binding(prop, stack))
    print(f"result={'true' if result else 'false'}")
    return 0


def _cmd_check_grad(args) -> int:
    stack = amap_io.read_amap(args.map)
    prop = parse_dsl(args.dsl)
    graph = _compile_from_args(args, _stack_binding(prop, stack))
    report = check_gradient(
        graph, stack, h=args.step, tol=args.tol, engine=args.engine)
    print(f"max_rel_error={report.max_rel_error:.6e}")
    print(f"passed={'true' if report.passed else 'false'}")
    if report.worst is not None:
        print(f"worst={report.worst[0]}:{report.worst[1]}")
    print(f"n_checked={report.n_checked}")
    return 0


def _cmd_simulate(args) -> int:
    if args.manifest:
        prop, binding, cfg, width, height, epsilon, norm_imp, want_engine = \
            _load_manifest(args.manifest)
        if want_engine and args.engine is None \
                and want_engine != _engine.current_engine():
            print(
                f"warning: manifest was produced by the {want_engine!r} "
                f"engine; running on {_engine.current_engine()!r}",
                file=sys.stderr)
    else:
        if not args.dsl:
            print("simulate: --dsl is required without --manifest",
                  file=sys.stderr)
            return 2
        prop = parse_dsl(args.dsl)
        binding = {p: p.lower() for p in ordered_predicates(prop)}
        cfg = GuidanceConfig(
            total_steps=args.steps,
            guided_steps=args.guided_steps,
            refinement_rounds=args.refine,
            learning_rate=args.lr,
            noise_scale=args.noise,
            seed=args.seed,
            init_scale=args.init_scale,
            backend=args.semantics,
            reduction=args.reduction,
            alpha=args.alpha,
        )
        width, height = args.width, args.height
        epsilon, norm_imp = args.epsilon, True
    graph = compile_proposition(
        prop, binding,
        backend=cfg.backend, reduction=cfg.reduction, alpha=cfg.alpha,
        epsilon=epsilon, normalize_implications=norm_imp,
    )
    shape = (1 + len(graph.slot_labels), width, height)
    trajectory = run(cfg, graph, shape, engine=args.engine)
    print(f"final_degree={trajectory.records[-1].degree:.9f}")
    print(f"final_loss={trajectory.records[-1].loss:.9f}")
    print(f"records={len(trajectory.records)}")
    print(f"engine={trajectory.metadata['engine']}")
    if args.out:
        _write_outputs(args.out, trajectory, graph, width, height)
        print(f"out={args.out}")
    return 0


_MANIFEST_KEYS = (
    "version", "dsl", "width", "height", "total_steps", "guided_steps",
    "refinement_rounds", "learning_rate", "noise_scale", "seed",
    "init_scale", "backend", "reduction", "alpha", "epsilon",
    "normalize_implications",
)


def _load_manifest(path):
    entries = amap_io.read_manifest(path)
    missing = [k for k in _MANIFEST_KEYS if k not in entries]
    if missing:
        raise ManifestError(f"manifest lacks keys: {', '.join(missing)}")
    if entries["version"] != "1":
        raise ManifestError(f"unsupported manifest version {entries['version']!r}")
    prop = parse_dsl(entries["dsl"])
    binding = {k[len("bind."):]: v for k, v in entries.items()
               if k.startswith("bind.")}
    if not binding:
        raise ManifestError("manifest has no bind.* entries")
    try:
        cfg = GuidanceConfig(
            total_steps=int(entries["total_steps"]),
            guided_steps=int(entries["guided_steps"]),
            refinement_rounds=int(entries["refinement_rounds"]),
            learning_rate=float(entries["learning_rate"]),
            noise_scale=float(entries["noise_scale"]),
            seed=int(entries["seed"]),
            init_scale=float(entries["init_scale"]),
            backend=entries["backend"],
            reduction=entries["reduction"],
            alpha=float(entries["alpha"]),
        )
        width = int(entries["width"])
        height = int(entries["height"])
        epsilon = float(entries["epsilon"])
    except ValueError as e:
        raise ManifestError(f"bad manifest value: {e}") from None
    norm_imp = entries["normalize_implications"] == "true"
    return (prop, binding, cfg, width, height, epsilon, norm_imp,
            entries.get("engine"))


def _manifest_entries(trajectory: Trajectory, graph, width, height):
    cfg = trajectory.config
    entries = {
        "version": "1",
        "dsl": print_dsl(graph.source),
        "width": str(width),
        "height": str(height),
        "tokens": " ".join(trajectory.tokens),
        "total_steps": str(cfg.total_steps),
        "guided_steps": str(cfg.guided_steps),
        "refinement_rounds": str(cfg.refinement_rounds),
        "learning_rate": f"{cfg.learning_rate:.17g}",
        "noise_scale": f"{cfg.noise_scale:.17g}",
        "seed": str(cfg.seed),
        "init_scale": f"{cfg.init_scale:.17g}",
        "backend": cfg.backend,
        "reduction": cfg.reduction,
        "alpha": f"{cfg.alpha:.17g}",
        "epsilon": f"{graph.epsilon:.17g}",
        "normalize_implications":
            "true" if graph.normalize_implications else "false",
        "engine": trajectory.metadata["engine"],
    }
    for pred, label in graph.binding.items():
        entries[f"bind.{pred}"] = label
    return entries


def _write_outputs(out_dir, trajectory, graph, width, height) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "trajectory.csv"), "w",
              encoding="utf-8") as f:
        f.write(amap_io.format_trajectory_csv(trajectory.records))
    amap_io.write_amap(
        os.path.join(out_dir, "final.amap"), trajectory.final_stack)
    amap_io.write_manifest(
        os.path.join(out_dir, "manifest.txt"),
        _manifest_entries(trajectory, graph, width, height))
    for k, label in enumerate(trajectory.tokens):
        name = "sot" if label == SOT_LABEL else \
            "".join(c for c in label if c.isalnum() or c in "-_")
        amap_io.write_pgm(
            os.path.join(out_dir, f"map_{name}.pgm"),
            trajectory.final_stack.values[k])


if __name__ == "__main__":
    sys.exit(main())
