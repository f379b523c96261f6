"""Command-line front end.

Scenes and chains travel as JSON files; results print as JSON on stdout.
The experiment subcommand exits nonzero when a scenario check fails.
"""

from __future__ import annotations

import argparse
import json
import sys

from .chain import Chain, IntervalRegion
from .flatnorm import flat_norm, mass_minimize
from .harness import run_experiment, scenario_checks
from .lipmap import builtin_map, pushforward_chain
from .simplicial import Complex
from .varifold import Varifold, default_dictionary, var_of_chain, var_weak_distance


def _load_scene(path) -> Complex:
    with open(path) as fh:
        return Complex.from_json(json.load(fh))


def _load_chain(scene: Complex, path) -> Chain:
    with open(path) as fh:
        return Chain.from_json(scene, json.load(fh))


def _emit(payload, path=None):
    text = json.dumps(payload, indent=2, sort_keys=True)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _dictionary(name):
    if name != "default":
        raise SystemExit(f"unknown test dictionary {name!r}; only 'default' "
                         "is registered")
    return default_dictionary()


def _parse_ms(text):
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(t) for t in text.split(",")]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="flatvar",
        description="flat chains, simplicial flat norms, and varifold experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("subdivide", help="standard subdivision of a scene")
    p.add_argument("--scene", required=True)
    p.add_argument("--levels", type=int, default=1)
    p.add_argument("--out")

    p = sub.add_parser("mass", help="mass of a chain")
    p.add_argument("--scene", required=True)
    p.add_argument("--chain", required=True)

    p = sub.add_parser("boundary", help="boundary of a chain")
    p.add_argument("--scene", required=True)
    p.add_argument("--chain", required=True)
    p.add_argument("--out")

    p = sub.add_parser("restrict", help="restrict a chain to open boxes")
    p.add_argument("--scene", required=True)
    p.add_argument("--chain", required=True)
    p.add_argument("--box", required=True,
                   help="per-axis 'lo,hi' joined by ';', boxes joined by '|'")
    p.add_argument("--depth", type=int, default=6)

    p = sub.add_parser("flatnorm", help="flat norm with decomposition")
    p.add_argument("--scene", required=True)
    p.add_argument("--chain", required=True)
    p.add_argument("--method", choices=["auto", "lp", "brute"], default="auto")

    p = sub.add_parser("massmin", help="minimal mass chain with given boundary")
    p.add_argument("--scene", required=True)
    p.add_argument("--boundary", required=True)
    p.add_argument("--method", choices=["auto", "lp", "brute"], default="auto")

    p = sub.add_parser("pushforward", help="push a chain through a map")
    p.add_argument("--map", required=True, dest="map_spec")
    p.add_argument("--scene", required=True)
    p.add_argument("--chain", required=True)
    p.add_argument("--depth", type=int, default=0)
    p.add_argument("--out")

    p = sub.add_parser("varify", help="varifold of a chain")
    p.add_argument("--scene", required=True)
    p.add_argument("--chain", required=True)
    p.add_argument("--depth", type=int, default=0)
    p.add_argument("--out")

    p = sub.add_parser("vardist", help="weak distance between varifolds")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--dict", default="default", dest="dictionary")

    p = sub.add_parser("experiment", help="run a convergence scenario")
    p.add_argument("--config", default=None,
                   help="JSON file mirroring the flags; explicit flags win")
    p.add_argument("--scenario", default=None,
                   choices=["annulus", "rectangle", "circle", "square"])
    p.add_argument("--m", default=None, help="range '2..10' or list '2,4,8'")
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--dict", default=None, dest="dictionary")
    p.add_argument("--resolution", type=int, default=None,
                   help="annulus arc segments per radian")
    p.add_argument("--ref-level", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--plot", default=None)

    args = parser.parse_args(argv)
    cmd = args.command

    if cmd == "subdivide":
        scene = _load_scene(args.scene)
        _emit(scene.refine(args.levels).to_json(), args.out)
        return 0

    if cmd == "mass":
        scene = _load_scene(args.scene)
        chain = _load_chain(scene, args.chain)
        _emit({"mass": chain.mass()})
        return 0

    if cmd == "boundary":
        scene = _load_scene(args.scene)
        chain = _load_chain(scene, args.chain)
        _emit(chain.boundary().to_json(), args.out)
        return 0

    if cmd == "restrict":
        scene = _load_scene(args.scene)
        chain = _load_chain(scene, args.chain)
        region = IntervalRegion.from_string(args.box)
        restricted = chain.restrict(region, args.depth)
        _emit({"scene": restricted.complex.to_json(),
               "chain": restricted.to_json(),
               "mass": restricted.mass()})
        return 0

    if cmd == "flatnorm":
        scene = _load_scene(args.scene)
        chain = _load_chain(scene, args.chain)
        value, decomp, rep = flat_norm(chain, args.method)
        _emit({"value": value, "Q": decomp.q.to_json(), "R": decomp.r.to_json(),
               "report": rep.to_json()})
        return 0

    if cmd == "massmin":
        scene = _load_scene(args.scene)
        t = _load_chain(scene, args.boundary)
        s, rep = mass_minimize(t, "brute" if args.method == "brute" else "auto")
        _emit({"chain": s.to_json(), "mass": s.mass(), "report": rep.to_json()})
        return 0

    if cmd == "pushforward":
        scene = _load_scene(args.scene)
        chain = _load_chain(scene, args.chain)
        image = pushforward_chain(builtin_map(args.map_spec), chain, args.depth)
        _emit({"scene": image.complex.to_json(), "chain": image.to_json(),
               "mass": image.mass()}, args.out)
        return 0

    if cmd == "varify":
        scene = _load_scene(args.scene)
        chain = _load_chain(scene, args.chain)
        _emit(var_of_chain(chain, args.depth).to_json(), args.out)
        return 0

    if cmd == "vardist":
        with open(args.a) as fh:
            va = Varifold.from_json(json.load(fh))
        with open(args.b) as fh:
            vb = Varifold.from_json(json.load(fh))
        _emit({"distance": var_weak_distance(va, vb,
                                             _dictionary(args.dictionary))})
        return 0

    if cmd == "experiment":
        settings = {"scenario": None, "m": None, "depth": 2,
                    "dict": "default", "resolution": 64, "ref_level": None,
                    "out": None, "plot": None}
        if args.config:
            with open(args.config) as fh:
                loaded = json.load(fh)
            unknown = set(loaded) - set(settings)
            if unknown:
                parser.error(f"unknown config keys: {sorted(unknown)}")
            settings.update(loaded)
        for key, flag in [("scenario", args.scenario), ("m", args.m),
                          ("depth", args.depth), ("dict", args.dictionary),
                          ("resolution", args.resolution),
                          ("ref_level", args.ref_level), ("out", args.out),
                          ("plot", args.plot)]:
            if flag is not None:
                settings[key] = flag
        if not settings["scenario"] or not settings["out"]:
            parser.error("experiment needs --scenario and --out "
                         "(flags or config file)")
        config = {}
        if settings["scenario"] == "annulus":
            config["arc_resolution"] = settings["resolution"]
        if settings["ref_level"] is not None:
            config["ref_level"] = settings["ref_level"]
        report = run_experiment(
            settings["scenario"],
            ms=_parse_ms(str(settings["m"])) if settings["m"] else None,
            atom_depth=settings["depth"],
            dictionary=_dictionary(settings["dict"]),
            **config)
        report.save_csv(settings["out"])
        if settings["plot"]:
            report.plot(settings["plot"])
        failures = 0
        for name, ok, detail in scenario_checks(report):
            tag = "pass" if ok else "FAIL"
            print(f"{tag}  {name}" + (f"  [{detail}]" if detail else ""))
            failures += 0 if ok else 1
        return 1 if failures else 0

    parser.error(f"unknown command {cmd}")
    return 2


if __name__ == "__main__":
    sys.exit(main())
