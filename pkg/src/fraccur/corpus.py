"""Built-in test corpus: sets, regions, chains and function specs as JSON files."""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np

FUNCTION_SPECS = [
    "weierstrass:a=0.6,terms=20",
    "weierstrass:a=0.8,terms=20",
    "takagi:terms=16",
    "fbm:h=0.7,seed=42",
    "weierstrass2d:a=0.8,amp=0.1",
    "zsquare",
]

CHAIN_SPECS = ["unit:1", "unit:2", "boundary:unit:2", "points:0,3", "points:0,40"]


def _objects() -> list[tuple[str, callable]]:
    from . import fractal
    from .cli import resolve_chain
    from .holder import parse_function

    objs = []
    for n in range(8):
        objs.append((f"koch_{n}", lambda n=n: {"kind": "koch", "level": n,
                                                "points": _polyline(fractal.koch_curve(n))}))
    for n in range(6):
        objs.append((f"snowflake_{n}", lambda n=n: {"kind": "snowflake", "level": n,
                                                    "vertices": fractal.koch_snowflake(n).vertices}))
    objs.append(("disk", lambda: {"kind": "disk", "center": [0.0, 0.0], "r": 1.0}))
    objs.append(("square", lambda: {"kind": "square", "lo": [0.0, 0.0], "hi": [1.0, 1.0]}))
    objs.append(("cantor_4", lambda: {"kind": "cantor", "ratio": 1 / 3, "depth": 4,
                                      "left": fractal.cantor_product(1 / 3, 2, 4).left}))
    for s in range(2):
        objs.append((f"star_{s}", lambda s=s: {"kind": "star", "seed": s,
                                               "vertices": fractal.star_domain(np.random.default_rng(s)).vertices}))
    for spec in CHAIN_SPECS:
        objs.append((f"chain_{spec.replace(':', '_').replace(',', '_')}",
                     lambda spec=spec: {"kind": "chain", "spec": spec, "chain": resolve_chain(spec).to_json_dict()}))
    for i, spec in enumerate(FUNCTION_SPECS):
        def build(spec=spec):
            d = 2 if spec.startswith(("weierstrass2d", "zsquare")) else 1
            f = parse_function(spec, d)
            return {"kind": "function", "spec": spec, "d": f.d, "dout": f.dout, "gamma": f.gamma,
                    "holder_constant": f.holder_constant}
        objs.append((f"function_{i}", build))
    return objs


def _polyline(S) -> np.ndarray:
    return np.vstack([S.a, S.b[-1:]])


def write_corpus(directory, par=None) -> dict[str, str]:
    """Write every object as <name>.json plus index.json (name -> sha256); idempotent."""
    from .cli import dumps

    os.makedirs(directory, exist_ok=True)
    objs = _objects()

    def one(item):
        name, build = item
        text = dumps(build())
        path = os.path.join(directory, name + ".json")
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
        return name, hashlib.sha256(text.encode()).hexdigest()

    pairs = par.map(one, objs) if par is not None else [one(x) for x in objs]
    index = dict(sorted(pairs))
    with open(os.path.join(directory, "index.json"), "w", newline="\n") as fh:
        fh.write(json.dumps(index, sort_keys=True, indent=1) + "\n")
    return index
