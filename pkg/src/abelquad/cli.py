"""Command-line front end: ``abelquad {verify,quartic,report}``.

Exit codes: 0 on success (verdict true), 1 on a negative verdict or a branch
tear, 2 on malformed input or any other error.  Reports are JSON with floats
printed to 12 significant digits so identical runs give identical bytes.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .abel_jacobi import verify_abel
from .errors import AbelQuadError, BranchTear
from .mesh_core import Divisor, divisor_of_quad_mesh, gauss_bonnet_report, load_mesh
from .quartic import (conformal_flatten, export_obj_with_uv, integrate_fourth_root,
                      load_singularities, singular_cut_graph)

log = logging.getLogger("abelquad")

EXIT_OK, EXIT_FALSE, EXIT_ERROR = 0, 1, 2


class UsageError(Exception):
    pass


# -- JSON -------------------------------------------------------------------------

def _canon(obj):
    if isinstance(obj, dict):
        return {str(k): _canon(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canon(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        x = float(f"{x:.12g}")
        return 0.0 if x == 0 else x
    if isinstance(obj, (complex, np.complexfloating)):
        return [_canon(obj.real), _canon(obj.imag)]
    if isinstance(obj, np.ndarray):
        return _canon(obj.tolist())
    return obj


def dumps(obj):
    return json.dumps(_canon(obj), indent=2) + "\n"


def _emit(payload, out):
    text = dumps(payload)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# -- commands ---------------------------------------------------------------------

def _check_tolerance(tol):
    if not 0 < tol < 0.5:
        raise UsageError(f"--tolerance must lie in (0, 0.5), got {tol}")


def load_divisor(arg):
    """Divisor from a JSON file, an inline JSON object or inline ``[[vertex, order], ...]``."""
    text = arg.strip()
    if text[:1] not in "[{":
        return Divisor.from_json(arg)
    data = json.loads(text)
    if isinstance(data, list):
        return Divisor([(int(v), int(n)) for v, n in data])
    return Divisor.from_json(data)


def verify_file(path, divisor=None, tolerance=1e-3, omega_index=0):
    """Run the quadrangulation test on one mesh; returns ``(exit_code, payload)``."""
    try:
        _check_tolerance(tolerance)
        mesh = load_mesh(path)
        if divisor is not None:
            D = load_divisor(divisor)
        elif mesh.is_quad:
            D = None
        else:
            raise UsageError("triangle meshes need an explicit --divisor")
        if mesh.genus > 0 and not 0 <= omega_index < mesh.genus:
            raise UsageError(f"--omega-index must lie in [0, {mesh.genus})")
        rep = verify_abel(mesh, D, tolerance=tolerance, omega_index=omega_index)
    except (AbelQuadError, UsageError, OSError, ValueError, KeyError) as exc:
        return EXIT_ERROR, {"file": str(path), "error": f"{type(exc).__name__}: {exc}"}
    payload = {"file": str(path), **rep.to_json()}
    return (EXIT_OK if rep.verdict else EXIT_FALSE), payload


def _verify_job(args):
    return verify_file(*args)


def cmd_verify(ns):
    if ns.batch:
        files = sorted(Path(ns.batch).glob("*.obj"))
        if not files:
            print(f"error: no .obj files in {ns.batch}", file=sys.stderr)
            return EXIT_ERROR
        jobs = [(str(f), ns.divisor, ns.tolerance, ns.omega_index) for f in files]
        workers = min(len(jobs), os.cpu_count() or 1)
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_verify_job, jobs))
        else:
            results = [_verify_job(j) for j in jobs]
        codes = [c for c, _ in results]
        _emit({"results": [p for _, p in results]}, ns.out)
        return EXIT_ERROR if EXIT_ERROR in codes else max(codes)
    if not ns.mesh:
        print("error: verify needs a mesh path or --batch", file=sys.stderr)
        return EXIT_ERROR
    code, payload = verify_file(ns.mesh, ns.divisor, ns.tolerance, ns.omega_index)
    if code == EXIT_ERROR:
        print(f"error: {payload['error']}", file=sys.stderr)
    _emit(payload, ns.out)
    return code


def cmd_quartic(ns):
    if not ns.singular:
        print("error: quartic needs --singular config.json", file=sys.stderr)
        return EXIT_ERROR
    out = ns.out or str(Path(ns.mesh).with_name(Path(ns.mesh).stem + "_uv.obj"))
    try:
        mesh = load_mesh(ns.mesh)
        chart = conformal_flatten(mesh)
        rq = load_singularities(ns.singular, sphere=chart.domain == "plane")
        cut = singular_cut_graph(chart, rq)
        try:
            atlas = integrate_fourth_root(chart, rq, cut)
        except BranchTear as exc:
            _emit({"file": ns.mesh, "branch_tears": 1, "error": str(exc),
                   "edge": list(exc.edge or ())}, None)
            return EXIT_FALSE
        export_obj_with_uv(mesh, atlas, out, checker_scale=ns.checker_scale)
    except (AbelQuadError, OSError, ValueError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    _emit({"file": ns.mesh, "obj": out, "checker_scale": ns.checker_scale, **atlas.summary()}, None)
    return EXIT_OK


def mesh_report(mesh):
    g = mesh.genus if mesh.is_closed else None
    hist = Counter(int(k) for k in mesh.valences())
    rep = {
        "n_vertices": mesh.n_vertices,
        "n_edges": mesh.n_edges,
        "n_faces": mesh.n_faces,
        "chi": mesh.euler_characteristic,
        "closed": mesh.is_closed,
        "quad": mesh.is_quad,
        "genus": g,
        "valence_histogram": {str(k): hist[k] for k in sorted(hist)},
    }
    if mesh.is_quad and mesh.is_closed:
        D = divisor_of_quad_mesh(mesh)
        rep.update({"divisor": D.to_json(), "divisor_degree": D.degree,
                    "expected_degree": 8 * g - 8, "degree_ok": D.degree == 8 * g - 8,
                    "gauss_bonnet": gauss_bonnet_report(mesh)})
    return rep


def cmd_report(ns):
    try:
        mesh = load_mesh(ns.mesh)
        rep = mesh_report(mesh)
    except (AbelQuadError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    _emit({"file": ns.mesh, **rep}, ns.out)
    return EXIT_OK


# -- entry point ------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="abelquad", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="test whether a quad mesh's divisor passes the Abel condition")
    v.add_argument("mesh", nargs="?")
    v.add_argument("--divisor", help="divisor JSON file or inline [[vertex, order], ...] (required for triangle meshes)")
    v.add_argument("--tolerance", type=float, default=1e-3)
    v.add_argument("--omega-index", type=int, default=0)
    v.add_argument("--batch", help="verify every .obj in this directory")
    v.add_argument("--out", help="write the JSON report here instead of stdout")
    v.set_defaults(func=cmd_verify)

    q = sub.add_parser("quartic", help="texture a genus-0 mesh by a rational quartic differential")
    q.add_argument("mesh")
    q.add_argument("--singular", help="JSON with zeros and poles")
    q.add_argument("--checker-scale", type=float, default=8.0)
    q.add_argument("--out", help="output OBJ (default: <mesh>_uv.obj)")
    q.set_defaults(func=cmd_quartic)

    r = sub.add_parser("report", help="topology and valence summary")
    r.add_argument("mesh")
    r.add_argument("--out")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    level = os.environ.get("ABELQUAD_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    return ns.func(ns)


if __name__ == "__main__":
    sys.exit(main())
