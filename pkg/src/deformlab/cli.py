"""Batch command line: generate meshes, deform, evaluate, benchmark, serve.

Numerics modules are imported lazily inside the commands so the thread cap
below lands in the environment before any BLAS pool spins up.
"""

from __future__ import annotations

import json
import os
import sys

import click

# DEFORMLAB_THREADS caps the linear-algebra pools; must be exported before
# numpy first loads in this process.
_cap = os.environ.get("DEFORMLAB_THREADS")
if _cap:
    for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS",
                 "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(_var, _cap)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONSTRAINT = 3
EXIT_NUMERICAL = 4


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_mesh(path):
    from deformlab.mesh import MeshError, load_obj
    try:
        with open(path, "rb") as fh:
            return load_obj(fh.read())
    except OSError as exc:
        _fail(EXIT_USAGE, f"cannot read {path}: {exc}")
    except MeshError as exc:
        _fail(EXIT_USAGE, f"bad mesh {path}: {exc}")


def _load_constraints(path, mesh):
    from deformlab.solver import Constraints
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        _fail(EXIT_USAGE, f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        _fail(EXIT_USAGE, f"bad constraint file {path}: {exc}")
    try:
        constraints = Constraints.from_file_dict(doc)
        constraints.check_range(mesh)
    except (ValueError, KeyError, TypeError) as exc:
        _fail(EXIT_CONSTRAINT, f"bad constraints: {exc}")
    return constraints


@click.group()
def main():
    """Surface deformation toolkit."""


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------

@main.command()
@click.argument("shape",
                type=click.Choice(["grid", "fold", "cylinder", "icosphere",
                                   "bar"]))
@click.option("--n", type=int, default=10, show_default=True,
              help="Grid resolution for grid/fold/cylinder.")
@click.option("--width", type=float, default=1.0, show_default=True,
              help="Sheet width for grid/fold/cylinder.")
@click.option("--angle", type=float, default=3.141592653589793,
              show_default=True, help="Fold angle in radians.")
@click.option("--sub", type=int, default=2, show_default=True,
              help="Icosphere subdivision level.")
@click.option("--radius", type=float, default=1.0, show_default=True,
              help="Icosphere radius.")
@click.option("--nx", type=int, default=4, show_default=True)
@click.option("--ny", type=int, default=2, show_default=True)
@click.option("--nz", type=int, default=2, show_default=True)
@click.option("--dims", type=str, default="1,1,1", show_default=True,
              help="Bar extents as sx,sy,sz.")
@click.option("-o", "--out", type=click.Path(dir_okay=False), required=True)
@click.option("--deformed", type=click.Path(dir_okay=False), default=None,
              help="Also write the deformed state (fold/cylinder only).")
def generate(shape, n, width, angle, sub, radius, nx, ny, nz, dims, out,
             deformed):
    """Write a procedural mesh as OBJ."""
    from deformlab import mesh as m
    state = None
    try:
        if shape == "grid":
            built = m.generate_grid(n, width)
        elif shape == "fold":
            built = m.generate_grid(n, width)
            state = m.generate_fold(n, angle, width)
        elif shape == "cylinder":
            built = m.generate_grid(n, width)
            state = m.generate_cylinder_map(n, width)
        elif shape == "icosphere":
            built = m.generate_icosphere(sub, radius)
        else:
            try:
                sx, sy, sz = (float(part) for part in dims.split(","))
            except ValueError:
                _fail(EXIT_USAGE, f"bad --dims {dims!r}, expected sx,sy,sz")
            built = m.generate_bar(nx, ny, nz, (sx, sy, sz))
    except ValueError as exc:
        _fail(EXIT_USAGE, str(exc))
    if deformed is not None and state is None:
        _fail(EXIT_USAGE, "--deformed applies to fold and cylinder only")
    with open(out, "wb") as fh:
        fh.write(m.save_obj(built))
    if deformed is not None:
        with open(deformed, "wb") as fh:
            fh.write(m.save_obj(built, state))
    click.echo(f"wrote {out}: {built.n_vertices} vertices, "
               f"{built.n_faces} faces")


# ---------------------------------------------------------------------------
# deform
# ---------------------------------------------------------------------------

@main.command()
@click.argument("mesh_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("constraints_path",
                type=click.Path(exists=True, dir_okay=False))
@click.option("--lambda", "lam", type=float, default=0.5, show_default=True,
              help="Stretch/bend blend; 1 is pure stretch.")
@click.option("--iters", type=int, default=100, show_default=True)
@click.option("--tol", type=float, default=1e-6, show_default=True,
              help="Relative energy-drop stopping threshold.")
@click.option("--scale-normalize", is_flag=True,
              help="Solve on the diameter-normalized mesh.")
@click.option("-o", "--out", type=click.Path(dir_okay=False), required=True)
@click.option("--report", type=click.Path(dir_okay=False), default=None,
              help="Write per-iteration energies as JSON.")
def deform(mesh_path, constraints_path, lam, iters, tol, scale_normalize,
           out, report):
    """Solve the constrained deformation and write the result as OBJ."""
    from deformlab import solver
    from deformlab.mesh import save_obj
    from deformlab.operators import build_operators

    mesh = _load_mesh(mesh_path)
    constraints = _load_constraints(constraints_path, mesh)
    try:
        config = solver.SolverConfig(lam=lam, max_iterations=iters,
                                     rel_energy_tol=tol,
                                     scale_normalize=scale_normalize)
    except ValueError as exc:
        _fail(EXIT_USAGE, str(exc))
    ops = build_operators(mesh)
    try:
        x, run = solver.solve(mesh, ops, constraints, config)
    except solver.SingularSystemError as exc:
        _fail(EXIT_CONSTRAINT, str(exc))
    except solver.NumericalError as exc:
        _fail(EXIT_NUMERICAL, str(exc))
    with open(out, "wb") as fh:
        fh.write(save_obj(mesh, x))
    if report is not None:
        doc = {
            "iterations": run.iterations,
            "converged": run.converged,
            "energies": [e.as_dict() for e in run.energies],
            "warnings": run.warnings,
        }
        with open(report, "w") as fh:
            json.dump(doc, fh, indent=2)
    final = run.energies[-1]
    click.echo(f"converged={run.converged} iterations={run.iterations} "
               f"energy={final.total:.6g}")


# ---------------------------------------------------------------------------
# energy
# ---------------------------------------------------------------------------

@main.command()
@click.argument("mesh_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("deformed_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--which",
              type=click.Choice(["stretch", "spoke", "spoke-rim", "bending",
                                 "hybrid"]),
              default="hybrid", show_default=True)
@click.option("--lambda", "lam", type=float, default=0.5, show_default=True)
def energy(mesh_path, deformed_path, which, lam):
    """Evaluate one energy of a deformed state against its rest mesh."""
    from deformlab.mesh import check_state
    from deformlab.operators import build_operators
    from deformlab.solver import evaluate_energy

    mesh = _load_mesh(mesh_path)
    deformed = _load_mesh(deformed_path)
    if deformed.n_vertices != mesh.n_vertices:
        _fail(EXIT_USAGE, "deformed mesh has a different vertex count")
    state = check_state(mesh, deformed.vertices)
    try:
        value = evaluate_energy(mesh, build_operators(mesh), state, which,
                                lam)
    except ValueError as exc:
        _fail(EXIT_USAGE, str(exc))
    total = value.total if hasattr(value, "total") else value
    click.echo(f"{total:.6g}")


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

@main.command()
@click.argument("case", type=click.Choice(["fold", "cylinder"]))
@click.option("--full", is_flag=True,
              help="Include the 320 and 640 levels (minutes-scale).")
@click.option("--markdown", "as_markdown", is_flag=True,
              help="Emit a markdown table instead of CSV.")
@click.option("-o", "--out", type=click.Path(dir_okay=False), default=None,
              help="Write the table here instead of stdout.")
def bench(case, full, as_markdown, out):
    """Run a refinement table and its scaling-ratio checks."""
    from deformlab import bench as b

    levels = b.FULL_LEVELS if full else b.DEFAULT_LEVELS
    rows = b.run_case(case, levels)
    checks = b.checks_for(case, rows)
    table = b.rows_to_markdown(rows) if as_markdown else b.rows_to_csv(rows)
    if out is None:
        click.echo(table, nl=False)
    else:
        with open(out, "w") as fh:
            fh.write(table)
    click.echo(b.render_report(case, rows, checks), nl=False)
    if not all(c.ok for c in checks):
        sys.exit(1)


# ---------------------------------------------------------------------------
# serve
# ---------------------------------------------------------------------------

@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=7878, show_default=True)
def serve(host, port):
    """Run the interactive session service."""
    import uvicorn

    from deformlab.service.app import create_app

    uvicorn.run(create_app(), host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
