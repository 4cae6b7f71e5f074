# FILE: dualsim/view/plot.py
# One SVG per species: ODE and ABM mean overlaid, optional thin per-replication lines.
import io
import os

from ..utils.io import safe_write_text


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def species_figure(title, species, ode=None, ensemble=None, reps=10):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(8, 4.5))
    if ensemble is not None:
        for r in ensemble.replications[:reps]:
            ax.plot(r.times, r.series(species), color="0.75", linewidth=0.6)
    if ode is not None:
        ax.plot(ode.times, ode.series(species), label="ODE", linewidth=2.0)
    if ensemble is not None:
        ax.plot(ensemble.mean.times, ensemble.mean.series(species), label=f"ABM mean ({ensemble.n_reps})")
    ax.set_xlabel("Time (days)")
    ax.set_ylabel(f"{species} population")
    ax.set_title(f"{title}: {species}")
    ax.legend(loc="best")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    return fig


def write_plots(out_dir, title, ode=None, ensemble=None, reps=10):
    """Write <out_dir>/<species>.svg for every species; returns the paths."""
    plt = _pyplot()
    species = ode.species if ode is not None else ensemble.mean.species
    paths = []
    for s in species:
        fig = species_figure(title, s, ode, ensemble, reps)
        buf = io.StringIO()
        fig.savefig(buf, format="svg")
        plt.close(fig)
        paths.append(safe_write_text(buf.getvalue(), os.path.join(out_dir, f"{s}.svg")))
    return paths
