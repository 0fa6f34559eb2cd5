"""Matplotlib figure rendering for the CLI report paths.

Every renderer takes the already-computed data and a target path; figures
land next to the delimited output so a report directory is self-contained.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def plot_density(xs, rho_vals, pdf_vals, theta, path):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(xs, rho_vals, label="rho")
    ax.plot(xs, pdf_vals, label="density")
    ax.set_xlabel("x")
    ax.set_yscale("log")
    ax.set_title(f"generalized Dickman density, theta = {theta:g}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_cdf(xs, cdf_vals, theta, path):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(xs, cdf_vals)
    ax.set_xlabel("x")
    ax.set_ylabel("F(x)")
    ax.set_title(f"Dickman CDF, theta = {theta:g}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_lattice(dist, path, max_atoms=4000):
    xs = dist.support
    pmf = dist.pmf
    if len(xs) > max_atoms:
        stride = len(xs) // max_atoms + 1
        xs, pmf = xs[::stride], pmf[::stride]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.vlines(xs, 0.0, pmf, lw=0.8)
    ax.set_xlabel("x")
    ax.set_ylabel("pmf")
    ax.set_title(f"exact lattice law, scale 1/{dist.scale_n}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_stein(xs, g_vals, f_vals, f1_vals, f2_vals, residuals, theta, a, path):
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 7), sharex=True)
    ax1.plot(xs, g_vals, label="g")
    ax1.plot(xs, f_vals, label="f")
    ax1.plot(xs, f1_vals, "--", label="f1")
    ax1.plot(xs, f2_vals, "--", label="f2")
    ax1.axvline(a, color="grey", lw=0.6)
    ax1.set_title(f"fixed-point series solution, theta = {theta:g}, a = {a:g}")
    ax1.legend(ncol=2)
    ax2.semilogy(xs, np.abs(residuals) + 1e-18, ".", ms=3)
    ax2.set_xlabel("x")
    ax2.set_ylabel("|residual|")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_rate_scan(result, path):
    n = np.asarray(result.n_values, dtype=float)
    d = np.asarray(result.d_k_values, dtype=float)
    comp = np.asarray(result.compensated, dtype=float)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4.5))
    ax1.loglog(n, d, "o-", label="exact d_K")
    ref = d[0] * (n / n[0]) ** result.fitted_exponent
    ax1.loglog(n, ref, "--",
               label=f"slope {result.fitted_exponent:.3f} +- {result.fitted_stderr:.3f}")
    ax1.set_xlabel("n")
    ax1.set_ylabel("d_K")
    ax1.legend()
    ax2.semilogx(n, comp, "s-")
    ax2.set_xlabel("n")
    ax2.set_ylabel(f"compensated ({result.regime_expected})")
    fig.suptitle(f"{result.family}, theta={result.theta:g}, beta={result.beta:g}, "
                 f"l={result.l}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_sandwich(record, path):
    fig, ax = plt.subplots(figsize=(5.5, 4))
    labels = ["lower", "exact", "upper"]
    vals = [record["lower"], record["exact"], record["upper"]]
    ax.bar(labels, vals, color=["#77b", "#373", "#b77"])
    ax.set_yscale("log")
    ax.set_title(f"d_K sandwich, theta={record['theta']:g}, n={record['n']}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
