#!/usr/bin/env python3
"""Plot the decay rate and the compensated mode drain from a fig2 run.

Usage: python scripts/plot_rate_curves.py run_fig2/rates.csv [out.png]
"""

import sys

import numpy as np


def main() -> int:
    if len(sys.argv) < 2:
        print(__doc__.strip(), file=sys.stderr)
        return 2
    try:
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib is required for plotting", file=sys.stderr)
        return 1
    data = np.genfromtxt(sys.argv[1], delimiter=",", names=True)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(data["t"], data["gamma"], "-", label="decay rate")
    ax.plot(data["t"], data["compensated"], "--", label="compensated mode drain")
    ax.axhline(0.0, color="gray", lw=0.5)
    ax.set_xlabel("time [1/rate unit]")
    ax.set_ylabel("rate [rate unit]")
    ax.legend()
    fig.tight_layout()
    out = sys.argv[2] if len(sys.argv) > 2 else "rate_curves.png"
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
