"""Configurations shared by the test modules."""
import math

from entspec.lattice import PacketSpec, SimConfig
from entspec.potential import PotentialSpec

N_C = 100 / (3 * math.pi)  # sigma / n_c = 0.15 with sigma = 5 / pi
SIGMA = 5 / math.pi  # delta_x = 0.05 L
W_2D = 1 / (20 * math.sqrt(2))


def head_on(n_max=101, potential=None, **kw) -> SimConfig:
    """Symmetric 1D collision: packet 1 at -L/4 moving right, packet 2 mirrored."""
    L = kw.pop("L", 1.0)
    return SimConfig(
        d=1, L=L, n_max=n_max, potential=potential or PotentialSpec(),
        packet1=PacketSpec((N_C,), (-L / 4,), SIGMA),
        packet2=PacketSpec((-N_C,), (L / 4,), SIGMA),
        **kw,
    )


def small(n_max=8, A=30.0, d=1, kind="delta", **kw) -> SimConfig:
    """Tiny grid for oracle comparisons; packets are narrow so the tail fits."""
    sigma = kw.pop("sigma", 0.6)
    nc = kw.pop("nc", 2.0)
    width = kw.pop("w", 0.05)
    pot = PotentialSpec(kind, A, width if kind == "gaussian" else 0.0)
    zero = (0.0,) * (d - 1)
    return SimConfig(
        d=d, n_max=n_max, potential=pot,
        packet1=PacketSpec((nc,) + zero, (-0.25,) + zero, sigma),
        packet2=PacketSpec((-nc,) + zero, (0.25,) + zero, sigma),
        K=min(kw.pop("K", 6), (2 * n_max + 1) ** d),
        **kw,
    )
