from .grid import Grid0D, Grid1D, Grid2D
from .integrate import (DEFAULT_DT, DEFAULT_GRID, BlowUpError, Etdrk4,
                        integrate, integrate_ode, rk4_step)
from .params import (FIELD_COUNT, SYSTEMS, VARIANTS, GrayScottParams,
                     Ks2dParams, KolmogorovParams, PendulumParams, RdeParams,
                     SystemId, default_params, params_as_dict,
                     params_with_overrides)
from .systems import (burgers_upwind, default_ic, grayscott_lprime,
                      kolmogorov_lprime, kolmogorov_velocity, ks2d_lprime,
                      pendulum_energy, rde_lprime, rhs_grayscott,
                      rhs_kolmogorov, rhs_ks2d, rhs_pendulum, rhs_rde)
from .trajectory import Trajectory, read_dasf, write_dasf

__all__ = [name for name in dir() if not name.startswith("_")]
