"""Virtual player: oscillator body plus receding-horizon controller.

Each game tick the virtual player re-plans several times against the
partner's last known position while tracking a private reference
velocity stream drawn from its motor signature model. The signature
stream is what makes two virtual players with the same controller feel
like different people.
"""

from __future__ import annotations

import logging

import numpy as np

from . import _kernels
from .controller import N_GRID, TOL_FRAC, VtConfig
from .errors import DegenerateInputError
from .signature import MarkovChainModel, synthesize
from .trajectory import resample
from .validation import check_in_range, spawn_seed

logger = logging.getLogger(__name__)

# seconds of reference velocity synthesized per signature draw
_CHUNK_S = 6.0


class VirtualTrainer:
    """A virtual mirror-game player.

    Parameters
    ----------
    cfg : VtConfig
        Controller and oscillator configuration.
    signature : MarkovChainModel
        Motor signature model that supplies the reference velocity
        stream.
    seed : int
        Base seed for the signature stream; a given (seed, reset count)
        pair always produces the same behavior.
    x0, v0 : float
        Initial body state (position on the [0, 1] play axis).
    """

    def __init__(self, cfg: VtConfig, signature: MarkovChainModel, seed: int = 0,
                 x0: float = 0.5, v0: float = 0.0):
        self.cfg = cfg
        self.signature = signature
        self.base_seed = int(seed)
        self._x0 = check_in_range(x0, "x0", 0.0, 1.0)
        self._v0 = float(v0)
        self._sub_rate = 1.0 / cfg.dt_sub
        self.reset()

    @property
    def position(self) -> float:
        return self._x

    @property
    def velocity(self) -> float:
        return self._v

    def reset(self, seed: int | None = None) -> None:
        """Return to the initial state and restart the signature stream."""
        if seed is not None:
            self.base_seed = int(seed)
        self._x = self._x0
        self._v = self._v0
        self._sigma = np.empty(0)
        self._cursor = 0
        self._chunk_idx = 0
        self.incidents = 0
        self.last_u = 0.0

    def _refill(self, need: int) -> None:
        while self._sigma.size - self._cursor < need:
            chunk_seed = spawn_seed(self.base_seed, self._chunk_idx)
            self._chunk_idx += 1
            tr = synthesize(self.signature, _CHUNK_S, chunk_seed)
            if tr.rate_hz != self._sub_rate:
                tr = resample(tr, self._sub_rate)
            vel = tr.velocity()
            keep = self._sigma[self._cursor :]
            self._sigma = np.concatenate([keep, vel])
            self._cursor = 0

    def tick(self, partner_pos: float, partner_vel: float = 0.0, t: float = 0.0) -> tuple[float, float]:
        """Advance one game tick toward the partner's last known position.

        partner_vel and t are accepted for player-protocol compatibility
        but the plan only uses the partner position and the private
        signature stream. Returns the new (position, velocity), kept on
        the [0, 1] play axis.

        If integration ever produces a non-finite state the body is
        re-centered on the partner with zero velocity and the incident
        is counted and logged rather than raised: a live session must
        survive a bad plan.
        """
        if not np.isfinite(partner_pos):
            raise DegenerateInputError(f"partner position must be finite, got {partner_pos}")
        cfg = self.cfg
        n_tick_sub = cfg.substeps_per_tick
        need = n_tick_sub + cfg.n_substeps + 1
        self._refill(need)
        sigma = self._sigma[self._cursor : self._cursor + need]
        x, v, u, ok = _kernels.advance_tick(
            self._x, self._v,
            cfg.hkb.alpha, cfg.hkb.beta, cfg.hkb.gamma, cfg.hkb.omega,
            cfg.dt_sub, cfg.n_substeps, n_tick_sub,
            float(partner_pos), sigma,
            cfg.theta_p, 1.0 - cfg.theta_p, cfg.eta,
            cfg.u_max, N_GRID, TOL_FRAC,
        )
        self._cursor += n_tick_sub
        if not ok:
            self.incidents += 1
            logger.warning(
                "virtual player state went non-finite (incident %d); re-centering",
                self.incidents,
            )
            x = min(max(float(partner_pos), 0.0), 1.0)
            v = 0.0
        self._x, self._v, self.last_u = float(x), float(v), float(u)
        return self._x, self._v
