"""Online convex optimization: learners, bandits, games, applications and an experiment harness."""

from . import (applications, errors, experts_bandits, games_lp, geometry, harness, linalg_core,
               losses, offline_opt, online_learners)

__all__ = ["applications", "errors", "experts_bandits", "games_lp", "geometry", "harness",
           "linalg_core", "losses", "offline_opt", "online_learners"]
__version__ = "0.1.0"
