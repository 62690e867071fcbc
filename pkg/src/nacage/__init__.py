"""Non-Abelian flux caging on multi-component rhombic chains.

Core layers:

- :mod:`nacage.gauge` -- unitary link variables, interference matrices, nilpotency.
- :mod:`nacage.lattice` -- real-space/Bloch Hamiltonians, flat bands, compact states.
- :mod:`nacage.dynamics` -- caged quantum walks, cage extents, cage-table reconciliation.
- :mod:`nacage.cqed` -- frequency plans, parametric tones, modulated models, cross-talk audit.
- :mod:`nacage.driven` -- driven-dissipative steady states, trajectories, fidelities.
- :mod:`nacage.service` / :mod:`nacage.cli` -- FastAPI wrapper and its thin CLI client.
"""

__version__ = "0.1.0"
