"""Mean packet delay in small-cell networks under random and round-robin scheduling.

Subpackages and modules:

``geometry``  Poisson access points and their UEs on a torus
``channel``   Rayleigh-faded SIR success probabilities
``queuesim``  slotted simulation of the coupled per-UE queues
``markov``    round-robin queue as a truncated Markov chain
``analytic``  closed-form delays and the service-rate meta distribution
``cli``       configuration, experiments and the command line
"""

from . import analytic, channel, geometry, markov, queuesim

__version__ = "0.1.0"

__all__ = ["analytic", "channel", "geometry", "markov", "queuesim", "__version__"]
