"""Monte-Carlo simulator for interference coordination and energy saving in heterogeneous cellular networks."""

__version__ = "0.1.0"
