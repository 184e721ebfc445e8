"""presstwin: a digital twin for chamber filter presses.

Trains neural regressors to predict pressure and flow-rate trajectories
from experiment configuration, scores predictions against confidence-banded
measurements, ingests live sensor streams into a two-table store, and
closes the retraining feedback loop. A synthetic press simulator provides
the measurement data.
"""

__version__ = "0.1.0"
