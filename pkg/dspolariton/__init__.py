from dspolariton.ds_core import *  # noqa: F401, F403
from dspolariton.equilibrium import *  # noqa: F401, F403
from dspolariton.dynamics import *  # noqa: F401, F403
from dspolariton.steady_state import *  # noqa: F401, F403
from dspolariton.scans import *  # noqa: F401, F403
from dspolariton.runner import *  # noqa: F401, F403
