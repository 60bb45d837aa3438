import warnings
from .exceptions import TruncationWarning, NonConvergenceWarning
from .utils import set_tensor_type as _set_tensor_type  # Don't export this function

from . import exceptions
from . import utils
from . import grids
from . import operators
from . import problem
from . import transforms
from . import callbacks
from . import borel
from . import assembly
from . import asymptotics
from . import config
from . import pipeline

# Set default float type to 64 bits (complex tensors become complex128)
_set_tensor_type(float_bits=64)

# Truncation and convergence warnings are shown every time
warnings.simplefilter('always', TruncationWarning)
warnings.simplefilter('always', NonConvergenceWarning)
