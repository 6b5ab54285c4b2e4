"""Constants for twophase."""

GOLDEN_RATIO_SHORT = (3.0 - 5.0**0.5) / 2.0
"""Short golden-section fraction, 0.381966..."""

GOLDEN_RATIO_LONG = 1.0 - GOLDEN_RATIO_SHORT
"""Long golden-section fraction, 0.618033..."""

DEFAULT_GNFACT = 0.9
"""Fraction of the gradient-norm peak below which Adam hands over to CG."""

DEFAULT_SMOOTHING_WINDOW = 5
"""Trailing window, in epochs, for smoothing the gradient-norm signal."""

DEFAULT_BATCH_SIZE = 512
"""Adam mini-batch size."""

DEFAULT_ADAM_FRACTION = 0.3
"""Share of the epoch budget given to Adam when the detector is disabled."""

ZERO_GRADIENT_FACTOR = 1e-10
"""Gradient norms below this times max(1, initial norm) count as zero."""

SHRINK_PROBES = 10
"""Number of halved trial steps before bracketing gives up."""

STALL_EPOCHS = 3
"""Consecutive failed line searches after which a CG run is flagged."""

TOY_UNITS = 100
"""Number of identical tanh units in the single-layer toy model."""

TOY_MARGIN_ARGUMENT = 3.0
"""Value of ``|p·x|`` treated as the saturated margin of the toy landscape."""

TWO_LAYER_C_SWEEP = (0.40, 0.45, 0.50, 0.55, 0.60)
"""Second-branch weights swept for the two-layer landscape."""

TWO_LAYER_X = 0.5
"""Default input of the two-layer landscape task."""

TWO_LAYER_R = 0.1
"""Default reference output of the two-layer landscape task."""

DEFAULT_MLP_DIMS = (784, 32, 10)
"""Layer widths of the default multilayer perceptron."""

MNIST_CLASSES = 10
"""Width of the one-hot MNIST targets."""

IDX_IMAGES_MAGIC = 0x00000803
"""Magic number of an IDX file holding unsigned-byte 3-D image arrays."""

IDX_LABELS_MAGIC = 0x00000801
"""Magic number of an IDX file holding unsigned-byte label vectors."""

PIXEL_SCALE = 255.0
"""Divisor mapping raw pixel bytes onto [0, 1]."""

EVALUATION_CHUNK = 1024
"""Examples per evaluation chunk; fixed so sums do not depend on threads."""

FINITE_DIFFERENCE_STEP = 1e-6
"""Step of the central finite-difference gradient audit."""

GRADCHECK_TOLERANCE = 1e-5
"""Largest relative gradient error accepted by the audit."""

FLOAT_DIGITS = 17
"""Significant digits used when writing floats to CSV."""

DIGEST_LENGTH = 16
"""Hex digits kept from the SHA-256 config digest."""

TRAJECTORY_STEP_CAP = 0.02
"""Largest descent-trajectory step as a fraction of the starting point."""

TRAJECTORY_MAX_HALVINGS = 60
"""Step halvings tried before a descent trajectory gives up."""
