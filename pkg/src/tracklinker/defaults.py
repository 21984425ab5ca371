"""Default operating points shared across modules and the CLI."""

WINDOW_LEN = 30

# Candidate gating: frame gap in (0, MAX_GAP], junction centers within
# SPATIAL_RADIUS pixels.
MAX_GAP = 10
SPATIAL_RADIUS = 90.0
SCORE_THRESHOLD = 0.5

# Training recipe.
LEARNING_RATE = 0.001
EPOCHS = 60
BATCH_SIZE = 256
LABEL_SMOOTHING = 0.1
NEG_POS_RATIO = 3.0
IMAGE_SIZE = (1920, 1080)

# Cross-camera association threshold per dataset profile.
PROFILE_ALPHA = {"mmct": 0.5, "dhu": 0.8}
MEAN_EMBED_FRAMES = 30

# Frame stride when pooling reference statistics for color transfer.
REFERENCE_STRIDE = 30
