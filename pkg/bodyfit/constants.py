import math

PROJECT_NAME = "bodyfit"

# sensor working range (m)
SENSOR_MIN_DEPTH = 0.8
SENSOR_MAX_DEPTH = 4.0
DEPTH_UNIT = 0.001

SENSOR_WIDTH = 640
SENSOR_HEIGHT = 480
SENSOR_HORIZONTAL_FOV = 57.0
SENSOR_VERTICAL_FOV = 43.0
SENSOR_FOCAL = (SENSOR_WIDTH / 2) / math.tan(math.radians(SENSOR_HORIZONTAL_FOV / 2))

CAMERA_DISTANCE = 2.0
MIN_SUBJECT_AREA = 2000
PREVIEW_LEVELS = 255

TOLERANCE_EPS = 0.1
SECTION_RADIUS = 0.45
MIN_SECTION_POINTS = 6

NORMAL_RADIUS = 0.025
NORMAL_MAX_NEIGHBORS = 32
NORMAL_VOXEL = 0.005
DESCRIPTOR_VOXEL = 0.02
FPFH_RADIUS = 0.20
FPFH_BINS = 11
FPFH_MIN_NEIGHBORS = 10
GEODESIC_K = 8
GEODESIC_MAX_EDGE = 0.04
GEODESIC_SNAP = 0.05
RATIO_SNAP = 0.10

FEATURE_DIM = 4 + 2 + 15 * 3 * FPFH_BINS
FEATURE_MAGIC = b"IMFV"
FEATURE_VERSION = 1
INDEX_MAGIC = b"IM2F"
INDEX_VERSION = 1

ICP_MAX_ITERATIONS = 30
ICP_CONVERGENCE_DELTA = 1e-4
ICP_REJECT_FACTOR = 3.0
ICP_TARGET_SAMPLES = 50_000

# default sampler spread multipliers (height, weight), see demographics
HEIGHT_SD_SCALE = 23.3
WEIGHT_SD_SCALE = 15.0

HEIGHT_LIMITS = (1.3, 2.2)
WEIGHT_LIMITS = (35.0, 180.0)

MODEL_FILE = "model.obj"
SKELETON_FILE = "skeleton.json"
RIG_FILE = "rig.json"
PARAMS_FILE = "params.json"
TRUTH_FILE = "truth.json"
FEATURES_FILE = "features.imfv"
MODEL_DIR_FORMAT = "model_{:06d}"
