"""Constants for the trashnet transfer-learning toolkit."""

DOMAIN = "trashnet_transfer"

# Configuration keys
CONF_PRESET = "preset"
CONF_CUT_INDEX = "cut_index"
CONF_FREEZE_PREFIX = "freeze_prefix"
CONF_PRETRAIN_EPOCHS = "pretrain_epochs"
CONF_FINETUNE_EPOCHS = "finetune_epochs"
CONF_LEARNING_RATE = "learning_rate"
CONF_BATCH_SIZE = "batch_size"
CONF_SEED = "seed"
CONF_SPLIT_SEED = "split_seed"
CONF_SOFTMAX_LR = "softmax_learning_rate"
CONF_SOFTMAX_EPOCHS = "softmax_epochs"
CONF_SVM_C = "svm_c"
CONF_SVM_TOL = "svm_tolerance"
CONF_SVM_MAX_PASSES = "svm_max_passes"
CONF_SOURCE = "source"
CONF_TARGET = "target"
CONF_WEIGHTS = "weights"
CONF_OUT = "out"
CONF_MODEL_OUT = "model_out"
CONF_RANDOM_INIT = "random_init"
CONF_IMAGE_SIZE = "image_size"
CONF_PER_CLASS = "per_class"
CONF_NOISE = "noise_level"
CONF_SOURCE_SEED = "source_seed"
CONF_SOURCE_NOISE = "source_noise_level"
CONF_DATA_SEED = "data_seed"

# Classifier head names
HEAD_SOFTMAX = "softmax"
HEAD_SVM = "svm"
HEADS = (HEAD_SOFTMAX, HEAD_SVM)

# Default class names, in the order the synthetic patterns are assigned
DEFAULT_CLASS_NAMES = ("glass", "paper", "cardboard", "plastic", "metal", "trash")

# Default values
DEFAULT_PRESET = "alexnet-mini"
DEFAULT_FREEZE_PREFIX = 0
DEFAULT_PRETRAIN_EPOCHS = 10
DEFAULT_FINETUNE_EPOCHS = 50
DEFAULT_LEARNING_RATE = 0.01
DEFAULT_BATCH_SIZE = 16
DEFAULT_SEED = 7
DEFAULT_SPLIT_SEED = 7
DEFAULT_SOFTMAX_LR = 0.1
DEFAULT_SOFTMAX_EPOCHS = 200
DEFAULT_SVM_C = 10.0
DEFAULT_SVM_TOL = 1e-3
DEFAULT_IMAGE_SIZE = 64
DEFAULT_PER_CLASS = 50
DEFAULT_NOISE = 0.1
DEFAULT_SOURCE_SEED = 1001  # Source data must differ from the target data
DEFAULT_SOURCE_NOISE = 0.15
DEFAULT_DATA_SEED = 7
DEFAULT_REPORT_PATH = "report.json"

# Tensor container framing
CONTAINER_MAGIC = b"RNFW"
CONTAINER_VERSION = 1
KIND_WEIGHTS = "weights"
KIND_FEATURES = "features"
KIND_HEAD = "head"
KIND_DATASET = "dataset"
KIND_MODEL = "pipeline-model"

# CLI exit codes
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3
