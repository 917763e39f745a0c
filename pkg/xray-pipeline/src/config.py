from pydantic_settings import BaseSettings, SettingsConfigDict
from dotenv import load_dotenv

load_dotenv()


class Settings(BaseSettings):
    app_name: str = "XRayNet"
    debug: bool = False

    log_dir: str = "logs"
    log_level: str = "INFO"
    console_log_level: str = "WARNING"
    log_to_file: bool = True

    # Depth of the bounded batch queue between decode and training
    prefetch_batches: int = 2
    decode_workers: int = 4
    default_seed: int = 0

    model_config = SettingsConfigDict(
        env_prefix="XRAYNET_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )


settings = Settings()

## Canonical class order; fixes one-hot indices and confusion-matrix axes
CLASS_VOCABULARY = ("covid", "normal", "pneumonia")

## Default network ladder
DEFAULT_INPUT_SIZE = 400
DEFAULT_INPUT_CHANNELS = 1
DEFAULT_BASE_CHANNELS = 32
DEFAULT_DEPTH = 4
DEFAULT_BATCH_SIZE = 4
DEFAULT_TRAIN_FRACTION = 0.8

## Adam defaults
DEFAULT_LEARNING_RATE = 0.001
DEFAULT_BETA1 = 0.9
DEFAULT_BETA2 = 0.999
DEFAULT_EPSILON = 1e-8

## Published reference runs: architecture, class count and schedule
REFERENCE_RUNS = {
    "unet-binary": {"arch": "unet", "num_classes": 2, "epochs": 7, "batch_size": 4},
    "wnet-binary": {"arch": "wnet", "num_classes": 2, "epochs": 10, "batch_size": 4},
    "unet-ternary": {"arch": "unet", "num_classes": 3, "epochs": 13, "batch_size": 4},
    "wnet-ternary": {"arch": "wnet", "num_classes": 3, "epochs": 12, "batch_size": 4},
}

## Test-set confusion matrices reported for the reference runs (rows actual, columns predicted)
REFERENCE_CONFUSION = {
    "unet-binary": [[38, 1], [0, 81]],
    "wnet-binary": [[39, 0], [1, 80]],
    "unet-ternary": [[40, 0, 0], [0, 77, 3], [1, 2, 77]],
    "wnet-ternary": [[40, 0, 0], [0, 78, 2], [0, 3, 77]],
}
