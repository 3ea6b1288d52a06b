from . import layers
from .checkpoint import load_model, read_tensors, save_model, write_tensors
from .layers import (ScaledStepOptimizer, adapter_forward, adapter_is_identity,
                     decoder_forward, encoder_forward, init_params)
from .model import (AssimilateConfig, ShredModel, TrainConfig,
                    TrainingDiverged, assimilate, backprop_loss, train_sim)

__all__ = [name for name in dir() if not name.startswith("_")]
