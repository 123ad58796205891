"""Mirror-game motion toolkit.

Models a human player's individual motor signature from recorded 1-D
motion, drives virtual players that track a partner while keeping that
signature, trains a tabular Q-learning cyber player from virtual-player
sessions, and measures how similar and how coordinated any two players
are. A small WebSocket service lets a human play against the models
live.
"""

__version__ = "0.1.0"

from .hkb import HkbParams, HkbState, hkb_accel, hkb_step
from .controller import VtConfig, choose_control, cost_J
from .qlearning import ActionSet, AgentConfig, CyberPlayer, QTable, StateGrid
from .signature import (
    MarkovChainModel,
    MotorSignatureGenerator,
    load_model,
    save_model,
    synthesize,
    train_signature_model,
)
from .spectral import FrameSpec, hamming_window, istft_ola, stft
from .trajectory import Trajectory, load_csv, resample, save_csv
from .virtual_trainer import VirtualTrainer
from .vq import Codebook, build_codebook, dequantize, quantize

__all__ = [
    "__version__",
    "HkbParams",
    "HkbState",
    "hkb_accel",
    "hkb_step",
    "VtConfig",
    "choose_control",
    "cost_J",
    "ActionSet",
    "AgentConfig",
    "CyberPlayer",
    "QTable",
    "StateGrid",
    "MarkovChainModel",
    "MotorSignatureGenerator",
    "load_model",
    "save_model",
    "synthesize",
    "train_signature_model",
    "FrameSpec",
    "hamming_window",
    "istft_ola",
    "stft",
    "Trajectory",
    "load_csv",
    "resample",
    "save_csv",
    "VirtualTrainer",
    "Codebook",
    "build_codebook",
    "dequantize",
    "quantize",
]
