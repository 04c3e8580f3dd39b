from .network import NetworkSpec, build_network, load_checkpoint, save_checkpoint
from .opcount import inner_ops_count
from .training import train

__all__ = ["NetworkSpec", "build_network", "inner_ops_count", "load_checkpoint", "save_checkpoint", "train"]
