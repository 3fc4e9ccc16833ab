""" LCNN feature extractor and classifier head """

from .lcnn import LcnnModel, init_params, param_count
from .checkpoint import dump_arrays, load_arrays, save_checkpoint, load_checkpoint

__all__ = [
    'LcnnModel', 'init_params', 'param_count',
    'dump_arrays', 'load_arrays', 'save_checkpoint', 'load_checkpoint',
]
