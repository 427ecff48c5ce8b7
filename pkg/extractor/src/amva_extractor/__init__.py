"""Model bridge for the activation-map analytics toolkit.

Runs an embedding CNN over manifest images and exports everything the
analytics package ingests: deepest-conv channel activations and final
saliency maps as AMVT tensors, per-method quality CSVs, and genuine/impostor
pair CSVs. Also serves as the evaluator subprocess for the analytics
pipeline's activation-mapping stage.
"""

from .evaluate import evaluator_loop
from .export import SCORERS, export_activations, export_scores, read_image_list
from .model import ToyFaceNet, cosine, embed, embed_and_activations, load_image, load_model, saliency_map

__version__ = "0.1.0"
