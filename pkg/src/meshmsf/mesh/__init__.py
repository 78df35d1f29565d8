from .core import MeshConfig, MeshMachine, StepReport, SubmeshView, create_mesh, quadrant
from .hilbert import hilbert_point, hilbert_points, hilbert_rank, hilbert_ranks
from .records import NULL_WORD, RECORD_WORDS, Batch, Records
