"""Sample-dependent learnable kernels for kernel-subspace domain adaptation."""
from .config import ExperimentConfig
from .errors import SdlkError
from .kernels import PDQK, KernelSpec, beta_features, eval_kernel, gram, pdqk_eval, pdqk_gram, psd_check
from .learner import LearnedKernel, LearnerInputs, learn
from .mmd import gamma_vector, joint_gram, mmd_decomposed, mmd_value
from .pipeline import generate_synthetic, knn_predict, load_csv, run_experiment
from .subspace import iglda_fit, project, sstca_fit, tca_fit
from .trust_region import TrProblem, TrSettings, tr_minimize
from .types import AnchorSet, DataMatrix, DomainPair, LabeledDataset, build_anchors, validate_domain_pair

__version__ = "0.1.0"
