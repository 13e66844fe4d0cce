#
# For licensing see accompanying LICENSE.md file.
#

import numpy as np
from beartype.typing import Tuple
from jaxtyping import Complex, Float, Int

# array_model type hints
ElementOffsetsType = Float[np.ndarray, "num_elements"]
SteeringEntriesType = Complex[np.ndarray, "num_subcarriers_x_num_elements"]
SteeringMatrixType = Complex[np.ndarray, "num_subcarriers_x_num_elements num_atoms"]
SnapshotDataType = Complex[np.ndarray, "num_subcarriers_x_num_elements num_symbols"]
PilotSymbolsType = Complex[np.ndarray, "num_targets num_symbols"]

# dictionary / recovery type hints
DictionaryMatrixType = Complex[np.ndarray, "num_subcarriers_x_num_elements num_atoms"]
SupportType = Int[np.ndarray, "sparsity"]
CoefficientsType = Complex[np.ndarray, "sparsity num_symbols"]
ResidualNormsType = Float[np.ndarray, "sparsity"]

# subspace type hints
CovarianceType = Complex[np.ndarray, "dim dim"]
SubspaceBasisType = Complex[np.ndarray, "dim rank"]
EigenvaluesType = Float[np.ndarray, "rank"]
SpectrumValuesType = Float[np.ndarray, "num_theta num_range"]

# boundaries type hints
ScanGridType = Float[np.ndarray, "scan_points"]

# (r_dirichlet, r_fresnel)
SufficientBoundsType = Tuple[float, float]
