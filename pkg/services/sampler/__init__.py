"""
采样服务
"""
from services.sampler.chains import run_chains
from services.sampler.mala import MALAChain, log_density_and_grad, sample_mala
from services.sampler.tridiagonal import sample_tridiagonal, tridiagonal_matrix

__all__ = [
    "MALAChain",
    "log_density_and_grad",
    "run_chains",
    "sample_mala",
    "sample_tridiagonal",
    "tridiagonal_matrix",
]
