from .embedding import conv4_output_shape, embed, init_embedding
from .params import EmbeddingParams, ParamGroup, SigmaNetParams, parameter_count
from .sigma import init_sigma_net, sigma, sigma_raw, zero_final_layer
