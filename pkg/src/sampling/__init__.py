# Sampling kernels package
