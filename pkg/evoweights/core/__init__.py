"""
Numerical core: population model, strategy kernels and simulation engine
"""
