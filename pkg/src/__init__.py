# QPSK CVQKD key-rate toolkit
__version__ = "0.1.0"
