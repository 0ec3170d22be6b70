"""drntool - diffusion-induced Ramsey narrowing of EIT lineshapes in buffer-gas cells."""

__version__ = "0.1.0"
__author__ = "drntool contributors"
