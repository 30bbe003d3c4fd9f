from .synthetic_provider import BlobsProvider, SpiralsProvider, make_spirals

__all__ = ['BlobsProvider', 'SpiralsProvider', 'make_spirals']
