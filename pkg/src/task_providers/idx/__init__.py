from .idx_provider import Digits8Provider, ensure_digits8, load_idx, read_idx, write_idx

__all__ = ['Digits8Provider', 'ensure_digits8', 'load_idx', 'read_idx', 'write_idx']
