"""Dataset access and file I/O."""
