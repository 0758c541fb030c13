"""quadsample: exact sampling of real zero sets of p composed with a
quadratic map, via univariate representations with Thom encodings."""

__version__ = "0.1.0"
