"""multiseq: multi-encoder attentional translation, edit-script post-editing,
German pre/post-processing, bitoken class language models and MT metrics."""

__version__ = "0.1.0"

__all__ = ["__version__"]
