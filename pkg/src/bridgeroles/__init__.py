"""Bridge disaster-preparedness role classification from open geodata.

The package builds a heterogeneous road-bridge-building graph, learns latent
bridge embeddings with a relational graph variational autoencoder, derives
metapath-based role profiles, classifies each bridge into a preparedness
category with a confidence score, and exposes the results through a pipeline,
a command line, and a small HTTP service.
"""

__version__ = "0.1.0"
