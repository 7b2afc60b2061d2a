"""EEG motor-imagery intent decoding and brain-typing toolkit."""

from . import (data, fusion, gbt, nn, pipeline, server, similarity, spatial,
               temporal, typing_engine)

__all__ = ["data", "fusion", "gbt", "nn", "pipeline", "server", "similarity",
           "spatial", "temporal", "typing_engine"]

__version__ = "0.1.0"
