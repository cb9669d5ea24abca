"""Low-distortion embeddings of finite metrics into the line and the plane."""
