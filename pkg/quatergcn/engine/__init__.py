"""Quaternion GCN layers and training."""
