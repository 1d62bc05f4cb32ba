"""Test package for QuaterGCN."""
